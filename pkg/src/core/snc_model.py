"""
Model charts - diagonal weights, snc polydisc charts and monomial sections
"""

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence, Tuple


Rational = Fraction


def as_fraction(value) -> Fraction:
    """
    Convert an int, Fraction, decimal string or "p/q" string to an exact rational

    Floats are rejected: weight coefficients must be exact.

    Args:
        value: Value to convert

    Returns:
        Exact rational
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("boolean is not a rational")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot convert {type(value).__name__} to an exact rational: {value!r}")


@dataclass(frozen=True)
class DiagonalWeight:
    """Weight Σ coeffs_j · log|z_j|² + shift"""

    coeffs: Tuple[Fraction, ...]
    shift: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(as_fraction(c) for c in self.coeffs))
        object.__setattr__(self, "shift", float(self.shift))

    @property
    def n(self) -> int:
        return len(self.coeffs)

    def __add__(self, other: "DiagonalWeight") -> "DiagonalWeight":
        if other.n != self.n:
            raise ValueError(f"dimension mismatch: {self.n} vs {other.n}")
        return DiagonalWeight(
            tuple(a + b for a, b in zip(self.coeffs, other.coeffs)), self.shift + other.shift
        )

    def scaled(self, m) -> "DiagonalWeight":
        """Return m · w for an exact rational m"""
        m = as_fraction(m)
        return DiagonalWeight(tuple(m * c for c in self.coeffs), float(m) * self.shift)


def eval_weight(w: DiagonalWeight, point: Sequence[float]) -> float:
    """
    Evaluate a diagonal weight at a point given by its moduli squared

    Args:
        w: Weight
        point: |z_j|² for every coordinate, in (0, 1]; zero is accepted

    Returns:
        Σ c_j log|z_j|² + shift; -inf (or +inf for a negative coefficient) on a zero modulus
    """
    if len(point) != w.n:
        raise ValueError(f"point has {len(point)} coordinates, weight has {w.n}")

    terms = []
    for c, x in zip(w.coeffs, point):
        if c == 0:
            continue
        if x <= 0.0:
            return -math.inf if c > 0 else math.inf
        terms.append(float(c) * math.log(x))
    terms.append(w.shift)
    return math.fsum(terms)


@dataclass(frozen=True)
class MonomialSection:
    """
    Section A · z^a · χ(|z|), χ a product of radial bumps

    χ_j ≡ 1 for |z_j| ≤ support_radius_j / 2 and χ_j ≡ 0 for |z_j| ≥ support_radius_j.
    """

    exponents: Tuple[int, ...]
    amplitude: float = 1.0
    support_radius: Tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "exponents", tuple(int(a) for a in self.exponents))
        object.__setattr__(self, "amplitude", float(self.amplitude))
        object.__setattr__(self, "support_radius", tuple(float(r) for r in self.support_radius))

    @property
    def n(self) -> int:
        return len(self.exponents)

    def scaled(self, s: float) -> "MonomialSection":
        return replace(self, amplitude=self.amplitude * s)


@dataclass(frozen=True)
class MultiMonomialSection:
    """Finite sum of monomial sections with distinct exponent vectors"""

    terms: Tuple[MonomialSection, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        seen = set()
        for term in self.terms:
            if term.exponents in seen:
                raise ValueError(f"duplicate exponent vector {term.exponents}")
            seen.add(term.exponents)

    def scaled(self, s: float) -> "MultiMonomialSection":
        return MultiMonomialSection(tuple(t.scaled(s) for t in self.terms))


@dataclass(frozen=True)
class SncChart:
    """
    Polydisc chart carrying φ_L, ψ, the pair m0 < m1 and optional sections

    Attributes:
        n: Dimension
        radii: Polydisc half-edges, each in (0, 1)
        phiL: Weight of the line bundle
        psi: Weight with sup ψ ≤ 0
        m0: Lower multiplier level
        m1: Jumping number above m0
        klt: Require φ_L coefficients < 1 on coordinates transverse to S
        sections: Sections carried by the chart file
        name: Label used in reports
    """

    n: int
    radii: Tuple[float, ...]
    phiL: DiagonalWeight
    psi: DiagonalWeight
    m0: Fraction
    m1: Fraction
    klt: bool = False
    sections: Tuple[MonomialSection, ...] = field(default=())
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "radii", tuple(float(r) for r in self.radii))
        object.__setattr__(self, "m0", as_fraction(self.m0))
        object.__setattr__(self, "m1", as_fraction(self.m1))
        object.__setattr__(self, "sections", tuple(self.sections))

    @property
    def ell(self) -> Tuple[Fraction, ...]:
        return self.phiL.coeffs

    @property
    def nu(self) -> Tuple[Fraction, ...]:
        return self.psi.coeffs

    def combined_weight(self, m) -> DiagonalWeight:
        """Return φ_L + m·ψ"""
        return self.phiL + self.psi.scaled(m)

    def with_psi_shift(self, shift: float) -> "SncChart":
        return replace(self, psi=DiagonalWeight(self.psi.coeffs, shift))

    def with_sections(self, sections: Iterable[MonomialSection]) -> "SncChart":
        return replace(self, sections=tuple(sections))

    def section(
        self, exponents: Sequence[int], amplitude: float = 1.0, support_radius=None
    ) -> MonomialSection:
        """Build a section supported on the whole chart unless told otherwise"""
        return MonomialSection(
            tuple(exponents), amplitude, tuple(support_radius or self.radii)
        )


def defects(chart: SncChart, exponents: Sequence[int], m=None) -> Tuple[Fraction, ...]:
    """
    Integrability defects d_j = a_j + 1 − ℓ_j − m·ν_j (m defaults to m1)

    |z^a|² e^{−φ_L−mψ} is locally integrable iff every defect is positive.
    """
    m = chart.m1 if m is None else as_fraction(m)
    return tuple(
        Fraction(a) + 1 - l - m * v for a, l, v in zip(exponents, chart.ell, chart.nu)
    )


def failing_coordinate(chart: SncChart, section: MonomialSection, m) -> Optional[int]:
    """Index of the first coordinate where the section leaves 𝓘(φ_L + mψ), or None"""
    for j, d in enumerate(defects(chart, section.exponents, m)):
        if d <= 0:
            return j
    return None


def section_in_ideal(chart: SncChart, section: MonomialSection, m) -> bool:
    """
    Membership of a monomial section in 𝓘(φ_L + m·ψ)

    Exact: a_j > ℓ_j + m·ν_j − 1 for every coordinate.
    """
    return failing_coordinate(chart, section, m) is None


def critical_coordinates(chart: SncChart) -> Tuple[int, ...]:
    """Coordinates j with ν_j > 0 and ℓ_j + m1·ν_j an integer ≥ 1 (the components of S)"""
    out = []
    for j, (l, v) in enumerate(zip(chart.ell, chart.nu)):
        c = l + chart.m1 * v
        if v > 0 and c.denominator == 1 and c >= 1:
            out.append(j)
    return tuple(out)


def validate_chart(chart: SncChart) -> List[str]:
    """
    Report every violated chart invariant

    Args:
        chart: Chart to validate

    Returns:
        Violation messages naming the offending coordinate; empty when valid
    """
    violations: List[str] = []

    if chart.n < 1:
        violations.append(f"dimension must be positive, got n={chart.n}")
    for label, seq in (("radii", chart.radii), ("phiL", chart.ell), ("psi", chart.nu)):
        if len(seq) != chart.n:
            violations.append(f"{label} has {len(seq)} entries, expected n={chart.n}")

    for j, r in enumerate(chart.radii):
        if not 0.0 < r < 1.0:
            violations.append(f"radius of coordinate {j} must lie in (0, 1), got {r}")

    for j, v in enumerate(chart.nu):
        if v < 0:
            violations.append(f"ψ coefficient negative at coordinate {j}: {v}")
    if chart.psi.shift > 0:
        violations.append(f"sup ψ ≤ 0 fails: psi.shift = {chart.psi.shift}")

    if chart.m0 < 0:
        violations.append(f"m0 must be non-negative, got {chart.m0}")
    if not chart.m0 < chart.m1:
        violations.append(f"m0 < m1 fails: m0={chart.m0}, m1={chart.m1}")

    if violations:
        return violations

    # the ideal must be constant on [m0, m1)
    for j, (l, v) in enumerate(zip(chart.ell, chart.nu)):
        if v <= 0:
            continue
        lo = l + chart.m0 * v
        hi = l + chart.m1 * v
        k = math.floor(lo) + 1
        if max(k, 1) < hi:
            violations.append(
                f"jumping number strictly between m0 and m1 at coordinate {j}: "
                f"{(Fraction(max(k, 1)) - l) / v}"
            )

    if chart.klt:
        s_coords = set(critical_coordinates(chart))
        for j, l in enumerate(chart.ell):
            if j not in s_coords and l >= 1:
                violations.append(f"klt condition ℓ < 1 fails at S-transverse coordinate {j}: {l}")

    for i, section in enumerate(chart.sections):
        if section.n != chart.n:
            violations.append(f"section {i} has {section.n} exponents, expected {chart.n}")
            continue
        for j, a in enumerate(section.exponents):
            if a < 0:
                violations.append(f"section {i} exponent negative at coordinate {j}")
        if section.amplitude <= 0:
            violations.append(f"section {i} amplitude must be positive")
        if len(section.support_radius) != chart.n:
            violations.append(f"section {i} support_radius has wrong length")
            continue
        for j, (s, r) in enumerate(zip(section.support_radius, chart.radii)):
            if not 0.0 < s <= r:
                violations.append(
                    f"section {i} support radius {s} at coordinate {j} exceeds chart radius {r}"
                )

    return violations


def sample_battery() -> List[SncChart]:
    """
    Built-in chart battery (n ≤ 3) covering σ_f = 0, 1, 2, 3

    Every chart passes validate_chart and carries at least one section in 𝓘(φ_L + m0·ψ).
    """
    half = Fraction(1, 2)
    third = Fraction(1, 3)
    charts: List[SncChart] = []

    def chart(name, ell, nu, m0, m1, sections, radii=None, shift=0.0, klt=True):
        n = len(ell)
        radii = tuple(radii or (0.5,) * n)
        c = SncChart(
            n=n,
            radii=radii,
            phiL=DiagonalWeight(tuple(ell), 0.0),
            psi=DiagonalWeight(tuple(nu), shift),
            m0=m0,
            m1=m1,
            klt=klt,
            name=name,
        )
        return c.with_sections(c.section(a) for a in sections)

    # one-dimensional
    charts.append(chart("disc-basic", [0], [1], 0, 1, [(0,)]))
    charts.append(chart("disc-vanishing", [0], [1], 0, 1, [(1,)]))
    charts.append(chart("disc-nu2", [0], [2], half, 1, [(1,)]))
    charts.append(chart("disc-half-ell", [half], [1], 0, half, [(0,)]))
    charts.append(chart("disc-nu3", [0], [3], third, Fraction(2, 3), [(1,)]))
    charts.append(chart("disc-shifted", [0], [1], 0, 1, [(0,)], shift=-1.0))
    charts.append(chart("disc-small", [0], [1], 0, 1, [(0,)], radii=(0.3,)))

    # two-dimensional
    charts.append(chart("bidisc-origin", [0, 0], [1, 1], 0, 1, [(0, 0)]))
    charts.append(chart("bidisc-axis", [0, 0], [1, 1], 0, 1, [(0, 1)]))
    charts.append(chart("bidisc-vanishing", [0, 0], [1, 1], 0, 1, [(1, 1)]))
    charts.append(chart("bidisc-transverse", [0, 0], [1, 0], 0, 1, [(0, 0)]))
    charts.append(chart("bidisc-ell", [half, 0], [half, 1], 0, 1, [(0, 0)]))
    charts.append(chart("bidisc-nu2", [0, 0], [2, 1], half, 1, [(1, 0)]))
    charts.append(chart("bidisc-uneven", [0, 0], [1, 2], half, 1, [(0, 1)]))
    charts.append(chart("bidisc-klt-ell", [0, half], [1, 0], 0, 1, [(0, 0)]))
    charts.append(
        chart("bidisc-radii", [0, 0], [1, 1], 0, 1, [(0, 0)], radii=(0.5, 0.4), shift=-0.5)
    )
    charts.append(chart("bidisc-two-stage", [0, 0], [1, 1], 0, 1, [(0, 0), (0, 1)]))

    # three-dimensional
    charts.append(chart("tridisc-origin", [0, 0, 0], [1, 1, 1], 0, 1, [(0, 0, 0)]))
    charts.append(chart("tridisc-line", [0, 0, 0], [1, 1, 1], 0, 1, [(0, 0, 1)]))
    charts.append(chart("tridisc-plane", [0, 0, 0], [1, 1, 0], 0, 1, [(0, 1, 0)]))
    charts.append(chart("tridisc-vanishing", [0, 0, 0], [1, 1, 1], 0, 1, [(1, 1, 1)]))
    charts.append(chart("tridisc-mixed", [0, half, 0], [1, 0, 2], half, 1, [(0, 0, 1)]))

    return charts
