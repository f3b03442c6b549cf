"""
Multiplier ideals, jumping numbers, lc strata and σ_f for diagonal weights
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Dict, List, Sequence, Tuple

from scipy import integrate

from src.core.exceptions import PreconditionError
from src.core.snc_model import (
    DiagonalWeight,
    MonomialSection,
    SncChart,
    as_fraction,
    critical_coordinates,
    defects,
    failing_coordinate,
)
from src.utils.logger import get_logger


logger = get_logger(__name__)


def _divides(a: Sequence[int], b: Sequence[int]) -> bool:
    return all(x <= y for x, y in zip(a, b))


@dataclass(frozen=True)
class MonomialIdeal:
    """Monomial ideal given by an antichain of exponent vectors"""

    generators: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        gens = sorted(set(tuple(int(x) for x in g) for g in self.generators))
        minimal = [g for g in gens if not any(h != g and _divides(h, g) for h in gens)]
        object.__setattr__(self, "generators", tuple(minimal))

    @property
    def is_principal(self) -> bool:
        return len(self.generators) == 1

    @property
    def is_unit(self) -> bool:
        return any(all(x == 0 for x in g) for g in self.generators)

    def contains(self, exponents: Sequence[int]) -> bool:
        """z^exponents lies in the ideal"""
        return any(_divides(g, exponents) for g in self.generators)

    def is_subset_of(self, other: "MonomialIdeal") -> bool:
        return all(other.contains(g) for g in self.generators)

    def __add__(self, other: "MonomialIdeal") -> "MonomialIdeal":
        return MonomialIdeal(self.generators + other.generators)


@dataclass(frozen=True)
class JumpReport:
    """
    Jumping numbers of m ↦ 𝓘(φ_L + mψ) on (0, m_max]

    Attributes:
        jumps: Strictly increasing jumping numbers
        S_components: Coordinates whose hyperplanes make up S
        reduced: Every S-coordinate's minimal exponent grows by exactly 1 at m1
        m1_is_jump: m1 appears in jumps
        m_max: Upper end of the scanned range
    """

    jumps: Tuple[Fraction, ...]
    S_components: Tuple[int, ...]
    reduced: bool
    m1_is_jump: bool
    m_max: Fraction

    @property
    def flags(self) -> List[str]:
        out = []
        if not self.m1_is_jump:
            out.append("m1 is not a jumping number of the family 𝓘(φ_L + mψ)")
        if self.m1_is_jump and not self.reduced:
            out.append("S is not reduced: an exponent jumps by more than 1 at m1")
        return out


@dataclass(frozen=True)
class LcStratum:
    """Intersection of the S-components listed in coords"""

    coords: Tuple[int, ...]

    @property
    def codim(self) -> int:
        return len(self.coords)


@dataclass(frozen=True)
class SigmaF:
    """σ_f together with the strata realizing it"""

    value: int
    strata: Tuple[LcStratum, ...]
    zero_defect: Tuple[int, ...]


def minimal_exponent(c: Fraction) -> int:
    """Smallest a ∈ ℤ≥0 with a > c − 1"""
    return max(0, math.floor(c))


def multiplier_ideal(w: DiagonalWeight) -> MonomialIdeal:
    """
    Multiplier ideal of a diagonal weight

    Args:
        w: Weight Σ c_j log|z_j|² + const

    Returns:
        Principal ideal generated by z^e with e_j = min{a ≥ 0 : a > c_j − 1}
    """
    return MonomialIdeal((tuple(minimal_exponent(c) for c in w.coeffs),))


def _generator_at(chart: SncChart, m: Fraction) -> Tuple[int, ...]:
    return multiplier_ideal(chart.combined_weight(m)).generators[0]


def _candidate_jumps(chart: SncChart, m_max: Fraction) -> List[Fraction]:
    found = set()
    for l, v in zip(chart.ell, chart.nu):
        if v <= 0:
            continue
        k = max(1, math.floor(l) + 1)
        while True:
            m = (Fraction(k) - l) / v
            if m > m_max:
                break
            if m > 0:
                found.add(m)
            k += 1
    return sorted(found)


def jumping_numbers(chart: SncChart, m_max) -> JumpReport:
    """
    Jumping numbers of the family 𝓘(φ_L + mψ) on (0, m_max]

    Args:
        chart: Model chart
        m_max: Upper end of the range (exact rational)

    Returns:
        JumpReport; a chart whose m1 is not a jump is flagged, not rejected

    Raises:
        PreconditionError: m_max ≤ 0
    """
    m_max = as_fraction(m_max)
    if m_max <= 0:
        raise PreconditionError(f"m_max must be positive, got {m_max}")

    jumps = _candidate_jumps(chart, max(m_max, chart.m1))
    s_components = critical_coordinates(chart)
    m1_is_jump = chart.m1 in jumps

    reduced = False
    if m1_is_jump:
        below = [m for m in jumps if m < chart.m1]
        previous = max(below) if below else Fraction(0)
        middle = (previous + chart.m1) / 2
        at_m1 = _generator_at(chart, chart.m1)
        before = _generator_at(chart, middle)
        reduced = all(at_m1[j] - before[j] == 1 for j in s_components)

    report = JumpReport(
        jumps=tuple(m for m in jumps if m <= m_max),
        S_components=s_components,
        reduced=reduced,
        m1_is_jump=m1_is_jump,
        m_max=m_max,
    )
    logger.debug(
        "multiplier.jumps chart=%s count=%d S=%s reduced=%s",
        chart.name,
        len(report.jumps),
        report.S_components,
        report.reduced,
    )
    return report


def jump_ladder(chart: SncChart, start, count: int) -> List[Fraction]:
    """
    First ``count`` jumping numbers strictly above ``start``

    Args:
        chart: Model chart; needs some ν_j > 0
        start: Lower bound (exclusive)
        count: Number of jumps requested

    Returns:
        Increasing list of jumping numbers
    """
    start = as_fraction(start)
    if count < 0:
        raise PreconditionError(f"count must be non-negative, got {count}")
    if count and not any(v > 0 for v in chart.nu):
        raise PreconditionError("ψ has no singular coordinate; the family has no jumps")

    ladder: List[Fraction] = []
    upper = max(start, Fraction(0)) + 1
    while len(ladder) < count:
        ladder = [m for m in _candidate_jumps(chart, upper) if m > start][:count]
        upper *= 2
    return ladder


def lc_centres(report: JumpReport, sigma: int) -> List[LcStratum]:
    """
    Codimension-σ lc strata: all σ-element subsets of the S-components

    Args:
        report: Jump report carrying S_components
        sigma: Codimension

    Returns:
        Strata in lexicographic order; empty when sigma exceeds |J|
    """
    if sigma < 0:
        raise PreconditionError(f"sigma must be non-negative, got {sigma}")
    return [LcStratum(c) for c in combinations(report.S_components, sigma)]


def sigma_f(chart: SncChart, report: JumpReport, f: MonomialSection) -> SigmaF:
    """
    Codimension of the minimal lc centre relative to f

    Args:
        chart: Model chart
        report: Jump report of the chart
        f: Section in 𝓘(φ_L + m0·ψ)

    Returns:
        SigmaF with the zero-defect coordinates and the realizing strata

    Raises:
        PreconditionError: f not in 𝓘(φ_L + m0·ψ)
    """
    bad = failing_coordinate(chart, f, chart.m0)
    if bad is not None:
        raise PreconditionError(
            f"section {f.exponents} is not in 𝓘(φ_L + m0·ψ): "
            f"a_{bad} = {f.exponents[bad]} fails a > ℓ + m0·ν − 1 at coordinate {bad}"
        )

    d = defects(chart, f.exponents)
    zero = tuple(j for j in report.S_components if d[j] == 0)
    strata = tuple(LcStratum(c) for c in combinations(zero, len(zero)))
    return SigmaF(value=len(zero), strata=strata if zero else (), zero_defect=zero)


def quotient_class(chart: SncChart, exponents: Sequence[int]) -> bool:
    """True when z^exponents is non-zero in 𝓘(φ_L + m0ψ)/𝓘(φ_L + m1ψ)"""
    upper = multiplier_ideal(chart.combined_weight(chart.m1))
    return not upper.contains(exponents)


# ----------------------------------------------------------------------------
# Brute-force oracles
# ----------------------------------------------------------------------------


def scan_jumps(chart: SncChart, m_max, step) -> List[Fraction]:
    """
    Grid points where the exact generator differs from the previous grid point

    Exact when every jumping number is a multiple of ``step``.
    """
    m_max = as_fraction(m_max)
    step = as_fraction(step)
    if step <= 0:
        raise PreconditionError(f"step must be positive, got {step}")

    found = []
    previous = _generator_at(chart, Fraction(0))
    m = step
    while m <= m_max:
        current = _generator_at(chart, m)
        if current != previous:
            found.append(m)
        previous = current
        m += step
    return found


def radial_integrable(defect: float, decades: int = 8) -> bool:
    """
    Numerically decide finiteness of ∫_{|z|<1} |z|^{2(defect−1)} dλ

    In u = −log|z|² the integral is π∫_0^∞ e^{−defect·u} du; it is summed over the
    segments [10^k, 10^{k+1}] and declared divergent when the last segment still
    carries weight or overflows.
    """

    def integrand(u: float) -> float:
        return math.exp(min(-defect * u, 700.0))

    edges = [0.0] + [10.0**k for k in range(-1, decades + 1)]
    parts = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        value, _ = integrate.quad(integrand, lo, hi, limit=200)
        if not math.isfinite(value) or value > 1e250:
            return False
        parts.append(value)
    total = math.fsum(parts)
    return parts[-1] <= 1e-8 * total


def numeric_generator(c: float, a_max: int = 64) -> int:
    """Smallest a ≥ 0 whose radial integral with coefficient c is numerically finite"""
    for a in range(a_max + 1):
        if radial_integrable(a + 1 - c):
            return a
    raise PreconditionError(f"no integrable exponent up to {a_max} for coefficient {c}")


def verify_jumps_numeric(chart: SncChart, m_max, offset: float = 1e-3) -> List[Dict]:
    """
    Compare exact jumping numbers against the numeric integrability scan

    Each exact jump must change the numeric generator between m − offset and m + offset,
    and the numeric generator must be constant between consecutive jumps.

    Returns:
        Mismatch records; empty when the two agree
    """
    report = jumping_numbers(chart, m_max)

    def numeric_at(m: float) -> Tuple[int, ...]:
        return tuple(
            numeric_generator(float(l) + m * float(v)) for l, v in zip(chart.ell, chart.nu)
        )

    mismatches = []
    for m in report.jumps:
        lo, hi = numeric_at(float(m) - offset), numeric_at(float(m) + offset)
        if lo == hi:
            mismatches.append({"m": m, "kind": "missed", "generator": lo})

    points = [Fraction(0)] + list(report.jumps)
    for a, b in zip(points[:-1], points[1:]):
        lo, hi = numeric_at(float(a) + offset), numeric_at(float(b) - offset)
        if lo != hi:
            mismatches.append({"m": (a + b) / 2, "kind": "spurious", "generator": hi})

    if mismatches:
        logger.warning("multiplier.oracle.mismatch chart=%s count=%d", chart.name, len(mismatches))
    return mismatches
