"""
lc-measure evaluation - the ε-limit by quadrature and extrapolation, the closed form,
and the Zero / Finite / Divergent trichotomy
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import gammaln

from src.core.exceptions import InconclusiveError, PreconditionError, QuadratureError
from src.core.multiplier import jumping_numbers, sigma_f
from src.core.quadrature import (
    LOG4,
    bump_sq_du,
    bump_sq_of_u,
    cutoff_axis_rule,
    gauss_legendre,
    ordered_sum,
    richardson,
    support_start,
    tensor_sum,
)
from src.core.snc_model import MonomialSection, MultiMonomialSection, SncChart, defects
from src.utils.logger import get_logger


logger = get_logger(__name__)

Section = Union[MonomialSection, MultiMonomialSection]
TWO_PI = 2.0 * math.pi
REFINEMENT_FRACTION = 1e-4


class MeasureClass(str, Enum):
    ZERO = "zero"
    FINITE = "finite"
    DIVERGENT = "divergent"


@dataclass(frozen=True)
class QuadratureSpec:
    """
    Quadrature and classification settings

    Attributes:
        eps_schedule: Strictly decreasing ε-values in (0, 1/2)
        nodes_per_axis: Initial Gauss nodes per axis piece
        max_nodes: Refinement budget per axis piece
        abs_tol: Absolute tolerance of the Zero test
        rel_tol: Relative tolerance of the Finite test
        divergence_threshold: Growth per ε-step that classifies as Divergent
        quad_rel_tol: Relative agreement required between two refinements; None derives
            it from rel_tol
        threads: Worker count for the tensor cells
    """

    eps_schedule: Tuple[float, ...] = (0.2, 0.1, 0.05, 0.025)
    nodes_per_axis: int = 24
    max_nodes: int = 96
    abs_tol: float = 1e-6
    rel_tol: float = 2e-3
    divergence_threshold: float = 4.0
    quad_rel_tol: Optional[float] = None
    threads: int = 1

    def __post_init__(self):
        object.__setattr__(self, "eps_schedule", tuple(float(e) for e in self.eps_schedule))
        eps = self.eps_schedule
        if not eps:
            raise PreconditionError("eps_schedule must not be empty")
        if any(not 0.0 < e < 0.5 for e in eps):
            raise PreconditionError(f"eps_schedule entries must lie in (0, 1/2): {eps}")
        if any(a <= b for a, b in zip(eps[:-1], eps[1:])):
            raise PreconditionError(f"eps_schedule must be strictly decreasing: {eps}")
        if min(self.abs_tol, self.rel_tol, self.refinement_tol) <= 0:
            raise PreconditionError("tolerances must be positive")
        if self.divergence_threshold <= 1:
            raise PreconditionError("divergence_threshold must exceed 1")
        if self.nodes_per_axis < 2 or self.max_nodes < 2 * self.nodes_per_axis:
            raise PreconditionError("need nodes_per_axis ≥ 2 and max_nodes ≥ 2 · nodes_per_axis")

    @property
    def refinement_tol(self) -> float:
        """Relative agreement two refinements need; well below what classification resolves"""
        if self.quad_rel_tol is not None:
            return self.quad_rel_tol
        return self.rel_tol * REFINEMENT_FRACTION

    @classmethod
    def from_config(
        cls, config: Dict[str, Any], threads: Optional[int] = None
    ) -> "QuadratureSpec":
        """Build from the ``quadrature`` and ``runtime`` sections of the configuration"""
        q = config.get("quadrature", {})
        quad_rel_tol = q.get("quad_rel_tol")
        return cls(
            eps_schedule=tuple(q.get("eps_schedule", cls.eps_schedule)),
            nodes_per_axis=int(q.get("nodes_per_axis", cls.nodes_per_axis)),
            max_nodes=int(q.get("max_nodes", cls.max_nodes)),
            abs_tol=float(q.get("abs_tol", cls.abs_tol)),
            rel_tol=float(q.get("rel_tol", cls.rel_tol)),
            divergence_threshold=float(q.get("divergence_threshold", cls.divergence_threshold)),
            quad_rel_tol=None if quad_rel_tol is None else float(quad_rel_tol),
            threads=int(threads or config.get("runtime", {}).get("threads", 1)),
        )


@dataclass(frozen=True)
class MeasureDiagnostics:
    eps: Tuple[float, ...] = ()
    values: Tuple[float, ...] = ()
    residual: float = math.nan
    growth_ratio: float = math.nan
    quadrature_error: float = 0.0


@dataclass(frozen=True)
class MeasureResult:
    """Outcome of an lc-measure evaluation; ``value`` is set only for FINITE"""

    kind: MeasureClass
    value: Optional[float] = None
    diagnostics: MeasureDiagnostics = field(default_factory=MeasureDiagnostics)

    def __post_init__(self):
        if self.kind is MeasureClass.FINITE:
            if self.value is None or self.value < 0:
                raise ValueError(f"finite measure needs a non-negative value, got {self.value}")
        elif self.value is not None:
            raise ValueError(f"{self.kind.value} measure carries no value")


# ----------------------------------------------------------------------------
# Integrand geometry
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class _Geometry:
    """Per-term data of ε∫|f|²e^{−φ_L−m1ψ}|ψ|^{−σ−ε} in u_j = −log|z_j|²"""

    nu: Tuple[float, ...]
    d: Tuple[float, ...]
    start: Tuple[float, ...]
    radius: Tuple[float, ...]
    zero: Tuple[int, ...]
    others: Tuple[int, ...]
    s0: float
    prefactor: float

    @property
    def floor(self) -> float:
        """|ψ| at the outer corner of the support, its smallest value there"""
        return self.s0 + sum(v * u for v, u in zip(self.nu, self.start))

    def pole_distance(self, j: int) -> float:
        """Distance in u_j from the support edge to where the |ψ|-power would blow up"""
        if self.nu[j] <= 0:
            return math.inf
        return max(self.floor, 0.0) / self.nu[j]


def _terms(f: Section) -> Tuple[MonomialSection, ...]:
    return f.terms if isinstance(f, MultiMonomialSection) else (f,)


def _geometry(chart: SncChart, f: MonomialSection) -> _Geometry:
    if f.n != chart.n or len(f.support_radius) != chart.n:
        raise PreconditionError(f"section dimension does not match chart dimension {chart.n}")
    d_exact = defects(chart, f.exponents)
    zero = tuple(j for j, d in enumerate(d_exact) if d == 0 and chart.nu[j] > 0)
    beta0 = chart.phiL.shift + float(chart.m1) * chart.psi.shift
    return _Geometry(
        nu=tuple(float(v) for v in chart.nu),
        d=tuple(float(d) for d in d_exact),
        start=tuple(support_start(r) for r in f.support_radius),
        radius=f.support_radius,
        zero=zero,
        others=tuple(j for j in range(chart.n) if j not in zero),
        s0=-chart.psi.shift,
        prefactor=TWO_PI**chart.n * f.amplitude**2 * math.exp(-beta0),
    )


def _outer_rule(geo: _Geometry, j: int, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """χ²e^{−d u} on [U, ∞), graded toward the |ψ|-power's singularity when d is small"""
    return cutoff_axis_rule(n, geo.radius[j], geo.d[j], geo.pole_distance(j))


def _band_rule(geo: _Geometry, j: int, n: int, weight) -> Tuple[np.ndarray, np.ndarray]:
    u0 = geo.start[j]
    xc, wc = gauss_legendre(n, u0, u0 + LOG4)
    return xc, wc * weight(xc, geo.radius[j])


def _power(exponent: float):
    return lambda c: np.power(c, exponent)


def _direct_sum(geo: _Geometry, sigma: int, eps: float, n: int, threads: int) -> float:
    """Inclusion–exclusion over K ⊆ Z with χ² = 1 − η on the zero-defect axes"""
    p = sigma + eps
    outer = {j: _outer_rule(geo, j, n) for j in geo.others}
    eta = {j: _band_rule(geo, j, n, lambda u, r: bump_sq_of_u(u, r) - 1.0) for j in geo.zero}

    parts = []
    for size in range(len(geo.zero) + 1):
        for K in combinations(geo.zero, size):
            free = [j for j in geo.zero if j not in K]
            m = len(free)
            base = geo.s0 + sum(geo.nu[j] * geo.start[j] for j in free)
            axes = list(K) + list(geo.others)
            rules = [eta[j] if j in eta else outer[j] for j in axes]
            coeffs = [geo.nu[j] for j in axes]
            scale = math.exp(gammaln(p - m) - gammaln(p)) / math.prod(geo.nu[j] for j in free)
            # the sign of each η factor is folded into its weights
            parts.append(scale * tensor_sum(rules, coeffs, base, _power(m - p), threads))
    return eps * geo.prefactor * ordered_sum(parts)


def _telescoped_sum(geo: _Geometry, sigma: int, eps: float, n: int, threads: int) -> float:
    """σ_f-fold integration by parts along the zero-defect axes"""
    p = sigma + eps
    k = len(geo.zero)
    axes = list(geo.zero) + list(geo.others)
    rules = []
    for j in axes:
        if j in geo.zero:
            nu = geo.nu[j]
            rules.append(_band_rule(geo, j, n, lambda u, r, nu=nu: bump_sq_du(u, r) / nu))
        else:
            rules.append(_outer_rule(geo, j, n))
    coeffs = [geo.nu[j] for j in axes]
    denominator = math.prod(p - i for i in range(1, k + 1))
    value = tensor_sum(rules, coeffs, geo.s0, _power(k - p), threads)
    return eps * geo.prefactor * value / denominator


def _refine(evaluate, spec: QuadratureSpec, label: str) -> Tuple[float, float]:
    n = spec.nodes_per_axis
    older, previous = math.nan, evaluate(n)
    while 2 * n <= spec.max_nodes:
        n *= 2
        current = evaluate(n)
        error = abs(current - previous)
        if error <= spec.refinement_tol * abs(current) or error <= spec.abs_tol * 1e-6:
            return current, error
        older, previous = previous, current
    raise QuadratureError(f"{label}: no convergence within {spec.max_nodes} nodes", older, previous)


def _term_is_infinite(geo: _Geometry, sigma: int, eps: float) -> bool:
    if sigma + eps <= len(geo.zero):
        return True
    return any(geo.d[j] <= 0 for j in geo.others)


def lcv_integral_with_error(
    chart: SncChart, f: Section, sigma: int, eps: float, spec: QuadratureSpec
) -> Tuple[float, float]:
    """
    ε · ∫ |f|² e^{−φ_L − m1ψ} / |ψ|^{σ+ε} dλ together with its quadrature error estimate

    Volume form ∏ i dz_j ∧ dz̄_j. Cross terms of a multi-monomial section vanish under the
    angular integration, so the terms are summed.

    Returns:
        (value, error); value is +inf when the integral diverges
    """
    if eps <= 0:
        raise PreconditionError(f"eps must be positive, got {eps}")
    if sigma < 0:
        raise PreconditionError(f"sigma must be non-negative, got {sigma}")

    values, errors = [], []
    for term in _terms(f):
        geo = _geometry(chart, term)
        if _term_is_infinite(geo, sigma, eps):
            return math.inf, 0.0
        value, error = _refine(
            lambda n: _direct_sum(geo, sigma, eps, n, spec.threads),
            spec,
            f"lcv sigma={sigma} eps={eps}",
        )
        values.append(value)
        errors.append(error)
    return ordered_sum(values), ordered_sum(errors)


def lcv_integral_eps(
    chart: SncChart, f: Section, sigma: int, eps: float, spec: QuadratureSpec
) -> float:
    """
    ε-regularized lc-measure integral

    Args:
        chart: Valid model chart
        f: Monomial or multi-monomial section
        sigma: Codimension
        eps: Regularization, positive
        spec: Quadrature settings

    Returns:
        ε · ∫ |f|² e^{−φ_L − m1ψ} / |ψ|^{σ+ε}; +inf when divergent

    Raises:
        QuadratureError: refinement budget exhausted
    """
    return lcv_integral_with_error(chart, f, sigma, eps, spec)[0]


def telescoped_integral_eps(
    chart: SncChart, f: MonomialSection, sigma: int, eps: float, spec: QuadratureSpec
) -> float:
    """
    The same ε-integral after integrating by parts once along every zero-defect axis

    Only the derivative of the cutoff survives on those axes, so the integral lives on
    the compact transition bands.

    Raises:
        PreconditionError: σ < σ_f (the parts integration needs σ + ε > σ_f) or σ_f = 0
    """
    geo = _geometry(chart, f)
    if not geo.zero:
        raise PreconditionError("telescoping needs at least one zero-defect coordinate")
    if sigma < len(geo.zero):
        raise PreconditionError(f"telescoping needs sigma ≥ σ_f = {len(geo.zero)}, got {sigma}")
    if any(geo.d[j] <= 0 for j in geo.others):
        return math.inf
    value, _ = _refine(
        lambda n: _telescoped_sum(geo, sigma, eps, n, spec.threads),
        spec,
        f"telescoped sigma={sigma} eps={eps}",
    )
    return value


# ----------------------------------------------------------------------------
# Limit and classification
# ----------------------------------------------------------------------------


EpsProfile = Callable[[float], float]


def eps_profile(chart: SncChart, f: Section, sigma: int) -> Optional[EpsProfile]:
    """
    Leading ε-dependence of the integrals that survive the limit at codimension σ

    A term with σ zero-defect coordinates behaves like Γ(1+ε)Γ(σ)/Γ(σ+ε) · |ψ|^{−ε} with
    |ψ| of order its floor plus the mean reach ν/d of each decaying coordinate. The profile
    is 1 at ε = 0; the lowest level among the surviving terms is used.

    Returns:
        The profile, or None when σ = 0 or no term survives
    """
    if sigma < 1:
        return None
    levels = []
    for term in _terms(f):
        geo = _geometry(chart, term)
        if len(geo.zero) != sigma:
            continue
        reach = sum(geo.nu[j] / geo.d[j] for j in geo.others if geo.nu[j] > 0 and geo.d[j] > 0)
        levels.append(geo.floor + reach)
    if not levels or min(levels) <= 0:
        return None

    log_level = math.log(min(levels))
    log_gamma_sigma = float(gammaln(sigma))

    def profile(eps: float) -> float:
        log_ratio = gammaln(1.0 + eps) + log_gamma_sigma - gammaln(sigma + eps)
        return math.exp(float(log_ratio) - eps * log_level)

    return profile


def classify(
    eps: Sequence[float],
    values: Sequence[float],
    spec: QuadratureSpec,
    error: float = 0.0,
    profile: Optional[EpsProfile] = None,
) -> MeasureResult:
    """
    Classify an ε-sequence of integrals

    The growth test reads the raw values; extrapolation and the Zero test use the values
    divided by ``profile`` when one is given.

    Raises:
        InconclusiveError: neither convergent nor cleanly divergent
    """
    eps = tuple(eps)
    values = tuple(values)

    if any(math.isinf(v) for v in values):
        diagnostics = MeasureDiagnostics(eps, values, math.nan, math.inf, error)
        return MeasureResult(MeasureClass.DIVERGENT, None, diagnostics)

    ratios = [b / a for a, b in zip(values[:-1], values[1:]) if a > 0]
    growth = ratios[-1] if ratios else math.nan
    if ratios and growth >= spec.divergence_threshold:
        return MeasureResult(
            MeasureClass.DIVERGENT, None, MeasureDiagnostics(eps, values, math.nan, growth, error)
        )

    scaled = values if profile is None else tuple(v / profile(e) for e, v in zip(eps, values))
    value, residual, _ = richardson(eps, scaled)
    diagnostics = MeasureDiagnostics(eps, values, residual, growth, error)
    scale = max(abs(v) for v in scaled)

    if abs(value) <= spec.abs_tol + spec.rel_tol * scale:
        return MeasureResult(MeasureClass.ZERO, None, diagnostics)
    if value > 0 and residual <= spec.rel_tol * value:
        return MeasureResult(MeasureClass.FINITE, value, diagnostics)

    raise InconclusiveError(
        f"cannot classify: extrapolated={value!r} residual={residual!r} growth={growth!r}",
        diagnostics={"eps": eps, "values": values, "residual": residual, "growth": growth},
    )


def lcv_limit(chart: SncChart, f: Section, sigma: int, spec: QuadratureSpec) -> MeasureResult:
    """
    lc-measure of f at codimension σ by its defining ε-limit

    Args:
        chart: Valid model chart
        f: Section
        sigma: Codimension
        spec: Quadrature settings

    Returns:
        ZERO, FINITE with the extrapolated value, or DIVERGENT

    Raises:
        InconclusiveError: ambiguous sequence
        QuadratureError: refinement budget exhausted
    """
    values, errors = [], []
    for eps in spec.eps_schedule:
        value, error = lcv_integral_with_error(chart, f, sigma, eps, spec)
        values.append(value)
        errors.append(error)

    profile = eps_profile(chart, f, sigma)
    result = classify(spec.eps_schedule, values, spec, max(errors), profile)
    logger.info(
        "lcv.limit chart=%s sigma=%d class=%s value=%s",
        chart.name,
        sigma,
        result.kind.value,
        result.value,
    )
    return result


def _closed_form_term(chart: SncChart, f: MonomialSection, n: int = 64) -> Tuple[int, float]:
    report = jumping_numbers(chart, chart.m1)
    sf = sigma_f(chart, report, f)
    if sf.value == 0:
        return 0, 0.0

    geo = _geometry(chart, f)
    zero_nu = math.prod(geo.nu[j] for j in geo.zero)
    value = TWO_PI ** sf.value / (math.factorial(sf.value - 1) * zero_nu)
    value *= f.amplitude**2 * math.exp(-(chart.phiL.shift + float(chart.m1) * chart.psi.shift))

    for j in geo.others:
        if geo.d[j] <= 0:
            raise PreconditionError(
                f"coordinate {j}: ℓ_{j} = {chart.ell[j]} is not below 1 and the section "
                f"lacks compensating vanishing (a_{j} = {f.exponents[j]})"
            )
        _, weights = _outer_rule(geo, j, n)
        value *= TWO_PI * ordered_sum(weights)
    return sf.value, value


def lcv_closed_form(chart: SncChart, f: Section) -> Tuple[int, MeasureResult]:
    """
    Closed-form lc-measure at σ_f

    The stratum integral of |f|² e^{−φ_L−m1ψ}·|ψ|-free factors uses |z_k|^{2a_k} on the
    transverse coordinates; terms of a multi-monomial section with lower σ_f drop out.

    Returns:
        (σ_f, ZERO or FINITE result)

    Raises:
        PreconditionError: a term is outside 𝓘(φ_L + m0ψ), or a transverse coordinate
            has non-positive defect
    """
    pieces = [_closed_form_term(chart, term) for term in _terms(f)]
    top = max((s for s, _ in pieces), default=0)
    if top == 0:
        return 0, MeasureResult(MeasureClass.ZERO)
    value = ordered_sum(v for s, v in pieces if s == top)
    return top, MeasureResult(MeasureClass.FINITE, value)


def trichotomy_table(
    chart: SncChart, f: Section, spec: QuadratureSpec
) -> List[Tuple[int, MeasureResult]]:
    """lcv_limit for σ = 0..n"""
    return [(sigma, lcv_limit(chart, f, sigma, spec)) for sigma in range(chart.n + 1)]


def trichotomy_is_ordered(table: Sequence[Tuple[int, MeasureResult]], sigma_f_value: int) -> bool:
    """Divergent below σ_f, Finite at σ_f (when σ_f ≥ 1), Zero above"""
    for sigma, result in table:
        if sigma < sigma_f_value:
            expected = MeasureClass.DIVERGENT
        elif sigma == sigma_f_value and sigma_f_value >= 1:
            expected = MeasureClass.FINITE
        else:
            expected = MeasureClass.ZERO
        if result.kind is not expected:
            return False
    return True


def measure_sigma_f(table: Sequence[Tuple[int, MeasureResult]]) -> int:
    """Smallest σ whose measure is not divergent (0 when none is finite)"""
    for sigma, result in table:
        if result.kind is MeasureClass.FINITE:
            return sigma
    return 0
