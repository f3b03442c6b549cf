"""
Model-scale check of the extension estimate

For σ = σ_f down to 1 the minimal extension F_σ of the codimension-σ part of f must satisfy

    ∫ |F_σ|² e^{−φ_L−m1ψ} / (|ψ|^σ ((σ log|ℓψ|)² + 1))  ≤  (1/σ) · lcv^σ(residual).

Passing is a necessary condition only: the minimal extension must meet any bound that
some extension meets.
"""

import math
from dataclasses import dataclass, replace
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.core.exceptions import LcExtensionError, PreconditionError, QuadratureError
from src.core.lcv import MeasureClass, QuadratureSpec, lcv_limit
from src.core.multiplier import jumping_numbers, multiplier_ideal, sigma_f
from src.core.quadrature import (
    LOG4,
    bump_sq_of_u,
    cutoff_axis_rule,
    gauss_legendre,
    ordered_sum,
    support_start,
    tensor_sum,
)
from src.core.snc_model import (
    MonomialSection,
    MultiMonomialSection,
    SncChart,
    failing_coordinate,
    section_in_ideal,
)
from src.core.weights import AuxParams, normalize_psi
from src.utils.logger import get_logger


logger = get_logger(__name__)

TWO_PI = 2.0 * math.pi
INNER_NODES = 64


class DivergenceError(PreconditionError):
    """A weighted norm that should be finite diverges"""


# ----------------------------------------------------------------------------
# Minimal extension
# ----------------------------------------------------------------------------


def zero_section(n: int) -> MonomialSection:
    return MonomialSection((0,) * n, 0.0, (1.0,) * n)


def minimal_extension(chart: SncChart, f: MonomialSection) -> MonomialSection:
    """
    Weighted-L²-minimal extension of the class of f in 𝓘(φ_L+m0ψ)/𝓘(φ_L+m1ψ)

    Radial weights make distinct monomials orthogonal, so adding any element of
    𝓘(φ_L+m1ψ) only adds norm: the minimizer is f itself, or zero when f ∈ 𝓘(φ_L+m1ψ).

    Raises:
        PreconditionError: f ∉ 𝓘(φ_L + m0ψ)
    """
    bad = failing_coordinate(chart, f, chart.m0)
    if bad is not None:
        raise PreconditionError(
            f"section {f.exponents} is not in 𝓘(φ_L + m0·ψ) at coordinate {bad}"
        )
    if section_in_ideal(chart, f, chart.m1):
        logger.info(
            "estimates.minimal_extension.zero exponents=%s note=class vanishes", f.exponents
        )
        return zero_section(chart.n)
    return f


# ----------------------------------------------------------------------------
# Weighted norm
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class _NormGeometry:
    nu: Tuple[float, ...]
    d: Tuple[float, ...]
    start: Tuple[float, ...]
    radius: Tuple[float, ...]
    zero: Tuple[int, ...]
    others: Tuple[int, ...]
    s0: float
    prefactor: float


def _norm_geometry(
    chart: SncChart, exponents: Sequence[float], amplitude: float, radius: Sequence[float]
) -> _NormGeometry:
    nu = tuple(float(v) for v in chart.nu)
    d = tuple(
        float(e) + 1.0 - float(l) - float(chart.m1) * v
        for e, l, v in zip(exponents, chart.ell, nu)
    )
    zero = tuple(j for j in range(chart.n) if abs(d[j]) < 1e-12 and nu[j] > 0)
    beta0 = chart.phiL.shift + float(chart.m1) * chart.psi.shift
    return _NormGeometry(
        nu=nu,
        d=d,
        start=tuple(support_start(r) for r in radius),
        radius=tuple(radius),
        zero=zero,
        others=tuple(j for j in range(chart.n) if j not in zero),
        s0=-chart.psi.shift,
        prefactor=TWO_PI**chart.n * amplitude**2 * math.exp(-beta0),
    )


def _phi(m: int, sigma: int, ell: float):
    """
    Φ_m(C) = (1/(m−1)!) ∫_0^∞ x^{m−1} h(C + x) dx, Φ_0 = h,
    h(y) = 1/(y^σ ((σ log ℓy)² + 1))

    The integral is taken in z = log(ℓy) and then w = 1/(1 + z − z0) ∈ (0, 1].
    """
    log_ell = math.log(ell)

    if m == 0:

        def h(c):
            return 1.0 / (c**sigma * ((sigma * (log_ell + np.log(c))) ** 2 + 1.0))

        return h

    w, wq = gauss_legendre(INNER_NODES, 0.0, 1.0)
    delta = 1.0 / w - 1.0
    jac = wq / w**2
    log_one_minus = np.log1p(-np.exp(-delta))
    scale = 1.0 / math.factorial(m - 1)

    def phi(c):
        c = np.asarray(c, dtype=float)[..., None]
        z0 = log_ell + np.log(c)
        z = z0 + delta
        log_y = z - log_ell
        log_body = (m - sigma) * log_y + (m - 1) * log_one_minus
        body = np.exp(log_body) / ((sigma * z) ** 2 + 1.0)
        return scale * np.sum(body * jac, axis=-1)

    return phi


def _norm_sum(geo: _NormGeometry, sigma: int, ell: float, n: int, threads: int) -> float:
    floor = max(geo.s0 + sum(v * u for v, u in zip(geo.nu, geo.start)), 0.0)
    outer = {
        j: cutoff_axis_rule(
            n, geo.radius[j], geo.d[j], floor / geo.nu[j] if geo.nu[j] > 0 else math.inf
        )
        for j in geo.others
    }
    eta = {}
    for j in geo.zero:
        u0 = geo.start[j]
        xc, wc = gauss_legendre(n, u0, u0 + LOG4)
        eta[j] = (xc, wc * (bump_sq_of_u(xc, geo.radius[j]) - 1.0))

    parts = []
    for size in range(len(geo.zero) + 1):
        for K in combinations(geo.zero, size):
            free = [j for j in geo.zero if j not in K]
            base = geo.s0 + sum(geo.nu[j] * geo.start[j] for j in free)
            axes = list(K) + list(geo.others)
            rules = [eta[j] if j in eta else outer[j] for j in axes]
            coeffs = [geo.nu[j] for j in axes]
            scale = 1.0 / math.prod(geo.nu[j] for j in free)
            integrand = _phi(len(free), sigma, ell)
            parts.append(scale * tensor_sum(rules, coeffs, base, integrand, threads))
    return geo.prefactor * ordered_sum(parts)


def _weighted_norm(
    chart: SncChart,
    exponents: Sequence[float],
    amplitude: float,
    radius: Sequence[float],
    sigma: int,
    ell: float,
    spec: QuadratureSpec,
) -> Tuple[float, float]:
    geo = _norm_geometry(chart, exponents, amplitude, radius)
    if len(geo.zero) > sigma:
        raise DivergenceError(
            f"weighted norm diverges: {len(geo.zero)} zero-defect coordinates exceed σ={sigma}"
        )
    for j in geo.others:
        if geo.d[j] <= 0:
            raise DivergenceError(
                f"weighted norm diverges at coordinate {j}: exponent {exponents[j]} lies below "
                f"the 𝓘(φ_L + m1·ψ) floor"
            )

    n = spec.nodes_per_axis
    older, previous = math.nan, _norm_sum(geo, sigma, ell, n, spec.threads)
    while 2 * n <= spec.max_nodes:
        n *= 2
        current = _norm_sum(geo, sigma, ell, n, spec.threads)
        error = abs(current - previous)
        if error <= spec.refinement_tol * abs(current) or error <= spec.abs_tol * 1e-6:
            return current, error
        older, previous = previous, current
    raise QuadratureError(f"weighted norm sigma={sigma}: no convergence", older, previous)


def _check_normalized(chart: SncChart, params: AuxParams) -> None:
    if chart.psi.shift >= params.psi_max:
        raise PreconditionError(
            f"ψ is not normalized: psi.shift={chart.psi.shift} must lie below {params.psi_max}"
        )


def estimate_lhs_with_error(
    chart: SncChart,
    F: Union[MonomialSection, MultiMonomialSection],
    sigma: int,
    params: AuxParams,
    spec: Optional[QuadratureSpec] = None,
) -> Tuple[float, float]:
    """estimate_lhs together with its quadrature error estimate"""
    if sigma < 1:
        raise PreconditionError(f"sigma must be ≥ 1, got {sigma}")
    _check_normalized(chart, params)
    spec = spec or QuadratureSpec()
    terms = F.terms if isinstance(F, MultiMonomialSection) else (F,)

    values, errors = [], []
    for term in terms:
        if term.amplitude == 0.0:
            continue
        value, error = _weighted_norm(
            chart, term.exponents, term.amplitude, term.support_radius, sigma, params.ell, spec
        )
        values.append(value)
        errors.append(error)
    return ordered_sum(values), ordered_sum(errors)


def estimate_lhs(
    chart: SncChart,
    F: Union[MonomialSection, MultiMonomialSection],
    sigma: int,
    params: AuxParams,
    spec: Optional[QuadratureSpec] = None,
) -> float:
    """
    ∫ |F|² e^{−φ_L − m1ψ} / (|ψ|^σ ((σ log|ℓψ|)² + 1)) over the polydisc

    Volume form ∏ i dz_j ∧ dz̄_j, as for the lc-measure.

    Args:
        chart: Chart with normalized ψ
        F: Extension (a zero section gives 0)
        sigma: σ ≥ 1
        params: Weight parameters (ℓ)
        spec: Quadrature settings

    Returns:
        Weighted norm-square

    Raises:
        DivergenceError: F lacks the vanishing that makes the norm finite
        PreconditionError: ψ not normalized
    """
    return estimate_lhs_with_error(chart, F, sigma, params, spec)[0]


def minimal_extension_qp(
    chart: SncChart,
    f: MonomialSection,
    candidates: Sequence[Sequence[int]],
    sigma: int,
    params: AuxParams,
    spec: Optional[QuadratureSpec] = None,
    angles: int = 64,
) -> np.ndarray:
    """
    Brute-force minimal extension over the span of f and candidate monomials

    The Gram matrix of the estimate weight is assembled numerically, the angular
    integrals included, and the quadratic program with F ≡ f mod 𝓘(φ_L+m1ψ) is solved.

    Returns:
        Coefficients of [f, *candidates]
    """
    spec = spec or QuadratureSpec()
    _check_normalized(chart, params)
    upper = multiplier_ideal(chart.combined_weight(chart.m1))
    basis = [tuple(f.exponents)] + [tuple(c) for c in candidates]
    free = [k for k in range(1, len(basis)) if upper.contains(basis[k])]

    theta = 2.0 * math.pi * np.arange(angles) / angles
    size = len(basis)
    gram = np.zeros((size, size))
    for i in range(size):
        for k in range(i, size):
            angular = 1.0
            for a, b in zip(basis[i], basis[k]):
                angular *= float(np.mean(np.cos((a - b) * theta)))
            if abs(angular) < 1e-14:
                continue
            mid = [(a + b) / 2.0 for a, b in zip(basis[i], basis[k])]
            radial, _ = _weighted_norm(
                chart, mid, f.amplitude, f.support_radius, sigma, params.ell, spec
            )
            gram[i, k] = gram[k, i] = angular * radial

    coefficients = np.zeros(size)
    coefficients[0] = 1.0
    if free:
        g_ff = gram[np.ix_(free, free)]
        g_f0 = gram[free, 0]
        coefficients[free] = np.linalg.solve(g_ff, -g_f0)
    return coefficients


# ----------------------------------------------------------------------------
# Staged check
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class StageReport:
    sigma: int
    extension: MultiMonomialSection
    lhs: float
    rhs: float
    tolerance: float
    residual_after: MultiMonomialSection

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        return self.margin >= -self.tolerance


@dataclass(frozen=True)
class ExtensionReport:
    chart: SncChart
    stages: Tuple[StageReport, ...]
    final_residual: MultiMonomialSection
    shift: float

    @property
    def passed(self) -> bool:
        return all(stage.passed for stage in self.stages)

    def to_records(self) -> List[Dict]:
        return [
            {
                "sigma": s.sigma,
                "terms": len(s.extension.terms),
                "lhs": s.lhs,
                "rhs": s.rhs,
                "margin": s.margin,
                "tolerance": s.tolerance,
                "passed": s.passed,
            }
            for s in self.stages
        ]


def _term_sigma_f(chart: SncChart, term: MonomialSection) -> int:
    return sigma_f(chart, jumping_numbers(chart, chart.m1), term).value


def check_main_estimate(
    chart: SncChart,
    f: MultiMonomialSection,
    params: AuxParams,
    spec: Optional[QuadratureSpec] = None,
    tolerance_factor: float = 3.0,
) -> ExtensionReport:
    """
    Staged extension check from σ = σ_f(f) down to 1

    ψ is normalized for every σ in 1..σ_f (the most negative shift wins); each stage
    extends the terms of exact codimension σ, compares both sides and removes them from
    the residual.

    Args:
        chart: Valid chart
        f: Section in 𝓘(φ_L + m0ψ)
        params: Weight parameters (ℓ, δ)
        spec: Quadrature settings
        tolerance_factor: Multiple of the quadrature error tolerated on each margin

    Returns:
        ExtensionReport; empty when f ≡ 0 mod 𝓘(φ_L + m1ψ)
    """
    spec = spec or QuadratureSpec()
    levels = {term.exponents: _term_sigma_f(chart, term) for term in f.terms}
    top = max(levels.values(), default=0)

    shift = chart.psi.shift
    for sigma in range(1, top + 1):
        shift = min(shift, normalize_psi(chart, replace(params, sigma=sigma)).shift)
    normalized = chart.with_psi_shift(shift)

    residual = list(f.terms)
    stages: List[StageReport] = []
    for sigma in range(top, 0, -1):
        extension = MultiMonomialSection(
            minimal_extension(normalized, t) for t in residual if levels[t.exponents] == sigma
        )
        lhs, lhs_error = estimate_lhs_with_error(normalized, extension, sigma, params, spec)

        measure = lcv_limit(normalized, MultiMonomialSection(tuple(residual)), sigma, spec)
        if measure.kind is MeasureClass.DIVERGENT:
            raise LcExtensionError(f"lc-measure of the residual diverges at sigma={sigma}")
        rhs = (measure.value or 0.0) / sigma
        rhs_error = 0.0
        if measure.kind is MeasureClass.FINITE:
            diagnostics = measure.diagnostics
            rhs_error = (diagnostics.residual + diagnostics.quadrature_error) / sigma

        residual = [t for t in residual if levels[t.exponents] != sigma]
        stage = StageReport(
            sigma=sigma,
            extension=extension,
            lhs=lhs,
            rhs=rhs,
            tolerance=tolerance_factor * max(lhs_error, rhs_error),
            residual_after=MultiMonomialSection(tuple(residual)),
        )
        stages.append(stage)
        logger.info(
            "estimates.stage chart=%s sigma=%d lhs=%.8g rhs=%.8g margin=%.3e passed=%s",
            chart.name,
            sigma,
            lhs,
            rhs,
            stage.margin,
            stage.passed,
        )

    return ExtensionReport(
        chart=normalized,
        stages=tuple(stages),
        final_residual=MultiMonomialSection(tuple(residual)),
        shift=shift,
    )
