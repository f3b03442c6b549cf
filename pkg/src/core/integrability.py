"""
Weighted-L² hypothesis classes and limit integrals of the continuation lemmas
and of the Hörmander step
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence

import numpy as np
from scipy import integrate
from scipy.special import gamma, gammaincc

from src.core.exceptions import PreconditionError
from src.core.quadrature import richardson
from src.core.snc_model import SncChart
from src.utils.logger import get_logger


logger = get_logger(__name__)


@dataclass(frozen=True)
class MembershipResult:
    """
    Finiteness of ∫_{|z|<r0} |z|^{2a} |log|z|²|^{2p−s} dλ

    Attributes:
        finite: Closed-form decision
        value: Closed-form value (inf when divergent)
        quadrature: Independent numerical value (inf when quadrature reports divergence)
        agrees: Quadrature confirms the decision (and the value when finite)
    """

    finite: bool
    value: float
    quadrature: float
    agrees: bool


def _radial_power_integral(a: int, q_minus_1: float, v0: float) -> float:
    """π ∫_{v0}^∞ v^{q−1} e^{−(a+1)v} dv in closed form"""
    k = a + 1
    q = q_minus_1 + 1.0
    if k == 0:
        return math.pi * v0**q / (-q) if q < 0 else math.inf
    if q > 0:
        return math.pi * k ** (-q) * gamma(q) * gammaincc(q, k * v0)
    value, _ = integrate.quad(lambda v: v**q_minus_1 * math.exp(-k * v), v0, np.inf, limit=200)
    return math.pi * value


def _radial_power_quadrature(
    a: int, q_minus_1: float, v0: float, max_segments: int = 4096
) -> float:
    """Same integral by quadrature in w = log v, summed over unit segments"""
    k = a + 1

    def integrand(w: float) -> float:
        exponent = (q_minus_1 + 1.0) * w
        if k:
            exponent -= k * math.exp(min(w, 700.0))
        return math.exp(min(exponent, 700.0))

    parts: List[float] = []
    lo = math.log(v0)
    for step in range(max_segments):
        value, _ = integrate.quad(integrand, lo + step, lo + step + 1, limit=200)
        if value > 1e250:
            return math.inf
        parts.append(value)
        if step >= 8 and value <= 1e-13 * math.fsum(parts):
            return math.pi * math.fsum(parts)
    return math.inf


def log_weight_membership(a: int, p: float, s: float, r0: float = 0.5) -> MembershipResult:
    """
    Decide whether |z|^a |log|z|²|^p lies in L²(|log|z|²|^{−s}) near the origin

    a = −1 encodes the singular kernel 1/|z|².

    Args:
        a: Vanishing order, a ≥ −1
        p: Log power of the model function
        s: Log power of the weight
        r0: Disc radius in (0, 1)

    Returns:
        MembershipResult
    """
    if a < -1:
        raise PreconditionError(f"vanishing order must be ≥ −1, got {a}")
    if not 0.0 < r0 < 1.0:
        raise PreconditionError(f"r0 must lie in (0, 1), got {r0}")

    v0 = -2.0 * math.log(r0)
    q_minus_1 = 2.0 * p - s
    finite = a + 1 > 0 or q_minus_1 < -1.0
    value = _radial_power_integral(a, q_minus_1, v0) if finite else math.inf
    numeric = _radial_power_quadrature(a, q_minus_1, v0)

    if finite:
        agrees = math.isfinite(numeric) and abs(numeric - value) <= 1e-6 * max(abs(value), 1e-300)
    else:
        agrees = not math.isfinite(numeric)
    if not agrees:
        logger.warning(
            "integrability.membership.disagree a=%s p=%s s=%s value=%s quadrature=%s",
            a,
            p,
            s,
            value,
            numeric,
        )
    return MembershipResult(finite, value, numeric, agrees)


@dataclass(frozen=True)
class LogPoleResult:
    value: float
    eps: tuple
    values: tuple
    residual: float


def log_pole_limit(
    r0: float, eps_schedule: Sequence[float] = (0.2, 0.1, 0.05, 0.025)
) -> LogPoleResult:
    """
    lim_{ε→0⁺} ε ∫_{|z|<r0} dλ / (|z|² |log|z|²|^{1+2ε})

    Each integral is computed in v = log u, u = −log|z|², then the sequence is
    extrapolated; the exact limit is π/2 for every r0.
    """
    if not 0.0 < r0 < 1.0:
        raise PreconditionError(f"r0 must lie in (0, 1), got {r0}")
    u0 = -2.0 * math.log(r0)
    start = math.log(u0)

    values = []
    for eps in eps_schedule:
        integral, _ = integrate.quad(lambda v: math.exp(-2.0 * eps * v), start, np.inf)
        values.append(eps * math.pi * integral)

    value, residual, _ = richardson(eps_schedule, values)
    logger.debug("integrability.log_pole r0=%g value=%.10g residual=%.3e", r0, value, residual)
    return LogPoleResult(value, tuple(eps_schedule), tuple(values), residual)


def _exact(x: float) -> Fraction:
    return Fraction(repr(float(x)))


def continuation_ladder(s: float, delta: float) -> List[float]:
    """
    Exponents s, s − 1 + δ, s − 2(1 − δ), … down to the first value ≤ 1

    Args:
        s: Starting exponent, s > 1
        delta: Split parameter in (0, 1)

    Returns:
        Exponent sequence; its length minus one is ⌈(s − 1)/(1 − δ)⌉

    Raises:
        PreconditionError: s ≤ 1, δ = 0, or δ ≥ 1 (the ladder would not descend)
    """
    if s <= 1:
        raise PreconditionError(f"s must exceed 1, got {s}")
    if delta == 0:
        raise PreconditionError("delta must be positive: the split needs the exponent 1 + δ > 1")
    if delta >= 1:
        raise PreconditionError(
            f"non-decreasing ladder: s − 1 + δ ≥ s for δ = {delta}; need δ < 1 for descent"
        )
    if delta < 0:
        raise PreconditionError(f"delta must lie in (0, 1), got {delta}")

    step = 1 - _exact(delta)
    current = _exact(s)
    ladder = [current]
    while current > 1:
        current -= step
        ladder.append(current)
    return [float(x) for x in ladder]


@dataclass(frozen=True)
class LadderStep:
    """One descent s_k → s_k − 1 + δ of the continuation argument"""

    exponent: float
    next_exponent: float
    split_exponent: float
    auxiliary_finite: bool
    auxiliary_value: float


def ladder_side_conditions(s: float, delta: float, r0: float = 0.5) -> List[LadderStep]:
    """
    Side conditions of each ladder step

    The Cauchy–Schwarz split pairs |log|z|²|^{−(1+δ)}/|z|² (finite for δ > 0) with the
    next weight exponent s_k − 1 + δ.
    """
    ladder = continuation_ladder(s, delta)
    auxiliary = log_weight_membership(-1, 0.0, 1.0 + delta, r0)
    return [
        LadderStep(
            exponent=current,
            next_exponent=following,
            split_exponent=1.0 + delta,
            auxiliary_finite=auxiliary.finite,
            auxiliary_value=auxiliary.value,
        )
        for current, following in zip(ladder[:-1], ladder[1:])
    ]


@dataclass(frozen=True)
class HormanderReport:
    """
    Lower curvature bound of the weight log(|ψ|^{σ−σε} (log|ℓψ|)³)

    Attributes:
        c_prime: Bound c′ on the ∂ψ∧∂̄ψ term in ω_b-norm
        witness_psi: ψ where c′ is attained, or where the weight breaks down
        ddbar_coefficient_max: Largest coefficient of ∂∂̄ψ, which vanishes off the divisor
        annihilated: ∂∂̄ψ = 0 off the divisor (always true for diagonal ψ)
        passed: The bound is finite on the whole grid
        points: Grid size
    """

    c_prime: float
    witness_psi: Optional[float]
    ddbar_coefficient_max: float
    annihilated: bool
    passed: bool
    points: int


def hormander_weight_check(
    chart: SncChart,
    sigma: int,
    eps: float,
    ell: float = 1.0,
    b: float = 1.0,
    shrink: float = 1.0,
    points: int = 2000,
    decades: float = 6.0,
) -> HormanderReport:
    """
    Bound the negative curvature contribution of log(|ψ|^{σ−σε} (log|ℓψ|)³) on the chart

    Writing F(ψ) for the weight, i∂∂̄F = F′ i∂∂̄ψ + F″ i∂ψ∧∂̄ψ with
    |F″| |∂ψ|²_{ω_b} ≤ (σ(1−ε) + 3/L + 3/L²)/b, L = log(ℓ|ψ|). The i∂∂̄ψ term is
    annihilated off the divisor.

    Args:
        chart: Diagonal chart
        sigma: σ ≥ 1
        eps: ε in (0, 1)
        ell: ℓ > 0
        b: Twist of ω_b, positive
        shrink: Scale factor (≤ 1) applied to the polydisc radii
        points: Grid size
        decades: Range of |ψ| covered above its minimum

    Returns:
        HormanderReport
    """
    if sigma < 1 or not 0.0 < eps < 1.0 or ell <= 0 or b <= 0:
        raise PreconditionError("need sigma ≥ 1, 0 < eps < 1, ell > 0, b > 0")
    if not 0.0 < shrink <= 1.0:
        raise PreconditionError(f"shrink must lie in (0, 1], got {shrink}")

    if all(v == 0 for v in chart.nu):
        return HormanderReport(0.0, None, 0.0, True, True, 0)

    starts = [-2.0 * math.log(r * shrink) for r in chart.radii]
    abs_psi_min = -chart.psi.shift + sum(float(v) * u for v, u in zip(chart.nu, starts))
    abs_psi = abs_psi_min * np.geomspace(1.0, 10.0**decades, points)
    L = np.log(ell * abs_psi)

    if np.any(L <= 0):
        k = int(np.argmin(L))
        logger.warning("integrability.hormander.unbounded witness_psi=%g", -abs_psi[k])
        return HormanderReport(math.inf, float(-abs_psi[k]), math.inf, True, False, points)

    a = sigma * (1.0 - eps)
    bound = (a + 3.0 / L + 3.0 / L**2) / b
    ddbar = a / abs_psi + 3.0 / (abs_psi * L)
    k = int(np.argmax(bound))
    return HormanderReport(
        c_prime=float(bound[k]),
        witness_psi=float(-abs_psi[k]),
        ddbar_coefficient_max=float(np.max(ddbar)),
        annihilated=True,
        passed=True,
        points=points,
    )
