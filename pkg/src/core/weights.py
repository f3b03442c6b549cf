"""
Auxiliary weight families of the twisted ∂̄-estimates and their curvature budget

Every t-function lives on t < −e/ℓ^σ and is written with
    s = |t|,  L = log(ℓ^σ s) − 1 > 0.
For σ ≥ 2 the functions are composed with t = −|ψ|^σ.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from src.core.exceptions import DomainError, PreconditionError
from src.core.quadrature import smoothstep, smoothstep_prime, smoothstep_second
from src.core.snc_model import SncChart, eval_weight
from src.utils.logger import get_logger


logger = get_logger(__name__)

MARGIN_FLOOR = -1e-12


@dataclass(frozen=True)
class AuxParams:
    """
    Parameter bundle of the weight construction

    Attributes:
        eps: ε in (0, 1)
        ell: ℓ > 0
        sigma: σ ≥ 1
        delta: δ > 0, the normalization constant
        A, B: Cutoff scales, A > B > 1
        eps0: Slack of the cutoff derivative bound
        b: Metric twist ω_b = ω + b·(...)
        alpha: Cauchy–Schwarz splitting constant
    """

    eps: float = 0.01
    ell: float = 1.0
    sigma: int = 1
    delta: float = 1.0
    A: float = 4.0
    B: float = 2.0
    eps0: float = 0.0
    b: float = 1.0
    alpha: float = 1.0

    def __post_init__(self):
        errors = []
        if not 0.0 < self.eps < 1.0:
            errors.append(f"eps must lie in (0, 1), got {self.eps}")
        if self.ell <= 0:
            errors.append(f"ell must be positive, got {self.ell}")
        if int(self.sigma) != self.sigma or self.sigma < 1:
            errors.append(f"sigma must be an integer ≥ 1, got {self.sigma}")
        if self.delta <= 0:
            errors.append(f"delta must be positive, got {self.delta}")
        if not self.A > self.B > 1.0:
            errors.append(f"need A > B > 1, got A={self.A}, B={self.B}")
        if self.eps0 < 0 or self.b < 0:
            errors.append("eps0 and b must be non-negative")
        if self.alpha <= 0:
            errors.append(f"alpha must be positive, got {self.alpha}")
        if errors:
            raise PreconditionError("; ".join(errors))
        object.__setattr__(self, "sigma", int(self.sigma))

    @property
    def e_sigma(self) -> float:
        return math.exp(1.0 / self.sigma)

    @property
    def t_max(self) -> float:
        """Supremum of the t-domain, −e/ℓ^σ"""
        return -math.e / self.ell**self.sigma

    @property
    def psi_max(self) -> float:
        """Supremum of admissible ψ, −e_σ/ℓ"""
        return -self.e_sigma / self.ell


# ----------------------------------------------------------------------------
# Weight functions
# ----------------------------------------------------------------------------


class AuxWeights:
    """
    ν̃, η̃_ε, λ̃_ε, Γ, μ̃, Λ with hand-derived derivatives

    t-functions accept scalars or numpy arrays; μ̃ and Λ take ψ.
    """

    def __init__(self, params: AuxParams):
        self.params = params
        self._log_ell_sigma = params.sigma * math.log(params.ell)

    # -- helpers ------------------------------------------------------------

    def _s_and_L(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t >= self.params.t_max):
            bad = float(np.max(t))
            raise DomainError(f"t={bad!r} outside the domain t < {self.params.t_max!r}", bad)
        s = -t
        return s, self._log_ell_sigma + np.log(s) - 1.0

    def L(self, t):
        return self._s_and_L(t)[1]

    # -- ν̃ ---------------------------------------------------------------

    def nu(self, t):
        """ν̃ = −log L, i.e. e^{ν̃} = 1/log|ℓ^σ t/e|"""
        return -np.log(self.L(t))

    def nu_p(self, t):
        s, L = self._s_and_L(t)
        return 1.0 / (s * L)

    def nu_pp(self, t):
        s, L = self._s_and_L(t)
        return 1.0 / (s * s * L) + 1.0 / (s * s * L * L)

    # -- η̃_ε --------------------------------------------------------------

    def eta(self, t):
        """η̃_ε = |t|^{1−ε} L"""
        s, L = self._s_and_L(t)
        return s ** (1.0 - self.params.eps) * L

    def log_eta_p(self, t):
        s, L = self._s_and_L(t)
        return -(1.0 - self.params.eps) / s - 1.0 / (s * L)

    def log_eta_pp(self, t):
        s, L = self._s_and_L(t)
        return -(1.0 - self.params.eps) / s**2 - 1.0 / (s**2 * L) - 1.0 / (s**2 * L**2)

    def eta_p(self, t):
        return self.eta(t) * self.log_eta_p(t)

    def eta_pp(self, t):
        lp = self.log_eta_p(t)
        return self.eta(t) * (self.log_eta_pp(t) + lp * lp)

    # -- λ̃_ε and Γ ----------------------------------------------------------

    def lam(self, t):
        """λ̃_ε = η̃_ε (1 − ε + 1/L)² / (2ε/L + 1/L²)"""
        s, L = self._s_and_L(t)
        eps = self.params.eps
        return self.eta(t) * (1.0 - eps + 1.0 / L) ** 2 / (2.0 * eps / L + 1.0 / L**2)

    def gamma(self, t):
        """Target Γ = ε(1−ε) / (e^{ν̃} |t|^{1+ε})"""
        s, L = self._s_and_L(t)
        eps = self.params.eps
        return eps * (1.0 - eps) * L / s ** (1.0 + eps)

    def gamma_combination(self, t):
        """η̃ν̃″ − η̃″ − (η̃′)²/λ̃"""
        return self.eta(t) * self.nu_pp(t) - self.eta_pp(t) - self.eta_p(t) ** 2 / self.lam(t)

    def gamma_good_form(self, t):
        """η̃ (ν̃″ − (log η̃)″ − (1 + η̃/λ̃) ((log η̃)′)²)"""
        eta = self.eta(t)
        lp = self.log_eta_p(t)
        return eta * (
            self.nu_pp(t) - self.log_eta_pp(t) - (1.0 + eta / self.lam(t)) * lp * lp
        )

    # -- ψ-functions (σ-family) ---------------------------------------------

    def t_of_psi(self, psi):
        return -np.abs(np.asarray(psi, dtype=float)) ** self.params.sigma

    def _log_ell_psi(self, psi):
        abs_psi = np.abs(np.asarray(psi, dtype=float))
        y = math.log(self.params.ell) + np.log(abs_psi)
        if np.any(y <= 1.0 / self.params.sigma):
            bad = float(np.min(abs_psi))
            raise DomainError(f"|ψ|={bad!r} outside the domain ψ < {self.params.psi_max!r}", bad)
        return abs_psi, y

    def mu(self, psi):
        """μ̃(ψ) with e^{−μ̃} = η̃_ε(−|ψ|^σ) · (log|ℓψ|)³"""
        abs_psi, y = self._log_ell_psi(psi)
        return -(np.log(self.eta(self.t_of_psi(psi))) + 3.0 * np.log(y))

    def mu_p(self, psi):
        """dμ̃/dψ; positive, equal to (σ(1−ε) + 1/log(ℓ|ψ|/e_σ) + 3/log|ℓψ|)/|ψ|"""
        abs_psi, y = self._log_ell_psi(psi)
        return self.mu_p_scaled(y) / abs_psi

    def mu_p_scaled(self, log_ell_psi):
        """|ψ| · μ̃′(ψ) as a function of y = log(ℓ|ψ|)"""
        sigma = self.params.sigma
        y = np.asarray(log_ell_psi, dtype=float)
        return sigma * (1.0 - self.params.eps) + 1.0 / (y - 1.0 / sigma) + 3.0 / y

    def Lambda(self, psi):
        """Λ(ψ) = (1 − ε + 2/(σ log(ℓ|ψ|/e_σ))) η_ε σ(σ−1)/|ψ|², η_ε = η̃_ε(−|ψ|^σ)"""
        abs_psi, y = self._log_ell_psi(psi)
        return self.Lambda_scaled(y) * self.eta(self.t_of_psi(psi)) / abs_psi**2

    def Lambda_scaled(self, log_ell_psi):
        """|ψ|² Λ(ψ) / η_ε as a function of y = log(ℓ|ψ|)"""
        sigma = self.params.sigma
        y = np.asarray(log_ell_psi, dtype=float)
        return (1.0 - self.params.eps + 2.0 / (sigma * (y - 1.0 / sigma))) * sigma * (sigma - 1)

    def psi_derivative_gap(self, psi):
        """(ν̃′ − (log η̃)′)(−|ψ|^σ) · σ|ψ|^{σ−1}, the ∂∂̄ψ coefficient per unit η_ε"""
        abs_psi, y = self._log_ell_psi(psi)
        sigma = self.params.sigma
        return sigma * (1.0 - self.params.eps) / abs_psi + 2.0 / (abs_psi * (y - 1.0 / sigma))


def build_aux(params: AuxParams) -> AuxWeights:
    """
    Build the auxiliary weight family for a parameter bundle

    Args:
        params: Validated parameters

    Returns:
        AuxWeights evaluating on t < −e/ℓ^σ
    """
    return AuxWeights(params)


# ----------------------------------------------------------------------------
# Cutoff
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class CutoffProfile:
    """
    θ ≡ 1 on [0, 1/A], θ ≡ 0 on [1/B, ∞), quintic smoothstep in between

    sup|θ′| and sup|θ″| are measured on the transition interval at construction.
    """

    A: float
    B: float
    eps0: float = 0.0
    sup_prime: float = field(init=False)
    sup_second: float = field(init=False)

    def __post_init__(self):
        if not self.A > self.B > 1.0:
            raise PreconditionError(f"cutoff needs A > B > 1, got A={self.A}, B={self.B}")
        if self.eps0 < 0:
            raise PreconditionError(f"eps0 must be non-negative, got {self.eps0}")
        x = np.linspace(0.0, 1.0, 20001)
        width = self.width
        object.__setattr__(self, "sup_prime", float(np.max(np.abs(smoothstep_prime(x)))) / width)
        object.__setattr__(
            self, "sup_second", float(np.max(np.abs(smoothstep_second(x)))) / width**2
        )

    @property
    def width(self) -> float:
        """Length of the transition interval, (A − B)/(AB)"""
        return 1.0 / self.B - 1.0 / self.A

    @property
    def m_theta_prime(self) -> float:
        """M_θ′ built from the measured slope: (sup|θ′| + ε₀)²"""
        return (self.sup_prime + self.eps0) ** 2

    @property
    def c_theta_second(self) -> float:
        return self.sup_second


def cutoff(profile: CutoffProfile, t) -> Tuple[Any, Any, Any]:
    """
    Evaluate θ, θ′, θ″

    Args:
        profile: Cutoff profile
        t: Point(s) in [0, ∞)

    Returns:
        (θ, θ′, θ″)
    """
    t = np.asarray(t, dtype=float)
    x = (t - 1.0 / profile.A) / profile.width
    inside = (x > 0.0) & (x < 1.0)
    theta = 1.0 - smoothstep(x)
    d1 = np.where(inside, -smoothstep_prime(x) / profile.width, 0.0)
    d2 = np.where(inside, -smoothstep_second(x) / profile.width**2, 0.0)
    return theta, d1, d2


# ----------------------------------------------------------------------------
# Normalization
# ----------------------------------------------------------------------------


def normalisation_constant() -> float:
    """
    The constant a > e with 2/(a log(a/e)) + 1/a = 1

    Returns:
        a ≈ 4.6805
    """

    def residual(a: float) -> float:
        return 2.0 / (a * math.log(a / math.e)) + 1.0 / a - 1.0

    return brentq(residual, math.e * (1.0 + 1e-9), 100.0, xtol=1e-14, rtol=4 * np.finfo(float).eps)


def normalization_bound(params: AuxParams, abs_psi):
    """
    Left side of the normalization requirement at |ψ|

    σ = 1: 2/(|ψ| log(ℓ|ψ|/e)) + 1/|ψ|
    σ ≥ 2: 5/(|ψ| log(ℓ|ψ|/e_σ)) + σ/|ψ|
    """
    x = np.asarray(abs_psi, dtype=float)
    log_term = np.log(params.ell * x / params.e_sigma)
    if params.sigma == 1:
        return 2.0 / (x * log_term) + 1.0 / x
    return 5.0 / (x * log_term) + params.sigma / x


def normalization_threshold(params: AuxParams) -> float:
    """Smallest |ψ| meeting the normalization requirement"""
    lower = params.e_sigma / params.ell

    def excess(x: float) -> float:
        return float(normalization_bound(params, x)) - params.delta

    hi = lower * 2.0
    while excess(hi) > 0:
        hi *= 2.0
    lo = lower * (1.0 + 1e-12)
    if excess(lo) <= 0:
        # δ so large that the bound holds right up to the pole
        return lo
    root = brentq(excess, lo, hi, xtol=1e-15 * hi, rtol=4 * np.finfo(float).eps)
    # land on the admissible side of the root
    return root * (1.0 + 1e-12)


@dataclass(frozen=True)
class NormalizationResult:
    chart: SncChart
    shift: float
    threshold: float
    verified: bool
    worst_bound: float


def _boundary_psi(chart: SncChart, points: int = 64) -> np.ndarray:
    """ψ on a grid of the outer shell of the polydisc, where |ψ| is smallest"""
    shells = np.geomspace(1.0, 1e-3, points)
    values = []
    for scale in shells:
        for j in range(chart.n):
            moduli = [r * r for r in chart.radii]
            moduli[j] *= scale
            values.append(eval_weight(chart.psi, moduli))
    return np.asarray(values)


def normalize_psi(chart: SncChart, params: AuxParams) -> NormalizationResult:
    """
    Decrease psi.shift until ψ < −e_σ/ℓ and the normalization bound ≤ δ on the polydisc

    Args:
        chart: Model chart
        params: Weight parameters

    Returns:
        NormalizationResult with the adjusted chart and the shift used
    """
    threshold = normalization_threshold(params)
    shift = min(chart.psi.shift, -threshold)
    adjusted = chart.with_psi_shift(shift)

    psi = _boundary_psi(adjusted)
    psi = psi[np.isfinite(psi)]
    bound = normalization_bound(params, np.abs(psi))
    worst = float(np.max(bound)) if bound.size else 0.0
    verified = bool(np.all(psi < params.psi_max)) and worst <= params.delta * (1.0 + 1e-9)

    logger.info(
        "weights.normalize chart=%s sigma=%d delta=%g shift=%.10g verified=%s",
        chart.name,
        params.sigma,
        params.delta,
        shift,
        verified,
    )
    return NormalizationResult(adjusted, shift, threshold, verified, worst)


# ----------------------------------------------------------------------------
# Budget checks
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class InequalityMargin:
    """Worst slack of one inequality over a grid; negative slack is a violation"""

    name: str
    worst_margin: float
    witness: Optional[float]
    points: int
    passed: bool


@dataclass(frozen=True)
class BudgetReport:
    params: AuxParams
    rows: Tuple[InequalityMargin, ...]

    @property
    def passed(self) -> bool:
        return all(row.passed for row in self.rows)

    @property
    def failures(self) -> List[InequalityMargin]:
        return [row for row in self.rows if not row.passed]

    def to_records(self) -> List[Dict[str, Any]]:
        return [
            {
                "inequality": r.name,
                "worst_margin": r.worst_margin,
                "witness": r.witness,
                "points": r.points,
                "passed": r.passed,
            }
            for r in self.rows
        ]


def _margin_row(name: str, margins: np.ndarray, witnesses: np.ndarray, strict: bool = False):
    if margins.size == 0:
        return InequalityMargin(name, math.inf, None, 0, True)
    k = int(np.argmin(margins))
    worst = float(margins[k])
    passed = worst > 0 if strict else worst >= MARGIN_FLOOR
    return InequalityMargin(name, worst, float(witnesses[k]), int(margins.size), passed)


def budget_grid(params: AuxParams, abs_psi_min: float, points: int, decades: float) -> np.ndarray:
    """t-grid −|ψ|^σ with |ψ| log-spaced over [abs_psi_min, abs_psi_min · 10^decades]"""
    abs_psi = np.geomspace(abs_psi_min, abs_psi_min * 10.0**decades, points)
    return -(abs_psi**params.sigma)


def support_log_grid(params: AuxParams, log_abs_psi_min: float, points: int) -> np.ndarray:
    """log|ψ| on supp θ′_ε, i.e. B ≤ |ψ|^{σε} ≤ A, restricted to the checked domain"""
    scale = params.sigma * params.eps
    lo = max(math.log(params.B) / scale, log_abs_psi_min)
    hi = math.log(params.A) / scale
    if lo > hi:
        return np.empty(0)
    return np.linspace(lo, hi, points)


def budget_check(
    params: AuxParams, t_grid: Sequence[float], support_points: int = 512
) -> BudgetReport:
    """
    Check the curvature budget pointwise

    (i)   0 ≤ (ν̃′ − (log η̃_ε)′)∘ψ · σ|ψ|^{σ−1} ≤ δ
    (ii)  λ̃_ε > 0
    (iii) (η̃ + λ̃) e^{ν̃} ≤ |t|^{1−ε}((log|ℓ^σ t|)² + 1)
    (iv)  μ̃′ ≤ (σ+1)/|ψ| on supp θ′_ε
    (v)   Λ ≤ 2σ(σ−1) η_ε/|ψ|² on supp θ′_ε

    Args:
        params: Weight parameters
        t_grid: Points t = −|ψ|^σ in the domain
        support_points: Grid size on supp θ′_ε

    Returns:
        BudgetReport with the worst slack and its witness t (log|ψ| for iv and v)
    """
    t = np.asarray(t_grid, dtype=float)
    weights = build_aux(params)
    sigma, eps = params.sigma, params.eps
    s, L = weights._s_and_L(t)
    abs_psi = s ** (1.0 / sigma)

    gap = weights.psi_derivative_gap(-abs_psi)
    # λ̃ e^{ν̃} and η̃ e^{ν̃} divided by |t|^{1−ε}
    lam_scaled = (1.0 - eps + 1.0 / L) ** 2 / (2.0 * eps / L + 1.0 / L**2)
    lhs = 1.0 + lam_scaled
    rhs = (L + 1.0) ** 2 + 1.0

    support = support_log_grid(params, float(np.min(np.log(abs_psi))), support_points)
    y_support = math.log(params.ell) + support

    rows = [
        _margin_row("gap_lower", gap, t),
        _margin_row("gap_upper", params.delta - gap, t),
        _margin_row("lambda_positive", lam_scaled, t, strict=True),
        _margin_row("weight_upper", (rhs - lhs) / rhs, t),
        _margin_row("mu_prime", (sigma + 1.0) - weights.mu_p_scaled(y_support), support),
        _margin_row(
            "Lambda", 2.0 * sigma * (sigma - 1) - weights.Lambda_scaled(y_support), support
        ),
    ]
    report = BudgetReport(params, tuple(rows))
    for row in report.failures:
        logger.warning(
            "weights.budget.violation name=%s margin=%.3e witness=%s",
            row.name,
            row.worst_margin,
            row.witness,
        )
    return report


# ----------------------------------------------------------------------------
# Identities and auxiliary bounds
# ----------------------------------------------------------------------------


def gamma_identity_error(params: AuxParams, t_grid: Sequence[float]) -> Dict[str, float]:
    """Maximum relative deviation between the three expressions of Γ"""
    weights = build_aux(params)
    t = np.asarray(t_grid, dtype=float)
    target = weights.gamma(t)
    combination = weights.gamma_combination(t)
    good = weights.gamma_good_form(t)
    return {
        "combination": float(np.max(np.abs(combination - target) / np.abs(target))),
        "good_form": float(np.max(np.abs(good - target) / np.abs(target))),
    }


def gamma_second_line_error(params: AuxParams, t_grid: Sequence[float]) -> float:
    """
    Relative deviation of ε² e^{−ν̃} / (|t|^{2+2ε} Γ) from (ε/(1−ε)) / |t|^{1+ε}

    The two agree identically for the chosen λ̃.
    """
    weights = build_aux(params)
    t = np.asarray(t_grid, dtype=float)
    s = -t
    eps = params.eps
    lhs = eps**2 * np.exp(-weights.nu(t)) / (s ** (2.0 + 2.0 * eps) * weights.gamma(t))
    rhs = (eps / (1.0 - eps)) / s ** (1.0 + eps)
    return float(np.max(np.abs(lhs - rhs) / rhs))


@dataclass(frozen=True)
class XlogxReport:
    eps: float
    s: float
    worst_ratio: float
    argmax: float
    peak_x: float
    peak_ratio: float

    @property
    def passed(self) -> bool:
        return self.worst_ratio <= 1.0 + 1e-12


def xlogx_bound_check(x_grid: Optional[Sequence[float]], eps: float, s: float) -> XlogxReport:
    """
    x^ε |log x|^s ≤ s^s / (e^s ε^s) on (0, 1)

    Ratios are computed in log space; the peak x = e^{−s/ε} is always evaluated.

    Args:
        x_grid: Points in (0, 1); a log grid is used when None
        eps: ε > 0
        s: s ≥ 0 (0⁰ = 1)

    Returns:
        XlogxReport with the worst ratio LHS/RHS
    """
    if eps <= 0 or s < 0:
        raise PreconditionError(f"need eps > 0 and s ≥ 0, got eps={eps}, s={s}")

    if x_grid is None:
        log_x = -np.geomspace(1e-12, max(1e4, 10.0 * s / eps), 20001)
    else:
        x = np.asarray(x_grid, dtype=float)
        if np.any((x <= 0) | (x >= 1)):
            raise PreconditionError("x_grid must lie in (0, 1)")
        log_x = np.log(x)

    peak_log_x = -s / eps if s > 0 else -1e-300
    log_x = np.append(log_x, peak_log_x)

    def log_ratio(lx: np.ndarray) -> np.ndarray:
        out = eps * lx
        if s > 0:
            out = out + s * np.log(-lx) + s + s * math.log(eps) - s * math.log(s)
        return out

    lr = log_ratio(log_x)
    k = int(np.argmax(lr))
    return XlogxReport(
        eps=eps,
        s=s,
        worst_ratio=float(np.exp(lr[k])),
        argmax=float(np.exp(log_x[k])),
        peak_x=float(np.exp(peak_log_x)),
        peak_ratio=float(np.exp(lr[-1])),
    )


def rescaled_estimate_weight_error(delta: float, psi0: Sequence[float]) -> float:
    """
    With ℓ = δ and ψ = ψ₀ − a/δ, compare the estimate weight written in ψ with its
    δ-rescaled form δ e^{a/δ} e^{−ψ₀} / (|δψ₀ − a|((log|δψ₀ − a|)² + 1))

    Returns:
        Maximum relative deviation over the ψ₀-grid (ψ₀ ≤ 0)
    """
    a = normalisation_constant()
    psi0 = np.asarray(psi0, dtype=float)
    if np.any(psi0 > 0) or delta <= 0:
        raise PreconditionError("need ψ₀ ≤ 0 and δ > 0")
    psi = psi0 - a / delta
    direct = np.exp(-psi) / (np.abs(psi) * (np.log(np.abs(delta * psi)) ** 2 + 1.0))
    w = np.abs(delta * psi0 - a)
    rescaled = delta * math.exp(a / delta) * np.exp(-psi0) / (w * (np.log(w) ** 2 + 1.0))
    return float(np.max(np.abs(direct - rescaled) / np.abs(direct)))
