"""
Unit tests for the auxiliary weights and their curvature budget
"""

import math

import numpy as np
import pytest

from src.core.exceptions import DomainError, PreconditionError
from src.core.snc_model import sample_battery
from src.core.weights import (
    AuxParams,
    CutoffProfile,
    budget_check,
    budget_grid,
    build_aux,
    cutoff,
    gamma_identity_error,
    gamma_second_line_error,
    normalisation_constant,
    normalization_bound,
    normalization_threshold,
    normalize_psi,
    rescaled_estimate_weight_error,
    xlogx_bound_check,
)


def central_difference(fn, x, h):
    return (fn(x + h) - fn(x - h)) / (2.0 * h)


@pytest.fixture
def disc():
    return next(chart for chart in sample_battery() if chart.name == "disc-basic")


class TestAuxParams:
    """Test parameter validation"""

    def test_defaults(self):
        """Test the default bundle is valid"""
        params = AuxParams()
        assert params.t_max == pytest.approx(-math.e)
        assert params.psi_max == pytest.approx(-math.e)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"eps": 0.0},
            {"eps": 1.0},
            {"ell": 0.0},
            {"sigma": 0},
            {"sigma": 1.5},
            {"delta": -1.0},
            {"A": 2.0, "B": 4.0},
            {"alpha": 0.0},
        ],
    )
    def test_invalid(self, kwargs):
        """Test each out-of-range parameter is rejected"""
        with pytest.raises(PreconditionError):
            AuxParams(**kwargs)

    def test_psi_max_depends_on_sigma(self):
        """Test ψ < −e^{1/σ}/ℓ"""
        params = AuxParams(sigma=2, ell=0.5)
        assert params.psi_max == pytest.approx(-2.0 * math.exp(0.5))
        assert params.t_max == pytest.approx(-4.0 * math.e)


class TestAuxWeights:
    """Test the weight functions and their closed-form derivatives"""

    def test_domain(self):
        """Test evaluation at t ≥ −e/ℓ^σ raises DomainError with the offending t"""
        weights = build_aux(AuxParams())
        with pytest.raises(DomainError) as exc:
            weights.nu(-1.0)
        assert exc.value.t == -1.0

    def test_psi_domain(self):
        """Test μ̃ needs ψ below −e_σ/ℓ"""
        weights = build_aux(AuxParams(sigma=2))
        with pytest.raises(DomainError):
            weights.mu(-1.2)

    def test_nu_closed_form(self):
        """Test e^{ν̃} = 1/log|t/e| for ℓ = 1"""
        weights = build_aux(AuxParams())
        t = -50.0
        assert math.exp(weights.nu(t)) == pytest.approx(1.0 / math.log(50.0 / math.e))

    def test_positivity(self):
        """Test η̃_ε > 0 and λ̃_ε > 0 on the domain"""
        weights = build_aux(AuxParams(eps=0.3, ell=0.5, sigma=2))
        t = -np.geomspace(1.01 * 4.0 * math.e, 1e8, 200)
        assert np.all(weights.eta(t) > 0)
        assert np.all(weights.lam(t) > 0)

    @pytest.mark.parametrize("name, derivative", [
        ("nu", "nu_p"),
        ("nu_p", "nu_pp"),
        ("eta", "eta_p"),
        ("eta_p", "eta_pp"),
    ])
    def test_t_derivatives(self, name, derivative):
        """Test first and second derivatives against central differences"""
        weights = build_aux(AuxParams(eps=0.1, ell=0.8))
        fn = getattr(weights, name)
        exact = float(getattr(weights, derivative)(-20.0))
        assert exact == pytest.approx(float(central_difference(fn, -20.0, 1e-4)), rel=1e-6)

    def test_log_eta_derivatives(self):
        """Test (log η̃)′ and (log η̃)″"""
        weights = build_aux(AuxParams(eps=0.1))

        def log_eta(t):
            return np.log(weights.eta(t))

        assert float(weights.log_eta_p(-30.0)) == pytest.approx(
            float(central_difference(log_eta, -30.0, 1e-4)), rel=1e-6
        )
        assert float(weights.log_eta_pp(-30.0)) == pytest.approx(
            float(central_difference(weights.log_eta_p, -30.0, 1e-4)), rel=1e-6
        )

    def test_mu_derivative(self):
        """Test μ̃′ against a central difference in ψ"""
        weights = build_aux(AuxParams(eps=0.05, sigma=2))
        exact = float(weights.mu_p(-20.0))
        assert exact > 0
        assert exact == pytest.approx(float(central_difference(weights.mu, -20.0, 1e-4)), rel=1e-6)

    def test_lambda_limit(self):
        """Test λ̃_ε → η̃ (L + 1)² as ε → 0⁺"""
        t = -40.0
        small = build_aux(AuxParams(eps=1e-9))
        L = float(small.L(t))
        assert float(small.lam(t)) == pytest.approx(float(small.eta(t)) * (L + 1.0) ** 2, rel=1e-6)


class TestGammaIdentities:
    """Test the three expressions of Γ"""

    @pytest.mark.parametrize("sigma", [1, 2, 3])
    @pytest.mark.parametrize("eps", [1e-3, 0.05, 0.3])
    def test_identity(self, sigma, eps):
        """Test the defining combination and the rewritten form both equal Γ"""
        params = AuxParams(eps=eps, ell=0.5, sigma=sigma)
        t = -np.geomspace(2.0 * abs(params.t_max), 1e9, 64)
        errors = gamma_identity_error(params, t)
        assert errors["combination"] < 1e-8
        assert errors["good_form"] < 1e-8

    @pytest.mark.parametrize("eps", [1e-3, 0.05, 0.3])
    def test_second_line(self, eps):
        """Test ε² e^{−ν̃}/(|t|^{2+2ε} Γ) = (ε/(1−ε))/|t|^{1+ε}"""
        params = AuxParams(eps=eps)
        t = -np.geomspace(3.0, 1e9, 64)
        assert gamma_second_line_error(params, t) < 1e-10


class TestNormalization:
    """Test the normalization constant and ψ normalization"""

    def test_constant(self):
        """Test a ≈ 4.6805 solves 2/(a log(a/e)) + 1/a = 1"""
        a = normalisation_constant()
        assert a == pytest.approx(4.6805, abs=5e-4)
        assert 2.0 / (a * math.log(a / math.e)) + 1.0 / a == pytest.approx(1.0, abs=1e-12)

    def test_threshold_meets_delta(self):
        """Test the bound equals δ at the threshold and falls below it beyond"""
        for params in (AuxParams(delta=0.1, ell=0.1), AuxParams(sigma=2, delta=1.0)):
            x = normalization_threshold(params)
            assert float(normalization_bound(params, x)) == pytest.approx(params.delta, rel=1e-9)
            assert float(normalization_bound(params, 2.0 * x)) < params.delta

    def test_threshold_scales_with_delta(self):
        """Test ℓ = δ puts the σ = 1 threshold at a/δ"""
        params = AuxParams(delta=0.1, ell=0.1)
        assert normalization_threshold(params) == pytest.approx(normalisation_constant() / 0.1)

    def test_normalize_disc(self, disc):
        """Test the disc is shifted by −a and verified on its boundary"""
        result = normalize_psi(disc, AuxParams())
        assert result.shift == pytest.approx(-normalisation_constant(), rel=1e-9)
        assert result.verified
        assert result.worst_bound <= 1.0
        assert result.chart.psi.shift == result.shift

    def test_normalize_keeps_deeper_shift(self, disc):
        """Test an already normalized ψ is left alone"""
        shifted = disc.with_psi_shift(-20.0)
        assert normalize_psi(shifted, AuxParams()).shift == -20.0


class TestBudgetCheck:
    """Test budget_check"""

    @pytest.mark.parametrize("sigma", [1, 2, 3])
    @pytest.mark.parametrize("delta", [0.1, 1.0])
    def test_passes_when_normalized(self, sigma, delta):
        """Test every inequality holds from the normalization threshold on"""
        params = AuxParams(eps=0.01, ell=delta, sigma=sigma, delta=delta)
        grid = budget_grid(params, normalization_threshold(params), 400, 6.0)
        report = budget_check(params, grid)
        assert report.passed, report.to_records()
        assert {row.name for row in report.rows} == {
            "gap_lower",
            "gap_upper",
            "lambda_positive",
            "weight_upper",
            "mu_prime",
            "Lambda",
        }

    def test_fails_without_normalization(self):
        """Test ψ close to the pole breaks the δ bound and returns a witness"""
        params = AuxParams(eps=0.01, delta=0.1)
        report = budget_check(params, budget_grid(params, 3.0, 100, 4.0))
        assert not report.passed
        failure = report.failures[0]
        assert failure.name == "gap_upper"
        assert failure.worst_margin < 0
        assert failure.witness == pytest.approx(-3.0)

    def test_records(self):
        """Test report rows flatten to records"""
        params = AuxParams()
        report = budget_check(params, budget_grid(params, normalization_threshold(params), 10, 2.0))
        records = report.to_records()
        assert len(records) == len(report.rows)
        assert set(records[0]) == {"inequality", "worst_margin", "witness", "points", "passed"}

    def test_grid_outside_domain(self):
        """Test t-grids reaching −e/ℓ^σ are refused"""
        with pytest.raises(DomainError):
            budget_check(AuxParams(), [-1.0, -10.0])


class TestXlogxBound:
    """Test x^ε |log x|^s ≤ s^s/(e^s ε^s)"""

    @pytest.mark.parametrize("eps", [0.01, 0.1, 0.5, 1.0])
    @pytest.mark.parametrize("s", [0, 1, 2, 5])
    def test_bound(self, eps, s):
        """Test the ratio never exceeds 1 and is attained at x = e^{−s/ε}"""
        report = xlogx_bound_check(None, eps, s)
        assert report.passed
        assert report.worst_ratio <= 1.0 + 1e-12
        if s > 0:
            assert report.peak_ratio == pytest.approx(1.0, rel=1e-12)
            assert report.peak_x == pytest.approx(math.exp(-s / eps))

    def test_explicit_grid(self):
        """Test a user grid inside (0, 1)"""
        report = xlogx_bound_check(np.linspace(0.01, 0.99, 99), 0.5, 1.0)
        assert report.passed

    def test_grid_outside_interval(self):
        """Test points outside (0, 1) are refused"""
        with pytest.raises(PreconditionError):
            xlogx_bound_check([0.5, 1.5], 0.5, 1.0)

    def test_invalid_parameters(self):
        """Test ε ≤ 0 is refused"""
        with pytest.raises(PreconditionError):
            xlogx_bound_check(None, 0.0, 1.0)


class TestRescaledWeight:
    """Test the δ-rescaling of the estimate weight"""

    @pytest.mark.parametrize("delta", [0.1, 0.5, 1.0])
    def test_rescaling(self, delta):
        """Test both forms agree on a ψ₀-grid"""
        assert rescaled_estimate_weight_error(delta, -np.linspace(0.0, 20.0, 41)) < 1e-10

    def test_positive_psi0(self):
        """Test ψ₀ > 0 is refused"""
        with pytest.raises(PreconditionError):
            rescaled_estimate_weight_error(1.0, [0.5])


class TestCutoff:
    """Test the cutoff profile"""

    def test_plateaus(self):
        """Test θ = 1 below 1/A and θ = 0 above 1/B"""
        profile = CutoffProfile(A=4.0, B=2.0)
        theta, d1, d2 = cutoff(profile, np.array([0.1, 0.25, 0.5, 0.8]))
        assert list(theta) == [1.0, 1.0, 0.0, 0.0]
        assert list(d1) == [0.0, 0.0, 0.0, 0.0]
        assert list(d2) == [0.0, 0.0, 0.0, 0.0]

    def test_measured_slopes(self):
        """Test sup|θ′| = 15/(8·width) for the quintic profile"""
        profile = CutoffProfile(A=4.0, B=2.0)
        assert profile.width == pytest.approx(0.25)
        assert profile.sup_prime == pytest.approx(7.5, rel=1e-6)
        assert profile.m_theta_prime == pytest.approx(56.25, rel=1e-6)
        assert CutoffProfile(A=4.0, B=2.0, eps0=0.5).m_theta_prime == pytest.approx(64.0, rel=1e-6)

    def test_derivative_matches_difference(self):
        """Test θ′ against a central difference"""
        profile = CutoffProfile(A=4.0, B=2.0)

        def theta(t):
            return cutoff(profile, t)[0]

        _, d1, _ = cutoff(profile, 0.35)
        assert float(d1) == pytest.approx(float(central_difference(theta, 0.35, 1e-6)), rel=1e-6)

    def test_invalid(self):
        """Test A > B > 1 is required"""
        with pytest.raises(PreconditionError):
            CutoffProfile(A=2.0, B=2.0)
