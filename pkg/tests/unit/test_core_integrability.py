"""
Unit tests for the continuation ladder, the log-pole limit and the Hörmander check
"""

import math

import pytest

from src.core.exceptions import PreconditionError
from src.core.integrability import (
    continuation_ladder,
    hormander_weight_check,
    ladder_side_conditions,
    log_pole_limit,
    log_weight_membership,
)
from src.core.snc_model import DiagonalWeight, SncChart, sample_battery


@pytest.fixture(scope="module")
def battery():
    return {chart.name: chart for chart in sample_battery()}


class TestContinuationLadder:
    """Test continuation_ladder"""

    @pytest.mark.parametrize(
        "s, delta, expected",
        [
            (3.0, 0.5, [3.0, 2.5, 2.0, 1.5, 1.0]),
            (1.2, 0.1, [1.2, 0.3]),
            (2.0, 0.25, [2.0, 1.25, 0.5]),
        ],
    )
    def test_ladder(self, s, delta, expected):
        """Test the exponent sequence and its length"""
        ladder = continuation_ladder(s, delta)
        assert ladder == expected
        assert len(ladder) - 1 == math.ceil((s - 1) / (1 - delta))

    def test_s_must_exceed_one(self):
        """Test s ≤ 1 is rejected"""
        with pytest.raises(PreconditionError):
            continuation_ladder(1.0, 0.5)

    def test_delta_zero(self):
        """Test δ = 0 is rejected"""
        with pytest.raises(PreconditionError, match="positive"):
            continuation_ladder(3.0, 0.0)

    def test_delta_one_does_not_descend(self):
        """Test δ ≥ 1 is reported as a non-decreasing ladder"""
        with pytest.raises(PreconditionError, match="non-decreasing"):
            continuation_ladder(3.0, 1.0)

    def test_negative_delta(self):
        """Test δ < 0 is rejected"""
        with pytest.raises(PreconditionError):
            continuation_ladder(3.0, -0.1)

    def test_side_conditions(self):
        """Test every step pairs with a finite auxiliary integral"""
        steps = ladder_side_conditions(3.0, 0.5)
        assert [(s.exponent, s.next_exponent) for s in steps] == [
            (3.0, 2.5),
            (2.5, 2.0),
            (2.0, 1.5),
            (1.5, 1.0),
        ]
        assert all(s.auxiliary_finite for s in steps)
        assert all(s.split_exponent == 1.5 for s in steps)
        assert all(math.isfinite(s.auxiliary_value) for s in steps)


class TestLogPoleLimit:
    """Test log_pole_limit"""

    @pytest.mark.parametrize("r0", [0.1, 0.5, 0.9])
    def test_limit_is_half_pi(self, r0):
        """Test the limit is π/2 for every radius"""
        result = log_pole_limit(r0)
        assert result.value == pytest.approx(math.pi / 2.0, rel=1e-2)

    def test_values_are_finite(self):
        """Test the regularized values are finite for every ε"""
        result = log_pole_limit(0.5)
        assert len(result.values) == len(result.eps)
        assert all(math.isfinite(v) and v > 0 for v in result.values)

    def test_invalid_radius(self):
        """Test r0 outside (0, 1) is rejected"""
        with pytest.raises(PreconditionError):
            log_pole_limit(1.0)


class TestLogWeightMembership:
    """Test log_weight_membership"""

    @pytest.mark.parametrize("a", [-1, 0, 1])
    @pytest.mark.parametrize("p", [0.0, 0.5])
    @pytest.mark.parametrize("s", [0, 1, 2, 3])
    def test_criterion(self, a, p, s):
        """Test finiteness iff a + 1 > 0 or 2p − s < −1, confirmed by quadrature"""
        result = log_weight_membership(a, p, s)
        assert result.finite == (a + 1 > 0 or 2 * p - s < -1)
        assert result.agrees
        assert math.isfinite(result.value) == result.finite

    def test_singular_kernel_value(self):
        """Test ∫ dλ/(|z|²|log|z|²|^2) over |z| < r0 equals π/|log r0²|"""
        result = log_weight_membership(-1, 0.0, 2.0, r0=0.5)
        assert result.value == pytest.approx(math.pi / (2.0 * math.log(2.0)), rel=1e-12)

    def test_smooth_value(self):
        """Test ∫_{|z|<r0} dλ = π r0²"""
        result = log_weight_membership(0, 0.0, 0.0, r0=0.5)
        assert result.value == pytest.approx(math.pi * 0.25, rel=1e-12)

    def test_invalid_order(self):
        """Test vanishing orders below −1 are rejected"""
        with pytest.raises(PreconditionError):
            log_weight_membership(-2, 0.0, 0.0)


class TestHormanderWeightCheck:
    """Test hormander_weight_check"""

    def test_disc(self, battery):
        """Test a finite bound attained at the smallest |ψ|"""
        chart = battery["disc-basic"]
        report = hormander_weight_check(chart, 1, 0.01)
        abs_psi_min = -2.0 * math.log(0.5)

        assert report.passed
        assert report.annihilated
        assert math.isfinite(report.c_prime)
        assert report.witness_psi == pytest.approx(-abs_psi_min)

    def test_bound_decreases_with_normalization(self, battery):
        """Test a more negative ψ lowers c′ towards σ(1−ε)/b"""
        chart = battery["disc-basic"]
        near = hormander_weight_check(chart, 2, 0.01)
        far = hormander_weight_check(chart.with_psi_shift(-1e6), 2, 0.01)
        assert far.c_prime < near.c_prime
        assert far.c_prime == pytest.approx(2.0 * 0.99, rel=0.3)

    def test_log_breakdown(self, battery):
        """Test log(ℓ|ψ|) ≤ 0 is reported with a witness"""
        report = hormander_weight_check(battery["disc-basic"], 1, 0.01, ell=0.5)
        assert not report.passed
        assert math.isinf(report.c_prime)
        assert report.witness_psi is not None

    def test_smooth_psi(self, battery):
        """Test ψ without poles has nothing to bound"""
        chart = battery["disc-basic"]
        smooth = SncChart(
            n=1,
            radii=chart.radii,
            phiL=chart.phiL,
            psi=DiagonalWeight((0,), -1.0),
            m0=chart.m0,
            m1=chart.m1,
        )
        report = hormander_weight_check(smooth, 1, 0.01)
        assert report.passed
        assert report.c_prime == 0.0

    def test_invalid(self, battery):
        """Test parameter validation"""
        with pytest.raises(PreconditionError):
            hormander_weight_check(battery["disc-basic"], 1, 1.5)
        with pytest.raises(PreconditionError):
            hormander_weight_check(battery["disc-basic"], 1, 0.1, shrink=0.0)
