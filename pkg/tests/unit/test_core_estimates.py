"""
Unit tests for minimal extensions and the staged extension estimate
"""

import math
from fractions import Fraction

import numpy as np
import pytest

from src.core.estimates import (
    DivergenceError,
    check_main_estimate,
    estimate_lhs,
    minimal_extension,
    minimal_extension_qp,
    zero_section,
)
from src.core.exceptions import PreconditionError
from src.core.lcv import QuadratureSpec
from src.core.multiplier import jumping_numbers, sigma_f
from src.core.snc_model import DiagonalWeight, MultiMonomialSection, SncChart, sample_battery
from src.core.weights import AuxParams, normalisation_constant


@pytest.fixture(scope="module")
def battery():
    return {chart.name: chart for chart in sample_battery()}


@pytest.fixture
def params():
    return AuxParams()


@pytest.fixture
def spec():
    return QuadratureSpec()


def normalized(chart, shift=-10.0):
    return chart.with_psi_shift(shift)


class TestMinimalExtension:
    """Test minimal_extension"""

    def test_class_representative(self, battery):
        """Test a section outside 𝓘(φ_L + m1ψ) is its own minimal extension"""
        chart = battery["disc-basic"]
        f = chart.sections[0]
        assert minimal_extension(chart, f) == f

    def test_vanishing_class(self, battery):
        """Test a section in 𝓘(φ_L + m1ψ) extends by zero"""
        chart = battery["disc-vanishing"]
        extension = minimal_extension(chart, chart.sections[0])
        assert extension == zero_section(1)
        assert extension.amplitude == 0.0

    def test_outside_lower_ideal(self, battery):
        """Test sections outside 𝓘(φ_L + m0ψ) are rejected"""
        chart = battery["disc-nu2"]
        with pytest.raises(PreconditionError, match="coordinate 0"):
            minimal_extension(chart, chart.section((0,)))

    def test_matches_brute_force(self, battery, params, spec):
        """Test the Gram-matrix minimizer keeps f and drops every candidate"""
        chart = normalized(battery["disc-basic"])
        coefficients = minimal_extension_qp(
            chart, chart.sections[0], [(1,), (2,)], 1, params, spec
        )
        np.testing.assert_allclose(coefficients, [1.0, 0.0, 0.0], atol=1e-10)

    def test_brute_force_in_two_variables(self, battery, params, spec):
        """Test the codimension-two case with mixed candidates"""
        chart = normalized(battery["bidisc-origin"])
        coefficients = minimal_extension_qp(
            chart, chart.sections[0], [(1, 0), (0, 1), (1, 1)], 2, params, spec
        )
        np.testing.assert_allclose(coefficients, [1.0, 0.0, 0.0, 0.0], atol=1e-10)


class TestEstimateLhs:
    """Test estimate_lhs"""

    def test_disc_closed_form(self, battery, params, spec):
        """Test ∫ χ² h(|ψ|) du ≤ 2π e^{s0} (π/2 − arctan log s0) and is close for a wide bump"""
        shift = -10.0
        chart = normalized(battery["disc-basic"], shift)
        value = estimate_lhs(chart, chart.sections[0], 1, params, spec)

        s0 = -shift
        start = -2.0 * math.log(0.5)
        prefactor = 2.0 * math.pi * math.exp(s0)
        upper = prefactor * (math.pi / 2.0 - math.atan(math.log(s0)))
        lower = prefactor * (math.pi / 2.0 - math.atan(math.log(s0 + start + math.log(4.0))))
        assert lower < value < upper

    def test_zero_section(self, battery, params, spec):
        """Test the zero extension has zero norm"""
        chart = normalized(battery["disc-basic"])
        assert estimate_lhs(chart, zero_section(1), 1, params, spec) == 0.0

    def test_amplitude_scaling(self, battery, params, spec):
        """Test |A|² scaling"""
        chart = normalized(battery["disc-basic"])
        f = chart.sections[0]
        one = estimate_lhs(chart, f, 1, params, spec)
        three = estimate_lhs(chart, f.scaled(3.0), 1, params, spec)
        assert three == pytest.approx(9.0 * one, rel=1e-7)

    def test_too_many_poles(self, battery, params, spec):
        """Test |Z| > σ diverges"""
        chart = normalized(battery["bidisc-origin"])
        with pytest.raises(DivergenceError, match="σ=1"):
            estimate_lhs(chart, chart.sections[0], 1, params, spec)

    def test_below_upper_ideal_floor(self, battery, params, spec):
        """Test an exponent below the 𝓘(φ_L + m1ψ) floor diverges"""
        chart = normalized(battery["disc-nu2"])
        with pytest.raises(DivergenceError, match="coordinate 0"):
            estimate_lhs(chart, chart.section((0,)), 1, params, spec)

    def test_needs_normalized_psi(self, battery, params, spec):
        """Test ψ above −e_σ/ℓ is refused"""
        chart = battery["disc-basic"]
        with pytest.raises(PreconditionError, match="not normalized"):
            estimate_lhs(chart, chart.sections[0], 1, params, spec)

    def test_sigma_positive(self, battery, params, spec):
        """Test σ ≥ 1"""
        chart = normalized(battery["disc-basic"])
        with pytest.raises(PreconditionError):
            estimate_lhs(chart, chart.sections[0], 0, params, spec)

    def test_thread_count_does_not_change_bits(self, battery, params):
        """Test deterministic reduction across worker counts"""
        chart = normalized(battery["bidisc-origin"])
        f = chart.sections[0]
        one = estimate_lhs(chart, f, 2, params, QuadratureSpec(threads=1))
        four = estimate_lhs(chart, f, 2, params, QuadratureSpec(threads=4))
        assert one == four


class TestCheckMainEstimate:
    """Test check_main_estimate"""

    def test_disc(self, battery, params, spec):
        """Test one stage with a positive margin on the disc"""
        chart = battery["disc-basic"]
        report = check_main_estimate(chart, MultiMonomialSection(chart.sections), params, spec)

        assert report.passed
        assert [stage.sigma for stage in report.stages] == [1]
        assert report.shift == pytest.approx(-normalisation_constant(), rel=1e-9)
        assert report.stages[0].margin > 0
        assert report.final_residual.terms == ()

    def test_two_stages(self, battery, params, spec):
        """Test σ = 2 then σ = 1, each extending its own terms"""
        chart = battery["bidisc-two-stage"]
        f = MultiMonomialSection(chart.sections)
        report = check_main_estimate(chart, f, params, spec)

        assert report.passed
        assert [stage.sigma for stage in report.stages] == [2, 1]
        for stage in report.stages:
            assert stage.margin >= -stage.tolerance
        first, second = report.stages
        assert [t.exponents for t in first.extension.terms] == [(0, 0)]
        assert [t.exponents for t in second.extension.terms] == [(0, 1)]
        assert [t.exponents for t in first.residual_after.terms] == [(0, 1)]

        extended = [t.exponents for stage in report.stages for t in stage.extension.terms]
        assert sorted(extended) == sorted(t.exponents for t in f.terms)
        assert report.final_residual.terms == ()

    def test_shift_covers_every_stage(self, battery, params, spec):
        """Test the shift normalizes ψ for σ = 1 and σ = 2"""
        chart = battery["bidisc-two-stage"]
        report = check_main_estimate(chart, MultiMonomialSection(chart.sections), params, spec)
        assert report.shift <= -normalisation_constant()
        assert report.chart.psi.shift == report.shift

    def test_vanishing_class_has_no_stages(self, battery, params, spec):
        """Test f ∈ 𝓘(φ_L + m1ψ) needs no extension"""
        chart = battery["bidisc-vanishing"]
        report = check_main_estimate(chart, MultiMonomialSection(chart.sections), params, spec)
        assert report.stages == ()
        assert report.passed
        assert report.to_records() == []

    def test_records(self, battery, params, spec):
        """Test stage records carry the reported columns"""
        chart = battery["disc-basic"]
        report = check_main_estimate(chart, MultiMonomialSection(chart.sections), params, spec)
        record = report.to_records()[0]
        assert set(record) == {"sigma", "terms", "lhs", "rhs", "margin", "tolerance", "passed"}
        assert record["margin"] == pytest.approx(record["rhs"] - record["lhs"])

    @pytest.mark.slow
    def test_battery(self, battery, params, spec):
        """Test every battery chart passes each stage"""
        for name, chart in battery.items():
            f = MultiMonomialSection(chart.sections)
            report = check_main_estimate(chart, f, params, spec)
            top = max(
                sigma_f(chart, jumping_numbers(chart, chart.m1), t).value for t in f.terms
            )
            assert len(report.stages) == top, name
            assert report.passed, (name, report.to_records())

    def test_deep_normalization(self, battery, spec):
        """Test δ = ℓ = 0.1 on the tridisc origin, where ψ sits far below zero"""
        chart = battery["tridisc-origin"]
        params = AuxParams(delta=0.1, ell=0.1)
        report = check_main_estimate(chart, MultiMonomialSection(chart.sections), params, spec)

        assert report.shift < chart.psi.shift
        assert [stage.sigma for stage in report.stages] == [3]
        assert report.stages[0].rhs > 0
        assert report.passed, report.to_records()

    @pytest.mark.slow
    def test_battery_deep_normalization(self, battery, spec):
        """Test every battery chart passes with δ = ℓ = 0.1"""
        params = AuxParams(delta=0.1, ell=0.1)
        for name, chart in battery.items():
            report = check_main_estimate(chart, MultiMonomialSection(chart.sections), params, spec)
            assert report.passed, (name, report.to_records())

    def test_slow_transverse_decay(self, params, spec):
        """Test a transverse coordinate with defect 1/10 passes"""
        chart = SncChart(
            n=2,
            radii=(0.5, 0.5),
            phiL=DiagonalWeight((0, 0), 0.0),
            psi=DiagonalWeight((1, Fraction(9, 10)), 0.0),
            m0=0,
            m1=1,
            name="bidisc-defect-0.1",
        )
        f = MultiMonomialSection((chart.section((0, 0)),))
        report = check_main_estimate(chart, f, params, spec)

        assert [stage.sigma for stage in report.stages] == [1]
        assert report.passed, report.to_records()

    def test_amplitude_scales_margins(self, battery, params, spec):
        """Test scaling f by s scales both sides and the margin by s²"""
        chart = battery["bidisc-two-stage"]
        f = MultiMonomialSection(chart.sections)
        base = check_main_estimate(chart, f, params, spec)
        scaled = check_main_estimate(chart, f.scaled(3.0), params, spec)

        for one, nine in zip(base.stages, scaled.stages):
            assert nine.lhs == pytest.approx(9.0 * one.lhs, rel=1e-5)
            assert nine.rhs == pytest.approx(9.0 * one.rhs, rel=1e-5)
            scale = 9.0 * (one.lhs + one.rhs)
            assert nine.margin == pytest.approx(9.0 * one.margin, abs=1e-5 * scale)

    def test_smaller_support_never_raises_rhs(self, battery, params, spec):
        """Test shrinking the cutoff radius keeps each right-hand side within tolerance"""
        chart = battery["bidisc-two-stage"]
        wide = MultiMonomialSection(chart.sections)
        narrow = MultiMonomialSection(
            chart.section(t.exponents, t.amplitude, (0.3, 0.3)) for t in chart.sections
        )
        wide_report = check_main_estimate(chart, wide, params, spec)
        narrow_report = check_main_estimate(chart, narrow, params, spec)

        for big, small in zip(wide_report.stages, narrow_report.stages):
            assert big.sigma == small.sigma
            assert small.rhs <= big.rhs + max(big.tolerance, small.tolerance)
