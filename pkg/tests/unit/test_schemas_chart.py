"""
Unit tests for chart file schemas
"""

from fractions import Fraction

import pytest
import yaml
from pydantic import ValidationError

from src.core.snc_model import sample_battery, validate_chart
from src.schemas.chart import (
    ChartFile,
    dump_chart,
    dump_chart_text,
    load_chart,
    parse_chart,
)
from src.utils.config import PACKAGE_CONFIG_DIR


def disc_document(**overrides):
    document = {
        "version": 1,
        "name": "disc",
        "n": 1,
        "radii": [0.5],
        "phiL": {"coeffs": [0]},
        "psi": {"coeffs": [1], "shift": 0.0},
        "m0": 0,
        "m1": 1,
        "sections": [{"exponents": [0]}],
    }
    document.update(overrides)
    return document


class TestChartFile:
    """Test ChartFile validation"""

    def test_valid_document(self):
        """Test a minimal document becomes a chart"""
        chart = parse_chart(disc_document())

        assert chart.n == 1
        assert chart.m1 == Fraction(1)
        assert chart.sections[0].support_radius == (0.5,)
        assert validate_chart(chart) == []

    def test_rational_strings(self):
        """Test "p/q" strings stay exact"""
        chart = parse_chart(disc_document(phiL={"coeffs": ["1/2"]}, m1="1/2"))
        assert chart.phiL.coeffs == (Fraction(1, 2),)
        assert chart.m1 == Fraction(1, 2)

    def test_float_rational_rejected(self):
        """Test floats are refused where exact rationals are required"""
        with pytest.raises(ValidationError) as exc:
            parse_chart(disc_document(m1=0.5))
        assert exc.value.errors()[0]["loc"] == ("m1",)
        assert "p/q" in str(exc.value)

    def test_bad_rational_string(self):
        """Test malformed rationals carry their key path"""
        with pytest.raises(ValidationError) as exc:
            parse_chart(disc_document(psi={"coeffs": ["one"]}))
        assert exc.value.errors()[0]["loc"] == ("psi", "coeffs", 0)

    def test_dimension_mismatch(self):
        """Test every per-coordinate list must have length n"""
        with pytest.raises(ValidationError, match="psi.coeffs"):
            parse_chart(disc_document(psi={"coeffs": [1, 1]}))

    def test_section_dimension_mismatch(self):
        """Test section exponents are checked against n"""
        with pytest.raises(ValidationError, match="sections.0.exponents"):
            parse_chart(disc_document(sections=[{"exponents": [0, 0]}]))

    def test_version(self):
        """Test unknown format versions are refused"""
        with pytest.raises(ValidationError) as exc:
            parse_chart(disc_document(version=2))
        assert exc.value.errors()[0]["loc"] == ("version",)

    def test_unknown_key(self):
        """Test misspelt keys are refused"""
        with pytest.raises(ValidationError):
            parse_chart(disc_document(radius=[0.5]))

    def test_amplitude_positive(self):
        """Test amplitudes must be positive"""
        with pytest.raises(ValidationError):
            parse_chart(disc_document(sections=[{"exponents": [0], "amplitude": 0.0}]))


class TestRoundTrip:
    """Test dump and load"""

    def test_battery(self):
        """Test every battery chart survives a dump and parse unchanged"""
        for chart in sample_battery():
            text = dump_chart_text(chart)
            assert parse_chart(yaml.safe_load(text)) == chart, chart.name

    def test_rationals_written_as_strings(self):
        """Test fractional values are written as "p/q" and integers as integers"""
        chart = next(c for c in sample_battery() if c.name == "disc-half-ell")
        document = yaml.safe_load(dump_chart_text(chart))
        assert document["phiL"]["coeffs"] == ["1/2"]
        assert document["m0"] == 0

    def test_file(self, tmp_path):
        """Test dump_chart and load_chart through the filesystem"""
        chart = sample_battery()[0]
        target = tmp_path / "charts" / "chart.yaml"
        dump_chart(chart, target)
        assert load_chart(target) == chart

    def test_from_chart(self):
        """Test ChartFile.from_chart keeps the name"""
        chart = sample_battery()[1]
        assert ChartFile.from_chart(chart).name == chart.name


class TestShippedCharts:
    """Test the chart files shipped with the package"""

    @pytest.mark.parametrize("name", ["disc-basic", "bidisc-two-stage", "tridisc-mixed"])
    def test_matches_battery(self, name):
        """Test each shipped file equals the battery chart of the same name"""
        chart = load_chart(PACKAGE_CONFIG_DIR / "charts" / f"{name}.yaml")
        expected = next(c for c in sample_battery() if c.name == name)
        assert chart == expected
