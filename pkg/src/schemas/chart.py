"""
Chart file Pydantic models

A chart file is a versioned YAML document; rationals are written as "p/q" strings.
"""

from fractions import Fraction
from pathlib import Path
from typing import Annotated, Any, List, Literal, Optional, Union

import yaml
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, PlainSerializer, model_validator

from src.core.snc_model import DiagonalWeight, MonomialSection, SncChart, as_fraction


CHART_FILE_VERSION = 1


def _parse_rational(value: Any) -> Fraction:
    if isinstance(value, float):
        raise ValueError(f"rationals must be exact: write {value!r} as a 'p/q' string")
    try:
        return as_fraction(value)
    except (TypeError, ZeroDivisionError) as e:
        raise ValueError(str(e)) from e


def _format_rational(value: Fraction) -> Union[int, str]:
    if value.denominator == 1:
        return int(value.numerator)
    return f"{value.numerator}/{value.denominator}"


Rational = Annotated[
    Fraction,
    BeforeValidator(_parse_rational),
    PlainSerializer(_format_rational),
]


class WeightModel(BaseModel):
    """Diagonal weight Σ coeffs_j log|z_j|² + shift"""

    model_config = ConfigDict(arbitrary_types_allowed=True, extra="forbid")

    coeffs: List[Rational] = Field(..., description="Exact coefficient per coordinate")
    shift: float = Field(default=0.0, description="Additive constant")


class SectionModel(BaseModel):
    """Monomial section A · z^a · χ"""

    model_config = ConfigDict(extra="forbid")

    exponents: List[int] = Field(..., description="Vanishing order per coordinate")
    amplitude: float = Field(default=1.0, gt=0.0, description="Amplitude A")
    support_radius: Optional[List[float]] = Field(
        None, description="Bump radius per coordinate; the chart radii when omitted"
    )


class ChartFile(BaseModel):
    """Chart file document"""

    model_config = ConfigDict(arbitrary_types_allowed=True, extra="forbid")

    version: Literal[1] = Field(default=CHART_FILE_VERSION, description="Format version")
    name: str = Field(default="", description="Label used in reports")
    n: int = Field(..., ge=1, description="Dimension")
    radii: List[float] = Field(..., description="Polydisc half-edges in (0, 1)")
    phiL: WeightModel = Field(..., description="Weight of the line bundle")
    psi: WeightModel = Field(..., description="Weight ψ with sup ψ ≤ 0")
    m0: Rational = Field(..., description="Lower multiplier level")
    m1: Rational = Field(..., description="Jumping number above m0")
    klt: bool = Field(default=False, description="Require klt φ_L transverse to S")
    sections: List[SectionModel] = Field(default_factory=list, description="Sections")

    @model_validator(mode="after")
    def _check_dimensions(self) -> "ChartFile":
        lengths = {
            "radii": len(self.radii),
            "phiL.coeffs": len(self.phiL.coeffs),
            "psi.coeffs": len(self.psi.coeffs),
        }
        for i, section in enumerate(self.sections):
            lengths[f"sections.{i}.exponents"] = len(section.exponents)
            if section.support_radius is not None:
                lengths[f"sections.{i}.support_radius"] = len(section.support_radius)
        wrong = [key for key, size in lengths.items() if size != self.n]
        if wrong:
            raise ValueError(f"length must equal n={self.n} for: {', '.join(wrong)}")
        return self

    def to_chart(self) -> SncChart:
        chart = SncChart(
            n=self.n,
            radii=tuple(self.radii),
            phiL=DiagonalWeight(tuple(self.phiL.coeffs), self.phiL.shift),
            psi=DiagonalWeight(tuple(self.psi.coeffs), self.psi.shift),
            m0=self.m0,
            m1=self.m1,
            klt=self.klt,
            name=self.name,
        )
        return chart.with_sections(
            MonomialSection(
                tuple(s.exponents),
                s.amplitude,
                tuple(s.support_radius) if s.support_radius is not None else chart.radii,
            )
            for s in self.sections
        )

    @classmethod
    def from_chart(cls, chart: SncChart) -> "ChartFile":
        return cls(
            name=chart.name,
            n=chart.n,
            radii=list(chart.radii),
            phiL=WeightModel(coeffs=list(chart.phiL.coeffs), shift=chart.phiL.shift),
            psi=WeightModel(coeffs=list(chart.psi.coeffs), shift=chart.psi.shift),
            m0=chart.m0,
            m1=chart.m1,
            klt=chart.klt,
            sections=[
                SectionModel(
                    exponents=list(s.exponents),
                    amplitude=s.amplitude,
                    support_radius=list(s.support_radius),
                )
                for s in chart.sections
            ],
        )


def parse_chart(data: Any) -> SncChart:
    """
    Validate a decoded chart document

    Raises:
        pydantic.ValidationError: with the key path of every offending entry
    """
    return ChartFile.model_validate(data).to_chart()


def load_chart(file_path: Path) -> SncChart:
    """
    Load a chart file

    Args:
        file_path: YAML chart file

    Returns:
        Parsed chart (not yet checked by validate_chart)
    """
    with open(file_path, "r", encoding="utf-8") as f:
        data = yaml.safe_load(f)
    return parse_chart(data or {})


def dump_chart_text(chart: SncChart) -> str:
    """Serialize a chart; parse_chart(yaml.safe_load(text)) reproduces it exactly"""
    document = ChartFile.from_chart(chart).model_dump(mode="json")
    return yaml.safe_dump(document, allow_unicode=True, sort_keys=False)


def dump_chart(chart: SncChart, file_path: Path) -> None:
    """
    Write a chart file

    Args:
        chart: Chart to write
        file_path: Destination
    """
    file_path.parent.mkdir(parents=True, exist_ok=True)
    with open(file_path, "w", encoding="utf-8") as f:
        f.write(dump_chart_text(chart))
