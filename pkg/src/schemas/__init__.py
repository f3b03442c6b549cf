"""
Pydantic models of external documents
"""

from src.schemas.chart import ChartFile, load_chart, dump_chart

__all__ = ["ChartFile", "load_chart", "dump_chart"]
