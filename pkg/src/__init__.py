"""
lcextension - multiplier ideals, lc-measures and weighted L² extension estimates on SNC model charts
"""

__version__ = "0.1.0"
