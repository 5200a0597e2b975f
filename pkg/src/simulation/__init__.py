"""
factest - シミュレーションモジュール初期化
"""

from .distgen import ErrorLaw, Family, RngStream, generate_dataset, sample_standardized
from .scenarios import ColorClass, Scenario, build_scenario, color_class, scenarios
from .engine import RESULT_COLUMNS, GridCell, RateEstimate, run_cell, run_grid

__all__ = [
    "ErrorLaw",
    "Family",
    "RngStream",
    "generate_dataset",
    "sample_standardized",
    "ColorClass",
    "Scenario",
    "build_scenario",
    "color_class",
    "scenarios",
    "RESULT_COLUMNS",
    "GridCell",
    "RateEstimate",
    "run_cell",
    "run_grid",
]
