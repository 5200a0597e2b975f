"""
factest - レポートモジュール初期化
"""

from .report import deviation_data, dots_data, load_results, render_report, summary_data

__all__ = [
    "deviation_data",
    "dots_data",
    "load_results",
    "render_report",
    "summary_data",
]
