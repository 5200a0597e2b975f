"""
factest - コマンドラインモジュール初期化
"""

from .main import main, parse_layout, read_observations

__all__ = [
    "main",
    "parse_layout",
    "read_observations",
]
