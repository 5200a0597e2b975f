"""
factest - ユーティリティモジュール初期化
"""

from .io import csv_text, write_csv_atomic, write_text_atomic

__all__ = [
    "csv_text",
    "write_csv_atomic",
    "write_text_atomic",
]
