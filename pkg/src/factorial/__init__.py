"""
factest - 要因計画モジュール初期化
"""

from .design import Design, Hypothesis, HypothesisLabel, HypothesisScale, centering_matrix, contrasts_two_way, projection
from .dataset import Dataset
from .ranks import RankSummary, midranks, pseudo_effects, rank_variances, summarize

__all__ = [
    "Design",
    "Hypothesis",
    "HypothesisLabel",
    "HypothesisScale",
    "centering_matrix",
    "contrasts_two_way",
    "projection",
    "Dataset",
    "RankSummary",
    "midranks",
    "pseudo_effects",
    "rank_variances",
    "summarize",
]
