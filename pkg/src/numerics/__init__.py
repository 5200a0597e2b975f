"""
factest - 数値計算モジュール初期化
"""

from .linalg import Matrix, as_matrix, as_vector, kronecker, matrix_rank, moore_penrose, moore_penrose_stack
from .distfn import DistKind, RefDistribution, normal_cdf, normal_quantile, quantile, survival

__all__ = [
    "Matrix",
    "as_matrix",
    "as_vector",
    "kronecker",
    "matrix_rank",
    "moore_penrose",
    "moore_penrose_stack",
    "DistKind",
    "RefDistribution",
    "normal_cdf",
    "normal_quantile",
    "quantile",
    "survival",
]
