"""
要因計画の記述と仮説対比行列の構成
"""
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Sequence, Tuple

import numpy as np

from src.core.exceptions import DomainError
from src.numerics.linalg import Matrix, as_matrix, diagonal, diag, identity, kronecker, matrix_rank, moore_penrose, ones


class HypothesisScale(Enum):
    """帰無仮説の尺度"""
    MEAN = "mean-based"            # H0^μ : C μ = 0
    DISTRIBUTION = "distribution-based"  # H0^F : C F = 0


class HypothesisLabel(Enum):
    """仮説の種類"""
    OVERALL = "overall"
    MAIN_A = "A"
    MAIN_B = "B"
    INTERACTION = "AB"
    CUSTOM = "custom"


def centering_matrix(d: int) -> Matrix:
    """中心化行列 P_d = I_d − (1/d) J_d"""
    if d < 2:
        raise DomainError(f"centering matrix needs d >= 2, got {d}")
    return as_matrix(np.asarray(identity(d)) - np.asarray(ones(d)) / d)


def contrasts_two_way(a: int, b: int) -> Tuple[Matrix, Matrix, Matrix]:
    """二元配置の対比行列 (C_A, C_B, C_AB)（セル順は A が遅く変わる行優先）"""
    if a < 2 or b < 2:
        raise DomainError(f"two-way contrasts need a, b >= 2, got ({a}, {b})")
    mean_a = as_matrix(np.full((1, a), 1.0 / a))
    mean_b = as_matrix(np.full((1, b), 1.0 / b))
    c_a = kronecker(centering_matrix(a), mean_b)
    c_b = kronecker(mean_a, centering_matrix(b))
    c_ab = kronecker(centering_matrix(a), centering_matrix(b))
    return c_a, c_b, c_ab


def projection(contrast: Matrix) -> Tuple[Matrix, Matrix]:
    """
    射影行列 M = C'(CC')⁺C と D_M = diag(M)

    CC' が正則でない場合（C = P_d など）も一般化逆行列で同じ経路を通る。
    """
    c = as_matrix(contrast)
    if not np.any(c):
        raise DomainError("contrast matrix must not be zero")
    m = c.T @ moore_penrose(c @ c.T) @ c
    m = as_matrix((m + m.T) / 2.0)
    return m, diag(diagonal(m))


@dataclass(frozen=True, eq=False)
class Hypothesis:
    """仮説（対比行列とその尺度）"""
    label: HypothesisLabel
    contrast: Matrix
    scale: HypothesisScale = HypothesisScale.MEAN

    def __post_init__(self):
        object.__setattr__(self, "contrast", as_matrix(self.contrast))
        if matrix_rank(self.contrast) < 1:
            raise DomainError("contrast matrix must have rank >= 1")

    @property
    def rank(self) -> int:
        return matrix_rank(self.contrast)


@dataclass(frozen=True)
class Design:
    """要因計画（因子水準数とセルごとの標本サイズ）"""
    factors: Tuple[int, ...]
    cell_sizes: Tuple[int, ...]
    _offsets: Tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        factors = tuple(int(f) for f in self.factors)
        sizes = tuple(int(n) for n in self.cell_sizes)
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "cell_sizes", sizes)
        if not factors or any(f < 2 for f in factors):
            raise DomainError(f"every factor needs at least two levels, got {factors}")
        if len(sizes) != math.prod(factors):
            raise DomainError(
                f"expected {math.prod(factors)} cell sizes for factors {factors}, got {len(sizes)}"
            )
        if any(n < 1 for n in sizes):
            raise DomainError("every cell needs at least one observation")
        object.__setattr__(self, "_offsets", tuple(np.concatenate([[0], np.cumsum(sizes)]).tolist()))

    @classmethod
    def one_way(cls, cell_sizes: Sequence[int]) -> "Design":
        return cls((len(cell_sizes),), tuple(cell_sizes))

    @classmethod
    def two_way(cls, a: int, b: int, cell_sizes: Sequence[int]) -> "Design":
        return cls((a, b), tuple(cell_sizes))

    @property
    def cells(self) -> int:
        return math.prod(self.factors)

    @property
    def total(self) -> int:
        return self._offsets[-1]

    @property
    def offsets(self) -> Tuple[int, ...]:
        """プールした観測ベクトル上での各セルの開始位置（末尾は N）"""
        return self._offsets

    @property
    def is_one_way(self) -> bool:
        return len(self.factors) == 1

    @property
    def layout_name(self) -> str:
        if self.is_one_way:
            return "oneway"
        return "twoway:" + ",".join(str(f) for f in self.factors)

    def cell_labels(self) -> List[str]:
        """セル ID（一元: "1".."d"、二元: "i:j"、A が遅く変わる順）"""
        if self.is_one_way:
            return [str(i + 1) for i in range(self.cells)]
        labels = [""]
        for levels in self.factors:
            labels = [f"{prefix}:{j + 1}" if prefix else str(j + 1) for prefix in labels for j in range(levels)]
        return labels

    def hypothesis(self, label: str, contrast: Matrix = None) -> Hypothesis:
        """ラベル（overall / A / B / AB / custom）から仮説を構成"""
        try:
            kind = HypothesisLabel(label)
        except ValueError as e:
            raise DomainError(f"unknown hypothesis label: {label}") from e

        if kind is HypothesisLabel.CUSTOM:
            if contrast is None:
                raise DomainError("custom hypothesis needs a contrast matrix")
            c = as_matrix(contrast)
            if c.shape[1] != self.cells:
                raise DomainError(f"custom contrast needs {self.cells} columns, got {c.shape[1]}")
            return Hypothesis(kind, c)

        if kind is HypothesisLabel.OVERALL:
            return Hypothesis(kind, centering_matrix(self.cells))

        if len(self.factors) != 2:
            raise DomainError(f"hypothesis {label} requires a two-way design")
        c_a, c_b, c_ab = contrasts_two_way(*self.factors)
        return Hypothesis(kind, {HypothesisLabel.MAIN_A: c_a,
                                 HypothesisLabel.MAIN_B: c_b,
                                 HypothesisLabel.INTERACTION: c_ab}[kind])

    def default_hypothesis(self) -> Hypothesis:
        """一元では全体仮説、二元では交互作用仮説"""
        return self.hypothesis("overall" if self.is_one_way else "AB")
