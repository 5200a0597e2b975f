"""
セルごとにまとめた観測データ
"""
from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np

from src.core.exceptions import DomainError
from .design import Design


@dataclass(frozen=True, eq=False)
class Dataset:
    """観測値（セル順に並べたプール済みベクトルで保持）"""
    design: Design
    pooled: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.pooled, dtype=np.float64).ravel()
        if values.size != self.design.total:
            raise DomainError(f"expected {self.design.total} observations, got {values.size}")
        if not np.all(np.isfinite(values)):
            raise DomainError("observations must be finite")
        if values.size < self.design.cells + 1:
            raise DomainError("need at least d + 1 observations in total")
        values.setflags(write=False)
        object.__setattr__(self, "pooled", values)

    @classmethod
    def from_groups(cls, groups: Sequence[Sequence[float]], factors: Tuple[int, ...] = None) -> "Dataset":
        """セルごとの観測列から生成（factors 省略時は一元配置）"""
        sizes = [len(g) for g in groups]
        design = Design(tuple(factors) if factors else (len(groups),), tuple(sizes))
        pooled = np.concatenate([np.asarray(g, dtype=np.float64) for g in groups]) if groups else []
        return cls(design, pooled)

    @property
    def n(self) -> np.ndarray:
        return np.asarray(self.design.cell_sizes, dtype=np.float64)

    @property
    def total(self) -> int:
        return self.design.total

    @property
    def cells(self) -> int:
        return self.design.cells

    @property
    def groups(self) -> Tuple[np.ndarray, ...]:
        offs = self.design.offsets
        return tuple(self.pooled[offs[i]:offs[i + 1]] for i in range(self.cells))

    def regroup(self, pooled: np.ndarray) -> "Dataset":
        """同じ計画で観測値だけを差し替える（順列用）"""
        return Dataset(self.design, pooled)

    def map(self, fn) -> "Dataset":
        return Dataset(self.design, fn(self.pooled))


def cell_sums(values: np.ndarray, design: Design) -> np.ndarray:
    """最終軸に沿ったセルごとの和（(..., N) → (..., d)）"""
    return np.add.reduceat(values, list(design.offsets[:-1]), axis=-1)


def cell_means(values: np.ndarray, design: Design) -> np.ndarray:
    return cell_sums(values, design) / np.asarray(design.cell_sizes, dtype=np.float64)


def cell_variances(values: np.ndarray, design: Design) -> np.ndarray:
    """セルごとの不偏分散（除数 n_i − 1）。n_i ≥ 2 は呼び出し側で保証する"""
    sizes = np.asarray(design.cell_sizes)
    means = cell_means(values, design)
    dev = values - np.repeat(means, sizes, axis=-1)
    return cell_sums(dev * dev, design) / (sizes - 1.0)
