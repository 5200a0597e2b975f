"""
中間順位、重み付けなし相対効果（擬順位効果）、順位ベースの分散推定
"""
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from scipy import stats

from src.core.exceptions import DomainError
from src.numerics.linalg import Matrix, as_matrix, as_vector
from .dataset import Dataset, cell_means, cell_sums
from .design import Design


@dataclass(frozen=True, eq=False)
class RankSummary:
    """順位ベースの要約"""
    overall_midranks: Tuple[np.ndarray, ...]  # セルごとの全体中間順位
    effect_estimates: np.ndarray              # p̂
    rank_variances: np.ndarray                # ŝ²
    V_N: Matrix                               # N·diag(ŝ²_i / n_i)


def midranks(pooled: Sequence[float]) -> np.ndarray:
    """中間順位（同順位は占める位置の平均）"""
    values = np.asarray(pooled, dtype=np.float64)
    if values.size == 0:
        raise DomainError("midranks need at least one value")
    return stats.rankdata(values, method="average")


def batch_midranks(values: np.ndarray) -> np.ndarray:
    """(B, N) の各行について中間順位"""
    return stats.rankdata(values, method="average", axis=-1)


def batch_pseudo_effects(values: np.ndarray, design: Design) -> np.ndarray:
    """
    (B, N) → (B, d) の相対効果 p̂_i = (1/n_i) Σ_k Ĝ(X_ik)

    n_r F̂_r(z) は「群 r と全観測を連結した列での z の中間順位」から
    「全観測内での z の中間順位」を引いた値に等しい。
    """
    values = np.atleast_2d(values)
    offs = design.offsets
    sizes = np.asarray(design.cell_sizes, dtype=np.float64)
    n_total = values.shape[-1]

    rank_all = batch_midranks(values)
    g_hat = np.zeros_like(values)
    for r in range(design.cells):
        block = values[:, offs[r]:offs[r + 1]]
        joint = batch_midranks(np.concatenate([block, values], axis=1))
        g_hat += (joint[:, -n_total:] - rank_all) / sizes[r]
    g_hat /= design.cells
    return cell_means(g_hat, design)


def pseudo_effects(data: Dataset) -> np.ndarray:
    """重み付けなし平均分布 G に対する相対効果 p̂"""
    return as_vector(batch_pseudo_effects(data.pooled[np.newaxis, :], data.design)[0])


def pseudo_effects_pairwise(data: Dataset) -> np.ndarray:
    """
    二群ごとの中間順位による p̂（照合用）

    p̂_i = (1/d) Σ_r (1/n_r)(R̄_i^{(i+r)} − (n_i+1)/2)、r = i の項は 1/2 に固定。
    """
    groups = data.groups
    d = len(groups)
    effects = np.zeros(d)
    for i, xi in enumerate(groups):
        n_i = xi.size
        total = 0.5
        for r, xr in enumerate(groups):
            if r == i:
                continue
            joint = midranks(np.concatenate([xi, xr]))
            total += (joint[:n_i].mean() - (n_i + 1) / 2.0) / xr.size
        effects[i] = total / d
    return as_vector(effects)


def batch_rank_variances(values: np.ndarray, design: Design) -> np.ndarray:
    """(B, N) → (B, d) の ŝ²_i = Σ_k (R_ik − R̄_i)² / (N²(n_i − 1))（全体中間順位）"""
    values = np.atleast_2d(values)
    sizes = np.asarray(design.cell_sizes)
    n_total = values.shape[-1]
    ranks = batch_midranks(values)
    dev = ranks - np.repeat(cell_means(ranks, design), sizes, axis=-1)
    return cell_sums(dev * dev, design) / (n_total ** 2 * (sizes - 1.0))


def _require_two_per_cell(design: Design) -> None:
    if min(design.cell_sizes) < 2:
        raise DomainError("rank variances need at least two observations per cell")


def rank_variances(data: Dataset) -> Tuple[np.ndarray, Matrix]:
    """(ŝ², V_N)"""
    _require_two_per_cell(data.design)
    s2 = batch_rank_variances(data.pooled[np.newaxis, :], data.design)[0]
    v_n = as_matrix(np.diag(data.total * s2 / data.n))
    return as_vector(s2), v_n


def summarize(data: Dataset) -> RankSummary:
    """順位ベースの要約をまとめて計算"""
    ranks = midranks(data.pooled)
    offs = data.design.offsets
    per_cell = tuple(ranks[offs[i]:offs[i + 1]] for i in range(data.cells))
    s2, v_n = rank_variances(data)
    return RankSummary(
        overall_midranks=per_cell,
        effect_estimates=pseudo_effects(data),
        rank_variances=s2,
        V_N=v_n,
    )
