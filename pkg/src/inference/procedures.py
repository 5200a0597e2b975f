"""
検定手法 - 統計量と参照分布による仮説検定

平均ベース（F, Welch, WTS, ATS）と順位ベース（KW, VDW, rWTS, rATS）の各手法を
同じ TestResult にまとめて返す。順列版で使う統計量は (B, N) の並べ替え済み観測を
一括評価するカーネル（batch_*）として定義し、観測値もこの経路で計算する。
"""
from dataclasses import dataclass
from functools import partial
from typing import Callable, Optional, Tuple

import numpy as np

from src.core.exceptions import ConfigurationError, DegenerateDataError, DomainError, InfiniteStatisticError
from src.factorial.dataset import Dataset, cell_means, cell_sums, cell_variances
from src.factorial.design import Design, projection
from src.factorial.ranks import batch_midranks, batch_pseudo_effects, batch_rank_variances, pseudo_effects, rank_variances
from src.numerics.distfn import RefDistribution, normal_quantile, survival
from src.numerics.linalg import Matrix, as_matrix, as_vector, diag, matrix_rank, moore_penrose, moore_penrose_stack, trace
from .methods import Method
from .results import TestResult

_EPS = np.finfo(np.float64).eps


@dataclass(frozen=True, eq=False)
class MomentSummary:
    """セルごとの平均・不偏分散と異分散共分散推定量"""
    means: np.ndarray
    variances: np.ndarray
    S_N: Matrix       # N·diag(σ̂²_i / n_i)
    Lambda: Matrix    # diag(1 / (n_i − 1))


def moment_summary(data: Dataset) -> MomentSummary:
    if min(data.design.cell_sizes) < 2:
        raise DomainError("variance estimates need at least two observations per cell")
    means = cell_means(data.pooled, data.design)
    variances = cell_variances(data.pooled, data.design)
    return MomentSummary(
        means=as_vector(means),
        variances=as_vector(variances),
        S_N=diag(data.total * variances / data.n),
        Lambda=diag(1.0 / (data.n - 1.0)),
    )


def resolve_contrast(data: Dataset, contrast: Optional[Matrix]) -> Matrix:
    if contrast is None:
        return data.design.default_hypothesis().contrast
    c = as_matrix(contrast)
    if c.shape[1] != data.cells:
        raise DomainError(f"contrast needs {data.cells} columns, got {c.shape[1]}")
    return c


def require_one_way(data: Dataset, method: Method) -> None:
    if not data.design.is_one_way:
        raise ConfigurationError(f"method {method.value} is defined for one-way layouts only")


def _is_zero(vector: np.ndarray, scale: np.ndarray) -> bool:
    bound = 1e-12 * max(1.0, float(np.max(np.abs(scale))) if scale.size else 1.0)
    return bool(np.all(np.abs(vector) <= bound))


def _result(method: Method, statistic: float, dist: RefDistribution) -> TestResult:
    statistic = max(float(statistic), 0.0)
    return TestResult(
        method=method,
        statistic=statistic,
        dist=dist,
        df=dist.df,
        p_value=survival(dist, statistic),
        hypothesis=method.scale,
    )


# ---------------------------------------------------------------------------
# 二次形式
# ---------------------------------------------------------------------------

def wald_type(estimate, cov: Matrix, contrast: Matrix, n_total: int) -> Tuple[float, int]:
    """
    Wald 型統計量 Q = N·θ̂'C'(C Σ̂ C')⁺C θ̂ とそのカイ二乗自由度 rank(C Σ̂ C')

    C Σ̂ C' がゼロで Cθ̂ ≠ 0 のときは統計量が無限大になる。
    """
    est = as_vector(estimate)
    cov = as_matrix(cov)
    c = as_matrix(contrast)
    d = est.size
    if cov.shape != (d, d) or c.shape[1] != d:
        raise DomainError(f"shape mismatch: estimate {d}, cov {cov.shape}, contrast {c.shape}")

    ce = c @ est
    middle = c @ cov @ c.T
    rank = matrix_rank(middle)
    if rank == 0:
        if _is_zero(ce, est):
            return 0.0, 0
        raise InfiniteStatisticError("contrast covariance is zero while the contrast estimate is not")
    q = n_total * float(ce @ moore_penrose(middle) @ ce)
    return max(q, 0.0), rank


def anova_type(estimate, cov: Matrix, lam: Matrix, contrast: Matrix, n_total: int) -> Tuple[float, float, float]:
    """ANOVA 型統計量と Box 型近似の自由度 (F, f̂, f̂₀)"""
    est = as_vector(estimate)
    cov = as_matrix(cov)
    lam = as_matrix(lam)
    m, d_m = projection(contrast)
    if m.shape[0] != est.size or cov.shape != m.shape or lam.shape != m.shape:
        raise DomainError(f"shape mismatch: estimate {est.size}, cov {cov.shape}, contrast projection {m.shape}")

    tr_dm = trace(d_m @ cov)
    if tr_dm <= _EPS * float(np.sum(np.abs(np.diagonal(cov)))):
        raise DegenerateDataError("tr(D_M Σ̂) is zero")

    f_stat = n_total / tr_dm * float(est @ m @ est)
    ms = m @ cov
    f_hat = tr_dm ** 2 / trace(ms @ ms)
    f0_hat = tr_dm ** 2 / trace(d_m @ d_m @ cov @ cov @ lam)
    return max(f_stat, 0.0), f_hat, f0_hat


# ---------------------------------------------------------------------------
# 一括評価カーネル (B, N) -> (B,)
# ---------------------------------------------------------------------------

def _batch_quadratic(estimates: np.ndarray, cov_diag: np.ndarray, contrast: Matrix, n_total: int) -> np.ndarray:
    ce = estimates @ contrast.T
    middle = np.einsum("ri,bi,si->brs", contrast, cov_diag, contrast)
    q = n_total * np.einsum("br,brs,bs->b", ce, moore_penrose_stack(middle), ce)
    return np.maximum(q, 0.0)


def batch_wts(values: np.ndarray, design: Design, contrast: Matrix) -> np.ndarray:
    """平均ベース WTS。分散ゼロのセルは一般化逆行列でそのまま扱う"""
    values = np.atleast_2d(values)
    n = np.asarray(design.cell_sizes, dtype=np.float64)
    cov_diag = design.total * cell_variances(values, design) / n
    return _batch_quadratic(cell_means(values, design), cov_diag, contrast, design.total)


def batch_rank_wts(values: np.ndarray, design: Design, contrast: Matrix) -> np.ndarray:
    """順位ベース WTS（順位は並べ替えごとに付け直す）"""
    values = np.atleast_2d(values)
    n = np.asarray(design.cell_sizes, dtype=np.float64)
    cov_diag = design.total * batch_rank_variances(values, design) / n
    return _batch_quadratic(batch_pseudo_effects(values, design), cov_diag, contrast, design.total)


def batch_kruskal_wallis(values: np.ndarray, design: Design, compat_printed: bool = False) -> np.ndarray:
    """Kruskal-Wallis 統計量。全同順位の行は 0"""
    values = np.atleast_2d(values)
    n_total = design.total
    n = np.asarray(design.cell_sizes, dtype=np.float64)
    centered = batch_midranks(values) - (n_total + 1) / 2.0
    between = np.sum(n * cell_means(centered, design) ** 2, axis=-1)
    spread = np.sum(centered ** 2, axis=-1) / (n_total - 1)
    if compat_printed:
        spread = spread / n_total ** 2
    out = np.zeros_like(between)
    np.divide(between, spread, out=out, where=spread > 0)
    return out


@dataclass(frozen=True)
class BatchedStatistic:
    """単一データでも並べ替え済み観測の束でも評価できる統計量"""
    kernel: Callable[[np.ndarray, Design], np.ndarray]

    def __call__(self, data: Dataset) -> float:
        return float(self.kernel(data.pooled[np.newaxis, :], data.design)[0])

    def batch(self, values: np.ndarray, design: Design) -> np.ndarray:
        return self.kernel(values, design)


def wts_statistic(contrast: Matrix) -> BatchedStatistic:
    return BatchedStatistic(partial(batch_wts, contrast=as_matrix(contrast)))


def rank_wts_statistic(contrast: Matrix) -> BatchedStatistic:
    return BatchedStatistic(partial(batch_rank_wts, contrast=as_matrix(contrast)))


def kruskal_wallis_statistic(compat_printed: bool = False) -> BatchedStatistic:
    return BatchedStatistic(partial(batch_kruskal_wallis, compat_printed=compat_printed))


# ---------------------------------------------------------------------------
# 平均ベースの検定
# ---------------------------------------------------------------------------

def anova_f(data: Dataset, contrast: Optional[Matrix] = None, compat_printed: bool = False) -> TestResult:
    """
    古典的 F 検定（セル平均の線形仮説）

    F = [(C X̄)'(C D C')⁺(C X̄) / rank] / MSE、D = diag(1/n_i)。
    C = P_d で一元配置分散分析、C = C_AB で二元配置の交互作用 F に一致する。
    compat_printed では分母に全平方和を使う。
    """
    design = data.design
    c = resolve_contrast(data, contrast)
    n_total, d = data.total, data.cells
    if n_total <= d:
        raise DomainError("ANOVA F needs N > d")

    means = cell_means(data.pooled, design)
    if compat_printed:
        denom_ss = float(np.sum((data.pooled - data.pooled.mean()) ** 2))
    else:
        denom_ss = float(np.sum((data.pooled - np.repeat(means, design.cell_sizes)) ** 2))
    mse = denom_ss / (n_total - d)
    if mse <= 0.0:
        raise DegenerateDataError("within-cell variance is zero")

    ce = c @ means
    middle = c @ np.diag(1.0 / data.n) @ c.T
    rank = matrix_rank(middle)
    numerator = float(ce @ moore_penrose(middle) @ ce) / rank
    return _result(Method.F, numerator / mse, RefDistribution.f(rank, n_total - d))


def welch_oneway(data: Dataset) -> TestResult:
    """Welch の異分散一元配置分散分析"""
    require_one_way(data, Method.WELCH)
    moments = moment_summary(data)
    if np.any(moments.variances <= 0.0):
        raise DegenerateDataError("Welch test needs positive variance in every group")

    d = data.cells
    n = data.n
    w = n / moments.variances
    w_sum = w.sum()
    weighted_mean = float(w @ moments.means) / w_sum
    a = float(w @ (moments.means - weighted_mean) ** 2) / (d - 1)
    tmp = float(np.sum((1.0 - w / w_sum) ** 2 / (n - 1.0)))
    b = 1.0 + 2.0 * (d - 2) / (d * d - 1.0) * tmp
    df2 = (d * d - 1.0) / (3.0 * tmp)
    return _result(Method.WELCH, a / b, RefDistribution.f(d - 1, df2))


def wts_test(data: Dataset, contrast: Optional[Matrix] = None) -> TestResult:
    """平均ベース Wald 型検定（漸近カイ二乗）"""
    c = resolve_contrast(data, contrast)
    moments = moment_summary(data)
    q, rank = wald_type(moments.means, moments.S_N, c, data.total)
    if rank == 0:
        raise DegenerateDataError("WTS is undefined: contrast covariance is zero")
    return _result(Method.WTS, q, RefDistribution.chi_square(rank))


def ats_test(data: Dataset, contrast: Optional[Matrix] = None) -> TestResult:
    """平均ベース ANOVA 型検定（F(f̂, f̂₀) 近似）"""
    c = resolve_contrast(data, contrast)
    moments = moment_summary(data)
    f_stat, f_hat, f0_hat = anova_type(moments.means, moments.S_N, moments.Lambda, c, data.total)
    return _result(Method.ATS, f_stat, RefDistribution.f(f_hat, f0_hat))


# ---------------------------------------------------------------------------
# 順位ベースの検定
# ---------------------------------------------------------------------------

def kruskal_wallis(data: Dataset, compat_printed: bool = False) -> TestResult:
    """Kruskal-Wallis 検定（同順位補正込み、漸近カイ二乗）"""
    require_one_way(data, Method.KW)
    if np.ptp(data.pooled) == 0.0:
        raise DegenerateDataError("all observations are identical")
    k = kruskal_wallis_statistic(compat_printed)(data)
    return _result(Method.KW, k, RefDistribution.chi_square(data.cells - 1))


def van_der_waerden(data: Dataset) -> TestResult:
    """van der Waerden の正規スコア検定"""
    require_one_way(data, Method.VDW)
    ranks = batch_midranks(data.pooled)
    scores = normal_quantile(ranks / (data.total + 1.0))
    s2 = float(np.sum(scores ** 2)) / (data.total - 1)
    if s2 <= 0.0:
        raise DegenerateDataError("normal scores have zero variance")
    score_means = cell_sums(scores, data.design) / data.n
    t = float(np.sum(data.n * score_means ** 2)) / s2
    return _result(Method.VDW, t, RefDistribution.chi_square(data.cells - 1))


def rank_wts(data: Dataset, contrast: Optional[Matrix] = None) -> TestResult:
    """順位ベース Wald 型検定（H0^F、漸近カイ二乗）"""
    c = resolve_contrast(data, contrast)
    _, v_n = rank_variances(data)
    q, rank = wald_type(pseudo_effects(data), v_n, c, data.total)
    if rank == 0:
        raise DegenerateDataError("rank WTS is undefined: all observations are tied")
    return _result(Method.RWTS, q, RefDistribution.chi_square(rank))


def rank_ats(data: Dataset, contrast: Optional[Matrix] = None) -> TestResult:
    """順位ベース ANOVA 型検定（H0^F、F(f̂, f̂₀) 近似）"""
    c = resolve_contrast(data, contrast)
    _, v_n = rank_variances(data)
    lam = diag(1.0 / (data.n - 1.0))
    f_stat, f_hat, f0_hat = anova_type(pseudo_effects(data), v_n, lam, c, data.total)
    return _result(Method.RATS, f_stat, RefDistribution.f(f_hat, f0_hat))
