"""
参照分布カーネル（正規・カイ二乗・F）

上側確率は正則化不完全ガンマ / 不完全ベータ関数から求め、分位点は生存関数上の
囲い込み付き求根で求める。t 分布はオラクル照合用の非公開関数のみ。
"""
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from scipy import optimize, special

from src.core.exceptions import DomainError


class DistKind(Enum):
    """参照分布の種類"""
    CHI_SQUARE = "chi-square"
    F = "F"
    NORMAL = "normal"


@dataclass(frozen=True)
class RefDistribution:
    """参照分布の記述子"""
    kind: DistKind
    df1: Optional[float] = None
    df2: Optional[float] = None

    def __post_init__(self):
        if self.kind is DistKind.NORMAL:
            if self.df1 is not None or self.df2 is not None:
                raise DomainError("normal distribution takes no degrees of freedom")
        elif self.kind is DistKind.CHI_SQUARE:
            if self.df2 is not None:
                raise DomainError("chi-square takes a single df")
            _check_df(self.df1)
        else:
            _check_df(self.df1)
            _check_df(self.df2)

    @classmethod
    def chi_square(cls, df: float) -> "RefDistribution":
        return cls(DistKind.CHI_SQUARE, float(df))

    @classmethod
    def f(cls, df1: float, df2: float) -> "RefDistribution":
        return cls(DistKind.F, float(df1), float(df2))

    @classmethod
    def normal(cls) -> "RefDistribution":
        return cls(DistKind.NORMAL)

    @property
    def df(self) -> Tuple[float, ...]:
        return tuple(v for v in (self.df1, self.df2) if v is not None)

    def __str__(self) -> str:
        if self.kind is DistKind.NORMAL:
            return "normal"
        if self.kind is DistKind.CHI_SQUARE:
            return f"chi-square({self.df1:g})"
        return f"F({self.df1:g}, {self.df2:g})"


def _check_df(df: Optional[float]) -> None:
    if df is None or not math.isfinite(df) or df <= 0:
        raise DomainError(f"degrees of freedom must be positive and finite, got {df}")


def _check_probability(p: float) -> None:
    if not 0.0 < p < 1.0:
        raise DomainError(f"probability must lie strictly inside (0, 1), got {p}")


def _clamp(p: float) -> float:
    return float(min(1.0, max(0.0, p)))


def normal_cdf(x: float) -> float:
    """標準正規分布関数 Φ(x)"""
    return _clamp(special.ndtr(x))


def normal_quantile(p):
    """Φ⁻¹(p)（配列も受け付ける）"""
    arr = np.asarray(p, dtype=np.float64)
    if np.any((arr <= 0.0) | (arr >= 1.0)) or np.any(np.isnan(arr)):
        raise DomainError(f"probability must lie strictly inside (0, 1), got {p}")
    out = special.ndtri(arr)
    return float(out) if out.ndim == 0 else out


def survival(dist: RefDistribution, x: float) -> float:
    """上側確率 P(X ≥ x)"""
    if math.isnan(x):
        raise DomainError("x must not be NaN")
    if dist.kind is DistKind.NORMAL:
        return normal_cdf(-x)
    if x <= 0:
        return 1.0
    if math.isinf(x):
        return 0.0
    if dist.kind is DistKind.CHI_SQUARE:
        return _clamp(special.gammaincc(dist.df1 / 2.0, x / 2.0))
    d1, d2 = dist.df1, dist.df2
    return _clamp(special.betainc(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * x)))


def _upper_bracket(dist: RefDistribution, target: float) -> float:
    """survival(hi) < target となる上端を倍々で探索"""
    hi = max(1.0, dist.df1 or 1.0)
    while survival(dist, hi) > target:
        hi *= 2.0
        if hi > 1e300:
            break
    return hi


def quantile(dist: RefDistribution, p: float) -> float:
    """p 分位点（survival(quantile) = 1 − p となる点）"""
    _check_probability(p)
    if dist.kind is DistKind.NORMAL:
        return normal_quantile(p)

    target = 1.0 - p
    hi = _upper_bracket(dist, target)
    lo = 0.0

    def excess(x: float) -> float:
        return survival(dist, x) - target

    # ブレント法（二分法と補間の併用）で囲い込み区間内を求根
    return float(optimize.brentq(excess, lo, hi, xtol=1e-14, rtol=8 * np.finfo(float).eps, maxiter=500))


def _student_t_survival(x: float, df: float) -> float:
    """P(T ≥ x)（照合用）"""
    return _clamp(special.stdtr(df, -x))


def _student_t_quantile(p: float, df: float) -> float:
    """t 分布の p 分位点（照合用）"""
    _check_probability(p)
    return float(special.stdtrit(df, p))
