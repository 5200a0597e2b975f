"""
誤差分布の生成（標準化済み）とシフト・スケールモデルによるデータ生成
"""
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from src.core.exceptions import DomainError
from src.factorial.dataset import Dataset


class Family(Enum):
    """分布族"""
    NORMAL = "normal"            # (平均, 標準偏差)
    EXPONENTIAL = "exponential"  # (レート)
    CHI_SQUARE = "chi-square"    # (自由度)
    LOGISTIC = "logistic"        # (位置, 尺度)
    GAMMA = "gamma"              # (形状, レート)
    POISSON = "poisson"          # (平均)


_ARITY = {
    Family.NORMAL: 2,
    Family.EXPONENTIAL: 1,
    Family.CHI_SQUARE: 1,
    Family.LOGISTIC: 2,
    Family.GAMMA: 2,
    Family.POISSON: 1,
}


@dataclass(frozen=True)
class Component:
    """単一の分布（パラメータ付き）"""
    family: Family
    params: Tuple[float, ...]

    def __post_init__(self):
        params = tuple(float(p) for p in self.params)
        object.__setattr__(self, "params", params)
        if len(params) != _ARITY[self.family]:
            raise DomainError(f"{self.family.value} takes {_ARITY[self.family]} parameters, got {len(params)}")
        if not all(math.isfinite(p) for p in params):
            raise DomainError(f"{self.family.value} parameters must be finite")
        # 位置パラメータ以外は正
        positive = params[1:] if self.family in (Family.NORMAL, Family.LOGISTIC) else params
        if any(p <= 0 for p in positive):
            raise DomainError(f"{self.family.value} parameters must be positive, got {params}")

    @property
    def mean(self) -> float:
        p = self.params
        if self.family in (Family.NORMAL, Family.LOGISTIC):
            return p[0]
        if self.family is Family.EXPONENTIAL:
            return 1.0 / p[0]
        if self.family is Family.GAMMA:
            return p[0] / p[1]
        return p[0]

    @property
    def variance(self) -> float:
        p = self.params
        if self.family is Family.NORMAL:
            return p[1] ** 2
        if self.family is Family.LOGISTIC:
            return (math.pi * p[1]) ** 2 / 3.0
        if self.family is Family.EXPONENTIAL:
            return 1.0 / p[0] ** 2
        if self.family is Family.CHI_SQUARE:
            return 2.0 * p[0]
        if self.family is Family.GAMMA:
            return p[0] / p[1] ** 2
        return p[0]

    def draw(self, generator: np.random.Generator, size: int) -> np.ndarray:
        p = self.params
        if self.family is Family.NORMAL:
            return generator.normal(p[0], p[1], size)
        if self.family is Family.EXPONENTIAL:
            return generator.exponential(1.0 / p[0], size)
        if self.family is Family.CHI_SQUARE:
            return generator.chisquare(p[0], size)
        if self.family is Family.LOGISTIC:
            return generator.logistic(p[0], p[1], size)
        if self.family is Family.GAMMA:
            return generator.gamma(p[0], 1.0 / p[1], size)
        return generator.poisson(p[0], size).astype(np.float64)

    def __str__(self) -> str:
        args = ",".join(f"{v:g}" for v in self.params)
        return {
            Family.NORMAL: "N",
            Family.EXPONENTIAL: "exp",
            Family.CHI_SQUARE: "chi2",
            Family.LOGISTIC: "Logistic",
            Family.GAMMA: "Gamma",
            Family.POISSON: "Poi",
        }[self.family] + f"({args})"


def normal(mean: float = 0.0, sd: float = 1.0) -> Component:
    return Component(Family.NORMAL, (mean, sd))


def exponential(rate: float = 1.0) -> Component:
    return Component(Family.EXPONENTIAL, (rate,))


def chi_square(df: float) -> Component:
    return Component(Family.CHI_SQUARE, (df,))


def logistic(loc: float = 0.0, scale: float = 1.0) -> Component:
    return Component(Family.LOGISTIC, (loc, scale))


def gamma(shape: float, rate: float) -> Component:
    return Component(Family.GAMMA, (shape, rate))


def poisson(rate: float) -> Component:
    return Component(Family.POISSON, (rate,))


@dataclass(frozen=True)
class ErrorLaw:
    """誤差分布（外れ値成分との混合を含む）"""
    base: Component
    outlier: Optional[Component] = None
    fraction: float = 0.0

    def __post_init__(self):
        if self.outlier is None:
            if self.fraction != 0.0:
                raise DomainError("outlier fraction given without an outlier component")
        elif not 0.0 < self.fraction < 1.0:
            raise DomainError(f"outlier fraction must lie in (0, 1), got {self.fraction}")

    @property
    def family(self) -> Family:
        return self.base.family

    @property
    def is_mixture(self) -> bool:
        return self.outlier is not None

    @property
    def mean(self) -> float:
        if not self.is_mixture:
            return self.base.mean
        q = self.fraction
        return (1.0 - q) * self.base.mean + q * self.outlier.mean

    @property
    def variance(self) -> float:
        if not self.is_mixture:
            return self.base.variance
        q = self.fraction
        second = (1.0 - q) * (self.base.variance + self.base.mean ** 2) \
            + q * (self.outlier.variance + self.outlier.mean ** 2)
        return second - self.mean ** 2

    def standardize(self, x: np.ndarray) -> np.ndarray:
        """解析的な平均・分散で標準化"""
        return (np.asarray(x, dtype=np.float64) - self.mean) / math.sqrt(self.variance)

    def __str__(self) -> str:
        if not self.is_mixture:
            return str(self.base)
        pct_out = round(self.fraction * 100)
        return f"{100 - pct_out}% {self.base} & {pct_out}% {self.outlier}"


@dataclass(frozen=True)
class RngStream:
    """(master_seed, stream_id) で決まる独立な乱数ストリーム（Philox）"""
    master_seed: int
    stream_id: Tuple[int, ...] = ()

    def __post_init__(self):
        if self.master_seed < 0:
            raise DomainError("master seed must be non-negative")
        object.__setattr__(self, "stream_id", tuple(int(i) for i in self.stream_id))

    def _sequence(self) -> np.random.SeedSequence:
        return np.random.SeedSequence(entropy=self.master_seed, spawn_key=self.stream_id)

    def generator(self) -> np.random.Generator:
        """新しい Generator（呼ぶたびに同じ列の先頭から）"""
        return np.random.Generator(np.random.Philox(self._sequence()))

    def child(self, *key: int) -> "RngStream":
        return RngStream(self.master_seed, self.stream_id + tuple(key))

    def derive_seed(self) -> int:
        """このストリームから 64 ビットの種を導出"""
        return int(self._sequence().generate_state(1, dtype=np.uint64)[0])


def _as_generator(rng) -> np.random.Generator:
    return rng.generator() if isinstance(rng, RngStream) else rng


def sample_standardized(law: ErrorLaw, n: int, rng) -> np.ndarray:
    """
    標準化済み誤差を n 個生成

    混合分布では各観測が独立に確率 fraction で外れ値成分から引かれる。
    rng には RngStream か numpy の Generator を渡す。
    """
    if n < 1:
        raise DomainError(f"sample size must be >= 1, got {n}")
    generator = _as_generator(rng)
    x = law.base.draw(generator, n)
    if law.is_mixture:
        outliers = law.outlier.draw(generator, n)
        x = np.where(generator.random(n) < law.fraction, outliers, x)
    return law.standardize(x)


def generate_dataset(scenario, m: int, rng) -> Dataset:
    """シフト・スケールモデル X_ik = σ_i ε_ik（全セル平均 0）でデータを生成"""
    design = scenario.design(m)
    generator = _as_generator(rng)
    pooled = np.concatenate([
        sigma * sample_standardized(scenario.law, n_i, generator)
        for n_i, sigma in zip(design.cell_sizes, scenario.scales)
    ])
    return Dataset(design, pooled)
