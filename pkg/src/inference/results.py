"""
検定結果
"""
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Optional, Tuple, Union

from src.core.exceptions import DomainError
from src.factorial.design import HypothesisScale
from src.numerics.distfn import RefDistribution
from .methods import Method


class PermutationMode(Enum):
    """順列分布の求め方"""
    MONTE_CARLO = "monte-carlo"
    FULL_ENUMERATION = "full-enumeration"


@dataclass(frozen=True)
class PermutationReference:
    """順列分布による参照（B 回の再標本化、または全列挙）"""
    replicates: int
    mode: PermutationMode = PermutationMode.MONTE_CARLO

    def __str__(self) -> str:
        if self.mode is PermutationMode.FULL_ENUMERATION:
            return f"permutation(exact,{self.replicates})"
        return f"permutation({self.replicates})"


Reference = Union[RefDistribution, PermutationReference]


@dataclass(frozen=True)
class TestResult:
    """検定結果（統計量・参照分布・p 値）"""
    __test__ = False

    method: Method
    statistic: float
    dist: Reference
    df: Tuple[float, ...]
    p_value: float
    hypothesis: HypothesisScale

    def __post_init__(self):
        if not math.isfinite(self.statistic):
            raise DomainError(f"{self.method.value}: statistic must be finite, got {self.statistic}")
        if not 0.0 <= self.p_value <= 1.0:
            raise DomainError(f"{self.method.value}: p-value outside [0, 1]: {self.p_value}")
        if any(not df > 0 for df in self.df):
            raise DomainError(f"{self.method.value}: degrees of freedom must be positive: {self.df}")

    @property
    def df1(self) -> Optional[float]:
        return self.df[0] if self.df else None

    @property
    def df2(self) -> Optional[float]:
        return self.df[1] if len(self.df) > 1 else None

    def rejects(self, alpha: float) -> bool:
        return self.p_value <= alpha

    def to_dict(self) -> Dict[str, object]:
        return {
            "method": self.method.value,
            "statistic": self.statistic,
            "dist": str(self.dist),
            "df1": self.df1,
            "df2": self.df2,
            "p_value": self.p_value,
            "hypothesis": self.hypothesis.value,
        }
