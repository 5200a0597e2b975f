"""
検定手法レジストリ
"""
from enum import Enum
from typing import List, Sequence

from src.core.exceptions import ConfigurationError
from src.factorial.design import Design, HypothesisScale


class Method(Enum):
    """検定手法タグ"""
    F = "F"
    WELCH = "Welch"
    WTS = "WTS"
    ATS = "ATS"
    KW = "KW"
    VDW = "VDW"
    RWTS = "rWTS"
    RATS = "rATS"
    WTPS = "WTPS"
    RWTPS = "rWTPS"
    KW_EXACT = "KW-exact"

    @classmethod
    def parse(cls, tag: str) -> "Method":
        try:
            return cls(tag)
        except ValueError:
            known = ", ".join(m.value for m in cls)
            raise ConfigurationError(f"unknown method: {tag} (known: {known})")

    @property
    def scale(self) -> HypothesisScale:
        """手法が本来対象とする帰無仮説の尺度"""
        if self in _MEAN_BASED:
            return HypothesisScale.MEAN
        return HypothesisScale.DISTRIBUTION

    @property
    def one_way_only(self) -> bool:
        return self in _ONE_WAY_ONLY

    @property
    def uses_permutation(self) -> bool:
        return self in (Method.WTPS, Method.RWTPS, Method.KW_EXACT)

    def applies_to(self, design: Design) -> bool:
        return design.is_one_way or not self.one_way_only


_MEAN_BASED = (Method.F, Method.WELCH, Method.WTS, Method.ATS, Method.WTPS)
_ONE_WAY_ONLY = (Method.WELCH, Method.KW, Method.KW_EXACT, Method.VDW)

# 出力行の並び順
METHOD_ORDER: List[Method] = list(Method)


def applicable_methods(design: Design) -> List[Method]:
    """計画に適用できる手法（レジストリ順）"""
    return [m for m in METHOD_ORDER if m.applies_to(design)]


def resolve_methods(tags: Sequence[str], design: Design) -> List[Method]:
    """タグ列を手法に変換（空なら適用可能な全手法）。適用外の手法は設定エラー"""
    if not tags:
        return applicable_methods(design)
    methods = [Method.parse(t) for t in tags]
    for method in methods:
        if not method.applies_to(design):
            raise ConfigurationError(f"method {method.value} is not defined for layout {design.layout_name}")
    return sorted(set(methods), key=METHOD_ORDER.index)
