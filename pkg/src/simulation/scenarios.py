"""
シミュレーションシナリオのレジストリ

一元配置（d = 5）29 行、二元配置（2 × 5）24 行。
"""
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Sequence, Tuple

from src.core.exceptions import RegistryError
from src.factorial.design import Design
from .distgen import ErrorLaw, chi_square, exponential, gamma, logistic, normal, poisson

ONEWAY = "oneway"
TWOWAY = "twoway"
LAYOUTS = (ONEWAY, TWOWAY)
TWOWAY_FACTORS = (2, 5)


class ColorClass(Enum):
    """シナリオの種類（図の色分け）"""
    BALANCED_HOMOSCEDASTIC = "balanced-homoscedastic"
    UNBALANCED_HOMOSCEDASTIC = "unbalanced-homoscedastic"
    BALANCED_HETEROSCEDASTIC = "balanced-heteroscedastic"
    POSITIVE_PAIRING = "positive pairing"
    NEGATIVE_PAIRING = "negative pairing"
    OUTLIER_10_15 = "10/15% outlier"
    OUTLIER_20 = "20% outlier"


def color_class(label: str) -> ColorClass:
    """ラベル（meaning 列）から色クラスを決める"""
    if "20% outlier" in label:
        return ColorClass.OUTLIER_20
    if "10% outlier" in label or "15% outlier" in label:
        return ColorClass.OUTLIER_10_15
    if "positive pairing" in label:
        return ColorClass.POSITIVE_PAIRING
    if "negative pairing" in label:
        return ColorClass.NEGATIVE_PAIRING
    for cls in (ColorClass.UNBALANCED_HOMOSCEDASTIC, ColorClass.BALANCED_HETEROSCEDASTIC,
                ColorClass.BALANCED_HOMOSCEDASTIC):
        if label == cls.value:
            return cls
    raise RegistryError(f"label has no color class: {label}")


@dataclass(frozen=True)
class Scenario:
    """シナリオ（分布・基本標本サイズ・尺度・意味）"""
    layout: str
    setting: int
    index: int
    law: ErrorLaw
    base_sizes: Tuple[int, ...]
    scales: Tuple[float, ...]
    label: str

    def __post_init__(self):
        if len(self.base_sizes) != len(self.scales):
            raise RegistryError(f"{self.key}: sizes and scales differ in length")

    @property
    def key(self) -> Tuple[str, int, int]:
        return self.layout, self.setting, self.index

    @property
    def factors(self) -> Tuple[int, ...]:
        return (len(self.base_sizes),) if self.layout == ONEWAY else TWOWAY_FACTORS

    def sizes(self, m: int = 0) -> Tuple[int, ...]:
        if m < 0:
            raise RegistryError(f"sample size increment must be >= 0, got {m}")
        return tuple(n + m for n in self.base_sizes)

    def design(self, m: int = 0) -> Design:
        return Design(self.factors, self.sizes(m))

    @property
    def h0f_holds(self) -> bool:
        """H0^F（全セルの分布が等しい）が成り立つか。尺度が一定のときのみ"""
        return len(set(self.scales)) == 1

    @property
    def color_class(self) -> ColorClass:
        return color_class(self.label)

    @property
    def stream_key(self) -> Tuple[int, int, int]:
        return LAYOUTS.index(self.layout), self.setting, self.index


# ---------------------------------------------------------------------------
# 共通部品
# ---------------------------------------------------------------------------

BH = "balanced-homoscedastic"
UH = "unbalanced-homoscedastic"
BHET = "balanced-heteroscedastic"
POS = "unbalanced-heteroscedastic (positive pairing)"
NEG = "unbalanced-heteroscedastic (negative pairing)"


def _outlier(pct: int) -> str:
    return f"{BH} with {pct}% outlier"


def _mix(base, outlier, pct: int) -> ErrorLaw:
    return ErrorLaw(base, outlier, pct / 100.0)


def _pure(component) -> ErrorLaw:
    return ErrorLaw(component)


# 一元配置
_N_BAL = (5, 5, 5, 5, 5)
_N_UNB = (5, 5, 5, 5, 15)
_N_PAIR = (4, 7, 10, 13, 15)
_S_ONE = (1.0,) * 5
_S_UP = (1.0, 1.2, 1.5, 1.7, 2.0)
_S_DOWN = (2.0, 1.7, 1.5, 1.2, 1.0)

# 二元配置（A の水準が遅く変わる順）
_N3 = (5,) * 5
_N1 = (4,) * 5
_N2 = (7,) * 5
_T_BAL = _N3 + _N3
_T_UNB = _N1 + _N2
_T_REV = _N2 + _N1
_T_ONE = (1.0,) * 10
_T_UP = (1.0,) * 5 + (2.0,) * 5
_T_DOWN = (2.0,) * 5 + (1.0,) * 5

_Row = Tuple[ErrorLaw, Sequence[int], Sequence[float], str]


def _oneway_rows() -> Dict[int, List[_Row]]:
    n01 = _pure(normal())
    lg = _pure(logistic())
    ex = _pure(exponential(1.0))
    c3 = _pure(chi_square(3))
    c10 = _pure(chi_square(10))
    g10 = _pure(gamma(10, 0.1))
    g1 = _pure(gamma(1, 2))
    poi = _pure(poisson(25))
    return {
        1: [
            (n01, _N_BAL, _S_ONE, BH),
            (n01, _N_UNB, _S_ONE, UH),
            (n01, _N_BAL, _S_UP, BHET),
            (n01, _N_PAIR, _S_UP, POS),
            (n01, _N_PAIR, _S_DOWN, NEG),
            (_mix(normal(), normal(10, 1), 10), _N_BAL, _S_ONE, _outlier(10)),
            (_mix(normal(), normal(10, 1), 20), _N_BAL, _S_ONE, _outlier(20)),
            (lg, _N_PAIR, _S_UP, POS),
            (lg, _N_PAIR, _S_DOWN, NEG),
        ],
        2: [
            (ex, _N_BAL, _S_ONE, BH),
            (ex, _N_UNB, _S_ONE, UH),
            (_mix(exponential(1.0), exponential(0.1), 10), _N_BAL, _S_ONE, _outlier(10)),
            (_mix(exponential(1.0), exponential(0.1), 20), _N_BAL, _S_ONE, _outlier(20)),
            (c3, _N_BAL, _S_ONE, BH),
            (c3, _N_UNB, _S_ONE, UH),
            (c10, _N_BAL, _S_ONE, BH),
            (c10, _N_UNB, _S_ONE, UH),
            (g10, _N_BAL, _S_ONE, BH),
            (g10, _N_UNB, _S_ONE, UH),
            (_mix(gamma(1, 0.1), gamma(10, 0.1), 10), _N_BAL, _S_ONE, _outlier(10)),
            (_mix(gamma(1, 0.1), gamma(10, 0.1), 20), _N_BAL, _S_ONE, _outlier(20)),
            (g1, _N_BAL, _S_ONE, BH),
            (g1, _N_UNB, _S_ONE, UH),
            (_mix(gamma(1, 2), gamma(10, 2), 10), _N_BAL, _S_ONE, _outlier(10)),
            (_mix(gamma(1, 2), gamma(10, 2), 20), _N_BAL, _S_ONE, _outlier(20)),
        ],
        3: [
            (poi, _N_BAL, _S_ONE, BH),
            (poi, _N_UNB, _S_ONE, UH),
            (_mix(poisson(25), poisson(5), 10), _N_BAL, _S_ONE, _outlier(10)),
            (_mix(poisson(25), poisson(5), 20), _N_BAL, _S_ONE, _outlier(20)),
        ],
    }


def _twoway_rows() -> Dict[int, List[_Row]]:
    n01 = _pure(normal())
    lg = _pure(logistic())
    ex = _pure(exponential(1.0))
    c3 = _pure(chi_square(3))
    c10 = _pure(chi_square(10))
    g10 = _pure(gamma(10, 0.1))
    g1 = _pure(gamma(1, 2))
    poi = _pure(poisson(25))
    return {
        1: [
            (n01, _T_BAL, _T_ONE, BH),
            (n01, _T_UNB, _T_ONE, UH),
            (n01, _T_BAL, _T_UP, BHET),
            (n01, _T_UNB, _T_UP, POS),
            (n01, _T_REV, _T_DOWN, NEG),
            (_mix(normal(), normal(10, 1), 15), _T_BAL, _T_ONE, _outlier(15)),
            (lg, _T_UNB, _T_UP, POS),
            (lg, _T_REV, _T_DOWN, NEG),
        ],
        2: [
            (ex, _T_BAL, _T_ONE, BH),
            (ex, _T_UNB, _T_ONE, UH),
            (_mix(exponential(1.0), exponential(0.1), 15), _T_BAL, _T_ONE, _outlier(15)),
            (c3, _T_BAL, _T_ONE, BH),
            (c3, _T_UNB, _T_ONE, UH),
            (c10, _T_BAL, _T_ONE, BH),
            (c10, _T_UNB, _T_ONE, UH),
            (g10, _T_BAL, _T_ONE, BH),
            (g10, _T_UNB, _T_ONE, UH),
            (_mix(gamma(1, 0.1), gamma(10, 0.1), 15), _T_BAL, _T_ONE, _outlier(15)),
            (g1, _T_BAL, _T_ONE, BH),
            (g1, _T_UNB, _T_ONE, UH),
            (_mix(gamma(1, 2), gamma(10, 2), 15), _T_BAL, _T_ONE, _outlier(15)),
        ],
        3: [
            (poi, _T_BAL, _T_ONE, BH),
            (poi, _T_UNB, _T_ONE, UH),
            (_mix(poisson(25), poisson(5), 15), _T_BAL, _T_ONE, _outlier(15)),
        ],
    }


def _build_registry() -> Dict[Tuple[str, int, int], Scenario]:
    registry = {}
    for layout, rows in ((ONEWAY, _oneway_rows()), (TWOWAY, _twoway_rows())):
        for setting, table in rows.items():
            for index, (law, sizes, scales, label) in enumerate(table, start=1):
                registry[(layout, setting, index)] = Scenario(
                    layout=layout,
                    setting=setting,
                    index=index,
                    law=law,
                    base_sizes=tuple(sizes),
                    scales=tuple(scales),
                    label=label,
                )
    return registry


_REGISTRY = _build_registry()


def build_scenario(layout: str, setting: int, index: int) -> Scenario:
    """(レイアウト, 設定, 行番号) のシナリオ"""
    try:
        return _REGISTRY[(layout, int(setting), int(index))]
    except KeyError:
        raise RegistryError(f"no scenario {index} in {layout} setting {setting}") from None


def scenarios(layouts: Sequence[str] = LAYOUTS, settings: Sequence[int] = (1, 2, 3)) -> List[Scenario]:
    """条件に合うシナリオ（レイアウト・設定・行番号順）"""
    for layout in layouts:
        if layout not in LAYOUTS:
            raise RegistryError(f"unknown layout: {layout}")
    return [s for key, s in sorted(_REGISTRY.items(), key=lambda kv: (LAYOUTS.index(kv[0][0]), kv[0][1], kv[0][2]))
            if s.layout in layouts and s.setting in settings]
