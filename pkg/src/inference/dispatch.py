"""
手法タグから検定を実行するディスパッチャ
"""
from typing import Optional

from src.core.exceptions import ConfigurationError
from src.factorial.dataset import Dataset
from src.numerics.linalg import Matrix
from . import permutation, procedures
from .methods import Method
from .permutation import PermutationPlan
from .results import TestResult


def run_method(method: Method, data: Dataset, contrast: Optional[Matrix] = None,
               plan: Optional[PermutationPlan] = None, compat_printed: bool = False) -> TestResult:
    """手法を 1 つ実行（contrast 省略時は計画の既定仮説）"""
    if not method.applies_to(data.design):
        raise ConfigurationError(f"method {method.value} is not defined for layout {data.design.layout_name}")

    if method is Method.F:
        return procedures.anova_f(data, contrast, compat_printed=compat_printed)
    if method is Method.WELCH:
        return procedures.welch_oneway(data)
    if method is Method.WTS:
        return procedures.wts_test(data, contrast)
    if method is Method.ATS:
        return procedures.ats_test(data, contrast)
    if method is Method.KW:
        return procedures.kruskal_wallis(data, compat_printed=compat_printed)
    if method is Method.VDW:
        return procedures.van_der_waerden(data)
    if method is Method.RWTS:
        return procedures.rank_wts(data, contrast)
    if method is Method.RATS:
        return procedures.rank_ats(data, contrast)
    if method is Method.WTPS:
        return permutation.wtps(data, contrast, plan)
    if method is Method.RWTPS:
        return permutation.rank_wtps(data, contrast, plan)
    return permutation.kruskal_wallis_exact(data, plan, compat_printed=compat_printed)
