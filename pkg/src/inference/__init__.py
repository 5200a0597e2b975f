"""
factest - 検定手法モジュール初期化
"""

from .methods import Method, applicable_methods, resolve_methods
from .results import PermutationMode, PermutationReference, TestResult
from .procedures import (
    MomentSummary,
    anova_f,
    anova_type,
    ats_test,
    kruskal_wallis,
    moment_summary,
    rank_ats,
    rank_wts,
    van_der_waerden,
    wald_type,
    welch_oneway,
    wts_test,
)
from .permutation import PermutationPlan, check_resolution, kruskal_wallis_exact, permutation_pvalue, rank_wtps, wtps
from .dispatch import run_method

__all__ = [
    "Method",
    "applicable_methods",
    "resolve_methods",
    "PermutationMode",
    "PermutationReference",
    "TestResult",
    "MomentSummary",
    "anova_f",
    "anova_type",
    "ats_test",
    "kruskal_wallis",
    "moment_summary",
    "rank_ats",
    "rank_wts",
    "van_der_waerden",
    "wald_type",
    "welch_oneway",
    "wts_test",
    "PermutationPlan",
    "check_resolution",
    "kruskal_wallis_exact",
    "permutation_pvalue",
    "rank_wtps",
    "wtps",
    "run_method",
]
