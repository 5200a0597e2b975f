"""
順列検定エンジンのテスト
"""
import warnings

import numpy as np
import pytest

from src.core.exceptions import DegenerateDataError, DomainError, PlanError, ResolutionWarning
from src.factorial import Dataset, Design
from src.inference import (
    Method,
    PermutationMode,
    PermutationPlan,
    check_resolution,
    kruskal_wallis_exact,
    permutation_pvalue,
    rank_wtps,
    wtps,
    wts_test,
)
from src.inference.permutation import count_arrangements, exact_plan
from src.inference.procedures import kruskal_wallis_statistic, wts_statistic
from src.simulation.distgen import normal

EXACT = PermutationPlan.full_enumeration()


class TestPlan:
    """順列計画"""

    def test_defaults(self):
        """既定の順列計画（B = 1999、分解能 1/2000）"""
        plan = PermutationPlan()
        assert plan.replicates == 1999
        assert plan.mode is PermutationMode.MONTE_CARLO
        assert plan.resolution == pytest.approx(1 / 2000)

    def test_monte_carlo_needs_replicates(self):
        """B = 0 のモンテカルロ計画は PlanError"""
        with pytest.raises(PlanError):
            PermutationPlan(replicates=0)

    def test_resolution_warning(self):
        """1/(B+1) > α なら ResolutionWarning"""
        with pytest.warns(ResolutionWarning):
            assert check_resolution(PermutationPlan(replicates=100), 0.005) is False

    def test_resolution_ok(self):
        """1/(B+1) ≤ α なら警告なし"""
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            assert check_resolution(PermutationPlan(replicates=1999), 0.005) is True

    def test_count_arrangements(self):
        """割り当て総数 N!/∏n_i!"""
        assert count_arrangements(Design.one_way([2, 2])) == 6
        assert count_arrangements(Design.one_way([2, 3, 4])) == 1260

    def test_exact_plan_falls_back_above_cap(self):
        """上限以内なら全列挙、超えればモンテカルロ"""
        plan = PermutationPlan(replicates=499, enumeration_cap=100)
        assert exact_plan(Design.one_way([2, 2]), plan).mode is PermutationMode.FULL_ENUMERATION
        assert exact_plan(Design.one_way([5, 5, 5]), plan).mode is PermutationMode.MONTE_CARLO


class TestPermutationPValue:
    """順列 p 値"""

    def test_exact_kruskal_wallis(self, separated_pair):
        """6 通りの分割のうち 2 通りで K = 2.4"""
        result = kruskal_wallis_exact(separated_pair)
        assert result.statistic == pytest.approx(2.4, abs=1e-12)
        assert result.p_value == pytest.approx(1 / 3, abs=1e-15)
        assert str(result.dist) == "permutation(exact,6)"

    def test_monte_carlo_agrees_with_enumeration(self, separated_pair):
        """B = 10000 のモンテカルロは正確な p 値 1/3 と 3SE 以内で一致"""
        p, _ = permutation_pvalue(kruskal_wallis_statistic(), separated_pair, PermutationPlan(replicates=10000))
        assert abs(p - 1 / 3) <= 3 * np.sqrt((1 / 3) * (2 / 3) / 10000)

    def test_enumeration_above_cap(self, separated_pair):
        """上限を超える全列挙は PlanError"""
        with pytest.raises(PlanError):
            permutation_pvalue(kruskal_wallis_statistic(), separated_pair, PermutationPlan.full_enumeration(5))

    def test_identical_observations_give_one(self):
        """全観測値が同一なら p = 1"""
        data = Dataset.from_groups([[2, 2, 2], [2, 2, 2]])
        p, observed = permutation_pvalue(wts_statistic(np.array([[0.5, -0.5], [-0.5, 0.5]])), data,
                                         PermutationPlan(replicates=99))
        assert observed == 0.0
        assert p == 1.0

    def test_extreme_observation_gives_resolution(self):
        """観測値が全再標本より大きいとき p = 1/(B+1)"""
        calls = {"n": 0}

        def statistic(data):
            calls["n"] += 1
            return 100.0 if calls["n"] == 1 else 0.0

        data = Dataset.from_groups([[1, 2, 3], [4, 5, 6]])
        p, observed = permutation_pvalue(statistic, data, PermutationPlan(replicates=49))
        assert observed == 100.0
        assert p == pytest.approx(1 / 50)

    def test_plain_callable_matches_batched_statistic(self, rng):
        """一括評価なしの統計量でも同じ p 値"""
        data = Dataset.from_groups([rng.normal(size=4), rng.normal(size=5)])
        plan = PermutationPlan(replicates=300, seed=7)
        batched = kruskal_wallis_statistic()

        def plain(d):
            return batched(d)

        assert permutation_pvalue(plain, data, plan) == permutation_pvalue(batched, data, plan)

    def test_kruskal_wallis_exact_all_tied(self):
        """全同順位は DegenerateDataError"""
        with pytest.raises(DegenerateDataError):
            kruskal_wallis_exact(Dataset.from_groups([[1, 1], [1, 1]]))


class TestStudentizedPermutation:
    """WTPS / rWTPS"""

    def test_wtps_observed_statistic_is_wts(self, rng):
        """WTPS の観測統計量は WTS に一致"""
        data = Dataset.from_groups([rng.normal(size=5), rng.normal(size=8), rng.normal(size=6)])
        result = wtps(data, plan=PermutationPlan(replicates=199))
        assert result.statistic == pytest.approx(wts_test(data).statistic, rel=1e-10)
        assert result.method is Method.WTPS
        assert result.df == ()
        assert str(result.dist) == "permutation(199)"

    def test_same_seed_same_result(self, rng):
        """同じ種なら同じ結果"""
        data = Dataset.from_groups([rng.normal(size=5), rng.normal(size=7)])
        plan = PermutationPlan(replicates=513, seed=99)
        assert wtps(data, plan=plan) == wtps(data, plan=plan)
        assert rank_wtps(data, plan=plan) == rank_wtps(data, plan=plan)

    def test_seed_changes_p_value(self, rng):
        """種が変われば p 値も変わる"""
        data = Dataset.from_groups([rng.normal(size=6), rng.normal(0.5, 1.0, size=6)])
        p1 = wtps(data, plan=PermutationPlan(replicates=999, seed=1)).p_value
        p2 = wtps(data, plan=PermutationPlan(replicates=999, seed=2)).p_value
        assert p1 != p2

    def test_rank_wtps_monotone_invariance(self, rng):
        """単調変換で rWTPS の p 値は不変"""
        data = Dataset.from_groups([rng.normal(size=5), rng.normal(size=6), rng.normal(size=4)])
        plan = PermutationPlan(replicates=299, seed=3)
        assert rank_wtps(data, plan=plan).p_value == rank_wtps(data.map(np.exp), plan=plan).p_value

    def test_rank_wtps_identical_groups(self):
        """同じ標本の群なら rWTPS の統計量は 0"""
        data = Dataset.from_groups([[1, 2, 3, 4], [4, 3, 2, 1]])
        result = rank_wtps(data, plan=PermutationPlan(replicates=199))
        assert result.statistic == pytest.approx(0.0, abs=1e-12)
        assert result.p_value > 0.9

    def test_zero_observed_statistic_bounded_below(self):
        """p 値は 1/(B+1) 以上"""
        data = Dataset.from_groups([[1, 2, 3], [3, 2, 1]])
        result = wtps(data, plan=PermutationPlan(replicates=99))
        assert result.p_value >= 1 / 100

    def test_wtps_two_way_interaction(self, rng):
        """二元配置の交互作用に WTPS を適用"""
        design = Design.two_way(2, 3, [3] * 6)
        data = Dataset(design, rng.normal(size=design.total))
        assert 0.0 < wtps(data, plan=PermutationPlan(replicates=99)).p_value <= 1.0

    def test_wtps_needs_two_per_cell(self):
        """1 観測のセルは DomainError"""
        with pytest.raises(DomainError):
            wtps(Dataset.from_groups([[1], [2, 3, 4]]))


def _exchangeable_rejection_rate(method, alpha, n_perm, n_sim, seed):
    rng = np.random.default_rng(seed)
    law = normal()
    rejections = 0
    for i in range(n_sim):
        data = Dataset.from_groups([law.draw(rng, 5), law.draw(rng, 5), law.draw(rng, 8)])
        plan = PermutationPlan(replicates=n_perm, seed=i)
        p = (wtps if method is Method.WTPS else rank_wtps)(data, plan=plan).p_value
        rejections += p <= alpha
    return rejections / n_sim


@pytest.mark.slow
class TestExactness:
    """交換可能な帰無仮説の下での棄却率"""

    def test_wtps_at_five_percent(self):
        """α = 5% で WTPS の棄却率は 3SE 以内"""
        rate = _exchangeable_rejection_rate(Method.WTPS, 0.05, 999, 2000, 11)
        assert abs(rate - 0.05) <= 3 * np.sqrt(0.05 * 0.95 / 2000)

    def test_rank_wtps_at_half_percent(self):
        """α = 0.5% で rWTPS の棄却率は 3SE 以内"""
        rate = _exchangeable_rejection_rate(Method.RWTPS, 0.005, 1999, 2000, 12)
        assert abs(rate - 0.005) <= 3 * np.sqrt(0.005 * 0.995 / 2000)
