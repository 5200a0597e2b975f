"""
分布生成・シナリオレジストリ・シミュレーションエンジンのテスト
"""
import logging
import math
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from src.core.config import build_run_config
from src.core.exceptions import ConfigurationError, DegenerateDataError, DomainError, RegistryError, ResolutionWarning
from src.core.logger import setup_logging
from src.inference import Method
from src.simulation import (
    RESULT_COLUMNS,
    ColorClass,
    ErrorLaw,
    GridCell,
    RateEstimate,
    RngStream,
    build_scenario,
    color_class,
    generate_dataset,
    run_cell,
    run_grid,
    sample_standardized,
    scenarios,
)
from src.simulation import engine
from src.simulation.distgen import exponential, gamma, normal, poisson
from src.utils.io import csv_text

FIXTURES = Path(__file__).parent / "fixtures"


def _joined(values):
    return " ".join(f"{v:g}" for v in values)


def _band(alpha, n_sim):
    """α を中心とした 3 MC 標準誤差の幅"""
    return 3 * math.sqrt(alpha * (1 - alpha) / n_sim)


class TestErrorLaws:
    """誤差分布と標準化"""

    def test_exponential_standardizer(self):
        """指数分布は解析的な平均・分散で標準化される"""
        law = ErrorLaw(exponential(1.0))
        np.testing.assert_allclose(law.standardize([0.0, 1.0, 3.0]), [-1.0, 0.0, 2.0])

    def test_poisson_standardizer(self):
        """ポアソン分布の標準化"""
        law = ErrorLaw(poisson(25))
        np.testing.assert_allclose(law.standardize([25.0, 30.0, 15.0]), [0.0, 1.0, -2.0])

    def test_mixture_moments(self):
        """混合分布の平均・分散と表示"""
        law = ErrorLaw(normal(), normal(10, 1), 0.1)
        assert law.mean == pytest.approx(1.0)
        assert law.variance == pytest.approx(10.0)
        assert str(law) == "90% N(0,1) & 10% N(10,1)"

    def test_gamma_rate_parameterization(self):
        """Gamma(形状, レート) の平均と分散"""
        g = gamma(10, 0.1)
        assert g.mean == pytest.approx(100.0)
        assert g.variance == pytest.approx(1000.0)

    def test_invalid_parameters(self):
        """不正なパラメータは DomainError"""
        with pytest.raises(DomainError):
            exponential(0.0)
        with pytest.raises(DomainError):
            ErrorLaw(normal(), normal(10, 1), 1.5)
        with pytest.raises(DomainError):
            ErrorLaw(normal(), None, 0.2)

    @pytest.mark.parametrize("law", [
        ErrorLaw(exponential(1.0)),
        ErrorLaw(gamma(1, 2), gamma(10, 2), 0.2),
        ErrorLaw(poisson(25), poisson(5), 0.1),
    ])
    def test_standardized_draws_have_unit_moments(self, law):
        """標準化後の標本は平均 0・分散 1"""
        x = sample_standardized(law, 200_000, RngStream(5))
        assert abs(x.mean()) < 0.02
        assert x.var() == pytest.approx(1.0, abs=0.03)

    @pytest.mark.parametrize("fraction", [0.1, 0.15, 0.2])
    def test_outlier_share_matches_fraction(self, fraction):
        """外れ値成分から引かれる割合は宣言した混合比に一致"""
        law = ErrorLaw(normal(), normal(10, 1), fraction)
        raw = sample_standardized(law, 100_000, RngStream(11)) * math.sqrt(law.variance) + law.mean
        share = float(np.mean(raw > 5.0))
        assert share == pytest.approx(fraction, abs=4 * math.sqrt(fraction * (1 - fraction) / 100_000))

    def test_poisson_draws_lie_on_integer_lattice(self):
        """ポアソン混合の生の値は非負整数"""
        law = ErrorLaw(poisson(25), poisson(5), 0.2)
        raw = sample_standardized(law, 10_000, RngStream(2)) * math.sqrt(law.variance) + law.mean
        np.testing.assert_allclose(raw, np.round(raw), atol=1e-9)
        assert raw.min() >= 0.0

    def test_sample_size_must_be_positive(self):
        with pytest.raises(DomainError):
            sample_standardized(ErrorLaw(normal()), 0, RngStream(1))


class TestRngStream:
    """乱数ストリーム"""

    def test_same_stream_same_draws(self):
        """同じ (seed, stream_id) は同じ乱数列"""
        a = RngStream(42, (1, 2)).generator().random(5)
        b = RngStream(42, (1, 2)).generator().random(5)
        np.testing.assert_array_equal(a, b)

    def test_children_are_distinct(self):
        """子ストリームは互いに異なる"""
        parent = RngStream(42, (1,))
        assert parent.child(0).generator().random() != parent.child(1).generator().random()
        assert parent.child(0).derive_seed() != parent.child(1).derive_seed()

    def test_negative_seed(self):
        with pytest.raises(DomainError):
            RngStream(-1)


class TestScenarioRegistry:
    """シナリオレジストリ"""

    def test_counts(self):
        """設定ごとのシナリオ数"""
        assert len(scenarios(["oneway"])) == 29
        assert len(scenarios(["twoway"])) == 24
        assert [len(scenarios(["oneway"], [s])) for s in (1, 2, 3)] == [9, 16, 4]
        assert [len(scenarios(["twoway"], [s])) for s in (1, 2, 3)] == [8, 13, 3]

    def test_matches_reference_table(self):
        """全 53 行が参照表と一致"""
        expected = pd.read_csv(FIXTURES / "scenarios.csv", dtype=str)
        assert len(expected) == 53
        for row in expected.to_dict("records"):
            scenario = build_scenario(row["layout"], int(row["setting"]), int(row["index"]))
            assert str(scenario.law) == row["law"], scenario.key
            assert _joined(scenario.base_sizes) == row["sizes"], scenario.key
            assert _joined(scenario.scales) == row["scales"], scenario.key
            assert scenario.label == row["label"], scenario.key
            assert str(scenario.h0f_holds) == row["h0f_holds"], scenario.key

    def test_positive_pairing_example(self):
        """正の対応（大きい標本に大きい分散）"""
        s = build_scenario("oneway", 1, 4)
        assert s.base_sizes == (4, 7, 10, 13, 15)
        assert s.scales == (1.0, 1.2, 1.5, 1.7, 2.0)
        assert s.color_class is ColorClass.POSITIVE_PAIRING

    def test_sizes_grow_with_m(self):
        """実効サイズは基本サイズ + m"""
        assert build_scenario("twoway", 3, 2).sizes(5) == (9,) * 5 + (12,) * 5

    def test_unknown_scenario(self):
        """存在しないシナリオ・レイアウトは RegistryError"""
        with pytest.raises(RegistryError):
            build_scenario("oneway", 3, 5)
        with pytest.raises(RegistryError):
            scenarios(["threeway"])

    def test_color_classes(self):
        """ラベルから色分類への対応"""
        assert color_class("unbalanced-heteroscedastic (positive pairing)") is ColorClass.POSITIVE_PAIRING
        assert color_class("balanced-homoscedastic with 15% outlier") is ColorClass.OUTLIER_10_15
        assert color_class("balanced-homoscedastic with 20% outlier") is ColorClass.OUTLIER_20
        assert color_class("balanced-heteroscedastic") is ColorClass.BALANCED_HETEROSCEDASTIC
        with pytest.raises(RegistryError):
            color_class("something else")


class TestDataGeneration:
    """シフト・スケールモデル"""

    def test_deterministic(self):
        """同じストリームから同じデータセット"""
        s = build_scenario("oneway", 2, 3)
        a = generate_dataset(s, 5, RngStream(7, (1,)))
        b = generate_dataset(s, 5, RngStream(7, (1,)))
        np.testing.assert_array_equal(a.pooled, b.pooled)
        assert a.design.cell_sizes == (10,) * 5

    def test_cell_variances_follow_scales(self):
        """セル分散は σ_i² に従う"""
        s = build_scenario("oneway", 1, 3)
        data = generate_dataset(s, 10_000, RngStream(3))
        variances = [g.var(ddof=1) for g in data.groups]
        np.testing.assert_allclose(variances, [1.0, 1.44, 2.25, 2.89, 4.0], rtol=0.05)

    def test_two_way_layout(self):
        """二元配置のデータセットは 2×5 のセル構成"""
        data = generate_dataset(build_scenario("twoway", 1, 5), 0, RngStream(1))
        assert data.design.factors == (2, 5)
        assert data.design.cell_sizes == (7,) * 5 + (4,) * 5


class TestRateEstimate:
    """棄却率"""

    def test_deviation(self):
        """棄却率・MC 標準誤差・乖離（%）"""
        estimate = RateEstimate(rejections=130, n_sim=2000, alpha=0.05)
        assert estimate.rate == pytest.approx(0.065)
        assert estimate.deviation_pct == pytest.approx(1.5)
        assert estimate.mc_se == pytest.approx(math.sqrt(0.065 * 0.935 / 2000))

    def test_grid_cell_validation(self):
        """不正なグリッドセルは ConfigurationError"""
        s = build_scenario("oneway", 1, 1)
        with pytest.raises(ConfigurationError):
            GridCell(s, 0, 0.05, Method.F, n_sim=0, n_perm=99)
        with pytest.raises(ConfigurationError):
            GridCell(build_scenario("twoway", 1, 1), 0, 0.05, Method.KW, n_sim=10, n_perm=99)


class _InlineExecutor:
    """プロセスを起こさずに map を実行し、initializer の引数だけ記録する"""
    captured = {}

    def __init__(self, max_workers, initializer, initargs):
        _InlineExecutor.captured = {"max_workers": max_workers, "initargs": initargs}

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False

    def map(self, fn, items):
        return map(fn, items)


class TestGrid:
    """グリッド実行"""

    def _config(self, **overrides):
        values = dict(layouts=["oneway"], settings=[3], m_values=[0], alphas=[0.05],
                      methods=["F", "KW", "rWTS"], n_sim=20, n_perm=19)
        values.update(overrides)
        return build_run_config(**values)

    def test_rows_and_columns(self):
        """行数・列構成・手法の並び"""
        table = run_grid(self._config(m_values=[0, 5]))
        assert list(table.columns) == RESULT_COLUMNS
        assert len(table) == 4 * 2 * 3
        assert list(table["method"][:3]) == ["F", "KW", "rWTS"]
        assert set(table["hypothesis_scale"]) == {"mean-based", "distribution-based"}

    def test_default_grid_size(self):
        """既定グリッドは 29 シナリオ × m 2 通り × 11 手法"""
        config = build_run_config()
        tasks = engine.grid_tasks(config)
        assert len(tasks) == 29 * 2
        assert sum(len(t.methods) * len(t.alphas) for t in tasks) == 29 * 2 * 11

    def test_two_way_drops_one_way_methods(self):
        """二元配置では一元専用の手法を除く"""
        tasks = engine.grid_tasks(self._config(layouts=["twoway"], methods=[]))
        assert {m.value for m in tasks[0].methods} == {"F", "WTS", "ATS", "rWTS", "rATS", "WTPS", "rWTPS"}

    def test_rejects_empty_grid(self):
        """該当する (シナリオ, 手法) がないグリッドは ConfigurationError"""
        with pytest.raises(ConfigurationError):
            engine.grid_tasks(self._config(layouts=["twoway"], methods=["KW"]))

    def test_rejects_unknown_method(self):
        """未知の手法タグは ConfigurationError"""
        with pytest.raises(ConfigurationError):
            engine.grid_tasks(self._config(methods=["Z"]))

    def test_n_sim_zero_is_configuration_error(self):
        with pytest.raises(ConfigurationError):
            self._config(n_sim=0)

    def test_rerun_is_identical(self):
        """同じ設定の再実行は同一結果"""
        config = self._config(methods=["F", "WTPS"])
        pd.testing.assert_frame_equal(run_grid(config), run_grid(config))

    def test_worker_count_does_not_change_results(self):
        """ワーカー数 1 と 2 で同一結果"""
        config = self._config(methods=["WTS", "rWTPS"])
        pd.testing.assert_frame_equal(run_grid(config, workers=1), run_grid(config, workers=2))

    def test_one_and_eight_workers_give_identical_csv(self):
        """ワーカー数 1 と 8 で CSV がバイト単位で一致"""
        config = self._config(layouts=["oneway", "twoway"], m_values=[0, 25], methods=[], n_sim=10)
        assert csv_text(run_grid(config, workers=1)) == csv_text(run_grid(config, workers=8))

    def test_workers_inherit_log_level(self, monkeypatch):
        """ワーカーのログレベルは呼び出し側の設定に従う"""
        monkeypatch.setattr(engine, "ProcessPoolExecutor", _InlineExecutor)
        try:
            setup_logging("INFO")
            run_grid(self._config(methods=["F"]), workers=2)
            assert _InlineExecutor.captured["initargs"] == ("INFO", None)
            run_grid(self._config(methods=["F"]), workers=2, log_level="DEBUG")
            assert _InlineExecutor.captured["initargs"] == ("DEBUG", None)
        finally:
            setup_logging("WARNING")
        assert logging.getLogger().getEffectiveLevel() == logging.WARNING

    def test_single_cell_matches_grid(self):
        """単一セルの推定はグリッドの該当行と一致"""
        config = self._config(settings=[1], methods=["WTS"], n_sim=30)
        table = run_grid(config)
        cell = GridCell(build_scenario("oneway", 1, 2), 0, 0.05, Method.WTS, n_sim=30, n_perm=19)
        estimate = run_cell(cell, config.seed)
        row = table[(table["setting"] == 1) & (table["scenario_index"] == 2)].iloc[0]
        assert row["rejections"] == estimate.rejections

    def test_forced_non_rejection_gives_zero_rate(self, monkeypatch):
        """p = 1 しか出ない手法の棄却率は 0"""
        monkeypatch.setattr(engine, "_p_values", lambda task, replication: {m: 1.0 for m in task.methods})
        table = run_grid(self._config())
        assert (table["rate"] == 0.0).all()
        assert (table["rejections"] == 0).all()

    def test_degenerate_replication_counts_as_no_rejection(self, monkeypatch):
        """退化データの反復は非棄却として数える"""
        def degenerate(*args, **kwargs):
            raise DegenerateDataError("constant data")

        monkeypatch.setattr(engine, "run_method", degenerate)
        table = run_grid(self._config(methods=["F"]))
        assert (table["rejections"] == 0).all()

    def test_domain_error_propagates(self, monkeypatch):
        """定義域エラーは非棄却に読み替えず、そのまま送出"""
        def broken(*args, **kwargs):
            raise DomainError("contrast needs 5 columns, got 4")

        monkeypatch.setattr(engine, "run_method", broken)
        with pytest.raises(DomainError):
            run_grid(self._config(methods=["F"]))

    def test_resolution_flag_marks_coarse_permutation_rows(self):
        """1/(B+1) > α の順列手法の行は resolution_ok = False"""
        config = self._config(methods=["WTS", "WTPS", "KW-exact"], alphas=[0.05, 0.005], n_perm=100, n_sim=5)
        with pytest.warns(ResolutionWarning):
            table = run_grid(config)
        flags = {(r["method"], r["alpha"]): r["resolution_ok"] for r in table.to_dict("records")}
        assert bool(flags[("WTS", 0.005)]) is True
        assert bool(flags[("WTPS", 0.05)]) is True
        assert bool(flags[("WTPS", 0.005)]) is False
        assert bool(flags[("KW-exact", 0.005)]) is False


@pytest.mark.slow
class TestCalibration:
    """正確な検定・近似検定の棄却率"""

    def _rate(self, method, setting=1, index=1, m=5, alpha=0.05, n_sim=2000, n_perm=999):
        cell = GridCell(build_scenario("oneway", setting, index), m, alpha, method, n_sim=n_sim, n_perm=n_perm)
        return run_cell(cell, 20180517).rate

    def test_anova_f_is_exact_under_normality(self):
        """正規・等分散・釣り合い型で F 検定の棄却率は α ± 3SE"""
        assert abs(self._rate(Method.F) - 0.05) <= _band(0.05, 2000)

    def test_anova_f_small_alpha(self):
        """α = 0.005 でも F 検定は 3SE 以内（n_sim = 5000）"""
        assert abs(self._rate(Method.F, alpha=0.005, n_sim=5000) - 0.005) <= _band(0.005, 5000)

    def test_wtps_is_exact_under_exchangeability(self):
        """交換可能なデータで WTPS の棄却率は α ± 3SE"""
        assert abs(self._rate(Method.WTPS) - 0.05) <= _band(0.05, 2000)

    def test_wts_is_liberal_where_wtps_is_not(self):
        """n_i = 5 の正規データで WTS は α を大きく超え、同じデータ上の WTPS を上回る"""
        config = build_run_config(layouts=["oneway"], settings=[1], m_values=[0], alphas=[0.05],
                                  methods=["WTS", "WTPS"], n_sim=2000, n_perm=499, workers=4)
        table = run_grid(config)
        row = table[table["scenario_index"] == 1].set_index("method")["rate"]
        assert row["WTS"] > 0.05 + _band(0.05, 2000)
        assert row["WTS"] > row["WTPS"]
        assert abs(row["WTPS"] - 0.05) <= _band(0.05, 2000)

    def test_ats_is_conservative_under_skewness(self):
        """exp(1)・釣り合い型・n_i = 5 で ATS の棄却率は α − 3SE を下回る"""
        assert self._rate(Method.ATS, setting=2, index=1, m=0) < 0.05 - _band(0.05, 2000)

    @pytest.mark.parametrize("setting,index", [(1, 1), (1, 2), (2, 1), (3, 1)])
    def test_permutation_procedures_are_exact(self, setting, index):
        """等分散・共通分布のシナリオで順列手法は両方の α で 3SE 以内"""
        config = build_run_config(layouts=["oneway"], settings=[setting], m_values=[0], alphas=[0.05, 0.005],
                                  methods=["WTPS", "rWTPS", "KW-exact"], n_sim=2000, n_perm=1999, workers=4)
        table = run_grid(config)
        rows = table[table["scenario_index"] == index]
        assert len(rows) == 6
        for row in rows.to_dict("records"):
            assert abs(row["rate"] - row["alpha"]) <= _band(row["alpha"], 2000), (row["method"], row["alpha"])
