"""
レポート生成のテスト
"""
import pandas as pd
import pytest

from src.core.exceptions import ReportError
from src.reporting import render_report
from src.reporting.report import deviation_data, dots_data, load_results, summary_data
from src.simulation import RESULT_COLUMNS, RateEstimate

POS = "unbalanced-heteroscedastic (positive pairing)"


def _row(method="WTS", alpha=0.05, rejections=130, index=4, label=POS, n_sim=2000):
    estimate = RateEstimate(rejections, n_sim, alpha)
    return {
        "layout": "oneway", "setting": 1, "scenario_index": index, "label": label, "m": 0,
        "alpha": alpha, "method": method, "hypothesis_scale": "mean-based", "h0f_holds": False,
        "n_sim": n_sim, "n_perm": 1999, "rejections": rejections, "rate": estimate.rate,
        "mc_se": estimate.mc_se, "deviation_pct": estimate.deviation_pct, "resolution_ok": True,
    }


def _write(tmp_path, rows):
    path = tmp_path / "results.csv"
    pd.DataFrame(rows, columns=RESULT_COLUMNS).to_csv(path, index=False)
    return path


class TestDots:
    """ドットチャート"""

    def test_single_cell_gives_one_panel_one_dot(self, tmp_path):
        """1 セルの結果から 1 パネル 1 点"""
        path = _write(tmp_path, [_row()])
        written = render_report(path, "dots", tmp_path / "plots")
        names = sorted(p.name for p in written)
        assert names == ["dots.csv", "dots_oneway_s1_m0_a0.05.svg", "summary.csv"]
        dots = pd.read_csv(tmp_path / "plots" / "dots.csv")
        assert len(dots) == 1
        assert dots.loc[0, "rate"] == pytest.approx(0.065)
        assert dots.loc[0, "color_class"] == "positive pairing"
        assert dots.loc[0, "color"] == "hotpink"

    def test_svg_is_reproducible(self, tmp_path):
        """同じ入力から同じ SVG"""
        path = _write(tmp_path, [_row(), _row(method="F", rejections=90)])
        render_report(path, "dots", tmp_path / "a")
        render_report(path, "dots", tmp_path / "b")
        svg = "dots_oneway_s1_m0_a0.05.svg"
        assert (tmp_path / "a" / svg).read_text() == (tmp_path / "b" / svg).read_text()

    def test_method_order_follows_registry(self):
        """手法は登録順に並ぶ"""
        table = pd.DataFrame([_row(method="rWTS"), _row(method="F")], columns=RESULT_COLUMNS)
        assert list(dots_data(table)["method"]) == ["F", "rWTS"]

    def test_summary_counts_liberal_cells(self):
        """α + 3SE を超える（リベラルな）セルを数える"""
        table = pd.DataFrame([_row(rejections=100), _row(index=5, rejections=160),
                              _row(index=3, rejections=40)], columns=RESULT_COLUMNS)
        summary = summary_data(table).iloc[0]
        assert summary["cells"] == 3
        assert summary["liberal"] == 1
        assert summary["conservative"] == 1
        assert summary["within_3se_share"] == pytest.approx(1 / 3)

    def test_unknown_label(self):
        """色分類できないラベルは ReportError"""
        table = pd.DataFrame([_row(label="mystery")], columns=RESULT_COLUMNS)
        with pytest.raises(ReportError):
            dots_data(table)


class TestDeviation:
    """α = 5% と 0.5% の乖離"""

    def test_paired_cells(self, tmp_path):
        """α = 5% と 0.5% の乖離を 1 行にまとめる"""
        path = _write(tmp_path, [_row(), _row(alpha=0.005, rejections=12)])
        render_report(path, "deviation", tmp_path / "out")
        dev = pd.read_csv(tmp_path / "out" / "deviation.csv")
        assert dev.loc[0, "deviation_pct_alpha_0.05"] == pytest.approx(1.5)
        assert dev.loc[0, "deviation_pct_alpha_0.005"] == pytest.approx(0.1)
        assert (tmp_path / "out" / "deviation_oneway_s1_m0.svg").exists()

    def test_missing_partner(self):
        """片方の α しかないセルはエラーメッセージに手法名を含む"""
        table = pd.DataFrame([_row(), _row(alpha=0.005, rejections=12), _row(method="F")],
                             columns=RESULT_COLUMNS)
        with pytest.raises(ReportError, match="F"):
            deviation_data(table)

    def test_no_deviation_levels(self):
        """α = 5% / 0.5% の行がなければ ReportError"""
        table = pd.DataFrame([_row(alpha=0.01)], columns=RESULT_COLUMNS)
        with pytest.raises(ReportError):
            deviation_data(table)


class TestLoading:
    """結果ファイルの読み込み"""

    def test_missing_file(self, tmp_path):
        """存在しない結果ファイルは ReportError"""
        with pytest.raises(ReportError):
            load_results(tmp_path / "absent.csv")

    def test_missing_columns(self, tmp_path):
        """列が足りない結果ファイルは ReportError"""
        path = tmp_path / "bad.csv"
        path.write_text("layout,setting\noneway,1\n")
        with pytest.raises(ReportError, match="lacks columns"):
            load_results(path)

    def test_unknown_mode(self, tmp_path):
        """未知のレポート種別は ReportError"""
        with pytest.raises(ReportError):
            render_report(_write(tmp_path, [_row()]), "bars", tmp_path)
