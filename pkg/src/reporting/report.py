"""
シミュレーション結果のレポート（プロット用 CSV と簡易 SVG ドットチャート）

dots:      (レイアウト, 設定, m, α) ごとのパネル。行 = 手法、点 = シナリオ（色クラス別）
deviation: α = 5% と 0.5% の結果を結合し、乖離（%）の組を出力
"""
import io
import logging
import math
from pathlib import Path
from typing import Dict, List, Tuple, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd

from src.core.exceptions import RegistryError, ReportError
from src.inference.methods import METHOD_ORDER
from src.simulation.engine import RESULT_COLUMNS, sort_results
from src.simulation.scenarios import ColorClass, color_class
from src.utils.io import write_csv_atomic, write_text_atomic

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

COLORS: Dict[ColorClass, str] = {
    ColorClass.BALANCED_HOMOSCEDASTIC: "blue",
    ColorClass.UNBALANCED_HOMOSCEDASTIC: "lightblue",
    ColorClass.BALANCED_HETEROSCEDASTIC: "green",
    ColorClass.POSITIVE_PAIRING: "hotpink",
    ColorClass.NEGATIVE_PAIRING: "lightpink",
    ColorClass.OUTLIER_10_15: "orange",
    ColorClass.OUTLIER_20: "brown",
}

# 乖離表示の α（赤 = 5%、黒 = 0.5%）
DEVIATION_ALPHAS: Tuple[float, float] = (0.05, 0.005)
DEVIATION_COLORS = {0.05: "red", 0.005: "black"}

_SVG_RC = {"svg.hashsalt": "factest", "svg.fonttype": "path"}
_PANEL_KEYS = ["layout", "setting", "m", "alpha"]
_CELL_KEYS = ["layout", "setting", "scenario_index", "m", "method"]


def load_results(path: PathLike) -> pd.DataFrame:
    """結果 CSV を読み込み、列構成を検証"""
    try:
        table = pd.read_csv(path)
    except FileNotFoundError as e:
        raise ReportError(f"results file not found: {path}") from e
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ReportError(f"results file is not a valid CSV: {e}") from e

    missing = [c for c in RESULT_COLUMNS if c not in table.columns]
    if missing:
        raise ReportError(f"results file lacks columns: {missing}")
    if table.empty:
        raise ReportError("results file has no rows")
    return table[RESULT_COLUMNS]


def _method_rank(method: str) -> int:
    order = [m.value for m in METHOD_ORDER]
    return order.index(method) if method in order else len(order)


# ---------------------------------------------------------------------------
# dots
# ---------------------------------------------------------------------------

def dots_data(table: pd.DataFrame) -> pd.DataFrame:
    """ドットチャートのプロットデータ（1 行 = 1 点）"""
    try:
        classes = table["label"].map(color_class)
    except RegistryError as e:
        raise ReportError(str(e)) from e
    data = pd.DataFrame({
        "layout": table["layout"],
        "setting": table["setting"],
        "m": table["m"],
        "alpha": table["alpha"],
        "method": table["method"],
        "scenario_index": table["scenario_index"],
        "label": table["label"],
        "color_class": classes.map(lambda c: c.value),
        "color": classes.map(COLORS),
        "rate": table["rate"],
        "mc_se": table["mc_se"],
    })
    return sort_results(data)


def summary_data(table: pd.DataFrame) -> pd.DataFrame:
    """手法ごとの要約（平均棄却率、±3 SE 内の割合、リベラル / 保守的なセル数）"""
    rows = []
    for (layout, method, alpha), group in table.groupby(["layout", "method", "alpha"], sort=False):
        se = (alpha * (1.0 - alpha) / group["n_sim"]).map(math.sqrt)
        excess = group["rate"] - alpha
        rows.append({
            "layout": layout,
            "method": method,
            "alpha": alpha,
            "cells": len(group),
            "mean_rate": group["rate"].mean(),
            "within_3se_share": float((excess.abs() <= 3 * se).mean()),
            "liberal": int((excess > 3 * se).sum()),
            "conservative": int((excess < -3 * se).sum()),
        })
    summary = pd.DataFrame(rows)
    summary["_layout"] = summary["layout"].map({"oneway": 0, "twoway": 1})
    summary["_method"] = summary["method"].map(_method_rank)
    summary = summary.sort_values(["_layout", "alpha", "_method"], kind="mergesort")
    return summary.drop(columns=["_layout", "_method"]).reset_index(drop=True)


def _svg(fig) -> str:
    buffer = io.StringIO()
    with plt.rc_context(_SVG_RC):
        fig.savefig(buffer, format="svg", metadata={"Date": None})
    plt.close(fig)
    return buffer.getvalue()


def dots_svg(panel: pd.DataFrame, alpha: float, title: str) -> str:
    """1 パネル分のドットチャート（行 = 手法、横軸 = 棄却率、縦線 = α）"""
    methods = sorted(panel["method"].unique(), key=_method_rank)
    rows = {method: i for i, method in enumerate(methods)}
    with plt.rc_context(_SVG_RC):
        fig, ax = plt.subplots(figsize=(6, 0.5 * len(methods) + 1.5))
        ax.scatter(panel["rate"], panel["method"].map(rows), c=list(panel["color"]), s=18)
        ax.axvline(alpha, color="red", linewidth=1)
        ax.set_yticks(range(len(methods)))
        ax.set_yticklabels(methods)
        ax.invert_yaxis()
        ax.set_xlabel("type-I error rate")
        ax.set_title(title)
        fig.tight_layout()
    return _svg(fig)


def write_dots(table: pd.DataFrame, out_dir: PathLike) -> List[Path]:
    out = Path(out_dir)
    data = dots_data(table)
    written = [write_csv_atomic(data, out / "dots.csv"),
               write_csv_atomic(summary_data(table), out / "summary.csv")]
    for (layout, setting, m, alpha), panel in data.groupby(_PANEL_KEYS, sort=False):
        title = f"{layout} setting {setting}, m = {m}, alpha = {alpha:g}"
        name = f"dots_{layout}_s{setting}_m{m}_a{alpha:g}.svg"
        written.append(write_text_atomic(out / name, dots_svg(panel, alpha, title)))
    return written


# ---------------------------------------------------------------------------
# deviation
# ---------------------------------------------------------------------------

def deviation_data(table: pd.DataFrame) -> pd.DataFrame:
    """α = 5% と 0.5% の組ごとの deviation_pct（片方が欠けるセルはエラー）"""
    hi, lo = DEVIATION_ALPHAS
    wide = {}
    for alpha in DEVIATION_ALPHAS:
        part = table[table["alpha"].map(lambda a: math.isclose(a, alpha))]
        wide[alpha] = part.set_index(_CELL_KEYS)

    keys_hi, keys_lo = set(wide[hi].index), set(wide[lo].index)
    absent = sorted(keys_hi ^ keys_lo, key=str)
    if not keys_hi and not keys_lo:
        raise ReportError("deviation mode needs results at alpha = 0.05 and alpha = 0.005")
    if absent:
        listed = "; ".join(f"{k[0]} s{k[1]} #{k[2]} m={k[3]} {k[4]}" for k in absent)
        raise ReportError(f"missing alpha pair for cells: {listed}")

    merged = wide[hi][["label", "deviation_pct"]].join(
        wide[lo][["deviation_pct"]], lsuffix="_005", rsuffix="_0005"
    ).reset_index()
    merged = merged.rename(columns={"deviation_pct_005": "deviation_pct_alpha_0.05",
                                    "deviation_pct_0005": "deviation_pct_alpha_0.005"})
    merged["_layout"] = merged["layout"].map({"oneway": 0, "twoway": 1})
    merged["_method"] = merged["method"].map(_method_rank)
    merged = merged.sort_values(["_layout", "setting", "scenario_index", "m", "_method"], kind="mergesort")
    columns = ["layout", "setting", "scenario_index", "label", "m", "method",
               "deviation_pct_alpha_0.05", "deviation_pct_alpha_0.005"]
    return merged[columns].reset_index(drop=True)


def deviation_svg(panel: pd.DataFrame, title: str) -> str:
    methods = sorted(panel["method"].unique(), key=_method_rank)
    rows = panel["method"].map({method: i for i, method in enumerate(methods)})
    with plt.rc_context(_SVG_RC):
        fig, ax = plt.subplots(figsize=(6, 0.5 * len(methods) + 1.5))
        for alpha in DEVIATION_ALPHAS:
            ax.scatter(panel[f"deviation_pct_alpha_{alpha:g}"], rows, c=DEVIATION_COLORS[alpha], s=14,
                       label=f"alpha = {alpha:g}")
        ax.axvline(0.0, color="grey", linewidth=1)
        ax.set_yticks(range(len(methods)))
        ax.set_yticklabels(methods)
        ax.invert_yaxis()
        ax.set_xlabel("deviation (percent)")
        ax.set_title(title)
        ax.legend(loc="lower right", fontsize="small")
        fig.tight_layout()
    return _svg(fig)


def write_deviation(table: pd.DataFrame, out_dir: PathLike) -> List[Path]:
    out = Path(out_dir)
    data = deviation_data(table)
    written = [write_csv_atomic(data, out / "deviation.csv")]
    for (layout, setting, m), panel in data.groupby(["layout", "setting", "m"], sort=False):
        title = f"{layout} setting {setting}, m = {m}"
        written.append(write_text_atomic(out / f"deviation_{layout}_s{setting}_m{m}.svg",
                                         deviation_svg(panel, title)))
    return written


def render_report(results_path: PathLike, mode: str, out_dir: PathLike) -> List[Path]:
    """結果 CSV からプロットデータと SVG を書き出す"""
    table = load_results(results_path)
    if mode == "dots":
        written = write_dots(table, out_dir)
    elif mode == "deviation":
        written = write_deviation(table, out_dir)
    else:
        raise ReportError(f"unknown report mode: {mode}")
    logger.info(f"Report written: {len(written)} files in {out_dir}")
    return written
