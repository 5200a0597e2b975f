"""
factest コマンドライン

  factest analyze  --input data.csv --layout oneway|twoway:a,b --method <tag> [--contrast overall|A|B|AB]
  factest simulate [--config run.toml] [--out results.csv]
  factest report   --input results.csv --mode dots|deviation --out-dir plots/

終了コード: 0 成功、2 設定エラー、3 入力解析エラー、4 数値計算エラー
"""
import argparse
import math
import sys
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import pandas as pd

from src.core.config import RunConfig, build_run_config, load_run_config, save_run_config, system_config
from src.core.exceptions import ConfigurationError, FactestError, ParseError
from src.core.logger import get_logger, setup_logging
from src.factorial.dataset import Dataset
from src.factorial.design import Design
from src.inference.dispatch import run_method
from src.inference.methods import Method
from src.inference.permutation import PermutationPlan, check_resolution
from src.inference.results import TestResult
from src.reporting.report import render_report
from src.simulation.engine import run_grid
from src.utils.io import csv_text, write_csv_atomic

logger = get_logger(__name__)


# ---------------------------------------------------------------------------
# 入力データ
# ---------------------------------------------------------------------------

def parse_layout(text: str) -> Optional[Tuple[int, int]]:
    """"oneway" なら None、"twoway:a,b" なら (a, b)"""
    if text == "oneway":
        return None
    if text.startswith("twoway:"):
        parts = text[len("twoway:"):].split(",")
        try:
            a, b = (int(p) for p in parts)
        except ValueError:
            raise ConfigurationError(f"layout must look like twoway:a,b, got {text}") from None
        if a < 2 or b < 2:
            raise ConfigurationError(f"two-way layout needs a, b >= 2, got {text}")
        return a, b
    raise ConfigurationError(f"unknown layout: {text} (use oneway or twoway:a,b)")


def _cell_index(cell_id: str, factors: Optional[Tuple[int, int]], line: int) -> Tuple[int, ...]:
    try:
        if factors is None:
            key: Tuple[int, ...] = (int(cell_id),)
        else:
            i, j = cell_id.split(":")
            key = (int(i), int(j))
    except ValueError:
        raise ParseError(f"malformed cell_id {cell_id!r}", line) from None
    if factors is None:
        if key[0] < 1:
            raise ParseError(f"cell_id {cell_id!r} must be a positive integer", line)
        return key
    if key[0] < 1 or key[1] < 1 or key[0] > factors[0] or key[1] > factors[1]:
        raise ParseError(f"cell_id {cell_id!r} outside the {factors[0]}x{factors[1]} layout", line)
    return key


def read_observations(path: str, layout: str) -> Dataset:
    """cell_id,value 形式の CSV を読み込み、セル順に並べたデータセットにする"""
    factors = parse_layout(layout)
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skip_blank_lines=False)
    except FileNotFoundError:
        raise ConfigurationError(f"input file not found: {path}") from None
    except pd.errors.EmptyDataError:
        raise ParseError("input file is empty", 1) from None
    except pd.errors.ParserError as e:
        raise ParseError(f"malformed CSV: {e}") from None

    header = [c.strip() for c in frame.columns]
    if header != ["cell_id", "value"]:
        raise ParseError(f"header must be cell_id,value, got {','.join(header)}", 1)

    cells: Dict[Tuple[int, ...], List[float]] = {}
    for offset, (cell_id, token) in enumerate(frame.itertuples(index=False, name=None)):
        line = offset + 2
        cell_id = cell_id.strip() if isinstance(cell_id, str) else ""
        token = token.strip() if isinstance(token, str) else ""
        if not cell_id and not token:
            continue
        key = _cell_index(cell_id, factors, line)
        try:
            value = float(token)
        except ValueError:
            raise ParseError(f"value {token!r} is not a number", line) from None
        if not math.isfinite(value):
            raise ParseError(f"value {token!r} is not finite", line)
        cells.setdefault(key, []).append(value)

    if not cells:
        raise ParseError("input file has no observations", 2)

    if factors is None:
        d = max(k[0] for k in cells)
        if d < 2:
            raise ParseError(f"one-way layout needs at least two cells, found {d}")
        expected = [(i,) for i in range(1, d + 1)]
        design_factors: Tuple[int, ...] = (d,)
    else:
        expected = [(i, j) for i in range(1, factors[0] + 1) for j in range(1, factors[1] + 1)]
        design_factors = factors
    missing = [":".join(map(str, k)) for k in expected if k not in cells]
    if missing:
        raise ParseError(f"cells without observations: {', '.join(missing)}")

    groups = [cells[k] for k in expected]
    design = Design(design_factors, tuple(len(g) for g in groups))
    return Dataset(design, [v for g in groups for v in g])


# ---------------------------------------------------------------------------
# サブコマンド
# ---------------------------------------------------------------------------

def _render(result: TestResult, config: RunConfig) -> str:
    if config.format == "csv":
        row = dict(result.to_dict(), alpha=config.alpha, reject=result.rejects(config.alpha))
        return csv_text(pd.DataFrame([row]))
    df = ", ".join(f"{v:g}" for v in result.df) or "-"
    lines = [
        f"method:     {result.method.value}",
        f"statistic:  {result.statistic:.6g}",
        f"reference:  {result.dist}",
        f"df:         {df}",
        f"p-value:    {result.p_value:.6g}",
        f"hypothesis: {result.hypothesis.value}",
        f"reject at alpha = {config.alpha:g}: {'yes' if result.rejects(config.alpha) else 'no'}",
    ]
    return "\n".join(lines) + "\n"


def analyze(config: RunConfig) -> str:
    """データファイルに 1 つの手法を適用"""
    if not config.input:
        raise ConfigurationError("analyze needs --input")
    method = Method.parse(config.method)
    data = read_observations(config.input, config.layout)
    if not method.applies_to(data.design):
        raise ConfigurationError(f"method {method.value} is not defined for layout {data.design.layout_name}")

    if config.contrast in ("A", "B", "AB") and data.design.is_one_way:
        raise ConfigurationError(f"contrast {config.contrast} needs a two-way layout")
    hypothesis = data.design.hypothesis(config.contrast) if config.contrast else data.design.default_hypothesis()
    plan = PermutationPlan(replicates=config.n_perm, seed=config.seed, enumeration_cap=config.enumeration_cap)
    if method.uses_permutation:
        check_resolution(plan, config.alpha)

    result = run_method(method, data, hypothesis.contrast, plan, config.compat_printed)
    logger.info("analyze_done", method=method.value, statistic=result.statistic, p_value=result.p_value)
    return _render(result, config)


def simulate(config: RunConfig) -> Optional[str]:
    """シミュレーショングリッドを実行し CSV を書き出す（出力先未指定なら文字列で返す）"""
    table = run_grid(config)
    if config.output:
        write_csv_atomic(table, config.output)
        logger.info("simulate_written", path=config.output, rows=len(table))
        return None
    return csv_text(table)


def report(config: RunConfig) -> None:
    if not config.input:
        raise ConfigurationError("report needs --input")
    render_report(config.input, config.mode, config.out_dir or ".")


# ---------------------------------------------------------------------------
# 引数解析
# ---------------------------------------------------------------------------

def _list_of(cast: Callable[[str], Any]) -> Callable[[str], List[Any]]:
    def parse(text: str) -> List[Any]:
        try:
            return [cast(item.strip()) for item in text.split(",") if item.strip()]
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid list: {text}") from None
    return parse


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="factest", description="Hypothesis tests for factorial designs")
    parser.add_argument("--log-level", default=None, help="logging level (default: FACTEST_LOG_LEVEL or WARNING)")
    parser.add_argument("--log-file", default=None, help="rotating log file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="apply one test to a cell_id,value CSV file")
    p.add_argument("--config", default=None, help="flat TOML run config")
    p.add_argument("--input", default=None)
    p.add_argument("--layout", default=None, help="oneway | twoway:a,b")
    p.add_argument("--method", default=None, help=", ".join(m.value for m in Method))
    p.add_argument("--contrast", default=None, choices=["overall", "A", "B", "AB"])
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--n-perm", dest="n_perm", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--enumeration-cap", dest="enumeration_cap", type=int, default=None)
    p.add_argument("--format", default=None, choices=["text", "csv"])
    p.add_argument("--compat-printed", dest="compat_printed", action="store_true", default=None)

    s = sub.add_parser("simulate", help="estimate type-I error rates over the scenario grid")
    s.add_argument("--config", default=None, help="flat TOML run config")
    s.add_argument("--out", dest="output", default=None, help="result CSV (default: stdout)")
    s.add_argument("--layouts", type=_list_of(str), default=None, help="oneway,twoway")
    s.add_argument("--settings", type=_list_of(int), default=None, help="1,2,3")
    s.add_argument("--methods", type=_list_of(str), default=None, help="comma-separated method tags")
    s.add_argument("--m-values", dest="m_values", type=_list_of(int), default=None, help="0,5,10,15,20,25")
    s.add_argument("--alphas", type=_list_of(float), default=None, help="0.05,0.005")
    s.add_argument("--alpha", dest="single_alpha", type=float, default=None, help="shorthand for --alphas with one level")
    s.add_argument("--n-sim", dest="n_sim", type=int, default=None)
    s.add_argument("--n-perm", dest="n_perm", type=int, default=None)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--workers", type=int, default=None)
    s.add_argument("--enumeration-cap", dest="enumeration_cap", type=int, default=None)
    s.add_argument("--compat-printed", dest="compat_printed", action="store_true", default=None)
    s.add_argument("--dump-config", dest="dump_config", default=None,
                   help="write the effective run config to this TOML file and exit")

    r = sub.add_parser("report", help="render plot data from a result CSV")
    r.add_argument("--config", default=None, help="flat TOML run config")
    r.add_argument("--input", default=None)
    r.add_argument("--mode", default=None, choices=["dots", "deviation"])
    r.add_argument("--out-dir", dest="out_dir", default=None)
    return parser


_NON_CONFIG_KEYS = ("config", "log_level", "log_file", "dump_config", "single_alpha")


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """設定ファイル → CLI 指定値 の順に重ねた実行設定"""
    overrides = {k: v for k, v in vars(args).items() if k not in _NON_CONFIG_KEYS}
    if getattr(args, "single_alpha", None) is not None:
        overrides["alphas"] = [args.single_alpha]
    if args.command == "simulate" and args.workers is None and system_config.workers > 1:
        overrides["workers"] = system_config.workers
    if args.config:
        return load_run_config(args.config, overrides)
    return build_run_config(**overrides)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level, args.log_file)

    try:
        config = resolve_config(args)
        if config.command == "analyze":
            sys.stdout.write(analyze(config))
        elif config.command == "simulate":
            if args.dump_config:
                save_run_config(config, args.dump_config)
                return 0
            output = simulate(config)
            if output is not None:
                sys.stdout.write(output)
        else:
            report(config)
    except FactestError as e:
        logger.error("command_failed", command=args.command, error=str(e), exit_code=e.exit_code)
        sys.stderr.write(f"factest {args.command}: {e}\n")
        return e.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
