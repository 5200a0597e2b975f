"""
モンテカルロ・シミュレーションエンジン - 第一種過誤率の推定

(シナリオ, m) ごとに n_sim 個のデータセットを生成し、同じデータセットに
すべての手法・有意水準を適用する（手法間の比較は対応のある比較になる）。
各反復の乱数は (seed, シナリオ, m, 反復番号) から導出するので、結果は
ワーカー数や実行順に依存しない。
"""
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import pandas as pd

from src.core.config import DEFAULT_ENUMERATION_CAP, RunConfig
from src.core.exceptions import ConfigurationError, DegenerateDataError
from src.core.logger import get_logger, setup_logging
from src.factorial.design import HypothesisLabel
from src.inference.dispatch import run_method
from src.inference.methods import METHOD_ORDER, Method
from src.inference.permutation import PermutationPlan, check_resolution, exact_plan
from src.inference.results import PermutationMode
from .distgen import RngStream, generate_dataset
from .scenarios import Scenario, scenarios

logger = get_logger(__name__)

RESULT_COLUMNS = [
    "layout", "setting", "scenario_index", "label", "m", "alpha", "method",
    "hypothesis_scale", "h0f_holds", "n_sim", "n_perm", "rejections", "rate",
    "mc_se", "deviation_pct", "resolution_ok",
]

# 反復ごとのストリーム内の用途
_DATA_STREAM = 0
_PERMUTATION_STREAM = 1


@dataclass(frozen=True)
class GridCell:
    """グリッドの 1 セル"""
    scenario: Scenario
    m: int
    alpha: float
    method: Method
    n_sim: int
    n_perm: int

    def __post_init__(self):
        if self.n_sim < 1:
            raise ConfigurationError("n_sim must be >= 1")
        if self.n_perm < 1:
            raise ConfigurationError("n_perm must be >= 1")
        if self.m < 0:
            raise ConfigurationError("m must be >= 0")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigurationError("alpha must lie in (0, 1)")
        if not self.method.applies_to(self.scenario.design(self.m)):
            raise ConfigurationError(
                f"method {self.method.value} is not defined for layout {self.scenario.layout}"
            )

    @property
    def hypothesis(self) -> HypothesisLabel:
        """一元配置は全体仮説、二元配置は交互作用仮説"""
        return HypothesisLabel.OVERALL if self.scenario.layout == "oneway" else HypothesisLabel.INTERACTION


@dataclass(frozen=True)
class RateEstimate:
    """棄却率の推定値"""
    rejections: int
    n_sim: int
    alpha: float

    @property
    def rate(self) -> float:
        return self.rejections / self.n_sim

    @property
    def mc_se(self) -> float:
        return math.sqrt(self.rate * (1.0 - self.rate) / self.n_sim)

    @property
    def deviation_pct(self) -> float:
        return (self.rate - self.alpha) * 100.0


@dataclass(frozen=True)
class _BlockTask:
    scenario: Scenario
    m: int
    methods: Tuple[Method, ...]
    alphas: Tuple[float, ...]
    n_sim: int
    n_perm: int
    seed: int
    enumeration_cap: int
    compat_printed: bool


def _replication_stream(seed: int, scenario: Scenario, m: int, replication: int) -> RngStream:
    return RngStream(seed, scenario.stream_key + (m, replication))


def _p_values(task: _BlockTask, replication: int) -> Dict[Method, float]:
    """1 反復分: データを 1 つ生成し全手法の p 値を求める。退化データで計算不能な手法は p = 1"""
    stream = _replication_stream(task.seed, task.scenario, task.m, replication)
    data = generate_dataset(task.scenario, task.m, stream.child(_DATA_STREAM))
    plan = PermutationPlan(
        replicates=task.n_perm,
        seed=stream.child(_PERMUTATION_STREAM).derive_seed(),
        enumeration_cap=task.enumeration_cap,
    )
    contrast = data.design.default_hypothesis().contrast

    p_values = {}
    for method in task.methods:
        try:
            p_values[method] = run_method(method, data, contrast, plan, task.compat_printed).p_value
        except DegenerateDataError as e:
            logger.debug("degenerate_replication", scenario=task.scenario.key, m=task.m,
                         replication=replication, method=method.value, error=str(e))
            p_values[method] = 1.0
    return p_values


def _run_block(task: _BlockTask) -> Dict[Tuple[Method, float], int]:
    """(シナリオ, m) ブロックの棄却数 {(手法, α): 棄却数}"""
    started = time.perf_counter()
    rejections = {(method, alpha): 0 for method in task.methods for alpha in task.alphas}
    for replication in range(task.n_sim):
        p_values = _p_values(task, replication)
        for method, p in p_values.items():
            for alpha in task.alphas:
                if p <= alpha:
                    rejections[(method, alpha)] += 1
    logger.info(
        "grid_block_done",
        layout=task.scenario.layout,
        setting=task.scenario.setting,
        scenario=task.scenario.index,
        m=task.m,
        methods=[m.value for m in task.methods],
        elapsed_seconds=round(time.perf_counter() - started, 3),
    )
    return rejections


def run_cell(cell: GridCell, master_seed: int, enumeration_cap: int = DEFAULT_ENUMERATION_CAP,
             compat_printed: bool = False) -> RateEstimate:
    """1 セルの棄却率を推定"""
    task = _BlockTask(cell.scenario, cell.m, (cell.method,), (cell.alpha,), cell.n_sim, cell.n_perm,
                      master_seed, enumeration_cap, compat_printed)
    return RateEstimate(_run_block(task)[(cell.method, cell.alpha)], cell.n_sim, cell.alpha)


def _grid_methods(config: RunConfig, scenario: Scenario) -> Tuple[Method, ...]:
    design = scenario.design(0)
    if not config.methods:
        return tuple(m for m in METHOD_ORDER if m.applies_to(design))
    chosen = {Method.parse(tag) for tag in config.methods}
    return tuple(m for m in METHOD_ORDER if m in chosen and m.applies_to(design))


def grid_tasks(config: RunConfig) -> List[_BlockTask]:
    """設定から (シナリオ, m) ブロックの一覧を作る"""
    if config.methods:
        for tag in config.methods:
            Method.parse(tag)
    alphas = tuple(sorted(set(config.alphas)))
    tasks = []
    for scenario in scenarios(config.layouts, config.settings):
        methods = _grid_methods(config, scenario)
        if not methods:
            continue
        for m in sorted(set(config.m_values)):
            tasks.append(_BlockTask(scenario, m, methods, alphas, config.n_sim, config.n_perm,
                                    config.seed, config.enumeration_cap, config.compat_printed))
    if not tasks:
        raise ConfigurationError("the grid selects no (scenario, method) combination")
    return tasks


def _resolution_ok(task: _BlockTask, method: Method, alpha: float) -> bool:
    """順列 p 値が α に届くか（1/(B+1) ≤ α、または全列挙）"""
    if not method.uses_permutation:
        return True
    plan = PermutationPlan(replicates=task.n_perm, enumeration_cap=task.enumeration_cap)
    if method is Method.KW_EXACT:
        plan = exact_plan(task.scenario.design(task.m), plan)
    return plan.mode is PermutationMode.FULL_ENUMERATION or plan.resolution <= alpha


def _rows(task: _BlockTask, rejections: Dict[Tuple[Method, float], int]) -> List[dict]:
    rows = []
    for alpha in task.alphas:
        for method in task.methods:
            estimate = RateEstimate(rejections[(method, alpha)], task.n_sim, alpha)
            rows.append({
                "layout": task.scenario.layout,
                "setting": task.scenario.setting,
                "scenario_index": task.scenario.index,
                "label": task.scenario.label,
                "m": task.m,
                "alpha": alpha,
                "method": method.value,
                "hypothesis_scale": method.scale.value,
                "h0f_holds": task.scenario.h0f_holds,
                "n_sim": task.n_sim,
                "n_perm": task.n_perm,
                "rejections": estimate.rejections,
                "rate": estimate.rate,
                "mc_se": estimate.mc_se,
                "deviation_pct": estimate.deviation_pct,
                "resolution_ok": _resolution_ok(task, method, alpha),
            })
    return rows


def _check_grid_resolution(config: RunConfig, tasks: Sequence[_BlockTask]) -> None:
    if not any(m.uses_permutation for task in tasks for m in task.methods):
        return
    plan = PermutationPlan(replicates=config.n_perm, seed=config.seed, enumeration_cap=config.enumeration_cap)
    for alpha in sorted(set(config.alphas)):
        check_resolution(plan, alpha)


def _effective_log_level() -> str:
    return logging.getLevelName(logging.getLogger().getEffectiveLevel())


def run_grid(config: RunConfig, workers: Optional[int] = None, log_level: Optional[str] = None) -> pd.DataFrame:
    """
    グリッド全体を実行して結果表を返す（行順は決定的）

    ワーカープロセスのログレベルは log_level、未指定なら呼び出し側の現在のレベルに揃える。
    """
    tasks = grid_tasks(config)
    _check_grid_resolution(config, tasks)
    workers = workers or config.workers

    logger.info("grid_started", blocks=len(tasks), n_sim=config.n_sim, n_perm=config.n_perm,
                seed=config.seed, workers=workers)
    started = time.perf_counter()

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers, initializer=setup_logging,
                                 initargs=(log_level or _effective_log_level(), None)) as executor:
            results = list(executor.map(_run_block, tasks))
    else:
        results = [_run_block(task) for task in tasks]

    rows = [row for task, rejections in zip(tasks, results) for row in _rows(task, rejections)]
    table = pd.DataFrame(rows, columns=RESULT_COLUMNS)
    table = sort_results(table)
    logger.info("grid_finished", rows=len(table), elapsed_seconds=round(time.perf_counter() - started, 3))
    return table


def sort_results(table: pd.DataFrame) -> pd.DataFrame:
    """(レイアウト, 設定, シナリオ, m, α, 手法) の順に並べる"""
    order = {m.value: i for i, m in enumerate(METHOD_ORDER)}
    keyed = table.assign(
        _layout=table["layout"].map({"oneway": 0, "twoway": 1}),
        _method=table["method"].map(order),
    )
    keyed = keyed.sort_values(["_layout", "setting", "scenario_index", "m", "alpha", "_method"], kind="mergesort")
    return keyed.drop(columns=["_layout", "_method"]).reset_index(drop=True)
