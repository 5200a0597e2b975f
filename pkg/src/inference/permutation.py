"""
順列検定エンジン

プールした観測をセルサイズを保ったまま再割り当てし、統計量の順列分布から p 値を求める。
モンテカルロでは再標本 b の並べ替えを (seed, b // 256) で決まる独立ストリームから引くので、
結果は seed と B だけで決まり、評価順や並列度に依存しない。
"""
import itertools
import logging
import math
import warnings
from dataclasses import dataclass, replace
from typing import Callable, Iterator, Optional, Tuple

import numpy as np

from src.core.config import DEFAULT_ENUMERATION_CAP, DEFAULT_N_PERM, DEFAULT_SEED
from src.core.exceptions import DegenerateDataError, DomainError, PlanError, ResolutionWarning
from src.factorial.dataset import Dataset
from src.factorial.design import Design
from src.numerics.linalg import Matrix
from .methods import Method
from .procedures import require_one_way, resolve_contrast, kruskal_wallis_statistic, rank_wts_statistic, wts_statistic
from .results import PermutationMode, PermutationReference, TestResult

logger = logging.getLogger(__name__)

BLOCK_SIZE = 256        # 1 ストリームあたりの再標本数
CHUNK_SIZE = 4096       # 全列挙時の一括評価サイズ
TIE_TOLERANCE = 1e-10   # Q* ≥ Q_obs 判定の相対許容誤差

Statistic = Callable[[Dataset], float]


@dataclass(frozen=True)
class PermutationPlan:
    """順列計画"""
    replicates: int = DEFAULT_N_PERM
    mode: PermutationMode = PermutationMode.MONTE_CARLO
    seed: int = DEFAULT_SEED
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP

    def __post_init__(self):
        if self.mode is PermutationMode.MONTE_CARLO and self.replicates < 1:
            raise PlanError(f"monte-carlo plan needs B >= 1, got {self.replicates}")
        if self.seed < 0:
            raise PlanError(f"seed must be non-negative, got {self.seed}")
        if self.enumeration_cap < 1:
            raise PlanError("enumeration cap must be >= 1")

    @classmethod
    def full_enumeration(cls, enumeration_cap: int = DEFAULT_ENUMERATION_CAP) -> "PermutationPlan":
        return cls(replicates=0, mode=PermutationMode.FULL_ENUMERATION, enumeration_cap=enumeration_cap)

    @property
    def resolution(self) -> float:
        """モンテカルロで到達可能な最小 p 値 1/(B+1)"""
        return 1.0 / (self.replicates + 1)


def check_resolution(plan: PermutationPlan, alpha: float) -> bool:
    """1/(B+1) ≤ α を確認し、満たさなければ警告（エラーにはしない）"""
    if plan.mode is PermutationMode.FULL_ENUMERATION or plan.resolution <= alpha:
        return True
    message = f"permutation resolution 1/(B+1) = {plan.resolution:.4g} exceeds alpha = {alpha:g}"
    logger.warning(message)
    warnings.warn(message, ResolutionWarning, stacklevel=2)
    return False


def count_arrangements(design: Design) -> int:
    """セルサイズを保つ割り当ての総数 N! / ∏ n_i!"""
    remaining = design.total
    count = 1
    for n_i in design.cell_sizes:
        count *= math.comb(remaining, n_i)
        remaining -= n_i
    return count


def _assignments(design: Design) -> Iterator[Tuple[int, ...]]:
    """全割り当てを添字列（セル順に連結）として列挙"""
    def fill(cell: int, remaining: Tuple[int, ...]) -> Iterator[Tuple[int, ...]]:
        if cell == design.cells - 1:
            yield remaining
            return
        for chosen in itertools.combinations(remaining, design.cell_sizes[cell]):
            rest = tuple(i for i in remaining if i not in chosen)
            for tail in fill(cell + 1, rest):
                yield chosen + tail
    yield from fill(0, tuple(range(design.total)))


def _enumeration_chunks(design: Design) -> Iterator[np.ndarray]:
    it = _assignments(design)
    while True:
        chunk = list(itertools.islice(it, CHUNK_SIZE))
        if not chunk:
            return
        yield np.asarray(chunk, dtype=np.intp)


def _stream(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=(block,))))


def _monte_carlo_chunks(plan: PermutationPlan, n_total: int) -> Iterator[np.ndarray]:
    base = np.arange(n_total)
    n_blocks = -(-plan.replicates // BLOCK_SIZE)
    for block in range(n_blocks):
        size = min(BLOCK_SIZE, plan.replicates - block * BLOCK_SIZE)
        yield _stream(plan.seed, block).permuted(np.tile(base, (size, 1)), axis=1)


def _evaluate(statistic: Statistic, data: Dataset, indices: np.ndarray) -> np.ndarray:
    values = data.pooled[indices]
    batch = getattr(statistic, "batch", None)
    if batch is not None:
        return np.asarray(batch(values, data.design), dtype=np.float64)
    return np.array([statistic(data.regroup(row)) for row in values])


def permutation_pvalue(statistic: Statistic, data: Dataset, plan: PermutationPlan) -> Tuple[float, float]:
    """
    順列 p 値と観測統計量 (p, Q_obs)

    モンテカルロ: p = (1 + #{Q*_b ≥ Q_obs}) / (B + 1)
    全列挙:       p = #{Q* ≥ Q_obs} / 割り当て総数
    """
    observed = float(statistic(data))
    if not math.isfinite(observed):
        raise DomainError(f"observed statistic is not finite: {observed}")
    threshold = observed - TIE_TOLERANCE * max(abs(observed), 1.0)

    if plan.mode is PermutationMode.FULL_ENUMERATION:
        total = count_arrangements(data.design)
        if total > plan.enumeration_cap:
            raise PlanError(f"full enumeration needs {total} arrangements, cap is {plan.enumeration_cap}")
        logger.debug(f"Full enumeration over {total} arrangements")
        hits = sum(int(np.sum(_evaluate(statistic, data, idx) >= threshold))
                   for idx in _enumeration_chunks(data.design))
        return hits / total, observed

    logger.debug(f"Monte Carlo permutation: B={plan.replicates}, seed={plan.seed}")
    hits = sum(int(np.sum(_evaluate(statistic, data, idx) >= threshold))
               for idx in _monte_carlo_chunks(plan, data.total))
    return (1 + hits) / (plan.replicates + 1), observed


def exact_plan(design: Design, plan: PermutationPlan) -> PermutationPlan:
    """割り当て総数が上限以内なら全列挙、超えるなら同じ B のモンテカルロ"""
    total = count_arrangements(design)
    if total <= plan.enumeration_cap:
        return replace(plan, mode=PermutationMode.FULL_ENUMERATION)
    logger.debug(f"{total} arrangements exceed cap {plan.enumeration_cap}; falling back to Monte Carlo")
    return replace(plan, mode=PermutationMode.MONTE_CARLO)


def _reference(design: Design, plan: PermutationPlan) -> PermutationReference:
    if plan.mode is PermutationMode.FULL_ENUMERATION:
        return PermutationReference(count_arrangements(design), plan.mode)
    return PermutationReference(plan.replicates, plan.mode)


def _permutation_result(method: Method, statistic: Statistic, data: Dataset, plan: PermutationPlan) -> TestResult:
    p_value, observed = permutation_pvalue(statistic, data, plan)
    return TestResult(
        method=method,
        statistic=observed,
        dist=_reference(data.design, plan),
        df=(),
        p_value=p_value,
        hypothesis=method.scale,
    )


def _require_two_per_cell(data: Dataset, method: Method) -> None:
    if min(data.design.cell_sizes) < 2:
        raise DomainError(f"{method.value} needs at least two observations per cell")


def wtps(data: Dataset, contrast: Optional[Matrix] = None, plan: Optional[PermutationPlan] = None) -> TestResult:
    """WTS の順列版"""
    _require_two_per_cell(data, Method.WTPS)
    statistic = wts_statistic(resolve_contrast(data, contrast))
    return _permutation_result(Method.WTPS, statistic, data, plan or PermutationPlan())


def rank_wtps(data: Dataset, contrast: Optional[Matrix] = None, plan: Optional[PermutationPlan] = None) -> TestResult:
    """順位ベース WTS の順列版"""
    _require_two_per_cell(data, Method.RWTPS)
    statistic = rank_wts_statistic(resolve_contrast(data, contrast))
    return _permutation_result(Method.RWTPS, statistic, data, plan or PermutationPlan())


def kruskal_wallis_exact(data: Dataset, plan: Optional[PermutationPlan] = None,
                         compat_printed: bool = False) -> TestResult:
    """Kruskal-Wallis の順列（正確）検定"""
    require_one_way(data, Method.KW_EXACT)
    if np.ptp(data.pooled) == 0.0:
        raise DegenerateDataError("all observations are identical")
    resolved = exact_plan(data.design, plan or PermutationPlan())
    return _permutation_result(Method.KW_EXACT, kruskal_wallis_statistic(compat_printed), data, resolved)
