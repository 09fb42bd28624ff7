"""
代码功能：
划分候选点的生成与评分函数 f = α·emptiness + centreness。
候选点只在根节点边界上生成一次，之后每层递归都复用同一组候选。
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import List, Sequence, Tuple

import numpy as np

from .exceptions import ConfigValidationError

logger = logging.getLogger(__name__)

# ---------------------- 配置区 ----------------------
NOISY_COUNT_FLOOR = 1.0
# 浮点误差容忍：range/β 恰为整数时不多切一段
INTERVAL_COUNT_SLACK = 1e-9


@dataclass(frozen=True)
class ScoreParams:
    alpha: float
    t: float
    q: float
    beta: float

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ConfigValidationError("alpha", f"alpha 必须 > 0，当前为 {self.alpha}")
        if not (0.0 < self.q < 0.5):
            raise ConfigValidationError("q", f"q 必须满足 0 < q < 1/2，当前为 {self.q}")
        if not (0.0 <= self.t <= 1.0):
            raise ConfigValidationError("t", f"t 必须满足 0 ≤ t ≤ 1，当前为 {self.t}")
        if self.t < 2 * self.q:
            raise ConfigValidationError("t", f"需要 t ≥ 2q，当前 t={self.t}, q={self.q}")
        if not (math.isfinite(self.beta) and self.beta > 0):
            raise ConfigValidationError("beta", f"beta 必须 > 0，当前为 {self.beta}")


@dataclass(frozen=True)
class SplitCandidate:
    dimension: int
    position: float
    width: float
    count_in_interval: int = 0
    rank: float = 0.0
    emptiness: float = float("nan")
    centreness: float = float("nan")
    score: float = float("nan")

    def to_dict(self):
        return {
            "dimension": self.dimension,
            "position": self.position,
            "width": self.width,
            "count_in_interval": self.count_in_interval,
            "rank": self.rank,
            "emptiness": self.emptiness,
            "centreness": self.centreness,
            "score": self.score,
        }


# ---------------------- 候选点生成 ----------------------
def generate_candidates(bounds, beta) -> List[SplitCandidate]:
    """每维范围等分为 ⌈range/β⌉ 段，取各段中点；β 大于范围时只有中点一个候选"""
    if not (math.isfinite(beta) and beta > 0):
        raise ConfigValidationError("beta", f"beta 必须 > 0，当前为 {beta}")
    bounds = np.asarray(bounds, dtype=float).reshape(-1, 2)
    if not np.all(np.isfinite(bounds)):
        raise ConfigValidationError("bounds", "边界必须是有限实数")
    candidates = []
    for dim, (low, high) in enumerate(bounds):
        span = high - low
        k = max(1, math.ceil(span / beta - INTERVAL_COUNT_SLACK))
        if beta > span:
            logger.debug(f"第 {dim} 维：beta={beta} 大于范围 {span}，只取中点")
        width = span / k
        for i in range(k):
            candidates.append(SplitCandidate(dimension=dim, position=float(low + (i + 0.5) * width), width=float(beta)))
    return candidates


def candidate_arrays(candidates: Sequence[SplitCandidate]) -> Tuple[np.ndarray, np.ndarray]:
    dims = np.fromiter((c.dimension for c in candidates), dtype=int, count=len(candidates))
    positions = np.fromiter((c.position for c in candidates), dtype=float, count=len(candidates))
    return dims, positions


# ---------------------- 子评分 ----------------------
def floor_noisy_count(value) -> Tuple[float, bool]:
    """ñ < 1 时取 1，返回 (取值, 是否发生截断)"""
    if value < NOISY_COUNT_FLOOR:
        return NOISY_COUNT_FLOOR, True
    return float(value), False


def emptiness(count_in_interval, noisy_n):
    """1 − |s|/ñ，不截断到 [0, 1]"""
    if np.any(np.asarray(noisy_n) <= 0):
        raise ValueError(f"ñ 必须为正（调用方应先截断），当前为 {noisy_n}")
    result = 1.0 - np.asarray(count_in_interval, dtype=float) / noisy_n
    return float(result) if np.ndim(result) == 0 else result


def centreness(rank, noisy_n, t, q):
    """
    分段线性中心度：
      外分位 Q_O = [0, ñq] ∪ [ñ−ñq, ñ]：((ñ/2 − |r−ñ/2|)·t)/(ñq)
      内分位 Q_I：(t−2q)/(1−2q) + ((ñ/2 − |r−ñ/2|)·(1−t))/(ñ/2 − ñq)
    """
    if not (0.0 < q < 0.5):
        raise ValueError(f"q 必须满足 0 < q < 1/2，当前为 {q}")
    if t < 2 * q:
        raise ValueError(f"需要 t ≥ 2q，当前 t={t}, q={q}")
    if noisy_n <= 0:
        raise ValueError(f"ñ 必须为正，当前为 {noisy_n}")
    r = np.asarray(rank, dtype=float)
    half = noisy_n / 2.0
    depth = half - np.abs(r - half)
    outer = depth * t / (noisy_n * q)
    inner = (t - 2 * q) / (1 - 2 * q) + depth * (1 - t) / (half - noisy_n * q)
    in_outer = (r <= noisy_n * q) | (r >= noisy_n - noisy_n * q)
    result = np.where(in_outer, outer, inner)
    return float(result) if result.ndim == 0 else result


def score(candidate: SplitCandidate, noisy_n, params: ScoreParams) -> float:
    return (params.alpha * emptiness(candidate.count_in_interval, noisy_n)
            + centreness(candidate.rank, noisy_n, params.t, params.q))


# ---------------------- 秩与区间计数 ----------------------
def rank_of(position, sorted_values):
    """严格小于 position 的个数加上并列个数的一半"""
    sorted_values = np.asarray(sorted_values, dtype=float)
    lt = np.searchsorted(sorted_values, position, side="left")
    le = np.searchsorted(sorted_values, position, side="right")
    result = lt + (le - lt) / 2.0
    return float(result) if np.ndim(result) == 0 else result


def count_in_interval(position, beta, sorted_values):
    """|{x : s − β/2 ≤ x ≤ s + β/2}|"""
    sorted_values = np.asarray(sorted_values, dtype=float)
    position = np.asarray(position, dtype=float)
    hi = np.searchsorted(sorted_values, position + beta / 2.0, side="right")
    lo = np.searchsorted(sorted_values, position - beta / 2.0, side="left")
    result = hi - lo
    return int(result) if np.ndim(result) == 0 else result


def sorted_projections(points) -> List[np.ndarray]:
    points = np.asarray(points, dtype=float)
    return [np.sort(points[:, j]) for j in range(points.shape[1])]


@dataclass
class CandidateScores:
    counts: np.ndarray
    ranks: np.ndarray
    emptiness: np.ndarray
    centreness: np.ndarray
    scores: np.ndarray

    def candidate(self, index, candidates: Sequence[SplitCandidate]) -> SplitCandidate:
        return replace(
            candidates[index],
            count_in_interval=int(self.counts[index]),
            rank=float(self.ranks[index]),
            emptiness=float(self.emptiness[index]),
            centreness=float(self.centreness[index]),
            score=float(self.scores[index]),
        )


def score_candidates(projections: Sequence[np.ndarray], candidates: Sequence[SplitCandidate],
                     noisy_n, params: ScoreParams) -> CandidateScores:
    """对一个节点的全部候选批量计算计数、秩与得分；projections 为该节点逐维排序后的坐标"""
    dims, positions = candidate_arrays(candidates)
    counts = np.zeros(len(candidates), dtype=int)
    ranks = np.zeros(len(candidates), dtype=float)
    for dim in np.unique(dims):
        sel = dims == dim
        counts[sel] = count_in_interval(positions[sel], params.beta, projections[dim])
        ranks[sel] = rank_of(positions[sel], projections[dim])
    e = np.atleast_1d(emptiness(counts, noisy_n))
    c = np.atleast_1d(centreness(ranks, noisy_n, params.t, params.q))
    return CandidateScores(counts=counts, ranks=ranks, emptiness=e, centreness=c, scores=params.alpha * e + c)
