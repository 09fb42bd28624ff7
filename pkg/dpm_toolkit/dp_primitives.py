"""
代码功能：
差分隐私基础机制：Laplace 噪声、带偏移的噪声计数、指数机制（EM）、
EM 效用界，以及按顺序/并行组合规则记账的隐私预算账本。
"""

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Dict, List, Sequence

import numpy as np
from scipy.special import softmax

from .exceptions import ConfigValidationError

logger = logging.getLogger(__name__)


# ---------------------- 数据类型 ----------------------
@dataclass(frozen=True)
class PrivacyParams:
    """(ε, δ)；ε = 0 只出现在空账本的组合结果中"""
    epsilon: float
    delta: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.epsilon) and self.epsilon >= 0):
            raise ConfigValidationError("epsilon", f"epsilon 必须是非负有限实数，当前为 {self.epsilon}")
        if not (0.0 <= self.delta <= 1.0):
            raise ConfigValidationError("delta", f"delta 必须满足 0 ≤ delta ≤ 1，当前为 {self.delta}")

    def to_dict(self):
        return {"epsilon": self.epsilon, "delta": self.delta}


@dataclass(frozen=True)
class NoisyCount:
    """ñ = raw + Lap(1/ε) + offset；真实计数不保存"""
    value: float
    offset: float
    epsilon: float
    delta: float
    unshifted: float   # raw + Lap(1/ε)，不含偏移


@dataclass
class ScoredCandidateSet:
    candidates: Sequence[Any]
    scores: np.ndarray
    sensitivity: float

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=float).reshape(-1)
        if len(self.candidates) != self.scores.size or self.scores.size < 1:
            raise ValueError(f"候选数 {len(self.candidates)} 与得分数 {self.scores.size} 不一致或为空")
        if not self.sensitivity > 0:
            raise ValueError(f"敏感度必须为正，当前为 {self.sensitivity}")


# ---------------------- Laplace 机制与噪声计数 ----------------------
def laplace_sample(scale, rng: np.random.Generator, size=None):
    if not scale > 0:
        raise ValueError(f"Laplace 尺度必须为正，当前为 {scale}")
    return rng.laplace(0.0, scale, size=size)


def count_offset(epsilon, delta, n_total) -> float:
    """偏移量 ln(√n/δ)/ε"""
    if not epsilon > 0:
        raise ValueError(f"epsilon 必须为正，当前为 {epsilon}")
    if not (0.0 < delta <= 1.0):
        raise ValueError(f"delta 必须满足 0 < delta ≤ 1（delta = 0 时偏移为无穷），当前为 {delta}")
    if n_total < 1:
        raise ValueError(f"n_total 必须 ≥ 1，当前为 {n_total}")
    return math.log(math.sqrt(n_total) / delta) / epsilon


def noisy_count(raw, epsilon, delta, n_total, rng: np.random.Generator, add_noise=True) -> NoisyCount:
    """
    返回 raw + Lap(1/ε) + offset。
    add_noise=False 时以 Laplace 的均值 0 代替噪声（无噪声模式，仅用于精确对照）。
    """
    if raw < 0:
        raise ValueError(f"计数不能为负：{raw}")
    offset = count_offset(epsilon, delta, n_total)
    noise = laplace_sample(1.0 / epsilon, rng) if add_noise else 0.0
    unshifted = float(raw) + float(noise)
    return NoisyCount(value=unshifted + offset, offset=offset, epsilon=epsilon, delta=delta, unshifted=unshifted)


def divergence_tail_probability(epsilon, delta, n_total) -> float:
    """Pr[ñ − offset − raw > offset] = ½·exp(−ε·offset) = δ/(2√n)"""
    return 0.5 * math.exp(-epsilon * count_offset(epsilon, delta, n_total))


def reported_divergence_tail(n_total) -> float:
    """文献给出的 1/(2√n)，与 δ = 1 时的解析值一致"""
    return 1.0 / (2.0 * math.sqrt(n_total))


# ---------------------- 指数机制 ----------------------
def em_probabilities(scores, epsilon, sensitivity, halve_exponent=True) -> np.ndarray:
    """
    EM 的选择概率 ∝ exp(ε·score/(2Δ_f))；halve_exponent=False 时去掉因子 2。
    softmax 内部先减去最大值，避免 ε/(2Δ_f) 很大时溢出。
    """
    scores = np.asarray(scores, dtype=float).reshape(-1)
    if scores.size == 0:
        raise ValueError("候选集合为空")
    if np.isnan(scores).any():
        raise ValueError(f"得分中存在 NaN（位置 {int(np.argmax(np.isnan(scores)))}）")
    if epsilon < 0:
        raise ValueError(f"epsilon 不能为负：{epsilon}")
    if not sensitivity > 0:
        raise ValueError(f"敏感度必须为正，当前为 {sensitivity}")
    factor = epsilon / ((2.0 if halve_exponent else 1.0) * sensitivity)
    if factor == 0:
        return np.full(scores.size, 1.0 / scores.size)
    return softmax(factor * scores)


def exponential_mechanism(candidate_set: ScoredCandidateSet, epsilon, rng: np.random.Generator,
                          halve_exponent=True, size=None):
    """按 EM 概率抽取候选下标；size 不为 None 时批量抽取"""
    pmf = em_probabilities(candidate_set.scores, epsilon, candidate_set.sensitivity, halve_exponent)
    return rng.choice(pmf.size, p=pmf, size=size)


def exact_selection_probability(scores, mask, epsilon, sensitivity, halve_exponent=True) -> float:
    """EM 选中 mask 所标记子集的精确概率"""
    pmf = em_probabilities(scores, epsilon, sensitivity, halve_exponent)
    return float(pmf[np.asarray(mask, dtype=bool)].sum())


def em_utility_bound(n_candidates, n_optimal, omega, kappa, epsilon, delta_f, opt=0.0) -> float:
    """
    EM 效用界：Pr[score ≤ OPT − ω − (2Δ_f/ε)(ln(|W|/|W_OPTω|) + κ)] ≤ e^{−κ}。
    返回该阈值；opt 缺省为 0，此时返回值即相对 OPT 的差距阈值。
    """
    if not (1 <= n_optimal <= n_candidates):
        raise ValueError(f"需要 1 ≤ |W_OPTω| ≤ |W|，当前为 {n_optimal}, {n_candidates}")
    if not kappa > 0:
        raise ValueError(f"kappa 必须为正，当前为 {kappa}")
    if not epsilon > 0:
        raise ValueError(f"epsilon 必须为正，当前为 {epsilon}")
    return opt - omega - (2.0 * delta_f / epsilon) * (math.log(n_candidates / n_optimal) + kappa)


# ---------------------- 预算账本 ----------------------
def _cap_delta(delta):
    return min(delta, 1.0)


def budget_ledger(ops: Sequence[PrivacyParams], parallel=False) -> PrivacyParams:
    """顺序组合求和；作用于互不相交子集的并行组合取最大值；空序列为 (0, 0)"""
    ops = list(ops)
    if not ops:
        return PrivacyParams(0.0, 0.0)
    if parallel:
        return PrivacyParams(max(p.epsilon for p in ops), max(p.delta for p in ops))
    return PrivacyParams(sum(p.epsilon for p in ops), _cap_delta(sum(p.delta for p in ops)))


@dataclass
class PrivacyLedger:
    """
    按递归深度记录机制调用。同一深度的节点处理互不相交的数据（并行组合），
    节点内部的调用顺序组合，各深度之间再顺序组合。
    """
    entries: Dict[Any, Dict[str, List[PrivacyParams]]] = field(
        default_factory=lambda: defaultdict(lambda: defaultdict(list)))

    def record(self, stage, node, params: PrivacyParams):
        """stage 为组合阶段（通常是深度），node 为该阶段内的不相交数据块标识"""
        self.entries[stage][node].append(params)

    def stage_total(self, stage) -> PrivacyParams:
        per_node = [budget_ledger(ops) for ops in self.entries[stage].values()]
        return budget_ledger(per_node, parallel=True)

    def total(self) -> PrivacyParams:
        return budget_ledger([self.stage_total(s) for s in sorted(self.entries, key=str)])

    @property
    def invocation_count(self) -> int:
        return sum(len(ops) for nodes in self.entries.values() for ops in nodes.values())
