"""
代码功能：
DPM 递归聚类：在每个节点用指数机制选择划分，划分后用噪声子集大小判断
是否违反最小簇大小 τ_e，违反则该节点成为簇；到达最大深度 τ_s 的节点也成为簇。
每个叶子簇输出一个差分隐私均值作为代表点。

随机性：每个节点使用由 (主种子, 节点路径) 派生的独立生成器，
因此同一深度的节点可以在线程池中并行处理，结果与顺序执行完全一致。
"""

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from .datagen import Dataset, derive_rng
from .dp_primitives import (
    NoisyCount,
    PrivacyLedger,
    PrivacyParams,
    ScoredCandidateSet,
    em_probabilities,
    exponential_mechanism,
    laplace_sample,
    noisy_count,
)
from .exceptions import ConfigValidationError
from .splitting import (
    ScoreParams,
    SplitCandidate,
    floor_noisy_count,
    generate_candidates,
    score_candidates,
    sorted_projections,
)

logger = logging.getLogger(__name__)

# ---------------------- 配置区 ----------------------
# 派生随机流的命名空间（spawn_key 的第一个分量）
STREAM_NODE = 1
STREAM_AVERAGE = 2
AVERAGING_SCALE_FORMULA = "2 * clip_bound * d / (eps_avg * count)"


class HaltReason(str, Enum):
    MIN_SIZE_VIOLATED = "MinSizeViolated"
    MAX_DEPTH = "MaxDepth"


# ---------------------- 配置 ----------------------
@dataclass
class DpmConfig:
    score_params: ScoreParams
    tau_e: int
    tau_s: int
    eps_count: float
    eps_select: float
    eps_avg: float
    delta: float
    clip_bound: float
    sensitivity: Optional[float] = None   # None 表示使用 (1+α)/ñ
    halve_exponent: bool = True
    count_noise: bool = True
    max_workers: int = 1

    def __post_init__(self):
        if int(self.tau_e) != self.tau_e or self.tau_e < 1:
            raise ConfigValidationError("tau_e", f"tau_e 必须是 ≥ 1 的整数，当前为 {self.tau_e}")
        if int(self.tau_s) != self.tau_s or self.tau_s < 0:
            raise ConfigValidationError("tau_s", f"tau_s 必须是 ≥ 0 的整数，当前为 {self.tau_s}")
        self.tau_e, self.tau_s = int(self.tau_e), int(self.tau_s)
        for name in ("eps_count", "eps_select", "eps_avg", "clip_bound"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ConfigValidationError(name, f"{name} 必须 > 0，当前为 {value}")
        if not (0.0 < self.delta <= 1.0):
            raise ConfigValidationError("delta", f"delta 必须满足 0 < delta ≤ 1，当前为 {self.delta}")
        if self.sensitivity is not None and not self.sensitivity > 0:
            raise ConfigValidationError("sensitivity", f"sensitivity 必须 > 0 或为 null，当前为 {self.sensitivity}")
        if int(self.max_workers) != self.max_workers or self.max_workers < 1:
            raise ConfigValidationError("max_workers", f"max_workers 必须是正整数，当前为 {self.max_workers}")

    # 扁平 JSON 字段
    SCORE_FIELDS = ("alpha", "t", "q", "beta")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "DpmConfig":
        known = set(cls.SCORE_FIELDS) | {f for f in cls.__dataclass_fields__ if f != "score_params"}
        unknown = set(data) - known
        if unknown:
            raise ConfigValidationError(sorted(unknown)[0], "未知字段")
        missing = [f for f in cls.SCORE_FIELDS if f not in data]
        if missing:
            raise ConfigValidationError(missing[0], "缺少必填字段")
        for k in cls.SCORE_FIELDS:
            if isinstance(data[k], bool) or not isinstance(data[k], (int, float)):
                raise ConfigValidationError(k, f"必须是实数，当前为 {data[k]!r}")
        score = ScoreParams(**{k: float(data[k]) for k in cls.SCORE_FIELDS})
        rest = {k: v for k, v in data.items() if k not in cls.SCORE_FIELDS}
        try:
            return cls(score_params=score, **rest)
        except TypeError as e:
            raise ConfigValidationError("config", f"缺少必填字段：{e}") from e

    @classmethod
    def from_json(cls, path) -> "DpmConfig":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_dict(json.load(f))

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self.score_params)
        data.update({k: getattr(self, k) for k in self.__dataclass_fields__ if k != "score_params"})
        return data

    def with_overrides(self, **changes) -> "DpmConfig":
        data = self.to_dict()
        data.update(changes)
        return DpmConfig.from_dict(data)

    def node_sensitivity(self, noisy_n) -> float:
        if self.sensitivity is not None:
            return float(self.sensitivity)
        return (1.0 + self.score_params.alpha) / noisy_n


# ---------------------- 树与结果 ----------------------
@dataclass
class ClusterTree:
    indices: np.ndarray
    depth: int
    path: str = ""
    noisy_n: Optional[float] = None
    split: Optional[SplitCandidate] = None
    left: Optional["ClusterTree"] = None
    right: Optional["ClusterTree"] = None
    halt_reason: Optional[HaltReason] = None
    center: Optional[np.ndarray] = None
    dim: Optional[int] = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    def leaves(self) -> List["ClusterTree"]:
        if self.is_leaf:
            return [self]
        return self.left.leaves() + self.right.leaves()

    def max_depth(self) -> int:
        return max(leaf.depth for leaf in self.leaves())

    def to_dict(self) -> Dict[str, Any]:
        node = {
            "path": self.path,
            "depth": self.depth,
            "size": int(len(self.indices)),
            "noisy_n": self.noisy_n,
        }
        if self.dim is not None:
            node["dim"] = self.dim
        if self.is_leaf:
            node["halt_reason"] = self.halt_reason.value if self.halt_reason else None
            node["center"] = None if self.center is None else [float(v) for v in self.center]
            node["indices"] = [int(i) for i in self.indices]
        else:
            node["split"] = self.split.to_dict()
            node["left"] = self.left.to_dict()
            node["right"] = self.right.to_dict()
        return node

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ClusterTree":
        """从 result.json 的 tree 字段恢复（内部节点不保存索引，重放时重新推导）"""
        node = cls(indices=np.asarray(data.get("indices", []), dtype=int), depth=int(data["depth"]),
                   path=data.get("path", ""), noisy_n=data.get("noisy_n"), dim=data.get("dim"))
        if "split" in data:
            node.split = SplitCandidate(**data["split"])
            node.left = cls.from_dict(data["left"])
            node.right = cls.from_dict(data["right"])
        else:
            reason = data.get("halt_reason")
            node.halt_reason = HaltReason(reason) if reason else None
            center = data.get("center")
            node.center = None if center is None else np.asarray(center, dtype=float)
        return node


@dataclass
class ClusteringResult:
    clusters: List[np.ndarray]
    centers: List[np.ndarray]
    tree: ClusterTree
    budget_spent: PrivacyParams
    halt_reasons: List[HaltReason]
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def assignment(self) -> np.ndarray:
        """逐点簇编号（按 clusters 顺序）"""
        n = sum(len(c) for c in self.clusters)
        labels = np.full(n, -1, dtype=int)
        for k, members in enumerate(self.clusters):
            labels[members] = k
        return labels

    def to_dict(self) -> Dict[str, Any]:
        return {
            "clusters": [[int(i) for i in c] for c in self.clusters],
            "centers": [[float(v) for v in c] for c in self.centers],
            "halt_reasons": [r.value for r in self.halt_reasons],
            "budget": self.budget_spent.to_dict(),
            "tree": self.tree.to_dict(),
            "metadata": self.metadata,
        }


def save_result(result: ClusteringResult, path):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(result.to_dict(), f, ensure_ascii=False, indent=2)
    logger.info(f"聚类结果已保存至：{path}")


def load_tree(path) -> ClusterTree:
    with open(path, "r", encoding="utf-8") as f:
        return ClusterTree.from_dict(json.load(f)["tree"])


# ---------------------- 差分隐私均值 ----------------------
def dp_average(points, clip_bound, epsilon, rng: np.random.Generator) -> np.ndarray:
    """逐坐标截断到 [−clip, clip] 后取均值，并加 Laplace(2·clip·d/(ε·count)) 噪声"""
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or len(points) == 0:
        raise ValueError("差分隐私均值需要非空的点集")
    count, dim = points.shape
    clipped = np.clip(points, -clip_bound, clip_bound)
    scale = 2.0 * clip_bound * dim / (epsilon * count)
    return clipped.mean(axis=0) + laplace_sample(scale, rng, size=dim)


# ---------------------- 节点评分（引擎与精确枚举共用） ----------------------
def node_selection_pmf(projections, candidates, noisy_n, config: DpmConfig):
    """返回 (pmf, 得分, 实际使用的 ñ, 是否截断)"""
    n_used, floored = floor_noisy_count(noisy_n)
    scored = score_candidates(projections, candidates, n_used, config.score_params)
    pmf = em_probabilities(scored.scores, config.eps_select, config.node_sensitivity(n_used),
                           config.halve_exponent)
    return pmf, scored, n_used, floored


def _path_keys(path: str) -> Tuple[int, ...]:
    return tuple(int(b) for b in path)


@dataclass
class _RunState:
    dataset: Dataset
    config: DpmConfig
    seed: int
    candidates: List[SplitCandidate]
    ledger: PrivacyLedger = field(default_factory=PrivacyLedger)
    floored_counts: int = 0
    clamp_violations: int = 0

    def count(self, raw, rng) -> NoisyCount:
        return noisy_count(raw, self.config.eps_count, self.config.delta, self.dataset.n, rng,
                           add_noise=self.config.count_noise)


def _process_node(state: _RunState, node: ClusterTree):
    """为单个节点选择划分并决定是否停止；返回 (子节点列表, 账本条目, 诊断计数)"""
    cfg = state.config
    entries = []
    diag = {"floored": 0, "clamp": 0}
    if node.depth >= cfg.tau_s:
        node.halt_reason = HaltReason.MAX_DEPTH
        return [], entries, diag

    rng = derive_rng(state.seed, STREAM_NODE, *_path_keys(node.path))
    subset = state.dataset.points[node.indices]
    pmf, scored, n_used, floored = node_selection_pmf(sorted_projections(subset), state.candidates, node.noisy_n, cfg)
    diag["floored"] += int(floored)
    diag["clamp"] += int(np.count_nonzero((scored.emptiness < 0) | (scored.emptiness > 1)))
    choice = int(exponential_mechanism(
        ScoredCandidateSet(state.candidates, scored.scores, cfg.node_sensitivity(n_used)),
        cfg.eps_select, rng, cfg.halve_exponent))
    entries.append((node.depth, node.path, PrivacyParams(cfg.eps_select, cfg.delta)))
    split = scored.candidate(choice, state.candidates)

    goes_left = subset[:, split.dimension] < split.position
    children = []
    for bit, mask in (("0", goes_left), ("1", ~goes_left)):
        child_path = node.path + bit
        child_rng = derive_rng(state.seed, STREAM_NODE, *_path_keys(child_path))
        child_count = state.count(int(mask.sum()), child_rng)
        entries.append((node.depth + 1, child_path, PrivacyParams(cfg.eps_count, 0.0)))
        children.append((ClusterTree(indices=node.indices[mask], depth=node.depth + 1, path=child_path,
                                     noisy_n=child_count.value), child_count))

    # 任一侧噪声大小（不含偏移）低于 τ_e：放弃该划分，本节点成为簇
    if any(c.unshifted < cfg.tau_e for _, c in children):
        node.halt_reason = HaltReason.MIN_SIZE_VIOLATED
        logger.debug(f"节点 '{node.path}' 在深度 {node.depth} 因最小簇大小停止")
        return [], entries, diag

    node.split = split
    node.left, node.right = children[0][0], children[1][0]
    return [node.left, node.right], entries, diag


def run_dpm(dataset: Dataset, config: DpmConfig, seed: Union[int, np.random.Generator]) -> ClusteringResult:
    """
    逐层（广度优先）处理节点；同层节点互不相交，可并行。
    seed 也可以是 Generator：从中抽取一个主种子，之后仍按节点路径派生随机流，
    metadata 记录的是抽到的主种子，可用它单独复现本次运行。
    """
    if isinstance(seed, np.random.Generator):
        seed = int(seed.integers(0, 2 ** 63 - 1))
    candidates = generate_candidates(dataset.bounds, config.score_params.beta)
    state = _RunState(dataset, config, seed, candidates)

    root_rng = derive_rng(seed, STREAM_NODE)
    root_count = state.count(dataset.n, root_rng)
    state.ledger.record(0, "", PrivacyParams(config.eps_count, 0.0))
    root = ClusterTree(indices=np.arange(dataset.n), depth=0, path="", noisy_n=root_count.value, dim=dataset.dim)

    frontier = [root]
    while frontier:
        if config.max_workers > 1 and len(frontier) > 1:
            with ThreadPoolExecutor(max_workers=config.max_workers) as executor:
                outcomes = list(executor.map(lambda nd: _process_node(state, nd), frontier))
        else:
            outcomes = [_process_node(state, nd) for nd in frontier]
        next_frontier = []
        for children, entries, diag in outcomes:
            next_frontier.extend(children)
            for stage, node_path, params in entries:
                state.ledger.record(stage, node_path, params)
            state.floored_counts += diag["floored"]
            state.clamp_violations += diag["clamp"]
        frontier = next_frontier

    leaves = root.leaves()
    clusters, centers, reasons = [], [], []
    for leaf in leaves:
        if len(leaf.indices) == 0:
            continue
        avg_rng = derive_rng(seed, STREAM_AVERAGE, *_path_keys(leaf.path))
        leaf.center = dp_average(dataset.points[leaf.indices], config.clip_bound, config.eps_avg, avg_rng)
        clusters.append(np.sort(leaf.indices))
        centers.append(leaf.center)
        reasons.append(leaf.halt_reason)
        state.ledger.record("averaging", leaf.path, PrivacyParams(config.eps_avg, 0.0))

    if state.floored_counts:
        logger.warning(f"有 {state.floored_counts} 个节点的 ñ < 1，已截断为 1")
    if state.clamp_violations:
        logger.debug(f"emptiness 超出 [0,1] 的候选次数：{state.clamp_violations}")

    metadata = {
        "seed": int(seed),
        "config": config.to_dict(),
        "noise_mode": "laplace" if config.count_noise else "noise-free (offset-shifted mean)",
        "n_candidates": len(candidates),
        "floored_counts": state.floored_counts,
        "emptiness_clamp_violations": state.clamp_violations,
        "averaging_scale": AVERAGING_SCALE_FORMULA,
        "mechanism_invocations": state.ledger.invocation_count,
    }
    logger.debug(f"DPM 完成：{len(clusters)} 个簇，最大深度 {root.max_depth()}")
    return ClusteringResult(clusters, centers, root, state.ledger.total(), reasons, metadata)


# ---------------------- 重放 ----------------------
def replay(tree: ClusterTree, dataset: Dataset) -> ClusteringResult:
    """按保存的划分位置重新推导簇成员；代表点沿用树中保存的值"""
    if tree.dim is not None and tree.dim != dataset.dim:
        raise ValueError(f"维度不匹配：树为 {tree.dim} 维，数据为 {dataset.dim} 维")

    clusters, centers, reasons = [], [], []

    def walk(node: ClusterTree, indices: np.ndarray):
        if node.is_leaf:
            if len(indices):
                clusters.append(np.sort(indices))
                centers.append(node.center)
                reasons.append(node.halt_reason)
            return
        if node.split.dimension >= dataset.dim:
            raise ValueError(f"维度不匹配：划分维度 {node.split.dimension} 超出数据维度 {dataset.dim}")
        goes_left = dataset.points[indices, node.split.dimension] < node.split.position
        walk(node.left, indices[goes_left])
        walk(node.right, indices[~goes_left])

    walk(tree, np.arange(dataset.n))
    return ClusteringResult(clusters, centers, tree, PrivacyParams(0.0, 0.0), reasons, {"mode": "replay"})
