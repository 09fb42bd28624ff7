"""
代码功能：
轮廓系数（按均值成对距离定义）、划分前后逐点变化的分类，
以及三簇高斯反例实验：扫描 (d_C_S0, d_split) 网格计算 ΔSC、
把划分前得分校准到 0.72，并检验两条单调趋势。
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.optimize import brentq
from scipy.spatial.distance import cdist
from scipy.stats import spearmanr
from tqdm import tqdm

from .datagen import counterexample_mixture_spec, generate_gaussian_mixture
from .exceptions import ConfigValidationError, GeometryError

logger = logging.getLogger(__name__)

# ---------------------- 配置区 ----------------------
MIN_POINTS_PER_CLUSTER = 50
DEFAULT_SEEDS = tuple(range(10))
DEFAULT_N_PER_CLUSTER = 500
CALIBRATION_TARGET = 0.72
CALIBRATION_BRACKET = (3.0, 30.0)
DEFAULT_D_C_S0_GRID = (6.0, 8.0, 10.0, 12.0, 14.0)
DEFAULT_D_SPLIT_GRID = (3.0, 4.0, 5.0, 6.0, 7.0)
STRONG_CORRELATION = 0.9
# 标签约定：反例数据中 0/1 为 S0′/S0″，2 为 C
COUNTEREXAMPLE_C_LABEL = 2


# ---------------------- 轮廓系数 ----------------------
@dataclass
class Clustering:
    points: np.ndarray
    assignment: np.ndarray

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim == 1:
            self.points = self.points.reshape(-1, 1)
        self.assignment = np.asarray(self.assignment).reshape(-1)
        if self.assignment.shape[0] != self.points.shape[0]:
            raise ConfigValidationError(
                "assignment", f"分配长度 {self.assignment.shape[0]} 与点数 {self.points.shape[0]} 不一致")
        if self.points.shape[0] < 1:
            raise ConfigValidationError("points", "聚类不能为空")

    @property
    def labels(self) -> np.ndarray:
        return np.unique(self.assignment)

    @property
    def k(self) -> int:
        return int(self.labels.size)


def mean_distance_matrix(points, assignment) -> Tuple[np.ndarray, np.ndarray]:
    """
    返回 (labels, D)，D[i, c] 为点 i 到簇 c 的平均距离；
    点所在簇的平均值不计自身（分母 |C|−1），单点簇对应 NaN。
    """
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points.reshape(-1, 1)
    labels, inverse = np.unique(np.asarray(assignment).reshape(-1), return_inverse=True)
    n, k = points.shape[0], labels.size
    onehot = np.zeros((n, k))
    onehot[np.arange(n), inverse] = 1.0
    sums = cdist(points, points) @ onehot
    denom = onehot.sum(axis=0)[None, :] - onehot
    with np.errstate(divide="ignore", invalid="ignore"):
        means = np.where(denom > 0, sums / np.where(denom > 0, denom, 1.0), np.nan)
    return labels, means


def _silhouette_from(intra, inter):
    """(inter − intra)/max；intra 为 NaN（单点簇）或两者均为 0 时取 0"""
    if math.isnan(intra):
        return 0.0
    top = max(intra, inter)
    if top == 0:
        return 0.0
    if math.isinf(inter):
        return 1.0
    return (inter - intra) / top


def silhouette_values(clustering: Clustering) -> np.ndarray:
    if clustering.k < 2:
        raise ValueError("只有一个簇时不存在簇间距离，轮廓系数无定义")
    labels, means = mean_distance_matrix(clustering.points, clustering.assignment)
    own = np.searchsorted(labels, clustering.assignment)
    rows = np.arange(means.shape[0])
    intra = means[rows, own]
    others = means.copy()
    others[rows, own] = np.inf
    inter = others.min(axis=1)
    top = np.maximum(intra, inter)
    with np.errstate(divide="ignore", invalid="ignore"):
        values = (inter - intra) / top
    values[np.isnan(intra) | (top == 0)] = 0.0
    return values


def silhouette_value(point_index, clustering: Clustering) -> float:
    n = clustering.points.shape[0]
    if not (0 <= point_index < n):
        raise IndexError(f"点下标 {point_index} 超出范围 [0, {n})")
    return float(silhouette_values(clustering)[point_index])


def silhouette_score(clustering: Clustering) -> float:
    return float(np.mean(silhouette_values(clustering)))


# ---------------------- 划分前后的逐点分类 ----------------------
class Side(str, Enum):
    PRIME = "S0'"
    DOUBLE_PRIME = "S0''"


class Role(str, Enum):
    IN_SPLIT_SUBSET = "in_split_subset"
    OUTSIDE = "outside"


class ChangeCase(str, Enum):
    C_REMAINS_NEAREST = "split.1"        # 划分后 C 仍是最近的其他簇
    OTHER_PART_NEAREST = "split.2"       # 划分后另一半成为最近的其他簇
    S0_NEAREST_PART_NEAREST = "outside.1a"
    S0_NEAREST_C_NEAREST = "outside.1b"
    C_NEAREST_PART_CLOSER = "outside.2a"
    C_REMAINS_NEAREST_OUTSIDE = "outside.2b"


@dataclass(frozen=True)
class SplitChangeCase:
    point_index: int
    role: Role
    case: ChangeCase
    improved: bool
    change: str                 # improved / unchanged / worsened
    lemma_condition: bool       # 引理文字给出的改进条件
    before: float
    after: float

    def to_dict(self):
        return {
            "point_index": self.point_index,
            "role": self.role.value,
            "case": self.case.value,
            "improved": self.improved,
            "change": self.change,
            "lemma_condition": self.lemma_condition,
            "before": self.before,
            "after": self.after,
        }


def _change_label(before, after):
    if after > before:
        return "improved"
    if after < before:
        return "worsened"
    return "unchanged"


def _check_distances(**distances):
    for name, value in distances.items():
        if math.isnan(value):
            continue
        if value < 0:
            raise ValueError(f"距离 {name} 不能为负：{value}")


def classify_split_member(d_C, d_S0, d_S0p, d_S0pp, side, point_index=-1) -> SplitChangeCase:
    """
    x ∈ S0 被划入 side 一侧。划分前 intra = d_S0，inter = d_C；
    划分后 intra = 本侧距离，inter = min(d_C, 另一侧距离)。
    improved 由两侧轮廓值的精确比较给出，lemma_condition 为引理的两条文字条件。
    """
    _check_distances(d_C=d_C, d_S0=d_S0, d_S0p=d_S0p, d_S0pp=d_S0pp)
    side = Side(side)
    if math.isinf(d_C) or math.isnan(d_C):
        raise ValueError("S0 的成员需要一个最近的其他簇 C（d_C 必须有限）")
    own, other = (d_S0p, d_S0pp) if side is Side.PRIME else (d_S0pp, d_S0p)

    before = _silhouette_from(d_S0, d_C)
    if d_C < other:
        case = ChangeCase.C_REMAINS_NEAREST
        after = _silhouette_from(own, d_C)
        condition = d_C < other < d_S0
    else:
        case = ChangeCase.OTHER_PART_NEAREST
        after = _silhouette_from(own, other)
        condition = (other - own) > (d_C - d_S0)
    change = _change_label(before, after)
    return SplitChangeCase(int(point_index), Role.IN_SPLIT_SUBSET, case, change == "improved",
                           change, bool(condition), float(before), float(after))


def classify_outsider(d_C, d_S0, d_S0p, d_S0pp, d_own, point_index=-1) -> SplitChangeCase:
    """x ∉ S0。d_C 为除自身簇和 S0 之外最近簇的平均距离，不存在时传 inf"""
    _check_distances(d_C=d_C, d_S0=d_S0, d_S0p=d_S0p, d_S0pp=d_S0pp, d_own=d_own)
    nearest_part = min(d_S0p, d_S0pp)
    before = _silhouette_from(d_own, min(d_C, d_S0))
    after = _silhouette_from(d_own, min(d_C, nearest_part))

    if d_S0 <= d_C:
        case = (ChangeCase.S0_NEAREST_PART_NEAREST if nearest_part <= d_C
                else ChangeCase.S0_NEAREST_C_NEAREST)
        condition = nearest_part > d_S0
    else:
        case = (ChangeCase.C_NEAREST_PART_CLOSER if nearest_part < d_C
                else ChangeCase.C_REMAINS_NEAREST_OUTSIDE)
        condition = False
    change = _change_label(before, after)
    return SplitChangeCase(int(point_index), Role.OUTSIDE, case, change == "improved",
                           change, bool(condition), float(before), float(after))


def split_point_distances(points, assignment, s0_label, new_assignment) -> pd.DataFrame:
    """
    由具体聚类测得每个点的 d_C、d_S0、d_S0′、d_S0″、d_own。
    new_assignment 必须与 assignment 在 S0 之外一致，并把 S0 恰好分成两个新标签。
    """
    assignment = np.asarray(assignment).reshape(-1)
    new_assignment = np.asarray(new_assignment).reshape(-1)
    if assignment.shape != new_assignment.shape:
        raise ValueError("划分前后的分配长度不一致")
    in_s0 = assignment == s0_label
    if not in_s0.any():
        raise ValueError(f"标签 {s0_label} 不存在")
    if np.any(assignment[~in_s0] != new_assignment[~in_s0]):
        raise ValueError("S0 之外的点在划分前后分配不一致")
    parts = np.unique(new_assignment[in_s0])
    if parts.size != 2 or np.isin(parts, assignment[~in_s0]).any():
        raise ValueError("S0 必须被划分为恰好两个新簇")
    part_p, part_pp = parts

    labels_before, before = mean_distance_matrix(points, assignment)
    labels_after, after = mean_distance_matrix(points, new_assignment)
    col_s0 = int(np.searchsorted(labels_before, s0_label))
    col_p = int(np.searchsorted(labels_after, part_p))
    col_pp = int(np.searchsorted(labels_after, part_pp))
    own_before = np.searchsorted(labels_before, assignment)

    rows = []
    for i in range(assignment.size):
        others = before[i].copy()
        others[own_before[i]] = np.inf
        others[col_s0] = np.inf
        rows.append({
            "point_index": i,
            "in_s0": bool(in_s0[i]),
            "side": (Side.PRIME.value if new_assignment[i] == part_p else Side.DOUBLE_PRIME.value)
            if in_s0[i] else None,
            "d_C": float(others.min()) if others.size else math.inf,
            "d_S0": float(before[i, col_s0]),
            "d_S0p": float(after[i, col_p]),
            "d_S0pp": float(after[i, col_pp]),
            "d_own": float(before[i, own_before[i]]),
        })
    return pd.DataFrame(rows)


def classify_split_effect(points, assignment, s0_label, new_assignment) -> List[SplitChangeCase]:
    table = split_point_distances(points, assignment, s0_label, new_assignment)
    results = []
    for row in table.itertuples(index=False):
        if row.in_s0:
            results.append(classify_split_member(row.d_C, row.d_S0, row.d_S0p, row.d_S0pp,
                                                 row.side, point_index=row.point_index))
        else:
            results.append(classify_outsider(row.d_C, row.d_S0, row.d_S0p, row.d_S0pp,
                                             row.d_own, point_index=row.point_index))
    return results


# ---------------------- 反例实验 ----------------------
def counterexample_assignments(points, labels, d_split) -> Tuple[np.ndarray, np.ndarray]:
    """
    划分前：C 与合并后的 S0 两簇（标签 0 = S0，1 = C）；
    划分后：S0 在第二维 d_split/2 处切开（标签 0/2 = 下/上半，1 = C）。
    """
    labels = np.asarray(labels)
    is_c = labels == COUNTEREXAMPLE_C_LABEL
    before = np.where(is_c, 1, 0)
    upper = np.asarray(points)[:, 1] >= d_split / 2.0
    after = np.where(is_c, 1, np.where(upper, 2, 0))
    return before, after


def _counterexample_scores(d_c_s0, d_split, sigma, n_per_cluster, seed, with_after=True):
    spec = counterexample_mixture_spec(d_c_s0, d_split, sigma=sigma, n_per_cluster=n_per_cluster, seed=seed)
    data = generate_gaussian_mixture(spec)
    before, after = counterexample_assignments(data.points, data.labels, d_split)
    sc_before = silhouette_score(Clustering(data.points, before))
    if not with_after:
        return sc_before, float("nan")
    if np.unique(after).size < 3:
        raise GeometryError(f"d_split={d_split} 时划分产生空簇")
    return sc_before, silhouette_score(Clustering(data.points, after))


def _check_n_per_cluster(n_per_cluster):
    if int(n_per_cluster) != n_per_cluster or n_per_cluster < MIN_POINTS_PER_CLUSTER:
        raise ConfigValidationError("n_per_cluster", f"每簇至少 {MIN_POINTS_PER_CLUSTER} 点，当前为 {n_per_cluster}")


def silhouette_change(d_c_s0, d_split, sigma=1.0, n_per_cluster=DEFAULT_N_PER_CLUSTER,
                      seeds: Sequence[int] = DEFAULT_SEEDS) -> Dict[str, object]:
    """一个几何配置在多个种子下的划分前/后得分与 ΔSC"""
    _check_n_per_cluster(n_per_cluster)
    seeds = list(seeds)
    if not seeds:
        raise ConfigValidationError("seeds", "至少需要一个种子")
    before, after = [], []
    for seed in seeds:
        b, a = _counterexample_scores(d_c_s0, d_split, sigma, n_per_cluster, seed)
        before.append(b)
        after.append(a)
    before, after = np.array(before), np.array(after)
    delta = after - before
    return {
        "d_C_S0": float(d_c_s0),
        "d_split": float(d_split),
        "delta_sc_mean": float(delta.mean()),
        "delta_sc_std": float(delta.std(ddof=1)) if delta.size > 1 else 0.0,
        "seeds": len(seeds),
        "before_mean": float(before.mean()),
        "after_mean": float(after.mean()),
        "fraction_negative": float(np.mean(delta < 0)),
    }


def counterexample_experiment(d_c_s0_values=DEFAULT_D_C_S0_GRID, d_split_values=DEFAULT_D_SPLIT_GRID,
                              sigma=1.0, n_per_cluster=DEFAULT_N_PER_CLUSTER,
                              seeds: Sequence[int] = DEFAULT_SEEDS, max_workers=1,
                              progress=True) -> pd.DataFrame:
    """对 (d_C_S0, d_split) 网格逐格计算 ΔSC，输出按网格顺序排列"""
    _check_n_per_cluster(n_per_cluster)
    cells = [(float(a), float(b)) for a in d_c_s0_values for b in d_split_values]
    for a, b in cells:
        if not (math.isfinite(a) and a > 0 and math.isfinite(b) and b > 0):
            raise GeometryError(f"距离必须为正的有限值：d_C_S0={a}, d_split={b}")
    rows: List[Optional[dict]] = [None] * len(cells)
    with tqdm(total=len(cells), desc="ΔSC 网格", disable=not progress) as bar:
        if max_workers > 1:
            with ThreadPoolExecutor(max_workers=max_workers) as executor:
                futures = {executor.submit(silhouette_change, a, b, sigma, n_per_cluster, seeds): idx
                           for idx, (a, b) in enumerate(cells)}
                for future in as_completed(futures):
                    rows[futures[future]] = future.result()
                    bar.update(1)
        else:
            for idx, (a, b) in enumerate(cells):
                rows[idx] = silhouette_change(a, b, sigma, n_per_cluster, seeds)
                bar.update(1)
    columns = ["d_C_S0", "d_split", "delta_sc_mean", "delta_sc_std", "seeds",
               "before_mean", "after_mean", "fraction_negative"]
    return pd.DataFrame(rows, columns=columns)


@dataclass
class CalibrationResult:
    d_c_s0: float
    d_split: float
    target: float
    before_mean: float
    after_mean: float
    delta_mean: float
    fraction_negative: float
    seeds: List[int] = field(default_factory=list)

    def to_dict(self):
        return {
            "d_C_S0": self.d_c_s0,
            "d_split": self.d_split,
            "target": self.target,
            "before_mean": self.before_mean,
            "after_mean": self.after_mean,
            "delta_sc_mean": self.delta_mean,
            "fraction_negative": self.fraction_negative,
            "seeds": list(self.seeds),
        }


def calibrate_counterexample(target=CALIBRATION_TARGET, d_split=5.0, sigma=1.0,
                             n_per_cluster=DEFAULT_N_PER_CLUSTER, seeds: Sequence[int] = DEFAULT_SEEDS,
                             bracket=CALIBRATION_BRACKET, xtol=1e-3) -> CalibrationResult:
    """
    在反例几何族中求 d_C_S0，使多种子平均的划分前得分等于 target，
    再在该配置上报告划分后得分。同一种子下数据随距离连续变化，brentq 可直接使用。
    """
    _check_n_per_cluster(n_per_cluster)
    seeds = list(seeds)

    def gap(d):
        scores = [_counterexample_scores(d, d_split, sigma, n_per_cluster, s, with_after=False)[0] for s in seeds]
        return float(np.mean(scores)) - target

    lo, hi = bracket
    f_lo, f_hi = gap(lo), gap(hi)
    if f_lo * f_hi > 0:
        raise GeometryError(f"区间 [{lo}, {hi}] 内的划分前得分 [{f_lo + target:.4f}, {f_hi + target:.4f}] "
                            f"不包含目标值 {target}")
    d = brentq(gap, lo, hi, xtol=xtol)
    summary = silhouette_change(d, d_split, sigma, n_per_cluster, seeds)
    logger.info(f"校准完成：d_C_S0={d:.4f}，划分前 {summary['before_mean']:.4f}，"
                f"划分后 {summary['after_mean']:.4f}")
    return CalibrationResult(d_c_s0=float(d), d_split=float(d_split), target=float(target),
                             before_mean=summary["before_mean"], after_mean=summary["after_mean"],
                             delta_mean=summary["delta_sc_mean"],
                             fraction_negative=summary["fraction_negative"], seeds=seeds)


def trend_correlations(table: pd.DataFrame) -> pd.DataFrame:
    """
    两条趋势的 Spearman 相关：固定 d_C_S0 时 ΔSC 随 d_split 递增（期望符号 +），
    固定 d_split 时 ΔSC 随 d_C_S0 递减（期望符号 −）。
    """
    rows = []
    for axis, fixed, sign in (("d_split", "d_C_S0", 1), ("d_C_S0", "d_split", -1)):
        for value, group in table.groupby(fixed, sort=True):
            if len(group) < 3:
                continue
            rho = spearmanr(group[axis], group["delta_sc_mean"]).statistic
            rows.append({
                "axis": axis,
                "fixed": fixed,
                "fixed_value": float(value),
                "points": int(len(group)),
                "spearman": float(rho),
                "expected_sign": sign,
                "sign_ok": bool(np.sign(rho) == sign),
                "strong": bool(abs(rho) >= STRONG_CORRELATION),
            })
    return pd.DataFrame(rows, columns=["axis", "fixed", "fixed_value", "points", "spearman",
                                       "expected_sign", "sign_ok", "strong"])
