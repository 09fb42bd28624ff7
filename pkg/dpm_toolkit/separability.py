"""
代码功能：
ρ-可分与 (ξ,ρ)-可分：交叉距离、ξ 计数、投影与原像计数、
三条引理的逐例检验、一维最优间隙搜索，以及可由独立重算验证的分隔证书。
证书中的 rho 取证明层面的界 b − a；陈述层面的 (b − a)/2 一并给出。
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from .exceptions import GeometryError
from .splitting import emptiness

logger = logging.getLogger(__name__)

# ---------------------- 配置区 ----------------------
UNIT_NORM_TOLERANCE = 1e-9
# 交叉距离验证的浮点容忍
DISTANCE_TOLERANCE = 1e-9
# 间隙端点上的点到分隔点的距离恰为 ρ/2，重算时半径按相对量收缩
BALL_RADIUS_SLACK = 1e-9


# ---------------------- 数据类型 ----------------------
@dataclass(frozen=True)
class Gap1D:
    a: float
    b: float
    xi_inside: int = 0

    def __post_init__(self):
        if not (self.a < self.b):
            raise GeometryError(f"间隙需要 a < b，当前为 ({self.a}, {self.b})")

    @property
    def width(self) -> float:
        return self.b - self.a

    @property
    def centre(self) -> float:
        return (self.a + self.b) / 2.0

    def to_dict(self):
        return {"a": self.a, "b": self.b, "xi_inside": self.xi_inside}


@dataclass
class SeparabilityCertificate:
    rho: float
    xi: int
    separator: np.ndarray
    direction: np.ndarray
    partition: Tuple[List[int], List[int]]
    gap: Optional[Gap1D] = None
    min_cross_distance: float = math.inf
    inside: List[int] = field(default_factory=list)

    def __post_init__(self):
        self.separator = np.asarray(self.separator, dtype=float)
        self.direction = np.asarray(self.direction, dtype=float)
        if abs(np.linalg.norm(self.direction) - 1.0) > UNIT_NORM_TOLERANCE:
            raise GeometryError(f"方向向量必须为单位向量，当前范数为 {np.linalg.norm(self.direction)}")
        if not self.rho > 0:
            raise GeometryError(f"rho 必须为正，当前为 {self.rho}")

    def recount(self, points) -> int:
        """独立重算分隔点开球（半径 ρ/2）内的点数"""
        return ball_count(points, self.separator, self.rho / 2.0 * (1.0 - BALL_RADIUS_SLACK))

    @property
    def statement_rho(self) -> float:
        return self.rho / 2.0

    def to_dict(self):
        left, right = self.partition
        return {
            "rho": self.rho,
            "statement_rho": self.statement_rho,
            "xi": self.xi,
            "separator": self.separator.tolist(),
            "direction": self.direction.tolist(),
            "partition_sizes": [len(left), len(right)],
            "min_cross_distance": None if math.isinf(self.min_cross_distance) else self.min_cross_distance,
            "gap": None if self.gap is None else self.gap.to_dict(),
        }


# ---------------------- 基本量 ----------------------
def _as_points(points, name="points") -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise GeometryError(f"{name} 必须是 n×d 矩阵")
    return arr


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float).reshape(-1)
    norm = float(np.linalg.norm(v))
    if norm == 0 or not math.isfinite(norm):
        raise GeometryError("投影方向不能是零向量")
    if abs(norm - 1.0) > UNIT_NORM_TOLERANCE:
        logger.debug(f"方向向量范数为 {norm}，已归一化")
    return v / norm


def _as_gap(gap) -> Gap1D:
    if isinstance(gap, Gap1D):
        return gap
    a, b = gap
    return Gap1D(float(a), float(b))


def cross_distance(X, Y) -> float:
    """min ‖x − y‖₂，即实现中的 ρ_{X,Y}"""
    X, Y = _as_points(X, "X"), _as_points(Y, "Y")
    if len(X) == 0 or len(Y) == 0:
        raise GeometryError("X 与 Y 都不能为空")
    return float(cdist(X, Y).min())


def is_rho_separable(X, Y, rho) -> bool:
    return cross_distance(X, Y) >= rho


def xi_for_rho(X, Y, rho) -> int:
    """max_x |{y ∈ Y : ‖x − y‖ ≤ ρ/2}|（单侧定义）"""
    if not rho > 0:
        raise GeometryError(f"rho 必须为正，当前为 {rho}")
    X, Y = _as_points(X, "X"), _as_points(Y, "Y")
    if len(X) == 0 or len(Y) == 0:
        return 0
    return int((cdist(X, Y) <= rho / 2.0).sum(axis=1).max())


def xi_symmetric(X, Y, rho) -> Dict[str, int]:
    forward = xi_for_rho(X, Y, rho)
    backward = xi_for_rho(Y, X, rho)
    return {"xi_xy": forward, "xi_yx": backward, "xi_max": max(forward, backward)}


def project(v, S) -> np.ndarray:
    """π_v(x) = v·x"""
    S = _as_points(S, "S")
    v = _unit(v)
    if S.shape[1] != v.size:
        raise GeometryError(f"方向维度 {v.size} 与数据维度 {S.shape[1]} 不一致")
    return S @ v


def preimage_count(v, G, S) -> int:
    """|{x ∈ S : v·x ∈ (a, b)}|"""
    gap = _as_gap(G)
    p = project(v, S)
    return int(np.count_nonzero((p > gap.a) & (p < gap.b)))


def ball_count(points, center, radius, closed=False) -> int:
    """半径 radius 的球内点数，缺省为开球"""
    points = _as_points(points)
    if len(points) == 0:
        return 0
    d = np.linalg.norm(points - np.asarray(center, dtype=float).reshape(1, -1), axis=1)
    return int(np.count_nonzero(d <= radius if closed else d < radius))


def axis_directions(dim) -> List[np.ndarray]:
    return [row for row in np.eye(int(dim))]


# ---------------------- 引理检验 ----------------------
def check_lemma_rho_empty(D, v, G) -> bool:
    """若 G 与 π_v(D) 不相交，则逐点扫描得到的原像必须为空"""
    gap = _as_gap(G)
    projected = project(v, D)
    antecedent = not np.any((projected > gap.a) & (projected < gap.b))
    if not antecedent:
        return True
    u = _unit(v)
    for x in _as_points(D):
        value = float(np.dot(u, x))
        if gap.a < value < gap.b:
            return False
    return True


def _lift_separator(points, left, right, proj, centre, v) -> np.ndarray:
    """在 x = 右侧投影最小者、y = 左侧投影最大者之间取 αx + (1−α)y，使其投影落在间隙中心"""
    if left.size == 0 or right.size == 0:
        return centre * v
    x_idx = right[np.argmin(proj[right])]
    y_idx = left[np.argmax(proj[left])]
    px, py = proj[x_idx], proj[y_idx]
    alpha = (centre - py) / (px - py)
    return alpha * points[x_idx] + (1.0 - alpha) * points[y_idx]


def _certificate_from_gap(points, v, gap: Gap1D) -> SeparabilityCertificate:
    points = _as_points(points)
    v = _unit(v)
    proj = project(v, points)
    inside = np.flatnonzero((proj > gap.a) & (proj < gap.b))
    left = np.flatnonzero(proj <= gap.a)
    right = np.flatnonzero(proj >= gap.b)

    min_cross = math.inf
    if left.size and right.size:
        min_cross = float(cdist(points[left], points[right]).min())
        if min_cross < gap.width - DISTANCE_TOLERANCE:
            raise GeometryError(f"交叉距离 {min_cross} 小于间隙宽度 {gap.width}")

    separator = _lift_separator(points, left, right, proj, gap.centre, v)
    cert = SeparabilityCertificate(
        rho=gap.width,
        xi=int(inside.size),
        separator=separator,
        direction=v,
        partition=(left.tolist(), right.tolist()),
        gap=Gap1D(gap.a, gap.b, int(inside.size)),
        min_cross_distance=min_cross,
        inside=inside.tolist(),
    )
    recount = cert.recount(points)
    if recount > cert.xi:
        raise GeometryError(f"分隔点球内有 {recount} 个点，超过 ξ = {cert.xi}")
    return cert


def check_lemma_empty_rho(D, v, G) -> SeparabilityCertificate:
    """原像为空时把 D 按间隙两侧划分，并验证所有交叉点对距离 ≥ b − a"""
    gap = _as_gap(G)
    count = preimage_count(v, gap, D)
    if count:
        raise GeometryError(f"前提不成立：间隙的原像中有 {count} 个点")
    return _certificate_from_gap(D, v, gap)


def check_lemma_rhoxi(S, v, G) -> Tuple[int, SeparabilityCertificate]:
    """去掉落在间隙内的 ξ 个点后按两侧划分，返回 (ξ, 证书)"""
    cert = _certificate_from_gap(S, v, _as_gap(G))
    return cert.xi, cert


# ---------------------- 间隙搜索 ----------------------
def _window_count(sorted_values, start, rho) -> int:
    lo = np.searchsorted(sorted_values, start, side="right")
    hi = np.searchsorted(sorted_values, start + rho, side="left")
    return int(max(hi - lo, 0))


def best_gap_1d(projected_values, rho) -> Gap1D:
    """
    宽度 ρ 的开窗口在投影范围内滑动，取包含点数最少者；
    点数相同时取中心最接近中位数的窗口。
    """
    if not rho > 0:
        raise GeometryError(f"rho 必须为正，当前为 {rho}")
    values = np.sort(np.asarray(projected_values, dtype=float).reshape(-1))
    if values.size == 0:
        raise GeometryError("投影值为空")
    low, high = float(values[0]), float(values[-1])
    median = float(np.median(values))

    if rho > high - low:
        logger.warning(f"rho={rho} 大于投影范围 {high - low}，只考察以范围中点为中心的单个窗口")
        start = (low + high) / 2.0 - rho / 2.0
        return Gap1D(start, start + rho, _window_count(values, start, rho))

    last = high - rho
    starts = np.concatenate([
        values[values <= last],
        values[values - rho >= low] - rho,
        [min(max(median - rho / 2.0, low), last)],
    ])
    starts = np.unique(starts)
    counts = np.array([_window_count(values, s, rho) for s in starts])
    best = np.flatnonzero(counts == counts.min())
    distance = np.abs(starts[best] + rho / 2.0 - median)
    choice = best[np.argmin(distance)]
    return Gap1D(float(starts[choice]), float(starts[choice] + rho), int(counts[choice]))


def emptiness_xi_bridge(xi, n_tilde) -> float:
    """间隙内 ξ 个点对应的 DPM emptiness：1 − ξ/ñ（取 β = ρ）"""
    if not n_tilde > 0:
        raise ValueError(f"ñ 必须为正，当前为 {n_tilde}")
    return emptiness(xi, n_tilde)


def find_certificates(points, rho, directions: Optional[Sequence] = None) -> List[SeparabilityCertificate]:
    """坐标轴方向加上用户给定方向，每个方向取最优间隙并生成证书"""
    points = _as_points(points)
    if len(points) == 0:
        raise GeometryError("数据集为空")
    candidates = axis_directions(points.shape[1])
    if directions is not None:
        candidates += [_unit(v) for v in directions]
    certificates = []
    for v in candidates:
        gap = best_gap_1d(project(v, points), rho)
        certificates.append(_certificate_from_gap(points, v, gap))
        logger.debug(f"方向 {np.round(v, 4).tolist()}：间隙 ({gap.a:.4f}, {gap.b:.4f})，ξ = {gap.xi_inside}")
    return certificates
