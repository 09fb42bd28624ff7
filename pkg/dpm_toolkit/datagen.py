"""
代码功能：
合成数据集生成（均匀分布、各向同性高斯混合）与 CSV 读写，
所有实验的数据入口。随机数统一使用 Philox（计数器型）生成器，
派生流通过 SeedSequence 的 spawn_key 得到，保证同一种子逐位可复现。
"""

import json
import logging
import math
import re
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from .exceptions import ConfigValidationError, DatasetFormatError, GeometryError

logger = logging.getLogger(__name__)

# ---------------------- 配置区 ----------------------
BOUNDS_PAD_FRACTION = 0.01   # 高斯数据的边界在样本 min/max 基础上外扩 1%
MIN_ABSOLUTE_PAD = 1e-9      # 样本范围为 0 时的最小外扩量
CSV_FLOAT_FORMAT = "%.17g"   # 保证 save → load 往返无损
LABEL_COLUMN = "label"


# ---------------------- 随机数生成器 ----------------------
def _check_seed(seed):
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) or seed < 0:
        raise ConfigValidationError("seed", f"种子必须是非负整数，当前为 {seed!r}")
    return int(seed)


def make_rng(seed) -> np.random.Generator:
    """根据种子创建 Philox 生成器"""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(_check_seed(seed))))


def derive_seed_sequence(seed, *keys) -> np.random.SeedSequence:
    """由 (主种子, 路径键) 派生独立的 SeedSequence"""
    return np.random.SeedSequence(_check_seed(seed), spawn_key=tuple(int(k) for k in keys))


def derive_rng(seed, *keys) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(derive_seed_sequence(seed, *keys)))


def derive_seed(seed, *keys) -> int:
    """派生一个 64 位整数种子（用于逐试验种子）"""
    return int(derive_seed_sequence(seed, *keys).generate_state(1, dtype=np.uint64)[0])


# ---------------------- 数据类型 ----------------------
def _normalize_bounds(bounds, dim):
    """接受单个 (low, high) 或逐维 (low, high) 列表，返回 dim×2 数组"""
    arr = np.asarray(bounds, dtype=float)
    if arr.shape == (2,):
        arr = np.tile(arr, (dim, 1))
    if arr.shape != (dim, 2):
        raise ConfigValidationError("bounds", f"需要 {dim} 个 (low, high) 对，实际形状为 {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ConfigValidationError("bounds", "边界必须是有限实数")
    if np.any(arr[:, 0] >= arr[:, 1]):
        bad = int(np.argmax(arr[:, 0] >= arr[:, 1]))
        raise ConfigValidationError("bounds", f"第 {bad} 维 low ≥ high：{tuple(arr[bad])}")
    return arr


def bounds_from_points(points, pad_fraction=BOUNDS_PAD_FRACTION):
    """逐维取样本 min/max 并按范围外扩 pad_fraction"""
    points = np.asarray(points, dtype=float)
    low = points.min(axis=0)
    high = points.max(axis=0)
    pad = np.maximum((high - low) * pad_fraction, MIN_ABSOLUTE_PAD)
    return np.column_stack([low - pad, high + pad])


@dataclass
class Dataset:
    """n 个 d 维数据点及逐维边界；labels 只用于评估，DPM 不读取"""
    points: np.ndarray
    bounds: np.ndarray
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim != 2 or self.points.shape[1] < 1:
            raise ConfigValidationError("points", f"数据必须是 n×d 矩阵（d ≥ 1），实际形状为 {self.points.shape}")
        if self.points.shape[0] < 1:
            raise ConfigValidationError("points", "数据集不能为空")
        if not np.all(np.isfinite(self.points)):
            raise ConfigValidationError("points", "数据包含非有限值")
        self.bounds = _normalize_bounds(self.bounds, self.dim)
        span = self.bounds[:, 1] - self.bounds[:, 0]
        tol = 1e-12 * np.maximum(span, 1.0)
        outside = (self.points < self.bounds[:, 0] - tol) | (self.points > self.bounds[:, 1] + tol)
        if np.any(outside):
            row, col = np.argwhere(outside)[0]
            raise ConfigValidationError("bounds", f"第 {row} 个点的第 {col} 维超出边界")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=int)
            if self.labels.shape != (self.n,):
                raise ConfigValidationError("labels", "标签数量与点数不一致")

    @property
    def n(self) -> int:
        return int(self.points.shape[0])

    @property
    def dim(self) -> int:
        return int(self.points.shape[1])

    def permuted(self, order):
        """按给定行序重排，边界不变"""
        order = np.asarray(order, dtype=int)
        labels = None if self.labels is None else self.labels[order]
        return Dataset(self.points[order], self.bounds.copy(), labels)


@dataclass
class GaussianComponent:
    center: Sequence[float]
    sigma: float
    count: int

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float).reshape(-1)
        if self.center.size < 1 or not np.all(np.isfinite(self.center)):
            raise ConfigValidationError("center", "中心必须是有限的非空向量")
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ConfigValidationError("sigma", f"sigma 必须大于 0，当前为 {self.sigma}")
        if int(self.count) != self.count or self.count < 1:
            raise ConfigValidationError("count", f"count 必须是正整数，当前为 {self.count}")
        self.count = int(self.count)


@dataclass
class GaussianMixtureSpec:
    components: List[GaussianComponent] = field(default_factory=list)
    seed: int = 0

    def __post_init__(self):
        self.components = [c if isinstance(c, GaussianComponent) else GaussianComponent(**c)
                           for c in self.components]
        if not self.components:
            raise ConfigValidationError("components", "至少需要一个高斯分量")
        dims = {c.center.size for c in self.components}
        if len(dims) != 1:
            raise ConfigValidationError("components", f"各分量维度不一致：{sorted(dims)}")
        self.seed = _check_seed(self.seed)

    @property
    def dim(self) -> int:
        return int(self.components[0].center.size)

    @classmethod
    def from_dict(cls, data):
        unknown = set(data) - {"components", "seed"}
        if unknown:
            raise ConfigValidationError(sorted(unknown)[0], "未知字段")
        return cls(components=list(data.get("components", [])), seed=data.get("seed", 0))

    def to_dict(self):
        return {
            "seed": self.seed,
            "components": [
                {"center": c.center.tolist(), "sigma": c.sigma, "count": c.count}
                for c in self.components
            ],
        }


def load_mixture_spec(path) -> GaussianMixtureSpec:
    with open(path, "r", encoding="utf-8") as f:
        return GaussianMixtureSpec.from_dict(json.load(f))


# ---------------------- 生成器 ----------------------
def generate_uniform(dim, n, bounds, seed) -> Dataset:
    """逐维独立均匀采样"""
    if int(dim) != dim or dim < 1:
        raise ConfigValidationError("dim", f"维度必须是正整数，当前为 {dim}")
    if int(n) != n or n < 1:
        raise ConfigValidationError("n", f"点数必须 ≥ 1，当前为 {n}")
    box = _normalize_bounds(bounds, int(dim))
    rng = make_rng(seed)
    points = rng.uniform(box[:, 0], box[:, 1], size=(int(n), int(dim)))
    logger.debug(f"生成均匀数据：n={n}, dim={dim}, seed={seed}")
    return Dataset(points, box)


def generate_gaussian_mixture(spec: GaussianMixtureSpec) -> Dataset:
    """按分量顺序采样 center + sigma·z，标签为分量下标"""
    rng = make_rng(spec.seed)
    blocks, labels = [], []
    for label, comp in enumerate(spec.components):
        z = rng.standard_normal((comp.count, spec.dim))
        blocks.append(comp.center + comp.sigma * z)
        labels.append(np.full(comp.count, label, dtype=int))
    points = np.vstack(blocks)
    logger.debug(f"生成高斯混合数据：{len(spec.components)} 个分量，共 {len(points)} 点")
    return Dataset(points, bounds_from_points(points), np.concatenate(labels))


def counterexample_mixture_spec(d_c_s0, d_split, sigma=1.0, n_per_cluster=500, seed=0) -> GaussianMixtureSpec:
    """
    轮廓系数反例的三簇几何：
    S0′ 在 (0, 0)，S0″ 在 (0, d_split)，C 在 (−d_c_s0, d_split/2)，
    即 C 到 S0 中心的距离为 d_c_s0，划分方向与 C–S0 轴正交。
    """
    for name, value in (("d_c_s0", d_c_s0), ("d_split", d_split)):
        if not math.isfinite(value) or value <= 0:
            raise GeometryError(f"{name} 必须是正的有限距离，当前为 {value}")
    half = d_split / 2.0
    return GaussianMixtureSpec(
        components=[
            GaussianComponent(center=[0.0, 0.0], sigma=sigma, count=n_per_cluster),
            GaussianComponent(center=[0.0, float(d_split)], sigma=sigma, count=n_per_cluster),
            GaussianComponent(center=[-float(d_c_s0), half], sigma=sigma, count=n_per_cluster),
        ],
        seed=seed,
    )


# ---------------------- CSV 读写 ----------------------
def save_csv(dataset: Dataset, path, include_labels=True):
    df = pd.DataFrame(dataset.points, columns=[f"x{i}" for i in range(dataset.dim)])
    if include_labels and dataset.labels is not None:
        df[LABEL_COLUMN] = dataset.labels
    df.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, encoding="utf-8-sig")
    logger.info(f"数据集已保存至：{path}（{dataset.n} 点，{dataset.dim} 维）")


def load_csv(path, bounds=None) -> Dataset:
    """读取 x0..x{d-1}[,label] 格式的 CSV；未给 bounds 时由数据外扩 1% 得到"""
    try:
        raw = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8-sig")
    except pd.errors.EmptyDataError as e:
        raise DatasetFormatError("文件为空") from e
    except pd.errors.ParserError as e:
        match = re.search(r"line (\d+)", str(e))
        raise DatasetFormatError(f"行长度不一致：{e}", row=int(match.group(1)) if match else None) from e

    feature_cols = [c for c in raw.columns if c != LABEL_COLUMN]
    if not feature_cols:
        raise DatasetFormatError("缺少特征列", row=1)
    if len(raw) == 0:
        raise DatasetFormatError("数据集不能为空", row=2)

    # 行过短时 pandas 以 NaN 补齐
    missing = raw.isna() | (raw == "")
    if missing.to_numpy().any():
        r, c = np.argwhere(missing.to_numpy())[0]
        raise DatasetFormatError("单元格缺失（行长度不一致）", row=int(r) + 2, column=raw.columns[c])

    values = np.empty((len(raw), len(feature_cols)))
    for j, col in enumerate(feature_cols):
        converted = pd.to_numeric(raw[col], errors="coerce").to_numpy(dtype=float)
        bad = ~np.isfinite(converted)
        if bad.any():
            r = int(np.argmax(bad))
            raise DatasetFormatError(f"非数值单元格 {raw[col].iloc[r]!r}", row=r + 2, column=col)
        values[:, j] = converted

    labels = None
    if LABEL_COLUMN in raw.columns:
        converted = pd.to_numeric(raw[LABEL_COLUMN], errors="coerce").to_numpy(dtype=float)
        bad = ~np.isfinite(converted) | ~np.equal(converted, np.round(converted))
        if bad.any():
            r = int(np.argmax(bad))
            raise DatasetFormatError(f"标签不是整数：{raw[LABEL_COLUMN].iloc[r]!r}", row=r + 2, column=LABEL_COLUMN)
        labels = converted.astype(int)

    box = bounds_from_points(values) if bounds is None else bounds
    logger.info(f"已读取数据集：{path}（{len(values)} 点，{len(feature_cols)} 维）")
    return Dataset(values, box, labels)
