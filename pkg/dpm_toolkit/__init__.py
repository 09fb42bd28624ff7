"""
DPM 差分隐私聚类工具包：合成数据、DPM 递归划分、停止概率下界、
轮廓系数反例实验、(ξ,ρ)-可分性与蒙特卡洛验证。
"""

from .datagen import Dataset, generate_gaussian_mixture, generate_uniform, load_csv, save_csv
from .dp_primitives import PrivacyLedger, PrivacyParams
from .dpm_engine import ClusteringResult, ClusterTree, DpmConfig, run_dpm
from .exceptions import (
    BoundDomainError,
    ConfigValidationError,
    DatasetFormatError,
    DpmToolkitError,
    GeometryError,
    InstanceTooLargeError,
    NoAdmissibleSplitError,
)
from .splitting import ScoreParams

__version__ = "0.1.0"
