"""
代码功能：
停止概率分析的全部闭式量：中心度阈值 t_τ 及其随递归层数的演化、
三个下界（立即停止 / t′-中心划分 / 不停止）、两个按层递推的停止概率下界、
均匀数据与高斯数据的局限性分析（含阈值演化曲线），以及正态分布数值函数。

情景计数（|W_≤tτ| 等）既可以抽象给出，也可以由具体数据集测得；
两条路径共用同一套公式代码。
"""

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
import pandas as pd
from scipy.special import erfc, logsumexp

from .dp_primitives import count_offset
from .exceptions import BoundDomainError, ConfigValidationError, NoAdmissibleSplitError
from .splitting import centreness, floor_noisy_count, generate_candidates, score_candidates, sorted_projections

logger = logging.getLogger(__name__)

# ---------------------- 配置区 ----------------------
# 文献中按查表取整给出的 z_i 与中心划分 emptiness 序列（i = 0..6）
PUBLISHED_Z_TABLE = (0.0, 0.6744, 1.15, 1.53, 1.86, 2.13, 2.41)
PUBLISHED_EMPTINESS_TABLE = (0.80258, 0.6831, 0.5868, 0.49816, 0.41968, 0.3155, 0.26528)
DEFAULT_BETA_OVER_SIGMA = 0.5
DEFAULT_FIG4_ALPHAS = (0.5, 1.0, 2.0, 3.0, 5.0)
MAX_MEDIAN_SHIFT_LEVEL = 12
COUNT_KEYS = ("W_below_ttau", "W_mid", "W_above")
TPRIME_COUNT_KEYS = ("W_above_tprime", "W_mid_tprime")
# exp 的安全上限，超过时按上限截断（仅影响已经远小于 0 的原始下界）
MAX_LOG_RATIO = 700.0

# Acklam 有理逼近系数
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425


# ---------------------- 正态分布数值 ----------------------
def normal_cdf(x):
    """Φ(x) = ½·erfc(−x/√2)"""
    result = 0.5 * erfc(-np.asarray(x, dtype=float) / math.sqrt(2.0))
    return float(result) if np.ndim(result) == 0 else result


def normal_pdf(x):
    x = np.asarray(x, dtype=float)
    result = np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    return float(result) if np.ndim(result) == 0 else result


def _poly(coeffs, x):
    acc = np.zeros_like(x)
    for c in coeffs:
        acc = acc * x + c
    return acc


def normal_quantile(p):
    """Φ⁻¹(p)：Acklam 有理逼近，再做一步 Newton 修正"""
    scalar = np.ndim(p) == 0
    p = np.atleast_1d(np.asarray(p, dtype=float))
    if np.any(~((p > 0) & (p < 1))):
        raise ValueError(f"p 必须在 (0, 1) 内，当前为 {p}")
    x = np.empty_like(p)

    low = p < _P_LOW
    high = p > 1 - _P_LOW
    mid = ~(low | high)

    if np.any(low):
        ql = np.sqrt(-2.0 * np.log(p[low]))
        x[low] = _poly(_C, ql) / (_poly(_D, ql) * ql + 1.0)
    if np.any(high):
        qh = np.sqrt(-2.0 * np.log1p(-p[high]))
        x[high] = -_poly(_C, qh) / (_poly(_D, qh) * qh + 1.0)
    if np.any(mid):
        q = p[mid] - 0.5
        r = q * q
        x[mid] = _poly(_A, r) * q / (_poly(_B, r) * r + 1.0)

    x = x - (normal_cdf(x) - p) / normal_pdf(x)
    return float(x[0]) if scalar else x


# ---------------------- 中心度阈值 ----------------------
def centreness_threshold(tau_e, n_tilde, t, q) -> float:
    """t_τ = c_{t,q}(r = τ_e)：中心度低于它的划分必然违反最小簇大小"""
    if 2 * tau_e > n_tilde:
        raise NoAdmissibleSplitError(f"2·τ_e = {2 * tau_e} > ñ = {n_tilde}，不存在可接受的划分")
    return centreness(tau_e, n_tilde, t, q)


def uniform_fails_to_halt(n, tau_e, tau_s) -> bool:
    """均匀数据上 τ_e < n/2^{τ_s} 时 DPM 会一直划分到最大深度"""
    return tau_e < n / 2 ** tau_s


# ---------------------- 情景 ----------------------
@dataclass
class BoundScenario:
    n_tilde: float
    tau_e: float
    t: float
    q: float
    alpha: float
    eps: float
    delta_f: float
    e_min: float
    e_qi: float
    counts: Dict[str, int]
    levels: int = 0
    t_prime: Optional[float] = None
    t_tau: Optional[float] = None          # 给定时覆盖由 (τ_e, ñ, t, q) 计算的 t_τ
    centreness_values: Optional[np.ndarray] = None   # 测得路径：逐候选中心度，用于按层重新分类
    tprime_counts: Optional[Dict[str, int]] = None
    halve_exponent: bool = True

    def __post_init__(self):
        if set(self.counts) != set(COUNT_KEYS):
            raise ConfigValidationError("counts", f"counts 必须恰好包含 {COUNT_KEYS}")
        for key, value in self.counts.items():
            if int(value) != value or value < 0:
                raise ConfigValidationError("counts", f"{key} 必须是非负整数，当前为 {value}")
        self.counts = {k: int(v) for k, v in self.counts.items()}
        if self.tprime_counts is not None:
            if set(self.tprime_counts) != set(TPRIME_COUNT_KEYS):
                raise ConfigValidationError("tprime_counts", f"tprime_counts 必须恰好包含 {TPRIME_COUNT_KEYS}")
            self.tprime_counts = {k: int(v) for k, v in self.tprime_counts.items()}
        for name in ("n_tilde", "eps", "delta_f", "alpha"):
            if not getattr(self, name) > 0:
                raise ConfigValidationError(name, f"{name} 必须 > 0，当前为 {getattr(self, name)}")
        if not (0.0 < self.q < 0.5):
            raise ConfigValidationError("q", f"q 必须满足 0 < q < 1/2，当前为 {self.q}")
        if not (0.0 <= self.t <= 1.0):
            raise ConfigValidationError("t", f"t 必须满足 0 ≤ t ≤ 1，当前为 {self.t}")
        if self.e_min > 1 or self.e_qi > 1:
            raise ConfigValidationError("e_min" if self.e_min > 1 else "e_qi", "emptiness 上界为 1")
        if int(self.levels) != self.levels or self.levels < 0:
            raise ConfigValidationError("levels", f"levels 必须是非负整数，当前为 {self.levels}")
        if self.t_prime is not None and not (0.0 < self.t_prime <= 1.0):
            raise ConfigValidationError("t_prime", f"t′ 必须在 (0, 1] 内，当前为 {self.t_prime}")
        if self.centreness_values is not None:
            self.centreness_values = np.asarray(self.centreness_values, dtype=float)

    @property
    def k(self) -> float:
        """EM 指数中的 ε/(2Δ_f)"""
        return self.eps / ((2.0 if self.halve_exponent else 1.0) * self.delta_f)

    @property
    def base_t_tau(self) -> float:
        if self.t_tau is not None:
            return float(self.t_tau)
        return centreness_threshold(self.tau_e, self.n_tilde, self.t, self.q)

    @property
    def total_candidates(self) -> int:
        return sum(self.counts.values())

    def counts_at(self, t_tau):
        """返回 (|W_<tτ|, |W_mid|, |W_≥t|)；测得路径按给定阈值重新分类"""
        if self.centreness_values is None:
            return self.counts["W_below_ttau"], self.counts["W_mid"], self.counts["W_above"]
        c = self.centreness_values
        below = int(np.count_nonzero(c < t_tau))
        above = int(np.count_nonzero(c >= max(self.t, t_tau)))
        return below, len(c) - below - above, above

    def tprime_counts_at(self, t_tau, t_prime):
        """返回 (|W_<tτ|, |W_≥t′|, |W_{tτ,t′}|)"""
        below = self.counts_at(t_tau)[0]
        if self.centreness_values is not None:
            c = self.centreness_values
            above = int(np.count_nonzero(c >= max(t_prime, t_tau)))
            return below, above, len(c) - below - above
        if self.tprime_counts is not None:
            return below, self.tprime_counts["W_above_tprime"], self.tprime_counts["W_mid_tprime"]
        return below, self.counts["W_above"], self.counts["W_mid"]

    @classmethod
    def from_dict(cls, data) -> "BoundScenario":
        allowed = set(cls.__dataclass_fields__)
        unknown = set(data) - allowed
        if unknown:
            raise ConfigValidationError(sorted(unknown)[0], "未知字段")
        try:
            return cls(**data)
        except TypeError as e:
            raise ConfigValidationError("scenario", f"缺少必填字段：{e}") from e

    @classmethod
    def from_json(cls, path) -> "BoundScenario":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_dict(json.load(f))

    def to_dict(self):
        data = {name: getattr(self, name) for name in self.__dataclass_fields__}
        if self.centreness_values is not None:
            data["centreness_values"] = [float(v) for v in self.centreness_values]
        return data


def measure_scenario(dataset, config, levels=0, t_prime=None, indices=None) -> BoundScenario:
    """
    由具体数据集测得情景（无噪声 ñ 模式：ñ = |S| + offset）。
    W_<tτ 取中心度严格小于 t_τ 的候选，这些候选一定违反最小簇大小。
    """
    points = dataset.points if indices is None else dataset.points[np.asarray(indices, dtype=int)]
    params = config.score_params
    candidates = generate_candidates(dataset.bounds, params.beta)
    n_tilde = len(points) + count_offset(config.eps_count, config.delta, dataset.n)
    n_used, _ = floor_noisy_count(n_tilde)
    scored = score_candidates(sorted_projections(points), candidates, n_used, params)
    t_tau = centreness_threshold(config.tau_e, n_used, params.t, params.q)

    inner = scored.centreness >= params.t
    e_qi = float(scored.emptiness[inner].max()) if inner.any() else 1.0
    c = scored.centreness
    below = int(np.count_nonzero(c < t_tau))
    above = int(np.count_nonzero(c >= max(params.t, t_tau)))
    scenario = BoundScenario(
        n_tilde=n_used, tau_e=config.tau_e, t=params.t, q=params.q, alpha=params.alpha,
        eps=config.eps_select, delta_f=config.node_sensitivity(n_used),
        e_min=float(scored.emptiness.min()), e_qi=min(e_qi, 1.0),
        counts={"W_below_ttau": below, "W_mid": len(c) - below - above, "W_above": above},
        levels=levels, t_prime=t_prime, centreness_values=c.copy(),
        halve_exponent=config.halve_exponent,
    )
    if params.alpha < 1:
        logger.warning("alpha < 1 时立即停止下界分子中的 e_min 可能高估，测得情景的下界不保证成立")
    logger.debug(f"测得情景：ñ={n_used:.3f}, t_τ={t_tau:.4f}, counts={scenario.counts}")
    return scenario


# ---------------------- 三个下界 ----------------------
def _log_term(count, exponent):
    return math.log(count) + exponent if count > 0 else -math.inf


def _log_total(terms):
    terms = [x for x in terms if x != -math.inf]
    return float(logsumexp(terms)) if terms else -math.inf


def prob_halt_immediately_lower(scenario: BoundScenario, t_tau=None) -> float:
    """
    |W_≤tτ|·e^{e_min·k} / (|W_≤tτ|·e^{(tτ+α)k} + |W_≥t|·e^{(1+α·e_QI)k} + |W_mid|·e^{(t+α)k})，
    k = ε/(2Δ_f)
    """
    tt = scenario.base_t_tau if t_tau is None else t_tau
    below, mid, above = scenario.counts_at(tt)
    if below + mid + above == 0:
        raise BoundDomainError("情景中的候选计数全为 0")
    if below == 0:
        return 0.0
    k, a = scenario.k, scenario.alpha
    numerator = math.log(below) + scenario.e_min * k
    denominator = _log_total([
        _log_term(below, (tt + a) * k),
        _log_term(above, (1 + a * scenario.e_qi) * k),
        _log_term(mid, (scenario.t + a) * k),
    ])
    return math.exp(numerator - denominator)


def prob_central_split_lower(scenario: BoundScenario, t_prime=None, t_tau=None,
                             numerator="printed", strict=True) -> float:
    """
    t′-中心划分被选中的下界。
    numerator="printed" 使用 e^{(tτ + e_min·α)k}；"proof" 使用 e^{(t′ + e_min·α)k}。
    """
    tp = scenario.t_prime if t_prime is None else t_prime
    if tp is None:
        raise BoundDomainError("需要给定 t′")
    tt = scenario.base_t_tau if t_tau is None else t_tau
    if strict and not (tt < tp < scenario.t):
        raise BoundDomainError(f"需要 t_τ < t′ < t，当前 t_τ={tt}, t′={tp}, t={scenario.t}")
    if numerator not in ("printed", "proof"):
        raise ValueError(f"numerator 只能是 'printed' 或 'proof'，当前为 {numerator!r}")
    below, above_p, mid_p = scenario.tprime_counts_at(tt, tp)
    if above_p < 1:
        raise BoundDomainError("不存在 t′-中心划分")
    k, a = scenario.k, scenario.alpha
    lead = tt if numerator == "printed" else tp
    denominator = _log_total([
        _log_term(below, (tt + a) * k),
        _log_term(above_p, (1 + a * scenario.e_qi) * k),
        _log_term(mid_p, (tp + a) * k),
    ])
    return math.exp((lead + scenario.e_min * a) * k - denominator)


def prob_not_halt_lower(scenario: BoundScenario, t_tau=None) -> float:
    """
    1 − |W_≤tτ|·e^{(α+tτ)k} / (|W_≤tτ|·e^{e_min·α·k} + |W_mid|·e^{(e_min·α+tτ)k} + |W_≥t|·e^{(e_min·α+t)k})；
    t_τ > t 时 |W_mid| = 0
    """
    tt = scenario.base_t_tau if t_tau is None else t_tau
    below, mid, above = scenario.counts_at(tt)
    if below == 0:
        return 1.0
    if tt > scenario.t:
        mid = 0
    k, a, e = scenario.k, scenario.alpha, scenario.e_min
    numerator = math.log(below) + (a + tt) * k
    denominator = _log_total([
        _log_term(below, e * a * k),
        _log_term(mid, (e * a + tt) * k),
        _log_term(above, (e * a + scenario.t) * k),
    ])
    return 1.0 - math.exp(min(numerator - denominator, MAX_LOG_RATIO))


# ---------------------- 阈值演化 ----------------------
@dataclass(frozen=True)
class EvolutionFactor:
    value: float
    ratio: float          # t′>t 时为 t′q/t，否则为 (t − 2t′ − 2q)/(2(t−1))
    in_unit_interval: bool


def evolution_factor(t_prime, t, q) -> EvolutionFactor:
    """每层划分后中心度阈值的放大因子 min(·,·)"""
    if t_prime > t:
        ratio = t_prime * q / t
        if ratio >= 1:
            raise BoundDomainError(f"t′q/t = {ratio:.4f} ≥ 1，因子无定义")
        return EvolutionFactor(min(t / (t_prime * q), 1.0 / (1.0 - ratio)), ratio, True)
    if t == 1:
        raise BoundDomainError("t = 1 时 (t − 2t′ − 2q)/(2(t−1)) 无定义")
    ratio = (t - 2 * t_prime - 2 * q) / (2 * (t - 1))
    if ratio == 0 or ratio == 1:
        raise BoundDomainError(f"(t − 2t′ − 2q)/(2(t−1)) = {ratio}，因子无定义")
    inside = 0 < ratio < 1
    if not inside:
        logger.warning(f"因子 (t − 2t′ − 2q)/(2(t−1)) = {ratio:.4f} 不在 (0,1) 内，按原式取 min 计算")
    return EvolutionFactor(min(1.0 / ratio, 1.0 / (1.0 - ratio)), ratio, inside)


def threshold_evolution(t_tau0, level, t_prime=None, t=None, q=None, mode="general",
                        n_tilde=None, tau_e=None) -> float:
    """
    mode="tprime"：t_τ·min(·,·)^i（按 t′ 与 t 的大小关系选分支）；
    mode="general"：t_τ·(ñ/(ñ−τ_e))^i
    """
    if level < 0:
        raise ValueError(f"level 必须 ≥ 0，当前为 {level}")
    if mode == "general":
        if n_tilde is None or tau_e is None or not n_tilde > tau_e:
            raise BoundDomainError("general 模式需要 ñ > τ_e")
        return t_tau0 * (n_tilde / (n_tilde - tau_e)) ** level
    if mode == "tprime":
        return t_tau0 * evolution_factor(t_prime, t, q).value ** level
    raise ValueError(f"未知模式 {mode!r}")


def tprime_evolution(t_prime, level, t, q) -> float:
    """t′ 随划分层数 ℓ 的演化 t′·min(·,·)^ℓ"""
    if level < 0:
        raise ValueError(f"level 必须 ≥ 0，当前为 {level}")
    return t_prime * evolution_factor(t_prime, t, q).value ** level


# ---------------------- 递推停止概率 ----------------------
@dataclass
class HaltBoundReport:
    raw: float
    clamped: float
    mode: str
    product_range: str
    levels: int
    rows: List[Dict] = field(default_factory=list)
    saturated_at: Optional[int] = None
    flags: List[str] = field(default_factory=list)

    @property
    def loose(self) -> bool:
        return self.raw <= 0

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows)


def prob_halt_within(scenario: BoundScenario, j, mode="general", product_range="previous",
                     numerator="printed") -> HaltBoundReport:
    """
    Σ_{i=0..j} P_halt_imm(t_τ^i)·(Π_ℓ P_ℓ)^{2^i}，在对数空间中求值。
    P_ℓ 为 t′-中心划分下界（tprime）或不停止下界（general）。
    product_range="previous" 时 ℓ = 0..i−1（j = 0 退化为立即停止下界），
    "printed" 时 ℓ = 0..j。乘积中的 P_ℓ 截断到 [0,1]，原始值逐层列出。
    """
    if j < 0:
        raise ValueError(f"j 必须 ≥ 0，当前为 {j}")
    if mode not in ("general", "tprime"):
        raise ValueError(f"未知模式 {mode!r}")
    if product_range not in ("previous", "printed"):
        raise ValueError(f"product_range 只能是 'previous' 或 'printed'，当前为 {product_range!r}")
    if mode == "tprime" and scenario.t_prime is None:
        raise BoundDomainError("tprime 模式需要情景给出 t′")

    t0 = scenario.base_t_tau
    flags = []
    factor_levels = j + 1 if product_range == "printed" else j

    def level_threshold(i):
        if mode == "general":
            return threshold_evolution(t0, i, mode="general", n_tilde=scenario.n_tilde, tau_e=scenario.tau_e)
        return threshold_evolution(t0, i, scenario.t_prime, scenario.t, scenario.q, mode="tprime")

    if mode == "tprime":
        factor = evolution_factor(scenario.t_prime, scenario.t, scenario.q)
        if not factor.in_unit_interval:
            flags.append("factor_outside_unit_interval")

    rows, log_factors = [], []
    saturated_at = None
    for ell in range(max(j + 1, factor_levels)):
        tt = level_threshold(ell)
        row = {"level": ell, "t_tau": tt, "t_prime": None, "halt_immediately": None, "factor_raw": None}
        if ell <= j:
            row["halt_immediately"] = prob_halt_immediately_lower(scenario, t_tau=tt)
        if ell < factor_levels and saturated_at is None:
            if mode == "general":
                raw = prob_not_halt_lower(scenario, t_tau=tt)
            else:
                tp = tprime_evolution(scenario.t_prime, ell, scenario.t, scenario.q)
                row["t_prime"] = tp
                if tp >= 1:
                    saturated_at = ell
                    flags.append("saturated")
                    logger.warning(f"t′ 在第 {ell} 层达到 {tp:.4f} ≥ 1，停止求值")
                    raw = None
                else:
                    try:
                        raw = prob_central_split_lower(scenario, t_prime=tp, t_tau=tt,
                                                       numerator=numerator, strict=False)
                    except BoundDomainError:
                        raw = 0.0
                        flags.append(f"no_tprime_central_split_level_{ell}")
            row["factor_raw"] = raw
            if raw is not None:
                used = min(max(raw, 0.0), 1.0)
                log_factors.append(math.log(used) if used > 0 else -math.inf)
        rows.append(row)

    total = 0.0
    for i in range(j + 1):
        needed = i if product_range == "previous" else factor_levels
        if needed > len(log_factors):
            break
        h = rows[i]["halt_immediately"]
        if h <= 0:
            term = 0.0
        else:
            log_prod = sum(log_factors[:needed])
            term = 0.0 if log_prod == -math.inf else math.exp(math.log(h) + (2 ** i) * log_prod)
        rows[i]["term"] = term
        total += term

    clamped = min(max(total, 0.0), 1.0)
    if total > 1:
        flags.append("raw_above_one")
    return HaltBoundReport(raw=total, clamped=clamped, mode=mode, product_range=product_range, levels=j,
                           rows=rows, saturated_at=saturated_at, flags=flags)


# ---------------------- 高斯数据局限性分析 ----------------------
def gaussian_median_shift(i) -> float:
    """z_i = Φ⁻¹((1 + (1 − 2^{−i}))/2)"""
    if int(i) != i or not (0 <= i <= MAX_MEDIAN_SHIFT_LEVEL):
        raise ValueError(f"i 必须是 0..{MAX_MEDIAN_SHIFT_LEVEL} 的整数，当前为 {i}")
    return normal_quantile((1.0 + (1.0 - 2.0 ** (-i))) / 2.0)


def central_emptiness(i, beta_over_sigma=DEFAULT_BETA_OVER_SIGMA, z=None) -> float:
    """e^c_i = 1 − 2^i·(Φ(z_i + β/(2σ)) − Φ(z_i − β/(2σ)))"""
    if i < 0:
        raise ValueError(f"i 必须 ≥ 0，当前为 {i}")
    half = beta_over_sigma / 2.0
    zi = gaussian_median_shift(i) if z is None else z
    return 1.0 - 2.0 ** i * (normal_cdf(zi + half) - normal_cdf(zi - half))


def gaussian_halt_threshold(i, alpha, m, e_c) -> float:
    """t_τ 需超过 (1 + (e^c_i − 1)α + m)/2^i 才能使停止划分胜过中心划分；允许为负"""
    return (1.0 + (e_c - 1.0) * alpha + m) / 2.0 ** i


def median_shift_chain(max_level, z_source="published") -> List[float]:
    """z_0..z_max；"published" 使用文献表值（超出表长的层用精确值）"""
    if z_source not in ("published", "exact"):
        raise ValueError(f"z_source 只能是 'published' 或 'exact'，当前为 {z_source!r}")
    chain = []
    for i in range(max_level + 1):
        if z_source == "published" and i < len(PUBLISHED_Z_TABLE):
            chain.append(PUBLISHED_Z_TABLE[i])
        else:
            chain.append(gaussian_median_shift(i))
    return chain


def gaussian_limitation_table(max_level=6, beta_over_sigma=DEFAULT_BETA_OVER_SIGMA) -> pd.DataFrame:
    rows = []
    published_chain = median_shift_chain(max_level, "published")
    for i in range(max_level + 1):
        z_exact = gaussian_median_shift(i)
        rows.append({
            "level": i,
            "z_exact": z_exact,
            "z_published": PUBLISHED_Z_TABLE[i] if i < len(PUBLISHED_Z_TABLE) else float("nan"),
            "emptiness_exact": central_emptiness(i, beta_over_sigma, z_exact),
            "emptiness_published_chain": central_emptiness(i, beta_over_sigma, published_chain[i]),
            "emptiness_published": PUBLISHED_EMPTINESS_TABLE[i] if i < len(PUBLISHED_EMPTINESS_TABLE) else float("nan"),
        })
    return pd.DataFrame(rows)


def reproduce_fig4(alphas=DEFAULT_FIG4_ALPHAS, m=0.0, max_level=6,
                   beta_over_sigma=DEFAULT_BETA_OVER_SIGMA, z_source="published") -> pd.DataFrame:
    """各 α 下中心度阈值下界随递归层数的曲线，列 (level, alpha, value)"""
    chain = median_shift_chain(max_level, z_source)
    emptiness_series = [central_emptiness(i, beta_over_sigma, chain[i]) for i in range(max_level + 1)]
    rows = [
        {"level": i, "alpha": float(alpha), "value": gaussian_halt_threshold(i, alpha, m, emptiness_series[i])}
        for alpha in alphas
        for i in range(max_level + 1)
    ]
    return pd.DataFrame(rows, columns=["level", "alpha", "value"])
