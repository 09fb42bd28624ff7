"""
代码功能：
蒙特卡洛验证框架：按试验计划重复运行 DPM（或其根节点一步），
统计目标事件的经验频率及 Wilson 置信区间，与解析下界对照；
另提供小实例上的精确停止概率（无噪声 ñ 模式下对候选选择全枚举）。

随机性：试验按块执行，每块的生成器由 (主种子, 块号) 派生，
逐次运行 DPM 的目标则由 (主种子, 试验号) 派生种子，汇总与执行顺序无关。
"""

import itertools
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from .datagen import (
    Dataset,
    GaussianMixtureSpec,
    derive_rng,
    derive_seed,
    generate_gaussian_mixture,
    generate_uniform,
    load_csv,
)
from .dp_primitives import (
    count_offset,
    divergence_tail_probability,
    em_utility_bound,
    noisy_count,
    reported_divergence_tail,
)
from .dpm_engine import DpmConfig, HaltReason, node_selection_pmf, run_dpm
from .exceptions import BoundDomainError, ConfigValidationError, InstanceTooLargeError, NoAdmissibleSplitError
from .halting_analysis import (
    measure_scenario,
    normal_quantile,
    prob_central_split_lower,
    prob_halt_immediately_lower,
    prob_halt_within,
    prob_not_halt_lower,
)
from .splitting import generate_candidates, sorted_projections

logger = logging.getLogger(__name__)

# ---------------------- 配置区 ----------------------
DEFAULT_TRIALS = 10_000
DEFAULT_CHUNK_SIZE = 1_000
REPORT_CONFIDENCE = 0.95
PASS_CONFIDENCE = 0.99
EM_UTILITY_SLACK = 0.005
MAX_ORACLE_CANDIDATES = 12
MAX_ORACLE_LEVEL = 3
# 派生种子的命名空间
STREAM_CHUNK = 11
STREAM_TRIAL = 12
SWEEP_KEYS = ("alpha", "t", "q", "beta", "tau_e", "tau_s", "eps_count", "eps_select", "eps_avg", "delta")


# ---------------------- 置信区间 ----------------------
def wilson_interval(successes, trials, confidence=REPORT_CONFIDENCE) -> Tuple[float, float]:
    if trials <= 0:
        raise ValueError(f"试验次数必须为正，当前为 {trials}")
    if not (0 <= successes <= trials):
        raise ValueError(f"成功次数 {successes} 不在 [0, {trials}] 内")
    if not (0.0 < confidence < 1.0):
        raise ValueError(f"置信水平必须在 (0, 1) 内，当前为 {confidence}")
    z = normal_quantile(1.0 - (1.0 - confidence) / 2.0)
    p_hat = successes / trials
    denom = 1.0 + z * z / trials
    center = (p_hat + z * z / (2 * trials)) / denom
    margin = z * math.sqrt(p_hat * (1 - p_hat) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, center - margin), min(1.0, center + margin)


# ---------------------- 试验计划 ----------------------
class TargetKind(str, Enum):
    IMMEDIATE_HALT = "ImmediateHalt"
    NOT_HALT = "NotHalt"
    CENTRAL_SPLIT = "CentralSplit"
    HALT_WITHIN = "HaltWithin"
    EM_UTILITY = "EmUtility"
    NOISY_COUNT_TAIL = "NoisyCountTail"


@dataclass(frozen=True)
class Target:
    kind: TargetKind
    j: int = 0
    t_prime: Optional[float] = None
    kappa: float = 1.0
    omega: float = 0.0
    mode: str = "general"

    def __post_init__(self):
        object.__setattr__(self, "kind", TargetKind(self.kind))
        if int(self.j) != self.j or self.j < 0:
            raise ConfigValidationError("j", f"j 必须是非负整数，当前为 {self.j}")
        if self.kind is TargetKind.EM_UTILITY and not self.kappa > 0:
            raise ConfigValidationError("kappa", f"kappa 必须 > 0，当前为 {self.kappa}")
        if self.omega < 0:
            raise ConfigValidationError("omega", f"omega 不能为负，当前为 {self.omega}")
        if self.mode not in ("general", "tprime"):
            raise ConfigValidationError("mode", f"mode 只能是 general 或 tprime，当前为 {self.mode!r}")

    @classmethod
    def from_dict(cls, data) -> "Target":
        if isinstance(data, str):
            data = {"kind": data}
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigValidationError(sorted(unknown)[0], "未知字段")
        if data.get("kind") not in {k.value for k in TargetKind}:
            raise ConfigValidationError("target", f"未知目标类型：{data.get('kind')!r}")
        return cls(**data)

    def label(self) -> str:
        if self.kind is TargetKind.HALT_WITHIN:
            return f"HaltWithin(j={self.j},{self.mode})"
        if self.kind is TargetKind.CENTRAL_SPLIT:
            return f"CentralSplit(t'={self.t_prime})"
        if self.kind is TargetKind.EM_UTILITY:
            return f"EmUtility(kappa={self.kappa},omega={self.omega})"
        return self.kind.value

    def to_dict(self):
        return {"kind": self.kind.value, "j": self.j, "t_prime": self.t_prime,
                "kappa": self.kappa, "omega": self.omega, "mode": self.mode}


def build_dataset(spec: Dict[str, Any]) -> Dataset:
    """数据集描述：{"kind": "uniform"|"gaussian"|"csv", ...}"""
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind == "uniform":
        return generate_uniform(spec.get("dim", 1), spec.get("n", 1000), spec.get("bounds", [0.0, 1.0]),
                                spec.get("seed", 0))
    if kind == "gaussian":
        return generate_gaussian_mixture(GaussianMixtureSpec.from_dict(spec))
    if kind == "csv":
        if "path" not in spec:
            raise ConfigValidationError("path", "csv 数据集需要 path")
        return load_csv(spec["path"], spec.get("bounds"))
    raise ConfigValidationError("dataset.kind", f"未知数据集类型 {kind!r}")


@dataclass
class TrialPlan:
    dataset: Dict[str, Any]
    config: DpmConfig
    target: Target
    trials: int = DEFAULT_TRIALS
    master_seed: int = 0
    name: str = ""
    slack: float = 0.0
    chunk_size: int = DEFAULT_CHUNK_SIZE
    max_workers: int = 1
    grid_point: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if int(self.trials) != self.trials or self.trials < 1:
            raise ConfigValidationError("trials", f"trials 必须 ≥ 1，当前为 {self.trials}")
        if int(self.chunk_size) != self.chunk_size or self.chunk_size < 1:
            raise ConfigValidationError("chunk_size", f"chunk_size 必须 ≥ 1，当前为 {self.chunk_size}")
        if self.slack < 0:
            raise ConfigValidationError("slack", f"slack 不能为负，当前为 {self.slack}")
        self.trials, self.chunk_size = int(self.trials), int(self.chunk_size)

    @classmethod
    def from_dict(cls, data) -> "TrialPlan":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigValidationError(sorted(unknown)[0], "未知字段")
        for key in ("dataset", "config", "target"):
            if key not in data:
                raise ConfigValidationError(key, "缺少必填字段")
        rest = {k: v for k, v in data.items() if k not in ("config", "target")}
        return cls(config=DpmConfig.from_dict(data["config"]), target=Target.from_dict(data["target"]), **rest)

    def to_dict(self):
        return {
            "name": self.name,
            "dataset": self.dataset,
            "config": self.config.to_dict(),
            "target": self.target.to_dict(),
            "trials": self.trials,
            "master_seed": self.master_seed,
            "slack": self.slack,
            "chunk_size": self.chunk_size,
            "max_workers": self.max_workers,
        }


def expand_grid(template: TrialPlan, grid: Dict[str, Sequence]) -> List[TrialPlan]:
    """笛卡尔积展开；任一维为空或网格为空时返回空列表"""
    unknown = set(grid) - set(SWEEP_KEYS)
    if unknown:
        raise ConfigValidationError(sorted(unknown)[0], "不支持扫描的字段")
    if not grid or any(len(values) == 0 for values in grid.values()):
        return []
    keys = list(grid)
    plans = []
    for combo in itertools.product(*(grid[k] for k in keys)):
        point = dict(zip(keys, combo))
        plans.append(TrialPlan(
            dataset=template.dataset, config=template.config.with_overrides(**point), target=template.target,
            trials=template.trials, master_seed=template.master_seed, name=template.name, slack=template.slack,
            chunk_size=template.chunk_size, max_workers=template.max_workers, grid_point=point,
        ))
    return plans


def load_plans(path) -> List[TrialPlan]:
    """接受单个计划、计划列表，或 {"template": ..., "grid": ...} 形式的扫描"""
    with open(path, "r", encoding="utf-8") as f:
        data = json.load(f)
    items = data if isinstance(data, list) else [data]
    plans = []
    for item in items:
        if "template" in item:
            plans.extend(expand_grid(TrialPlan.from_dict(item["template"]), item.get("grid", {})))
        else:
            plans.append(TrialPlan.from_dict(item))
    return plans


# ---------------------- 报告 ----------------------
@dataclass
class BoundReport:
    plan_name: str
    target: str
    successes: int
    trials: int
    empirical: float
    ci95: Tuple[float, float]
    ci99: Tuple[float, float]
    bound: Optional[float]
    holds: bool
    slack: float
    noise_mode: str
    master_seed: int
    config: Dict[str, Any] = field(default_factory=dict)
    flags: List[str] = field(default_factory=list)
    extra: Dict[str, Any] = field(default_factory=dict)

    @property
    def loose(self) -> bool:
        return self.bound is not None and self.bound <= 0

    def to_dict(self):
        row = {
            "plan": self.plan_name,
            "target": self.target,
            "successes": self.successes,
            "trials": self.trials,
            "empirical": self.empirical,
            "ci95_lo": self.ci95[0],
            "ci95_hi": self.ci95[1],
            "ci99_lo": self.ci99[0],
            "ci99_hi": self.ci99[1],
            "bound": self.bound,
            "holds": self.holds,
            "loose": self.loose,
            "slack": self.slack,
            "noise_mode": self.noise_mode,
            "master_seed": self.master_seed,
            "flags": ";".join(self.flags),
            "config": json.dumps(self.config, sort_keys=True),
        }
        row.update(self.extra)
        return row


# ---------------------- 目标事件 ----------------------
@dataclass
class _RootContext:
    """根节点一步试验所需的预计算量"""
    dataset: Dataset
    config: DpmConfig
    candidates: list
    projections: list
    offset: float
    pmf: np.ndarray
    scores: np.ndarray
    centreness: np.ndarray
    halts: np.ndarray


def _children_halt(dataset, config, candidate, raw_root, rng=None) -> bool:
    left = int(np.count_nonzero(dataset.points[:, candidate.dimension] < candidate.position))
    counts = (left, raw_root - left)
    if rng is None or not config.count_noise:
        return min(counts) < config.tau_e
    return any(noisy_count(c, config.eps_count, config.delta, dataset.n, rng).unshifted < config.tau_e
               for c in counts)


def _root_context(dataset: Dataset, config: DpmConfig) -> _RootContext:
    candidates = generate_candidates(dataset.bounds, config.score_params.beta)
    projections = sorted_projections(dataset.points)
    offset = count_offset(config.eps_count, config.delta, dataset.n)
    pmf, scored, _, _ = node_selection_pmf(projections, candidates, dataset.n + offset, config)
    halts = np.array([_children_halt(dataset, config, c, dataset.n) for c in candidates])
    return _RootContext(dataset, config, candidates, projections, offset, pmf, scored.scores,
                        scored.centreness, halts)


def _root_event(kind: TargetKind, ctx: _RootContext, t_prime, choice, halted) -> bool:
    if kind is TargetKind.IMMEDIATE_HALT:
        return halted
    if kind is TargetKind.NOT_HALT:
        return not halted
    return ctx.centreness[choice] >= t_prime


def _root_chunk(plan: TrialPlan, ctx: _RootContext, t_prime, rng, size) -> int:
    kind = plan.target.kind
    if not plan.config.count_noise:
        choices = rng.choice(ctx.pmf.size, p=ctx.pmf, size=size)
        if kind is TargetKind.IMMEDIATE_HALT:
            return int(ctx.halts[choices].sum())
        if kind is TargetKind.NOT_HALT:
            return int((~ctx.halts[choices]).sum())
        return int((ctx.centreness[choices] >= t_prime).sum())

    # 带噪声：每次试验重新抽取根节点 ñ，再重新评分
    cfg, data = plan.config, ctx.dataset
    successes = 0
    for _ in range(size):
        root = noisy_count(data.n, cfg.eps_count, cfg.delta, data.n, rng)
        pmf, scored, _, _ = node_selection_pmf(ctx.projections, ctx.candidates, root.value, cfg)
        choice = int(rng.choice(pmf.size, p=pmf))
        halted = _children_halt(data, cfg, ctx.candidates[choice], data.n, rng)
        if kind is TargetKind.CENTRAL_SPLIT:
            successes += int(scored.centreness[choice] >= t_prime)
        else:
            successes += int(_root_event(kind, ctx, t_prime, choice, halted))
    return successes


def _halt_within_event(result, j) -> bool:
    leaves = result.tree.leaves()
    return all(leaf.halt_reason is HaltReason.MIN_SIZE_VIOLATED and leaf.depth <= j for leaf in leaves)


def _halt_within_chunk(plan: TrialPlan, dataset: Dataset, start, size) -> int:
    cfg = plan.config.with_overrides(tau_s=plan.target.j + 1)
    successes = 0
    for trial in range(start, start + size):
        result = run_dpm(dataset, cfg, derive_seed(plan.master_seed, STREAM_TRIAL, trial))
        successes += int(_halt_within_event(result, plan.target.j))
    return successes


def _em_utility_setup(plan: TrialPlan, dataset: Dataset):
    cfg = plan.config
    if not cfg.halve_exponent:
        logger.warning("halve_exponent=False 时 EM 效用界不适用")
    projections = sorted_projections(dataset.points)
    candidates = generate_candidates(dataset.bounds, cfg.score_params.beta)
    offset = count_offset(cfg.eps_count, cfg.delta, dataset.n)
    pmf, scored, n_used, _ = node_selection_pmf(projections, candidates, dataset.n + offset, cfg)
    scores = scored.scores
    opt = float(scores.max())
    n_opt = int(np.count_nonzero(scores >= opt - plan.target.omega))
    threshold = em_utility_bound(scores.size, n_opt, plan.target.omega, plan.target.kappa,
                                 cfg.eps_select, cfg.node_sensitivity(n_used), opt)
    return pmf, scores <= threshold, {"opt": opt, "n_optimal": n_opt, "threshold": threshold}


# ---------------------- 解析界 ----------------------
def _analytic_bound(plan: TrialPlan, dataset: Dataset):
    """返回 (界, t′, 附加字段, 标记)；界无定义时为 None"""
    target, cfg = plan.target, plan.config
    flags, extra = [], {}
    try:
        if target.kind is TargetKind.HALT_WITHIN:
            scenario = measure_scenario(dataset, cfg, levels=target.j, t_prime=target.t_prime)
            if target.mode == "tprime" and scenario.t_prime is None:
                scenario.t_prime = (scenario.base_t_tau + scenario.t) / 2.0
            report = prob_halt_within(scenario, target.j, mode=target.mode)
            flags.extend(report.flags)
            extra["bound_raw"] = report.raw
            return report.clamped if report.raw > 0 else report.raw, scenario.t_prime, extra, flags
        scenario = measure_scenario(dataset, cfg, t_prime=target.t_prime)
        if target.kind is TargetKind.IMMEDIATE_HALT:
            return prob_halt_immediately_lower(scenario), None, extra, flags
        if target.kind is TargetKind.NOT_HALT:
            return prob_not_halt_lower(scenario), None, extra, flags
        t_prime = target.t_prime
        if t_prime is None:
            t_prime = (scenario.base_t_tau + scenario.t) / 2.0
            flags.append("t_prime_midpoint")
        extra["t_prime"] = t_prime
        return prob_central_split_lower(scenario, t_prime=t_prime), t_prime, extra, flags
    except (BoundDomainError, NoAdmissibleSplitError) as e:
        logger.warning(f"{target.label()} 的解析界无定义：{e}")
        return None, target.t_prime, extra, flags + ["bound_undefined"]


# ---------------------- 执行 ----------------------
def _chunks(trials, chunk_size):
    starts = list(range(0, trials, chunk_size))
    return [(i, s, min(chunk_size, trials - s)) for i, s in enumerate(starts)]


def _run_chunks(plan: TrialPlan, work, progress) -> int:
    chunks = _chunks(plan.trials, plan.chunk_size)
    total = 0
    with tqdm(total=plan.trials, desc=plan.target.label(), disable=not progress) as bar:
        if plan.max_workers > 1 and len(chunks) > 1:
            with ThreadPoolExecutor(max_workers=plan.max_workers) as executor:
                futures = {executor.submit(work, *chunk): chunk for chunk in chunks}
                for future in as_completed(futures):
                    total += future.result()
                    bar.update(futures[future][2])
        else:
            for chunk in chunks:
                total += work(*chunk)
                bar.update(chunk[2])
    return total


def run_plan(plan: TrialPlan, dataset: Optional[Dataset] = None, progress=False) -> BoundReport:
    dataset = build_dataset(plan.dataset) if dataset is None else dataset
    target, cfg = plan.target, plan.config
    flags, extra = [], {}
    noise_mode = "laplace" if cfg.count_noise else "noise-free"

    if target.kind is TargetKind.NOISY_COUNT_TAIL:
        offset = count_offset(cfg.eps_count, cfg.delta, dataset.n)
        bound = divergence_tail_probability(cfg.eps_count, cfg.delta, dataset.n)
        extra.update({"offset": offset, "reported_value": reported_divergence_tail(dataset.n)})

        def work(index, start, size):
            rng = derive_rng(plan.master_seed, STREAM_CHUNK, index)
            return int(np.count_nonzero(rng.laplace(0.0, 1.0 / cfg.eps_count, size=size) > offset))

    elif target.kind is TargetKind.EM_UTILITY:
        pmf, shortfall, info = _em_utility_setup(plan, dataset)
        bound = math.exp(-target.kappa)
        extra.update(info)

        def work(index, start, size):
            rng = derive_rng(plan.master_seed, STREAM_CHUNK, index)
            return int(shortfall[rng.choice(pmf.size, p=pmf, size=size)].sum())

    elif target.kind is TargetKind.HALT_WITHIN:
        bound, _, info, bound_flags = _analytic_bound(plan, dataset)
        extra.update(info)
        flags.extend(bound_flags)

        def work(index, start, size):
            return _halt_within_chunk(plan, dataset, start, size)

    else:
        bound, t_prime, info, bound_flags = _analytic_bound(plan, dataset)
        extra.update(info)
        flags.extend(bound_flags)
        if target.kind is TargetKind.CENTRAL_SPLIT and t_prime is None:
            raise ConfigValidationError("t_prime", "CentralSplit 目标需要 t′")
        ctx = _root_context(dataset, cfg)

        def work(index, start, size):
            rng = derive_rng(plan.master_seed, STREAM_CHUNK, index)
            return _root_chunk(plan, ctx, t_prime, rng, size)

    successes = _run_chunks(plan, work, progress)
    empirical = successes / plan.trials
    ci95 = wilson_interval(successes, plan.trials, REPORT_CONFIDENCE)
    ci99 = wilson_interval(successes, plan.trials, PASS_CONFIDENCE)

    if bound is None:
        holds = True
    elif target.kind is TargetKind.EM_UTILITY:
        holds = empirical <= bound + EM_UTILITY_SLACK
    elif target.kind is TargetKind.NOISY_COUNT_TAIL:
        holds = ci99[0] <= bound <= ci99[1]
    else:
        holds = bound <= ci99[1] + plan.slack

    report = BoundReport(plan_name=plan.name, target=target.label(), successes=successes, trials=plan.trials,
                         empirical=empirical, ci95=ci95, ci99=ci99, bound=bound, holds=bool(holds),
                         slack=plan.slack, noise_mode=noise_mode, master_seed=plan.master_seed,
                         config=cfg.to_dict(), flags=flags, extra=extra)
    if report.loose:
        report.flags.append("loose")
    level = logging.INFO if report.holds else logging.WARNING
    logger.log(level, f"[{plan.name or '-'}] {report.target}: 经验 {empirical:.5f} "
                      f"(99% CI {ci99[0]:.5f}–{ci99[1]:.5f})，界 {bound}，{'成立' if report.holds else '不成立'}")
    return report


def run_plans(plans: Sequence[TrialPlan], progress=False) -> pd.DataFrame:
    rows = []
    for plan in plans:
        row = run_plan(plan, progress=progress).to_dict()
        row.update({f"grid_{k}": v for k, v in plan.grid_point.items()})
        rows.append(row)
    return pd.DataFrame(rows)


def sweep(template: TrialPlan, grid: Dict[str, Sequence], progress=False) -> pd.DataFrame:
    return run_plans(expand_grid(template, grid), progress=progress)


# ---------------------- 精确停止概率 ----------------------
def exact_halt_probability(dataset: Dataset, config: DpmConfig, max_level) -> float:
    """
    无噪声 ñ 模式（ñ = |S| + offset）下 DPM 在深度 ≤ max_level 内全部因最小簇大小停止的精确概率。
    对每个节点枚举全部候选及其 EM 概率；到达 max_level 仍不停止的分支贡献 0。
    """
    if int(max_level) != max_level or not (0 <= max_level <= MAX_ORACLE_LEVEL):
        raise InstanceTooLargeError(f"max_level 必须在 0..{MAX_ORACLE_LEVEL} 内，当前为 {max_level}")
    candidates = generate_candidates(dataset.bounds, config.score_params.beta)
    if len(candidates) > MAX_ORACLE_CANDIDATES:
        raise InstanceTooLargeError(f"候选数 {len(candidates)} 超过 {MAX_ORACLE_CANDIDATES}，无法枚举")
    cfg = config if not config.count_noise else config.with_overrides(count_noise=False)
    offset = count_offset(cfg.eps_count, cfg.delta, dataset.n)
    memo: Dict[Tuple[bytes, int], float] = {}

    def halt(indices: np.ndarray, depth: int) -> float:
        key = (indices.tobytes(), depth)
        if key in memo:
            return memo[key]
        subset = dataset.points[indices]
        pmf, _, _, _ = node_selection_pmf(sorted_projections(subset), candidates, len(indices) + offset, cfg)
        total = 0.0
        for cand, p in zip(candidates, pmf):
            if p == 0:
                continue
            goes_left = subset[:, cand.dimension] < cand.position
            left, right = indices[goes_left], indices[~goes_left]
            if min(len(left), len(right)) < cfg.tau_e:
                total += p
            elif depth < max_level:
                total += p * halt(left, depth + 1) * halt(right, depth + 1)
        memo[key] = total
        return total

    return float(halt(np.arange(dataset.n), 0))


# ---------------------- 预置套件 ----------------------
def _suite_datasets(seed) -> Dict[str, Tuple[Dict[str, Any], Dict[str, Any]]]:
    """名称 → (数据集描述, 配置覆盖)"""
    return {
        "uniform": ({"kind": "uniform", "dim": 2, "n": 400, "bounds": [0.0, 1.0], "seed": seed},
                    {"beta": 0.05}),
        "one_gaussian": ({"kind": "gaussian", "seed": seed,
                          "components": [{"center": [0.0, 0.0], "sigma": 1.0, "count": 400}]},
                         {"beta": 0.5}),
        "two_gaussians": ({"kind": "gaussian", "seed": seed,
                           "components": [{"center": [0.0, 0.0], "sigma": 1.0, "count": 200},
                                          {"center": [0.0, 10.0], "sigma": 1.0, "count": 200}]},
                          {"beta": 0.5}),
    }


SUITE_BASE_CONFIG = {
    "alpha": 1.0, "t": 0.5, "q": 0.2, "beta": 0.5,
    "tau_e": 60, "tau_s": 3, "eps_count": 1.0, "eps_select": 1.0, "eps_avg": 1.0,
    "delta": 1e-3, "clip_bound": 20.0, "count_noise": False,
}


def soundness_suite(trials=2_000, seed=0, halt_within_trials=None, progress=False) -> pd.DataFrame:
    """三个数据集 × 三个引理下界与两个按层停止下界"""
    halt_within_trials = trials if halt_within_trials is None else halt_within_trials
    targets = [
        (Target(TargetKind.IMMEDIATE_HALT), trials),
        (Target(TargetKind.NOT_HALT), trials),
        (Target(TargetKind.CENTRAL_SPLIT), trials),
        (Target(TargetKind.HALT_WITHIN, j=1, mode="general"), halt_within_trials),
        (Target(TargetKind.HALT_WITHIN, j=1, mode="tprime"), halt_within_trials),
    ]
    plans = []
    for name, (spec, overrides) in _suite_datasets(seed).items():
        cfg = DpmConfig.from_dict({**SUITE_BASE_CONFIG, **overrides})
        for target, n_trials in targets:
            plans.append(TrialPlan(dataset=spec, config=cfg, target=target, trials=n_trials,
                                   master_seed=seed, name=name))
    return run_plans(plans, progress=progress)


def default_oracle_instances(count=20, seed=0) -> List[Tuple[Dataset, DpmConfig, int]]:
    """一维小实例：两团点、10 个候选，ε_select 与 τ_e 轮换"""
    instances = []
    eps_values = (0.5, 1.0, 2.0, 4.0)
    tau_values = (3, 5, 8)
    for i in range(count):
        spec = GaussianMixtureSpec.from_dict({
            "seed": seed + i,
            "components": [{"center": [0.25], "sigma": 0.08, "count": 16},
                           {"center": [0.75], "sigma": 0.08, "count": 16}],
        })
        data = generate_gaussian_mixture(spec)
        data = Dataset(np.clip(data.points, 0.0, 1.0), [0.0, 1.0], data.labels)
        cfg = DpmConfig.from_dict({
            "alpha": 1.0, "t": 0.5, "q": 0.2, "beta": 0.1,
            "tau_e": tau_values[i % len(tau_values)], "tau_s": 3,
            "eps_count": 1.0, "eps_select": eps_values[i % len(eps_values)], "eps_avg": 1.0,
            "delta": 0.5, "clip_bound": 1.0, "count_noise": False,
        })
        instances.append((data, cfg, 1 + i % 2))
    return instances


def oracle_agreement(instances=None, trials=4_000, seed=0, confidence=0.999, progress=False) -> pd.DataFrame:
    """精确枚举与同一实例上无噪声模式蒙特卡洛频率的对照"""
    instances = default_oracle_instances() if instances is None else instances
    rows = []
    for idx, (data, cfg, level) in enumerate(tqdm(instances, desc="精确对照", disable=not progress)):
        cfg = cfg.with_overrides(count_noise=False)
        exact = exact_halt_probability(data, cfg, level)
        plan = TrialPlan(dataset={"kind": "inline"}, config=cfg, target=Target(TargetKind.HALT_WITHIN, j=level),
                         trials=trials, master_seed=derive_seed(seed, idx), name=f"instance_{idx}")
        successes = _run_chunks(plan, lambda index, start, size: _halt_within_chunk(plan, data, start, size), False)
        lo, hi = wilson_interval(successes, trials, confidence)
        rows.append({
            "instance": idx,
            "max_level": level,
            "exact": exact,
            "empirical": successes / trials,
            "ci_lo": lo,
            "ci_hi": hi,
            "agrees": bool(lo <= exact <= hi),
            "noise_mode": "noise-free",
        })
    return pd.DataFrame(rows)
