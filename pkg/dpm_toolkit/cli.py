"""
代码功能：
命令行入口。子命令：
  generate      生成合成数据集（uniform / gaussian / counterexample）→ CSV
  cluster       对 CSV 运行 DPM，输出 result.json 与 assignments.csv（--replay 按已有树重放）
  reproduce     复现 fig4 / fig-silhouette / gaussian-table / zi-table，输出 CSV 与 CHECK 文件
  bounds        计算停止概率下界（情景 JSON 或由数据集测得）
  simulate      执行蒙特卡洛试验计划或预置套件
  separability  在数据集上搜索 (ξ,ρ)-分隔证书
每次运行在输出目录写 manifest.json（逐文件 sha256）。
退出码：0 成功，1 运行时错误，2 配置/数据校验失败。
"""

import argparse
import hashlib
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from datetime import datetime
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from .datagen import (
    counterexample_mixture_spec,
    generate_gaussian_mixture,
    generate_uniform,
    load_csv,
    load_mixture_spec,
    save_csv,
)
from .dpm_engine import DpmConfig, load_tree, replay, run_dpm, save_result
from .exceptions import BoundDomainError, ConfigValidationError, DatasetFormatError, NoAdmissibleSplitError
from .halting_analysis import (
    BoundScenario,
    gaussian_limitation_table,
    measure_scenario,
    prob_central_split_lower,
    prob_halt_immediately_lower,
    prob_halt_within,
    prob_not_halt_lower,
    reproduce_fig4,
)
from .separability import find_certificates
from .silhouette_analysis import calibrate_counterexample, counterexample_experiment, trend_correlations
from .simulate import load_plans, oracle_agreement, run_plans, soundness_suite

logger = logging.getLogger(__name__)

# ---------------------- 配置区 ----------------------
LOG_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"
CSV_ENCODING = "utf-8-sig"
TABLE_TOLERANCE = 5e-3
FIG4_CHECK_VALUE = 0.06227       # α = 1、i = 3 的阈值
FIG4_CHECK_TOLERANCE = 1e-4
FIG4_HIGH_ALPHA_LIMIT = 0.05
SILHOUETTE_BEFORE = 0.72
SILHOUETTE_AFTER = 0.70
SILHOUETTE_TOLERANCE = 0.03
SILHOUETTE_NEGATIVE_FRACTION = 0.9
FIGURES = ("fig4", "fig-silhouette", "gaussian-table", "zi-table")
CHECK_COLUMNS = ["item", "reported_value", "computed_value", "tolerance", "passed", "note"]


# ---------------------- 日志 ----------------------
def setup_logging(out_dir=None, verbose=False):
    handlers = [logging.StreamHandler()]
    if out_dir:
        log_dir = os.path.join(out_dir, "logs")
        os.makedirs(log_dir, exist_ok=True)
        handlers.append(logging.FileHandler(
            os.path.join(log_dir, f"dpm_toolkit_{datetime.now().strftime('%Y%m%d_%H%M%S')}.log"),
            encoding="utf-8"))
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO, format=LOG_FORMAT,
                        handlers=handlers, force=True)


# ---------------------- 运行清单 ----------------------
def file_sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


@dataclass
class RunManifest:
    subcommand: str
    output_dir: str
    config_path: Optional[str] = None
    seed: Optional[int] = None
    artifacts: Dict[str, str] = field(default_factory=dict)

    def add(self, path):
        self.artifacts[os.path.basename(path)] = file_sha256(path)
        return path

    def write(self):
        path = os.path.join(self.output_dir, "manifest.json")
        data = {
            "subcommand": self.subcommand,
            "config_path": self.config_path,
            "seed": self.seed,
            "output_dir": self.output_dir,
            "artifacts": dict(sorted(self.artifacts.items())),
        }
        with open(path, "w", encoding="utf-8") as f:
            json.dump(data, f, ensure_ascii=False, indent=2)
        logger.info(f"运行清单已保存至：{path}（{len(self.artifacts)} 个文件）")
        return path


def _write_csv(df: pd.DataFrame, manifest: RunManifest, name) -> str:
    path = os.path.join(manifest.output_dir, name)
    df.to_csv(path, index=False, encoding=CSV_ENCODING)
    return manifest.add(path)


def _write_json(data, manifest: RunManifest, name) -> str:
    path = os.path.join(manifest.output_dir, name)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, ensure_ascii=False, indent=2)
    return manifest.add(path)


def _check_row(item, reported_value, computed_value, tolerance, passed, note=""):
    return {"item": item, "reported_value": reported_value, "computed_value": computed_value,
            "tolerance": tolerance, "passed": bool(passed), "note": note}


def _write_check(rows: List[dict], manifest: RunManifest, figure) -> pd.DataFrame:
    df = pd.DataFrame(rows, columns=CHECK_COLUMNS)
    _write_csv(df, manifest, f"CHECK_{figure}.csv")
    failed = int((~df["passed"]).sum())
    logger.info(f"{figure}：{len(df) - failed}/{len(df)} 项核对通过")
    return df


# ---------------------- generate ----------------------
def cmd_generate(args) -> int:
    manifest = RunManifest("generate", args.out, config_path=args.spec, seed=args.seed)
    if args.kind == "uniform":
        dataset = generate_uniform(args.dim, args.n, [args.low, args.high], args.seed or 0)
    elif args.kind == "gaussian":
        if not args.spec:
            raise ConfigValidationError("spec", "gaussian 需要 --spec 混合分布 JSON")
        spec = load_mixture_spec(args.spec)
        if args.seed is not None:
            spec.seed = args.seed
        dataset = generate_gaussian_mixture(spec)
    else:
        spec = counterexample_mixture_spec(args.d_c_s0, args.d_split, sigma=args.sigma,
                                           n_per_cluster=args.n_per_cluster, seed=args.seed or 0)
        dataset = generate_gaussian_mixture(spec)
    path = os.path.join(args.out, args.name)
    save_csv(dataset, path)
    manifest.add(path)
    manifest.write()
    return 0


# ---------------------- cluster ----------------------
def cmd_cluster(args) -> int:
    manifest = RunManifest("cluster", args.out, config_path=args.config, seed=args.seed)
    dataset = load_csv(args.dataset)
    if args.replay:
        result = replay(load_tree(args.replay), dataset)
    else:
        if not args.config:
            raise ConfigValidationError("config", "需要配置 JSON（或使用 --replay）")
        config = DpmConfig.from_json(args.config)
        result = run_dpm(dataset, config, args.seed)
        path = os.path.join(args.out, "result.json")
        save_result(result, path)
        manifest.add(path)

    labels = result.assignment
    reasons = {}
    for k, reason in enumerate(result.halt_reasons):
        reasons[k] = reason.value if reason else ""
    assignments = pd.DataFrame({
        "index": np.arange(len(labels)),
        "cluster": labels,
        "halt_reason": [reasons.get(k, "") for k in labels],
    })
    _write_csv(assignments, manifest, "assignments.csv")
    manifest.write()
    print(f"-> 共 {len(result.clusters)} 个簇，隐私预算 ε={result.budget_spent.epsilon:.4f}, "
          f"δ={result.budget_spent.delta:.3g}")
    return 0


# ---------------------- reproduce ----------------------
def _reproduce_fig4(manifest: RunManifest):
    curves = reproduce_fig4(z_source="published")
    exact = reproduce_fig4(z_source="exact")
    _write_csv(curves, manifest, "fig4.csv")
    _write_csv(exact, manifest, "fig4_exact.csv")

    rows = []
    for alpha, group in curves.groupby("alpha", sort=True):
        values = group.sort_values("level")["value"].to_numpy()
        monotone = bool(np.all(np.diff(values) <= 0))
        rows.append(_check_row(f"monotone_alpha_{alpha:g}", "", monotone, "", monotone,
                               "曲线随层数单调不增"))
        rows.append(_check_row(f"last_below_first_alpha_{alpha:g}", "", float(values[-1] - values[0]), "",
                               values[-1] < values[0], "最后一层低于第 0 层"))
    value = float(curves.query("alpha == 1.0 and level == 3")["value"].iloc[0])
    rows.append(_check_row("alpha_1_level_3", FIG4_CHECK_VALUE, value, FIG4_CHECK_TOLERANCE,
                           abs(value - FIG4_CHECK_VALUE) <= FIG4_CHECK_TOLERANCE))
    high = float(curves.query("alpha == 5.0 and level == 0")["value"].iloc[0])
    rows.append(_check_row("alpha_5_level_0_at_most", FIG4_HIGH_ALPHA_LIMIT, high, 0.0,
                           high <= FIG4_HIGH_ALPHA_LIMIT))
    return _write_check(rows, manifest, "fig4")


def _reproduce_zi_table(manifest: RunManifest):
    table = gaussian_limitation_table()
    _write_csv(table[["level", "z_published", "z_exact"]], manifest, "zi_table.csv")
    rows = []
    for row in table.itertuples(index=False):
        passed = abs(row.z_exact - row.z_published) <= TABLE_TOLERANCE
        note = "" if passed else "文献值为查正态表后的取整值"
        rows.append(_check_row(f"z_{row.level}", row.z_published, row.z_exact, TABLE_TOLERANCE, passed, note))
    return _write_check(rows, manifest, "zi-table")


def _reproduce_gaussian_table(manifest: RunManifest):
    table = gaussian_limitation_table()
    _write_csv(table[["level", "emptiness_published", "emptiness_published_chain", "emptiness_exact"]],
               manifest, "gaussian_table.csv")
    rows = []
    for row in table.itertuples(index=False):
        passed = abs(row.emptiness_published_chain - row.emptiness_published) <= TABLE_TOLERANCE
        rows.append(_check_row(f"e_c_{row.level}", row.emptiness_published, row.emptiness_published_chain,
                               TABLE_TOLERANCE, passed, f"精确 z 链：{row.emptiness_exact:.5f}"))
    return _write_check(rows, manifest, "gaussian-table")


def _reproduce_silhouette(manifest: RunManifest, args):
    seeds = list(range(args.seeds))
    calibration = calibrate_counterexample(n_per_cluster=args.n_per_cluster, seeds=seeds)
    _write_json(calibration.to_dict(), manifest, "silhouette_calibration.json")
    grid = counterexample_experiment(n_per_cluster=args.n_per_cluster, seeds=seeds,
                                     max_workers=args.max_workers, progress=not args.quiet)
    _write_csv(grid, manifest, "silhouette_grid.csv")
    trends = trend_correlations(grid)
    _write_csv(trends, manifest, "silhouette_trends.csv")

    rows = [
        _check_row("before_score", SILHOUETTE_BEFORE, calibration.before_mean, SILHOUETTE_TOLERANCE,
                   abs(calibration.before_mean - SILHOUETTE_BEFORE) <= SILHOUETTE_TOLERANCE,
                   f"d_C_S0 校准为 {calibration.d_c_s0:.4f}"),
        _check_row("after_score", SILHOUETTE_AFTER, calibration.after_mean, SILHOUETTE_TOLERANCE,
                   abs(calibration.after_mean - SILHOUETTE_AFTER) <= SILHOUETTE_TOLERANCE),
        _check_row("fraction_delta_negative", SILHOUETTE_NEGATIVE_FRACTION, calibration.fraction_negative, "",
                   calibration.fraction_negative >= SILHOUETTE_NEGATIVE_FRACTION, f"{len(seeds)} 个种子"),
    ]
    for row in trends.itertuples(index=False):
        rows.append(_check_row(f"trend_{row.axis}_at_{row.fixed}_{row.fixed_value:g}", row.expected_sign,
                               row.spearman, "", row.sign_ok and row.strong, "Spearman 符号正确且 |ρ| ≥ 0.9"))
    return _write_check(rows, manifest, "fig-silhouette")


def cmd_reproduce(args) -> int:
    manifest = RunManifest("reproduce", args.out, seed=None)
    if args.figure == "fig4":
        _reproduce_fig4(manifest)
    elif args.figure == "zi-table":
        _reproduce_zi_table(manifest)
    elif args.figure == "gaussian-table":
        _reproduce_gaussian_table(manifest)
    else:
        _reproduce_silhouette(manifest, args)
    manifest.write()
    return 0


# ---------------------- bounds ----------------------
def _load_scenario(args) -> BoundScenario:
    if args.scenario:
        scenario = BoundScenario.from_json(args.scenario)
        if args.t_prime is not None:
            scenario.t_prime = args.t_prime
        return scenario
    if not (args.dataset and args.config):
        raise ConfigValidationError("scenario", "需要情景 JSON，或同时给出 --dataset 与 --config")
    return measure_scenario(load_csv(args.dataset), DpmConfig.from_json(args.config),
                            levels=args.levels, t_prime=args.t_prime)


def cmd_bounds(args) -> int:
    manifest = RunManifest("bounds", args.out, config_path=args.scenario or args.config)
    scenario = _load_scenario(args)
    report = prob_halt_within(scenario, args.levels, mode=args.mode, product_range=args.product_range,
                              numerator=args.numerator)
    summary = {
        "mode": report.mode,
        "product_range": report.product_range,
        "levels": report.levels,
        "raw": report.raw,
        "clamped": report.clamped,
        "loose": report.loose,
        "saturated_at": report.saturated_at,
        "flags": report.flags,
        "halt_immediately": prob_halt_immediately_lower(scenario),
        "not_halt": prob_not_halt_lower(scenario),
        "scenario": scenario.to_dict(),
    }
    if scenario.t_prime is not None:
        summary["central_split"] = prob_central_split_lower(scenario, strict=False)
    frame = report.to_frame()
    _write_csv(frame, manifest, "bounds.csv")
    _write_json(summary, manifest, "bounds_summary.json")
    manifest.write()
    print(frame.to_string(index=False))
    print(f"-> 原始下界 {report.raw:.6g}，截断后 {report.clamped:.6g}" + ("（loose）" if report.loose else ""))
    return 0


# ---------------------- simulate ----------------------
def cmd_simulate(args) -> int:
    manifest = RunManifest("simulate", args.out, config_path=args.plan, seed=args.seed)
    progress = not args.quiet
    if args.suite == "soundness":
        table = soundness_suite(trials=args.trials, seed=args.seed or 0, progress=progress)
    elif args.suite == "oracle":
        table = oracle_agreement(trials=args.trials, seed=args.seed or 0, progress=progress)
    else:
        if not args.plan:
            raise ConfigValidationError("plan", "需要试验计划 JSON 或 --suite")
        plans = load_plans(args.plan)
        if args.seed is not None:
            for plan in plans:
                plan.master_seed = args.seed
        table = run_plans(plans, progress=progress)
    _write_csv(table, manifest, "reports.csv")
    _write_json(json.loads(table.to_json(orient="records")), manifest, "reports.json")
    manifest.write()
    if "holds" in table:
        print(f"-> {int(table['holds'].sum())}/{len(table)} 个下界成立")
    elif "agrees" in table:
        print(f"-> {int(table['agrees'].sum())}/{len(table)} 个实例与精确值一致")
    return 0


# ---------------------- separability ----------------------
def _parse_direction(text) -> List[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError as e:
        raise ConfigValidationError("direction", f"方向需为逗号分隔的实数：{text!r}") from e


def cmd_separability(args) -> int:
    manifest = RunManifest("separability", args.out)
    dataset = load_csv(args.dataset)
    directions = [_parse_direction(d) for d in args.direction] if args.direction else None
    certificates = find_certificates(dataset.points, args.rho, directions)
    records = []
    for cert in certificates:
        record = cert.to_dict()
        record["recount"] = cert.recount(dataset.points)
        records.append(record)
    _write_json(records, manifest, "certificates.json")
    manifest.write()
    best = min(certificates, key=lambda c: c.xi)
    print(f"-> {len(certificates)} 个方向，最小 ξ = {best.xi}（方向 {np.round(best.direction, 4).tolist()}）")
    return 0


# ---------------------- 参数解析 ----------------------
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dpm_toolkit", description="DPM 差分隐私聚类与停止概率分析工具")
    parser.add_argument("-v", "--verbose", action="store_true", help="输出调试日志")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="生成合成数据集")
    p.add_argument("kind", choices=["uniform", "gaussian", "counterexample"])
    p.add_argument("--out", default="output", help="输出目录")
    p.add_argument("--name", default="dataset.csv", help="输出文件名")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--low", type=float, default=0.0)
    p.add_argument("--high", type=float, default=1.0)
    p.add_argument("--spec", help="高斯混合 JSON（gaussian）")
    p.add_argument("--d-c-s0", type=float, default=5.0)
    p.add_argument("--d-split", type=float, default=5.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--n-per-cluster", type=int, default=500)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("cluster", help="运行 DPM 聚类")
    p.add_argument("dataset")
    p.add_argument("config", nargs="?", help="配置 JSON（--replay 时可省略）")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="output")
    p.add_argument("--replay", help="按已有 result.json 中的树重放")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("reproduce", help="复现图表")
    p.add_argument("figure", choices=FIGURES)
    p.add_argument("--out", default="output")
    p.add_argument("--seeds", type=int, default=10, help="fig-silhouette 的种子数")
    p.add_argument("--n-per-cluster", type=int, default=500)
    p.add_argument("--max-workers", type=int, default=1)
    p.add_argument("--quiet", action="store_true", help="不显示进度条")
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("bounds", help="计算停止概率下界")
    p.add_argument("scenario", nargs="?", help="情景 JSON")
    p.add_argument("--dataset", help="由 CSV 数据集测得情景")
    p.add_argument("--config", help="测得情景时使用的 DPM 配置")
    p.add_argument("--mode", choices=["general", "tprime"], default="general")
    p.add_argument("--levels", type=int, default=0)
    p.add_argument("--t-prime", type=float, default=None)
    p.add_argument("--product-range", choices=["previous", "printed"], default="previous")
    p.add_argument("--numerator", choices=["printed", "proof"], default="printed")
    p.add_argument("--out", default="output")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("simulate", help="蒙特卡洛验证")
    p.add_argument("plan", nargs="?", help="试验计划 JSON")
    p.add_argument("--suite", choices=["soundness", "oracle"])
    p.add_argument("--trials", type=int, default=2000, help="预置套件的试验次数")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default="output")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("separability", help="搜索 (ξ,ρ)-分隔证书")
    p.add_argument("dataset")
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--direction", action="append", help="额外方向，如 1,1（可重复）")
    p.add_argument("--out", default="output")
    p.set_defaults(func=cmd_separability)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    os.makedirs(args.out, exist_ok=True)
    setup_logging(args.out, args.verbose)
    try:
        return args.func(args)
    except (ConfigValidationError, DatasetFormatError, NoAdmissibleSplitError, BoundDomainError,
            json.JSONDecodeError) as e:
        logger.error(f"校验失败：{e}")
        return 2
    except Exception as e:
        logger.error(f"运行失败：{e}", exc_info=True)
        return 1


if __name__ == "__main__":
    sys.exit(main())
