import argparse
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor

from pydantic import ValidationError
from tqdm import tqdm

from app import report
from app.core import store
from app.core.config import settings
from app.core.errors import ConfigError, MaxSepError
from schemas.data_schemas import ExperimentConfig, RunJob, RunResult
from separation.matrix import build_separation_matrix, pairwise_angle_stats, save_matrix, verify_separation
from workers.experiment_worker import execute_job

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as f:
            raw = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}") from e
    try:
        config = ExperimentConfig.model_validate(raw)
    except ValidationError as e:
        problems = "; ".join(f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors())
        raise ConfigError(f"{path}: {problems}") from e
    missing = config.missing_paths()
    if missing:
        raise ConfigError(f"{path}: dataset files not found: {', '.join(missing)}")
    return config


def _apply_overrides(config: ExperimentConfig, args: argparse.Namespace) -> ExperimentConfig:
    update = {}
    if getattr(args, "seed", None) is not None:
        update["seeds"] = [args.seed]
    if getattr(args, "out", None):
        update["output_dir"] = args.out
    return config.model_copy(update=update) if update else config


def plan_jobs(config: ExperimentConfig, protocol: str, inject_separated_scores: bool = False) -> list[RunJob]:
    jobs = []
    for factor in config.imbalance_factors:
        config_hash = config.run_hash(protocol, factor)
        store.write_json(
            os.path.join(config.output_dir, config_hash, "config.json"),
            {"protocol": protocol, "imbalance_factor": factor, "config": config.model_dump(mode="json")},
        )
        for seed in config.seeds:
            for head in config.heads:
                jobs.append(RunJob(
                    protocol=protocol,
                    config=config,
                    config_hash=config_hash,
                    seed=seed,
                    head=head,
                    imbalance_factor=factor,
                    inject_separated_scores=inject_separated_scores,
                ))
    return jobs


def run_jobs(jobs: list[RunJob], n_jobs: int) -> list[RunResult]:
    progress = dict(total=len(jobs), disable=not settings.PROGRESS_BARS, unit="run")
    if n_jobs <= 1:
        return [execute_job(job) for job in tqdm(jobs, **progress)]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        return list(tqdm(pool.map(execute_job, jobs), **progress))


def cmd_matrix(classes: int, out_path: str, tolerance: float) -> int:
    matrix = build_separation_matrix(classes)
    verification = verify_separation(matrix, tolerance)
    print(verification.summary())
    if not verification.passed:
        logger.error(f"Verification failed for C={classes}; nothing written to {out_path}")
        return EXIT_FAILURE
    save_matrix(matrix, out_path)
    angles = pairwise_angle_stats(matrix) if classes <= settings.EXACT_VERIFY_MAX_CLASSES else None
    print(f"Wrote {matrix.embed_dim}x{matrix.num_classes} matrix to {out_path}")
    if angles is not None:
        print(f"pairwise angle: {angles.mean_deg:.6f} deg (std {angles.std_deg:.2e})")
    return EXIT_OK


def _run_protocol(args: argparse.Namespace, protocol: str) -> list[RunResult]:
    config = _apply_overrides(load_config(args.config), args)
    if protocol == "ood" and config.ood is None:
        raise ConfigError(f"{args.config}: eval-ood needs an 'ood' block")
    if protocol == "osr" and config.open_set is None:
        raise ConfigError(f"{args.config}: eval-osr needs an 'open_set' block")
    jobs = plan_jobs(config, protocol, inject_separated_scores=getattr(args, "inject_separated_scores", False))
    logger.info(f"Planned {len(jobs)} {protocol} runs under {config.output_dir}")
    return run_jobs(jobs, args.jobs)


def cmd_train(args: argparse.Namespace) -> int:
    results = _run_protocol(args, "train")
    print(report.render_accuracy(results))
    return EXIT_OK


def cmd_eval_ood(args: argparse.Namespace) -> int:
    results = _run_protocol(args, "ood")
    print(report.render_ood(results))
    return EXIT_OK


def cmd_eval_osr(args: argparse.Namespace) -> int:
    results = _run_protocol(args, "osr")
    print(report.render_osr(results))
    return EXIT_OK


def cmd_report(results_dir: str) -> int:
    text, csv_files = report.render_report(results_dir)
    report_dir = os.path.join(results_dir, "report")
    store.write_text(os.path.join(report_dir, "report.txt"), text)
    for name, content in csv_files.items():
        store.write_text(os.path.join(report_dir, name), content)
    print(text, end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="maxsep", description="Closed-form maximum class separation experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("matrix", help="build, verify and export the separation matrix")
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--tolerance", type=float, default=settings.VERIFY_TOLERANCE)

    for name, help_text in (("train", "train every (seed x head x imbalance) combination"),
                            ("eval-ood", "out-of-distribution detection protocol"),
                            ("eval-osr", "open-set recognition protocol")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True)
        p.add_argument("--seed", type=int, default=None, help="run only this seed")
        p.add_argument("--out", default=None, help="override the config's output directory")
        p.add_argument("--jobs", type=int, default=settings.JOBS)
        if name == "eval-ood":
            p.add_argument("--inject-separated-scores", action="store_true", help=argparse.SUPPRESS)

    p = sub.add_parser("report", help="render comparison tables from a results directory")
    p.add_argument("results_dir", nargs="?", default=settings.OUTPUT_DIR)
    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "matrix" and args.classes < 2:
        parser.error(f"--classes must be >= 2, got {args.classes}")
    if args.command == "matrix" and not args.tolerance > 0:
        parser.error("--tolerance must be > 0")
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be >= 1")
    try:
        if args.command == "matrix":
            return cmd_matrix(args.classes, args.out, args.tolerance)
        if args.command == "train":
            return cmd_train(args)
        if args.command == "eval-ood":
            return cmd_eval_ood(args)
        if args.command == "eval-osr":
            return cmd_eval_osr(args)
        return cmd_report(args.results_dir)
    except (MaxSepError, OSError) as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_FAILURE
