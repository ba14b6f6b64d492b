"""Text tables over a results directory.

The report is a pure function of the ``result.json`` files found at
``<results_dir>/<confighash>/<seed>/<head>/``: runs are grouped by protocol,
experiment, imbalance factor and head, and every cell is a mean ± std over seeds.
"""

import csv
import io
import logging
import math
import os
from collections import defaultdict
from glob import glob

import numpy as np

from app.core.errors import ResultsError
from evaluation.classification import summarize_seeds
from schemas.data_schemas import HeadKind, RunResult

logger = logging.getLogger(__name__)

HEAD_ORDER = list(HeadKind)


def load_results(results_dir: str) -> list[RunResult]:
    paths = sorted(glob(os.path.join(results_dir, "*", "*", "*", "result.json")))
    results = []
    for path in paths:
        with open(path, encoding="utf-8") as f:
            results.append(RunResult.model_validate_json(f.read()))
    if not results:
        raise ResultsError(f"no results found under {results_dir}")
    logger.info(f"Loaded {len(results)} results from {results_dir}")
    return results


def _pct(values) -> str:
    mean, std = summarize_seeds(values)
    if math.isnan(mean):
        return "n/a"
    return f"{100 * mean:.2f} ± {100 * std:.2f}"


def _plain(values, digits: int = 4) -> str:
    mean, std = summarize_seeds(values)
    if math.isnan(mean):
        return "n/a"
    return f"{mean:.{digits}f} ± {std:.{digits}f}"


def _delta(values, base_values) -> str:
    mean, _ = summarize_seeds(values)
    base, _ = summarize_seeds(base_values)
    if math.isnan(mean) or math.isnan(base):
        return "n/a"
    return f"{100 * (mean - base):+.2f}"


def _table(header: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(r[i]) for r in [header, *rows]) for i in range(len(header))]

    def fmt(row: list[str]) -> str:
        return "  ".join(cell.ljust(w) if i == 0 else cell.rjust(w) for i, (cell, w) in enumerate(zip(row, widths)))

    rule = "  ".join("-" * w for w in widths)
    return "\n".join([fmt(header), rule, *[fmt(r) for r in rows]])


def _heads(results: list[RunResult]) -> list[HeadKind]:
    present = {r.head for r in results}
    return [h for h in HEAD_ORDER if h in present]


def _baseline(heads: list[HeadKind]) -> HeadKind:
    return HeadKind.STANDARD_LINEAR if HeadKind.STANDARD_LINEAR in heads else heads[0]


def _group(results: list[RunResult]) -> dict[tuple[float, HeadKind], list[RunResult]]:
    groups: dict[tuple[float, HeadKind], list[RunResult]] = defaultdict(list)
    for r in results:
        groups[(r.imbalance_factor, r.head)].append(r)
    for runs in groups.values():
        runs.sort(key=lambda r: r.seed)
    return groups


def render_accuracy(results: list[RunResult]) -> str:
    groups = _group(results)
    factors = sorted({f for f, _ in groups}, reverse=True)
    heads = _heads(results)
    base = _baseline(heads)
    header = ["accuracy (%)"] + [f"factor {f:g}" for f in factors]
    rows = []
    for head in heads:
        rows.append([head.value] + [_pct(r.accuracy for r in groups.get((f, head), [])) for f in factors])
        if head is not base:
            rows.append([f"  delta vs {base.value}"] + [
                _delta([r.accuracy for r in groups.get((f, head), [])],
                       [r.accuracy for r in groups.get((f, base), [])])
                for f in factors
            ])
    afs_rows = [
        [head.value] + [_plain(r.angular_fisher_score for r in groups.get((f, head), [])) for f in factors]
        for head in heads
    ]
    return "\n\n".join([
        _table(header, rows),
        _table(["angular fisher score"] + header[1:], afs_rows),
    ])


def per_class_csv(results: list[RunResult], factor: float) -> str | None:
    groups = _group(results)
    base_runs = groups.get((factor, HeadKind.STANDARD_LINEAR), [])
    sep_runs = groups.get((factor, HeadKind.MAX_SEP_FIXED), [])
    if not base_runs or not sep_runs:
        return None
    num_classes = sep_runs[0].num_classes
    counts = np.mean([r.train_counts for r in sep_runs], axis=0)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["class", "train_count", "acc_base", "acc_maxsep", "delta"])
    for c in range(num_classes):
        base, _ = summarize_seeds(r.per_class_accuracy[c] for r in base_runs)
        sep, _ = summarize_seeds(r.per_class_accuracy[c] for r in sep_runs)
        writer.writerow([c, f"{counts[c]:g}", f"{base:.6f}", f"{sep:.6f}", f"{sep - base:+.6f}"])
    return buf.getvalue()


def render_ood(results: list[RunResult]) -> str:
    groups = _group(results)
    heads = _heads(results)
    sections = []
    for factor in sorted({f for f, _ in groups}, reverse=True):
        set_names = sorted({name for h in heads for r in groups.get((factor, h), []) for name in (r.metrics or {})})
        header = ["ood set / score"] + [f"{h.value} {m}" for h in heads for m in ("FPR95", "AUROC", "AUPR")]
        rows = []
        for set_name in set_names:
            score_names = sorted({s for h in heads for r in groups.get((factor, h), [])
                                  for s in (r.metrics or {}).get(set_name, {})})
            for score in score_names:
                row = [f"{set_name} / {score}"]
                for h in heads:
                    triples = [r.metrics[set_name][score] for r in groups.get((factor, h), [])
                               if r.metrics and score in r.metrics.get(set_name, {})]
                    row += [_pct(t.fpr95 for t in triples), _pct(t.auroc for t in triples),
                            _pct(t.aupr for t in triples)]
                rows.append(row)
        sections.append(f"factor {factor:g}\n" + _table(header, rows))
    return "\n\n".join(sections)


def render_osr(results: list[RunResult]) -> str:
    groups = _group(results)
    heads = _heads(results)
    base = _baseline(heads)
    sections = []
    for factor in sorted({f for f, _ in groups}, reverse=True):
        rows = []
        for score in ("msp", "mls"):
            row = [f"{score} AUROC (%)"]
            for h in heads:
                row.append(_pct(r.metrics["open_set"][score].auroc for r in groups.get((factor, h), [])
                                if r.metrics and "open_set" in r.metrics))
            rows.append(row)
            if len(heads) > 1:
                base_vals = [r.metrics["open_set"][score].auroc for r in groups.get((factor, base), []) if r.metrics]
                rows.append([f"  delta vs {base.value}"] + [
                    "" if h is base else _delta(
                        [r.metrics["open_set"][score].auroc for r in groups.get((factor, h), []) if r.metrics],
                        base_vals)
                    for h in heads
                ])
        for key in ("known_mean", "open_mean"):
            rows.append([f"feature norm {key.split('_')[0]}"] + [
                _plain(((r.feature_norms or {}).get(key) for r in groups.get((factor, h), [])), digits=3)
                for h in heads
            ])
        sections.append(f"factor {factor:g}\n" + _table(["open set"] + [h.value for h in heads], rows))
    return "\n\n".join(sections)


SECTIONS = (
    ("train", "Classification", render_accuracy),
    ("ood", "Out-of-distribution detection", render_ood),
    ("osr", "Open-set recognition", render_osr),
)


def _experiments(results: list[RunResult]) -> list[tuple[str, list[RunResult]]]:
    groups: dict[str, list[RunResult]] = defaultdict(list)
    for r in results:
        groups[r.experiment_hash].append(r)
    return sorted(groups.items())


def render_report(results_dir: str) -> tuple[str, dict[str, str]]:
    """Returns the report text and extra CSV files keyed by file name.

    Runs from different experiments never share a table: each protocol gets one
    section per experiment hash.
    """
    results = load_results(results_dir)
    parts, csv_files = [], {}
    for protocol, title, render in SECTIONS:
        experiments = _experiments([r for r in results if r.protocol == protocol])
        for exp_hash, runs in experiments:
            parts.append(f"== {title} [experiment {exp_hash}] ==\n" + render(runs))
            if protocol != "train":
                continue
            prefix = "per_class" if len(experiments) == 1 else f"per_class_{exp_hash}"
            for factor in sorted({r.imbalance_factor for r in runs}, reverse=True):
                content = per_class_csv(runs, factor)
                if content is not None:
                    csv_files[f"{prefix}_{factor:g}.csv"] = content
    return "\n\n".join(parts) + "\n", csv_files
