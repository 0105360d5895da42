"""Evaluation protocol: repeated runs with shared profile samples.

For every repeat and every profile budget k, one consecutive profile sample
is drawn and every requested method classifies the identical restricted
session (the sample ids are asserted equal across methods). Ground-truth
test labels live only in this module; classifiers receive a view with test
labels erased. Aggregates report the mean, the population standard
deviation (divide by the number of runs), and the relative error reduction
against the cosine baseline at the same k.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .baseline import classify_test_segments, fit_centroids
from .gcn import GcnConfig, classify_gcn
from .graph import GraphConstructionConfig, build_affinity
from .labelprop import LpConfig, classify_lp
from .seeding import derive_seed
from .segments import (
    SegmentSet,
    restrict_to_sample,
    sample_consecutive_profiles,
)
from .synth import SynthConfig, gen_session

METHOD_COSINE = "cosine"
METHOD_LP = "lp"
METHOD_GCN = "gcn"
ALL_METHODS = (METHOD_COSINE, METHOD_LP, METHOD_GCN)

# seed-derivation role tags (arbitrary but frozen)
_ROLE_SAMPLE = 1
_ROLE_GCN = 2

PER_RUN_HEADER = ("method", "k", "repeat", "error_rate")
AGGREGATE_HEADER = ("method", "k", "mean", "std", "rer")


@dataclass(frozen=True)
class RunResult:
    """Per-run error rates of one method at one profile budget."""

    method: str
    k: int
    errors: tuple[float, ...]

    def __post_init__(self):
        if not self.errors:
            raise ValueError("RunResult needs at least one run")
        if any(not 0.0 <= e <= 1.0 for e in self.errors):
            raise ValueError(f"error rates must lie in [0, 1], got {self.errors}")


@dataclass(frozen=True)
class ReportRow:
    method: str
    k: int
    mean: float
    std: float
    rer: float | None


@dataclass(frozen=True)
class EvalReport:
    rows: tuple[ReportRow, ...]
    runs: tuple[RunResult, ...]


def segment_error_rate(predictions, truth) -> float:
    """Fraction of positions where prediction and truth disagree."""
    predictions = list(predictions)
    truth = list(truth)
    if len(predictions) != len(truth):
        raise ValueError(f"length mismatch: {len(predictions)} predictions vs {len(truth)} truths")
    if not predictions:
        raise ValueError("segment_error_rate needs at least one item")
    wrong = sum(1 for p, t in zip(predictions, truth) if p != t)
    return wrong / len(predictions)


def relative_error_reduction(baseline_mean: float, method_mean: float) -> float:
    """(baseline - method) / baseline, in percent."""
    if baseline_mean <= 0.0:
        raise ValueError(f"baseline mean must be positive, got {baseline_mean}")
    return (baseline_mean - method_mean) / baseline_mean * 100.0


def run_experiment(
    source,
    methods=ALL_METHODS,
    ks=(5, 10, 20, 30),
    repeats: int = 10,
    seed: int = 0,
    graph_config: GraphConstructionConfig | None = None,
    lp_config: LpConfig | None = None,
    gcn_config: GcnConfig | None = None,
) -> EvalReport:
    """Evaluate every method over ``repeats`` fresh profile samples per k.

    ``source`` is either a SegmentSet with ground-truth test labels or a
    SynthConfig (generated once with its own seed). Sampling seeds derive
    from (seed, repeat, k) only, so the method list never affects them.
    """
    methods = tuple(methods)
    ks = tuple(int(k) for k in ks)
    if repeats < 1:
        raise ValueError(f"repeats must be positive, got {repeats}")
    unknown = [m for m in methods if m not in ALL_METHODS]
    if unknown:
        raise ValueError(f"unknown method {unknown[0]!r} (choose from {', '.join(ALL_METHODS)})")
    if len(set(methods)) != len(methods):
        raise ValueError("duplicate method in methods")

    full_set = gen_session(source) if isinstance(source, SynthConfig) else source
    if not isinstance(full_set, SegmentSet):
        raise TypeError(f"source must be a SegmentSet or SynthConfig, got {type(source)!r}")
    missing = [s.id for s in full_set.tests if s.speaker is None]
    if missing:
        raise ValueError(
            f"test segment {missing[0]!r} has no ground-truth label; evaluation needs labeled tests"
        )
    graph_config = graph_config or GraphConstructionConfig.threshold()
    lp_config = lp_config or LpConfig()
    gcn_config = gcn_config or GcnConfig()

    errors: dict[tuple[str, int], list[float]] = {(m, k): [] for m in methods for k in ks}
    for k in ks:
        for repeat in range(repeats):
            sample = sample_consecutive_profiles(
                full_set, k, derive_seed(seed, _ROLE_SAMPLE, repeat, k)
            )
            run_gcn_config = replace(gcn_config, seed=derive_seed(seed, _ROLE_GCN, repeat, k))
            sampled_ids: dict[str, frozenset[str]] = {}
            for method in methods:
                restricted = restrict_to_sample(full_set, sample)
                view = restricted.without_test_labels()
                sampled_ids[method] = frozenset(s.id for s in view.profiles)
                # protocol: every method must consume the identical sample
                assert sampled_ids[method] == sampled_ids[methods[0]], (
                    f"profile sample mismatch between {method!r} and {methods[0]!r}"
                )
                preds = _classify(method, view, graph_config, lp_config, run_gcn_config)
                truth = [s.speaker for s in restricted.tests]
                errors[(method, k)].append(segment_error_rate(preds, truth))

    runs = tuple(
        RunResult(method=m, k=k, errors=tuple(errors[(m, k)])) for m in methods for k in ks
    )
    rows = []
    for method in methods:
        for k in ks:
            errs = np.asarray(errors[(method, k)])
            mean = float(errs.mean())
            std = float(errs.std(ddof=0))
            rer = None
            if method != METHOD_COSINE and METHOD_COSINE in methods:
                cosine_mean = float(np.mean(errors[(METHOD_COSINE, k)]))
                if cosine_mean > 0.0:
                    rer = relative_error_reduction(cosine_mean, mean)
            rows.append(ReportRow(method=method, k=k, mean=mean, std=std, rer=rer))
    return EvalReport(rows=tuple(rows), runs=runs)


def _classify(method, view, graph_config, lp_config, gcn_config):
    if method == METHOD_COSINE:
        return classify_test_segments(fit_centroids(view), view)
    graph = build_affinity(view, graph_config)
    if method == METHOD_LP:
        return classify_lp(view, graph, lp_config)
    return classify_gcn(view, graph, gcn_config)


def report_to_table(report: EvalReport) -> str:
    """Fixed-width table with percentages at one decimal, like the CSV but readable."""
    lines = [
        "# segment error rates (%); std is the population standard deviation over repeats",
        f"{'method':<8} {'k':>4} {'mean':>7} {'std':>7} {'RER':>7}",
    ]
    for row in report.rows:
        rer = f"{row.rer:.1f}" if row.rer is not None else ""
        lines.append(
            f"{row.method:<8} {row.k:>4} {row.mean * 100.0:>7.1f} {row.std * 100.0:>7.1f} {rer:>7}"
        )
    return "\n".join(lines) + "\n"


def write_per_run_csv(report: EvalReport, path) -> None:
    """``method,k,repeat,error_rate`` rows at full double precision."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(PER_RUN_HEADER)
        for run in report.runs:
            for repeat, err in enumerate(run.errors):
                writer.writerow([run.method, run.k, repeat, repr(float(err))])


def write_aggregate_csv(report: EvalReport, path) -> None:
    """``method,k,mean,std,rer`` rows at full double precision; rer may be empty."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(AGGREGATE_HEADER)
        for row in report.rows:
            writer.writerow(
                [
                    row.method,
                    row.k,
                    repr(float(row.mean)),
                    repr(float(row.std)),
                    "" if row.rer is None else repr(float(row.rer)),
                ]
            )


def read_aggregate_csv(path) -> tuple[ReportRow, ...]:
    """Parse back an aggregate CSV; exact inverse of write_aggregate_csv."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != AGGREGATE_HEADER:
            raise ValueError(f"{path}: unexpected header {header!r}")
        for record in reader:
            method, k, mean, std, rer = record
            rows.append(
                ReportRow(
                    method=method,
                    k=int(k),
                    mean=float(mean),
                    std=float(std),
                    rer=None if rer == "" else float(rer),
                )
            )
    return tuple(rows)
