"""Application config: one JSON file, every key validated, unknown keys rejected.

A silent hyperparameter typo would invalidate an experiment, so sections and
keys are matched strictly against the schema below. Every section is
optional except where a command requires it (``gen`` and synthetic ``eval``
need ``synth``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .evaluation import ALL_METHODS
from .gcn import GcnConfig
from .graph import DEFAULT_THRESHOLD, GraphConstructionConfig
from .labelprop import LpConfig
from .synth import SynthConfig

_SECTIONS = ("graph", "lp", "gcn", "eval", "synth")


@dataclass(frozen=True)
class EvalSettings:
    methods: tuple[str, ...] = ALL_METHODS
    ks: tuple[int, ...] = (5, 10, 20, 30)
    repeats: int = 10
    seed: int = 0

    def __post_init__(self):
        unknown = [m for m in self.methods if m not in ALL_METHODS]
        if unknown:
            raise ValueError(f"eval.methods: unknown method {unknown[0]!r}")
        if not self.methods:
            raise ValueError("eval.methods: need at least one method")
        if not self.ks or any(k < 1 for k in self.ks):
            raise ValueError("eval.ks: need a list of positive integers")
        if self.repeats < 1:
            raise ValueError(f"eval.repeats must be positive, got {self.repeats}")
        if self.seed < 0:
            raise ValueError(f"eval.seed must be nonnegative, got {self.seed}")


@dataclass(frozen=True)
class AppConfig:
    graph: GraphConstructionConfig
    lp: LpConfig
    gcn: GcnConfig
    eval: EvalSettings
    synth: SynthConfig | None = None


def default_config() -> AppConfig:
    return AppConfig(
        graph=GraphConstructionConfig.threshold(),
        lp=LpConfig(),
        gcn=GcnConfig(),
        eval=EvalSettings(),
        synth=None,
    )


def load_app_config(path) -> AppConfig:
    """Parse and validate a config file; any unknown or ill-typed key fails."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: malformed config file: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    unknown = sorted(set(doc) - set(_SECTIONS))
    if unknown:
        raise ValueError(f"config: unknown section {unknown[0]!r}")

    return AppConfig(
        graph=_parse_graph(_section(doc, "graph")),
        lp=_parse_simple(_section(doc, "lp"), LpConfig, "lp"),
        gcn=_parse_simple(_section(doc, "gcn"), GcnConfig, "gcn"),
        eval=_parse_eval(_section(doc, "eval")),
        synth=(
            _parse_simple(doc["synth"], SynthConfig, "synth") if doc.get("synth") is not None else None
        ),
    )


def _section(doc: dict, name: str) -> dict:
    section = doc.get(name, {})
    if not isinstance(section, dict):
        raise ValueError(f"config: section {name!r} must be an object")
    return section


def _parse_graph(section: dict) -> GraphConstructionConfig:
    _reject_unknown(section, ("strategy", "tau", "k"), "graph")
    strategy = section.get("strategy", "threshold")
    tau = section.get("tau")
    k = section.get("k")
    if strategy == "threshold" and tau is None:
        tau = DEFAULT_THRESHOLD
    try:
        return GraphConstructionConfig(strategy=strategy, tau=tau, k=k)
    except ValueError as exc:
        raise ValueError(f"config: graph: {exc}") from exc


def _parse_simple(section: dict, cls, name: str):
    fields = tuple(cls.__dataclass_fields__)
    _reject_unknown(section, fields, name)
    try:
        return cls(**section)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"config: {name}: {exc}") from exc


def _parse_eval(section: dict) -> EvalSettings:
    _reject_unknown(section, ("methods", "ks", "repeats", "seed"), "eval")
    kwargs = dict(section)
    if "methods" in kwargs:
        kwargs["methods"] = tuple(kwargs["methods"])
    if "ks" in kwargs:
        kwargs["ks"] = tuple(kwargs["ks"])
    try:
        return EvalSettings(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"config: eval: {exc}") from exc


def _reject_unknown(section: dict, allowed, name: str) -> None:
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise ValueError(f"config: {name}: unknown key {unknown[0]!r}")
