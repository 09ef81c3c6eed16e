"""Experiment configuration files (TOML).

    [global]
    max_n = 10000000
    output_dir = "results"

    [[experiment]]
    name = "two-point"
    kind = "correlate"
    functions = ["liouville", "liouville"]
    shifts = [0, 1]
    scales = [1e6, 1e7]
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import tomli

from .errors import ConfigError
from .sieve import DEFAULT_SEGMENT

KINDS = ("correlate", "fd_table", "isotopy_arch", "isotopy_nonarch", "equidist", "pretense", "fit",
         "race", "smooth", "patterns", "straighten", "compare_avgs", "three_point")

GLOBAL_DEFAULTS = {"max_n": 10**7, "segment_size": DEFAULT_SEGMENT, "threads": None,
                   "output_dir": "results", "seed": 0}


class ConfigParseError(ConfigError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line, self.column = line, column
        where = f" at line {line}, column {column}" if line is not None else ""
        super().__init__(f"{message}{where}")


@dataclass
class Diagnostic:
    experiment: str | None
    field: str | None
    message: str

    def __str__(self):
        who = f"[{self.experiment}] " if self.experiment else ""
        what = f"{self.field}: " if self.field else ""
        return f"{who}{what}{self.message}"


@dataclass
class ExperimentConfig:
    experiments: list[dict]
    global_: dict = field(default_factory=dict)
    source: str | None = None

    @property
    def max_n(self) -> int:
        return int(float(self.global_["max_n"]))

    @property
    def seed(self) -> int:
        return int(self.global_["seed"])

    def hash(self) -> str:
        canon = json.dumps({"global": self.global_, "experiments": self.experiments},
                           sort_keys=True, default=str)
        return hashlib.sha256(canon.encode()).hexdigest()


def parse_config(text: str, source: str | None = None) -> ExperimentConfig:
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as e:
        msg = str(e).split(" (at ")[0]
        raise ConfigParseError(msg, getattr(e, "lineno", None), getattr(e, "colno", None)) from None
    return from_dict(data, source)


def from_dict(data: dict, source: str | None = None) -> ExperimentConfig:
    unknown = set(data) - {"global", "experiment"}
    if unknown:
        raise ConfigParseError(f"unknown top-level keys {sorted(unknown)}")
    glob = dict(GLOBAL_DEFAULTS)
    extra = set(data.get("global", {})) - set(GLOBAL_DEFAULTS)
    if extra:
        raise ConfigParseError(f"unknown global keys {sorted(extra)}")
    glob.update(data.get("global", {}))
    exps = data.get("experiment", [])
    if not isinstance(exps, list) or not all(isinstance(e, dict) for e in exps):
        raise ConfigParseError("'experiment' must be an array of tables ([[experiment]])")
    return ExperimentConfig([dict(e) for e in exps], glob, source)


def load_config(path: str | Path) -> ExperimentConfig:
    p = Path(path)
    return parse_config(p.read_text(), str(p))


def validate(config: ExperimentConfig) -> list[Diagnostic]:
    """Every problem found, in experiment order."""
    from .jobs import build_job

    out: list[Diagnostic] = []
    g = config.global_
    try:
        if config.max_n < 1:
            out.append(Diagnostic(None, "max_n", "must be >= 1"))
    except (TypeError, ValueError):
        out.append(Diagnostic(None, "max_n", f"not a number: {g['max_n']!r}"))
        return out
    if int(g["segment_size"]) < 1024:
        out.append(Diagnostic(None, "segment_size", "must be >= 1024"))
    if g["threads"] is not None and int(g["threads"]) < 1:
        out.append(Diagnostic(None, "threads", "must be >= 1"))
    seen: dict[str, int] = {}
    for i, e in enumerate(config.experiments):
        name = e.get("name")
        label = name if isinstance(name, str) else f"#{i + 1}"
        if not isinstance(name, str) or not name:
            out.append(Diagnostic(label, "name", "missing experiment name"))
        elif name in seen:
            out.append(Diagnostic(label, "name", f"duplicate experiment name (first used by #{seen[name] + 1})"))
        else:
            seen[name] = i
        kind = e.get("kind")
        if kind not in KINDS:
            out.append(Diagnostic(label, "kind", f"unknown kind {kind!r}; expected one of {', '.join(KINDS)}"))
            continue
        probs = []
        job = build_job(e, config, probs, i)
        out.extend(Diagnostic(label, f, m) for f, m in probs)
        if job is not None and not probs:
            for c in job.consumers:
                reach = c.limit + c.pad_hi
                if reach > config.max_n:
                    out.append(Diagnostic(label, None, f"needs integers up to {reach} > max_n = {config.max_n}"))
                    break
    return out
