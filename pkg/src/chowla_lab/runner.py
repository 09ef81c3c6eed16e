"""Batch execution of an experiment config with one shared sieve sweep."""

from __future__ import annotations

import time
import traceback
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .config import ExperimentConfig, validate
from .errors import ConfigError
from .io import Document
from .jobs import build_job
from .sieve import DEFAULT_SEGMENT
from .sweep import Consumer, FunctionSum, SweepStats, run_sweep


class _Guarded(Consumer):
    """Isolates a failing consumer so its siblings keep running."""

    def __init__(self, inner: Consumer, job: str):
        self.inner, self.job = inner, job
        self.limit, self.pad_lo, self.pad_hi = inner.limit, inner.pad_lo, inner.pad_hi
        self.error: BaseException | None = None

    def process(self, chunk):
        if self.error is not None:
            return None
        try:
            return ("ok", self.inner.process(chunk))
        except Exception as exc:  # reported per experiment
            return ("err", exc)

    def absorb(self, partial):
        if self.error is not None:
            return
        tag, val = partial
        if tag == "err":
            self.error = val
            return
        try:
            self.inner.absorb(val)
        except Exception as exc:
            self.error = exc

    def finish(self):
        if self.error is None:
            try:
                self.inner.finish()
            except Exception as exc:
                self.error = exc


@dataclass
class ExperimentRecord:
    name: str
    kind: str
    status: str = "pending"
    outputs: list[str] = field(default_factory=list)
    error: str | None = None
    seconds: float = 0.0
    artifacts: list = field(default_factory=list, repr=False)
    traceback: str | None = field(default=None, repr=False)


@dataclass
class RunManifest:
    config_hash: str
    tool_version: str
    seed: int
    threads: int
    experiments: list[ExperimentRecord]
    sweep: SweepStats
    wall_clock: float = 0.0
    path: str | None = None

    @property
    def ok(self) -> bool:
        return all(e.status == "ok" for e in self.experiments)

    def as_dict(self) -> dict:
        return {"config_hash": self.config_hash, "tool_version": self.tool_version, "seed": self.seed,
                "threads": self.threads, "wall_clock_s": round(self.wall_clock, 3),
                "sieve": self.sweep.as_dict(),
                "experiments": [{"name": e.name, "kind": e.kind, "status": e.status, "outputs": e.outputs,
                                 "error": e.error, "seconds": round(e.seconds, 3)} for e in self.experiments]}


def run(config: ExperimentConfig, output_dir: str | Path | None = None, write: bool = True) -> RunManifest:
    """Execute every experiment; sieve-backed ones share a single sweep over [1, max_n]."""
    diags = validate(config)
    if diags:
        raise ConfigError("config has problems:\n" + "\n".join(f"  {d}" for d in diags))
    g = config.global_
    out = Path(output_dir if output_dir is not None else g["output_dir"])
    threads = int(g["threads"]) if g["threads"] else None
    stats = SweepStats()
    t0 = time.perf_counter()
    records, jobs, guards = [], [], []
    for i, e in enumerate(config.experiments):
        job = build_job(e, config, [], i)
        records.append(ExperimentRecord(job.name, job.kind))
        jobs.append(job)
        guards.append([_Guarded(c, job.name) for c in job.consumers])
    flat = [c for gs in guards for c in gs]
    if flat:
        run_sweep(flat, int(g["segment_size"]), threads, stats)
    else:
        from .sweep import default_threads

        stats.threads = threads or default_threads()
    if write:
        out.mkdir(parents=True, exist_ok=True)
    for rec, job, gs in zip(records, jobs, guards):
        start = time.perf_counter()
        failed = next((c.error for c in gs if c.error is not None), None)
        if failed is not None:
            rec.status, rec.error = "failed", f"{type(failed).__name__}: {failed}"
            continue
        try:
            arts = job.finish()
            if write:
                rec.outputs = [str(a.write(out)) for a in arts]
            rec.status = "ok"
            rec.artifacts = arts
        except Exception as exc:
            rec.status = "failed"
            rec.error = f"{type(exc).__name__}: {exc}"
            rec.traceback = traceback.format_exc()
        rec.seconds = time.perf_counter() - start
    man = RunManifest(config.hash(), __version__, config.seed, stats.threads, records, stats,
                      time.perf_counter() - t0)
    if write:
        man.path = str(Document("manifest", man.as_dict()).write(out))
    return man


def sweep_benchmark(N: int, segment_size: int = DEFAULT_SEGMENT, threads: int | None = None,
                    output_dir: str | Path | None = None) -> tuple[dict, list[FunctionSum]]:
    """Sieve [1, N] once, summing lambda(n) and lambda(n)/n per block.

    Returns the manifest dict (written as manifest.json when ``output_dir`` is
    given) and the two consumers, whose ``blocks`` hold per-block accumulators.
    """
    from .averaging import merge_all
    from .functions import Liouville

    stats = SweepStats()
    sums = [FunctionSum(Liouville(), N), FunctionSum(Liouville(), N, "log")]
    t0 = time.perf_counter()
    run_sweep(sums, segment_size, threads, stats)
    plain, log = merge_all(sums[0].blocks), merge_all(sums[1].blocks)
    man = {"kind": "sweep", "N": int(N), "tool_version": __version__, "segment_size": int(segment_size),
           "threads": stats.threads, "wall_clock_s": round(time.perf_counter() - t0, 3),
           "sieve": stats.as_dict(), "sum_liouville": int(round(plain.num.real)),
           "log_mean_liouville": log.mean().real}
    if output_dir is not None:
        out = Path(output_dir)
        out.mkdir(parents=True, exist_ok=True)
        man["path"] = str(Document("manifest", man).write(out))
    return man, sums
