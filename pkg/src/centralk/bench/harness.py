"""Run matrices of benchmark configurations and write CSV reports."""
from __future__ import annotations

import csv
import dataclasses
import math
import statistics
from pathlib import Path

from ..config import StorageConfig
from ..conformance import stress
from .gp import gp_seq, run_gp
from .graph import gen_graph
from .sssp import run_sssp, sssp_seq

BENCHES = ("sssp", "gp", "stress")
ORDERINGS = ("relaxed", "strict", "both")
CSV_HEADER = ["bench", "mode", "handshake", "threads", "seed", "runtime_s", "tasks_executed",
              "heap_discards", "blocks_linked", "blocks_reused"]
SUMMARY_HEADER = ["bench", "mode", "threads", "mean_runtime_s", "sd_runtime_s"]


class OracleMismatch(AssertionError):
    """A parallel result differs from the oracle or from the other ordering mode."""


@dataclasses.dataclass
class BenchConfig:
    bench: str = "sssp"
    size: int = 1000
    p: float = 0.01
    max_w: int = 10**8
    k: int = 1024
    threads: tuple = (1, 2, 4, 8)
    seeds: tuple = tuple(range(5))
    block_size: int = 128
    tests: int | None = None
    ordering: str = "relaxed"
    handshake: str = "acquire"
    csv: str | None = None
    verify: bool = False

    def __post_init__(self):
        self.threads = tuple(self.threads)
        self.seeds = tuple(self.seeds)
        if self.bench not in BENCHES:
            raise ValueError(f"bench must be one of {BENCHES}")
        if self.ordering not in ORDERINGS:
            raise ValueError(f"ordering must be one of {ORDERINGS}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        if self.size < 1 or self.max_w < 1 or self.k < 0:
            raise ValueError("size and max_w must be >= 1 and k >= 0")
        if not self.threads or min(self.threads) < 1:
            raise ValueError("thread counts must be >= 1")
        if not self.seeds:
            raise ValueError("at least one seed is required")

    @property
    def modes(self) -> tuple:
        return ("relaxed", "strict") if self.ordering == "both" else (self.ordering,)

    def storage_config(self, mode: str, seed: int) -> StorageConfig:
        return StorageConfig(block_size=self.block_size, tests=self.tests, ordering=mode,
                             handshake=self.handshake, seed=seed)


@dataclasses.dataclass
class BenchReport:
    rows: list
    summary: list
    csv_path: Path | None = None
    summary_path: Path | None = None


def summary_path_for(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + "_summary" + (path.suffix or ".csv"))


def _one_run(cfg: BenchConfig, mode: str, threads: int, seed: int):
    """Returns (output, oracle thunk, row counters)."""
    sc = cfg.storage_config(mode, seed)
    if cfg.bench == "stress":
        rep = stress(threads, cfg.size, cfg.k, cfg.block_size, config=sc, seed=seed)
        if not rep.passed:
            raise OracleMismatch(rep.summary())
        counters = (rep.runtime_s, rep.popped, rep.heap_discards, rep.blocks_linked, rep.blocks_reused)
        return sorted(rep.payloads.elements()), None, counters
    graph = gen_graph(cfg.size, cfg.p, cfg.max_w, seed)
    if cfg.bench == "sssp":
        res = run_sssp(graph, 0, cfg.k, threads, sc)
        out, oracle = res.dist, (lambda: sssp_seq(graph, 0))
    else:
        res = run_gp(graph, threads, cfg.k, sc)
        out, oracle = res.best, (lambda: gp_seq(graph))
    total = res.stats.total
    counters = (res.stats.wall_time, res.stats.executed, total.heap_discards,
                total.blocks_linked, total.blocks_reused)
    return out, oracle, counters


def run_benchmark(cfg: BenchConfig, log=None) -> BenchReport:
    """Every (mode, threads, seed) combination once, plus mean/sd per (mode, threads).

    Raises :class:`OracleMismatch` when ``verify`` is set and a result
    differs from the sequential oracle, and whenever two ordering modes
    disagree on the same (threads, seed).
    """
    rows = []
    outputs = {}
    oracle_cache = {}
    for mode in cfg.modes:
        for threads in cfg.threads:
            for seed in cfg.seeds:
                out, oracle, counters = _one_run(cfg, mode, threads, seed)
                if cfg.verify and oracle is not None:
                    if seed not in oracle_cache:
                        oracle_cache[seed] = oracle()
                    if out != oracle_cache[seed]:
                        raise OracleMismatch(f"{cfg.bench} {mode} threads={threads} seed={seed}: "
                                             f"parallel result differs from the oracle")
                outputs[(mode, threads, seed)] = out
                runtime, executed, discards, linked, reused = counters
                row = [cfg.bench, mode, cfg.handshake, threads, seed, f"{runtime:.6f}",
                       executed, discards, linked, reused]
                rows.append(row)
                if log:
                    log(",".join(map(str, row)))
    if len(cfg.modes) == 2:
        for threads in cfg.threads:
            for seed in cfg.seeds:
                if outputs[("relaxed", threads, seed)] != outputs[("strict", threads, seed)]:
                    raise OracleMismatch(f"{cfg.bench} threads={threads} seed={seed}: "
                                         f"relaxed and strict outputs differ")

    summary = []
    for mode in cfg.modes:
        for threads in cfg.threads:
            times = [float(r[5]) for r in rows if r[1] == mode and r[3] == threads]
            sd = statistics.stdev(times) if len(times) > 1 else math.nan
            summary.append([cfg.bench, mode, threads, f"{statistics.fmean(times):.6f}", f"{sd:.6f}"])

    report = BenchReport(rows, summary)
    if cfg.csv:
        report.csv_path = Path(cfg.csv)
        report.summary_path = summary_path_for(cfg.csv)
        _write(report.csv_path, CSV_HEADER, rows)
        _write(report.summary_path, SUMMARY_HEADER, summary)
    return report


def _write(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
