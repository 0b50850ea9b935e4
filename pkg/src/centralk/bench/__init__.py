"""Desk-scale shortest-path and bipartitioning benchmarks with exact oracles."""
from .gp import GPRun, gp_parallel, gp_seq, run_gp
from .graph import BenchGraph, gen_graph
from .harness import BenchConfig, BenchReport, OracleMismatch, run_benchmark
from .sssp import INF, SSSPRun, run_sssp, sssp_parallel, sssp_seq

__all__ = ["BenchGraph", "gen_graph", "sssp_seq", "sssp_parallel", "run_sssp", "SSSPRun", "INF",
           "gp_seq", "gp_parallel", "run_gp", "GPRun", "BenchConfig", "BenchReport",
           "OracleMismatch", "run_benchmark"]
