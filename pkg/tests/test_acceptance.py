"""Acceptance gate: one PASS/FAIL line per criterion (run with ``-s`` to see them)."""

import random
import statistics
import time

import pytest

from prosa_sim.metrics import (
    clustering_coefficient_network,
    clustering_coefficient_node,
    random_graph_apl,
    random_graph_cc,
    write_metrics_csv,
)
from prosa_sim.routing import write_traces_csv
from prosa_sim.workload import ExperimentConfig, derive_seed, run_experiment, sweep
from oracles import brute_force_cc, random_digraph
from protocol_checks import MutationMonitor, ProtocolViolation, check_trace

SWEEP_SIZES = (100, 200, 400, 800)


def verdict(name, ok, detail):
    print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


@pytest.fixture(scope="module")
def sweep_reports():
    t0 = time.perf_counter()
    reports = sweep(ExperimentConfig(queries_per_node=15), SWEEP_SIZES)
    return reports, time.perf_counter() - t0


def test_cc_oracle_equivalence():
    t0 = time.perf_counter()
    rng = random.Random(20240601)
    mismatches = 0
    worst = 0.0
    for _ in range(100):
        n = rng.randint(10, 30)
        adj = random_digraph(n, rng.uniform(0.05, 0.6), rng)
        oracle = brute_force_cc(adj, n)
        for v in range(n):
            got = clustering_coefficient_node(adj, v)
            want = float(oracle[v]) if v in oracle else None
            mismatches += got != want
        mean = float(sum(oracle.values()) / len(oracle)) if oracle else 0.0
        worst = max(worst, abs(clustering_coefficient_network(adj) - mean))
    elapsed = time.perf_counter() - t0
    verdict("cc-oracle", mismatches == 0 and worst <= 1e-12 and elapsed < 5,
            f"node mismatches={mismatches} max mean error={worst:.2e} time={elapsed:.2f}s")


def test_baseline_formulas():
    apl = random_graph_apl(100, 1000)
    cc = random_graph_cc(100, 1000)
    ok = abs(apl - 2.0) <= 1e-9 and abs(cc - 1000 / 9900) <= 1e-9
    verdict("baselines", ok, f"random_apl={apl!r} random_cc={cc!r}")


def test_apl_size_independence(sweep_reports):
    reports, elapsed = sweep_reports
    apls = [r.apl for r in reports]
    ratio = max(apls) / min(apls)
    ok = all(1.5 <= a <= 5.0 for a in apls) and ratio <= 1.5 and elapsed < 120
    detail = " ".join(f"{n}:{a:.3f}" for n, a in zip(SWEEP_SIZES, apls))
    verdict("apl-vs-size", ok, f"{detail} max/min={ratio:.3f} time={elapsed:.1f}s")


def test_apl_decreases_with_queries():
    t0 = time.perf_counter()
    result = run_experiment(ExperimentConfig(node_count=200, queries_per_node=15))
    elapsed = time.perf_counter() - t0
    windows = result.report.apl_windows
    xs = [float(s) for s, _ in windows]
    ys = [a for _, a in windows]
    slope = statistics.linear_regression(xs, ys).slope
    ok = ys[-1] <= ys[0] and slope <= 0 and elapsed < 30
    verdict("apl-vs-queries", ok,
            f"first={ys[0]:.3f} last={ys[-1]:.3f} slope={slope:.2e} windows={len(ys)} "
            f"time={elapsed:.1f}s")


def test_cc_grows_with_queries():
    t0 = time.perf_counter()
    result = run_experiment(ExperimentConfig(node_count=200, queries_per_node=15),
                            checkpoint_every=500)
    elapsed = time.perf_counter() - t0
    series = [cc for _, cc in result.cc_checkpoints]
    drops = sum(b < a for a, b in zip(series, series[1:]))
    ok = series[-1] >= 1.5 * series[0] and drops <= 1 and elapsed < 60
    verdict("cc-vs-queries", ok,
            f"series={[round(c, 4) for c in series]} growth={series[-1] / series[0]:.2f}x "
            f"drops={drops} time={elapsed:.1f}s")


def test_cc_exceeds_random(sweep_reports):
    reports, _ = sweep_reports
    ratios = [r.cc / random_graph_cc(r.node_count, r.edge_count) for r in reports]
    detail = " ".join(f"{n}:{x:.2f}" for n, x in zip(SWEEP_SIZES, ratios))
    verdict("cc-vs-random", min(ratios) >= 2.0, detail)


def test_protocol_invariants():
    t0 = time.perf_counter()
    rng = random.Random(7)
    violations = []
    queries = mutations = 0
    for run in range(50):
        cfg = ExperimentConfig(
            node_count=rng.randint(5, 100),
            queries_per_node=rng.randint(1, 6),
            n_r=rng.randint(1, 6),
            topic_count=rng.randint(2, 20),
            topics_per_peer=1,
            docs_per_peer_min=rng.randint(0, 3),
            docs_per_peer_max=rng.randint(3, 8),
            join_fanout=rng.randint(1, 5),
            doc_threshold=rng.uniform(0.2, 0.9),
            flood_threshold=rng.uniform(0.0, 0.9),
            ttl=rng.randint(2, 64),
            query_locality=rng.random(),
            noise=rng.uniform(0.0, 0.5),
            random_issuers=rng.random() < 0.5,
            seed=derive_seed(7, run),
        )
        monitors = []

        def on_query(net, trace, cfg=cfg):
            check_trace(trace, net, cfg.ttl)
            net.check_invariants()

        try:
            run_experiment(cfg, on_query=on_query,
                           network_hook=lambda net: monitors.append(MutationMonitor(net)))
        except (ProtocolViolation, AssertionError) as exc:
            violations.append(f"run {run}: {exc}")
        queries += cfg.node_count * cfg.queries_per_node
        mutations += monitors[0].mutations
    elapsed = time.perf_counter() - t0
    ok = not violations and elapsed < 120
    verdict("protocol-invariants", ok,
            f"runs=50 queries={queries} mutations={mutations} violations={len(violations)} "
            f"time={elapsed:.1f}s" + (f" first={violations[0]}" if violations else ""))


def test_determinism(tmp_path):
    cfg = ExperimentConfig(node_count=120, queries_per_node=10, n_r=3, seed=12345)
    blobs = []
    for i in range(2):
        result = run_experiment(cfg)
        m, t = tmp_path / f"m{i}.csv", tmp_path / f"t{i}.csv"
        write_metrics_csv(result.report, m)
        write_traces_csv(result.traces, t)
        blobs.append((m.read_bytes(), t.read_bytes()))
    verdict("determinism", blobs[0] == blobs[1],
            f"metrics {len(blobs[0][0])} bytes, traces {len(blobs[0][1])} bytes")
