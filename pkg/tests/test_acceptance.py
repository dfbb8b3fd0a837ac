"""Exit criteria, one printed PASS/FAIL line each.

Run with ``pytest -m acceptance -s`` to see the lines as they happen; they are
also repeated in the terminal summary. ``python tests/test_acceptance.py``
runs the same checks without pytest.
"""

from __future__ import annotations

import itertools
import random
import time

import numpy as np
import pytest

from crdt_coord.crdt import Document
from crdt_coord.harness import report
from crdt_coord.harness.experiment import ExperimentConfig, run_experiment
from crdt_coord.harness.fuzz import sec_fuzz
from crdt_coord.harness.properties import (
    burst_latency,
    claim_race,
    equivalence_run,
    liveness_run,
    observation_run,
)
from crdt_coord.harness.stats import cohens_dz, normalized_time, wilcoxon_signed_rank

from conftest import CRITERIA_LINES
from oracles import cohens_dz_plain, rga_tree_text, wilcoxon_bruteforce

pytestmark = pytest.mark.acceptance


def emit(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}"
    CRITERIA_LINES.append(line)
    print(line, flush=True)


def test_criterion_1_sec_convergence():
    t0 = time.perf_counter()
    trials = sec_fuzz(10_000)
    elapsed = time.perf_counter() - t0
    bad = [t.seed for t in trials if not t.converged]
    shapes = {t.replicas for t in trials}
    ok = not bad and len(trials) == 10_000
    emit(1, ok, f"{len(trials) - len(bad)}/{len(trials)} fuzz trials converged "
                f"(replicas {min(shapes)}-{max(shapes)}, ops {min(t.ops for t in trials)}-"
                f"{max(t.ops for t in trials)}) in {elapsed:.1f}s")
    assert ok, bad[:10]


def test_criterion_2_claim_safety():
    races = [claim_race(seed) for seed in range(10_000)]
    violations = [(r.seed, v) for r in races for v in r.violations]
    items = sum(r.todos for r in races)
    transient = sum(r.transient_double_won for r in races)
    slow = [r for r in races if r.max_latency_us > r.sync_delay_us]
    fast = [r for r in races if r.max_latency_us <= r.sync_delay_us]

    def rate(group):
        n = sum(r.todos for r in group)
        return f"{sum(r.transient_double_won for r in group) / n:.1%}" if n else "n/a"

    ok = not violations
    emit(2, ok, f"{len(races)} races, {len(violations)} converged double-assignments; "
                f"transient double-Won on {transient}/{items} items ({transient / items:.1%}): "
                f"{rate(fast)} when latency p95 <= syncDelay, {rate(slow)} when above")
    assert ok, violations[:10]


def test_criterion_3_liveness_under_crashes():
    runs = [liveness_run(seed) for seed in range(1_000)]
    failed = [r.seed for r in runs if not r.ok]
    crashed = sum(len(r.crashed) for r in runs)
    worst = max((r.done_at_us or 0) / r.bound_us for r in runs)
    ok = not failed
    emit(3, ok, f"{len(runs) - len(failed)}/{len(runs)} crash runs finished every todo within bound "
                f"({crashed} agents crashed; worst finish at {worst:.0%} of bound)")
    assert ok, failed[:10]


def test_criterion_4_convergence_latency():
    samples = []
    unconverged = 0
    for seed in range(10):
        run = burst_latency(seed, bursts=100)
        samples.extend(run.samples)
        unconverged += run.unconverged
    total = len(samples) + unconverged
    lag_ms = np.array([s.lag_us for s in samples]) / 1000
    span_ms = np.array([s.span_us for s in samples]) / 1000
    within = int((lag_ms <= 200).sum())
    ok = total == 1000 and within >= 0.95 * total

    def dist(xs):
        q = np.quantile(xs, [0.5, 0.9, 0.95, 0.99, 1.0])
        return "p50={:.1f} p90={:.1f} p95={:.1f} p99={:.1f} max={:.1f} ms".format(*q)

    emit(4, ok, f"{within}/{total} bursts converged within 200 ms of last delivery; "
                f"lag {dist(lag_ms)}; burst start to convergence {dist(span_ms)}")
    assert ok


def test_criterion_5_observation_overhead():
    bad = []
    checked = 0
    for n in range(1, 6):
        for seed in range(100):
            for shared in (False, True):
                r = observation_run(seed, n, shared_doc=shared)
                checked += 1
                if not (r.per_doc_ok and r.callbacks == n * r.remote_ops):
                    bad.append((n, seed, shared, r.callbacks, r.remote_ops))
    ok = not bad
    emit(5, ok, f"callbacks == N x U exactly in {checked - len(bad)}/{checked} runs "
                f"(N=1..5, 100 seeds, separate and shared observers)")
    assert ok, bad[:10]


def _same_index_case(n: int, base: str, index: int, seed: int):
    rng = random.Random(seed)
    origin = Document(100)
    if base:
        origin.text_insert(0, base)
    snap = origin.encode_update_since({}).encode()
    packets, inserts = [], []
    for replica in range(1, n + 1):
        doc = Document(replica)
        doc.apply_update(snap)
        for _ in range(rng.randint(0, 3)):
            doc.log_append("skew")
        text = "".join(rng.choice("abcdefgh") for _ in range(rng.randint(1, 3)))
        pkt = doc.text_insert(index, text)
        op = pkt.ops[0]
        inserts.append((tuple(op.id), tuple(op.origin), text))
        packets.append(pkt.encode())
    for op in origin.encode_update_since({}).ops:
        if hasattr(op, "content"):
            inserts.append((tuple(op.id), tuple(op.origin), op.content))
    return snap, packets, rga_tree_text(inserts, set())


def test_criterion_6_deterministic_interleaving():
    # the two-replica example
    a, b = Document(1), Document(2)
    pa, pb = a.text_insert(0, "abc").encode(), b.text_insert(0, "xyz").encode()
    texts = set()
    for order in itertools.permutations([pa, pb]):
        d = Document(3)
        for p in order:
            d.apply_update(p)
        texts.add(d.text_read())
    example_ok = len(texts) == 1

    cases = mismatches = 0
    for n in range(2, 5):
        for seed in range(10):
            base = "" if seed % 2 == 0 else "0123"
            snap, packets, expected = _same_index_case(n, base, 0 if not base else 2, seed)
            for order in itertools.permutations(packets):
                d = Document(50)
                d.apply_update(snap)
                for p in order:
                    d.apply_update(p)
                cases += 1
                mismatches += d.text_read() != expected
    ok = example_ok and mismatches == 0
    emit(6, ok, f"two-replica example gives {texts!r} in both orders; "
                f"{cases - mismatches}/{cases} permutations of 2-4 concurrent same-index inserts match the tree oracle")
    assert ok


PUBLISHED = [
    (45.47, 12_930, 3.52), (35.89, 11_509, 3.12), (56.13, 17_196, 3.26), (52.15, 18_885, 2.76),
    (69.33, 18_285, 3.79), (64.32, 16_028, 4.01), (56.27, 14_952, 3.76), (76.47, 27_195, 2.81),
    (64.43, 19_194, 3.36), (83.19, 37_922, 2.19), (66.39, 18_389, 3.61), (92.57, 53_068, 1.74),
]


def test_criterion_7_statistics_oracles():
    cells = sum(abs(normalized_time(t, c).value - want) <= 0.01 for t, c, want in PUBLISHED)
    rng = random.Random(7)
    w_ok = d_ok = 0
    for _ in range(100):
        n = rng.randint(6, 40)
        pairs = []
        while len({a - b for a, b in pairs if a != b}) < 2 or sum(a != b for a, b in pairs) < 6:
            pairs = [(round(rng.gauss(60, 12), 1), round(rng.gauss(58, 12), 1)) for _ in range(n)]
        w_ref, p_ref = wilcoxon_bruteforce(pairs)
        res = wilcoxon_signed_rank(pairs)
        w_ok += abs(res.w - w_ref) <= 1e-9 and abs(res.p - p_ref) <= 1e-6
        d_ok += abs(cohens_dz(pairs).value - cohens_dz_plain(pairs)) <= 1e-9
    ok = cells == 12 and w_ok == 100 and d_ok == 100
    emit(7, ok, f"normalized time {cells}/12 published cells within 0.01; "
                f"Wilcoxon {w_ok}/100 and d_z {d_ok}/100 datasets match brute-force oracles")
    assert ok


def test_criterion_8_sequential_equivalence():
    runs = [equivalence_run(seed) for seed in range(500)]
    bad = [r.seed for r in runs if not r.ok]
    ok = not bad
    emit(8, ok, f"{len(runs) - len(bad)}/{len(runs)} coupling-0 scripts give identical parallel and "
                f"sequential text after marker replacement")
    assert ok, bad[:10]


def test_criterion_9_live_llm_results_not_reproduced(tmp_path):
    cfg = ExperimentConfig(script="tic-tac-toe", runs=2)
    records = run_experiment(ExperimentConfig(**{**cfg.to_dict(), "mode": "seq"}))
    records += run_experiment(ExperimentConfig(**{**cfg.to_dict(), "mode": "par"}))
    summary = report.write_report(records, tmp_path)
    entry = summary["tasks"]["tic-tac-toe"]
    schema_ok = all(k in entry and entry[k] is None for k in report.LIVE_ONLY)
    schema_ok = schema_ok and {"responseS", "sPerKchar", "chars"} <= set(entry["modes"]["parallel"])
    schema_ok = schema_ok and "wilcoxon" in entry["comparison"] and "cohensDz" in entry["comparison"]
    emit(9, schema_ok, "NOT REPRODUCIBLE AT DESK SCALE: live-model timing deltas, quality scores, "
                       "semantic-conflict rates and the outlier fraction need real model calls; "
                       f"the scripted harness emits the same report schema with {', '.join(report.LIVE_ONLY)} left null")
    assert schema_ok


if __name__ == "__main__":
    import inspect
    import tempfile
    from pathlib import Path

    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                if inspect.signature(fn).parameters:
                    with tempfile.TemporaryDirectory() as d:
                        fn(Path(d))
                else:
                    fn()
            except AssertionError:
                pass
