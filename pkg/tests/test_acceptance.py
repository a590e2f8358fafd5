"""Acceptance suite: one test per criterion, each printing PASS or FAIL.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines as they complete. Everything here runs on synthetic fixtures.
"""

import io
import time

import numpy as np
import pytest
from threadpoolctl import threadpool_limits

from avsrerank.fusion import FusionConfig, rerank_run
from avsrerank.graphrerank import GraphConfig, build_affinity, spread_labels
from avsrerank.metrics import average_precision, evaluate_run, inf_ap
from avsrerank.runio import (
    Judgment,
    Qrels,
    RankedRun,
    Stratum,
    parse_run,
    write_run,
)
from avsrerank.scoring import score_video
from avsrerank.store import EmbeddingStore, store_from_bytes, store_to_bytes
from avsrerank.synthetic import planted_corpus, random_run, random_store_for_run

from conftest import build_qrels


def report(name: str, ok: bool, detail: str = "") -> None:
    print(f"[ACCEPTANCE] {name}: {'PASS' if ok else 'FAIL'} {detail}".rstrip())
    assert ok, f"{name} failed {detail}"


def test_fusion_endpoint_identities():
    """alpha=1 reproduces the input ordering, alpha=0 the pure S ordering."""
    from avsrerank.experiments import build_score_cache

    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    failures = 0
    for _ in range(100):
        n_q = int(rng.integers(1, 51))
        n_c = int(rng.integers(1, 201))
        run = random_run(rng, n_q, n_c)
        store, queries = random_store_for_run(
            rng, run, dim=8, max_frames=2, normalize=False
        )
        cache = build_score_cache(run, store, queries, k=n_c)
        base, _ = rerank_run(
            run, store, queries, FusionConfig(alpha=1.0, k=n_c), score_cache=cache
        )
        pure, _ = rerank_run(
            run, store, queries, FusionConfig(alpha=0.0, k=n_c), score_cache=cache
        )
        for qid in run.entries:
            if base.ranked_ids(qid) != run.ranked_ids(qid):
                failures += 1
            expected = [
                e.video_id
                for e in sorted(
                    run.entries[qid],
                    key=lambda e: (-cache[qid][e.video_id], e.rank, e.video_id),
                )
            ]
            if pure.ranked_ids(qid) != expected:
                failures += 1
    elapsed = time.perf_counter() - t0
    report(
        "fusion endpoint identities (100 random runs)",
        failures == 0 and elapsed < 10.0,
        f"(failures={failures}, {elapsed:.1f}s)",
    )


def test_weighted_fusion_hand_computed_fixture(hand_fixture):
    """Fused scores at the default alpha match the hand table to 1e-9."""
    run, store, queries, _, fused_expected = hand_fixture
    out, _ = rerank_run(run, store, queries, FusionConfig(alpha=0.4))
    got = {e.video_id: e.score for e in out.entries["q1"]}
    worst = max(abs(got[v] - fused_expected[v]) for v in fused_expected)
    report("weighted-sum hand fixture at alpha=0.4", worst < 1e-9, f"(max err {worst:.2e})")


def test_pooling_properties():
    """Monotonicity and frame-permutation invariance, 1000 cases each."""
    rng = np.random.default_rng(7)
    mono_failures = 0
    for _ in range(1000):
        dim = int(rng.integers(2, 12))
        n = int(rng.integers(1, 7))
        q = rng.standard_normal(dim)
        frames = rng.standard_normal((n, dim)).astype(np.float32)
        extra = rng.standard_normal((1, dim)).astype(np.float32)
        if score_video(q, np.vstack([frames, extra]), "max") < score_video(
            q, frames, "max"
        ):
            mono_failures += 1
    perm_failures = 0
    for _ in range(1000):
        dim = int(rng.integers(2, 12))
        n = int(rng.integers(1, 9))
        q = rng.standard_normal(dim)
        frames = rng.standard_normal((n, dim)).astype(np.float32)
        perm = rng.permutation(n)
        if score_video(q, frames, "max") != score_video(q, frames[perm], "max"):
            perm_failures += 1
        if abs(
            score_video(q, frames, "mean") - score_video(q, frames[perm], "mean")
        ) > 1e-12:
            perm_failures += 1
    report(
        "max-pooling monotonicity (1000 cases)",
        mono_failures == 0,
        f"(failures={mono_failures})",
    )
    report(
        "frame-permutation invariance (1000 cases)",
        perm_failures == 0,
        f"(failures={perm_failures})",
    )


def test_infap_reduces_to_exact_ap():
    """|infAP - AP| < 1e-3 on 200 fully judged random instances."""
    rng = np.random.default_rng(99)
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(5, 501))
        docs = [f"d{i}" for i in range(n)]
        n_rel = int(rng.integers(1, max(2, n // 2)))
        relevant = set(rng.choice(docs, size=n_rel, replace=False))
        qrels = build_qrels({"q": {d: int(d in relevant) for d in docs}})
        ranked = list(rng.permutation(docs))
        gap = abs(
            inf_ap(ranked, qrels, "q") - average_precision(ranked, qrels, "q")
        )
        worst = max(worst, gap)
    report("infAP reduction to exact AP (200 instances)", worst < 1e-3, f"(max gap {worst:.2e})")


def test_infap_unbiasedness_monte_carlo():
    """Mean infAP over 2000 judgment resamples tracks exact AP within 0.02."""
    rng = np.random.default_rng(4242)
    t0 = time.perf_counter()
    docs = [f"d{i:03d}" for i in range(200)]
    ranked = list(rng.permutation(docs))
    pool = sorted(rng.choice(docs, size=100, replace=False))
    relevant = set(rng.choice(pool, size=30, replace=False))
    complete = Qrels()
    complete.strata[("q", 0)] = Stratum(pool_size=100, judged_size=100)
    complete.judgments["q"] = {d: Judgment(0, int(d in relevant)) for d in pool}
    exact = average_precision(ranked, complete, "q")
    total = 0.0
    for _ in range(2000):
        judged = rng.choice(pool, size=40, replace=False)
        sampled = Qrels()
        sampled.strata[("q", 0)] = Stratum(pool_size=100, judged_size=40)
        sampled.judgments["q"] = {
            d: Judgment(0, int(d in relevant)) for d in judged
        }
        total += inf_ap(ranked, sampled, "q")
    elapsed = time.perf_counter() - t0
    bias = abs(total / 2000 - exact)
    report(
        "infAP unbiasedness Monte Carlo",
        bias <= 0.02 and elapsed < 60.0,
        f"(|bias|={bias:.4f}, {elapsed:.1f}s)",
    )


def test_label_spreading_solver_agreement():
    """Closed-form and iterative solvers agree to 1e-5 on 50 problems."""
    rng = np.random.default_rng(55)
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(4, 51))
        reprs = list(rng.standard_normal((n, 6)))
        s = build_affinity(reprs)
        y = np.zeros(n)
        y[: max(1, int(rng.integers(1, max(2, n // 2))))] = 1.0
        closed = spread_labels(s, y, GraphConfig(solver="closed_form"))
        # the fixed-point contraction ratio is ~alpha, so the step-size
        # tolerance must sit well below the 1e-5 agreement target
        iterative = spread_labels(
            s, y, GraphConfig(solver="iterative", max_iters=50000, tolerance=1e-9)
        )
        worst = max(worst, float(np.abs(closed - iterative).max()))
    report("label-spreading solver agreement (50 problems)", worst < 1e-5, f"(max diff {worst:.2e})")


def test_single_query_rerank_performance():
    """5000 candidates x 20 frames x dim 512 in <= 100 ms single-threaded."""
    rng = np.random.default_rng(3)
    videos = {
        f"v{i:04d}": rng.standard_normal((20, 512)).astype(np.float32)
        for i in range(5000)
    }
    store = EmbeddingStore(dim=512, videos=videos, validate=False)
    from avsrerank.store import QueryEmbeddings

    queries = QueryEmbeddings(
        dim=512, queries={"q": rng.standard_normal(512).astype(np.float32)}
    )
    run = RankedRun.from_scores(
        {"q": {vid: float(s) for vid, s in zip(videos, rng.uniform(size=5000))}}
    )
    cfg = FusionConfig(alpha=0.4, k=5000)
    with threadpool_limits(limits=1):
        rerank_run(run, store, queries, cfg)  # warm: norm cache, allocator
        best = min(
            _timed(lambda: rerank_run(run, store, queries, cfg)) for _ in range(5)
        )
    report(
        "single-query rerank latency (5000x20x512)",
        best <= 0.100,
        f"(best {best * 1e3:.1f} ms)",
    )


def _timed(fn) -> float:
    t0 = time.perf_counter()
    fn()
    return time.perf_counter() - t0


def test_format_round_trips_and_header_fuzz():
    """Write/read is bit-exact for valid data; corrupt headers all rejected."""
    rng = np.random.default_rng(11)
    run_failures = 0
    for _ in range(500):
        n_q = int(rng.integers(1, 6))
        n_c = int(rng.integers(1, 20))
        scores = {
            f"q{qi}": {
                f"v{rng.integers(10**6)}_{ci}": int(rng.integers(-(10**9), 10**9))
                / 1e6
                for ci in range(n_c)
            }
            for qi in range(n_q)
        }
        run = RankedRun.from_scores(scores, run_tag=f"tag{rng.integers(100)}")
        if parse_run(io.StringIO(write_run(run))) != run:
            run_failures += 1

    store_failures = 0
    for _ in range(500):
        dim = int(rng.integers(1, 9))
        videos = {}
        for vi in range(int(rng.integers(0, 7))):
            n = int(rng.integers(1, 4))
            videos[f"v{vi}_é{rng.integers(1000)}"] = rng.standard_normal(
                (n, dim)
            ).astype(np.float32)
        store = EmbeddingStore(
            dim=dim, videos=videos, normalized=False, validate=False
        )
        blob = store_to_bytes(store)
        if store_to_bytes(store_from_bytes(blob)) != blob:
            store_failures += 1

    # corruption fixture: unnormalized rows far from unit norm make every
    # header byte semantically load-bearing
    fixture = EmbeddingStore(
        dim=4,
        videos={"v1": (rng.standard_normal((2, 4)) * 9).astype(np.float32)},
        normalized=False,
    )
    blob = store_to_bytes(fixture)
    accepted = 0
    for _ in range(1000):
        pos = int(rng.integers(0, 24))
        new = int(rng.integers(0, 256))
        if new == blob[pos]:
            new = (new + 1) % 256
        corrupted = bytearray(blob)
        corrupted[pos] = new
        try:
            store_from_bytes(bytes(corrupted))
            accepted += 1
        except Exception:
            pass
    report(
        "run/store round-trips (1000 fuzzed instances)",
        run_failures == 0 and store_failures == 0,
        f"(run failures={run_failures}, store failures={store_failures})",
    )
    report(
        "corrupted store headers rejected (1000 cases)",
        accepted == 0,
        f"(wrongly accepted={accepted})",
    )


def test_end_to_end_planted_corpus():
    """Reranking at alpha=0.4 strictly improves mean AP on >= 95/100 seeds."""
    wins = 0
    for seed in range(100):
        corpus = planted_corpus(seed)
        before = evaluate_run(corpus.run, corpus.qrels, "ap").mean
        reranked, _ = rerank_run(
            corpus.run, corpus.store, corpus.query_embs, FusionConfig(alpha=0.4)
        )
        after = evaluate_run(reranked, corpus.qrels, "ap").mean
        if after > before:
            wins += 1
    report("end-to-end planted-corpus improvement", wins >= 95, f"(wins={wins}/100)")
