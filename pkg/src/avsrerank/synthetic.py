"""Synthetic fixtures: random runs/stores and a planted retrieval corpus.

The planted corpus models the situation the reranker targets: each
relevant video hides one frame that is highly similar to the query among
otherwise noisy frames, while the base model provides a decent but noisy
holistic ranking. Judgments are complete (one fully judged stratum per
query), so exact AP is well defined.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .runio import Judgment, Qrels, RankedRun, Stratum
from .store import EmbeddingStore, QueryEmbeddings, store_from_records


def random_run(
    rng: np.random.Generator,
    n_queries: int,
    n_candidates: int,
    run_tag: str = "synthetic",
) -> RankedRun:
    """A canonical run with uniform random scores."""
    values = rng.uniform(-1.0, 1.0, size=(n_queries, n_candidates)).tolist()
    scores = {
        f"q{qi}": {
            f"v{qi}_{ci}": values[qi][ci] for ci in range(n_candidates)
        }
        for qi in range(n_queries)
    }
    return RankedRun.from_scores(scores, run_tag=run_tag)


def random_store_for_run(
    rng: np.random.Generator,
    run: RankedRun,
    dim: int = 16,
    max_frames: int = 4,
    normalize: bool = True,
) -> tuple[EmbeddingStore, QueryEmbeddings]:
    """Gaussian embeddings covering every candidate and query of a run."""
    vids = [e.video_id for qid in run.entries for e in run.entries[qid]]
    counts = rng.integers(1, max_frames + 1, size=len(vids))
    block = rng.standard_normal((int(counts.sum()), dim)).astype(np.float32)
    if normalize:
        block /= np.linalg.norm(block.astype(np.float64), axis=1, keepdims=True).astype(
            np.float32
        )
    bounds = np.cumsum(counts)[:-1]
    videos = dict(zip(vids, np.split(block, bounds)))
    # valid by construction; skipping validation keeps property-test
    # harnesses that build thousands of stores fast
    store = EmbeddingStore(dim=dim, videos=videos, normalized=normalize, validate=False)
    queries = {
        qid: _unit(rng.standard_normal(dim)).astype(np.float32)
        for qid in run.entries
    }
    return store, QueryEmbeddings(dim=dim, queries=queries)


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


@dataclass
class PlantedCorpus:
    run: RankedRun
    store: EmbeddingStore
    query_embs: QueryEmbeddings
    qrels: Qrels


def planted_corpus(
    seed: int,
    n_queries: int = 8,
    n_candidates: int = 60,
    n_relevant: int = 6,
    dim: int = 32,
    n_frames: int = 6,
    planted_weight: float = 0.8,
    base_noise: float = 0.8,
    plant_rate: float = 1.0,
) -> PlantedCorpus:
    """Build a corpus where frame-level evidence improves a noisy base run.

    Every relevant video gets (with probability ``plant_rate``) one frame
    drawn toward the query direction with weight ``planted_weight``; all
    other frames are isotropic noise. The base score of a candidate is its
    true relevance plus Gaussian noise of scale ``base_noise``.
    """
    rng = np.random.default_rng(seed)
    records: list[tuple[str, np.ndarray]] = []
    queries: dict[str, np.ndarray] = {}
    run_scores: dict[str, dict[str, float]] = {}
    qrels = Qrels()
    for qi in range(n_queries):
        qid = f"q{qi:03d}"
        qvec = _unit(rng.standard_normal(dim))
        queries[qid] = qvec.astype(np.float32)
        run_scores[qid] = {}
        qrels.strata[(qid, 0)] = Stratum(
            pool_size=n_candidates, judged_size=n_candidates
        )
        qrels.judgments[qid] = {}
        for ci in range(n_candidates):
            vid = f"{qid}_v{ci:04d}"
            relevant = ci < n_relevant
            frames = rng.standard_normal((n_frames, dim))
            frames /= np.linalg.norm(frames, axis=1, keepdims=True)
            if relevant and rng.uniform() < plant_rate:
                mix = planted_weight * qvec + (
                    np.sqrt(1.0 - planted_weight**2)
                ) * _unit(rng.standard_normal(dim))
                frames[int(rng.integers(n_frames))] = _unit(mix)
            records.append((vid, frames))
            base = float(relevant) + rng.normal(0.0, base_noise)
            run_scores[qid][vid] = base
            qrels.judgments[qid][vid] = Judgment(
                stratum_id=0, relevance=int(relevant)
            )
    store = store_from_records(records, dim=dim, normalize=True)
    run = RankedRun.from_scores(run_scores, run_tag="planted-base")
    return PlantedCorpus(
        run=run,
        store=store,
        query_embs=QueryEmbeddings(dim=dim, queries=queries),
        qrels=qrels,
    )
