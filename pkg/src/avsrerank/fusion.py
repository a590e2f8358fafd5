"""Weighted late fusion of base-model scores with fine-grained scores.

The fused score of a candidate is ``alpha * m + (1 - alpha) * s`` where m
is the base retrieval model's score and s the pooled frame-query score.
Normalization (off by default, matching the raw formula) is applied per
query and independently to the two columns.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import ConfigError, ValidationError
from .runio import RankedRun, RunEntry
from .scoring import POOLING_MODES, score_candidates
from .store import EmbeddingStore, QueryEmbeddings

NORM_MODES = ("none", "minmax", "zscore")
MISSING_POLICIES = ("error", "floor")


@dataclass
class FusionConfig:
    """Fusion hyperparameters; defaults follow the reference protocol."""

    alpha: float = 0.4
    k: int = 1000
    normalization: str = "none"
    pooling: str = "max"
    missing_policy: str = "error"

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.k < 1:
            raise ConfigError(f"k must be positive, got {self.k}")
        if self.normalization not in NORM_MODES:
            raise ConfigError(f"unknown normalization {self.normalization!r}")
        if self.pooling not in POOLING_MODES:
            raise ConfigError(f"unknown pooling mode {self.pooling!r}")
        if self.missing_policy not in MISSING_POLICIES:
            raise ConfigError(f"unknown missing policy {self.missing_policy!r}")


@dataclass
class RerankDiagnostics:
    """Per-query bookkeeping emitted alongside a reranked run."""

    missing: dict[str, list[str]] = field(default_factory=dict)
    scored: dict[str, int] = field(default_factory=dict)

    @property
    def total_missing(self) -> int:
        return sum(len(v) for v in self.missing.values())


def normalize_scores(
    scores: Mapping[str, float], mode: str = "none"
) -> dict[str, float]:
    """Rescale a per-query score column.

    minmax maps to [0, 1] (all-equal input maps to 0.5 everywhere); zscore
    standardizes (zero spread maps to 0 everywhere); none is the identity.
    """
    if mode not in NORM_MODES:
        raise ConfigError(f"unknown normalization {mode!r}")
    if mode == "none":
        return dict(scores)
    if not scores:
        raise ValidationError("cannot normalize an empty score map")
    values = np.array(list(scores.values()), dtype=np.float64)
    if mode == "minmax":
        lo, hi = values.min(), values.max()
        if hi == lo:
            return {k: 0.5 for k in scores}
        return {k: float((v - lo) / (hi - lo)) for k, v in scores.items()}
    mean = values.mean()
    std = values.std()
    if std == 0.0:
        return {k: 0.0 for k in scores}
    return {k: float((v - mean) / std) for k, v in scores.items()}


def fuse(m_score: float, s_score: float, alpha: float) -> float:
    """The weighted sum alpha * m + (1 - alpha) * s."""
    if not 0.0 <= alpha <= 1.0:
        raise ConfigError(f"alpha must be in [0, 1], got {alpha}")
    return alpha * m_score + (1.0 - alpha) * s_score


def _rerank_query(
    qid: str,
    entries: list[RunEntry],
    store: EmbeddingStore,
    query_embs: QueryEmbeddings,
    cfg: FusionConfig,
    s_cache: Mapping[str, float] | None,
) -> tuple[list[RunEntry], list[str]]:
    top = entries[: min(cfg.k, len(entries))]
    if not top:
        return [], []
    candidates = [e.video_id for e in top]
    if s_cache is not None:
        s_raw = {v: s_cache[v] for v in candidates if v in s_cache}
        missing = [v for v in candidates if v not in s_cache]
    else:
        s_raw, missing = score_candidates(
            qid, candidates, store, query_embs, cfg.pooling
        )
    if missing and cfg.missing_policy == "error":
        raise ValidationError(
            f"query {qid}: candidates missing from store: {', '.join(missing)}"
        )
    if not s_raw:
        raise ValidationError(
            f"query {qid}: no candidate has an embedding; cannot apply floor policy"
        )
    m_norm = normalize_scores(
        {e.video_id: e.score for e in top}, cfg.normalization
    )
    s_norm = normalize_scores(s_raw, cfg.normalization)
    floor = min(s_norm.values())
    fused: list[tuple[float, int, str]] = []
    for e in top:
        s_val = s_norm.get(e.video_id, floor)
        f = fuse(m_norm[e.video_id], s_val, cfg.alpha)
        fused.append((f, e.rank, e.video_id))
    fused.sort(key=lambda t: (-t[0], t[1], t[2]))
    reranked = [
        RunEntry(video_id=vid, score=f, rank=r)
        for r, (f, _orig, vid) in enumerate(fused, start=1)
    ]
    return reranked, missing


def rerank_run(
    run: RankedRun,
    store: EmbeddingStore,
    query_embs: QueryEmbeddings,
    cfg: FusionConfig | None = None,
    score_cache: Mapping[str, Mapping[str, float]] | None = None,
    jobs: int = 1,
) -> tuple[RankedRun, RerankDiagnostics]:
    """Re-score and re-sort the top-k of every query.

    Per query: slice the top min(k, n) entries, compute (or look up via
    ``score_cache``) the fine-grained scores, normalize the two columns
    independently, fuse, and sort descending with ties broken by original
    rank then video id. The output keeps only the reranked slice; queries
    appear in sorted id order. Queries run independently, so ``jobs`` does
    not change the result.
    """
    cfg = cfg or FusionConfig()
    for qid in run.entries:
        needs_scoring = score_cache is None or qid not in score_cache
        if needs_scoring and qid not in query_embs:
            raise ValidationError(f"query {qid} has no embedding")
    qids = sorted(run.entries)

    def work(qid: str):
        cache = score_cache.get(qid) if score_cache is not None else None
        return _rerank_query(qid, run.entries[qid], store, query_embs, cfg, cache)

    if jobs > 1 and len(qids) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(work, qids))
    else:
        results = [work(qid) for qid in qids]

    out = RankedRun(run_tag=run.run_tag, entries={})
    diags = RerankDiagnostics()
    for qid, (reranked, missing) in zip(qids, results):
        out.entries[qid] = reranked
        diags.scored[qid] = len(reranked) - len(missing)
        if missing:
            diags.missing[qid] = missing
    return out, diags
