"""Label-spreading baseline: transductive reranking over a candidate graph.

Nodes are the top-k candidates of one query, represented by their
mean-pooled, L2-normalized frame embeddings. Edges carry a Gaussian kernel
of pairwise Euclidean distance, symmetrically normalized. The top-m
candidates of the initial ranking are seeded positive and propagated:

    F* = (1 - alpha) * (I - alpha * S)^-1 * Y

The closed-form solve is exact and serves as the oracle; the fixed-point
iteration F <- alpha*S*F + (1-alpha)*Y scales to large k.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .errors import ConfigError, ValidationError
from .runio import RankedRun, RunEntry
from .store import EmbeddingStore

SOLVERS = ("closed_form", "iterative")


@dataclass
class GraphConfig:
    propagation_alpha: float = 0.99
    seeds: int = 10
    sigma: float | None = None  # None selects the median heuristic
    solver: str = "closed_form"
    max_iters: int = 1000
    tolerance: float = 1e-6

    def __post_init__(self):
        if not 0.0 < self.propagation_alpha < 1.0:
            raise ConfigError(
                f"propagation_alpha must be strictly inside (0, 1), got {self.propagation_alpha}"
            )
        if self.seeds < 1:
            raise ConfigError(f"seeds must be positive, got {self.seeds}")
        if self.sigma is not None and self.sigma <= 0:
            raise ConfigError(f"sigma must be positive, got {self.sigma}")
        if self.solver not in SOLVERS:
            raise ConfigError(f"unknown solver {self.solver!r}")
        if self.max_iters < 1:
            raise ConfigError(f"max_iters must be positive, got {self.max_iters}")
        if self.tolerance <= 0:
            raise ConfigError(f"tolerance must be positive, got {self.tolerance}")


class ConvergenceError(ValidationError):
    """Iterative solver hit max_iters; carries the last residual."""

    def __init__(self, iters: int, residual: float):
        super().__init__(
            f"label spreading did not converge in {iters} iterations "
            f"(last max-abs change {residual:.3e})"
        )
        self.iters = iters
        self.residual = residual


def video_repr(frames: np.ndarray) -> np.ndarray:
    """One vector per video: mean of frame rows, L2-normalized, float64."""
    frames = np.asarray(frames)
    if frames.ndim != 2 or frames.shape[0] < 1:
        raise ValidationError("video_repr expects a nonempty frame matrix")
    mean = frames.astype(np.float64).mean(axis=0)
    norm = np.linalg.norm(mean)
    if norm == 0.0:
        raise ValidationError("mean frame embedding has zero norm")
    return mean / norm


def build_affinity(reprs: Sequence[np.ndarray], sigma: float | None = None) -> np.ndarray:
    """Symmetrically normalized Gaussian affinity with zero diagonal.

    W_ij = exp(-||x_i - x_j||^2 / (2 sigma^2)), W_ii = 0, then
    S = D^-1/2 W D^-1/2. With sigma None, sigma is the median pairwise
    distance (1.0 when that median is 0).
    """
    x = np.asarray(reprs, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValidationError("affinity needs at least two nodes")
    dists = pdist(x)
    if sigma is None:
        sigma = float(np.median(dists))
        if sigma == 0.0:
            sigma = 1.0
    w = squareform(np.exp(-(dists**2) / (2.0 * sigma**2)))
    deg = w.sum(axis=1)
    inv_sqrt = np.where(deg > 0.0, 1.0 / np.sqrt(np.where(deg > 0.0, deg, 1.0)), 0.0)
    return w * inv_sqrt[:, None] * inv_sqrt[None, :]


def spread_labels(s: np.ndarray, y: np.ndarray, cfg: GraphConfig) -> np.ndarray:
    """Solve F* for a prepared affinity matrix and seed vector."""
    a = cfg.propagation_alpha
    if cfg.solver == "closed_form":
        n = s.shape[0]
        return (1.0 - a) * np.linalg.solve(np.eye(n) - a * s, y)
    f = y.astype(np.float64).copy()
    residual = np.inf
    for _ in range(cfg.max_iters):
        nxt = a * (s @ f) + (1.0 - a) * y
        residual = float(np.abs(nxt - f).max())
        f = nxt
        if residual < cfg.tolerance:
            return f
    raise ConvergenceError(cfg.max_iters, residual)


def label_spread(
    entries: Sequence[RunEntry],
    store: EmbeddingStore,
    cfg: GraphConfig | None = None,
) -> dict[str, float]:
    """Propagate top-m pseudo-labels over one query's candidate slice.

    Entries must be in rank order; every candidate must be in the store
    (there is no floor policy here). Returns video_id -> propagated score.
    """
    cfg = cfg or GraphConfig()
    if len(entries) < 2:
        raise ValidationError("label spreading needs at least two candidates")
    missing = [e.video_id for e in entries if e.video_id not in store]
    if missing:
        raise ValidationError(
            f"candidates missing from store: {', '.join(missing)}"
        )
    reprs = [video_repr(store.get_frames(e.video_id)) for e in entries]
    s = build_affinity(reprs, cfg.sigma)
    y = np.zeros(len(entries))
    y[: min(cfg.seeds, len(entries))] = 1.0
    f = spread_labels(s, y, cfg)
    return {e.video_id: float(v) for e, v in zip(entries, f)}


def label_spread_run(
    run: RankedRun,
    store: EmbeddingStore,
    cfg: GraphConfig | None = None,
    k: int | None = None,
) -> RankedRun:
    """Rerank each query's top-k slice by propagated scores.

    Ties are broken by the original rank; the output keeps only the slice.
    """
    cfg = cfg or GraphConfig()
    out = RankedRun(run_tag=run.run_tag, entries={})
    for qid in sorted(run.entries):
        entries = run.entries[qid]
        top = entries[: min(k, len(entries))] if k is not None else list(entries)
        scores = label_spread(top, store, cfg)
        order = sorted(top, key=lambda e: (-scores[e.video_id], e.rank, e.video_id))
        out.entries[qid] = [
            RunEntry(video_id=e.video_id, score=scores[e.video_id], rank=r)
            for r, e in enumerate(order, start=1)
        ]
    return out
