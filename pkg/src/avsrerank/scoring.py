"""Frame-query similarity and pooling into per-video scores.

A video's fine-grained score is the pooled cosine similarity between the
query vector and each of the video's frame embeddings. Max pooling is the
default; mean pooling exists as an ablation. Dot products and norms are
accumulated in float64 even though stores hold float32.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .store import EmbeddingStore, QueryEmbeddings

POOL_MAX = "max"
POOL_MEAN = "mean"
POOLING_MODES = (POOL_MAX, POOL_MEAN)

# query_id -> video_id -> pooled fine-grained score
ScoreTable = dict[str, dict[str, float]]


def check_pooling(mode: str) -> str:
    if mode not in POOLING_MODES:
        raise ValidationError(f"unknown pooling mode {mode!r}")
    return mode


def cosine_sim(a, b) -> float:
    """Cosine similarity of two vectors, clamped to [-1, 1].

    The clamp absorbs the rounding that lets normalized inputs stray a few
    ulps outside the bound.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValidationError(f"length mismatch: {a.shape} vs {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValidationError("cosine of a zero-norm vector is undefined")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def pool_frames(frame_scores, mode: str = POOL_MAX) -> float:
    """Aggregate per-frame scores: maximum or arithmetic mean."""
    check_pooling(mode)
    scores = np.asarray(frame_scores, dtype=np.float64)
    if scores.size == 0:
        raise ValidationError("cannot pool an empty score list")
    if mode == POOL_MAX:
        return float(scores.max())
    return float(scores.mean())


def _frame_cosines(
    query64: np.ndarray, qnorm: float, frames: np.ndarray, norms64: np.ndarray
) -> np.ndarray:
    if (norms64 == 0.0).any():
        raise ValidationError("zero-norm frame embedding")
    # einsum keeps each row's reduction independent of the matrix height,
    # unlike BLAS gemv, so per-frame scores never move when frames are
    # added; max pooling is then exactly monotone.
    dots = np.einsum("ij,j->i", frames.astype(np.float64), query64)
    return np.clip(dots / (norms64 * qnorm), -1.0, 1.0)


def score_video(query_vec, frames: np.ndarray, mode: str = POOL_MAX) -> float:
    """Pooled cosine similarity between one query and one frame matrix."""
    check_pooling(mode)
    q = np.asarray(query_vec, dtype=np.float64)
    frames = np.asarray(frames)
    if frames.ndim != 2 or frames.shape[1] != q.shape[0]:
        raise ValidationError(
            f"frame matrix {frames.shape} does not match query length {q.shape[0]}"
        )
    qnorm = float(np.linalg.norm(q))
    if qnorm == 0.0:
        raise ValidationError("cosine of a zero-norm vector is undefined")
    f64 = frames.astype(np.float64)
    norms = np.sqrt(np.einsum("ij,ij->i", f64, f64))
    return pool_frames(_frame_cosines(q, qnorm, frames, norms), mode)


def score_candidates(
    query_id: str,
    candidates,
    store: EmbeddingStore,
    query_embs: QueryEmbeddings,
    mode: str = POOL_MAX,
) -> tuple[dict[str, float], list[str]]:
    """Score every candidate present in the store; collect the absent ones.

    Returns (video_id -> pooled score, missing ids in candidate order).
    Absence is reported, not defaulted; the missing-embedding policy
    belongs to the caller.
    """
    check_pooling(mode)
    qvec = query_embs.get(query_id)
    if qvec is None:
        raise KeyError(f"no embedding for query {query_id!r}")
    q64 = qvec.astype(np.float64)
    qnorm = float(np.linalg.norm(q64))
    if qnorm == 0.0:
        raise ValidationError(f"query {query_id!r}: zero-norm embedding")
    scores: dict[str, float] = {}
    missing: list[str] = []
    use_max = mode == POOL_MAX
    videos = store.videos
    row_norms = store.row_norms
    for vid in candidates:
        frames = videos.get(vid)
        if frames is None:
            missing.append(vid)
            continue
        norms = row_norms(vid)
        if not norms.all():
            raise ValidationError(f"video {vid!r}: zero-norm frame embedding")
        if use_max:
            # max commutes with the positive rescale and the clamp, so
            # both are applied once to the pooled scalar
            dots = np.einsum("ij,j->i", frames.astype(np.float64), q64)
            dots /= norms
            scores[vid] = min(1.0, max(-1.0, float(dots.max()) / qnorm))
        else:
            cos = _frame_cosines(q64, qnorm, frames, norms)
            scores[vid] = float(cos.mean())
    return scores, missing
