"""Hyperparameter sweeps and per-query before/after reporting.

The fine-grained score of a candidate does not depend on alpha, k or the
normalization mode, so one score table computed at the deepest k is shared
by every cell of the grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .errors import ConfigError, ValidationError
from .fusion import NORM_MODES, FusionConfig, rerank_run
from .metrics import METRICS, compare_runs, evaluate_run
from .runio import Qrels, RankedRun
from .scoring import ScoreTable, score_candidates
from .store import EmbeddingStore, QueryEmbeddings


@dataclass
class SweepSpec:
    alphas: Sequence[float]
    ks: Sequence[int]
    normalizations: Sequence[str] = ("none",)
    metric: str = "infap"
    pooling: str = "max"

    def __post_init__(self):
        if not self.alphas or not self.ks or not self.normalizations:
            raise ConfigError("sweep lists must be nonempty")
        for a in self.alphas:
            if not 0.0 <= a <= 1.0:
                raise ConfigError(f"alpha {a} outside [0, 1]")
        for k in self.ks:
            if k < 1:
                raise ConfigError(f"k {k} must be positive")
        for norm in self.normalizations:
            if norm not in NORM_MODES:
                raise ConfigError(f"unknown normalization {norm!r}")
        if self.metric not in METRICS:
            raise ConfigError(f"unknown metric {self.metric!r}")


@dataclass(frozen=True)
class GridCell:
    alpha: float
    k: int
    normalization: str
    mean_metric: float


@dataclass
class SweepResult:
    metric: str
    cells: list[GridCell] = field(default_factory=list)

    @property
    def best(self) -> GridCell:
        # Ties resolve to the earliest cell in grid order.
        return max(self.cells, key=lambda c: c.mean_metric)

    def to_tsv(self) -> str:
        lines = [f"alpha\tk\tnorm\tmean_{self.metric}"]
        lines.extend(
            f"{c.alpha:g}\t{c.k}\t{c.normalization}\t{c.mean_metric:.6f}"
            for c in self.cells
        )
        b = self.best
        lines.append(
            f"# best alpha={b.alpha:g} k={b.k} norm={b.normalization} "
            f"mean_{self.metric}={b.mean_metric:.6f}"
        )
        return "".join(line + "\n" for line in lines)


def build_score_cache(
    run: RankedRun,
    store: EmbeddingStore,
    query_embs: QueryEmbeddings,
    k: int,
    pooling: str = "max",
) -> ScoreTable:
    """Fine-grained scores for each query's top-k candidates.

    Missing candidates are simply absent from the per-query map; the
    fusion missing policy decides what that means.
    """
    cache: ScoreTable = {}
    for qid, entries in run.entries.items():
        if qid not in query_embs:
            raise ValidationError(f"query {qid} has no embedding")
        candidates = [e.video_id for e in entries[: min(k, len(entries))]]
        scores, _missing = score_candidates(qid, candidates, store, query_embs, pooling)
        cache[qid] = scores
    return cache


def sweep(
    run: RankedRun,
    store: EmbeddingStore,
    query_embs: QueryEmbeddings,
    qrels: Qrels,
    spec: SweepSpec,
    jobs: int = 1,
) -> SweepResult:
    """Rerank and evaluate every (alpha, k, normalization) cell."""
    k_max = max(spec.ks)
    cache = build_score_cache(run, store, query_embs, k_max, spec.pooling)
    result = SweepResult(metric=spec.metric)
    for alpha in spec.alphas:
        for k in spec.ks:
            for norm in spec.normalizations:
                cfg = FusionConfig(
                    alpha=alpha, k=k, normalization=norm, pooling=spec.pooling
                )
                reranked, _diags = rerank_run(
                    run, store, query_embs, cfg, score_cache=cache, jobs=jobs
                )
                report = evaluate_run(reranked, qrels, spec.metric)
                result.cells.append(
                    GridCell(
                        alpha=alpha, k=k, normalization=norm, mean_metric=report.mean
                    )
                )
    return result


def per_query_report(
    before: RankedRun,
    after: RankedRun,
    qrels: Qrels,
    metric: str = "infap",
) -> str:
    """TSV of per-query deltas, worst regressions first, plus a summary row."""
    deltas = compare_runs(before, after, qrels, metric)
    rows = sorted(deltas, key=lambda d: (d.delta, d.query_id))
    lines = [f"query_id\tbefore_{metric}\tafter_{metric}\tdelta\trel_delta_pct\tflag"]
    improved = regressed = unchanged = 0
    for d in rows:
        if d.delta > 0:
            improved += 1
        elif d.delta < 0:
            regressed += 1
        else:
            unchanged += 1
        rel = f"{100.0 * d.rel_delta:+.1f}" if d.rel_delta is not None else "undef"
        flag = "near_zero_base" if d.near_zero_base else ""
        lines.append(
            f"{d.query_id}\t{d.before:.6f}\t{d.after:.6f}\t{d.delta:+.6f}\t{rel}\t{flag}"
        )
    lines.append(
        f"SUMMARY\timproved={improved}\tunchanged={unchanged}\tregressed={regressed}"
    )
    return "".join(line + "\n" for line in lines)
