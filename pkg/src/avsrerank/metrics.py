"""Ranking effectiveness: exact and inferred Average Precision.

Exact AP assumes complete judgments over the pool; documents outside the
pool count as nonrelevant. Inferred AP estimates AP when each stratum of
the pool was judged only in part: judged counts are inflated by the
inverse sampling rate of their stratum, which keeps the estimator unbiased
under uniform within-stratum sampling and reduces to exact AP when the
pool is fully judged.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .errors import ConfigError, EvaluationError, ValidationError
from .runio import Qrels, RankedRun

METRIC_AP = "ap"
METRIC_INFAP = "infap"
METRICS = (METRIC_AP, METRIC_INFAP)

DEFAULT_EPSILON = 1e-5

# Relative deltas on a base this small are reported but flagged.
NEAR_ZERO_BASE = 1e-3


def average_precision(
    ranked: Sequence[str], qrels: Qrels, query_id: str
) -> float:
    """AP of one ranked list: mean of P@k over ranks of relevant docs.

    R counts all judged-relevant videos for the query, retrieved or not.
    """
    judged = qrels.judgments.get(query_id)
    if judged is None:
        raise EvaluationError(f"query {query_id!r} has no judgments")
    n_relevant = sum(j.relevance for j in judged.values())
    if n_relevant == 0:
        raise EvaluationError(
            f"query {query_id!r} has no relevant videos; AP is undefined"
        )
    hits = 0
    total = 0.0
    for k, vid in enumerate(ranked, start=1):
        j = judged.get(vid)
        if j is not None and j.relevance == 1:
            hits += 1
            total += hits / k
    return total / n_relevant


def inf_ap(
    ranked: Sequence[str],
    qrels: Qrels,
    query_id: str,
    epsilon: float = DEFAULT_EPSILON,
) -> float:
    """Inferred AP over sampled, possibly stratified judgments.

    Each judged doc in stratum s stands for ``w_s = pool_size_s /
    judged_size_s`` pool docs. The expected precision above a relevant doc
    at rank k is built from those inflated counts with epsilon-smoothed
    per-stratum precision estimates, and the estimated relevant total
    ``R_hat = sum_s w_s * rel_s`` replaces R.
    """
    judged = qrels.judgments.get(query_id)
    if judged is None:
        raise EvaluationError(f"query {query_id!r} has no judgments")
    strata = qrels.query_strata(query_id)
    weights: dict[int, float] = {}
    for sid, st in strata.items():
        if st.judged_size == 0:
            raise ValidationError(
                f"query {query_id!r} stratum {sid}: judged size is zero"
            )
        weights[sid] = st.weight
    rel_total: dict[int, int] = {sid: 0 for sid in strata}
    for j in judged.values():
        if j.stratum_id not in weights:
            raise ValidationError(
                f"query {query_id!r}: judgment references unknown stratum {j.stratum_id}"
            )
        if j.relevance == 1:
            rel_total[j.stratum_id] += 1
    r_hat = sum(weights[sid] * n for sid, n in rel_total.items())
    if r_hat == 0:
        raise EvaluationError(
            f"query {query_id!r} has no relevant videos; infAP is undefined"
        )

    rel_above = {sid: 0 for sid in strata}
    nonrel_above = {sid: 0 for sid in strata}
    total = 0.0
    for k, vid in enumerate(ranked, start=1):
        j = judged.get(vid)
        if j is not None and j.relevance == 1:
            if k == 1:
                expected_p = 1.0
            else:
                above = 0.0
                for sid, w in weights.items():
                    judged_s = rel_above[sid] + nonrel_above[sid]
                    if judged_s == 0:
                        continue
                    pooled_s = w * judged_s
                    precision_s = (w * rel_above[sid] + epsilon) / (
                        w * judged_s + 2.0 * epsilon
                    )
                    above += pooled_s * precision_s
                expected_p = min((1.0 + above) / k, 1.0)
            total += weights[j.stratum_id] * expected_p
        if j is not None:
            if j.relevance == 1:
                rel_above[j.stratum_id] += 1
            else:
                nonrel_above[j.stratum_id] += 1
    return total / r_hat


@dataclass
class EvalReport:
    """Per-query metric values plus their unweighted mean."""

    metric_name: str
    per_query: dict[str, float] = field(default_factory=dict)
    mean: float = 0.0
    judged_coverage: dict[str, float] = field(default_factory=dict)
    skipped: list[str] = field(default_factory=list)

    def to_tsv(self) -> str:
        lines = [
            f"{qid}\t{self.metric_name}\t{value:.6f}"
            for qid, value in self.per_query.items()
        ]
        lines.append(f"MEAN\t{self.metric_name}\t{self.mean:.6f}")
        return "".join(line + "\n" for line in lines)


def evaluate_run(run: RankedRun, qrels: Qrels, metric: str = METRIC_INFAP) -> EvalReport:
    """Evaluate every query of the run that is judged and evaluable.

    Queries absent from the qrels, or with no relevant judgment, are
    excluded from the mean and listed in ``skipped``.
    """
    if metric not in METRICS:
        raise ConfigError(f"unknown metric {metric!r}")
    fn = average_precision if metric == METRIC_AP else inf_ap
    report = EvalReport(metric_name=metric)
    for qid in sorted(run.entries):
        ranked = run.ranked_ids(qid)
        judged = qrels.judgments.get(qid)
        if judged is None:
            report.skipped.append(qid)
            continue
        report.judged_coverage[qid] = (
            sum(1 for v in ranked if v in judged) / len(ranked) if ranked else 0.0
        )
        try:
            report.per_query[qid] = fn(ranked, qrels, qid)
        except EvaluationError:
            report.skipped.append(qid)
    if not report.per_query:
        raise EvaluationError("no overlapping evaluable queries between run and qrels")
    report.mean = sum(report.per_query.values()) / len(report.per_query)
    return report


@dataclass(frozen=True)
class QueryDelta:
    query_id: str
    before: float
    after: float
    delta: float
    rel_delta: float | None
    near_zero_base: bool


def compare_runs(
    before: RankedRun,
    after: RankedRun,
    qrels: Qrels,
    metric: str = METRIC_INFAP,
) -> list[QueryDelta]:
    """Per-query before/after deltas; both runs must cover the same queries.

    The relative delta is (after - before) / before, None when the base is
    exactly zero, and flagged when the base is below NEAR_ZERO_BASE.
    """
    qs_before = set(before.entries)
    qs_after = set(after.entries)
    if qs_before != qs_after:
        diff = sorted(qs_before.symmetric_difference(qs_after))
        raise ValidationError(f"query sets differ: {', '.join(diff)}")
    rep_before = evaluate_run(before, qrels, metric)
    rep_after = evaluate_run(after, qrels, metric)
    deltas: list[QueryDelta] = []
    for qid in sorted(set(rep_before.per_query) & set(rep_after.per_query)):
        b = rep_before.per_query[qid]
        a = rep_after.per_query[qid]
        deltas.append(
            QueryDelta(
                query_id=qid,
                before=b,
                after=a,
                delta=a - b,
                rel_delta=(a - b) / b if b != 0.0 else None,
                near_zero_base=b < NEAR_ZERO_BASE,
            )
        )
    return deltas
