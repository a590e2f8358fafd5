"""TREC-style run and qrels file I/O.

Run files are 6-column whitespace-separated text::

    qid Q0 videoid rank score runtag

Qrels files carry binary judgments plus per-stratum pool bookkeeping::

    #stratum q1 0 100 40     <- header: query, stratum id, pool size, judged size
    q1 0 v123 1              <- judgment: query, stratum id, video, relevance

Parsed structures are canonical and immutable by convention: within each
query, entries are sorted by score descending (ties broken by input order,
then video id) and ranks are rewritten 1..n. Input rank fields are advisory;
scores are authoritative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import ParseError, ValidationError

DEFAULT_RUN_TAG = "run"


@dataclass(frozen=True)
class RunEntry:
    video_id: str
    score: float
    rank: int


@dataclass
class RankedRun:
    """Per-query ordered candidate lists with scores."""

    run_tag: str = DEFAULT_RUN_TAG
    entries: dict[str, list[RunEntry]] = field(default_factory=dict)

    @property
    def query_ids(self) -> list[str]:
        return list(self.entries.keys())

    def depth(self, query_id: str) -> int:
        return len(self.entries[query_id])

    def ranked_ids(self, query_id: str) -> list[str]:
        """Video ids of one query in rank order."""
        return [e.video_id for e in self.entries[query_id]]

    def validate(self) -> None:
        """Check the canonical-form invariants, raising ValidationError."""
        for qid, rows in self.entries.items():
            seen: set[str] = set()
            prev_score = math.inf
            for i, e in enumerate(rows, start=1):
                if e.rank != i:
                    raise ValidationError(
                        f"query {qid}: rank {e.rank} at position {i} (expected {i})"
                    )
                if e.video_id in seen:
                    raise ValidationError(
                        f"query {qid}: duplicate video id {e.video_id!r}"
                    )
                seen.add(e.video_id)
                if not math.isfinite(e.score):
                    raise ValidationError(
                        f"query {qid}: non-finite score for {e.video_id!r}"
                    )
                if e.score > prev_score:
                    raise ValidationError(
                        f"query {qid}: scores increase at rank {i}"
                    )
                prev_score = e.score

    @classmethod
    def from_scores(
        cls,
        scores: Mapping[str, Mapping[str, float] | Sequence[tuple[str, float]]],
        run_tag: str = DEFAULT_RUN_TAG,
    ) -> "RankedRun":
        """Build a canonical run from per-query video->score mappings.

        Ties are broken by the mapping's iteration order, then video id.
        """
        entries: dict[str, list[RunEntry]] = {}
        for qid, sc in scores.items():
            pairs = list(sc.items()) if isinstance(sc, Mapping) else list(sc)
            entries[qid] = _canonical_entries(qid, pairs)
        return cls(run_tag=run_tag, entries=entries)


def _canonical_entries(
    qid: str, pairs: Sequence[tuple[str, float]]
) -> list[RunEntry]:
    """Sort (video, score) pairs canonically and assign ranks 1..n."""
    seen: set[str] = set()
    for vid, score in pairs:
        if vid in seen:
            raise ValidationError(f"query {qid}: duplicate video id {vid!r}")
        seen.add(vid)
        if not math.isfinite(score):
            raise ValidationError(f"query {qid}: non-finite score for {vid!r}")
    order = sorted(
        range(len(pairs)),
        key=lambda i: (-pairs[i][1], i, pairs[i][0]),
    )
    return [
        RunEntry(video_id=pairs[i][0], score=pairs[i][1], rank=r)
        for r, i in enumerate(order, start=1)
    ]


def parse_run(lines: Iterable[str]) -> RankedRun:
    """Parse a TREC run file into canonical form.

    Blank lines and lines starting with ``#`` are ignored. The rank column
    is parsed for well-formedness but not trusted; entries are re-sorted by
    score and ranks rewritten.
    """
    raw: dict[str, list[tuple[str, float]]] = {}
    run_tag: str | None = None
    for line_no, line in enumerate(lines, start=1):
        line = line.rstrip("\r\n")
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fields = stripped.split()
        if len(fields) != 6:
            raise ParseError(
                f"expected 6 fields, found {len(fields)}", line_no
            )
        qid, _q0, vid, rank_s, score_s, tag = fields
        try:
            int(rank_s)
        except ValueError:
            raise ParseError(f"non-numeric rank {rank_s!r}", line_no) from None
        try:
            score = float(score_s)
        except ValueError:
            raise ParseError(f"non-numeric score {score_s!r}", line_no) from None
        if not math.isfinite(score):
            raise ValidationError(
                f"line {line_no}: non-finite score for {vid!r}"
            )
        bucket = raw.setdefault(qid, [])
        if any(v == vid for v, _ in bucket):
            raise ValidationError(
                f"line {line_no}: duplicate video {vid!r} for query {qid}"
            )
        bucket.append((vid, score))
        if run_tag is None:
            run_tag = tag
    entries = {qid: _canonical_entries(qid, pairs) for qid, pairs in raw.items()}
    return RankedRun(run_tag=run_tag or DEFAULT_RUN_TAG, entries=entries)


def write_run(run: RankedRun) -> str:
    """Render a run in the 6-column format, queries in sorted id order.

    Scores are written with six digits after the decimal point, so
    ``parse_run(write_run(r))`` reproduces ranks, ids and ordering exactly
    and scores to the rendered precision.
    """
    out: list[str] = []
    for qid in sorted(run.entries):
        for e in run.entries[qid]:
            out.append(f"{qid} Q0 {e.video_id} {e.rank} {e.score:.6f} {run.run_tag}")
    return "".join(line + "\n" for line in out)


@dataclass(frozen=True)
class Judgment:
    stratum_id: int
    relevance: int


@dataclass(frozen=True)
class Stratum:
    pool_size: int
    judged_size: int

    @property
    def sampling_rate(self) -> float:
        return self.judged_size / self.pool_size

    @property
    def weight(self) -> float:
        """Inverse sampling rate: estimated pool docs per judged doc."""
        return self.pool_size / self.judged_size


@dataclass
class Qrels:
    """Sampled, possibly stratified binary relevance judgments.

    A video absent from ``judgments`` is unjudged. ``strata`` maps
    (query_id, stratum_id) to the pool bookkeeping for that stratum.
    """

    judgments: dict[str, dict[str, Judgment]] = field(default_factory=dict)
    strata: dict[tuple[str, int], Stratum] = field(default_factory=dict)

    @property
    def query_ids(self) -> list[str]:
        return list(self.judgments.keys())

    def query_strata(self, query_id: str) -> dict[int, Stratum]:
        return {
            sid: st for (qid, sid), st in self.strata.items() if qid == query_id
        }

    def relevant_count(self, query_id: str) -> int:
        """Number of judged-relevant videos (unweighted)."""
        return sum(
            j.relevance for j in self.judgments.get(query_id, {}).values()
        )

    def is_complete(self, query_id: str) -> bool:
        """True when the query has one stratum judged in full."""
        strata = self.query_strata(query_id)
        return len(strata) == 1 and all(
            st.pool_size == st.judged_size for st in strata.values()
        )

    def validate(self) -> None:
        counts: dict[tuple[str, int], int] = {}
        for qid, vids in self.judgments.items():
            for vid, j in vids.items():
                if j.relevance not in (0, 1):
                    raise ValidationError(
                        f"query {qid} video {vid!r}: relevance {j.relevance} not in {{0,1}}"
                    )
                key = (qid, j.stratum_id)
                if key not in self.strata:
                    raise ValidationError(
                        f"query {qid}: stratum {j.stratum_id} has no header"
                    )
                counts[key] = counts.get(key, 0) + 1
        for key, st in self.strata.items():
            if st.pool_size <= 0 or st.judged_size <= 0:
                raise ValidationError(
                    f"stratum {key}: pool and judged sizes must be positive"
                )
            if st.judged_size > st.pool_size:
                raise ValidationError(
                    f"stratum {key}: judged size {st.judged_size} exceeds pool {st.pool_size}"
                )
            if counts.get(key, 0) != st.judged_size:
                raise ValidationError(
                    f"stratum {key}: {counts.get(key, 0)} judgments, header declares {st.judged_size}"
                )


def parse_qrels(lines: Iterable[str]) -> Qrels:
    """Parse a qrels file; headers must precede their judgment lines."""
    qrels = Qrels()
    for line_no, line in enumerate(lines, start=1):
        stripped = line.rstrip("\r\n").strip()
        if not stripped:
            continue
        fields = stripped.split()
        if fields[0] == "#stratum":
            if len(fields) != 5:
                raise ParseError(
                    f"stratum header expects 5 fields, found {len(fields)}", line_no
                )
            _, qid, sid_s, pool_s, judged_s = fields
            try:
                sid, pool, judged = int(sid_s), int(pool_s), int(judged_s)
            except ValueError:
                raise ParseError("non-numeric stratum header field", line_no) from None
            if pool <= 0 or judged <= 0:
                raise ValidationError(
                    f"line {line_no}: pool and judged sizes must be positive"
                )
            if judged > pool:
                raise ValidationError(
                    f"line {line_no}: judged size {judged} exceeds pool size {pool}"
                )
            if (qid, sid) in qrels.strata:
                raise ValidationError(
                    f"line {line_no}: duplicate header for query {qid} stratum {sid}"
                )
            qrels.strata[(qid, sid)] = Stratum(pool_size=pool, judged_size=judged)
            continue
        if stripped.startswith("#"):
            continue
        if len(fields) != 4:
            raise ParseError(f"expected 4 fields, found {len(fields)}", line_no)
        qid, sid_s, vid, rel_s = fields
        try:
            sid = int(sid_s)
            rel = int(rel_s)
        except ValueError:
            raise ParseError("non-numeric stratum or relevance", line_no) from None
        if rel not in (0, 1):
            raise ValidationError(
                f"line {line_no}: relevance {rel} not in {{0,1}}"
            )
        if (qid, sid) not in qrels.strata:
            raise ValidationError(
                f"line {line_no}: stratum {sid} referenced before its header"
            )
        bucket = qrels.judgments.setdefault(qid, {})
        if vid in bucket:
            raise ValidationError(
                f"line {line_no}: duplicate judgment for query {qid} video {vid!r}"
            )
        bucket[vid] = Judgment(stratum_id=sid, relevance=rel)
    qrels.validate()
    return qrels


def write_qrels(qrels: Qrels) -> str:
    """Render qrels with headers grouped before their judgments."""
    out: list[str] = []
    queries = sorted(
        set(q for q, _ in qrels.strata) | set(qrels.judgments)
    )
    for qid in queries:
        for sid in sorted(s for (q, s) in qrels.strata if q == qid):
            st = qrels.strata[(qid, sid)]
            out.append(f"#stratum {qid} {sid} {st.pool_size} {st.judged_size}")
        for vid in sorted(qrels.judgments.get(qid, {})):
            j = qrels.judgments[qid][vid]
            out.append(f"{qid} {j.stratum_id} {vid} {j.relevance}")
    return "".join(line + "\n" for line in out)
