import numpy as np
import pytest

from avsrerank.runio import Judgment, Qrels, RankedRun, Stratum
from avsrerank.store import EmbeddingStore, QueryEmbeddings


def build_qrels(per_query: dict[str, dict[str, int]]) -> Qrels:
    """Complete single-stratum qrels from {qid: {vid: rel}}."""
    qrels = Qrels()
    for qid, judgments in per_query.items():
        qrels.strata[(qid, 0)] = Stratum(
            pool_size=len(judgments), judged_size=len(judgments)
        )
        qrels.judgments[qid] = {
            vid: Judgment(stratum_id=0, relevance=rel)
            for vid, rel in judgments.items()
        }
    qrels.validate()
    return qrels


@pytest.fixture
def hand_fixture():
    """Three candidates whose fused scores are exact by construction.

    All frame vectors have integer components with perfect-square norm, so
    every cosine is an exact small rational and the expected fused values
    can be written down directly.
    """
    q = np.zeros(4, dtype=np.float32)
    q[0] = 1.0
    store = EmbeddingStore(
        dim=4,
        videos={
            "vA": np.array([[1, 1, 1, 1], [0, 1, 0, 0]], dtype=np.float32),
            "vB": np.array([[2, 0, 0, 0], [0, 0, 1, 0]], dtype=np.float32),
            "vC": np.array([[2, 2, 1, 0]], dtype=np.float32),
        },
        normalized=False,
    )
    queries = QueryEmbeddings(dim=4, queries={"q1": q})
    run = RankedRun.from_scores(
        {"q1": [("vA", 0.9), ("vB", 0.5), ("vC", 0.1)]}, run_tag="hand"
    )
    s_expected = {"vA": 0.5, "vB": 1.0, "vC": 2 / 3}
    fused_expected = {
        vid: 0.4 * m + 0.6 * s_expected[vid]
        for vid, m in {"vA": 0.9, "vB": 0.5, "vC": 0.1}.items()
    }
    return run, store, queries, s_expected, fused_expected
