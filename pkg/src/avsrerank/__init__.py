"""Rerank ad-hoc video search runs with frame-level similarity and
evaluate them with exact or inferred Average Precision."""

from .errors import (
    ConfigError,
    DataError,
    EvaluationError,
    ParseError,
    StoreFormatError,
    ValidationError,
)
from .experiments import GridCell, SweepResult, SweepSpec, per_query_report, sweep
from .fusion import FusionConfig, RerankDiagnostics, fuse, normalize_scores, rerank_run
from .graphrerank import GraphConfig, build_affinity, label_spread, video_repr
from .metrics import (
    EvalReport,
    QueryDelta,
    average_precision,
    compare_runs,
    evaluate_run,
    inf_ap,
)
from .runio import (
    Judgment,
    Qrels,
    RankedRun,
    RunEntry,
    Stratum,
    parse_qrels,
    parse_run,
    write_qrels,
    write_run,
)
from .scoring import ScoreTable, cosine_sim, pool_frames, score_candidates, score_video
from .store import (
    EmbeddingStore,
    QueryEmbeddings,
    load_store,
    open_store,
    save_store,
    store_from_records,
    write_store,
)

__version__ = "0.1.0"
