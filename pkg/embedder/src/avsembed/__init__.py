"""Produce embedding stores for the reranking toolkit from videos,
frame-image directories, and query text files."""

from .errors import DecodeError, EmbedderError, ModelError
from .formats import write_embs, write_interchange
from .models import DEFAULT_MODEL, ClipModel, ToyModel, get_model
from .pipeline import discover_inputs, embed_queries, embed_videos, read_query_tsv
from .sampling import SamplingSpec, sample_frames

__version__ = "0.1.0"
