"""Binary and text containers for frame and query embeddings.

Binary layout (all integers little-endian)::

    magic   4 bytes  b"EMBS"
    version u32      1
    flags   u32      bit 0 = rows are unit L2 norm; other bits reserved
    dim     u32      embedding width
    count   u64      number of videos
    per video:
        id_len   u16
        id       id_len bytes, UTF-8
        n_frames u32
        data     n_frames * dim IEEE-754 binary32, row-major
    footer  4 bytes  b"SBME"

The text interchange format is one record per video: a line
``video_id n_frames dim`` followed by n_frames lines of dim reals.

Query embeddings reuse the same container: a store whose videos each hold
exactly one frame.
"""

from __future__ import annotations

import io
import math
import struct
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable, Sequence

import numpy as np

from .errors import StoreFormatError, ValidationError

MAGIC = b"EMBS"
FOOTER = b"SBME"
VERSION = 1
FLAG_NORMALIZED = 0x1
_HEADER = struct.Struct("<4sIIIQ")
_ID_LEN = struct.Struct("<H")
_N_FRAMES = struct.Struct("<I")

NORM_TOLERANCE = 1e-4


class EmbeddingStore:
    """Read-only map from video id to its frame-embedding matrix.

    Matrices are float32 with shape (n_frames, dim). Arrays are marked
    non-writeable so an open store can be shared across threads.
    """

    def __init__(
        self,
        dim: int,
        videos: dict[str, np.ndarray] | None = None,
        normalized: bool = False,
        validate: bool = True,
    ):
        self.dim = int(dim)
        self.videos: dict[str, np.ndarray] = {}
        self.normalized = bool(normalized)
        self._norms: dict[str, np.ndarray] = {}
        for vid, mat in (videos or {}).items():
            self.videos[vid] = np.ascontiguousarray(mat, dtype=np.float32)
        for mat in self.videos.values():
            mat.flags.writeable = False
        if validate:
            self.validate()

    def __len__(self) -> int:
        return len(self.videos)

    def __contains__(self, video_id: str) -> bool:
        return video_id in self.videos

    @property
    def video_ids(self) -> list[str]:
        return list(self.videos.keys())

    @property
    def total_frames(self) -> int:
        return sum(m.shape[0] for m in self.videos.values())

    def get_frames(self, video_id: str) -> np.ndarray | None:
        """The video's frame matrix, or None when absent (not an error)."""
        return self.videos.get(video_id)

    def row_norms(self, video_id: str) -> np.ndarray:
        """Per-frame L2 norms in float64, cached per video."""
        norms = self._norms.get(video_id)
        if norms is None:
            m64 = self.videos[video_id].astype(np.float64)
            norms = np.sqrt(np.einsum("ij,ij->i", m64, m64))
            norms.flags.writeable = False
            self._norms[video_id] = norms
        return norms

    def validate(self) -> None:
        if self.dim <= 0:
            raise ValidationError(f"dim must be positive, got {self.dim}")
        for vid, mat in self.videos.items():
            if mat.ndim != 2 or mat.shape[1] != self.dim:
                raise ValidationError(
                    f"video {vid!r}: shape {mat.shape} does not match dim {self.dim}"
                )
            if mat.shape[0] < 1:
                raise ValidationError(f"video {vid!r}: no frames")
            if not np.isfinite(mat).all():
                raise ValidationError(f"video {vid!r}: non-finite values")
            if self.normalized:
                norms = self.row_norms(vid)
                if np.abs(norms - 1.0).max() > NORM_TOLERANCE:
                    raise ValidationError(
                        f"video {vid!r}: rows not unit norm but store is flagged normalized"
                    )


@dataclass
class QueryEmbeddings:
    """One embedding vector per query id."""

    dim: int
    queries: dict[str, np.ndarray] = field(default_factory=dict)

    def __contains__(self, query_id: str) -> bool:
        return query_id in self.queries

    def get(self, query_id: str) -> np.ndarray | None:
        return self.queries.get(query_id)

    def validate(self) -> None:
        for qid, vec in self.queries.items():
            if vec.shape != (self.dim,):
                raise ValidationError(
                    f"query {qid!r}: shape {vec.shape} does not match dim {self.dim}"
                )
            if not np.isfinite(vec).all():
                raise ValidationError(f"query {qid!r}: non-finite values")

    @classmethod
    def from_store(cls, store: EmbeddingStore) -> "QueryEmbeddings":
        """Interpret a store of single-frame videos as query vectors."""
        queries: dict[str, np.ndarray] = {}
        for qid, mat in store.videos.items():
            if mat.shape[0] != 1:
                raise ValidationError(
                    f"query store entry {qid!r} has {mat.shape[0]} frames, expected 1"
                )
            queries[qid] = mat[0]
        return cls(dim=store.dim, queries=queries)

    def to_store(self, normalized: bool = False) -> EmbeddingStore:
        return EmbeddingStore(
            dim=self.dim,
            videos={qid: vec.reshape(1, -1) for qid, vec in self.queries.items()},
            normalized=normalized,
        )


def write_store(store: EmbeddingStore, stream: BinaryIO) -> None:
    """Serialize bit-exactly in the binary layout above."""
    flags = FLAG_NORMALIZED if store.normalized else 0
    stream.write(_HEADER.pack(MAGIC, VERSION, flags, store.dim, len(store.videos)))
    for vid, mat in store.videos.items():
        encoded = vid.encode("utf-8")
        if not 0 < len(encoded) <= 0xFFFF:
            raise ValidationError(f"video id {vid!r} encodes to {len(encoded)} bytes")
        stream.write(_ID_LEN.pack(len(encoded)))
        stream.write(encoded)
        stream.write(_N_FRAMES.pack(mat.shape[0]))
        little = mat.astype("<f4", copy=False)
        stream.write(little.tobytes(order="C"))
    stream.write(FOOTER)


def store_to_bytes(store: EmbeddingStore) -> bytes:
    buf = io.BytesIO()
    write_store(store, buf)
    return buf.getvalue()


def _read_exact(stream: BinaryIO, n: int, what: str) -> bytes:
    data = stream.read(n)
    if len(data) != n:
        raise StoreFormatError(
            f"truncated store: expected {n} bytes for {what}, got {len(data)}"
        )
    return data


def open_store(stream: BinaryIO) -> EmbeddingStore:
    """Read and validate a binary store.

    Rejects bad magic, unsupported versions, unknown flag bits, truncation,
    duplicate ids and trailing bytes, then applies the full in-memory
    validation (finiteness, shapes, norm flag).
    """
    header = _read_exact(stream, _HEADER.size, "header")
    magic, version, flags, dim, count = _HEADER.unpack(header)
    if magic != MAGIC:
        raise StoreFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise StoreFormatError(f"unsupported version {version}")
    if flags & ~FLAG_NORMALIZED:
        raise StoreFormatError(f"unknown flag bits 0x{flags:x}")
    if dim == 0:
        raise StoreFormatError("dim must be positive")
    videos: dict[str, np.ndarray] = {}
    for i in range(count):
        (id_len,) = _ID_LEN.unpack(_read_exact(stream, _ID_LEN.size, "id length"))
        if id_len == 0:
            raise StoreFormatError(f"video {i}: empty id")
        try:
            vid = _read_exact(stream, id_len, "video id").decode("utf-8")
        except UnicodeDecodeError as exc:
            raise StoreFormatError(f"video {i}: id is not UTF-8 ({exc})") from None
        (n_frames,) = _N_FRAMES.unpack(
            _read_exact(stream, _N_FRAMES.size, "frame count")
        )
        if n_frames == 0:
            raise ValidationError(f"video {vid!r}: zero frames")
        data = _read_exact(stream, n_frames * dim * 4, f"frames of {vid!r}")
        mat = np.frombuffer(data, dtype="<f4").reshape(n_frames, dim)
        if vid in videos:
            raise ValidationError(f"duplicate video id {vid!r}")
        videos[vid] = mat
    footer = _read_exact(stream, len(FOOTER), "footer")
    if footer != FOOTER:
        raise StoreFormatError(f"bad footer {footer!r}")
    if stream.read(1):
        raise StoreFormatError("trailing bytes after footer")
    return EmbeddingStore(
        dim=dim, videos=videos, normalized=bool(flags & FLAG_NORMALIZED)
    )


def store_from_bytes(data: bytes) -> EmbeddingStore:
    return open_store(io.BytesIO(data))


def load_store(path) -> EmbeddingStore:
    with open(path, "rb") as fh:
        return open_store(fh)


def save_store(store: EmbeddingStore, path) -> None:
    with open(path, "wb") as fh:
        write_store(store, fh)


def store_from_records(
    records: Iterable[tuple[str, np.ndarray]],
    dim: int | None = None,
    normalize: bool = True,
) -> EmbeddingStore:
    """Build a store from (video_id, matrix) records.

    With ``normalize`` (the default, since scoring is cosine-based) every
    row is divided by its L2 norm and the store is flagged normalized.
    """
    videos: dict[str, np.ndarray] = {}
    for vid, mat in records:
        mat = np.asarray(mat, dtype=np.float32)
        if mat.ndim != 2:
            raise ValidationError(f"video {vid!r}: expected a matrix")
        if dim is None:
            dim = mat.shape[1]
        if vid in videos:
            raise ValidationError(f"duplicate video id {vid!r}")
        if normalize:
            norms = np.linalg.norm(mat.astype(np.float64), axis=1)
            if (norms == 0).any():
                raise ValidationError(f"video {vid!r}: zero-norm row")
            mat = (mat / norms[:, None].astype(np.float32)).astype(np.float32)
        videos[vid] = mat
    if dim is None:
        raise ValidationError("cannot infer dim from an empty record set")
    return EmbeddingStore(dim=dim, videos=videos, normalized=normalize)


def parse_text_store(lines: Iterable[str]) -> list[tuple[str, np.ndarray]]:
    """Parse the text interchange format into (video_id, float32 matrix) records."""
    records: list[tuple[str, np.ndarray]] = []
    it = enumerate(lines, start=1)
    dim: int | None = None
    for line_no, line in it:
        header = line.rstrip("\r\n").strip()
        if not header or header.startswith("#"):
            continue
        fields = header.split()
        if len(fields) != 3:
            raise ValidationError(
                f"line {line_no}: record header expects 'id n_frames dim', got {header!r}"
            )
        vid, n_frames_s, dim_s = fields
        try:
            n_frames, rec_dim = int(n_frames_s), int(dim_s)
        except ValueError:
            raise ValidationError(f"line {line_no}: non-numeric record header") from None
        if n_frames < 1 or rec_dim < 1:
            raise ValidationError(f"line {line_no}: n_frames and dim must be positive")
        if dim is None:
            dim = rec_dim
        elif rec_dim != dim:
            raise ValidationError(
                f"line {line_no}: dim {rec_dim} differs from earlier dim {dim}"
            )
        rows = np.empty((n_frames, rec_dim), dtype=np.float32)
        for r in range(n_frames):
            try:
                row_no, row_line = next(it)
            except StopIteration:
                raise ValidationError(
                    f"video {vid!r}: expected {n_frames} frame lines, file ended at {r}"
                ) from None
            values = row_line.split()
            if len(values) != rec_dim:
                raise ValidationError(
                    f"line {row_no}: expected {rec_dim} values, found {len(values)}"
                )
            try:
                rows[r] = [float(v) for v in values]
            except ValueError:
                raise ValidationError(f"line {row_no}: non-numeric value") from None
        records.append((vid, rows))
    return records


def write_text_store(store: EmbeddingStore) -> str:
    """Render a store in the text interchange format.

    Values use 9 significant digits, enough to round-trip float32.
    """
    out: list[str] = []
    for vid, mat in store.videos.items():
        out.append(f"{vid} {mat.shape[0]} {mat.shape[1]}")
        for row in mat:
            out.append(" ".join(f"{float(v):.9g}" for v in row))
    return "".join(line + "\n" for line in out)
