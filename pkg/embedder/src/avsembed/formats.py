"""Writers for the reranker's store formats.

Text interchange: per video a header line ``video_id n_frames dim``
followed by one whitespace-separated line per frame (9 significant
digits, enough to round-trip float32).

EMBS binary (little-endian): magic ``EMBS``, version u32 = 1, flags u32
(bit 0: rows unit norm), dim u32, video count u64, then per video id
length u16 + UTF-8 id + frame count u32 + float32 row-major data, closed
by the footer ``SBME``.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Iterable

import numpy as np

_HEADER = struct.Struct("<4sIIIQ")
_FLAG_NORMALIZED = 0x1

Records = Iterable[tuple[str, np.ndarray]]


def write_interchange(records: Records, path: str | Path) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for vid, mat in records:
            fh.write(f"{vid} {mat.shape[0]} {mat.shape[1]}\n")
            for row in mat:
                fh.write(" ".join(f"{float(v):.9g}" for v in row) + "\n")
            count += 1
    return count


def write_embs(records: Records, path: str | Path, normalized: bool = True) -> int:
    records = list(records)
    if not records:
        raise ValueError("refusing to write a store with no videos")
    dim = records[0][1].shape[1]
    flags = _FLAG_NORMALIZED if normalized else 0
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(b"EMBS", 1, flags, dim, len(records)))
        for vid, mat in records:
            if mat.shape[1] != dim:
                raise ValueError(f"video {vid!r} has dim {mat.shape[1]}, store has {dim}")
            encoded = vid.encode("utf-8")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<I", mat.shape[0]))
            fh.write(np.ascontiguousarray(mat, dtype="<f4").tobytes())
        fh.write(b"SBME")
    return len(records)
