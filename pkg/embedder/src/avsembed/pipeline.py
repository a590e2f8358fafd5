"""Batch embedding of videos, frame-image directories, and query text.

An input directory may mix video files with per-video subdirectories of
already-extracted frame images (sorted by filename). Undecodable videos
and unreadable images are logged and skipped; they never abort the batch.
"""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DecodeError
from .sampling import SamplingSpec, sample_frames

log = logging.getLogger("avsembed")

VIDEO_EXTENSIONS = {".mp4", ".avi", ".mkv", ".mov", ".webm", ".mpg", ".mpeg"}
IMAGE_EXTENSIONS = {".png", ".jpg", ".jpeg", ".bmp", ".gif", ".webp"}


def discover_inputs(root: str | Path) -> list[tuple[str, Path]]:
    """(video_id, source) pairs: video files and frame-image directories."""
    root = Path(root)
    if not root.is_dir():
        raise NotADirectoryError(f"input directory {root} does not exist")
    found = []
    for entry in sorted(root.iterdir()):
        if entry.is_file() and entry.suffix.lower() in VIDEO_EXTENSIONS:
            found.append((entry.stem, entry))
        elif entry.is_dir():
            found.append((entry.name, entry))
    return found


def _load_frame_images(directory: Path, spec: SamplingSpec) -> list[np.ndarray]:
    paths = sorted(
        p for p in directory.iterdir()
        if p.is_file() and p.suffix.lower() in IMAGE_EXTENSIONS
    )
    if spec.max_frames is not None:
        paths = paths[: spec.max_frames]
    frames = []
    for p in paths:
        try:
            with Image.open(p) as img:
                frames.append(np.asarray(img.convert("RGB")))
        except OSError as exc:
            log.error("skipping unreadable image %s: %s", p, exc)
    if not frames:
        raise DecodeError(f"no readable frame images in {directory}")
    return frames


def embed_videos(
    root: str | Path, spec: SamplingSpec, model
) -> list[tuple[str, np.ndarray]]:
    """Embed every video/frame-directory under root; skip failures."""
    records: list[tuple[str, np.ndarray]] = []
    for vid, source in discover_inputs(root):
        try:
            if source.is_dir():
                frames = _load_frame_images(source, spec)
            else:
                frames = sample_frames(source, spec)
        except DecodeError as exc:
            log.error("skipping %s: %s", vid, exc)
            continue
        records.append((vid, model.embed_images(frames)))
        log.info("embedded %s: %d frames", vid, len(frames))
    return records


def read_query_tsv(lines) -> list[tuple[str, str]]:
    """Parse ``query_id<TAB>text`` lines; blanks and comments ignored."""
    queries = []
    for line_no, line in enumerate(lines, start=1):
        stripped = line.rstrip("\r\n")
        if not stripped.strip() or stripped.startswith("#"):
            continue
        if "\t" not in stripped:
            raise ValueError(f"line {line_no}: expected 'query_id<TAB>text'")
        qid, text = stripped.split("\t", 1)
        queries.append((qid.strip(), text.strip()))
    return queries


def embed_queries(queries, model) -> list[tuple[str, np.ndarray]]:
    """One single-row matrix per query, in input order."""
    if not queries:
        return []
    vectors = model.embed_texts([text for _, text in queries])
    return [
        (qid, vectors[i : i + 1].copy()) for i, (qid, _) in enumerate(queries)
    ]
