"""Embedding model providers.

Two providers ship by default:

- ``clip`` style checkpoints loaded through transformers (any model id
  exposing image/text towers, e.g. ``openai/clip-vit-base-patch32``).
  Loading is lazy and a load failure is fatal.
- ``toy``: a deterministic random-projection model with no ML
  dependencies. It embeds images from downsampled pixels and text from
  hashed character trigrams. It carries no semantics and exists so
  pipelines and stores can be exercised offline.

Every provider returns float32 rows normalized to unit L2 norm.
"""

from __future__ import annotations

import zlib

import numpy as np
from PIL import Image

from .errors import ModelError

DEFAULT_MODEL = "openai/clip-vit-base-patch32"

_TOY_IMAGE_SIDE = 16
_TOY_TEXT_BUCKETS = 2048
_TOY_SEED = 0x5EED


def _normalize_rows(mat: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(mat.astype(np.float64), axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return (mat / norms).astype(np.float32)


def _as_pil(image) -> Image.Image:
    if isinstance(image, Image.Image):
        return image.convert("RGB")
    return Image.fromarray(np.asarray(image)).convert("RGB")


class ToyModel:
    """Fixed random projection of raw pixels / trigram counts."""

    def __init__(self, dim: int = 64):
        self.dim = dim
        self.name = f"toy-{dim}"
        rng = np.random.default_rng(_TOY_SEED)
        pixels = _TOY_IMAGE_SIDE * _TOY_IMAGE_SIDE * 3
        self._image_proj = rng.standard_normal((pixels, dim)).astype(np.float32)
        self._text_proj = rng.standard_normal((_TOY_TEXT_BUCKETS, dim)).astype(
            np.float32
        )

    def embed_images(self, images) -> np.ndarray:
        rows = np.empty((len(images), self.dim), dtype=np.float32)
        for i, image in enumerate(images):
            small = _as_pil(image).resize(
                (_TOY_IMAGE_SIDE, _TOY_IMAGE_SIDE), Image.BILINEAR
            )
            flat = np.asarray(small, dtype=np.float32).reshape(-1) / 255.0 - 0.5
            rows[i] = flat @ self._image_proj
        return _normalize_rows(rows)

    def embed_texts(self, texts) -> np.ndarray:
        rows = np.empty((len(texts), self.dim), dtype=np.float32)
        for i, text in enumerate(texts):
            counts = np.zeros(_TOY_TEXT_BUCKETS, dtype=np.float32)
            padded = f"  {text.lower()}  "
            for j in range(len(padded) - 2):
                bucket = zlib.crc32(padded[j : j + 3].encode("utf-8"))
                counts[bucket % _TOY_TEXT_BUCKETS] += 1.0
            rows[i] = np.sqrt(counts) @ self._text_proj
        return _normalize_rows(rows)


class ClipModel:
    """Image/text towers of a pretrained vision-language checkpoint."""

    def __init__(self, model_id: str, device: str = "cpu", batch_size: int = 16):
        self.name = model_id
        self.batch_size = batch_size
        try:
            import torch
            from transformers import AutoProcessor, CLIPModel
        except ImportError as exc:
            raise ModelError(
                f"model {model_id!r} needs the transformers/torch extras: {exc}"
            ) from exc
        try:
            self._model = CLIPModel.from_pretrained(model_id).to(device).eval()
            self._processor = AutoProcessor.from_pretrained(model_id)
        except Exception as exc:
            raise ModelError(f"failed to load model {model_id!r}: {exc}") from exc
        self._torch = torch
        self._device = device
        self.dim = int(self._model.config.projection_dim)

    def _batched(self, items, encode):
        chunks = []
        for start in range(0, len(items), self.batch_size):
            with self._torch.no_grad():
                chunks.append(encode(items[start : start + self.batch_size]))
        return np.concatenate(chunks, axis=0)

    def embed_images(self, images) -> np.ndarray:
        pil = [_as_pil(im) for im in images]

        def encode(batch):
            inputs = self._processor(images=batch, return_tensors="pt").to(
                self._device
            )
            return self._model.get_image_features(**inputs).cpu().numpy()

        return _normalize_rows(self._batched(pil, encode))

    def embed_texts(self, texts) -> np.ndarray:
        def encode(batch):
            inputs = self._processor(
                text=list(batch), return_tensors="pt", padding=True, truncation=True
            ).to(self._device)
            return self._model.get_text_features(**inputs).cpu().numpy()

        return _normalize_rows(self._batched(list(texts), encode))


def get_model(model_id: str = DEFAULT_MODEL, device: str = "cpu", batch_size: int = 16):
    """Resolve a model id to a provider; unknown ids go to transformers."""
    if model_id == "toy":
        return ToyModel()
    if model_id.startswith("toy-"):
        try:
            return ToyModel(dim=int(model_id.split("-", 1)[1]))
        except ValueError:
            raise ModelError(f"bad toy model id {model_id!r}") from None
    return ClipModel(model_id, device=device, batch_size=batch_size)
