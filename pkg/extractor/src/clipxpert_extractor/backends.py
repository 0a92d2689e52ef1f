"""Image/text encoder backends.

``ClipEncoder`` wraps a pretrained vision-language model from the
``transformers`` hub (heavy dependencies imported lazily; a load failure
aborts extraction).  ``HashEncoder`` is a fully deterministic stand-in that
derives unit vectors from content digests: useless for recognition quality,
but it exercises the whole extraction path without model weights and makes
re-extraction exactly reproducible.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .emb1 import ExtractorError


class HashEncoder:
    """Deterministic digest-based encoder (no model weights needed)."""

    name = "hash"

    def __init__(self, dim: int = 64):
        if dim < 1:
            raise ExtractorError(f"dim must be >= 1, got {dim}")
        self.dim = dim

    def _vector(self, blob: bytes) -> np.ndarray:
        seed = int.from_bytes(hashlib.sha256(blob).digest()[:8], "little")
        rng = np.random.default_rng(seed)
        vec = rng.standard_normal(self.dim)
        return vec / np.linalg.norm(vec)

    def encode_images(self, images) -> np.ndarray:
        rows = []
        for image in images:
            rgb = image.convert("RGB")
            rows.append(self._vector(rgb.tobytes()))
        return np.asarray(rows, dtype=np.float32)

    def encode_texts(self, texts) -> np.ndarray:
        return np.asarray([self._vector(t.encode("utf-8")) for t in texts],
                          dtype=np.float32)


class ClipEncoder:
    """Pretrained vision-language encoder via ``transformers``."""

    name = "clip"

    def __init__(self, model_id: str = "openai/clip-vit-base-patch16",
                 device: str = "cpu"):
        try:
            import torch
            from transformers import CLIPModel, CLIPProcessor
        except ImportError as exc:
            raise ExtractorError(
                "the clip backend needs torch and transformers installed "
                f"({exc})") from exc
        try:
            self._torch = torch
            self.model = CLIPModel.from_pretrained(model_id).to(device).eval()
            self.processor = CLIPProcessor.from_pretrained(model_id)
        except Exception as exc:
            raise ExtractorError(f"cannot load model {model_id!r}: {exc}") from exc
        self.model_id = model_id
        self.device = device

    def encode_images(self, images) -> np.ndarray:
        torch = self._torch
        inputs = self.processor(images=[im.convert("RGB") for im in images],
                                return_tensors="pt").to(self.device)
        with torch.no_grad():
            features = self.model.get_image_features(**inputs)
        features = features / features.norm(dim=-1, keepdim=True)
        return features.cpu().numpy().astype(np.float32)

    def encode_texts(self, texts) -> np.ndarray:
        torch = self._torch
        inputs = self.processor(text=list(texts), return_tensors="pt",
                                padding=True).to(self.device)
        with torch.no_grad():
            features = self.model.get_text_features(**inputs)
        features = features / features.norm(dim=-1, keepdim=True)
        return features.cpu().numpy().astype(np.float32)


def make_backend(name: str, model_id: str, dim: int):
    if name == "hash":
        return HashEncoder(dim=dim)
    if name == "clip":
        return ClipEncoder(model_id=model_id)
    raise ExtractorError(f"unknown backend {name!r} (expected clip or hash)")
