"""Frozen image encoders.

Two families are supported by id string:

  "projection:<dim>"  - deterministic seeded random projection of the resized
                        RGB pixels; needs no downloaded weights, useful for
                        tests and plumbing checks.
  any torchvision model name (e.g. "vit_b_16", "resnet18") - pretrained
                        backbone with its classification head stripped;
                        pooled features out. Requires torch/torchvision and
                        obtainable weights.

Encoders are frozen: no gradients, eval mode, deterministic outputs for a
fixed input and fixed weights.
"""

from __future__ import annotations

from typing import Protocol, Sequence

import numpy as np
from PIL import Image

_PROJECTION_SEED = 0x5EED


class Encoder(Protocol):
    encoder_id: str
    pooling: str
    dim: int

    def encode_batch(self, images: Sequence[Image.Image], image_size: int) -> np.ndarray:
        ...


class ProjectionEncoder:
    """Seeded Gaussian random projection of bicubic-resized RGB pixels."""

    pooling = "random-projection"

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("projection dimension must be positive")
        self.encoder_id = f"projection:{dim}"
        self.dim = dim
        self._matrix: np.ndarray | None = None
        self._matrix_inputs: int | None = None

    def _projection_matrix(self, n_inputs: int) -> np.ndarray:
        if self._matrix is None or self._matrix_inputs != n_inputs:
            rng = np.random.default_rng(_PROJECTION_SEED)
            self._matrix = rng.standard_normal((self.dim, n_inputs)).astype(np.float32)
            self._matrix /= np.sqrt(n_inputs, dtype=np.float32)
            self._matrix_inputs = n_inputs
        return self._matrix

    def encode_batch(self, images: Sequence[Image.Image], image_size: int) -> np.ndarray:
        pixels = np.stack(
            [
                np.asarray(
                    img.convert("RGB").resize((image_size, image_size), Image.BICUBIC),
                    dtype=np.float32,
                )
                for img in images
            ]
        )
        flat = pixels.reshape(len(images), -1) / 255.0
        matrix = self._projection_matrix(flat.shape[1])
        return flat @ matrix.T


class TorchvisionEncoder:
    """Pretrained torchvision backbone with the classifier head removed."""

    pooling = "penultimate-pooled"

    def __init__(self, model_name: str):
        try:
            import torch
            import torchvision.models as tvm
        except ImportError as exc:
            raise RuntimeError(
                f"encoder {model_name!r} needs torch/torchvision installed"
            ) from exc
        self.encoder_id = model_name
        self._torch = torch
        try:
            weights = tvm.get_model_weights(model_name).DEFAULT
            model = tvm.get_model(model_name, weights=weights)
        except Exception as exc:
            raise RuntimeError(
                f"could not obtain pretrained weights for {model_name!r}: {exc}"
            ) from exc
        self._preprocess = weights.transforms()
        # strip the classification head so the pooled features come out
        if hasattr(model, "heads"):
            model.heads = torch.nn.Identity()
        elif hasattr(model, "fc"):
            model.fc = torch.nn.Identity()
        elif hasattr(model, "classifier"):
            model.classifier = torch.nn.Identity()
        model.eval()
        for p in model.parameters():
            p.requires_grad_(False)
        self._model = model
        with torch.no_grad():
            self.dim = int(self._model(torch.zeros(1, 3, 224, 224)).shape[-1])

    def encode_batch(self, images: Sequence[Image.Image], image_size: int) -> np.ndarray:
        torch = self._torch
        tensors = torch.stack([self._preprocess(img.convert("RGB")) for img in images])
        with torch.no_grad():
            out = self._model(tensors)
        return out.cpu().numpy().astype(np.float32)


def build_encoder(encoder_id: str) -> ProjectionEncoder | TorchvisionEncoder:
    if encoder_id.startswith("projection:"):
        try:
            dim = int(encoder_id.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"bad projection encoder id {encoder_id!r}") from None
        return ProjectionEncoder(dim)
    return TorchvisionEncoder(encoder_id)
