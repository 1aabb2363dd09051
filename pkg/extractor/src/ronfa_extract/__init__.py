"""Image folder to EMB1 embedding extraction with a frozen vision encoder."""

from .emb1 import write_emb1
from .encoders import ProjectionEncoder, TorchvisionEncoder, build_encoder
from .extract import ExtractResult, ExtractSpec, extract_embeddings

__version__ = "0.1.0"

__all__ = [
    "ExtractResult",
    "ExtractSpec",
    "ProjectionEncoder",
    "TorchvisionEncoder",
    "build_encoder",
    "extract_embeddings",
    "write_emb1",
]
