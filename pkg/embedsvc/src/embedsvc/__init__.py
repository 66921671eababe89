"""Mask-position embedding service for the co-set expansion engine."""

from .app import EmbedRequest, EmbedResponse, TextEmbedding, create_app
from .backend import (
    MASK_LITERAL,
    MaskCountError,
    MaskedEncoder,
    ModelLoadError,
    TextVectors,
    normalize_masks,
)
from .export import ExportError, Query, export_store, load_queries

__version__ = "0.1.0"

__all__ = [
    "MASK_LITERAL",
    "EmbedRequest",
    "EmbedResponse",
    "ExportError",
    "MaskCountError",
    "MaskedEncoder",
    "ModelLoadError",
    "Query",
    "TextEmbedding",
    "TextVectors",
    "create_app",
    "export_store",
    "load_queries",
    "normalize_masks",
]
