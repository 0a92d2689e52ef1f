"""Image-folder to EMB1 embedding extractor for the clipxpert pipeline."""

__version__ = "0.1.0"

from .backends import ClipEncoder, HashEncoder, make_backend
from .emb1 import ExtractorError
from .extract import ExtractJob, discover_images, extract

__all__ = [
    "ClipEncoder",
    "ExtractJob",
    "ExtractorError",
    "HashEncoder",
    "discover_images",
    "extract",
    "make_backend",
    "__version__",
]
