"""Checkpoint adapters for .nnrw weight containers."""

from .convert import (AdapterError, ExportMapping, KeyMismatch, NoConvLayers,
                      ShapeMismatch, UnsupportedFormat, export_checkpoint,
                      import_container)

__version__ = "0.1.0"

__all__ = [
    "AdapterError", "ExportMapping", "KeyMismatch", "NoConvLayers",
    "ShapeMismatch", "UnsupportedFormat", "export_checkpoint",
    "import_container", "__version__",
]
