"""Inference sidecar exposing masked-LM token distributions over JSON."""

from .app import create_app
from .cachedump import dump_cache, parse_query_lines, query_key
from .model import MaskedLmModel, ServerConfig

__version__ = "0.1.0"
