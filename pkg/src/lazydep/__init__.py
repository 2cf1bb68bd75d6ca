"""Lazy product discovery over fragmented feature models."""

__version__ = "0.1.0"

from lazydep.formula import PropFM, eval_formula, format_formula, parse_formula
from lazydep.extfm import ExtFM, EMPTY_FM
from lazydep.fragments import Fragment, RepositoryIndex, load_fragment, load_repository
from lazydep.discovery import DiscoveryResult, eager_discover, lazy_discover

__all__ = [
    "PropFM",
    "eval_formula",
    "format_formula",
    "parse_formula",
    "ExtFM",
    "EMPTY_FM",
    "Fragment",
    "RepositoryIndex",
    "load_fragment",
    "load_repository",
    "DiscoveryResult",
    "eager_discover",
    "lazy_discover",
    "__version__",
]
