"""Algebroids and second-order algebroids in local coordinates, built as vector bundle comorphisms."""

__version__ = "0.1.0"

from .errors import AlgforgeError
from .expr import Poly, Symbol, parse
from .verdict import Verdict

__all__ = ["AlgforgeError", "Poly", "Symbol", "Verdict", "parse", "__version__"]
