"""Parse, translate, evaluate, diagram and pattern-compare relational queries."""
from __future__ import annotations

__version__ = "0.1.0"
