"""Relational Diagrams: model, construction, validation and emitters."""
from .build import diagram_to_trc, trc_to_diagram
from .jsonio import emit_json, load_json
from .model import QUERY, SENTENCE, AttrRow, Cell, Diagram, JoinEdge, OutputBox, Partition, RowRef, TableBox
from .svg import emit_svg
from .validate import DiagramViolation, require_valid, validate_diagram

__all__ = ["AttrRow", "Cell", "Diagram", "DiagramViolation", "JoinEdge", "OutputBox", "Partition", "QUERY",
           "RowRef", "SENTENCE", "TableBox", "diagram_to_trc", "emit_json", "emit_svg", "load_json",
           "require_valid", "trc_to_diagram", "validate_diagram"]
