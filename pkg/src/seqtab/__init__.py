"""Sequential question answering over tables."""

from .tables import (
    AnswerCoordinates,
    ColumnKind,
    QuestionClass,
    QuestionEntry,
    QuestionSequence,
    Table,
    ValidationError,
)

__version__ = "0.1.0"

__all__ = [
    "AnswerCoordinates",
    "ColumnKind",
    "QuestionClass",
    "QuestionEntry",
    "QuestionSequence",
    "Table",
    "ValidationError",
    "__version__",
]
