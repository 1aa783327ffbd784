"""Exception hierarchy shared across the package.

DataError covers everything caused by bad inputs (corpora, query files,
embedding files, index directories). The CLI maps DataError to exit code 2
and anything else unexpected to exit code 3.
"""


class GridragError(Exception):
    pass


class DataError(GridragError):
    """Invalid input data: malformed files, violated invariants, bad formats."""


class CorpusError(DataError):
    """Malformed corpus or query JSONL. Carries the offending line when known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class EmbeddingFileError(DataError):
    """Bad embedding file: wrong magic, truncated record, duplicate id, dim mismatch."""


class IndexStoreError(DataError):
    """Index directory missing, corrupt, or inconsistent with its manifest."""


class GenerationError(DataError):
    """Corpus/query generation cannot satisfy the request (e.g. too few unique keys)."""
