"""
File formats for codes.

Supports:
- alist parity-check matrices (MacKay layout, 1-indexed, zero padded)
- JSON degree distributions ({"lambda": [[i, w], ...], "rho": [[i, w], ...]})
- Auto-detection of the format from file name or content
"""

import json
import logging
from enum import Enum
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np

from .degree import DegreeDistribution
from .graph import TannerGraph

logger = logging.getLogger(__name__)

Code = Union[TannerGraph, DegreeDistribution]


class AlistParseError(ValueError):
    """Malformed alist input; ``line`` is the 1-based line the problem was found on."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class CodeFormat(Enum):
    """Supported file formats for code descriptions."""

    ALIST = "alist"
    DEGREE_JSON = "json"
    UNKNOWN = "unknown"


class FormatDetector:
    """Detect the format of a code file."""

    @staticmethod
    def detect_format(file_path: Union[str, Path]) -> CodeFormat:
        file_path = Path(file_path)

        if file_path.suffix == ".alist":
            return CodeFormat.ALIST
        elif file_path.suffix == ".json":
            return CodeFormat.DEGREE_JSON

        # If unclear from name, examine content
        try:
            content = file_path.read_text(encoding="utf-8")
            return FormatDetector._detect_by_content(content)
        except (IOError, UnicodeDecodeError):
            return CodeFormat.UNKNOWN

    @staticmethod
    def _detect_by_content(content: str) -> CodeFormat:
        stripped = content.lstrip()
        if stripped.startswith("{"):
            return CodeFormat.DEGREE_JSON
        first_line = stripped.splitlines()[0].split() if stripped else []
        if len(first_line) == 2 and all(token.isdigit() for token in first_line):
            return CodeFormat.ALIST
        return CodeFormat.UNKNOWN


def to_alist(graph: TannerGraph) -> str:
    """Serialise a simple Tanner graph as alist text."""
    if graph.multi_edge_count():
        raise ValueError("Parallel edges cannot be represented in alist format")

    columns = [np.sort(c) + 1 for c in graph.var_adjacency()]
    rows = [np.sort(r) + 1 for r in graph.check_adjacency()]
    max_col = max((len(c) for c in columns), default=0)
    max_row = max((len(r) for r in rows), default=0)

    def padded(entries: np.ndarray, width: int) -> str:
        values = list(entries.tolist()) + [0] * (width - len(entries))
        return " ".join(str(v) for v in values)

    lines = [
        f"{graph.n_vars} {graph.n_checks}",
        f"{max_col} {max_row}",
        " ".join(str(len(c)) for c in columns),
        " ".join(str(len(r)) for r in rows),
    ]
    lines.extend(padded(c, max_col) for c in columns)
    lines.extend(padded(r, max_row) for r in rows)
    return "\n".join(lines) + "\n"


def _read_ints(tokens: List[str], line: int) -> List[int]:
    try:
        return [int(t) for t in tokens]
    except ValueError:
        raise AlistParseError(f"expected integers, got {' '.join(tokens)!r}", line)


def from_alist(text: str) -> TannerGraph:
    """
    Parse alist text into a Tanner graph.

    Zero padding is optional. Column and row lists must describe the same edges.
    """
    lines: List[Tuple[int, List[int]]] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        tokens = raw.split()
        if tokens:
            lines.append((number, _read_ints(tokens, number)))
    if not lines:
        raise AlistParseError("file is empty", 1)

    cursor = 0

    def take(expected: Optional[int], what: str) -> Tuple[int, List[int]]:
        nonlocal cursor
        if cursor >= len(lines):
            last = lines[-1][0] + 1
            raise AlistParseError(f"unexpected end of file while reading {what}", last)
        number, values = lines[cursor]
        cursor += 1
        if expected is not None and len(values) != expected:
            raise AlistParseError(f"{what}: expected {expected} values, got {len(values)}", number)
        return number, values

    number, (n_vars, n_checks) = take(2, "header")
    if n_vars < 1 or n_checks < 1:
        raise AlistParseError("N and K must be positive", number)
    number, (max_col, max_row) = take(2, "maximum degrees")
    col_line, col_degrees = take(n_vars, "column degrees")
    row_line, row_degrees = take(n_checks, "row degrees")
    if max(col_degrees) > max_col:
        raise AlistParseError(f"column degree exceeds declared maximum {max_col}", col_line)
    if max(row_degrees) > max_row:
        raise AlistParseError(f"row degree exceeds declared maximum {max_row}", row_line)

    edge_var: List[int] = []
    edge_check: List[int] = []
    for v in range(n_vars):
        number, values = take(None, f"column {v + 1}")
        entries = [x for x in values if x != 0]
        if len(entries) != col_degrees[v]:
            raise AlistParseError(
                f"column {v + 1} lists {len(entries)} checks, degree is {col_degrees[v]}", number
            )
        if any(x < 1 or x > n_checks for x in entries):
            raise AlistParseError(f"column {v + 1} has a check index outside 1..{n_checks}", number)
        if len(set(entries)) != len(entries):
            raise AlistParseError(f"column {v + 1} repeats a check index", number)
        edge_var.extend([v] * len(entries))
        edge_check.extend(x - 1 for x in entries)

    column_edges = set(zip(edge_var, edge_check))
    row_edges = set()
    for c in range(n_checks):
        number, values = take(None, f"row {c + 1}")
        entries = [x for x in values if x != 0]
        if len(entries) != row_degrees[c]:
            raise AlistParseError(
                f"row {c + 1} lists {len(entries)} variables, degree is {row_degrees[c]}", number
            )
        for x in entries:
            if x < 1 or x > n_vars or (x - 1, c) not in column_edges:
                raise AlistParseError(
                    f"row {c + 1} entry {x} does not match the column lists", number
                )
            row_edges.add((x - 1, c))
    if row_edges != column_edges:
        raise AlistParseError("row lists omit edges present in the column lists", lines[-1][0])
    if cursor < len(lines):
        raise AlistParseError("trailing data after row lists", lines[cursor][0])

    return TannerGraph(n_vars, n_checks, np.array(edge_var), np.array(edge_check))


def write_alist(graph: TannerGraph, file_path: Union[str, Path]) -> None:
    Path(file_path).write_text(to_alist(graph), encoding="utf-8")
    logger.info(f"Wrote alist for N={graph.n_vars}, K={graph.n_checks} to {file_path}")


def read_alist(file_path: Union[str, Path]) -> TannerGraph:
    return from_alist(Path(file_path).read_text(encoding="utf-8"))


def write_distribution(dist: DegreeDistribution, file_path: Union[str, Path]) -> None:
    Path(file_path).write_text(json.dumps(dist.to_dict(), indent=2) + "\n", encoding="utf-8")


def read_distribution(file_path: Union[str, Path]) -> DegreeDistribution:
    try:
        data = json.loads(Path(file_path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ValueError(f"Invalid JSON in {file_path}: {e}")
    if not isinstance(data, dict):
        raise ValueError(f"{file_path} does not contain a JSON object")
    return DegreeDistribution.from_dict(data)


class CodeLoader:
    """Load a code description from any supported file format."""

    def __init__(self) -> None:
        self.loaders: Dict[CodeFormat, Callable[[Path], Code]] = {
            CodeFormat.ALIST: read_alist,
            CodeFormat.DEGREE_JSON: read_distribution,
        }

    def load(self, file_path: Union[str, Path], code_format: Optional[CodeFormat] = None) -> Code:
        file_path = Path(file_path)
        if not file_path.exists():
            raise FileNotFoundError(f"Code file not found: {file_path}")

        if code_format is None:
            code_format = FormatDetector.detect_format(file_path)

        loader = self.loaders.get(code_format)
        if loader is None:
            raise ValueError(f"Unsupported code file format: {code_format}")

        logger.debug(f"Loading {file_path} as {code_format.value}")
        return loader(file_path)


def load_code(file_path: Union[str, Path]) -> Code:
    return CodeLoader().load(file_path)
