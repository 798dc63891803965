"""Integer matrices, block structure, and crossbar schedules.

Everything downstream (decomposition, balancing, the simulator) works on the
types defined here. Matrices are dense, row-major lists of nonnegative
integers. Entries live in the unsigned 64-bit range; pushing an entry outside
that range is a hard error, never a silent wrap. All indices, including the
ones in the text formats, are 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

U64_MAX = 2**64 - 1


class DimensionError(ValueError):
    """Shape of an argument does not match what the operation needs."""


class EntryRangeError(ValueError):
    """A matrix entry left the allowed range [0, 2**64 - 1]."""


class MatrixParseError(ValueError):
    """Malformed matrix text. Carries 1-based line and column numbers."""

    def __init__(self, message: str, line: int, column: int) -> None:
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


def _check_entry(value: object) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise EntryRangeError(f"matrix entries must be ints, got {value!r}")
    if value < 0 or value > U64_MAX:
        raise EntryRangeError(f"entry {value} outside [0, 2**64 - 1]")
    return value


@dataclass(frozen=True)
class BlockShape:
    """Two-tier shape: ``servers`` servers with ``gpus_per_server`` ports each."""

    servers: int
    gpus_per_server: int

    def __post_init__(self) -> None:
        if self.servers < 1 or self.gpus_per_server < 1:
            raise DimensionError(
                f"shape needs positive dimensions, got {self.servers}x{self.gpus_per_server}"
            )

    @property
    def ports(self) -> int:
        return self.servers * self.gpus_per_server


class IntMatrix:
    """Dense matrix of nonnegative integers with range-checked mutation."""

    __slots__ = ("_rows", "nrows", "ncols")

    def __init__(self, rows: Iterable[Iterable[int]]) -> None:
        data = [list(r) for r in rows]
        if not data or not data[0]:
            raise DimensionError("matrix needs at least one row and one column")
        width = len(data[0])
        for r in data:
            if len(r) != width:
                raise DimensionError("ragged rows in matrix data")
            for v in r:
                _check_entry(v)
        self._rows = data
        self.nrows = len(data)
        self.ncols = width

    @classmethod
    def zeros(cls, nrows: int, ncols: int) -> "IntMatrix":
        if nrows < 1 or ncols < 1:
            raise DimensionError("matrix needs positive dimensions")
        out = cls.__new__(cls)
        out._rows = [[0] * ncols for _ in range(nrows)]
        out.nrows = nrows
        out.ncols = ncols
        return out

    def __getitem__(self, key: tuple[int, int]) -> int:
        r, c = key
        return self._rows[r][c]

    def __setitem__(self, key: tuple[int, int], value: int) -> None:
        r, c = key
        self._rows[r][c] = _check_entry(value)

    def add_at(self, r: int, c: int, delta: int) -> None:
        """Add ``delta`` (possibly negative) to one entry, range-checked."""
        self._rows[r][c] = _check_entry(self._rows[r][c] + delta)

    def row(self, r: int) -> list[int]:
        return list(self._rows[r])

    def to_rows(self) -> list[list[int]]:
        return [list(r) for r in self._rows]

    def copy(self) -> "IntMatrix":
        out = IntMatrix.__new__(IntMatrix)
        out._rows = [list(r) for r in self._rows]
        out.nrows = self.nrows
        out.ncols = self.ncols
        return out

    def total(self) -> int:
        return sum(sum(r) for r in self._rows)

    def is_zero(self) -> bool:
        return all(v == 0 for r in self._rows for v in r)

    def iter_entries(self) -> Iterator[tuple[int, int, int]]:
        for r, row in enumerate(self._rows):
            for c, v in enumerate(row):
                yield r, c, v

    def add(self, other: "IntMatrix") -> "IntMatrix":
        """Entrywise sum as a new matrix."""
        if (self.nrows, self.ncols) != (other.nrows, other.ncols):
            raise DimensionError("size mismatch in matrix addition")
        out = IntMatrix.__new__(IntMatrix)
        out._rows = [
            [_check_entry(a + b) for a, b in zip(ra, rb)]
            for ra, rb in zip(self._rows, other._rows)
        ]
        out.nrows = self.nrows
        out.ncols = self.ncols
        return out

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, IntMatrix):
            return NotImplemented
        return self._rows == other._rows

    def __hash__(self) -> None:  # type: ignore[override]
        raise TypeError("IntMatrix is mutable and unhashable")

    def __repr__(self) -> str:
        return f"IntMatrix({self._rows!r})"


class BlockMatrix:
    """A ports x ports IntMatrix viewed as an n x n grid of m x m blocks."""

    __slots__ = ("shape", "data")

    def __init__(self, shape: BlockShape, data: IntMatrix) -> None:
        if data.nrows != shape.ports or data.ncols != shape.ports:
            raise DimensionError(
                f"data is {data.nrows}x{data.ncols}, shape wants {shape.ports}x{shape.ports}"
            )
        self.shape = shape
        self.data = data

    @classmethod
    def zeros(cls, shape: BlockShape) -> "BlockMatrix":
        return cls(shape, IntMatrix.zeros(shape.ports, shape.ports))

    def block(self, i: int, j: int) -> IntMatrix:
        """Copy of block (i, j); local entry (l, k) is port (i*m+l, j*m+k)."""
        m = self.shape.gpus_per_server
        n = self.shape.servers
        if not (0 <= i < n and 0 <= j < n):
            raise DimensionError(f"block index ({i}, {j}) outside {n}x{n}")
        return IntMatrix(
            [self.data._rows[i * m + l][j * m : (j + 1) * m] for l in range(m)]
        )

    def set_block(self, i: int, j: int, block: IntMatrix) -> None:
        m = self.shape.gpus_per_server
        if block.nrows != m or block.ncols != m:
            raise DimensionError(f"block must be {m}x{m}")
        for l in range(m):
            for k in range(m):
                self.data[i * m + l, j * m + k] = block[l, k]

    def copy(self) -> "BlockMatrix":
        return BlockMatrix(self.shape, self.data.copy())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BlockMatrix):
            return NotImplemented
        return self.shape == other.shape and self.data == other.data

    def __repr__(self) -> str:
        s = self.shape
        return f"BlockMatrix({s.servers}x{s.gpus_per_server}, total={self.data.total()})"


class SubPermutation:
    """Partial one-to-one assignment of rows to columns on N ports."""

    __slots__ = ("size", "_assign")

    def __init__(self, size: int, pairs: Iterable[tuple[int, int]] = ()) -> None:
        if size < 1:
            raise DimensionError("subpermutation needs positive size")
        self.size = size
        self._assign: dict[int, int] = {}
        used_cols: set[int] = set()
        for r, c in pairs:
            if not (0 <= r < size and 0 <= c < size):
                raise DimensionError(f"pair ({r}, {c}) outside 0..{size - 1}")
            if r in self._assign:
                raise ValueError(f"row {r} matched twice")
            if c in used_cols:
                raise ValueError(f"column {c} matched twice")
            self._assign[r] = c
            used_cols.add(c)

    def pairs(self) -> list[tuple[int, int]]:
        return sorted(self._assign.items())

    def column_of(self, r: int) -> int | None:
        return self._assign.get(r)

    def __len__(self) -> int:
        return len(self._assign)

    def matrix(self) -> IntMatrix:
        out = IntMatrix.zeros(self.size, self.size)
        for r, c in self._assign.items():
            out[r, c] = 1
        return out

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SubPermutation):
            return NotImplemented
        return self.size == other.size and self._assign == other._assign

    def __repr__(self) -> str:
        inner = " ".join(f"{r}>{c}" for r, c in self.pairs())
        return f"SubPermutation({self.size}, [{inner}])"


class Schedule:
    """An ordered list of crossbar slots that together serve ``source_total``.

    Empty slots are kept: the slot count is the schedule length, which is the
    quantity the simulator charges for.
    """

    __slots__ = ("slots", "source_total")

    def __init__(self, slots: list[SubPermutation], source_total: IntMatrix) -> None:
        n = source_total.nrows
        if source_total.ncols != n:
            raise DimensionError("source_total must be square")
        for s in slots:
            if s.size != n:
                raise DimensionError("slot size does not match source_total")
        self.slots = list(slots)
        self.source_total = source_total

    @property
    def slot_count(self) -> int:
        return len(self.slots)

    def served_total(self) -> IntMatrix:
        out = IntMatrix.zeros(self.source_total.nrows, self.source_total.ncols)
        for s in self.slots:
            for r, c in s.pairs():
                out.add_at(r, c, 1)
        return out

    def reconstructs_source(self) -> bool:
        return self.served_total() == self.source_total

    def __repr__(self) -> str:
        return f"Schedule({self.slot_count} slots, N={self.source_total.nrows})"


def row_sums(x: IntMatrix) -> list[int]:
    return [sum(r) for r in x._rows]


def col_sums(x: IntMatrix) -> list[int]:
    out = [0] * x.ncols
    for r in x._rows:
        for c, v in enumerate(r):
            out[c] += v
    return out


def scale_of(x: IntMatrix) -> int:
    """Largest row or column sum of a square matrix (0 for the zero matrix)."""
    if x.nrows != x.ncols:
        raise DimensionError(f"scale needs a square matrix, got {x.nrows}x{x.ncols}")
    return max(max(row_sums(x)), max(col_sums(x)))


def is_subpermutation(x: IntMatrix) -> bool:
    """True iff x is 0/1 with at most one 1 per row and per column."""
    if x.nrows != x.ncols:
        raise DimensionError("is_subpermutation needs a square matrix")
    for r in x._rows:
        for v in r:
            if v not in (0, 1):
                return False
    return max(row_sums(x)) <= 1 and max(col_sums(x)) <= 1


def aggregate_servers(x: BlockMatrix) -> IntMatrix:
    """Server-pair totals: entry (i, j) is the sum over block (i, j)."""
    n = x.shape.servers
    m = x.shape.gpus_per_server
    out = IntMatrix.zeros(n, n)
    for i in range(n):
        for j in range(n):
            total = 0
            for l in range(m):
                row = x.data._rows[i * m + l]
                total += sum(row[j * m : (j + 1) * m])
            out[i, j] = total
    return out


def completion_lower_bound(x: BlockMatrix) -> int:
    """Minimum slot count any schedule needs: the busiest port's backlog."""
    return scale_of(x.data)


def ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def parse_matrix_text(text: str) -> BlockMatrix:
    """Parse the matrix text format.

    First line: ``n m`` (servers, GPUs per server). Then n*m lines of n*m
    space-separated nonnegative integers. A plain N x N matrix is written with
    header ``N 1``.
    """
    lines = text.splitlines()
    pos = 0
    while pos < len(lines) and not lines[pos].strip():
        pos += 1
    if pos >= len(lines):
        raise MatrixParseError("empty input", 1, 1)
    header = lines[pos].split()
    if len(header) != 2:
        raise MatrixParseError("header must be two integers: n m", pos + 1, 1)
    try:
        n, m = int(header[0]), int(header[1])
    except ValueError:
        raise MatrixParseError("header must be two integers: n m", pos + 1, 1) from None
    if n < 1 or m < 1:
        raise MatrixParseError(f"header dimensions must be positive, got {n} {m}", pos + 1, 1)
    ports = n * m
    rows: list[list[int]] = []
    lineno = pos + 1
    for line in lines[pos + 1 :]:
        lineno += 1
        if not line.strip():
            continue
        tokens = line.split()
        if len(tokens) != ports:
            raise MatrixParseError(
                f"expected {ports} entries, got {len(tokens)}", lineno, 1
            )
        row = []
        scan = 0
        for tok in tokens:
            col = line.index(tok, scan) + 1
            scan = col - 1 + len(tok)
            try:
                v = int(tok)
            except ValueError:
                raise MatrixParseError(f"not an integer: {tok!r}", lineno, col) from None
            if v < 0:
                raise MatrixParseError(f"negative entry: {v}", lineno, col)
            if v > U64_MAX:
                raise MatrixParseError(f"entry {v} exceeds 2**64 - 1", lineno, col)
            row.append(v)
        rows.append(row)
        if len(rows) == ports:
            break
    if len(rows) != ports:
        raise MatrixParseError(
            f"expected {ports} matrix rows, got {len(rows)}", lineno + 1, 1
        )
    return BlockMatrix(BlockShape(n, m), IntMatrix(rows))


def render_matrix_text(x: BlockMatrix) -> str:
    """Inverse of parse_matrix_text."""
    head = f"{x.shape.servers} {x.shape.gpus_per_server}"
    body = "\n".join(" ".join(str(v) for v in r) for r in x.data._rows)
    return f"{head}\n{body}\n"


def block_shape_of(n: int, m: int) -> BlockShape:
    return BlockShape(n, m)


__all__ = [
    "U64_MAX",
    "DimensionError",
    "EntryRangeError",
    "MatrixParseError",
    "BlockShape",
    "IntMatrix",
    "BlockMatrix",
    "SubPermutation",
    "Schedule",
    "row_sums",
    "col_sums",
    "scale_of",
    "is_subpermutation",
    "aggregate_servers",
    "completion_lower_bound",
    "ceil_div",
    "parse_matrix_text",
    "render_matrix_text",
]
