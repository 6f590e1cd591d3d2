"""Cells, alphabets, regions and torus-shaped configurations.

The lattice is a finite d-dimensional torus with even side lengths, used as an
exactly computable stand-in for an unbounded lattice (callers that need
unbounded-lattice meaning check light cones against the torus size, see
``margolab.engine.light_cone``).  A configuration assigns one alphabet symbol
to every cell; cells never listed explicitly hold the alphabet's quiescent
(background) symbol, so "finite support" is well defined.

Everything here is value-semantic: operations return fresh objects and never
mutate their inputs, which makes unrestricted concurrent reads safe.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

import numpy as np

Cell = tuple  # tuple[int, ...]; one coordinate per torus axis

MAX_SYMBOLS = 16

# Tokens with a meaning in the text formats; they cannot double as symbols.
_RESERVED_TOKENS = {"cell", "same"}
_FORBIDDEN_CHARS = set("#:=()|,")


class ValidationError(ValueError):
    """A lattice object or an operation argument is malformed."""


def _as_cell(obj) -> Cell:
    return tuple(int(x) for x in obj)


@dataclass(frozen=True)
class Alphabet:
    """Ordered symbol labels plus the index of the background symbol."""

    symbols: tuple
    quiescent: int = 0

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(str(s) for s in self.symbols))
        k = len(self.symbols)
        if k < 2:
            raise ValidationError("an alphabet needs at least two symbols")
        if k > MAX_SYMBOLS:
            raise ValidationError(f"alphabets larger than {MAX_SYMBOLS} symbols are not supported")
        if len(set(self.symbols)) != k:
            raise ValidationError(f"duplicate symbols in {self.symbols}")
        for s in self.symbols:
            if not s or any(c.isspace() for c in s) or s in _RESERVED_TOKENS or set(s) & _FORBIDDEN_CHARS:
                raise ValidationError(f"invalid symbol {s!r}")
        if not 0 <= self.quiescent < k:
            raise ValidationError(f"quiescent index {self.quiescent} out of range for {k} symbols")

    @property
    def size(self) -> int:
        return len(self.symbols)

    def index(self, symbol) -> int:
        """Resolve a symbol label (or an in-range index) to its index."""
        if isinstance(symbol, str):
            try:
                return self.symbols.index(symbol)
            except ValueError:
                raise ValidationError(f"unknown symbol {symbol!r}") from None
        i = int(symbol)
        if not 0 <= i < self.size:
            raise ValidationError(f"symbol index {i} out of range for {self.size} symbols")
        return i


BINARY = Alphabet(("0", "1"))


@dataclass(frozen=True)
class Torus:
    """Side lengths of the periodic lattice; every side must be even so the
    two block partitions of the update scheme tile it exactly."""

    dims: tuple

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(n) for n in self.dims))
        if len(self.dims) < 1:
            raise ValidationError("torus needs at least one axis")
        for n in self.dims:
            if n <= 0 or n % 2 != 0:
                raise ValidationError(f"torus sides must be positive and even, got {self.dims}")

    @property
    def ndim(self) -> int:
        return len(self.dims)

    @property
    def ncells(self) -> int:
        out = 1
        for n in self.dims:
            out *= n
        return out

    def wrap(self, cell) -> Cell:
        cell = _as_cell(cell)
        if len(cell) != self.ndim:
            raise ValidationError(f"cell {cell} has wrong dimension for torus {self.dims}")
        return tuple(c % n for c, n in zip(cell, self.dims))

    def contains(self, cell) -> bool:
        cell = _as_cell(cell)
        return len(cell) == self.ndim and all(0 <= c < n for c, n in zip(cell, self.dims))

    def cells(self) -> Iterator[Cell]:
        """All cells in lexicographic order."""
        return itertools.product(*(range(n) for n in self.dims))

    def cell_index(self, cell) -> int:
        """Position of a cell in lexicographic order."""
        cell = _as_cell(cell)
        if not self.contains(cell):
            raise ValidationError(f"cell {cell} not on torus {self.dims}")
        idx = 0
        for c, n in zip(cell, self.dims):
            idx = idx * n + c
        return idx


@dataclass(frozen=True)
class Region:
    """A finite set of cells, stored sorted so word positions are canonical."""

    cells: tuple
    _cellset: frozenset = field(init=False, repr=False, compare=False)

    def __init__(self, cells):
        cells = sorted({_as_cell(c) for c in cells})
        if cells:
            d = len(cells[0])
            if any(len(c) != d for c in cells):
                raise ValidationError("region cells must share one dimension")
        object.__setattr__(self, "cells", tuple(cells))
        object.__setattr__(self, "_cellset", frozenset(cells))

    def coord_arrays(self) -> tuple:
        """Per-axis integer index arrays (memoized; regions are immutable),
        suitable for fancy-indexing a configuration's value array."""
        cached = getattr(self, "_coord_arrays", None)
        if cached is None:
            cached = tuple(np.array(axis, dtype=np.intp) for axis in zip(*self.cells))
            object.__setattr__(self, "_coord_arrays", cached)
        return cached

    def __len__(self) -> int:
        return len(self.cells)

    def __iter__(self) -> Iterator[Cell]:
        return iter(self.cells)

    def __contains__(self, cell) -> bool:
        return _as_cell(cell) in self._cellset

    def position(self, cell) -> int:
        """Word position of a cell (index into the sorted cell tuple)."""
        cell = _as_cell(cell)
        try:
            return self.cells.index(cell)
        except ValueError:
            raise ValidationError(f"cell {cell} not in region") from None

    def issubset(self, other: "Region") -> bool:
        return self._cellset <= other._cellset

    def intersection(self, other: "Region") -> "Region":
        return Region(self._cellset & other._cellset)

    def union(self, other: "Region") -> "Region":
        return Region(self._cellset | other._cellset)

    def difference(self, other: "Region") -> "Region":
        return Region(self._cellset - other._cellset)

    def on_torus(self, torus: Torus) -> bool:
        if not self.cells:
            return True
        if len(self.cells[0]) != torus.ndim:
            return False
        return all(
            bool((axis >= 0).all() and (axis < n).all())
            for axis, n in zip(self.coord_arrays(), torus.dims)
        )


def full_region(torus: Torus) -> Region:
    return Region(torus.cells())


def complement_region(torus: Torus, region: Region) -> Region:
    """All torus cells not in ``region``."""
    if not region.on_torus(torus):
        raise ValidationError("region does not lie on the torus")
    inside = region._cellset
    return Region(c for c in torus.cells() if c not in inside)


@dataclass(frozen=True, eq=False)
class Configuration:
    """A total assignment of symbol indices to every torus cell.

    Values are held in a read-only uint8 array of shape ``torus.dims``; the
    array is copied on construction, so configurations never alias caller
    state.
    """

    torus: Torus
    alphabet: Alphabet
    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.uint8, copy=True)
        if arr.shape != self.torus.dims:
            raise ValidationError(f"values shape {arr.shape} does not match torus {self.torus.dims}")
        if arr.size and int(arr.max()) >= self.alphabet.size:
            raise ValidationError("configuration holds a symbol index outside the alphabet")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    def __getitem__(self, cell) -> int:
        return int(self.values[self.torus.wrap(cell)])

    def __eq__(self, other) -> bool:
        if not isinstance(other, Configuration):
            return NotImplemented
        return (
            self.torus == other.torus
            and self.alphabet == other.alphabet
            and np.array_equal(self.values, other.values)
        )

    def __hash__(self) -> int:
        return hash((self.torus, self.alphabet, self.values.tobytes()))

    def support(self) -> Region:
        """Cells holding a non-quiescent symbol."""
        hits = np.argwhere(self.values != self.alphabet.quiescent)
        return Region(map(tuple, hits.tolist()))


@dataclass(frozen=True)
class RegionConfig:
    """Symbol indices over one region, aligned with the region's cell order."""

    region: Region
    alphabet: Alphabet
    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))
        if len(self.values) != len(self.region):
            raise ValidationError("region config must assign every region cell exactly once")
        if any(not 0 <= v < self.alphabet.size for v in self.values):
            raise ValidationError("region config holds a symbol index outside the alphabet")

    def __getitem__(self, cell) -> int:
        return self.values[self.region.position(cell)]

    def value_map(self) -> dict:
        return dict(zip(self.region.cells, self.values))


def make_config(torus: Torus, alphabet: Alphabet, assignments: Mapping | None = None) -> Configuration:
    """Build a configuration from a partial cell assignment; every cell not
    assigned holds the quiescent symbol.  Symbols may be given as labels or
    indices."""
    arr = np.full(torus.dims, alphabet.quiescent, dtype=np.uint8)
    for cell, symbol in (assignments or {}).items():
        cell = _as_cell(cell)
        if not torus.contains(cell):
            raise ValidationError(f"cell {cell} not on torus {torus.dims}")
        arr[cell] = alphabet.index(symbol)
    return Configuration(torus, alphabet, arr)


def restrict(c: Configuration, region: Region) -> RegionConfig:
    """The configuration seen through a region window."""
    if not region.on_torus(c.torus):
        raise ValidationError("region does not lie on the torus")
    return RegionConfig(region, c.alphabet, tuple(int(c.values[cell]) for cell in region))


def patch(c: Configuration, r: RegionConfig) -> Configuration:
    """Overwrite ``c`` with ``r`` on ``r.region``; elsewhere ``c`` is kept."""
    if r.alphabet != c.alphabet:
        raise ValidationError("alphabet mismatch between configuration and patch")
    if not r.region.on_torus(c.torus):
        raise ValidationError("patch region does not lie on the torus")
    arr = np.array(c.values, copy=True)
    for cell, v in zip(r.region.cells, r.values):
        arr[cell] = v
    return Configuration(c.torus, c.alphabet, arr)


def shift(c: Configuration, v) -> Configuration:
    """Translate the configuration: result(x) = c(x - v), torus arithmetic."""
    v = _as_cell(v)
    if len(v) != c.torus.ndim:
        raise ValidationError(f"shift vector {v} has wrong dimension")
    arr = np.roll(c.values, shift=v, axis=tuple(range(c.torus.ndim)))
    return Configuration(c.torus, c.alphabet, arr)


def shift_region(region: Region, v, torus: Torus) -> Region:
    """Image of every region cell under +v, wrapped on the torus."""
    v = _as_cell(v)
    if region.cells and len(v) != len(region.cells[0]):
        raise ValidationError(f"shift vector {v} has wrong dimension")
    return Region(torus.wrap(tuple(x + d for x, d in zip(cell, v))) for cell in region)


# ---------------------------------------------------------------------------
# word coding: a word is a tuple of symbol indices read as a base-k numeral,
# first position most significant.  Used for block words, region words and
# quantum basis indices alike.

def encode_word(word: Sequence[int], k: int) -> int:
    idx = 0
    for w in word:
        if not 0 <= w < k:
            raise ValidationError(f"digit {w} out of range for base {k}")
        idx = idx * k + w
    return idx


def decode_word(index: int, length: int, k: int) -> tuple:
    if not 0 <= index < k**length:
        raise ValidationError(f"word index {index} out of range for {length} base-{k} digits")
    out = []
    for _ in range(length):
        index, digit = divmod(index, k)
        out.append(digit)
    return tuple(reversed(out))


# ---------------------------------------------------------------------------
# cell and configuration text format

def format_cell(cell) -> str:
    return "(" + ",".join(str(c) for c in _as_cell(cell)) + ")"


def parse_cell(text: str) -> Cell:
    s = text.strip()
    if not (s.startswith("(") and s.endswith(")")):
        raise ValidationError(f"cannot parse cell {text!r}; expected (x,y,...)")
    inner = s[1:-1].strip()
    if not inner:
        raise ValidationError(f"cannot parse cell {text!r}; empty coordinates")
    try:
        return tuple(int(p.strip()) for p in inner.split(","))
    except ValueError:
        raise ValidationError(f"cannot parse cell {text!r}; coordinates must be integers") from None


def parse_cells(text: str) -> list:
    """Parse whitespace- or semicolon-separated cell literals."""
    chunks = text.replace(";", " ").split(")")
    cells = []
    for chunk in chunks:
        chunk = chunk.strip()
        if not chunk:
            continue
        cells.append(parse_cell(chunk + ")"))
    return cells


def config_to_text(c: Configuration) -> str:
    """Canonical text form: header plus one ``cell (...) = s`` line per
    non-quiescent cell, in lexicographic cell order."""
    lines = [
        "torus: " + " x ".join(str(n) for n in c.torus.dims),
        "alphabet: " + " ".join(c.alphabet.symbols),
        "quiescent: " + c.alphabet.symbols[c.alphabet.quiescent],
    ]
    for cell in c.torus.cells():
        v = int(c.values[cell])
        if v != c.alphabet.quiescent:
            lines.append(f"cell {format_cell(cell)} = {c.alphabet.symbols[v]}")
    return "\n".join(lines) + "\n"


def config_from_text(text: str) -> Configuration:
    """Parse the configuration text format (general ``cell`` lines or, for
    d <= 2, rows of symbols; ``#`` starts a comment)."""
    torus = None
    symbols = None
    quiescent_label = None
    body: list[tuple[int, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, sep, rest = line.partition(":")
        key = head.strip().lower()
        if sep and key in ("torus", "alphabet", "quiescent"):
            if (key == "torus" and torus) or (key == "alphabet" and symbols) or (
                key == "quiescent" and quiescent_label
            ):
                raise ValidationError(f"line {lineno}: duplicate {key} header")
            if key == "torus":
                try:
                    torus = Torus(int(p.strip()) for p in rest.split("x"))
                except ValueError:
                    raise ValidationError(f"line {lineno}: cannot parse torus sides {rest!r}") from None
            elif key == "alphabet":
                symbols = tuple(rest.split())
            else:
                quiescent_label = rest.strip()
        else:
            body.append((lineno, line))
    if torus is None or symbols is None:
        raise ValidationError("configuration text needs torus and alphabet headers")
    if quiescent_label is not None and quiescent_label not in symbols:
        raise ValidationError(f"quiescent symbol {quiescent_label!r} not in alphabet")
    quiescent = symbols.index(quiescent_label) if quiescent_label is not None else 0
    alphabet = Alphabet(symbols, quiescent)

    assignments: dict = {}
    rows: list[tuple[int, list[str]]] = []
    for lineno, line in body:
        if line.startswith("cell"):
            rest = line[len("cell"):].strip()
            lhs, sep, rhs = rest.partition("=")
            if not sep:
                raise ValidationError(f"line {lineno}: expected 'cell (...) = symbol'")
            cell = parse_cell(lhs)
            if not torus.contains(cell):
                raise ValidationError(f"line {lineno}: cell {cell} not on torus {torus.dims}")
            assignments[cell] = alphabet.index(rhs.strip())
        else:
            rows.append((lineno, line.split()))
    if assignments and rows:
        raise ValidationError("configuration text mixes cell lines with symbol rows")
    if rows:
        if torus.ndim > 2:
            raise ValidationError("symbol rows are only supported for 1 or 2 axes")
        if torus.ndim == 1:
            rows_expected, row_len = 1, torus.dims[0]
        else:
            rows_expected, row_len = torus.dims
        if len(rows) != rows_expected:
            raise ValidationError(f"expected {rows_expected} symbol rows, got {len(rows)}")
        for i, (lineno, tokens) in enumerate(rows):
            if len(tokens) != row_len:
                raise ValidationError(f"line {lineno}: expected {row_len} symbols, got {len(tokens)}")
            for j, tok in enumerate(tokens):
                cell = (j,) if torus.ndim == 1 else (i, j)
                assignments[cell] = alphabet.index(tok)
    return make_config(torus, alphabet, assignments)
