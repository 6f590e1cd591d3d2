"""Block-permutation rules and their text language.

A rule consists of two permutations of block words, one applied on the
even-anchored block partition and one on the odd-anchored partition (see
``margolab.engine``).  Both tables must be bijections -- that is what makes
the dynamics reversible -- and bijectivity is checked eagerly at parse time.

The rule language is line oriented, ``#`` starts a comment::

    alphabet: 0 1
    quiescent: 0
    dim: 2
    even: 0 1 0 0 -> 1 1 0 0
    even: 1 1 0 0 -> 0 1 0 0
    odd: same

Only non-identity mappings are listed; every block word that never appears on
a left-hand side maps to itself.  A block word lists the symbols of the block
cells in canonical offset order: offset index p has binary offset
``((p >> 0) & 1, (p >> 1) & 1, ...)``, so in two dimensions the order is
(0,0), (1,0), (0,1), (1,1).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .lattice import Alphabet, ValidationError, decode_word, encode_word

MAX_TABLE = 1 << 16


class RuleParseError(ValueError):
    """Syntax or semantic error in rule source text; carries line/column."""

    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class RuleValidationError(ValueError):
    """A phase table is not a bijection (or otherwise unusable)."""


@dataclass(frozen=True)
class BlockShape:
    """Geometry of one update block: the 2^d cells at binary offsets."""

    ndim: int

    def __post_init__(self):
        if self.ndim < 1:
            raise ValidationError("block dimension must be at least 1")

    @property
    def block_size(self) -> int:
        return 1 << self.ndim

    @property
    def offsets(self) -> tuple:
        """Block-cell offsets in canonical order (axis 0 varies fastest)."""
        return tuple(
            tuple((p >> axis) & 1 for axis in range(self.ndim)) for p in range(self.block_size)
        )


@dataclass(frozen=True, eq=False)
class BlockRule:
    """Two phase tables over block words, stored as permutation arrays.

    ``even_perm[i]`` is the word index the block word ``i`` maps to during an
    even step (likewise ``odd_perm``).  Construction checks structure only;
    ``validate_rule`` checks bijectivity and is called by ``parse_rule``.
    """

    alphabet: Alphabet
    shape: BlockShape
    even_perm: np.ndarray
    odd_perm: np.ndarray

    def __post_init__(self):
        n = self.table_size
        for name in ("even_perm", "odd_perm"):
            arr = np.asarray(getattr(self, name), dtype=np.int64)
            if arr.shape != (n,):
                raise ValidationError(f"{name} must list all {n} block words")
            if arr.size and (arr.min() < 0 or arr.max() >= n):
                raise ValidationError(f"{name} maps outside the block word range")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def table_size(self) -> int:
        return self.alphabet.size ** self.shape.block_size

    def __eq__(self, other) -> bool:
        if not isinstance(other, BlockRule):
            return NotImplemented
        return (
            self.alphabet == other.alphabet
            and self.shape == other.shape
            and np.array_equal(self.even_perm, other.even_perm)
            and np.array_equal(self.odd_perm, other.odd_perm)
        )

    def __hash__(self) -> int:
        return hash((self.alphabet, self.shape, self.even_perm.tobytes(), self.odd_perm.tobytes()))

    def word_str(self, index: int) -> str:
        digits = decode_word(index, self.shape.block_size, self.alphabet.size)
        return " ".join(self.alphabet.symbols[d] for d in digits)


def identity_rule(alphabet: Alphabet, ndim: int) -> BlockRule:
    shape = BlockShape(ndim)
    table = np.arange(alphabet.size ** shape.block_size, dtype=np.int64)
    return BlockRule(alphabet, shape, table, table.copy())


@dataclass(frozen=True)
class RuleReport:
    """Outcome of validating a rule: table size and cycle structure."""

    word_count: int
    even_cycles: dict = field(compare=False)
    odd_cycles: dict = field(compare=False)
    phases_identical: bool

    @property
    def even_fixed_points(self) -> int:
        return self.even_cycles.get(1, 0)

    @property
    def odd_fixed_points(self) -> int:
        return self.odd_cycles.get(1, 0)

    def summary(self) -> str:
        if self.phases_identical:
            return f"valid, {self.even_fixed_points} fixed points"
        return (
            f"valid, even: {self.even_fixed_points} fixed points, "
            f"odd: {self.odd_fixed_points} fixed points"
        )


def _check_bijection(rule: BlockRule, perm: np.ndarray, phase_name: str) -> None:
    counts = np.bincount(perm, minlength=rule.table_size)
    collided = np.nonzero(counts > 1)[0]
    if collided.size:
        image = int(collided[0])
        sources = np.nonzero(perm == image)[0][:2]
        a, b = (rule.word_str(int(s)) for s in sources)
        raise RuleValidationError(
            f"{phase_name} table is not a bijection: "
            f"'{a}' and '{b}' both map to '{rule.word_str(image)}'"
        )


def _cycle_lengths(perm: np.ndarray) -> dict:
    seen = np.zeros(len(perm), dtype=bool)
    cycles: dict = {}
    for start in range(len(perm)):
        if seen[start]:
            continue
        length = 0
        i = start
        while not seen[i]:
            seen[i] = True
            i = int(perm[i])
            length += 1
        cycles[length] = cycles.get(length, 0) + 1
    return cycles


def validate_rule(rule: BlockRule) -> RuleReport:
    """Confirm both phase tables are bijections and summarise their cycles.

    Raises ``RuleValidationError`` naming one colliding pair otherwise.
    """
    _check_bijection(rule, rule.even_perm, "even")
    _check_bijection(rule, rule.odd_perm, "odd")
    return RuleReport(
        word_count=rule.table_size,
        even_cycles=_cycle_lengths(rule.even_perm),
        odd_cycles=_cycle_lengths(rule.odd_perm),
        phases_identical=bool(np.array_equal(rule.even_perm, rule.odd_perm)),
    )


def invert(rule: BlockRule) -> BlockRule:
    """The rule whose phase tables are the inverse permutations."""
    validate_rule(rule)
    return BlockRule(rule.alphabet, rule.shape, np.argsort(rule.even_perm), np.argsort(rule.odd_perm))


# ---------------------------------------------------------------------------
# parsing

def _parse_word(tokens, alphabet: Alphabet, block_size: int, line: int, raw: str):
    if len(tokens) != block_size:
        raise RuleParseError(
            f"block word needs {block_size} symbols, got {len(tokens)}", line
        )
    digits = []
    for tok in tokens:
        if tok not in alphabet.symbols:
            raise RuleParseError(f"unknown symbol {tok!r}", line, raw.find(tok) + 1)
        digits.append(alphabet.symbols.index(tok))
    return encode_word(digits, alphabet.size)


def parse_rule(source: str) -> BlockRule:
    """Parse and validate rule source text.

    Unlisted block words map to themselves; if no ``odd`` section appears the
    odd table is the identity.  The resulting tables are checked for
    bijectivity, so a parsed rule is always reversible.
    """
    alphabet = None
    quiescent = None
    ndim = None
    mappings = {"even": [], "odd": []}
    odd_same = False
    seen_headers = set()

    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, sep, rest = line.partition(":")
        key = head.strip().lower()
        if not sep:
            raise RuleParseError(f"expected 'keyword: ...', got {line!r}", lineno)
        if key in ("alphabet", "quiescent", "dim"):
            if key in seen_headers:
                raise RuleParseError(f"duplicate {key} header", lineno)
            seen_headers.add(key)
            if key == "alphabet":
                try:
                    alphabet = Alphabet(tuple(rest.split()), 0)
                except ValidationError as exc:
                    raise RuleParseError(str(exc), lineno) from None
            elif key == "quiescent":
                quiescent = (rest.strip(), lineno)
            else:
                try:
                    ndim = int(rest.strip())
                except ValueError:
                    raise RuleParseError(f"dim must be an integer, got {rest.strip()!r}", lineno) from None
                if ndim < 1:
                    raise RuleParseError("dim must be at least 1", lineno)
        elif key in ("even", "odd"):
            if alphabet is None or ndim is None:
                raise RuleParseError("alphabet and dim must be declared before mappings", lineno)
            if key == "odd" and rest.strip() == "same":
                if mappings["odd"] or odd_same:
                    raise RuleParseError("'odd: same' conflicts with other odd lines", lineno)
                odd_same = True
                continue
            if key == "odd" and odd_same:
                raise RuleParseError("'odd: same' conflicts with other odd lines", lineno)
            lhs_text, arrow, rhs_text = rest.partition("->")
            if not arrow:
                raise RuleParseError("mapping needs '->'", lineno)
            block_size = 1 << ndim
            lhs = _parse_word(lhs_text.split(), alphabet, block_size, lineno, raw)
            rhs = _parse_word(rhs_text.split(), alphabet, block_size, lineno, raw)
            mappings[key].append((lhs, rhs, lineno))
        else:
            raise RuleParseError(f"unknown keyword {key!r}", lineno)

    if alphabet is None:
        raise RuleParseError("missing alphabet header", 1)
    if ndim is None:
        raise RuleParseError("missing dim header", 1)
    if quiescent is None:
        raise RuleParseError("missing quiescent header", 1)
    label, qline = quiescent
    if label not in alphabet.symbols:
        raise RuleParseError(f"quiescent symbol {label!r} not in alphabet", qline)
    alphabet = Alphabet(alphabet.symbols, alphabet.symbols.index(label))

    shape = BlockShape(ndim)
    table_size = alphabet.size ** shape.block_size
    if table_size > MAX_TABLE:
        raise RuleParseError(
            f"rule table has {table_size} words; the supported maximum is {MAX_TABLE}", 1
        )

    tables = {}
    for phase in ("even", "odd"):
        table = np.arange(table_size, dtype=np.int64)
        listed = {}
        for lhs, rhs, lineno in mappings[phase]:
            if lhs in listed:
                raise RuleParseError(
                    f"duplicate left-hand side '{' '.join(alphabet.symbols[d] for d in decode_word(lhs, shape.block_size, alphabet.size))}'",
                    lineno,
                )
            listed[lhs] = rhs
            table[lhs] = rhs
        tables[phase] = table
    if odd_same:
        tables["odd"] = tables["even"].copy()

    rule = BlockRule(alphabet, shape, tables["even"], tables["odd"])
    validate_rule(rule)
    return rule


def emit_rule(rule: BlockRule) -> str:
    """Canonical rule text: non-identity mappings in ascending word order.
    ``parse_rule(emit_rule(rule))`` reproduces the rule exactly."""
    lines = [
        "alphabet: " + " ".join(rule.alphabet.symbols),
        "quiescent: " + rule.alphabet.symbols[rule.alphabet.quiescent],
        f"dim: {rule.shape.ndim}",
    ]
    for i in range(rule.table_size):
        j = int(rule.even_perm[i])
        if j != i:
            lines.append(f"even: {rule.word_str(i)} -> {rule.word_str(j)}")
    if np.array_equal(rule.even_perm, rule.odd_perm):
        lines.append("odd: same")
    else:
        for i in range(rule.table_size):
            j = int(rule.odd_perm[i])
            if j != i:
                lines.append(f"odd: {rule.word_str(i)} -> {rule.word_str(j)}")
    return "\n".join(lines) + "\n"


def rule_hash(rule: BlockRule) -> str:
    """Stable hex digest of the canonical rule text; embedded in reports."""
    return hashlib.sha256(emit_rule(rule).encode()).hexdigest()
