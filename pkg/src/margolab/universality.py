"""Induced region maps and brute-force program search.

A *program* is a configuration of the torus minus a target region, together
with a step count ``t``.  Running the autonomous dynamics for ``t`` steps and
restricting to the target induces a total map on target words; a program
*implements* a map ``beta`` when the induced map equals ``beta`` on every one
of the ``k^|T|`` inputs.

``search_program`` decides, within an explicit finite budget, whether some
program implements ``beta``: candidates are halo configurations (cells of the
complement allowed to be non-quiescent; the rest stays quiescent) enumerated
as base-k counters in lexicographic cell order, with the step count as the
inner loop.  A not-found outcome is a statement about the budget, never a
nonexistence claim.  The scan order is canonical, so results are identical
across runs and across parallel execution.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .lattice import (
    Alphabet,
    Configuration,
    Region,
    RegionConfig,
    Torus,
    ValidationError,
    complement_region,
    decode_word,
    encode_word,
    format_cell,
    make_config,
    patch,
    restrict,
    shift,
    shift_region,
)
from .engine import evolve, light_cone
from .rules import BlockRule, rule_hash

INDUCED_MAP_CAP = 1 << 20
SEARCH_CAP = 1 << 24


class EnumerationCapError(RuntimeError):
    """The requested enumeration exceeds the hard candidate cap."""


@dataclass(frozen=True, eq=False)
class RegionMap:
    """A total map on region words; word positions follow the region's
    canonical (sorted) cell order.

    ``torus_only`` is diagnostic metadata: it is set when the map was
    measured through a light cone that wraps the torus, in which case it need
    not agree with the unbounded-lattice map.  It never takes part in
    equality.
    """

    region: Region
    k: int
    table: np.ndarray
    torus_only: bool = field(default=False, compare=False)

    def __post_init__(self):
        size = self.k ** len(self.region)
        arr = np.asarray(self.table, dtype=np.int64)
        if arr.shape != (size,):
            raise ValidationError(f"region map must list all {size} words")
        if arr.size and (arr.min() < 0 or arr.max() >= size):
            raise ValidationError("region map image out of range")
        arr.flags.writeable = False
        object.__setattr__(self, "table", arr)

    def __eq__(self, other) -> bool:
        if not isinstance(other, RegionMap):
            return NotImplemented
        return self.region == other.region and self.k == other.k and np.array_equal(self.table, other.table)

    def __hash__(self) -> int:
        return hash((self.region, self.k, self.table.tobytes()))

    def word_strings(self, alphabet: Alphabet) -> dict:
        """Render the table as ``input word -> output word`` symbol strings."""
        n = len(self.region)
        out = {}
        for i in range(self.k**n):
            src = " ".join(alphabet.symbols[d] for d in decode_word(i, n, self.k))
            dst = " ".join(alphabet.symbols[d] for d in decode_word(int(self.table[i]), n, self.k))
            out[src] = dst
        return out


def identity_map(region: Region, k: int) -> RegionMap:
    return RegionMap(region, k, np.arange(k ** len(region), dtype=np.int64))


def cellwise_map(region: Region, k: int, cell_tables: dict) -> RegionMap:
    """Product map acting independently per cell; cells not listed get the
    identity.  Each per-cell table is a length-k sequence."""
    n = len(region)
    for cell in cell_tables:
        if cell not in region:
            raise ValidationError(f"cell table given for {cell}, which is not in the region")
    per_cell = []
    for cell in region.cells:
        table = cell_tables.get(cell)
        if table is None:
            per_cell.append(tuple(range(k)))
        else:
            table = tuple(int(x) for x in table)
            if len(table) != k or any(not 0 <= x < k for x in table):
                raise ValidationError(f"cell table for {cell} must map {k} symbols into range")
            per_cell.append(table)
    out = np.empty(k**n, dtype=np.int64)
    for i in range(k**n):
        digits = decode_word(i, n, k)
        out[i] = encode_word(tuple(t[d] for t, d in zip(per_cell, digits)), k)
    return RegionMap(region, k, out)


# Single-cell tables over a binary alphabet, by conventional name.
SINGLE_CELL_TABLES = {
    "ID": (0, 1),
    "NOT": (1, 0),
    "CONST0": (0, 0),
    "CONST1": (1, 1),
}


def flip_table(k: int) -> tuple:
    """Cyclic increment on one cell; equals NOT for a binary alphabet."""
    return tuple((i + 1) % k for i in range(k))


def action_at_cell(rmap: RegionMap, cell) -> tuple | None:
    """The single-cell table induced at ``cell`` if the map acts on that cell
    independently of all other inputs; ``None`` if no such table exists."""
    n = len(rmap.region)
    pos = rmap.region.position(cell)
    seen: dict = {}
    for i in range(rmap.k**n):
        src = decode_word(i, n, rmap.k)[pos]
        dst = decode_word(int(rmap.table[i]), n, rmap.k)[pos]
        if src in seen and seen[src] != dst:
            return None
        seen[src] = dst
    return tuple(seen[i] for i in range(rmap.k))


def conjugate_by_shift(rmap: RegionMap, v, torus: Torus) -> RegionMap:
    """The map ``shift . rmap . shift^-1`` acting on the shifted region."""
    new_region = shift_region(rmap.region, v, torus)
    n = len(rmap.region)
    if len(new_region) != n:
        raise ValidationError("shift collapsed region cells")
    # position p of the old region corresponds to position perm[p] of the new
    perm = [new_region.position(torus.wrap(tuple(x + d for x, d in zip(cell, v)))) for cell in rmap.region.cells]
    out = np.empty(rmap.k**n, dtype=np.int64)
    for j in range(rmap.k**n):
        new_digits = decode_word(j, n, rmap.k)
        old_digits = tuple(new_digits[perm[p]] for p in range(n))
        image = decode_word(int(rmap.table[encode_word(old_digits, rmap.k)]), n, rmap.k)
        new_image = [0] * n
        for p in range(n):
            new_image[perm[p]] = image[p]
        out[j] = encode_word(new_image, rmap.k)
    return RegionMap(new_region, rmap.k, out)


@dataclass(frozen=True)
class Program:
    """A complement configuration plus a step count."""

    torus: Torus
    complement: RegionConfig
    time: int

    def __post_init__(self):
        if self.time < 0:
            raise ValidationError("program time must be non-negative")
        if not self.complement.region.on_torus(self.torus):
            raise ValidationError("program complement does not lie on the torus")

    @property
    def target(self) -> Region:
        return complement_region(self.torus, self.complement.region)


def program_from_halo(torus: Torus, alphabet: Alphabet, target: Region, halo_values: dict, t: int) -> Program:
    """Program whose complement holds ``halo_values`` and is quiescent
    elsewhere."""
    comp = complement_region(torus, target)
    values = {cell: alphabet.quiescent for cell in comp}
    for cell, v in halo_values.items():
        cell = torus.wrap(cell)
        if cell in target:
            raise ValidationError(f"halo cell {cell} lies in the target region")
        values[cell] = alphabet.index(v)
    return Program(torus, RegionConfig(comp, alphabet, tuple(values[c] for c in comp.cells)), t)


def full_configuration(program: Program, alphabet: Alphabet | None = None) -> Configuration:
    """The program as a total configuration, target cells quiescent."""
    alphabet = alphabet or program.complement.alphabet
    base = make_config(program.torus, alphabet)
    return patch(base, program.complement)


def induced_map(rule: BlockRule, program: Program) -> RegionMap:
    """Evolve every target word under the program and read the target back.

    The result carries ``torus_only=True`` when the target's light cone over
    ``program.time`` steps wraps the torus.
    """
    target = program.target
    k = rule.alphabet.size
    if k ** len(target) > INDUCED_MAP_CAP:
        raise EnumerationCapError(
            f"{k}^{len(target)} target words exceed the cap of {INDUCED_MAP_CAP}"
        )
    base = full_configuration(program, rule.alphabet)
    table = _induced_table(rule, base, target, program.time)
    wrapped = light_cone(target, program.time, program.torus).wrapped
    return RegionMap(target, k, table, torus_only=wrapped)


def _induced_table(rule: BlockRule, base: Configuration, target: Region, t: int) -> np.ndarray:
    k = rule.alphabet.size
    n = len(target)
    table = np.empty(k**n, dtype=np.int64)
    for w in range(k**n):
        cfg = patch(base, RegionConfig(target, rule.alphabet, decode_word(w, n, k)))
        out = evolve(cfg, rule, t)
        table[w] = encode_word(restrict(out, target).values, k)
    return table


def _induced_equals(rule: BlockRule, base: Configuration, beta: RegionMap, t: int) -> bool:
    k = rule.alphabet.size
    n = len(beta.region)
    for w in range(k**n):
        cfg = patch(base, RegionConfig(beta.region, rule.alphabet, decode_word(w, n, k)))
        out = evolve(cfg, rule, t)
        if encode_word(restrict(out, beta.region).values, k) != int(beta.table[w]):
            return False
    return True


def implements(rule: BlockRule, program: Program, beta: RegionMap) -> bool:
    """True iff the program's induced map equals ``beta`` on every input."""
    if beta.region != program.target:
        raise ValidationError("beta acts on a different region than the program targets")
    return induced_map(rule, program) == beta


@dataclass(frozen=True)
class SearchBudget:
    """Finite truncation of the search space: cells allowed to vary, the
    maximum step count, and a candidate cap."""

    halo: Region
    t_max: int
    max_candidates: int = SEARCH_CAP

    def __post_init__(self):
        if self.t_max < 0:
            raise ValidationError("t_max must be non-negative")
        if self.max_candidates < 1:
            raise ValidationError("max_candidates must be positive")


@dataclass(frozen=True)
class SearchOutcome:
    found: bool
    program: Program | None
    candidates_tested: int
    wall_time_s: float


def _candidate_base(torus: Torus, alphabet: Alphabet, halo_cells: tuple, halo_index: int) -> Configuration:
    digits = decode_word(halo_index, len(halo_cells), alphabet.size)
    arr = np.full(torus.dims, alphabet.quiescent, dtype=np.uint8)
    for cell, d in zip(halo_cells, digits):
        arr[cell] = d
    return Configuration(torus, alphabet, arr)


def _scan_range(rule, torus, beta, halo_cells, t_max, start, stop, candidate_filter):
    """First matching candidate index in [start, stop), or None."""
    per_halo = t_max + 1
    halo_index = -1
    base = None
    for i in range(start, stop):
        hi, t = divmod(i, per_halo)
        if hi != halo_index:
            halo_index = hi
            base = _candidate_base(torus, rule.alphabet, halo_cells, hi)
            if candidate_filter is not None and not candidate_filter(base):
                base = None
        if base is None:
            continue
        if _induced_equals(rule, base, beta, t):
            return i
    return None


def search_program(
    rule: BlockRule,
    beta: RegionMap,
    budget: SearchBudget,
    torus: Torus,
    workers: int = 1,
    candidate_filter=None,
) -> SearchOutcome:
    """Scan the budgeted candidate space for a program implementing ``beta``.

    Returns the first hit in canonical order (halo counter outer, step count
    inner).  ``candidate_filter``, when given, must be a picklable predicate
    on the candidate's full configuration; rejected candidates are skipped
    but still counted.  Raises ``EnumerationCapError`` when the space exceeds
    the budget cap -- an error distinct from a not-found outcome.
    """
    started = time.perf_counter()
    target = beta.region
    k = rule.alphabet.size
    if beta.k != k:
        raise ValidationError("beta and rule use different alphabet sizes")
    if not budget.halo.on_torus(torus):
        raise ValidationError("halo does not lie on the torus")
    for cell in budget.halo:
        if cell in target:
            raise ValidationError(f"halo cell {cell} lies in the target region")
    halo_cells = budget.halo.cells
    per_halo = budget.t_max + 1
    total = (k ** len(halo_cells)) * per_halo
    cap = min(budget.max_candidates, SEARCH_CAP)
    if total > cap:
        raise EnumerationCapError(f"{total} candidates exceed the cap of {cap}")

    if workers <= 1:
        hit = _scan_range(rule, torus, beta, halo_cells, budget.t_max, 0, total, candidate_filter)
    else:
        chunk = -(-total // workers)
        ranges = [(lo, min(lo + chunk, total)) for lo in range(0, total, chunk)]
        hits = []
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(
                    _scan_range, rule, torus, beta, halo_cells, budget.t_max, lo, hi, candidate_filter
                )
                for lo, hi in ranges
            ]
            hits = [f.result() for f in futures]
        found_hits = [h for h in hits if h is not None]
        hit = min(found_hits) if found_hits else None

    elapsed = time.perf_counter() - started
    if hit is None:
        return SearchOutcome(False, None, total, elapsed)
    halo_index, t = divmod(hit, per_halo)
    digits = decode_word(halo_index, len(halo_cells), k)
    program = program_from_halo(
        torus, rule.alphabet, target, dict(zip(halo_cells, digits)), t
    )
    return SearchOutcome(True, program, hit + 1, elapsed)


def shift_program(program: Program, v) -> Program:
    """Translate a whole program; the result targets the shifted region.

    The shift moves the total configuration (target cells travel along,
    carrying the background symbol they held), so the shifted program is
    total on the torus and no boundary fill-in question arises.
    """
    full = full_configuration(program)
    moved = shift(full, v)
    new_target = shift_region(program.target, v, program.torus)
    comp = complement_region(program.torus, new_target)
    return Program(program.torus, restrict(moved, comp), program.time)


def default_single_cell_betas(target: Region, k: int) -> dict:
    """The four single-cell maps surveyed when no list is supplied; only
    defined for a one-cell target over a binary alphabet."""
    if len(target) != 1 or k != 2:
        raise ValidationError(
            "the built-in beta list covers single-cell binary targets only; supply betas explicitly"
        )
    return {
        name: cellwise_map(target, k, {target.cells[0]: table})
        for name, table in SINGLE_CELL_TABLES.items()
    }


@dataclass(frozen=True)
class SurveyResult:
    outcomes: dict  # name -> SearchOutcome


def universality_survey(
    rule: BlockRule,
    target: Region,
    budget: SearchBudget,
    torus: Torus,
    betas: dict | None = None,
    workers: int = 1,
) -> SurveyResult:
    """Which of the given maps are realized within the budget, and by what.

    Without an explicit beta mapping the built-in single-cell list is used,
    which exists only for one-cell binary targets.
    """
    if betas is None:
        betas = default_single_cell_betas(target, rule.alphabet.size)
    for name, beta in betas.items():
        if beta.region != target:
            raise ValidationError(f"beta {name!r} acts on a different region than the survey target")
    outcomes = {}
    for name, beta in betas.items():
        outcomes[name] = search_program(rule, beta, budget, torus, workers=workers)
    return SurveyResult(outcomes)


# ---------------------------------------------------------------------------
# report documents

def program_report(program: Program, alphabet: Alphabet) -> dict:
    support = {
        format_cell(cell): alphabet.symbols[v]
        for cell, v in zip(program.complement.region.cells, program.complement.values)
        if v != alphabet.quiescent
    }
    wrapped = light_cone(program.target, program.time, program.torus).wrapped
    return {"time": program.time, "non_quiescent_cells": support, "torus_only": wrapped}


def search_report(
    rule: BlockRule,
    beta: RegionMap,
    budget: SearchBudget,
    outcome: SearchOutcome | None,
    tool_version: str,
    capped: bool = False,
) -> dict:
    doc = {
        "report": "program-search",
        "tool_version": tool_version,
        "rule_hash": rule_hash(rule),
        "target": [format_cell(c) for c in beta.region.cells],
        "beta": beta.word_strings(rule.alphabet),
        "budget": {
            "halo": [format_cell(c) for c in budget.halo.cells],
            "t_max": budget.t_max,
            "max_candidates": budget.max_candidates,
        },
    }
    if capped:
        doc["outcome"] = "cap-exceeded"
        doc["candidates_tested"] = 0
        return doc
    assert outcome is not None
    if outcome.found:
        doc["outcome"] = "found"
        doc["program"] = program_report(outcome.program, rule.alphabet)
    else:
        doc["outcome"] = "not-found"
        doc["note"] = "not-found reflects the search budget, not nonexistence"
    doc["candidates_tested"] = outcome.candidates_tested
    doc["wall_time_s"] = outcome.wall_time_s
    return doc
