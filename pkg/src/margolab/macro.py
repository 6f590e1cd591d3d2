"""Density-level ("macroscopic") constraints on the surroundings of a target.

A partition splits the complement of a target region into named regions; a
constraint set prescribes, per region and symbol, a target density with one
tolerance.  All density arithmetic is exact: counts over region sizes as
``fractions.Fraction``, no floating point anywhere in this module.

The no-go construction shows why such constraints cannot pin down a localized
operation: take a program that beats the constraints at half tolerance and
implements (flip, identity) on a cell pair (a, a+v); its translate by v still
meets the constraints at full tolerance -- densities move by at most the
overlap deficit of each region -- yet by translation equivariance it flips
cell a+v, where the original map demands the identity.  ``no_go_witness``
finds such a program by exhaustive search and re-verifies every claim by
direct simulation; the returned witness contains nothing trusted.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .lattice import (
    Alphabet,
    Configuration,
    Region,
    Torus,
    ValidationError,
    complement_region,
    format_cell,
    parse_cells,
    shift,
    shift_region,
)
from .rules import BlockRule, rule_hash
from .universality import (
    Program,
    RegionMap,
    SearchBudget,
    SearchOutcome,
    action_at_cell,
    cellwise_map,
    conjugate_by_shift,
    flip_table,
    full_configuration,
    induced_map,
    search_program,
    shift_program,
)


@dataclass(frozen=True)
class Partition:
    """Pairwise-disjoint named regions covering the torus minus the target."""

    torus: Torus
    target: Region
    names: tuple
    regions: tuple

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(str(n) for n in self.names))
        object.__setattr__(self, "regions", tuple(self.regions))
        if len(self.names) != len(self.regions):
            raise ValidationError("one name per region required")
        if len(set(self.names)) != len(self.names):
            raise ValidationError("region names must be unique")
        if not self.regions:
            raise ValidationError("partition needs at least one region")
        if not self.target.on_torus(self.torus):
            raise ValidationError("target does not lie on the torus")
        covered: set = set()
        for name, region in zip(self.names, self.regions):
            if len(region) == 0:
                raise ValidationError(f"region {name!r} is empty")
            cells = set(region.cells)
            if covered & cells:
                raise ValidationError(f"region {name!r} overlaps another region")
            covered |= cells
        expected = set(complement_region(self.torus, self.target).cells)
        if covered != expected:
            raise ValidationError("regions must cover exactly the torus minus the target")

    def __len__(self) -> int:
        return len(self.regions)


def densities(c: Configuration, region: Region) -> tuple:
    """Exact per-symbol densities over ``region``: counts divided by |region|.
    The entries always sum to one."""
    if len(region) == 0:
        raise ValidationError("densities need a non-empty region")
    if not region.on_torus(c.torus):
        raise ValidationError("region does not lie on the torus")
    counts = np.bincount(c.values[region.coord_arrays()], minlength=c.alphabet.size)
    size = len(region)
    return tuple(Fraction(int(n), size) for n in counts)


@lru_cache(maxsize=65536)
def _overlap_count(region: Region, v: tuple, torus: Torus) -> int:
    shifted = shift_region(region, v, torus)
    return len(shifted.intersection(region))


def overlap_deficit(region: Region, v, torus: Torus) -> Fraction:
    """Fraction of the region not covered by its own shift:
    ``1 - |shift(R, v) & R| / |R|``."""
    if len(region) == 0:
        raise ValidationError("overlap deficit needs a non-empty region")
    v = tuple(int(x) for x in v)
    return 1 - Fraction(_overlap_count(region, v, torus), len(region))


@dataclass(frozen=True)
class MacroConstraintSet:
    """Target densities per (region, symbol) plus one tolerance.

    ``targets`` maps ``(region_index, symbol_index)`` to a density in [0, 1];
    pairs that are absent are unconstrained.
    """

    partition: Partition
    alphabet: Alphabet
    targets: dict
    epsilon: Fraction

    def __post_init__(self):
        object.__setattr__(self, "epsilon", Fraction(self.epsilon))
        object.__setattr__(
            self,
            "targets",
            {(int(j), int(i)): Fraction(v) for (j, i), v in self.targets.items()},
        )
        if not 0 < self.epsilon <= 1:
            raise ValidationError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        for (j, i), v in self.targets.items():
            if not 0 <= j < len(self.partition):
                raise ValidationError(f"constraint names region index {j} outside the partition")
            if not 0 <= i < self.alphabet.size:
                raise ValidationError(f"constraint names symbol index {i} outside the alphabet")
            if not 0 <= v <= 1:
                raise ValidationError(f"density target {v} outside [0, 1]")


def derive_constraints(partition: Partition, c: Configuration, epsilon) -> MacroConstraintSet:
    """Constraint set whose targets are the exact densities of ``c``."""
    targets = {}
    for j, region in enumerate(partition.regions):
        for i, value in enumerate(densities(c, region)):
            targets[(j, i)] = value
    return MacroConstraintSet(partition, c.alphabet, targets, Fraction(epsilon))


@dataclass(frozen=True)
class Violation:
    region_index: int
    region_name: str
    symbol: str
    value: Fraction
    target: Fraction
    slack: Fraction


def check_constraints(c: Configuration, constraints: MacroConstraintSet, slack) -> Violation | None:
    """First constraint violated at the given slack, or None."""
    slack = Fraction(slack)
    part = constraints.partition
    if c.torus != part.torus:
        raise ValidationError("configuration torus does not match the partition")
    if c.alphabet != constraints.alphabet:
        raise ValidationError("configuration alphabet does not match the constraints")
    for j, region in enumerate(part.regions):
        values = densities(c, region)
        for i in range(c.alphabet.size):
            target = constraints.targets.get((j, i))
            if target is None:
                continue
            if abs(values[i] - target) > slack:
                return Violation(j, part.names[j], c.alphabet.symbols[i], values[i], target, slack)
    return None


def satisfies(c: Configuration, constraints: MacroConstraintSet, slack) -> bool:
    """Exact check: every specified density within ``slack`` of its target."""
    return check_constraints(c, constraints, slack) is None


@dataclass(frozen=True)
class ShiftRobustnessRecord:
    """One evaluation of the density robustness lemma: a configuration that
    meets the constraints at half tolerance, shifted over regions whose
    overlap deficits stay below half tolerance, still meets them at full
    tolerance."""

    shift_vector: tuple
    deficits: tuple
    premise_satisfied: bool  # constraints hold at epsilon/2
    deficits_within: bool  # every deficit <= epsilon/2
    shifted_satisfied: bool  # shifted configuration holds at epsilon
    violation: Violation | None

    @property
    def max_deficit(self) -> Fraction:
        return max(self.deficits)

    @property
    def holds(self) -> bool:
        return not (self.premise_satisfied and self.deficits_within) or self.shifted_satisfied


def shift_robustness(c: Configuration, constraints: MacroConstraintSet, v) -> ShiftRobustnessRecord:
    """Evaluate the robustness implication on concrete data.  The implication
    is a theorem, so ``holds`` is always true; a violation certificate is
    attached should the arithmetic ever disagree."""
    eps = constraints.epsilon
    part = constraints.partition
    deficits = tuple(overlap_deficit(r, v, part.torus) for r in part.regions)
    premise = satisfies(c, constraints, eps / 2)
    deficits_ok = all(d <= eps / 2 for d in deficits)
    shifted = shift(c, v)
    violation = check_constraints(shifted, constraints, eps)
    return ShiftRobustnessRecord(
        shift_vector=tuple(int(x) for x in v),
        deficits=deficits,
        premise_satisfied=premise,
        deficits_within=deficits_ok,
        shifted_satisfied=violation is None,
        violation=violation if (premise and deficits_ok) else None,
    )


@dataclass(frozen=True)
class DensityFilter:
    """Picklable search predicate: accept candidate configurations meeting
    the constraints at the given slack."""

    constraints: MacroConstraintSet
    slack: Fraction

    def __call__(self, c: Configuration) -> bool:
        return satisfies(c, self.constraints, self.slack)


@dataclass(frozen=True)
class NoGoWitness:
    """A fully re-checkable counterexample pair: the program, its shift, the
    overlap cell and the two incompatible single-cell actions there."""

    program: Program
    shifted: Program
    shift_vector: tuple
    target: Region
    shifted_target: Region
    beta: RegionMap
    conjugate: RegionMap
    induced: RegionMap
    shifted_induced: RegionMap
    conflicting_cell: tuple
    action_required: tuple
    action_performed: tuple
    deficits: tuple
    checks: dict


@dataclass(frozen=True)
class NoGoResult:
    witness: NoGoWitness | None
    constraints: MacroConstraintSet | None
    deficits: tuple
    candidates_tested: int
    search: SearchOutcome | None

    @property
    def found(self) -> bool:
        return self.witness is not None


def no_go_witness(
    rule: BlockRule,
    partition: Partition,
    epsilon,
    budget: SearchBudget,
    constraints: MacroConstraintSet | None = None,
    workers: int = 1,
) -> NoGoResult:
    """Search for the counterexample pair demonstrating that density
    constraints cannot force a localized operation.

    The target must be a cell pair {a, a+v} with v even per axis (the
    dynamics is translation equivariant exactly at that granularity); the
    demanded map is flip on a and identity on a+v.  When no constraint set is
    given, the density targets are taken from the first program implementing
    the map, which then meets them with zero slack -- the choice most
    favourable to the constraints being refuted.  Every overlap deficit must
    be at most epsilon/2.

    A not-found outcome reflects the budget, never impossibility.
    """
    epsilon = Fraction(epsilon)
    torus = partition.torus
    target = partition.target
    if len(target) != 2:
        raise ValidationError("the no-go target must be a pair of cells")
    a, b = target.cells
    v = tuple(y - x for x, y in zip(a, b))
    if any(x % 2 for x in v) or all(x == 0 for x in v):
        raise ValidationError(
            f"target pair must be separated by a non-zero vector with even components, got {v}"
        )
    deficits = tuple(overlap_deficit(r, v, torus) for r in partition.regions)
    bad = [n for n, d in zip(partition.names, deficits) if d > epsilon / 2]
    if bad:
        raise ValidationError(
            f"overlap deficits of {bad} exceed epsilon/2; choose larger regions or a bigger epsilon"
        )

    k = rule.alphabet.size
    flip = flip_table(k)
    identity = tuple(range(k))
    beta = cellwise_map(target, k, {a: flip, b: identity})

    if constraints is None:
        outcome = search_program(rule, beta, budget, torus, workers=workers)
        if not outcome.found:
            return NoGoResult(None, None, deficits, outcome.candidates_tested, outcome)
        constraints = derive_constraints(
            partition, full_configuration(outcome.program), epsilon
        )
    else:
        if constraints.partition != partition:
            raise ValidationError("constraint set was built for a different partition")
        if constraints.epsilon != epsilon:
            raise ValidationError("constraint set tolerance differs from the requested epsilon")
        outcome = search_program(
            rule, beta, budget, torus, workers=workers,
            candidate_filter=DensityFilter(constraints, epsilon / 2),
        )
        if not outcome.found:
            return NoGoResult(None, constraints, deficits, outcome.candidates_tested, outcome)

    program = outcome.program
    full_prime = full_configuration(program)
    full_shifted = shift(full_prime, v)
    shifted = shift_program(program, v)
    shifted_target = shifted.target
    conjugate = conjugate_by_shift(beta, v, torus)
    induced = induced_map(rule, program)
    shifted_induced = induced_map(rule, shifted)

    checks = {
        "program_implements_target_map": induced == beta,
        "program_satisfies_at_half_epsilon": satisfies(full_prime, constraints, epsilon / 2),
        "shifted_satisfies_at_epsilon": satisfies(full_shifted, constraints, epsilon),
        "shifted_implements_conjugate": shifted_induced == conjugate,
        "shifted_action_at_overlap_is_flip": action_at_cell(shifted_induced, b) == flip,
        "required_action_at_overlap_is_identity": action_at_cell(beta, b) == identity,
        "light_cone_fits_torus": not induced.torus_only and not shifted_induced.torus_only,
    }
    failed = [name for name, ok in checks.items() if not ok]
    if failed:
        raise RuntimeError(f"witness re-verification failed: {failed}")

    witness = NoGoWitness(
        program=program,
        shifted=shifted,
        shift_vector=v,
        target=target,
        shifted_target=shifted_target,
        beta=beta,
        conjugate=conjugate,
        induced=induced,
        shifted_induced=shifted_induced,
        conflicting_cell=b,
        action_required=identity,
        action_performed=flip,
        deficits=deficits,
        checks=checks,
    )
    return NoGoResult(witness, constraints, deficits, outcome.candidates_tested, outcome)


# ---------------------------------------------------------------------------
# text formats

def partition_to_text(partition: Partition) -> str:
    lines = [
        "torus: " + " x ".join(str(n) for n in partition.torus.dims),
        "target: " + " ".join(format_cell(c) for c in partition.target.cells),
    ]
    for name, region in zip(partition.names, partition.regions):
        lines.append(f"region {name}: " + " ".join(format_cell(c) for c in region.cells))
    return "\n".join(lines) + "\n"


def partition_from_text(text: str) -> Partition:
    """Parse ``torus:``, ``target:`` and ``region <name>:`` lines."""
    torus = None
    target_cells = None
    names: list[str] = []
    regions: list[Region] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, sep, rest = line.partition(":")
        if not sep:
            raise ValidationError(f"line {lineno}: expected 'keyword: ...'")
        key = head.strip()
        if key.lower() == "torus":
            if torus is not None:
                raise ValidationError(f"line {lineno}: duplicate torus header")
            torus = Torus(int(p.strip()) for p in rest.split("x"))
        elif key.lower() == "target":
            if target_cells is not None:
                raise ValidationError(f"line {lineno}: duplicate target line")
            target_cells = parse_cells(rest)
        elif key.lower().startswith("region"):
            name = key[len("region"):].strip()
            if not name:
                raise ValidationError(f"line {lineno}: region needs a name")
            names.append(name)
            regions.append(Region(parse_cells(rest)))
        else:
            raise ValidationError(f"line {lineno}: unknown keyword {key!r}")
    if torus is None or target_cells is None:
        raise ValidationError("partition text needs torus and target lines")
    return Partition(torus, Region(target_cells), tuple(names), tuple(regions))


def constraints_from_text(text: str, partition: Partition, alphabet: Alphabet) -> MacroConstraintSet:
    """Parse ``l <region> <symbol> = <rational>`` and ``epsilon = <rational>``
    lines against a known partition and alphabet."""
    targets = {}
    epsilon = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        lhs, sep, rhs = line.partition("=")
        if not sep:
            raise ValidationError(f"line {lineno}: expected '... = value'")
        tokens = lhs.split()
        try:
            value = Fraction(rhs.strip())
        except (ValueError, ZeroDivisionError):
            raise ValidationError(f"line {lineno}: cannot parse rational {rhs.strip()!r}") from None
        if tokens == ["epsilon"]:
            if epsilon is not None:
                raise ValidationError(f"line {lineno}: duplicate epsilon")
            epsilon = value
        elif len(tokens) == 3 and tokens[0] == "l":
            _, region_name, symbol = tokens
            if region_name not in partition.names:
                raise ValidationError(f"line {lineno}: unknown region {region_name!r}")
            j = partition.names.index(region_name)
            i = alphabet.index(symbol)
            if (j, i) in targets:
                raise ValidationError(f"line {lineno}: duplicate target for {region_name}/{symbol}")
            targets[(j, i)] = value
        else:
            raise ValidationError(f"line {lineno}: expected 'l <region> <symbol> = ...' or 'epsilon = ...'")
    if epsilon is None:
        raise ValidationError("constraint text needs an epsilon line")
    return MacroConstraintSet(partition, alphabet, targets, epsilon)


def constraints_to_text(constraints: MacroConstraintSet) -> str:
    lines = [f"epsilon = {constraints.epsilon}"]
    part = constraints.partition
    for (j, i), value in sorted(constraints.targets.items()):
        lines.append(f"l {part.names[j]} {constraints.alphabet.symbols[i]} = {value}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# report documents

def _action_name(table: tuple) -> str:
    names = {(0, 1): "ID", (1, 0): "NOT", (0, 0): "CONST0", (1, 1): "CONST1"}
    return names.get(tuple(table), "table " + ",".join(str(x) for x in table))


def witness_report(
    result: NoGoResult,
    rule: BlockRule,
    partition: Partition,
    tool_version: str,
) -> dict:
    """Structured no-go report; deterministic content, suitable for golden
    files (it embeds no timing)."""
    from .lattice import config_to_text  # local import keeps module deps flat

    doc = {
        "report": "no-go-witness",
        "tool_version": tool_version,
        "rule_hash": rule_hash(rule),
        "torus": " x ".join(str(n) for n in partition.torus.dims),
        "target": [format_cell(c) for c in partition.target.cells],
        "partition": {
            name: [format_cell(c) for c in region.cells]
            for name, region in zip(partition.names, partition.regions)
        },
        "deficits": {
            name: str(d) for name, d in zip(partition.names, result.deficits)
        },
        "candidates_tested": result.candidates_tested,
    }
    if result.constraints is not None:
        doc["epsilon"] = str(result.constraints.epsilon)
        doc["density_targets"] = {
            partition.names[j]: {}
            for j in range(len(partition))
        }
        for (j, i), value in sorted(result.constraints.targets.items()):
            doc["density_targets"][partition.names[j]][result.constraints.alphabet.symbols[i]] = str(value)
    if not result.found:
        doc["outcome"] = "not-found"
        doc["note"] = "not-found reflects the search budget, not nonexistence"
        return doc
    w = result.witness
    alphabet = rule.alphabet
    doc.update(
        {
            "outcome": "witness",
            "shift_vector": format_cell(w.shift_vector),
            "time": w.program.time,
            "shifted_target": [format_cell(c) for c in w.shifted_target.cells],
            "beta": w.beta.word_strings(alphabet),
            "conjugate_beta": w.conjugate.word_strings(alphabet),
            "program": config_to_text(full_configuration(w.program)),
            "shifted_program": config_to_text(full_configuration(w.shifted)),
            "induced_on_target": w.induced.word_strings(alphabet),
            "induced_on_shifted_target": w.shifted_induced.word_strings(alphabet),
            "conflicting_cell": format_cell(w.conflicting_cell),
            "action_required_by_map": _action_name(w.action_required),
            "action_performed_after_shift": _action_name(w.action_performed),
            "checks": dict(w.checks),
            "notes": [
                "the shifted program is total on the torus: cells vacated by the moving "
                "target window carry the values the shift brings along (the background "
                "symbol here), so no boundary fill-in ambiguity arises",
            ],
        }
    )
    return doc
