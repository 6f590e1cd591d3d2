"""Autonomous time evolution: alternating even/odd block updates.

One time step applies one phase.  Even blocks are anchored at all-even
coordinates, odd blocks at all-odd coordinates (anchor offset -1 per axis);
within a phase the blocks are disjoint, so the update order is immaterial and
the result is deterministic.  Step ``s`` applies the even table when ``s`` is
even and the odd table when ``s`` is odd -- evolution always starts with an
even step.

Because one phase couples a cell only to its block mates, the set of cells
able to influence a region after ``t`` steps (its light cone) grows by at
most one cell per axis per step; ``light_cone`` computes it exactly and also
reports whether it wraps the torus, i.e. whether torus results may differ
from unbounded-lattice results.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .lattice import (
    Configuration,
    Region,
    Torus,
    ValidationError,
    config_from_text,
    config_to_text,
)
from .rules import BlockRule, invert


class Phase(Enum):
    EVEN = "even"
    ODD = "odd"

    @property
    def anchor_offset(self) -> int:
        return 0 if self is Phase.EVEN else -1

    @staticmethod
    def at_step(step: int) -> "Phase":
        return Phase.EVEN if step % 2 == 0 else Phase.ODD


def _apply_block_table(values: np.ndarray, table: np.ndarray, k: int) -> np.ndarray:
    """Replace every even-anchored block word by its image under ``table``."""
    dims = values.shape
    d = values.ndim
    block_size = 1 << d
    interleaved = []
    for n in dims:
        interleaved.extend((n // 2, 2))
    t = values.reshape(interleaved)
    outer = list(range(0, 2 * d, 2))
    inner = list(range(1, 2 * d, 2))
    # Putting the block axes last in reversed order makes offset axis 0 vary
    # fastest on flattening, matching the canonical block word order.
    order = outer + inner[::-1]
    t = t.transpose(order)
    nblocks = t.shape[:d]
    words = t.reshape(-1, block_size).astype(np.int64)
    powers = k ** np.arange(block_size - 1, -1, -1, dtype=np.int64)
    new_idx = table[words @ powers]
    new_words = (new_idx[:, None] // powers) % k
    out = new_words.reshape(nblocks + (2,) * d)
    out = out.transpose(np.argsort(order)).reshape(dims)
    return out.astype(np.uint8)


def _check_compatible(c: Configuration, rule: BlockRule) -> None:
    if c.alphabet != rule.alphabet:
        raise ValidationError("configuration and rule use different alphabets")
    if c.torus.ndim != rule.shape.ndim:
        raise ValidationError(
            f"rule is {rule.shape.ndim}-dimensional but torus has {c.torus.ndim} axes"
        )


def step(c: Configuration, rule: BlockRule, phase: Phase) -> Configuration:
    """Apply one phase: permute the contents of every block of the phase's
    partition."""
    _check_compatible(c, rule)
    table = rule.even_perm if phase is Phase.EVEN else rule.odd_perm
    arr = c.values
    axes = tuple(range(c.torus.ndim))
    if phase is Phase.ODD:
        arr = np.roll(arr, 1, axis=axes)
    out = _apply_block_table(arr, table, c.alphabet.size)
    if phase is Phase.ODD:
        out = np.roll(out, -1, axis=axes)
    return Configuration(c.torus, c.alphabet, out)


def evolve(c: Configuration, rule: BlockRule, t: int) -> Configuration:
    """Run ``t`` steps forward (even phase first)."""
    if t < 0:
        raise ValidationError("step count must be non-negative")
    for s in range(t):
        c = step(c, rule, Phase.at_step(s))
    return c


def evolve_back(c: Configuration, rule: BlockRule, t: int) -> Configuration:
    """Undo ``t`` forward steps exactly: inverse phases in reverse order."""
    if t < 0:
        raise ValidationError("step count must be non-negative")
    inverse = invert(rule)
    for s in reversed(range(t)):
        c = step(c, inverse, Phase.at_step(s))
    return c


@dataclass(frozen=True)
class Trajectory:
    """The initial configuration and every intermediate state up to step t."""

    initial: Configuration
    rule: BlockRule
    snapshots: tuple

    def __post_init__(self):
        object.__setattr__(self, "snapshots", tuple(self.snapshots))
        if not self.snapshots or self.snapshots[0] != self.initial:
            raise ValidationError("snapshots must start with the initial configuration")

    def __len__(self) -> int:
        return len(self.snapshots)


def trajectory(c: Configuration, rule: BlockRule, t: int) -> Trajectory:
    snaps = [c]
    for s in range(t):
        c = step(c, rule, Phase.at_step(s))
        snaps.append(c)
    return Trajectory(snaps[0], rule, tuple(snaps))


def _snapshot_label(n: int) -> str:
    return "initial" if n == 0 else Phase.at_step(n - 1).value


def trajectory_to_text(traj: Trajectory) -> str:
    """Dump format: configuration blocks separated by step markers; the
    marker names the phase that produced the snapshot."""
    parts = []
    for n, snap in enumerate(traj.snapshots):
        parts.append(f"--- step {n} ({_snapshot_label(n)}) ---\n")
        parts.append(config_to_text(snap))
    return "".join(parts)


def parse_trajectory_text(text: str) -> list:
    """Parse a trajectory dump into ``(step, label, Configuration)`` triples."""
    entries = []
    current_header = None
    current_lines: list[str] = []

    def flush():
        if current_header is None:
            return
        n, label = current_header
        entries.append((n, label, config_from_text("\n".join(current_lines))))

    for raw in text.splitlines():
        line = raw.strip()
        if line.startswith("--- step"):
            flush()
            inner = line.strip("- ").strip()
            fields = inner.split()
            n = int(fields[1])
            label = fields[2].strip("()")
            current_header = (n, label)
            current_lines = []
        else:
            current_lines.append(raw)
    flush()
    if not entries:
        raise ValidationError("no snapshots found in trajectory text")
    return entries


@dataclass(frozen=True)
class LightCone:
    region: Region
    wrapped: bool


def light_cone(region: Region, t: int, torus: Torus) -> LightCone:
    """Cells whose initial value can influence ``region`` after ``t`` steps.

    Computed backwards on the unbounded lattice (one block expansion per
    step), then projected onto the torus; ``wrapped`` reports whether two
    distinct unbounded-lattice cells collapsed to one torus cell, in which
    case torus results on ``region`` need not match unbounded-lattice
    results.
    """
    if t < 0:
        raise ValidationError("step count must be non-negative")
    if not region.on_torus(torus):
        raise ValidationError("region does not lie on the torus")
    d = torus.ndim
    offsets = tuple(itertools.product((0, 1), repeat=d))
    cells = set(region.cells)
    for s in reversed(range(t)):
        parity = s % 2
        expanded = set()
        for cell in cells:
            if parity == 0:
                anchor = tuple(x - (x % 2) for x in cell)
            else:
                anchor = tuple(x - ((x + 1) % 2) for x in cell)
            for off in offsets:
                expanded.add(tuple(a + o for a, o in zip(anchor, off)))
        cells = expanded
    projected = {torus.wrap(c) for c in cells}
    return LightCone(Region(projected), wrapped=len(projected) < len(cells))
