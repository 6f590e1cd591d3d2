"""Dense quantum version of the block dynamics, at exactly solvable sizes.

Cells carry a ``site_dim``-level system (qubits by default); a state is a
pure amplitude vector or a density matrix over all torus cells, capped at
4^7 = 16384 dimensions so everything stays dense and exact.  Block unitaries
replace the block permutation tables of the classical rules and are applied
on the same even/odd partitions, even phase first; permutation-matrix rules
reproduce the classical engine on basis states bit for bit.

The macroscopic side mirrors the classical densities: the mean-field average
of a single-site observable over a region plays the role of a symbol density.
Key quantitative facts verified here:

* mean-field observables on a common region almost commute -- the commutator
  norm of two averaged single-site observables decays as 1/|R|;
* on product states the squared deviation of a mean field from its mean
  decays as 1/|R|;
* shifting a region moves a mean field by at most twice its overlap deficit
  in operator norm (the factor two is tight: cells leaving and cells entering
  both contribute).

Channels induced on a small target region are represented by their
(normalized) Choi matrix, which fully determines the channel and turns
"implements a unitary up to epsilon" into a computable distance.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .lattice import (
    Configuration,
    Region,
    RegionConfig,
    Torus,
    ValidationError,
    complement_region,
    decode_word,
    encode_word,
)
from .engine import Phase
from .macro import overlap_deficit
from .rules import BlockRule, BlockShape

DENSE_STATE_CAP = 16384  # dimension of the largest dense state vector
CHOI_TARGET_CAP = 16  # largest target factor dimension for Choi matrices
DIFF_FACTOR_CAP = 4096  # largest factor for shift-difference eigensolves

ATOL_UNITARY = 1e-10
ATOL_HERMITIAN = 1e-10
ATOL_TRACE = 1e-8

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)

PAULI = {"sx": SX, "sy": SY, "sz": SZ}


def projector(symbol_index: int, site_dim: int = 2) -> np.ndarray:
    p = np.zeros((site_dim, site_dim), dtype=complex)
    p[symbol_index, symbol_index] = 1.0
    return p


def named_observable(name: str, site_dim: int = 2) -> np.ndarray:
    """Resolve a built-in observable name: sx, sy, sz or p<i> projections."""
    if name in PAULI:
        if site_dim != 2:
            raise ValidationError(f"{name} is a qubit observable")
        return PAULI[name]
    if name.startswith("p") and name[1:].isdigit():
        i = int(name[1:])
        if not 0 <= i < site_dim:
            raise ValidationError(f"projection index {i} out of range")
        return projector(i, site_dim)
    raise ValidationError(f"unknown observable {name!r}")


@dataclass(frozen=True, eq=False)
class QuantumState:
    """Pure state (vector) or mixed state (density matrix) of all cells."""

    torus: Torus
    array: np.ndarray
    site_dim: int = 2

    def __post_init__(self):
        n = self.torus.ncells
        dim = self.site_dim**n
        if dim > DENSE_STATE_CAP:
            raise ValidationError(
                f"state dimension {self.site_dim}^{n} exceeds the dense cap {DENSE_STATE_CAP}"
            )
        arr = np.array(self.array, dtype=complex, copy=True)
        if arr.shape == (dim,):
            norm = np.linalg.norm(arr)
            if abs(norm - 1.0) > 1e-10:
                raise ValidationError(f"state vector norm {norm} is not 1")
        elif arr.shape == (dim, dim):
            if np.abs(arr - arr.conj().T).max() > ATOL_HERMITIAN:
                raise ValidationError("density matrix is not Hermitian")
            if abs(np.trace(arr).real - 1.0) > 1e-10:
                raise ValidationError("density matrix trace is not 1")
            if np.linalg.eigvalsh(arr).min() < -1e-10:
                raise ValidationError("density matrix is not positive semidefinite")
        else:
            raise ValidationError(f"state array shape {arr.shape} fits neither vector nor matrix")
        arr.flags.writeable = False
        object.__setattr__(self, "array", arr)

    @property
    def ncells(self) -> int:
        return self.torus.ncells

    @property
    def is_pure(self) -> bool:
        return self.array.ndim == 1


def basis_state(torus: Torus, assignments: dict | None = None, site_dim: int = 2) -> QuantumState:
    """Computational product basis state; unassigned cells sit in level 0."""
    n = torus.ncells
    digits = [0] * n
    for cell, value in (assignments or {}).items():
        cell = tuple(int(x) for x in cell)
        if not torus.contains(cell):
            raise ValidationError(f"cell {cell} not on torus {torus.dims}")
        value = int(value)
        if not 0 <= value < site_dim:
            raise ValidationError(f"level {value} out of range for site dimension {site_dim}")
        digits[torus.cell_index(cell)] = value
    vec = np.zeros(site_dim**n, dtype=complex)
    vec[encode_word(digits, site_dim)] = 1.0
    return QuantumState(torus, vec, site_dim)


def config_basis_state(c: Configuration) -> QuantumState:
    """The basis state labelled by a classical configuration."""
    vec = np.zeros(c.alphabet.size**c.torus.ncells, dtype=complex)
    vec[encode_word([int(x) for x in c.values.ravel()], c.alphabet.size)] = 1.0
    return QuantumState(c.torus, vec, c.alphabet.size)


def cat_state(n: int) -> QuantumState:
    """The n-cell |0...0> + |1...1> superposition on a one-axis torus;
    n must be even (torus sides are even)."""
    if n < 2 or n % 2 or n > 14:
        raise ValidationError("cat states are supported for even cell counts between 2 and 14")
    vec = np.zeros(2**n, dtype=complex)
    vec[0] = 1 / np.sqrt(2)
    vec[-1] = 1 / np.sqrt(2)
    return QuantumState(Torus((n,)), vec, 2)


def product_state(torus: Torus, site_kets) -> QuantumState:
    """Tensor product of per-cell kets, given in lexicographic cell order."""
    kets = [np.asarray(k, dtype=complex) for k in site_kets]
    if len(kets) != torus.ncells:
        raise ValidationError("one ket per torus cell required")
    site_dim = len(kets[0])
    vec = np.array([1.0], dtype=complex)
    for ket in kets:
        if ket.shape != (site_dim,):
            raise ValidationError("all site kets must share one dimension")
        norm = np.linalg.norm(ket)
        if norm == 0:
            raise ValidationError("site ket must be non-zero")
        vec = np.kron(vec, ket / norm)
    return QuantumState(torus, vec, site_dim)


def shift_state(state: QuantumState, v) -> QuantumState:
    """Conjugate by the permutation unitary of the torus shift: the cell at
    x ends up holding what cell x - v held."""
    torus = state.torus
    n = torus.ncells
    k = state.site_dim
    cells = list(torus.cells())
    # result axis for cell y takes the input axis of cell y - v
    perm = [
        torus.cell_index(torus.wrap(tuple(c - d for c, d in zip(cell, v))))
        for cell in cells
    ]
    if state.is_pure:
        tensor = state.array.reshape((k,) * n)
        out = tensor.transpose(perm).reshape(-1)
    else:
        tensor = state.array.reshape((k,) * (2 * n))
        out = tensor.transpose(perm + [n + p for p in perm]).reshape(k**n, k**n)
    return QuantumState(torus, out, k)


# ---------------------------------------------------------------------------
# rules and evolution

@dataclass(frozen=True, eq=False)
class QuantumRule:
    """Block unitaries for the even and odd phase, acting on block cells in
    canonical offset order (same order as classical block words)."""

    site_dim: int
    shape: BlockShape
    even_unitary: np.ndarray
    odd_unitary: np.ndarray

    def __post_init__(self):
        dim = self.site_dim**self.shape.block_size
        for name in ("even_unitary", "odd_unitary"):
            u = np.array(getattr(self, name), dtype=complex, copy=True)
            if u.shape != (dim, dim):
                raise ValidationError(f"{name} must be {dim}x{dim}")
            if np.abs(u.conj().T @ u - np.eye(dim)).max() > ATOL_UNITARY:
                raise ValidationError(f"{name} is not unitary")
            u.flags.writeable = False
            object.__setattr__(self, name, u)


def quantum_rule_from_block_rule(rule: BlockRule) -> QuantumRule:
    """Permutation-matrix unitaries reproducing a classical rule."""
    dim = rule.table_size
    even = np.zeros((dim, dim), dtype=complex)
    odd = np.zeros((dim, dim), dtype=complex)
    even[rule.even_perm, np.arange(dim)] = 1.0
    odd[rule.odd_perm, np.arange(dim)] = 1.0
    return QuantumRule(rule.alphabet.size, rule.shape, even, odd)


def _phase_blocks(torus: Torus, shape: BlockShape, phase: Phase):
    """Cell tuples of every block of the phase partition, offset order."""
    import itertools

    if torus.ndim != shape.ndim:
        raise ValidationError(f"rule is {shape.ndim}-dimensional but torus has {torus.ndim} axes")
    start = 0 if phase is Phase.EVEN else -1
    anchors = itertools.product(*(range(start, n + start, 2) for n in torus.dims))
    blocks = []
    for anchor in anchors:
        blocks.append(
            tuple(torus.wrap(tuple(a + o for a, o in zip(anchor, off))) for off in shape.offsets)
        )
    return blocks


def _apply_block_unitary(tensor: np.ndarray, u: np.ndarray, axes, k: int) -> np.ndarray:
    b = len(axes)
    ut = u.reshape((k,) * (2 * b))
    t = np.tensordot(ut, tensor, axes=(list(range(b, 2 * b)), list(axes)))
    return np.moveaxis(t, range(b), axes)


def qevolve(state: QuantumState, qrule: QuantumRule, t: int) -> QuantumState:
    """Alternating even/odd block unitaries applied ``t`` times, even first."""
    if t < 0:
        raise ValidationError("step count must be non-negative")
    if state.site_dim != qrule.site_dim:
        raise ValidationError("state and rule use different site dimensions")
    torus = state.torus
    k = state.site_dim
    n = torus.ncells
    blocks = {
        Phase.EVEN: _phase_blocks(torus, qrule.shape, Phase.EVEN),
        Phase.ODD: _phase_blocks(torus, qrule.shape, Phase.ODD),
    }
    axis_of = {cell: torus.cell_index(cell) for cell in torus.cells()}
    pure = state.is_pure
    tensor = state.array.reshape((k,) * (n if pure else 2 * n))
    for s in range(t):
        phase = Phase.at_step(s)
        u = qrule.even_unitary if phase is Phase.EVEN else qrule.odd_unitary
        for block in blocks[phase]:
            axes = [axis_of[cell] for cell in block]
            tensor = _apply_block_unitary(tensor, u, axes, k)
            if not pure:
                bra_axes = [n + a for a in axes]
                tensor = _apply_block_unitary(tensor, u.conj(), bra_axes, k)
    out = tensor.reshape(-1) if pure else tensor.reshape(k**n, k**n)
    return QuantumState(torus, out, k)


# ---------------------------------------------------------------------------
# observables

@dataclass(frozen=True, eq=False)
class Observable:
    """Hermitian operator on a region's tensor factor (identity elsewhere)."""

    region: Region
    site_dim: int
    matrix: np.ndarray

    def __post_init__(self):
        dim = self.site_dim ** len(self.region)
        m = np.array(self.matrix, dtype=complex, copy=True)
        if m.shape != (dim, dim):
            raise ValidationError(f"observable matrix must be {dim}x{dim}")
        if np.abs(m - m.conj().T).max() > ATOL_HERMITIAN:
            raise ValidationError("observable matrix is not Hermitian")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)


def _check_site_observable(a: np.ndarray, site_dim: int) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.shape != (site_dim, site_dim):
        raise ValidationError(f"single-site observable must be {site_dim}x{site_dim}")
    if np.abs(a - a.conj().T).max() > ATOL_HERMITIAN:
        raise ValidationError("single-site observable is not Hermitian")
    if np.abs(np.linalg.eigvalsh(a)).max() > 1 + 1e-12:
        raise ValidationError("single-site observable norm exceeds 1")
    return a


def _embed_sites(terms: dict, m: int, site_dim: int) -> np.ndarray:
    """Sum of weighted single-site operators inside an m-site factor."""
    dim = site_dim**m
    out = np.zeros((dim, dim), dtype=complex)
    for pos, (a, weight) in terms.items():
        op = np.array([[1.0]], dtype=complex)
        for p in range(m):
            op = np.kron(op, a if p == pos else np.eye(site_dim))
        out += weight * op
    return out


@lru_cache(maxsize=512)
def _mean_field_matrix(a_bytes: bytes, m: int, site_dim: int) -> np.ndarray:
    # the averaged operator depends on the region only through its size
    a = np.frombuffer(a_bytes, dtype=complex).reshape(site_dim, site_dim)
    terms = {p: (a, 1.0 / m) for p in range(m)}
    out = _embed_sites(terms, m, site_dim)
    out.flags.writeable = False
    return out


@lru_cache(maxsize=512)
def _mean_field_matrix_squared(a_bytes: bytes, m: int, site_dim: int) -> np.ndarray:
    mat = _mean_field_matrix(a_bytes, m, site_dim)
    out = mat @ mat
    out.flags.writeable = False
    return out


def mean_field(a, region: Region, site_dim: int = 2) -> Observable:
    """The averaged single-site observable over a region."""
    if len(region) == 0:
        raise ValidationError("mean field needs a non-empty region")
    a = _check_site_observable(a, site_dim)
    matrix = _mean_field_matrix(a.tobytes(), len(region), site_dim)
    return Observable(region, site_dim, matrix)


def reduced_density(state: QuantumState, region: Region) -> np.ndarray:
    """Partial trace of the state onto a region's tensor factor."""
    torus = state.torus
    if not region.on_torus(torus):
        raise ValidationError("region does not lie on the torus")
    n = torus.ncells
    k = state.site_dim
    axes = [torus.cell_index(c) for c in region.cells]
    rest = [i for i in range(n) if i not in axes]
    dim_r = k ** len(axes)
    if state.is_pure:
        tensor = state.array.reshape((k,) * n).transpose(axes + rest).reshape(dim_r, -1)
        return tensor @ tensor.conj().T
    tensor = state.array.reshape((k,) * (2 * n))
    order = axes + rest + [n + i for i in axes] + [n + i for i in rest]
    dim_e = k ** len(rest)
    t = tensor.transpose(order).reshape(dim_r, dim_e, dim_r, dim_e)
    return np.einsum("aebe->ab", t)


def expectation(state: QuantumState, obs: Observable) -> float:
    rho = reduced_density(state, obs.region)
    value = np.trace(rho @ obs.matrix)
    return float(value.real)


def constraint_value(state: QuantumState, a, region: Region, l: float) -> float:
    """Expected squared deviation of the mean field from the prescribed
    level: <(mean_field(a, R) - l)^2>.

    Expanded as tr(rho M^2) - 2 l tr(rho M) + l^2 so the two operator powers
    come from the memoized builders.
    """
    if abs(l) > 1:
        raise ValidationError("prescribed level must lie in [-1, 1]")
    if len(region) == 0:
        raise ValidationError("constraint value needs a non-empty region")
    a = _check_site_observable(a, state.site_dim)
    m = len(region)
    mat = _mean_field_matrix(a.tobytes(), m, state.site_dim)
    mat_sq = _mean_field_matrix_squared(a.tobytes(), m, state.site_dim)
    rho = reduced_density(state, region)
    first = np.einsum("ij,ji->", rho, mat).real
    second = np.einsum("ij,ji->", rho, mat_sq).real
    return float(second - 2 * l * first + l * l)


def commutator_norm(a, b, region: Region, site_dim: int = 2) -> float:
    """Operator norm of the commutator of two mean fields on one region."""
    ma = mean_field(a, region, site_dim).matrix
    mb = mean_field(b, region, site_dim).matrix
    comm = ma @ mb - mb @ ma
    return float(np.abs(np.linalg.eigvalsh(1j * comm)).max())


@dataclass(frozen=True)
class ShiftBoundResult:
    lhs: float  # operator norm of the mean-field difference, exact eigensolve
    bound: float  # 2 * overlap deficit, the provably safe constant
    deficit: Fraction


def shift_bound(a, region: Region, v, torus: Torus, site_dim: int = 2) -> ShiftBoundResult:
    """Exact norm of (mean field over shifted region - mean field over
    region) against twice the overlap deficit.

    Only the symmetric difference of the two regions carries the operator, so
    the eigensolve runs on that factor.  The bound uses the factor two: cells
    leaving the region and cells entering it both contribute, and the bound
    is tight (a disjoint shift of a one-cell region reaches norm 2).
    """
    a = _check_site_observable(a, site_dim)
    if len(region) == 0:
        raise ValidationError("shift bound needs a non-empty region")
    deficit = overlap_deficit(region, v, torus)
    shifted = Region(
        torus.wrap(tuple(x + d for x, d in zip(cell, v))) for cell in region
    )
    gained = shifted.difference(region)
    lost = region.difference(shifted)
    support = tuple(gained.cells) + tuple(lost.cells)
    if site_dim ** len(support) > DIFF_FACTOR_CAP:
        raise ValidationError("symmetric difference too large for a dense eigensolve")
    if not support:
        lhs = 0.0
    else:
        m = len(support)
        weight = 1.0 / len(region)
        terms = {}
        for p in range(len(gained)):
            terms[p] = (a, weight)
        for p in range(len(gained), m):
            terms[p] = (a, -weight)
        diff = _embed_sites(terms, m, site_dim)
        lhs = float(np.abs(np.linalg.eigvalsh(diff)).max())
    bound = float(2 * deficit)
    if lhs > bound + 1e-9:
        raise RuntimeError(f"shift bound violated: {lhs} > 2 * {deficit}")
    return ShiftBoundResult(lhs, bound, deficit)


@dataclass(frozen=True)
class QuantumRobustnessRecord:
    """One evaluation of the quantum robustness implication: constraints met
    at epsilon/2 before a shift (over regions whose deficits stay at or below
    epsilon/4) are still met at epsilon after it."""

    shift_vector: tuple
    deficits: tuple
    values: tuple  # per (observable, region) on the original state
    shifted_values: tuple  # per (observable, region) on the shifted state
    premise_satisfied: bool
    shifted_satisfied: bool

    @property
    def holds(self) -> bool:
        return not self.premise_satisfied or self.shifted_satisfied


def quantum_shift_robustness(
    state: QuantumState,
    observables,
    regions,
    levels,
    eps: float,
    v,
) -> QuantumRobustnessRecord:
    """Evaluate the robustness implication for a family of mean fields.

    ``levels[i][j]`` prescribes the level of observable ``i`` on region
    ``j``.  Every region's overlap deficit must be at most ``eps / 4``.
    """
    torus = state.torus
    regions = list(regions)
    observables = [_check_site_observable(a, state.site_dim) for a in observables]
    deficits = tuple(overlap_deficit(r, v, torus) for r in regions)
    if any(float(d) > eps / 4 + 1e-12 for d in deficits):
        raise ValidationError("every overlap deficit must be at most eps/4")
    shifted = shift_state(state, v)
    values = []
    shifted_values = []
    for i, a in enumerate(observables):
        for j, region in enumerate(regions):
            l = float(levels[i][j])
            values.append(constraint_value(state, a, region, l))
            shifted_values.append(constraint_value(shifted, a, region, l))
    premise = all(val <= eps / 2 + 1e-12 for val in values)
    conclusion = all(val <= eps + 1e-12 for val in shifted_values)
    return QuantumRobustnessRecord(
        shift_vector=tuple(int(x) for x in v),
        deficits=deficits,
        values=tuple(values),
        shifted_values=tuple(shifted_values),
        premise_satisfied=premise,
        shifted_satisfied=conclusion,
    )


# ---------------------------------------------------------------------------
# induced channels

def trace_norm(m: np.ndarray) -> float:
    """Trace norm; for the Hermitian differences used here this is the sum
    of absolute eigenvalues."""
    if np.abs(m - m.conj().T).max() < 1e-9:
        return float(np.abs(np.linalg.eigvalsh(m)).sum())
    return float(np.linalg.svd(m, compute_uv=False).sum())


@dataclass(frozen=True, eq=False)
class ChoiMatrix:
    """Normalized Choi state of a channel on a target region: positive
    semidefinite with output partial trace equal to identity / dim."""

    target: Region
    site_dim: int
    matrix: np.ndarray

    def __post_init__(self):
        dim = self.site_dim ** len(self.target)
        m = np.array(self.matrix, dtype=complex, copy=True)
        if m.shape != (dim * dim, dim * dim):
            raise ValidationError(f"Choi matrix must be {dim * dim}x{dim * dim}")
        if np.abs(m - m.conj().T).max() > ATOL_TRACE:
            raise ValidationError("Choi matrix is not Hermitian")
        if np.linalg.eigvalsh(m).min() < -ATOL_TRACE:
            raise ValidationError("Choi matrix is not positive semidefinite")
        blocks = m.reshape(dim, dim, dim, dim)
        in_marginal = np.einsum("iaja->ij", blocks)
        if np.abs(in_marginal - np.eye(dim) / dim).max() > ATOL_TRACE:
            raise ValidationError("channel is not trace preserving")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.site_dim ** len(self.target)

    def apply(self, gamma: np.ndarray) -> np.ndarray:
        """Channel action reconstructed from the Choi matrix."""
        dim = self.dim
        blocks = self.matrix.reshape(dim, dim, dim, dim)
        return dim * np.einsum("ij,iajb->ab", np.asarray(gamma, dtype=complex), blocks)


def choi_of_unitary(u: np.ndarray) -> np.ndarray:
    """Normalized Choi matrix of conjugation by ``u`` (raw array)."""
    u = np.asarray(u, dtype=complex)
    dim = u.shape[0]
    return np.einsum("ai,bj->iajb", u, u.conj()).reshape(dim * dim, dim * dim) / dim


def induced_channel(
    qrule: QuantumRule,
    complement: RegionConfig,
    torus: Torus,
    target: Region,
    t: int,
) -> ChoiMatrix:
    """Choi matrix of the map a target state undergoes when the complement
    starts in a fixed basis configuration and everything evolves ``t`` steps:
    evolve, then trace out the complement."""
    k = qrule.site_dim
    dim = k ** len(target)
    if dim > CHOI_TARGET_CAP:
        raise ValidationError(f"target factor dimension {dim} exceeds the cap {CHOI_TARGET_CAP}")
    if complement.region != complement_region(torus, target):
        raise ValidationError("complement must cover exactly the torus minus the target")
    if complement.alphabet.size != k:
        raise ValidationError("complement alphabet does not match the rule's site dimension")
    n = torus.ncells
    axes = [torus.cell_index(c) for c in target.cells]
    rest = [i for i in range(n) if i not in axes]
    branches = np.empty((dim, dim, k ** len(rest)), dtype=complex)
    base = {cell: value for cell, value in zip(complement.region.cells, complement.values)}
    for w in range(dim):
        assignments = dict(base)
        for cell, digit in zip(target.cells, decode_word(w, len(target), k)):
            assignments[cell] = digit
        psi = qevolve(basis_state(torus, assignments, k), qrule, t)
        branches[w] = psi.array.reshape((k,) * n).transpose(axes + rest).reshape(dim, -1)
    choi = np.einsum("iae,jbe->iajb", branches, branches.conj()).reshape(dim * dim, dim * dim)
    return ChoiMatrix(target, k, choi / dim)


@dataclass(frozen=True)
class UnitaryCheck:
    ok: bool
    choi_distance: float
    sampled_worst: float
    eps: float
    n_samples: int


def implements_unitary(
    qrule: QuantumRule,
    complement: RegionConfig,
    torus: Torus,
    target: Region,
    u: np.ndarray,
    t: int,
    eps: float,
    n_samples: int = 100,
    seed: int = 7,
) -> UnitaryCheck:
    """Compare the induced channel against conjugation by ``u``.

    The verdict uses the trace-norm distance of the normalized Choi matrices,
    which upper-bounds the worst-case per-state distance up to a dimension
    factor; the exact distance over a seeded sample of Haar-random pure
    inputs is reported alongside to document tightness.
    """
    u = np.asarray(u, dtype=complex)
    dim = qrule.site_dim ** len(target)
    if u.shape != (dim, dim):
        raise ValidationError(f"unitary must be {dim}x{dim}")
    if np.abs(u.conj().T @ u - np.eye(dim)).max() > ATOL_UNITARY:
        raise ValidationError("comparison operator is not unitary")
    channel = induced_channel(qrule, complement, torus, target, t)
    ideal = choi_of_unitary(u)
    distance = trace_norm(channel.matrix - ideal)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_samples):
        z = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        z /= np.linalg.norm(z)
        gamma = np.outer(z, z.conj())
        out = channel.apply(gamma)
        want = u @ gamma @ u.conj().T
        worst = max(worst, trace_norm(out - want))
    return UnitaryCheck(distance <= eps, distance, worst, eps, n_samples)


# ---------------------------------------------------------------------------
# quantum rule text format

def parse_quantum_rule(text: str) -> QuantumRule:
    """Rule text whose mapping sections are ``even-unitary:`` /
    ``odd-unitary:`` blocks of complex entries, row major, ``re,im`` pairs.
    ``odd-unitary: same`` reuses the even block."""
    alphabet_symbols = None
    ndim = None
    section = None
    rows: dict = {"even": [], "odd": []}
    odd_same = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, sep, rest = line.partition(":")
        key = head.strip().lower()
        if sep and key in ("alphabet", "quiescent", "dim", "even-unitary", "odd-unitary"):
            if key == "alphabet":
                alphabet_symbols = tuple(rest.split())
            elif key == "quiescent":
                pass  # accepted for symmetry with classical rule files
            elif key == "dim":
                ndim = int(rest.strip())
            elif key == "even-unitary":
                section = "even"
            else:
                if rest.strip() == "same":
                    odd_same = True
                    section = None
                else:
                    section = "odd"
            continue
        if section is None:
            raise ValidationError(f"line {lineno}: matrix row outside a unitary block")
        row = []
        for token in line.split():
            re_s, sep2, im_s = token.partition(",")
            if not sep2:
                raise ValidationError(f"line {lineno}: entry {token!r} is not 're,im'")
            row.append(complex(float(re_s), float(im_s)))
        rows[section].append((lineno, row))
    if alphabet_symbols is None or ndim is None:
        raise ValidationError("quantum rule text needs alphabet and dim headers")
    site_dim = len(alphabet_symbols)
    shape = BlockShape(ndim)
    dim = site_dim**shape.block_size

    def build(name):
        data = rows[name]
        if len(data) != dim:
            raise ValidationError(f"{name}-unitary needs {dim} rows, got {len(data)}")
        m = np.empty((dim, dim), dtype=complex)
        for r, (lineno, row) in enumerate(data):
            if len(row) != dim:
                raise ValidationError(f"line {lineno}: expected {dim} entries, got {len(row)}")
            m[r] = row
        return m

    even = build("even")
    odd = even.copy() if odd_same else build("odd")
    return QuantumRule(site_dim, shape, even, odd)
