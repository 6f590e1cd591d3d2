import numpy as np
import pytest

from margolab.lattice import (
    BINARY,
    Configuration,
    Region,
    Torus,
    ValidationError,
    make_config,
    restrict,
    shift,
)
from margolab.engine import (
    Phase,
    evolve,
    evolve_back,
    light_cone,
    parse_trajectory_text,
    step,
    trajectory,
    trajectory_to_text,
)
from margolab.rules import identity_rule, parse_rule

from conftest import random_config, random_rule
from test_rules import TRANSPOSITION_SOURCE, complement_rule


T88 = Torus((8, 8))
T44 = Torus((4, 4))

MOVER_SOURCE = """
alphabet: 0 1
quiescent: 0
dim: 2
even: 1 0 0 0 -> 0 1 0 0
even: 0 1 0 0 -> 1 0 0 0
odd: 0 0 1 0 -> 0 0 0 1
odd: 0 0 0 1 -> 0 0 1 0
"""


def test_step_identity_rule():
    rng = np.random.default_rng(51)
    c = random_config(rng, T44)
    rule = identity_rule(BINARY, 2)
    assert step(c, rule, Phase.EVEN) == c
    assert step(c, rule, Phase.ODD) == c


def test_step_complement_rule_fills_quiescent():
    c = make_config(T44, BINARY)
    out = step(c, complement_rule(), Phase.EVEN)
    assert out.values.all()


def test_step_transposition_single_block_oracle():
    # direct table lookup on the single active block: word 0001 (marker at
    # offset (1,1)) maps to 1000 (marker at offset (0,0))
    rule = parse_rule(TRANSPOSITION_SOURCE)
    c = make_config(T44, BINARY, {(1, 1): 1})
    out = step(c, rule, Phase.EVEN)
    assert out.support().cells == ((0, 0),)


def test_step_odd_phase_blocks_are_offset():
    # marker at (1,0) sits at offset (0,1) of the odd block anchored (1,-1);
    # the mover rule sends it to offset (1,1), i.e. cell (2,0)
    rule = parse_rule(MOVER_SOURCE)
    c = make_config(T88, BINARY, {(1, 0): 1})
    out = step(c, rule, Phase.ODD)
    assert out.support().cells == ((2, 0),)


def test_step_odd_phase_wraps_torus():
    rule = parse_rule(MOVER_SOURCE)
    c = make_config(T44, BINARY, {(3, 0): 1})
    out = step(c, rule, Phase.ODD)
    assert out.support().cells == ((0, 0),)


def test_step_alphabet_mismatch():
    from margolab.lattice import Alphabet

    c = make_config(T44, Alphabet(("a", "b")))
    with pytest.raises(ValidationError):
        step(c, identity_rule(BINARY, 2), Phase.EVEN)


def test_step_dimension_mismatch():
    c = make_config(Torus((4,)), BINARY)
    with pytest.raises(ValidationError):
        step(c, identity_rule(BINARY, 2), Phase.EVEN)


def test_evolve_zero_steps():
    rng = np.random.default_rng(53)
    c = random_config(rng, T44)
    assert evolve(c, random_rule(rng), 0) == c


def test_evolve_complement_twice_restores():
    rng = np.random.default_rng(59)
    c = random_config(rng, T44)
    assert evolve(c, complement_rule(), 2) == c


def test_evolve_matches_unrolled_steps():
    rng = np.random.default_rng(61)
    for _ in range(10):
        rule = random_rule(rng)
        c = random_config(rng, T44)
        state = c
        for t in range(7):
            assert evolve(c, rule, t) == state
            state = step(state, rule, Phase.at_step(t))


def test_evolve_back_zero_and_identity():
    rng = np.random.default_rng(67)
    c = random_config(rng, T44)
    assert evolve_back(c, random_rule(rng), 0) == c
    assert evolve_back(c, identity_rule(BINARY, 2), 5) == c


def test_evolve_back_round_trip_random():
    rng = np.random.default_rng(71)
    torus = Torus((6, 6))
    for _ in range(25):
        rule = random_rule(rng)
        c = random_config(rng, torus)
        assert evolve_back(evolve(c, rule, 5), rule, 5) == c


def test_light_cone_zero_steps():
    region = Region([(3, 3)])
    cone = light_cone(region, 0, T88)
    assert cone.region == region and not cone.wrapped


def test_light_cone_single_cell_one_step():
    cone = light_cone(Region([(0, 0)]), 1, T88)
    assert cone.region.cells == ((0, 0), (0, 1), (1, 0), (1, 1))
    assert not cone.wrapped


def test_light_cone_growth_and_wrap_flag():
    cone2 = light_cone(Region([(0, 0)]), 2, T88)
    assert len(cone2.region) == 16 and not cone2.wrapped
    # on a 4x4 torus the two-step cone folds over itself
    wrapped = light_cone(Region([(0, 0)]), 3, T44)
    assert wrapped.wrapped


def test_light_cone_perturbation_oracle():
    # changing any cell outside the cone never changes the region after t steps
    rng = np.random.default_rng(73)
    region = Region([(4, 4)])
    for trial in range(50):
        rule = random_rule(rng)
        c = random_config(rng, T88)
        t = int(rng.integers(0, 3))
        cone = light_cone(region, t, T88)
        baseline = restrict(evolve(c, rule, t), region)
        for cell in T88.cells():
            if cell in cone.region:
                continue
            arr = np.array(c.values, copy=True)
            arr[cell] ^= 1
            perturbed = Configuration(T88, BINARY, arr)
            assert restrict(evolve(perturbed, rule, t), region) == baseline


def test_light_cone_tightness_one_even_step():
    # a block mate can matter: flipping the (1,1) mate under the transposition
    # rule changes the target cell (0,0), so the cone is not an overestimate
    rule = parse_rule(TRANSPOSITION_SOURCE)
    base = make_config(T44, BINARY)
    flipped = make_config(T44, BINARY, {(1, 1): 1})
    region = Region([(0, 0)])
    out_base = restrict(evolve(base, rule, 1), region)
    out_flipped = restrict(evolve(flipped, rule, 1), region)
    assert out_base != out_flipped


def test_equivariance_even_shifts():
    rng = np.random.default_rng(79)
    for _ in range(5):
        rule = random_rule(rng)
        c = random_config(rng, T88)
        for v in ((2, 0), (0, 2), (2, 2), (4, 6)):
            assert evolve(shift(c, v), rule, 3) == shift(evolve(c, rule, 3), v)


def test_no_equivariance_under_odd_shift():
    # the block partitions are not invariant under one-cell shifts; the mover
    # rule witnesses the failure
    rule = parse_rule(MOVER_SOURCE)
    c = make_config(T88, BINARY, {(0, 0): 1})
    lhs = evolve(shift(c, (1, 0)), rule, 1)
    rhs = shift(evolve(c, rule, 1), (1, 0))
    assert lhs != rhs


def test_quiescent_configuration_need_not_be_fixed():
    c = make_config(T44, BINARY)
    assert evolve(c, complement_rule(), 1) != c


def test_trajectory_structure():
    rng = np.random.default_rng(83)
    rule = random_rule(rng)
    c = random_config(rng, T44)
    traj = trajectory(c, rule, 4)
    assert len(traj) == 5
    assert traj.snapshots[0] == c
    for n in range(1, 5):
        assert traj.snapshots[n] == step(traj.snapshots[n - 1], rule, Phase.at_step(n - 1))


def test_trajectory_text_roundtrip():
    rng = np.random.default_rng(89)
    rule = random_rule(rng)
    c = random_config(rng, T44)
    traj = trajectory(c, rule, 3)
    entries = parse_trajectory_text(trajectory_to_text(traj))
    assert [n for n, _, _ in entries] == [0, 1, 2, 3]
    assert [label for _, label, _ in entries] == ["initial", "even", "odd", "even"]
    for (_, _, config), snap in zip(entries, traj.snapshots):
        assert config == snap
