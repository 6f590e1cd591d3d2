from pathlib import Path

import numpy as np
import pytest

from margolab.lattice import BINARY, Configuration, Torus
from margolab.rules import BlockRule, BlockShape

REPO = Path(__file__).resolve().parent.parent
DEMO = REPO / "demo"
GOLDEN = Path(__file__).resolve().parent / "golden"


@pytest.fixture
def demo_dir() -> Path:
    return DEMO


@pytest.fixture
def golden_dir() -> Path:
    return GOLDEN


def random_rule(rng: np.random.Generator, alphabet=BINARY, ndim: int = 2) -> BlockRule:
    """A uniformly random reversible rule: independent random permutations
    for the two phases."""
    shape = BlockShape(ndim)
    size = alphabet.size**shape.block_size
    return BlockRule(alphabet, shape, rng.permutation(size), rng.permutation(size))


def random_config(rng: np.random.Generator, torus: Torus, alphabet=BINARY) -> Configuration:
    values = rng.integers(0, alphabet.size, torus.dims, dtype=np.uint8)
    return Configuration(torus, alphabet, values)
