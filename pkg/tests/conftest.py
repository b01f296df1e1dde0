import numpy as np
import pytest

from submodtree.funcs import FamilySpec, ValueOracle, instantiate


@pytest.fixture
def or2() -> ValueOracle:
    return ValueOracle.from_table([0.0, 1.0, 1.0, 1.0], label="or2")


@pytest.fixture
def and2() -> ValueOracle:
    return ValueOracle.from_table([0.0, 0.0, 0.0, 1.0], label="and2")


@pytest.fixture
def edge_cut() -> ValueOracle:
    return instantiate(FamilySpec("cut", 2, {"edges": [[1, 2]]}))


def small_corpus(ns=(4, 6, 8), seeds=(0, 1, 2)):
    """A light slice of the generated corpus for module-level tests."""
    from submodtree.funcs import iter_corpus

    return list(iter_corpus(ns=ns, seeds=seeds))


def random_table_oracle(n: int, seed: int, lo=0.0, hi=1.0) -> ValueOracle:
    rng = np.random.default_rng((0xABCD, seed, n))
    return ValueOracle.from_table(rng.uniform(lo, hi, size=1 << n), label=f"rand-n{n}")
