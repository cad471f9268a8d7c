from __future__ import annotations

import numpy as np
import pytest

from junction_relax import AffineMonotone, Constant, FluxLimiter, JunctionHamiltonian
from junction_relax.standard import absolute_value, double_well


@pytest.fixture
def h_abs():
    return absolute_value()


@pytest.fixture
def h_dw():
    return double_well()


@pytest.fixture
def ham_abs():
    return JunctionHamiltonian([absolute_value()])


@pytest.fixture
def ham_dw():
    return JunctionHamiltonian([double_well()])


@pytest.fixture
def ham_abs2():
    return JunctionHamiltonian([absolute_value(), absolute_value()])


@pytest.fixture
def ham_mixed():
    return JunctionHamiltonian([absolute_value(), double_well()])


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


HAMILTONIAN_SETS = {
    "abs": lambda: JunctionHamiltonian([absolute_value()]),
    "double_well": lambda: JunctionHamiltonian([double_well()]),
    "abs+double_well": lambda: JunctionHamiltonian([absolute_value(), double_well()]),
}

FAMILIES = {
    "constant": lambda ham: Constant(0.5, ham.n),
    "affine": lambda ham: AffineMonotone(0.5, np.ones(ham.n)),
    "flux_limiter": lambda ham: FluxLimiter(0.3, ham),
}

SWEEP = [(h, f) for h in HAMILTONIAN_SETS for f in FAMILIES]


def build(h_name: str, f_name: str):
    ham = HAMILTONIAN_SETS[h_name]()
    return ham, FAMILIES[f_name](ham)
