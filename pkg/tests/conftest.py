"""Shared fixtures: the 3-qubit chain benchmark and random-model helpers."""

import numpy as np
import pytest

from hamid import ChainSpec, generate_chain_model
from hamid.coherence import (
    build_selector, build_system, filtration, initial_coherence, plus_i_state,
    simulate_trace,
)
from hamid.io import ModelFile
from hamid.pauli import BasisElement, PauliString

BENCH_THETA = (1.3, 2.4, 1.7, 4.3, 5.2)
BENCH_DT = 0.0598
BENCH_SAMPLES = 335


def elem(label: str) -> BasisElement:
    return BasisElement(PauliString.from_label(label))


def x1_observable(n: int) -> BasisElement:
    return elem("X" + "I" * (n - 1))


def chain_fixture(n, omegas, deltas):
    """Model, observables, initial state and full system for one chain."""
    model = generate_chain_model(ChainSpec(n=n, omegas=tuple(omegas),
                                           deltas=tuple(deltas)))
    obs = (x1_observable(n),)
    psi0 = plus_i_state(n)
    theta = model.nominal_theta()
    system = build_system(model, theta, psi0, obs, "plus_i_qubit:0")
    return model, obs, psi0, theta, system


def random_chain(rng, n=None):
    """Random chain with parameters uniform in [-5, 5]."""
    if n is None:
        n = int(rng.integers(1, 5))
    omegas = rng.uniform(-5, 5, n)
    deltas = rng.uniform(-5, 5, max(n - 1, 0))
    return chain_fixture(n, omegas, deltas)


@pytest.fixture(scope="session")
def bench():
    """The 3-qubit benchmark chain at the standard parameter point."""
    model, obs, psi0, theta, system = chain_fixture(
        3, BENCH_THETA[:3], BENCH_THETA[3:])
    return {"model": model, "obs": obs, "psi0": psi0, "theta": theta,
            "system": system}


@pytest.fixture(scope="session")
def bench_trace(bench):
    return simulate_trace(bench["system"], BENCH_DT, BENCH_SAMPLES)


@pytest.fixture(scope="session")
def bench_model_file(bench):
    return ModelFile(model=bench["model"], observables=bench["obs"],
                     initial_state={"plus_i_qubit": 0})


def template_of(model, obs, psi0):
    """Coherence template (zero generator) for solver calls in tests."""
    from hamid.coherence import CoherenceSystem
    accessible = filtration(obs, model)
    return CoherenceSystem(
        accessible=accessible,
        generator=np.zeros((len(accessible),) * 2),
        selector=build_selector(obs, accessible),
        x0=initial_coherence(psi0, accessible))
