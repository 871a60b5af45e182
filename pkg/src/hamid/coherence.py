"""Coherence-vector dynamics: filtration, reduced generator, simulation.

Expectation values x_k = <X_k> of the normalized basis elements evolve
linearly, xdot = A x. Restricting to the accessible set (the closure of
the measured elements under commutation with the Hamiltonian words)
gives the K x K generator actually used everywhere downstream.

Sign convention: propagation follows the Schroedinger equation
|psi(t)> = exp(-iHt)|psi(0)>, i.e. d<X_k>/dt = i<[H, X_k]>. The
construction is pinned against dense quantum propagation to 1e-12;
see the word-level rule in ``generator_basis``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg as la

from .errors import ClosureError, DimensionError
from .models import HamiltonianModel
from .pauli import BasisElement, PauliString, canonical_key, commutator_sign, multiply

__all__ = [
    "TimeTrace", "CoherenceSystem",
    "filtration", "generator_basis", "build_generator", "build_selector",
    "initial_coherence", "build_system", "simulate_trace", "add_noise",
    "nyquist_max_dt", "quantum_oracle_trace", "apply_pauli", "expectation",
    "unidentifiable_parameters", "plus_i_state", "plus_state", "basis_state",
]


@dataclass(frozen=True)
class TimeTrace:
    """Sampled observable expectations: row j of ``samples`` is y(j*dt)."""

    dt: float
    samples: np.ndarray                  # (J, p)
    noise_sigma: float = 0.0
    seed: int | None = None
    initial_state_label: str = ""
    observable_labels: tuple[str, ...] = ()

    def __post_init__(self):
        samples = np.atleast_2d(np.asarray(self.samples, dtype=float))
        object.__setattr__(self, "samples", samples)
        if self.dt <= 0:
            raise ValueError(f"sampling period must be positive, got {self.dt}")
        if samples.shape[0] < 2:
            raise ValueError("a trace needs at least two samples")
        if self.noise_sigma < 0:
            raise ValueError("noise sigma must be nonnegative")

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def n_outputs(self) -> int:
        return self.samples.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_samples)


@dataclass(frozen=True)
class CoherenceSystem:
    """Reduced LTI system (accessible set, generator, selector, initial vector)."""

    accessible: tuple[BasisElement, ...]
    generator: np.ndarray                # (K, K), antisymmetric, units 1/s
    selector: np.ndarray                 # (p, K)
    x0: np.ndarray                       # (K,)
    initial_state_label: str = ""
    observable_labels: tuple[str, ...] = ()

    @property
    def dim(self) -> int:
        return len(self.accessible)


# ---------------------------------------------------------------------------
# statevector helpers (bit-level Pauli action; qubit 0 = most significant bit)

def _state_mask(n: int, qubit_mask: int) -> int:
    m = 0
    for k in range(n):
        if (qubit_mask >> k) & 1:
            m |= 1 << (n - 1 - k)
    return m


def apply_pauli(p: PauliString, psi: np.ndarray) -> np.ndarray:
    """Apply an (unnormalized) Pauli word to a statevector."""
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (2 ** p.n,):
        raise DimensionError(f"state has wrong dimension for n={p.n}")
    sx = _state_mask(p.n, p.x_mask)
    sz = _state_mask(p.n, p.z_mask)
    idx = np.arange(psi.size)
    signs = 1.0 - 2.0 * (np.bitwise_count(idx & sz) & 1)
    n_y = (p.x_mask & p.z_mask).bit_count()
    out = np.empty_like(psi)
    out[idx ^ sx] = (1j ** n_y) * signs * psi
    return out


def expectation(p: PauliString, psi: np.ndarray) -> float:
    """<psi| word |psi> for a Pauli word (real for normalized states)."""
    return float(np.real(np.vdot(psi, apply_pauli(p, psi))))


def plus_i_state(n: int, qubit: int = 0) -> np.ndarray:
    """(|0> + i|1>)/sqrt(2) on one qubit, |0> elsewhere."""
    psi = basis_state(n, 0)
    flip = 1 << (n - 1 - qubit)
    psi[flip] = 1j
    psi[0] = 1.0
    return psi / np.sqrt(2)


def plus_state(n: int, qubit: int = 0) -> np.ndarray:
    """(|0> + |1>)/sqrt(2) on one qubit, |0> elsewhere."""
    psi = basis_state(n, 0)
    psi[1 << (n - 1 - qubit)] = 1.0
    return psi / np.sqrt(2)


def basis_state(n: int, index: int = 0) -> np.ndarray:
    psi = np.zeros(2 ** n, dtype=complex)
    psi[index] = 1.0
    return psi


# ---------------------------------------------------------------------------
# filtration and generator

def filtration(measured, model: HamiltonianModel) -> tuple[BasisElement, ...]:
    """Accessible set: close the measured elements under commutation with
    the model's words.

    Iterates G_i = [G_{i-1}, Delta] | G_{i-1} until it saturates. The
    returned order is deterministic: measured elements first (input
    order), then the generated elements in canonical basis order, which
    reproduces the interleaved (x_k, y_k) layout for qubit chains.
    """
    measured = list(measured)
    if not measured:
        raise ValueError("need at least one measured element")
    for el in measured:
        if el.n != model.n:
            raise DimensionError("measured element qubit count differs from model")
    delta = [t.pauli for t in model.terms]
    current = {el.pauli for el in measured}
    while True:
        new = set()
        for g in current:
            for h in delta:
                if commutator_sign(g, h) != 0:
                    _, word = multiply(g, h)
                    if word not in current:
                        new.add(word)
        if not new:
            break
        current |= new
    generated = sorted(current - {el.pauli for el in measured}, key=canonical_key)
    return tuple(measured) + tuple(BasisElement(p) for p in generated)


def generator_basis(model: HamiltonianModel, accessible,
                    ) -> tuple[np.ndarray, np.ndarray]:
    """Decompose the reduced generator as A(theta) = A_base + sum_m theta_m A_m.

    Word-level rule: a Hamiltonian term c*P contributes -2*sign*c to
    A[k, l] whenever P anticommutes with the accessible word P_k and
    P @ P_k = i * sign * P_l. All basis normalizations cancel. Raises
    ``ClosureError`` when a commutator leaks outside the accessible set.
    """
    accessible = tuple(accessible)
    k_count = len(accessible)
    index = {el.pauli: i for i, el in enumerate(accessible)}
    base = np.zeros((k_count, k_count))
    params = np.zeros((model.parameter_count, k_count, k_count))
    for term in model.terms:
        for k, el in enumerate(accessible):
            sign = commutator_sign(term.pauli, el.pauli)
            if sign == 0:
                continue
            _, word = multiply(term.pauli, el.pauli)
            loc = index.get(word)
            if loc is None:
                raise ClosureError(
                    f"adjoint action of {term.pauli.label} maps accessible "
                    f"element {el.label} onto {word.label}, which is outside "
                    "the accessible set; run filtration() first")
            if term.is_known:
                base[k, loc] += -2.0 * sign * term.value
            else:
                params[term.param, k, loc] += -2.0 * sign * term.scale
    return base, params


def build_generator(model: HamiltonianModel, theta, accessible) -> np.ndarray:
    """Reduced generator A(theta); exactly antisymmetric by construction."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (model.parameter_count,):
        raise DimensionError(
            f"theta must have length {model.parameter_count}, got {theta.shape}")
    base, params = generator_basis(model, accessible)
    return base + np.tensordot(theta, params, axes=1)


def build_selector(observables, accessible) -> np.ndarray:
    """Selector rows: expansion coefficients of each observable word.

    ``observables`` are basis elements; measuring the plain Pauli word
    <P> corresponds to the coefficient 2^(n/2) on its normalized element.
    """
    accessible = tuple(accessible)
    index = {el.pauli: i for i, el in enumerate(accessible)}
    sel = np.zeros((len(observables), len(accessible)))
    for i, obs in enumerate(observables):
        loc = index.get(obs.pauli)
        if loc is None:
            raise ClosureError(
                f"measured element {obs.label} missing from the accessible set")
        sel[i, loc] = 1.0 / obs.normalization
    return sel


def initial_coherence(psi0: np.ndarray, accessible) -> np.ndarray:
    """x0_k = <psi0| X_k |psi0> over the accessible elements."""
    psi0 = np.asarray(psi0, dtype=complex)
    norm = np.linalg.norm(psi0)
    if abs(norm - 1.0) > 1e-10:
        raise ValueError(f"initial state is not normalized (|norm-1| = {abs(norm - 1):.3g})")
    return np.array([el.normalization * expectation(el.pauli, psi0)
                     for el in accessible])


def build_system(model: HamiltonianModel, theta, psi0, observables,
                 initial_state_label: str = "") -> CoherenceSystem:
    """Full reduced system for given parameter values and initial state."""
    accessible = filtration(observables, model)
    return CoherenceSystem(
        accessible=accessible,
        generator=build_generator(model, theta, accessible),
        selector=build_selector(observables, accessible),
        x0=initial_coherence(psi0, accessible),
        initial_state_label=initial_state_label,
        observable_labels=tuple(el.label for el in observables),
    )


def unidentifiable_parameters(model: HamiltonianModel, accessible) -> list[str]:
    """Parameters that never enter the reduced generator.

    Such a parameter cannot influence the measured outputs, so it is not
    identifiable from the chosen observables.
    """
    _, params = generator_basis(model, accessible)
    return [model.parameter_names[m]
            for m in range(model.parameter_count)
            if not np.any(params[m])]


# ---------------------------------------------------------------------------
# simulation

def nyquist_max_dt(generator: np.ndarray) -> float:
    """Sampling-period bound pi / max|spectrum|; inf for a zero generator."""
    a = np.asarray(generator, dtype=float)
    if not np.allclose(a, -a.T, atol=1e-12):
        raise ValueError("generator must be antisymmetric")
    top = float(np.max(np.abs(la.eigvalsh(1j * a)))) if a.size else 0.0
    if top == 0.0:
        return np.inf
    return np.pi / top


def simulate_trace(sys: CoherenceSystem, dt: float, n_samples: int,
                   nyquist_warn: bool = True) -> TimeTrace:
    """Exact sampled outputs y(j) = C exp(A j dt) x0 for j = 0..J-1.

    One matrix exponential is applied iteratively; A antisymmetric makes
    it orthogonal, so the propagation neither grows nor decays.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if n_samples < 2:
        raise ValueError("need at least two samples")
    if nyquist_warn:
        bound = nyquist_max_dt(sys.generator)
        if dt >= bound:
            warnings.warn(
                f"dt = {dt:.6g} s violates the sampling bound {bound:.6g} s "
                "for this generator; the recovered dynamics will alias",
                stacklevel=2)
    ad = la.expm(sys.generator * dt)
    x = sys.x0.copy()
    samples = np.empty((n_samples, sys.selector.shape[0]))
    for j in range(n_samples):
        samples[j] = sys.selector @ x
        x = ad @ x
    return TimeTrace(dt=dt, samples=samples,
                     initial_state_label=sys.initial_state_label,
                     observable_labels=sys.observable_labels)


def add_noise(trace: TimeTrace, sigma: float, seed) -> TimeTrace:
    """Additive i.i.d. Gaussian measurement noise; deterministic per seed."""
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if sigma == 0:
        return replace(trace, noise_sigma=0.0, seed=_seed_tag(seed))
    rng = np.random.default_rng(seed)
    noisy = trace.samples + rng.normal(0.0, sigma, trace.samples.shape)
    return replace(trace, samples=noisy, noise_sigma=sigma, seed=_seed_tag(seed))


def _seed_tag(seed):
    # tuple seeds (used for per-trajectory derivation) stored as-is
    return seed if seed is None or isinstance(seed, int) else tuple(seed)


def quantum_oracle_trace(model: HamiltonianModel, theta, psi0, observables,
                         dt: float, n_samples: int) -> TimeTrace:
    """Dense Schroedinger propagation |psi(t)> = exp(-iHt)|psi(0)>.

    Independent of the LTI path; used in tests to validate it. Limited
    to n <= 10 qubits.
    """
    if model.n > 10:
        raise DimensionError("dense oracle limited to n <= 10 qubits")
    psi0 = np.asarray(psi0, dtype=complex)
    h = model.hamiltonian_matrix(theta)
    evals, vecs = la.eigh(h)
    coeffs = vecs.conj().T @ psi0
    samples = np.empty((n_samples, len(observables)))
    for j in range(n_samples):
        psi = vecs @ (np.exp(-1j * evals * j * dt) * coeffs)
        for i, obs in enumerate(observables):
            # output convention matches the selector: plain word expectation
            samples[j, i] = expectation(obs.pauli, psi)
    return TimeTrace(dt=dt, samples=samples,
                     observable_labels=tuple(el.label for el in observables))
