"""Parameterized Hamiltonian models and the qubit-chain generator.

A model is a list of Pauli-word terms, each carrying either a fixed real
coefficient or a (parameter index, scale) slot, so the word coefficient
is ``scale * theta[index]``. The dense Hamiltonian is the plain sum
``H = sum_t coeff_t * word_t`` over unnormalized words.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ModelError
from .pauli import PauliString

__all__ = ["Term", "HamiltonianModel", "ChainSpec", "generate_chain_model"]


@dataclass(frozen=True)
class Term:
    """One Hamiltonian term: a Pauli word with a known or unknown coefficient."""

    pauli: PauliString
    value: float | None = None      # set for known coefficients
    param: int | None = None        # parameter index for unknown coefficients
    scale: float = 1.0              # coefficient = scale * theta[param]

    def __post_init__(self):
        if (self.value is None) == (self.param is None):
            raise ModelError("term needs exactly one of value= or param=")

    @property
    def is_known(self) -> bool:
        return self.value is not None

    def coefficient(self, theta: np.ndarray) -> float:
        if self.value is not None:
            return self.value
        return self.scale * float(theta[self.param])


@dataclass(frozen=True)
class HamiltonianModel:
    """A Hamiltonian with known structure and some unknown coefficients."""

    n: int
    terms: tuple[Term, ...]
    parameter_names: tuple[str, ...] = ()
    nominal: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        words = set()
        used = set()
        for t in self.terms:
            if t.pauli.n != self.n:
                raise ModelError(f"term {t.pauli.label} has wrong qubit count")
            if t.pauli.is_identity:
                raise ModelError("identity terms only shift energy; drop them")
            if t.pauli in words:
                raise ModelError(f"duplicate term word {t.pauli.label}")
            words.add(t.pauli)
            if t.param is not None:
                if not 0 <= t.param < len(self.parameter_names):
                    raise ModelError(f"parameter index {t.param} out of range")
                used.add(t.param)
        if used != set(range(len(self.parameter_names))):
            missing = sorted(set(range(len(self.parameter_names))) - used)
            names = [self.parameter_names[i] for i in missing]
            raise ModelError(f"parameters never used in any term: {names}")

    @property
    def parameter_count(self) -> int:
        return len(self.parameter_names)

    def nominal_theta(self) -> np.ndarray:
        """Parameter vector from the nominal-value map (requires all names)."""
        missing = [p for p in self.parameter_names if p not in self.nominal]
        if missing:
            raise ModelError(f"no nominal values for parameters: {missing}")
        return np.array([self.nominal[p] for p in self.parameter_names])

    def coefficients(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.parameter_count,):
            raise ModelError(
                f"theta must have length {self.parameter_count}, "
                f"got shape {theta.shape}")
        return np.array([t.coefficient(theta) for t in self.terms])

    def hamiltonian_matrix(self, theta) -> np.ndarray:
        """Dense H = sum_t coeff_t * word_t (test oracle; n <= 10)."""
        if self.n > 10:
            raise ModelError("dense Hamiltonian limited to n <= 10")
        coeffs = self.coefficients(theta)
        dim = 2 ** self.n
        h = np.zeros((dim, dim), dtype=complex)
        for c, t in zip(coeffs, self.terms):
            h += c * t.pauli.to_matrix()
        return h


@dataclass(frozen=True)
class ChainSpec:
    """An n-qubit chain: site frequencies omega_k, hopping strengths delta_k."""

    n: int
    omegas: tuple[float, ...]
    deltas: tuple[float, ...]
    unknown: tuple[str, ...] = ()   # parameter names; () means all unknown

    def __post_init__(self):
        if self.n < 1:
            raise ModelError("chain needs at least one qubit")
        if len(self.omegas) != self.n or len(self.deltas) != self.n - 1:
            raise ModelError(
                f"need {self.n} omegas and {self.n - 1} deltas, got "
                f"{len(self.omegas)} and {len(self.deltas)}")

    @property
    def parameter_names(self) -> tuple[str, ...]:
        return (tuple(f"omega{k + 1}" for k in range(self.n))
                + tuple(f"delta{k + 1}" for k in range(self.n - 1)))


def _site_word(n: int, k: int, letter: str) -> PauliString:
    label = ["I"] * n
    label[k] = letter
    return PauliString.from_label("".join(label))


def _pair_word(n: int, k: int, letter: str) -> PauliString:
    label = ["I"] * n
    label[k] = letter
    label[k + 1] = letter
    return PauliString.from_label("".join(label))


def generate_chain_model(spec: ChainSpec) -> HamiltonianModel:
    """Chain Hamiltonian sum_k (omega_k/2) Z_k + sum_k delta_k (hop_k).

    The hopping term expands in the Pauli basis as
    (delta_k/2)(X_k X_{k+1} + Y_k Y_{k+1}), so each delta parameter feeds
    two word terms with scale 1/2.
    """
    unknown = set(spec.unknown) if spec.unknown else set(spec.parameter_names)
    bad = unknown - set(spec.parameter_names)
    if bad:
        raise ModelError(f"unknown parameters not in chain: {sorted(bad)}")

    values = dict(zip(spec.parameter_names, tuple(spec.omegas) + tuple(spec.deltas)))
    param_names = tuple(p for p in spec.parameter_names if p in unknown)
    index = {p: i for i, p in enumerate(param_names)}

    def term(word, name):
        if name in index:
            return Term(word, param=index[name], scale=0.5)
        return Term(word, value=0.5 * values[name])

    terms = [term(_site_word(spec.n, k, "Z"), f"omega{k + 1}")
             for k in range(spec.n)]
    for k in range(spec.n - 1):
        terms.append(term(_pair_word(spec.n, k, "X"), f"delta{k + 1}"))
        terms.append(term(_pair_word(spec.n, k, "Y"), f"delta{k + 1}"))

    nominal = {p: values[p] for p in param_names}
    return HamiltonianModel(n=spec.n, terms=tuple(terms),
                            parameter_names=param_names, nominal=nominal)
