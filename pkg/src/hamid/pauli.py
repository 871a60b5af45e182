"""Bit-mask algebra of n-qubit Pauli words and the normalized operator basis.

A Pauli word is stored as a pair of n-bit masks: bit k of ``x_mask`` set
means qubit k carries an X factor, bit k of ``z_mask`` a Z factor, both
set a Y. Qubit 0 is the leftmost letter in string labels ("XZI" is X on
qubit 0, Z on qubit 1) and the most significant bit of state indices.

Basis elements are the words scaled by 2^(-n/2), which makes them
orthonormal under the Hilbert-Schmidt inner product tr(A^dag B).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, product

import numpy as np

from .errors import DimensionError

_PAULI_MATS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

_I_POWERS = (1.0 + 0j, 1j, -1.0 + 0j, -1j)


@dataclass(frozen=True)
class PauliString:
    """An n-qubit Pauli word in (x_mask, z_mask) form."""

    n: int
    x_mask: int
    z_mask: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"qubit count must be positive, got {self.n}")
        top = 1 << self.n
        if not (0 <= self.x_mask < top and 0 <= self.z_mask < top):
            raise ValueError("mask exceeds qubit count")

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        """Parse a string over {I, X, Y, Z}, qubit 0 leftmost."""
        x = z = 0
        for k, c in enumerate(label):
            if c in "XY":
                x |= 1 << k
            if c in "ZY":
                z |= 1 << k
            if c not in "IXYZ":
                raise ValueError(f"invalid Pauli letter {c!r} in {label!r}")
        return cls(len(label), x, z)

    @property
    def label(self) -> str:
        out = []
        for k in range(self.n):
            x = (self.x_mask >> k) & 1
            z = (self.z_mask >> k) & 1
            out.append("IXZY"[x + 2 * z])
        return "".join(out)

    @property
    def weight(self) -> int:
        """Number of non-identity letters."""
        return (self.x_mask | self.z_mask).bit_count()

    @property
    def is_identity(self) -> bool:
        return self.x_mask == 0 and self.z_mask == 0

    @property
    def support(self) -> tuple[int, ...]:
        m = self.x_mask | self.z_mask
        return tuple(k for k in range(self.n) if (m >> k) & 1)

    def to_matrix(self) -> np.ndarray:
        """Dense 2^n x 2^n matrix (unnormalized word)."""
        m = np.array([[1.0 + 0j]])
        for c in self.label:
            m = np.kron(m, _PAULI_MATS[c])
        return m

    def __str__(self):
        return self.label


def _phase_exponent(a: PauliString, b: PauliString) -> int:
    # i-exponent of the product of two words: cyclic letter pairs
    # (XY, YZ, ZX) contribute +1, anti-cyclic pairs -1, all mod 4.
    x1, z1, x2, z2 = a.x_mask, a.z_mask, b.x_mask, b.z_mask
    cyc = (x1 & ~z1 & x2 & z2) | (x1 & z1 & ~x2 & z2) | (~x1 & z1 & x2 & ~z2)
    acyc = (x2 & ~z2 & x1 & z1) | (x2 & z2 & ~x1 & z1) | (~x2 & z2 & x1 & ~z1)
    return (cyc.bit_count() - acyc.bit_count()) % 4


def multiply(a: PauliString, b: PauliString) -> tuple[complex, PauliString]:
    """Product of two Pauli words.

    Returns ``(phase, word)`` with ``a_matrix @ b_matrix == phase * word_matrix``
    and phase a fourth root of unity.
    """
    if a.n != b.n:
        raise DimensionError(f"qubit counts differ: {a.n} vs {b.n}")
    word = PauliString(a.n, a.x_mask ^ b.x_mask, a.z_mask ^ b.z_mask)
    return _I_POWERS[_phase_exponent(a, b)], word


def commutes(a: PauliString, b: PauliString) -> bool:
    """True when the two words commute (symplectic overlap is even)."""
    if a.n != b.n:
        raise DimensionError(f"qubit counts differ: {a.n} vs {b.n}")
    return ((a.x_mask & b.z_mask).bit_count()
            + (a.z_mask & b.x_mask).bit_count()) % 2 == 0


def commutator_sign(a: PauliString, b: PauliString) -> int:
    """For anticommuting words, the sign s with a@b = i*s*word; else 0."""
    if commutes(a, b):
        return 0
    e = _phase_exponent(a, b)
    # anticommuting Hermitian words multiply to +/- i times a word
    return 1 if e == 1 else -1


@dataclass(frozen=True)
class BasisElement:
    """The normalized operator word/2^(n/2); orthonormal under hs_inner."""

    pauli: PauliString

    @property
    def n(self) -> int:
        return self.pauli.n

    @property
    def label(self) -> str:
        return self.pauli.label

    @property
    def normalization(self) -> float:
        return 2.0 ** (-self.pauli.n / 2.0)

    def to_matrix(self) -> np.ndarray:
        return self.pauli.to_matrix() * self.normalization


@dataclass(frozen=True)
class StructureTerm:
    """One term C_jkl of a commutator expansion: index l and coefficient."""

    target: int
    coefficient: float


def canonical_key(p: PauliString):
    """Sort key giving the reproducible basis order: weight, support, letters."""
    return (p.weight, p.support, tuple(p.label[k] for k in p.support))


@lru_cache(maxsize=8)
def full_basis(n: int) -> tuple[BasisElement, ...]:
    """All 4^n - 1 non-identity basis elements in canonical order."""
    if n > 8:
        raise ValueError("full basis enumeration is limited to n <= 8")
    words = [PauliString(n, x, z)
             for x, z in product(range(1 << n), repeat=2) if x | z]
    words.sort(key=canonical_key)
    return tuple(BasisElement(p) for p in words)


def commutator_structure(j: int, k: int,
                         basis: "list[BasisElement] | tuple[BasisElement, ...]",
                         ) -> list[StructureTerm]:
    """Structure constants of [i X_j, i X_k] expanded in the same basis.

    For a Pauli basis the commutator of two elements is proportional to a
    single third element, so the list has at most one entry; commuting
    pairs give an empty list. The coefficient convention is fixed by the
    dense-matrix oracle: with X = word/2^(n/2),

        [i X_j, i X_k] = C_jkl (i X_l),   C_jkl = -sign * 2^(1 - n/2),

    where word_j @ word_k = i * sign * word_l.
    """
    pj = basis[j].pauli
    pk = basis[k].pauli
    sign = commutator_sign(pj, pk)
    if sign == 0:
        return []
    _, word = multiply(pj, pk)
    index = {el.pauli: i for i, el in enumerate(basis)}
    loc = index.get(word)
    if loc is None:
        return []
    coeff = -sign * 2.0 ** (1.0 - pj.n / 2.0)
    return [StructureTerm(target=loc, coefficient=coeff)]


def hs_inner(a: np.ndarray, b: np.ndarray) -> float:
    """Hilbert-Schmidt inner product tr(a^dag b); real for Hermitian inputs."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"incompatible shapes {a.shape} vs {b.shape}")
    return float(np.real(np.sum(a.conj() * b)))


def expand_observable(obs: np.ndarray,
                      basis: "list[BasisElement] | tuple[BasisElement, ...]",
                      check_complete: bool = True,
                      ) -> tuple[dict[int, float], float]:
    """Expand a Hermitian matrix as identity_coeff * I + sum_j o_j X_j.

    Returns the sparse coefficient map over ``basis`` and the identity
    coefficient (tracked separately; the identity is not a basis element).
    With ``check_complete`` the expansion must reconstruct the input.
    """
    obs = np.asarray(obs, dtype=complex)
    if obs.ndim != 2 or obs.shape[0] != obs.shape[1]:
        raise DimensionError(f"observable must be square, got {obs.shape}")
    if not np.allclose(obs, obs.conj().T, atol=1e-12):
        raise ValueError("observable must be Hermitian")
    dim = obs.shape[0]
    identity = float(np.real(np.trace(obs))) / dim
    coeffs: dict[int, float] = {}
    recon = identity * np.eye(dim, dtype=complex)
    for j, el in enumerate(basis):
        o_j = hs_inner(el.to_matrix(), obs)
        if abs(o_j) > 1e-12:
            coeffs[j] = o_j
            recon += o_j * el.to_matrix()
    if check_complete:
        err = np.max(np.abs(recon - obs))
        if err > 1e-9 * max(1.0, float(np.max(np.abs(obs)))):
            raise ValueError(
                f"observable lies outside the span of the given basis "
                f"(reconstruction error {err:.3g})")
    return coeffs, identity


def random_hermitian(n: int, rng: np.random.Generator) -> np.ndarray:
    """Random dense Hermitian matrix on n qubits (test helper)."""
    dim = 2 ** n
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (m + m.conj().T) / 2


def jacobi_defect(i: int, j: int, k: int, basis) -> float:
    """Max-norm violation of the Jacobi identity on one (i, j, k) triple,
    evaluated through structure constants only."""
    size = len(basis)
    acc = np.zeros(size)
    for a, b, c in ((i, j, k), (j, k, i), (k, i, j)):
        for t1 in commutator_structure(a, b, basis):
            for t2 in commutator_structure(t1.target, c, basis):
                acc[t2.target] += t1.coefficient * t2.coefficient
    return float(np.max(np.abs(acc))) if size else 0.0


__all__ = [
    "PauliString", "BasisElement", "StructureTerm",
    "multiply", "commutes", "commutator_sign", "commutator_structure",
    "hs_inner", "expand_observable", "full_basis", "canonical_key",
    "random_hermitian", "jacobi_defect",
]
