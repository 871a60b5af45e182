"""Transfer-function coefficients: the realization invariant.

G(s) = C (sI - A)^-1 x0 = Q(s)/P(s) with P the monic characteristic
polynomial of A and Q from the adjugate expansion. The coefficients are
invariant under any change of state basis, which is what lets a
data-derived realization be compared against the parameterized model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .coherence import build_generator
from .errors import StructuralMismatchError
from .models import HamiltonianModel

__all__ = [
    "TransferFunction", "transfer_coefficients", "model_coefficients",
    "coefficient_residual", "coprime_reduce", "stack_channels",
    "default_weights",
]


@dataclass(frozen=True)
class TransferFunction:
    """One output channel's G(s) = Q(s)/P(s), denominator monic.

    ``den[i]`` is the coefficient p_i of s^i (the leading s^K is
    implicit); ``num[i]`` is q_i of s^i with degree at most K-1.
    """

    den: np.ndarray
    num: np.ndarray

    def __post_init__(self):
        den = np.asarray(self.den, dtype=float)
        num = np.asarray(self.num, dtype=float)
        if den.shape != num.shape or den.ndim != 1:
            raise ValueError("den and num must be 1-D with equal length")
        object.__setattr__(self, "den", den)
        object.__setattr__(self, "num", num)

    @property
    def order(self) -> int:
        return self.den.size

    def den_desc(self) -> np.ndarray:
        """[1, p_{K-1}, ..., p_0] for numpy polynomial routines."""
        return np.concatenate([[1.0], self.den[::-1]])

    def num_desc(self) -> np.ndarray:
        return self.num[::-1].copy()

    def __call__(self, s: complex) -> complex:
        return (np.polyval(self.num_desc(), s)
                / np.polyval(self.den_desc(), s))


def transfer_coefficients(a, c, x0) -> list[TransferFunction]:
    """Coefficients of C (sI - A)^-1 x0, one TransferFunction per output row.

    P(s) comes from the Faddeev-LeVerrier recursion and Q(s) from the
    same recursion's adjugate sequence, so both sides of the bordered
    determinant identity are produced in one pass.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"A must be square, got {a.shape}")
    den_desc, num_desc = kernels.transfer_coeffs(a, np.atleast_2d(c), x0)
    den_asc = den_desc[1:][::-1].copy()
    return [TransferFunction(den=den_asc, num=row[::-1].copy())
            for row in num_desc]


def model_coefficients(model: HamiltonianModel, theta, accessible,
                       selector, x0) -> list[TransferFunction]:
    """Transfer coefficients of the parameterized model at theta."""
    gen = build_generator(model, theta, accessible)
    return transfer_coefficients(gen, selector, x0)


def default_weights(target: list[TransferFunction]) -> np.ndarray:
    """Relative weights max(1, |coefficient|) in stacked order."""
    return np.maximum(1.0, np.abs(stack_channels(target)))


def stack_channels(tfs: list[TransferFunction]) -> np.ndarray:
    """Stacked coefficient vector: each channel's numerator (descending),
    then the shared denominator (descending, monic lead dropped)."""
    parts = [tf.num_desc() for tf in tfs]
    parts.append(tfs[0].den_desc()[1:])
    return np.concatenate(parts)


def coefficient_residual(model: HamiltonianModel, theta, target,
                         accessible=None, selector=None, x0=None,
                         weights=None) -> np.ndarray:
    """Weighted gap between model coefficients at theta and a target.

    Entries are (model - target) / weight with the default weight
    max(1, |target coefficient|), stacked numerators first then the
    denominator. Zero exactly when the coefficient sets match. A target
    of different order (n_sigma != K) raises ``StructuralMismatchError``
    unless the model side reduces (common numerator/denominator factors)
    to the target's order.
    """
    target = [target] if isinstance(target, TransferFunction) else list(target)
    mdl = model_coefficients(model, theta, accessible, selector, x0)
    if len(mdl) != len(target):
        raise StructuralMismatchError(
            f"channel count differs: model {len(mdl)}, target {len(target)}")
    k_model = mdl[0].order
    k_target = target[0].order
    if k_target != k_model:
        reduced = [coprime_reduce(tf) for tf in mdl]
        if reduced[0].order != k_target:
            raise StructuralMismatchError(
                f"realization order {k_target} does not match the model's "
                f"accessible dimension {k_model}: the data shows a "
                "lower-order system (rank-deficient dynamics, e.g. a "
                "decoupled subsystem or zero couplings) or the model "
                "structure is wrong")
        mdl = reduced
    vec_m = stack_channels(mdl)
    vec_t = stack_channels(target)
    if weights is None:
        weights = np.maximum(1.0, np.abs(vec_t))
    return (vec_m - vec_t) / weights


def coprime_reduce(tf: TransferFunction, tol: float = 1e-7) -> TransferFunction:
    """Cancel near-common roots of P and Q (non-minimal realizations).

    Roots of numerator and denominator closer than ``tol * max(1, |root|)``
    are paired and removed; the result is rebuilt monic. A numerically
    minimal transfer function is returned unchanged.
    """
    den_roots = list(np.roots(tf.den_desc()))
    num_desc = np.trim_zeros(tf.num_desc(), "f")
    if num_desc.size == 0:
        return tf
    lead = num_desc[0]
    num_roots = list(np.roots(num_desc))
    keep_den = den_roots[:]
    for nr in num_roots[:]:
        best = None
        for i, dr in enumerate(keep_den):
            if abs(nr - dr) <= tol * max(1.0, abs(dr)):
                if best is None or abs(nr - dr) < abs(nr - keep_den[best]):
                    best = i
        if best is not None:
            keep_den.pop(best)
            num_roots.remove(nr)
    if len(keep_den) == len(den_roots):
        return tf
    k_new = len(keep_den)
    den_new = np.real(np.poly(keep_den)) if k_new else np.array([1.0])
    num_new = lead * np.real(np.poly(num_roots)) if num_roots else np.array([lead])
    den_asc = den_new[1:][::-1].copy() if k_new else np.zeros(0)
    num_asc = np.zeros(k_new)
    num_asc[:num_new.size] = num_new[::-1]
    return TransferFunction(den=den_asc, num=num_asc)
