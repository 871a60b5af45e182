"""Minimal state-space realization from a sampled time trace.

Stack the outputs into a block Hankel matrix, truncate its SVD at the
numerical rank, and read off a discrete realization (Ad, C, x0) that
reproduces the trace. The continuous generator follows from the
principal matrix logarithm, which is unique as long as the sampling
period kept every rotation per step clear of half a revolution.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg as la

from .coherence import TimeTrace
from .errors import AliasingError, DimensionError, EmptySystemError

__all__ = [
    "HankelConfig", "Realization", "ResidualReport",
    "default_hankel_config", "build_hankel", "choose_epsilon", "era_realize",
    "principal_logm", "continuous_generator", "verify_realization",
    "realize_trace", "project_to_unit_circle",
]

#: refuse the matrix log when a sampled rotation gets this close (as a
#: fraction of pi) to the branch cut; past it the generator would alias.
ALIAS_GUARD_FRAC = 0.88


@dataclass(frozen=True)
class HankelConfig:
    """Block layout of the generalized Hankel matrix.

    ``j_offsets`` (length r-1) and ``t_offsets`` (length s-1) are the row
    and column sample shifts; None means consecutive (j_i = i, t_l = l).
    """

    r: int
    s: int
    j_offsets: tuple[int, ...] | None = None
    t_offsets: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.r < 1 or self.s < 1:
            raise ValueError("Hankel block counts must be positive")
        for name, offs, count in (("j_offsets", self.j_offsets, self.r),
                                  ("t_offsets", self.t_offsets, self.s)):
            if offs is not None and len(offs) != count - 1:
                raise ValueError(f"{name} must have length {count - 1}")

    @property
    def row_shifts(self) -> tuple[int, ...]:
        if self.j_offsets is None:
            return tuple(range(self.r))
        return (0,) + tuple(self.j_offsets)

    @property
    def col_shifts(self) -> tuple[int, ...]:
        if self.t_offsets is None:
            return tuple(range(self.s))
        return (0,) + tuple(self.t_offsets)

    def max_sample(self, k: int) -> int:
        return max(self.row_shifts) + max(self.col_shifts) + k


def default_hankel_config(n_samples: int) -> HankelConfig:
    """Split the available samples evenly: r = s = (J-1)//2, consecutive."""
    half = (n_samples - 1) // 2
    if half < 1:
        raise ValueError("trace too short for a Hankel matrix")
    return HankelConfig(r=half, s=half)


def build_hankel(trace: TimeTrace, cfg: HankelConfig, k: int = 0) -> np.ndarray:
    """Assemble the rp x s block Hankel matrix of shift k.

    Block (i, l) is the output vector y(j_i + k + t_l), stacked so each
    block row contributes p matrix rows.
    """
    if cfg.max_sample(k) >= trace.n_samples:
        raise ValueError(
            f"Hankel layout needs sample index {cfg.max_sample(k)} but the "
            f"trace has only {trace.n_samples} samples")
    y = trace.samples
    p = trace.n_outputs
    rows = cfg.row_shifts
    cols = np.asarray(cfg.col_shifts)
    h = np.empty((cfg.r * p, cfg.s))
    for i, ji in enumerate(rows):
        h[i * p:(i + 1) * p, :] = y[ji + k + cols, :].T
    return h


@dataclass(frozen=True)
class Realization:
    """Discrete realization plus, after log recovery, the continuous one."""

    ad: np.ndarray                       # (n_sigma, n_sigma)
    c: np.ndarray                        # (p, n_sigma)
    x0: np.ndarray                       # (n_sigma,)
    singular_values: np.ndarray          # all values of H(0)
    n_sigma: int
    epsilon: float
    acont: np.ndarray | None = None      # (n_sigma, n_sigma), units 1/s
    dt: float | None = None

    @property
    def order(self) -> int:
        return self.n_sigma


def choose_epsilon(singular_values: np.ndarray, shape: tuple[int, int],
                   noisy: bool = False) -> float:
    """Default truncation threshold.

    Clean data: max(rp, s) * sigma_max * machine-eps, the usual numerical
    rank cutoff. Noisy data: place the cut at the largest ratio between
    consecutive singular values (the clean cutoff would keep noise modes).
    """
    sv = np.asarray(singular_values, dtype=float)
    if sv.size == 0 or sv[0] <= 0.0:
        return np.finfo(float).eps
    if not noisy:
        return max(shape) * sv[0] * np.finfo(float).eps
    floor = sv[0] * 1e-13
    ratios = sv[:-1] / np.maximum(sv[1:], floor)
    cut = int(np.argmax(ratios))
    return float(np.sqrt(sv[cut] * max(sv[cut + 1], floor)))


def project_to_unit_circle(ad: np.ndarray) -> np.ndarray:
    """Rescale every eigenvalue of a real matrix to unit modulus.

    Noise pushes the discrete eigenvalues slightly off the unit circle;
    for norm-conserving dynamics they are known to sit on it. Off by
    default since the small real parts wash out of the transfer
    coefficients anyway.
    """
    evals, vecs = np.linalg.eig(ad)
    mags = np.abs(evals)
    if np.any(mags == 0):
        raise ValueError("zero eigenvalue cannot be projected to the circle")
    scaled = evals / mags
    return np.real(vecs @ np.diag(scaled) @ np.linalg.inv(vecs))


def era_realize(h0: np.ndarray, h1: np.ndarray, epsilon: float | None = None,
                n_outputs: int = 1, noisy: bool = False,
                rank: int | None = None,
                unit_circle: bool = False) -> Realization:
    """Realization from the shift-0 and shift-1 Hankel matrices.

    SVD of H(0), keep the singular values above ``epsilon`` (or exactly
    ``rank`` leading ones when the model order is known a priori), then

        Ad = S^-1/2 P1^T H(1) Q1 S^-1/2,  C = Ep^T P1 S^1/2,
        x0 = S^1/2 Q1^T e1.

    ``unit_circle`` projects the eigenvalues of Ad onto the unit circle
    afterwards (see ``project_to_unit_circle``).
    """
    h0 = np.asarray(h0, dtype=float)
    h1 = np.asarray(h1, dtype=float)
    if h0.shape != h1.shape:
        raise DimensionError(f"H(0) and H(1) shapes differ: {h0.shape} vs {h1.shape}")
    u, sv, vt = la.svd(h0, full_matrices=False)
    if epsilon is None:
        epsilon = choose_epsilon(sv, h0.shape, noisy=noisy)
    if rank is not None:
        if not 1 <= rank <= sv.size:
            raise ValueError(f"rank must be in [1, {sv.size}]")
        n_sigma = rank
    else:
        n_sigma = int(np.sum(sv > epsilon))
    if n_sigma == 0:
        raise EmptySystemError(
            f"all singular values are below epsilon = {epsilon:.3g}; "
            "the trace carries no dynamics")
    p1 = u[:, :n_sigma]
    q1 = vt[:n_sigma, :].T
    s_half = np.sqrt(sv[:n_sigma])
    s_ih = 1.0 / s_half
    ad = (s_ih[:, None] * (p1.T @ h1 @ q1)) * s_ih[None, :]
    if unit_circle:
        ad = project_to_unit_circle(ad)
    c = p1[:n_outputs, :] * s_half[None, :]
    x0 = s_half * q1[0, :]
    return Realization(ad=ad, c=c, x0=x0, singular_values=sv,
                       n_sigma=n_sigma, epsilon=float(epsilon))


def principal_logm(m: np.ndarray) -> np.ndarray:
    """Principal logarithm of a real matrix via its real Schur form.

    1x1 Schur blocks must hold positive eigenvalues and 2x2 blocks get
    the closed-form rotation log; the strictly upper part follows from
    the block Parlett recurrence (Sylvester solves). Eigenvalues on the
    closed negative real axis have no principal logarithm and raise.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"matrix must be square, got {m.shape}")
    t, z = la.schur(m, output="real")
    k = t.shape[0]
    # locate the 1x1 / 2x2 diagonal blocks
    blocks = []
    i = 0
    while i < k:
        if i + 1 < k and abs(t[i + 1, i]) > 1e-14 * max(1.0, abs(t[i, i])):
            blocks.append((i, 2))
            i += 2
        else:
            blocks.append((i, 1))
            i += 1
    f = np.zeros_like(t)
    for start, size in blocks:
        if size == 1:
            lam = t[start, start]
            if lam <= 1e-8 * max(1.0, abs(t).max()):
                raise AliasingError(
                    f"eigenvalue {lam:.3g} lies on the closed negative real "
                    "axis; the principal logarithm does not exist")
            f[start, start] = np.log(lam)
        else:
            b = t[start:start + 2, start:start + 2]
            mu = 0.5 * (b[0, 0] + b[1, 1])
            det = b[0, 0] * b[1, 1] - b[0, 1] * b[1, 0]
            nu_sq = det - mu * mu
            if nu_sq <= 0.0:  # real pair cannot appear in a 2x2 Schur block
                raise AliasingError("degenerate 2x2 Schur block")
            nu = np.sqrt(nu_sq)
            rho = np.hypot(mu, nu)
            phi = np.arctan2(nu, mu)
            if np.pi - abs(phi) <= 1e-8:
                raise AliasingError(
                    "eigenvalue pair on the negative real axis; the "
                    "principal logarithm does not exist")
            # B = mu I + N with N^2 = -nu^2 I, so log B = log(rho) I + (phi/nu) N
            n_part = b - mu * np.eye(2)
            f[start:start + 2, start:start + 2] = \
                np.log(rho) * np.eye(2) + (phi / nu) * n_part
    # Parlett recurrence over block columns
    for bj in range(1, len(blocks)):
        j0, js = blocks[bj]
        for bi in range(bj - 1, -1, -1):
            i0, isz = blocks[bi]
            tii = t[i0:i0 + isz, i0:i0 + isz]
            tjj = t[j0:j0 + js, j0:j0 + js]
            rhs = (f[i0:i0 + isz, i0:i0 + isz] @ t[i0:i0 + isz, j0:j0 + js]
                   - t[i0:i0 + isz, j0:j0 + js] @ f[j0:j0 + js, j0:j0 + js])
            for bk in range(bi + 1, bj):
                k0, ks = blocks[bk]
                rhs += (f[i0:i0 + isz, k0:k0 + ks] @ t[k0:k0 + ks, j0:j0 + js]
                        - t[i0:i0 + isz, k0:k0 + ks] @ f[k0:k0 + ks, j0:j0 + js])
            try:
                f[i0:i0 + isz, j0:j0 + js] = la.solve_sylvester(tii, -tjj, rhs)
            except la.LinAlgError as exc:
                raise AliasingError(
                    "repeated eigenvalues across Schur blocks; cannot "
                    "separate the logarithm blocks") from exc
    return z @ f @ z.T


def continuous_generator(real: Realization, dt: float,
                         guard_frac: float = ALIAS_GUARD_FRAC) -> Realization:
    """Recover Acont = log(Ad) / dt with an aliasing guard.

    Raises ``AliasingError`` when any discrete eigenvalue sits on the
    negative real axis or its rotation angle per step reaches
    ``guard_frac * pi``: past that point the principal branch can no
    longer be trusted to match the physical generator.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    evals = np.linalg.eigvals(real.ad)
    angles = np.abs(np.angle(evals))
    worst = float(np.max(angles)) if angles.size else 0.0
    if worst >= guard_frac * np.pi - 1e-12:
        raise AliasingError(
            f"sampled rotation per step reaches {worst / np.pi:.3f}*pi "
            f"(guard at {guard_frac:.2f}*pi); decrease dt below "
            f"{dt * guard_frac * np.pi / max(worst, 1e-300):.4g} s and re-measure")
    on_axis = (np.abs(evals.imag) <= 1e-8) & (evals.real <= 1e-8)
    if np.any(on_axis):
        raise AliasingError(
            "discrete eigenvalue on the closed negative real axis; "
            "the principal logarithm does not exist — decrease dt")
    acont = principal_logm(real.ad) / dt
    return replace(real, acont=acont, dt=dt)


@dataclass(frozen=True)
class ResidualReport:
    """How well a realization reproduces a trace."""

    max_abs: float
    rms: float
    n_samples: int

    def __str__(self):
        return (f"max |y - yhat| = {self.max_abs:.3e}, "
                f"rms = {self.rms:.3e} over {self.n_samples} samples")


def verify_realization(real: Realization, trace: TimeTrace) -> ResidualReport:
    """Replay C Ad^j x0 against every sample of the trace."""
    x = real.x0.copy()
    dev_sq = 0.0
    dev_max = 0.0
    for j in range(trace.n_samples):
        err = real.c @ x - trace.samples[j]
        dev_sq += float(err @ err)
        dev_max = max(dev_max, float(np.max(np.abs(err))))
        x = real.ad @ x
    rms = np.sqrt(dev_sq / trace.samples.size)
    return ResidualReport(max_abs=dev_max, rms=rms, n_samples=trace.n_samples)


def realize_trace(trace: TimeTrace, cfg: HankelConfig | None = None,
                  epsilon: float | None = None, rank: int | None = None,
                  ) -> Realization:
    """Hankel + ERA + continuous recovery in one call."""
    if cfg is None:
        cfg = default_hankel_config(trace.n_samples)
    h0 = build_hankel(trace, cfg, k=0)
    h1 = build_hankel(trace, cfg, k=1)
    real = era_realize(h0, h1, epsilon=epsilon, n_outputs=trace.n_outputs,
                       noisy=trace.noise_sigma > 0, rank=rank)
    return continuous_generator(real, trace.dt)
