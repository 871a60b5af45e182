"""Multi-start least-squares solving of the coefficient-matching equations.

Equating the model's transfer coefficients with the data-derived ones
gives a small multivariate polynomial system in the unknown parameters.
A damped Gauss-Newton (Levenberg-Marquardt) iteration from many random
starting points inside a spectral search box finds its real solutions;
solutions are deduplicated, completed with verified sign symmetries,
and grouped into input/output equivalence classes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .coherence import CoherenceSystem, generator_basis, unidentifiable_parameters
from .errors import ModelError, StructuralMismatchError
from .models import HamiltonianModel
from .transfer import TransferFunction, coefficient_residual

__all__ = [
    "SolveConfig", "ParameterEstimate", "SolveResult",
    "solve", "multi_state_solve", "classify_equivalents",
]


@dataclass(frozen=True)
class SolveConfig:
    """Knobs for the multi-start solver.

    ``box`` is the half-width of the per-parameter search interval;
    None derives it from the target's spectral radius (every word
    coefficient is a Hilbert-Schmidt projection of H, so the data's own
    frequency scale bounds it). ``tol_residual`` None resolves to 1e-6
    for clean targets and 1e-2 * scale for noisy ones, with scale the
    norm of the weighted target vector.
    """

    starts: int = 60
    box: float | None = None
    tol_residual: float | None = None
    tol_cluster: float = 1e-4
    seed: int = 0
    max_iter: int = 200
    lowest_order_only: bool = False
    noisy: bool = False
    complete_symmetries: bool = True

    def __post_init__(self):
        if self.starts < 1:
            raise ValueError("need at least one start")
        if self.tol_residual is not None and self.tol_residual <= 0:
            raise ValueError("tol_residual must be positive")
        if self.tol_cluster <= 0:
            raise ValueError("tol_cluster must be positive")


@dataclass(frozen=True)
class ParameterEstimate:
    """One solution of the coefficient equations."""

    theta: np.ndarray
    residual_norm: float
    class_id: int
    converged: bool
    iterations: int


@dataclass(frozen=True)
class SolveResult:
    """All estimates found, plus solve-level diagnostics."""

    estimates: list[ParameterEstimate]
    best_residual: float
    n_classes: int
    insensitive: bool = False
    message: str = ""
    dropped_starts: int = 0

    @property
    def classes(self) -> dict[int, list[ParameterEstimate]]:
        out: dict[int, list[ParameterEstimate]] = {}
        for est in self.estimates:
            out.setdefault(est.class_id, []).append(est)
        return out


@dataclass
class _Problem:
    """Arrays shared by every start of one solve."""

    base: np.ndarray
    mats: np.ndarray
    selector: np.ndarray
    x0s: np.ndarray          # (T, K)
    targets: np.ndarray      # (T, m) kernel layout: den tail desc, nums desc
    inv_weights: np.ndarray  # (T, m); zero excludes an equation
    accept: np.ndarray       # (T, m) bool, entries counted in residual_norm
    box: float
    tol_residual: float
    k_dim: int = 0
    coeff_scale: float = 1.0


def _kernel_vector(tf_list: list[TransferFunction]) -> np.ndarray:
    """Target vector in the kernel's layout (den tail, then numerators)."""
    den = tf_list[0].den_desc()[1:]
    nums = [tf.num_desc() for tf in tf_list]
    return np.concatenate([den] + nums)


def _as_channels(target) -> list[TransferFunction]:
    return [target] if isinstance(target, TransferFunction) else list(target)


def _degree_proxy(k_dim: int, n_channels: int) -> np.ndarray:
    """Total polynomial degree of each kernel-layout coefficient in theta
    (exact for coefficients linear in the word coefficients)."""
    den = np.arange(1, k_dim + 1)              # s^{K-1} .. s^0 -> degree 1..K
    num = np.arange(0, k_dim)                  # s^{K-1} .. s^0 -> degree 0..K-1
    return np.concatenate([den] + [num] * n_channels)


def _sensitivity(problem: _Problem, rng: np.random.Generator,
                 n_probes: int = 4) -> np.ndarray:
    """Entries of the coefficient vector that actually move with theta."""
    n_par = problem.mats.shape[0]
    lo = np.inf * np.ones_like(problem.targets)
    hi = -lo
    for _ in range(n_probes):
        theta = rng.uniform(-1.0, 1.0, n_par) * max(problem.box, 1.0)
        a = problem.base + np.tensordot(theta, problem.mats, axes=1)
        for t in range(problem.x0s.shape[0]):
            vec = kernels.coeff_vector(a, problem.selector, problem.x0s[t])
            lo[t] = np.minimum(lo[t], vec)
            hi[t] = np.maximum(hi[t], vec)
    span = hi - lo
    return span > 1e-9 * max(1.0, float(np.max(np.abs(problem.targets))))


def _build_problem(model: HamiltonianModel, targets_with_states,
                   sys_template: CoherenceSystem, cfg: SolveConfig) -> _Problem:
    absent = unidentifiable_parameters(model, sys_template.accessible)
    if absent:
        raise ModelError(
            f"parameters {absent} never enter the reduced generator; they "
            "are not identifiable from the chosen observables")
    k_dim = sys_template.dim
    channel_count = sys_template.selector.shape[0]
    rows_t, rows_x = [], []
    for target, x0 in targets_with_states:
        chans = _as_channels(target)
        if len(chans) != channel_count:
            raise StructuralMismatchError(
                f"target has {len(chans)} channels, system has {channel_count}")
        if chans[0].order != k_dim:
            raise StructuralMismatchError(
                f"realization order {chans[0].order} does not match the "
                f"accessible dimension {k_dim}; the data shows a lower-order "
                "system (decoupled or unobservable part) or the model "
                "structure is wrong")
        if len(x0) != k_dim:
            raise StructuralMismatchError("initial vector has wrong dimension")
        rows_t.append(_kernel_vector(chans))
        rows_x.append(np.asarray(x0, dtype=float))
    targets = np.vstack(rows_t)
    x0s = np.vstack(rows_x)

    base, mats = generator_basis(model, sys_template.accessible)
    weights = np.maximum(1.0, np.abs(targets))
    inv_weights = 1.0 / weights

    problem = _Problem(base=base, mats=mats, selector=sys_template.selector,
                       x0s=x0s, targets=targets, inv_weights=inv_weights,
                       accept=np.ones_like(targets, dtype=bool),
                       box=1.0, tol_residual=1.0, k_dim=k_dim)

    rng = np.random.default_rng((cfg.seed, 2))
    sens = _sensitivity(problem, rng)
    if cfg.lowest_order_only:
        degs = _degree_proxy(k_dim, channel_count)
        selected = np.zeros_like(sens)
        for t in range(targets.shape[0]):
            idx = [i for i in np.argsort(degs, kind="stable") if sens[t, i]]
            keep = idx[:max(model.parameter_count, 1)]
            selected[t, keep] = True
        active = selected
    else:
        active = sens
    problem.inv_weights = inv_weights * active
    problem.accept = active

    roots = np.roots(_as_channels(targets_with_states[0][0])[0].den_desc())
    spectral = float(np.max(np.abs(roots))) if roots.size else 1.0
    problem.box = cfg.box if cfg.box is not None else max(spectral, 1e-3)

    if cfg.tol_residual is not None:
        problem.tol_residual = cfg.tol_residual
    elif cfg.noisy:
        scale = float(np.linalg.norm((targets * inv_weights)[active]))
        problem.tol_residual = 1e-2 * max(scale, 1.0)
    else:
        problem.tol_residual = 1e-6
    problem.coeff_scale = float(np.max(np.abs(targets)))
    return problem


def _residual_norm(problem: _Problem, theta: np.ndarray) -> float:
    a = problem.base + np.tensordot(theta, problem.mats, axes=1)
    acc = 0.0
    for t in range(problem.x0s.shape[0]):
        vec = kernels.coeff_vector(a, problem.selector, problem.x0s[t])
        res = (vec - problem.targets[t]) * problem.inv_weights[t]
        acc += float(res[problem.accept[t]] @ res[problem.accept[t]])
    return float(np.sqrt(acc))


def _coefficient_distance(problem: _Problem, th_a, th_b) -> float:
    a = problem.base + np.tensordot(th_a, problem.mats, axes=1)
    b = problem.base + np.tensordot(th_b, problem.mats, axes=1)
    d = 0.0
    for t in range(problem.x0s.shape[0]):
        va = kernels.coeff_vector(a, problem.selector, problem.x0s[t])
        vb = kernels.coeff_vector(b, problem.selector, problem.x0s[t])
        d = max(d, float(np.max(np.abs(va - vb) * problem.inv_weights[t])))
    return d


def _jacobian_singular(problem: _Problem, theta: np.ndarray) -> bool:
    n_par = theta.size
    cols = []
    base_vec = []
    a = problem.base + np.tensordot(theta, problem.mats, axes=1)
    for t in range(problem.x0s.shape[0]):
        vec = kernels.coeff_vector(a, problem.selector, problem.x0s[t])
        base_vec.append((vec * problem.inv_weights[t])[problem.accept[t]])
    base_vec = np.concatenate(base_vec)
    for i in range(n_par):
        h = 1e-6 * max(1.0, abs(theta[i]))
        probe = theta.copy()
        probe[i] += h
        ap = problem.base + np.tensordot(probe, problem.mats, axes=1)
        rows = []
        for t in range(problem.x0s.shape[0]):
            vec = kernels.coeff_vector(ap, problem.selector, problem.x0s[t])
            rows.append((vec * problem.inv_weights[t])[problem.accept[t]])
        cols.append((np.concatenate(rows) - base_vec) / h)
    jac = np.column_stack(cols)
    if jac.shape[0] < n_par:
        return True  # fewer informative equations than parameters
    sv = np.linalg.svd(jac, compute_uv=False)
    return bool(sv.size == 0 or sv[0] == 0.0 or sv[-1] / sv[0] < 1e-10)


def _cluster(found, tol_cluster):
    """Greedy dedup by parameter distance; keeps the lowest residual per site."""
    reps = []
    for norm, theta, iters in sorted(found, key=lambda f: (f[0], tuple(f[1]))):
        scale = 1.0 + float(np.linalg.norm(theta))
        if all(np.linalg.norm(theta - r[1]) > tol_cluster * scale for r in reps):
            reps.append((norm, theta, iters))
    return reps


def _symmetry_variants(problem: _Problem, reps, tol_residual):
    """Add verified sign-flip copies of each solution (couplings that enter
    the coefficients only at even order)."""
    out = list(reps)
    for norm, theta, iters in reps:
        flippable = []
        for i in range(theta.size):
            if abs(theta[i]) < 1e-12:
                continue
            flipped = theta.copy()
            flipped[i] = -flipped[i]
            if _coefficient_distance(problem, theta, flipped) < 1e-8 * max(
                    1.0, problem.coeff_scale):
                flippable.append(i)
        if not flippable or len(flippable) > 8:
            continue
        for mask in range(1, 1 << len(flippable)):
            variant = theta.copy()
            for bit, idx in enumerate(flippable):
                if (mask >> bit) & 1:
                    variant[idx] = -variant[idx]
            vnorm = _residual_norm(problem, variant)
            if vnorm <= tol_residual:
                out.append((vnorm, variant, iters))
    return _cluster(out, tol_cluster=1e-10)


def classify_equivalents(estimates: list[ParameterEstimate],
                         model: HamiltonianModel, sys_template: CoherenceSystem,
                         target=None, tol: float = 1e-6,
                         ) -> list[ParameterEstimate]:
    """Group estimates whose model coefficients agree: they generate the
    same input/output behavior and no trace can tell them apart.

    Returns the estimates re-annotated with class ids (0 = best residual).
    When several classes survive, extra measurements or prior knowledge
    are needed to pick the physical one.
    """
    if not estimates:
        return []
    from .transfer import model_coefficients, stack_channels
    vecs = []
    for est in estimates:
        tfs = model_coefficients(model, est.theta, sys_template.accessible,
                                 sys_template.selector, sys_template.x0)
        vecs.append(stack_channels(tfs))
    scale = max(1.0, float(np.max(np.abs(vecs[0]))))
    order = sorted(range(len(estimates)),
                   key=lambda i: (estimates[i].residual_norm,
                                  tuple(estimates[i].theta)))
    class_reps: list[np.ndarray] = []
    assignment = {}
    for i in order:
        for cid, rep in enumerate(class_reps):
            if np.max(np.abs(vecs[i] - rep)) <= tol * scale:
                assignment[i] = cid
                break
        else:
            assignment[i] = len(class_reps)
            class_reps.append(vecs[i])
    out = []
    for i, est in enumerate(estimates):
        out.append(ParameterEstimate(theta=est.theta,
                                     residual_norm=est.residual_norm,
                                     class_id=assignment[i],
                                     converged=est.converged,
                                     iterations=est.iterations))
    out.sort(key=lambda e: (e.class_id, e.residual_norm, tuple(e.theta)))
    return out


def multi_state_solve(model: HamiltonianModel, targets_with_states,
                      sys_template: CoherenceSystem,
                      cfg: SolveConfig | None = None) -> SolveResult:
    """Solve with residuals stacked across several initial-state targets.

    ``targets_with_states`` is a list of (transfer function(s), x0) pairs
    sharing the template's accessible set and selector. More states mean
    more low-order equations and fewer spurious solutions.
    """
    cfg = cfg or SolveConfig()
    if not targets_with_states:
        raise ValueError("need at least one target")
    problem = _build_problem(model, list(targets_with_states), sys_template, cfg)
    n_par = model.parameter_count
    rng = np.random.default_rng((cfg.seed, 1))

    found = []
    n_converged = 0
    best_norm = np.inf
    best_theta = None
    for _ in range(cfg.starts):
        theta0 = rng.uniform(-problem.box, problem.box, n_par)
        theta, iters, status = kernels.lm_fit(
            problem.base, problem.mats, problem.selector, problem.x0s,
            problem.targets, problem.inv_weights, theta0,
            max_iter=cfg.max_iter, gtol=1e-12, xtol=1e-14)
        norm = _residual_norm(problem, theta)
        if norm < best_norm:
            best_norm = norm
            best_theta = theta
        if status in (0, 1) or norm <= problem.tol_residual:
            n_converged += 1
        if norm <= problem.tol_residual:
            found.append((norm, theta, iters))

    insensitive = (best_theta is not None
                   and _jacobian_singular(problem, best_theta))
    insensitive_note = ("the coefficient Jacobian is rank-deficient at the "
                        "best point: the output is insensitive to some "
                        "parameter directions (degenerate initial state?)")

    if not found:
        msg = (f"no solution below tol_residual = {problem.tol_residual:.3g}; "
               f"best residual achieved {best_norm:.3g}")
        if insensitive:
            msg += "; " + insensitive_note
        return SolveResult(estimates=[], best_residual=best_norm, n_classes=0,
                           insensitive=insensitive, message=msg,
                           dropped_starts=cfg.starts - n_converged)

    reps = _cluster(found, cfg.tol_cluster)
    if cfg.complete_symmetries:
        reps = _symmetry_variants(problem, reps, problem.tol_residual)
    estimates = [ParameterEstimate(theta=theta, residual_norm=norm, class_id=0,
                                   converged=True, iterations=iters)
                 for norm, theta, iters in reps]
    estimates = classify_equivalents(estimates, model, sys_template)
    n_classes = len({e.class_id for e in estimates})
    notes = []
    if n_classes > 1:
        notes.append(f"{n_classes} input/output-equivalent solution classes "
                     "survive; additional measurements or prior information "
                     "are required to single one out")
    if insensitive:
        notes.append(insensitive_note)
    return SolveResult(estimates=estimates, best_residual=best_norm,
                       n_classes=n_classes, message="; ".join(notes),
                       insensitive=insensitive,
                       dropped_starts=cfg.starts - n_converged)


def solve(model: HamiltonianModel, target, sys_template: CoherenceSystem,
          cfg: SolveConfig | None = None) -> SolveResult:
    """Identify the unknown parameters from one target realization.

    ``target`` holds the transfer function(s) extracted from data; the
    template supplies the accessible set, selector and initial coherence
    vector. Returns every distinct solution found, grouped into
    input/output equivalence classes and sorted by residual.
    """
    return multi_state_solve(model, [(target, sys_template.x0)],
                             sys_template, cfg)
