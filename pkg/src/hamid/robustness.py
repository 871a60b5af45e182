"""Monte-Carlo study of estimate robustness against measurement noise.

For each noise level, many independently-noised copies of the clean
trace are pushed through the full identification pipeline; the
truth-class estimates are aggregated into means, standard deviations
and box-plot quantiles per parameter. Couplings whose sign cannot be
identified are canonicalized to the positive representative before
aggregating.
"""

from __future__ import annotations

import multiprocessing
from dataclasses import dataclass, field, replace

import numpy as np

from .coherence import add_noise, build_generator, simulate_trace
from .errors import HamidError
from .io import ModelFile
from .pipeline import identify_trace, model_template
from .solver import SolveConfig
from .transfer import model_coefficients, stack_channels

__all__ = ["RobustnessReport", "run_robustness", "sign_symmetric_parameters"]

QUANTILES = (9, 25, 50, 75, 91)


@dataclass(frozen=True)
class ParameterStats:
    """Statistics of one parameter's truth-class estimates at one sigma."""

    mean: float
    rel_err_pct: float
    std: float
    quantiles: tuple[float, ...]    # estimate percentiles 9/25/50/75/91


@dataclass(frozen=True)
class RobustnessReport:
    sigma_grid: tuple[float, ...]
    parameter_names: tuple[str, ...]
    truth: tuple[float, ...]
    trajectories: int
    seed: int
    stats: dict[float, dict[str, ParameterStats]]
    converged: dict[float, int] = field(default_factory=dict)
    dropout: dict[float, int] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "sigma_grid": list(self.sigma_grid),
            "parameter_names": list(self.parameter_names),
            "truth": list(self.truth),
            "trajectories": self.trajectories,
            "seed": self.seed,
            "quantile_levels": list(QUANTILES),
            "converged": {str(s): self.converged[s] for s in self.sigma_grid},
            "dropout": {str(s): self.dropout[s] for s in self.sigma_grid},
            "stats": {
                str(s): {
                    name: {
                        "mean": ps.mean,
                        "rel_err_pct": ps.rel_err_pct,
                        "std": ps.std,
                        "quantiles": list(ps.quantiles),
                    } for name, ps in self.stats[s].items()
                } for s in self.sigma_grid
            },
        }


def sign_symmetric_parameters(model, template, truth) -> list[int]:
    """Indices whose sign flip leaves the transfer coefficients unchanged
    (evaluated at the truth point; e.g. chain couplings)."""
    ref = stack_channels(model_coefficients(
        model, truth, template.accessible, template.selector, template.x0))
    scale = max(1.0, float(np.max(np.abs(ref))))
    out = []
    for i in range(len(truth)):
        if abs(truth[i]) < 1e-12:
            continue
        flipped = np.array(truth, dtype=float)
        flipped[i] = -flipped[i]
        vec = stack_channels(model_coefficients(
            model, flipped, template.accessible, template.selector,
            template.x0))
        if np.max(np.abs(vec - ref)) < 1e-8 * scale:
            out.append(i)
    return out


def _canonicalize(theta: np.ndarray, symmetric: list[int]) -> np.ndarray:
    out = np.array(theta, dtype=float)
    for i in symmetric:
        out[i] = abs(out[i])
    return out


# ---------------------------------------------------------------------------
# worker plumbing: the context is installed once per process

_CTX: dict = {}


def _init_worker(ctx):
    _CTX.update(ctx)


def _run_trajectory(task):
    """One noisy identification; returns (sigma_idx, traj_idx, theta|None)."""
    sigma_idx, traj_idx = task
    sigma = _CTX["sigmas"][sigma_idx]
    noisy = add_noise(_CTX["clean_trace"], sigma,
                      seed=(_CTX["seed"], sigma_idx, traj_idx))
    cfg = SolveConfig(starts=_CTX["starts"], seed=int(traj_idx) + 1,
                      noisy=sigma > 0,
                      tol_residual=_CTX["tolerances"][sigma_idx],
                      lowest_order_only=_CTX["lowest_order"],
                      max_iter=120)
    try:
        result = identify_trace(_CTX["model_file"], noisy,
                                rank=_CTX["rank"], cfg=cfg)
    except HamidError:
        return sigma_idx, traj_idx, None
    est = _select_truth_class(result.solution.estimates,
                              _CTX["truth"], _CTX["symmetric"])
    return sigma_idx, traj_idx, est


def _select_truth_class(estimates, truth, symmetric):
    """Best-residual estimate of the class nearest the canonicalized truth."""
    truth_c = _canonicalize(np.asarray(truth), symmetric)
    best = None
    best_dist = np.inf
    for est in estimates:
        cano = _canonicalize(est.theta, symmetric)
        dist = float(np.max(np.abs(cano - truth_c) / np.maximum(1.0, np.abs(truth_c))))
        if dist < best_dist:
            best_dist = dist
            best = cano
    # reject gross mis-solutions (different root of the polynomial system)
    if best is None or best_dist > 1.0:
        return None
    return best


def run_robustness(model_file: ModelFile, sigmas, trajectories: int,
                   seed: int, dt: float, n_samples: int,
                   starts: int = 24, lowest_order: bool = False,
                   workers: int | None = None,
                   tol_residual_fn=None) -> RobustnessReport:
    """Run the full noise study and aggregate truth-class statistics.

    The model file must carry nominal values for every unknown parameter;
    they generate the clean trace and define the truth class. Trajectory
    seeds derive deterministically from (seed, sigma index, trajectory
    index), so results do not depend on worker scheduling.
    """
    if trajectories < 10:
        raise ValueError("need at least 10 trajectories per noise level")
    model = model_file.model
    truth = model.nominal_theta()
    template = model_template(model_file)
    generator = build_generator(model, truth, template.accessible)
    clean = simulate_trace(replace(template, generator=generator),
                           dt, n_samples)
    symmetric = sign_symmetric_parameters(model, template, truth)

    if tol_residual_fn is None:
        # noisy coefficients cannot be matched better than the noise floor;
        # scale the acceptance with sigma (calibrated on the chain benchmark)
        def tol_residual_fn(sigma):
            return 1e-6 if sigma == 0 else max(1e-4, 40.0 * sigma)
    sigma_list = tuple(float(s) for s in sigmas)

    ctx = {
        "model_file": model_file,
        "clean_trace": clean,
        "sigmas": sigma_list,
        "seed": int(seed),
        "starts": int(starts),
        "rank": template.dim,
        "truth": truth,
        "symmetric": symmetric,
        "lowest_order": bool(lowest_order),
        "tolerances": {i: float(tol_residual_fn(s))
                       for i, s in enumerate(sigma_list)},
    }
    tasks = [(si, ti) for si in range(len(ctx["sigmas"]))
             for ti in range(trajectories)]
    results: dict[tuple[int, int], np.ndarray | None] = {}
    if workers is None:
        workers = max(1, min(multiprocessing.cpu_count(), 8))
    if workers == 1:
        _init_worker(ctx)
        for task in tasks:
            si, ti, est = _run_trajectory(task)
            results[(si, ti)] = est
    else:
        with multiprocessing.Pool(workers, initializer=_init_worker,
                                  initargs=(ctx,)) as pool:
            for si, ti, est in pool.imap_unordered(_run_trajectory, tasks,
                                                   chunksize=8):
                results[(si, ti)] = est

    stats: dict[float, dict[str, ParameterStats]] = {}
    converged: dict[float, int] = {}
    dropout: dict[float, int] = {}
    for si, sigma in enumerate(ctx["sigmas"]):
        collected = [results[(si, ti)] for ti in range(trajectories)]
        kept = np.array([e for e in collected if e is not None])
        converged[sigma] = len(kept)
        dropout[sigma] = trajectories - len(kept)
        per_param: dict[str, ParameterStats] = {}
        truth_c = _canonicalize(truth, symmetric)
        for i, name in enumerate(model.parameter_names):
            if len(kept) == 0:
                per_param[name] = ParameterStats(np.nan, np.nan, np.nan,
                                                 (np.nan,) * len(QUANTILES))
                continue
            vals = kept[:, i]
            mean = float(np.mean(vals))
            std = float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0
            rel = (mean - truth_c[i]) / truth_c[i] * 100.0 \
                if truth_c[i] != 0 else np.nan
            qs = tuple(float(np.percentile(vals, q)) for q in QUANTILES)
            per_param[name] = ParameterStats(mean=mean, rel_err_pct=float(rel),
                                             std=std, quantiles=qs)
        stats[sigma] = per_param
    return RobustnessReport(sigma_grid=ctx["sigmas"],
                            parameter_names=model.parameter_names,
                            truth=tuple(float(v) for v in truth),
                            trajectories=trajectories, seed=int(seed),
                            stats=stats, converged=converged, dropout=dropout)


def write_robustness_csvs(report: RobustnessReport, prefix: str) -> list[str]:
    """Plot-ready CSVs: one per summary panel, one for the box plots."""
    names = report.parameter_names
    paths = []

    path = f"{prefix}_rel_err_mean.csv"
    lines = ["sigma," + ",".join(names)]
    for s in report.sigma_grid:
        row = [f"{s:.17g}"] + [f"{report.stats[s][n].rel_err_pct:.17g}"
                               for n in names]
        lines.append(",".join(row))
    _write(path, lines)
    paths.append(path)

    path = f"{prefix}_std.csv"
    lines = ["sigma," + ",".join(names)]
    for s in report.sigma_grid:
        row = [f"{s:.17g}"] + [f"{report.stats[s][n].std:.17g}" for n in names]
        lines.append(",".join(row))
    _write(path, lines)
    paths.append(path)

    path = f"{prefix}_boxplot.csv"
    lines = ["sigma,parameter," + ",".join(f"rel_err_p{q}" for q in QUANTILES)]
    truth = dict(zip(names, report.truth))
    for s in report.sigma_grid:
        for n in names:
            ps = report.stats[s][n]
            t = abs(truth[n]) if truth[n] != 0 else 1.0
            rel_qs = [(q - abs(truth[n])) / t * 100.0 for q in ps.quantiles]
            lines.append(",".join([f"{s:.17g}", n]
                                  + [f"{v:.17g}" for v in rel_qs]))
    _write(path, lines)
    paths.append(path)
    return paths


def _write(path, lines):
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
