"""Command-line interface: hamid simulate | identify | robustness | inspect.

Exit codes: 0 success, 2 no solution found, 3 structural mismatch
between data and model, 4 file or parse error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import __version__
from ._backend import BACKEND
from .coherence import add_noise, build_generator, nyquist_max_dt, simulate_trace, unidentifiable_parameters
from .errors import FileFormatError, HamidError, StructuralMismatchError
from .io import load_model, load_trace, save_trace, write_report
from .pipeline import identify_trace, model_template
from .robustness import run_robustness, write_robustness_csvs
from .solver import SolveConfig

EXIT_OK = 0
EXIT_NO_SOLUTION = 2
EXIT_STRUCTURAL = 3
EXIT_IO = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hamid",
        description="Identify Hamiltonian parameters from observable "
                    "time traces")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="write a sampled trace CSV")
    sim.add_argument("--model", required=True, help="model JSON file")
    sim.add_argument("--dt", type=float, required=True, help="sampling period (s)")
    sim.add_argument("--duration", type=float, help="total time (s)")
    sim.add_argument("--samples", type=int, help="sample count (overrides duration)")
    sim.add_argument("--sigma", type=float, default=0.0, help="noise std dev")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True, help="output CSV path")

    ident = sub.add_parser("identify", help="estimate parameters from a trace")
    ident.add_argument("--model", required=True)
    ident.add_argument("--trace", required=True, help="trace CSV file")
    ident.add_argument("--epsilon", type=float, help="Hankel truncation threshold")
    ident.add_argument("--rank", type=int, help="force the realization order")
    ident.add_argument("--starts", type=int, default=60)
    ident.add_argument("--seed", type=int, default=0)
    ident.add_argument("--tol-residual", type=float, help="acceptance threshold")
    ident.add_argument("--lowest-order-only", action="store_true",
                       help="equate only the lowest-degree coefficients "
                            "(one per unknown)")
    ident.add_argument("--out", help="write the JSON report here")
    ident.add_argument("--dump-singular-values", metavar="PATH",
                       help="write the Hankel singular values as CSV")

    rob = sub.add_parser("robustness", help="Monte-Carlo noise study")
    rob.add_argument("--model", required=True)
    rob.add_argument("--dt", type=float, required=True)
    rob.add_argument("--duration", type=float)
    rob.add_argument("--samples", type=int)
    rob.add_argument("--sigma", required=True,
                     help="comma-separated noise levels, e.g. 0.01,0.05")
    rob.add_argument("--trajectories", type=int, default=500)
    rob.add_argument("--seed", type=int, default=0)
    rob.add_argument("--starts", type=int, default=24)
    rob.add_argument("--workers", type=int, help="parallel workers")
    rob.add_argument("--lowest-order-only", action="store_true")
    rob.add_argument("--out", required=True,
                     help="output prefix for the JSON report and CSV panels")

    insp = sub.add_parser("inspect", help="filtration and identifiability report")
    insp.add_argument("--model", required=True)
    return parser


def _sample_count(args) -> int:
    if args.samples is not None:
        return args.samples
    if args.duration is None:
        raise FileFormatError("give either --duration or --samples")
    return int(np.floor(args.duration / args.dt)) + 1


def _cmd_simulate(args) -> int:
    mf = load_model(args.model)
    theta = mf.model.nominal_theta()
    template = model_template(mf)
    system = template.__class__(
        accessible=template.accessible,
        generator=build_generator(mf.model, theta, template.accessible),
        selector=template.selector, x0=template.x0,
        initial_state_label=template.initial_state_label,
        observable_labels=template.observable_labels)
    trace = simulate_trace(system, args.dt, _sample_count(args))
    if args.sigma > 0:
        trace = add_noise(trace, args.sigma, args.seed)
    save_trace(trace, args.out)
    print(f"wrote {trace.n_samples} samples x {trace.n_outputs} outputs "
          f"to {args.out}")
    return EXIT_OK


def _cmd_identify(args) -> int:
    mf = load_model(args.model)
    trace = load_trace(args.trace)
    cfg = SolveConfig(starts=args.starts, seed=args.seed,
                      noisy=trace.noise_sigma > 0,
                      tol_residual=args.tol_residual,
                      lowest_order_only=args.lowest_order_only)
    result = identify_trace(mf, trace, epsilon=args.epsilon, rank=args.rank,
                            cfg=cfg)
    if args.dump_singular_values:
        sv = result.realization.singular_values
        with open(args.dump_singular_values, "w") as fh:
            fh.write("index,singular_value\n")
            for i, v in enumerate(sv):
                fh.write(f"{i},{v:.17g}\n")
    report = result.report(mf)
    report["backend"] = BACKEND
    if args.out:
        write_report(report, args.out)
    _print_identify_summary(report, mf)
    if not report["classes"]:
        return EXIT_NO_SOLUTION
    return EXIT_OK


def _print_identify_summary(report: dict, mf) -> None:
    print(f"n_sigma = {report['n_sigma']}, epsilon = {report['epsilon']:.3g}")
    if not report["classes"]:
        print(f"no solution found: {report['message']}")
        return
    names = mf.model.parameter_names
    for cls in report["classes"]:
        print(f"class {cls['class_id']}:")
        for est in cls["estimates"]:
            vals = ", ".join(f"{nm} = {est['parameters'][nm]:+.6g}"
                             for nm in names)
            print(f"  {vals}   (residual {est['residual_norm']:.3g})")
    if report["message"]:
        print(report["message"])


def _cmd_robustness(args) -> int:
    mf = load_model(args.model)
    sigmas = [float(v) for v in args.sigma.split(",") if v]
    if not sigmas:
        raise FileFormatError("--sigma needs at least one value")
    report = run_robustness(mf, sigmas, trajectories=args.trajectories,
                            seed=args.seed, dt=args.dt,
                            n_samples=_sample_count(args),
                            starts=args.starts, workers=args.workers,
                            lowest_order=args.lowest_order_only)
    write_report(report.as_dict(), f"{args.out}.json")
    paths = write_robustness_csvs(report, args.out)
    print(f"wrote {args.out}.json and " + ", ".join(paths))
    for s in report.sigma_grid:
        drop = report.dropout[s]
        print(f"sigma = {s}: {report.converged[s]} trajectories kept, "
              f"{drop} dropped")
    return EXIT_OK


def _cmd_inspect(args) -> int:
    mf = load_model(args.model)
    template = model_template(mf) if mf.initial_state is not None else None
    if template is None:
        from .coherence import filtration
        accessible = filtration(mf.observables, mf.model)
    else:
        accessible = template.accessible
    print(f"qubits: {mf.model.n}")
    print(f"terms: {len(mf.model.terms)}, unknown parameters: "
          f"{list(mf.model.parameter_names)}")
    print(f"accessible set (K = {len(accessible)}):")
    for el in accessible:
        print(f"  {el.label}")
    absent = unidentifiable_parameters(mf.model, accessible)
    for name in absent:
        print(f"WARNING: parameter '{name}' never enters the reduced "
              "generator and is NOT identifiable from these observables")
    if mf.model.nominal and not absent:
        try:
            theta = mf.model.nominal_theta()
        except HamidError:
            theta = None
        if theta is not None:
            gen = build_generator(mf.model, theta, accessible)
            bound = nyquist_max_dt(gen)
            print(f"sampling bound at nominal parameters: dt < {bound:.6g} s")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "simulate": _cmd_simulate,
        "identify": _cmd_identify,
        "robustness": _cmd_robustness,
        "inspect": _cmd_inspect,
    }
    try:
        return handlers[args.command](args)
    except FileFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except StructuralMismatchError as exc:
        print(f"structural mismatch: {exc}", file=sys.stderr)
        return EXIT_STRUCTURAL
    except HamidError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_SOLUTION


if __name__ == "__main__":
    sys.exit(main())
