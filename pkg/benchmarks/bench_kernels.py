"""Timing comparison of the compiled and pure-Python kernel lanes.

Runs the two hot kernels (transfer-coefficient evaluation and the full
Levenberg-Marquardt fit) on the 3-qubit chain benchmark problem, plus
one end-to-end identification per lane.

    python benchmarks/bench_kernels.py [--starts N]
"""

import argparse
import importlib
import os
import subprocess
import sys
import time

import numpy as np


def build_problem():
    from hamid import ChainSpec, generate_chain_model
    from hamid.coherence import (build_generator, build_selector, filtration,
                                 initial_coherence, plus_i_state)
    from hamid.pauli import BasisElement, PauliString

    model = generate_chain_model(
        ChainSpec(n=3, omegas=(1.3, 2.4, 1.7), deltas=(4.3, 5.2)))
    obs = [BasisElement(PauliString.from_label("XII"))]
    acc = filtration(obs, model)
    from hamid.coherence import generator_basis
    base, mats = generator_basis(model, acc)
    selector = build_selector(obs, acc)
    x0 = initial_coherence(plus_i_state(3), acc)
    truth = model.nominal_theta()
    a_true = build_generator(model, truth, acc)
    return base, mats, selector, x0, a_true, truth


def bench_lane(kernels, base, mats, selector, x0, a_true, truth, starts):
    reps = 2000
    t0 = time.perf_counter()
    for _ in range(reps):
        kernels.transfer_coeffs(a_true, selector, x0)
    t_coeff = (time.perf_counter() - t0) / reps

    den, num = kernels.transfer_coeffs(a_true, selector, x0)
    target = np.concatenate([den[1:], num.ravel()])[None, :]
    invw = (1.0 / np.maximum(1.0, np.abs(target)))
    # exclude the structurally-zero odd coefficients, as the solver does
    sens = np.abs(target) > 1e-9
    invw = invw * sens
    rng = np.random.default_rng(0)
    box = 9.0
    t0 = time.perf_counter()
    n_hits = 0
    for k in range(starts):
        theta0 = rng.uniform(-box, box, truth.size)
        theta, iters, status = kernels.lm_fit(
            base, mats, selector, x0[None, :], target, invw, theta0,
            max_iter=200, gtol=1e-12, xtol=1e-14)
        if np.allclose(np.abs(theta), np.abs(truth), atol=1e-6):
            n_hits += 1
    t_lm = (time.perf_counter() - t0) / starts
    return t_coeff, t_lm, n_hits


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--starts", type=int, default=50)
    parser.add_argument("--lane", choices=["compiled", "python"],
                        help=argparse.SUPPRESS)
    args = parser.parse_args()

    if args.lane is None:
        # one subprocess per lane so the import-time selection is honest
        for lane in ("compiled", "python"):
            env = dict(os.environ)
            if lane == "python":
                env["HAMID_PURE_PYTHON"] = "1"
            else:
                env.pop("HAMID_PURE_PYTHON", None)
            subprocess.run([sys.executable, __file__, "--lane", lane,
                            "--starts", str(args.starts)],
                           env=env, check=True)
        return

    import hamid
    if hamid.BACKEND != args.lane:
        print(f"[{args.lane}] lane unavailable (got {hamid.BACKEND}); skipped")
        return
    kernels = importlib.import_module("hamid._backend").kernels
    base, mats, selector, x0, a_true, truth = build_problem()
    t_coeff, t_lm, hits = bench_lane(kernels, base, mats, selector, x0,
                                     a_true, truth, args.starts)

    from hamid.coherence import simulate_trace, build_system, plus_i_state
    from hamid.io import ModelFile
    from hamid import ChainSpec, generate_chain_model
    from hamid.pauli import BasisElement, PauliString
    from hamid.pipeline import identify_trace
    from hamid.solver import SolveConfig
    model = generate_chain_model(
        ChainSpec(n=3, omegas=(1.3, 2.4, 1.7), deltas=(4.3, 5.2)))
    obs = (BasisElement(PauliString.from_label("XII")),)
    mf = ModelFile(model=model, observables=obs,
                   initial_state={"plus_i_qubit": 0})
    sys_full = build_system(model, truth, plus_i_state(3), obs)
    trace = simulate_trace(sys_full, 0.0598, 335)
    t0 = time.perf_counter()
    identify_trace(mf, trace, cfg=SolveConfig(starts=args.starts, seed=0))
    t_e2e = time.perf_counter() - t0

    print(f"[{args.lane}] transfer_coeffs: {t_coeff * 1e6:9.2f} us/call   "
          f"lm_fit: {t_lm * 1e3:8.3f} ms/start ({hits}/{args.starts} hits)   "
          f"identify: {t_e2e:6.3f} s")


if __name__ == "__main__":
    main()
