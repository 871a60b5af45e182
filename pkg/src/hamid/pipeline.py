"""End-to-end identification: trace -> realization -> coefficients -> theta.

Shared by the command-line tool and the Monte-Carlo robustness harness.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coherence import CoherenceSystem, TimeTrace, build_selector, filtration, initial_coherence
from .era import Realization, default_hankel_config, realize_trace
from .errors import StructuralMismatchError
from .io import ModelFile
from .solver import SolveConfig, SolveResult, solve
from .transfer import TransferFunction, transfer_coefficients

__all__ = ["IdentifyResult", "model_template", "identify_trace"]


@dataclass(frozen=True)
class IdentifyResult:
    realization: Realization
    target: list[TransferFunction]
    template: CoherenceSystem
    solution: SolveResult

    def report(self, model_file: ModelFile) -> dict:
        names = model_file.model.parameter_names
        classes = []
        for cid, members in sorted(self.solution.classes.items()):
            classes.append({
                "class_id": cid,
                "estimates": [{
                    "parameters": {nm: float(v)
                                   for nm, v in zip(names, est.theta)},
                    "residual_norm": float(est.residual_norm),
                    "iterations": int(est.iterations),
                    "converged": bool(est.converged),
                } for est in members],
            })
        return {
            "n_sigma": int(self.realization.n_sigma),
            "epsilon": float(self.realization.epsilon),
            "singular_values_head": [float(v) for v in
                                     self.realization.singular_values[:12]],
            "accessible": [el.label for el in self.template.accessible],
            "n_classes": self.solution.n_classes,
            "classes": classes,
            "best_residual": float(self.solution.best_residual),
            "message": self.solution.message,
        }


def model_template(model_file: ModelFile) -> CoherenceSystem:
    """Accessible set, selector and initial coherence vector of the model.

    The generator slot is filled with zeros: parameter solving only needs
    the structural pieces.
    """
    model = model_file.model
    accessible = filtration(model_file.observables, model)
    selector = build_selector(model_file.observables, accessible)
    x0 = initial_coherence(model_file.psi0(), accessible)
    return CoherenceSystem(
        accessible=accessible,
        generator=np.zeros((len(accessible), len(accessible))),
        selector=selector,
        x0=x0,
        initial_state_label=model_file.initial_state_label,
        observable_labels=tuple(el.label for el in model_file.observables),
    )


def identify_trace(model_file: ModelFile, trace: TimeTrace,
                   epsilon: float | None = None, rank: int | None = None,
                   cfg: SolveConfig | None = None) -> IdentifyResult:
    """Run ERA, recover the continuous generator, and solve for theta.

    Raises ``StructuralMismatchError`` when the realization order differs
    from the model's accessible dimension (and no rank override is
    given): the data then shows a lower-order system than the model.
    """
    template = model_template(model_file)
    if trace.n_outputs != template.selector.shape[0]:
        raise StructuralMismatchError(
            f"trace has {trace.n_outputs} output channels, the model "
            f"measures {template.selector.shape[0]}")
    hankel_cfg = default_hankel_config(trace.n_samples)
    real = realize_trace(trace, hankel_cfg, epsilon=epsilon, rank=rank)
    k_dim = template.dim
    if real.n_sigma != k_dim:
        raise StructuralMismatchError(
            f"realization order n_sigma = {real.n_sigma} but the model's "
            f"accessible dimension is K = {k_dim}. Either part of the "
            "system is decoupled from the measured observables (some "
            "couplings effectively zero, n_sigma < K) or the model "
            "structure is wrong. Inspect the singular-value spectrum, or "
            "force the order with a rank override once the cause is "
            "understood.")
    target = transfer_coefficients(real.acont, real.c, real.x0)
    if cfg is None:
        cfg = SolveConfig(noisy=trace.noise_sigma > 0)
    solution = solve(model_file.model, target, template, cfg)
    return IdentifyResult(realization=real, target=target, template=template,
                          solution=solution)
