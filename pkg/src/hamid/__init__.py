"""hamid: Hamiltonian parameter identification from observable time traces.

Reduces closed-system qubit dynamics to a linear time-invariant system
on the accessible operator subspace, builds a minimal realization from
sampled expectation values (Hankel matrix + SVD), and solves the
polynomial equations obtained by equating transfer-function
coefficients with the parameterized model.
"""

__version__ = "0.1.0"

from ._backend import BACKEND
from .coherence import (
    CoherenceSystem, TimeTrace, add_noise, build_generator, build_system,
    filtration, initial_coherence, nyquist_max_dt, quantum_oracle_trace,
    simulate_trace,
)
from .era import (
    HankelConfig, Realization, build_hankel, continuous_generator,
    era_realize, realize_trace, verify_realization,
)
from .models import ChainSpec, HamiltonianModel, Term, generate_chain_model
from .pauli import BasisElement, PauliString, full_basis
from .pipeline import identify_trace, model_template
from .solver import ParameterEstimate, SolveConfig, SolveResult, solve
from .transfer import TransferFunction, coefficient_residual, model_coefficients, transfer_coefficients

__all__ = [
    "BACKEND", "__version__",
    "PauliString", "BasisElement", "full_basis",
    "HamiltonianModel", "Term", "ChainSpec", "generate_chain_model",
    "CoherenceSystem", "TimeTrace", "filtration", "build_generator",
    "build_system", "initial_coherence", "simulate_trace", "add_noise",
    "nyquist_max_dt", "quantum_oracle_trace",
    "HankelConfig", "Realization", "build_hankel", "era_realize",
    "continuous_generator", "verify_realization", "realize_trace",
    "TransferFunction", "transfer_coefficients", "model_coefficients",
    "coefficient_residual",
    "SolveConfig", "SolveResult", "ParameterEstimate", "solve",
    "identify_trace", "model_template",
]
