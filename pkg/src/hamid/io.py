"""Model files (JSON) and trace files (CSV with metadata comments).

Trace files carry dt, sigma and seed as ``#`` comment lines so the
identify stage never has to guess sampling parameters; the CSV body is
``t,y1..yp``, one row per sample, every float printed with 17
significant digits so files round-trip bit-exactly.
"""

from __future__ import annotations

import ast
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .coherence import TimeTrace, basis_state, plus_i_state, plus_state
from .errors import FileFormatError
from .models import HamiltonianModel, Term
from .pauli import BasisElement, PauliString

__all__ = ["ModelFile", "load_model", "save_model", "load_trace", "save_trace",
           "write_report"]


@dataclass(frozen=True)
class ModelFile:
    """Parsed model file: structure, observables and initial-state recipe."""

    model: HamiltonianModel
    observables: tuple[BasisElement, ...]
    initial_state: dict | None

    def psi0(self) -> np.ndarray:
        if self.initial_state is None:
            raise FileFormatError("model file has no initial_state entry")
        return _build_state(self.model.n, self.initial_state)

    @property
    def initial_state_label(self) -> str:
        if self.initial_state is None:
            return ""
        return ",".join(f"{k}:{v}" for k, v in sorted(self.initial_state.items())
                        if k != "amplitudes") or "amplitudes"


def _build_state(n: int, spec: dict) -> np.ndarray:
    known = {"plus_i_qubit", "plus_qubit", "basis", "amplitudes"}
    bad = set(spec) - known
    if bad:
        raise FileFormatError(f"unknown initial_state keys: {sorted(bad)}")
    if len(spec) != 1:
        raise FileFormatError("initial_state needs exactly one entry")
    if "plus_i_qubit" in spec:
        q = int(spec["plus_i_qubit"])
        if not 0 <= q < n:
            raise FileFormatError(f"qubit index {q} out of range")
        return plus_i_state(n, q)
    if "plus_qubit" in spec:
        q = int(spec["plus_qubit"])
        if not 0 <= q < n:
            raise FileFormatError(f"qubit index {q} out of range")
        return plus_state(n, q)
    if "basis" in spec:
        bits = str(spec["basis"])
        if len(bits) != n or set(bits) - {"0", "1"}:
            raise FileFormatError(f"basis label must be {n} bits, got {bits!r}")
        return basis_state(n, int(bits, 2))
    amps = np.array([complex(re, im) for re, im in spec["amplitudes"]])
    if amps.size != 2 ** n:
        raise FileFormatError(f"amplitudes must have length {2 ** n}")
    norm = np.linalg.norm(amps)
    if norm == 0:
        raise FileFormatError("amplitudes are all zero")
    return amps / norm


def load_model(path) -> ModelFile:
    """Parse a model file; see README for the schema."""
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise FileFormatError(f"cannot read model file {path}: {exc}") from exc
    try:
        n = int(raw["n"])
        param_names: list[str] = []
        terms = []
        for entry in raw["terms"]:
            word = PauliString.from_label(entry["pauli"])
            scale = float(entry.get("scale", 1.0))
            if "value" in entry:
                terms.append(Term(word, value=float(entry["value"])))
            elif "param" in entry:
                name = str(entry["param"])
                if name not in param_names:
                    param_names.append(name)
                terms.append(Term(word, param=param_names.index(name),
                                  scale=scale))
            else:
                raise FileFormatError(
                    f"term {entry!r} needs either 'value' or 'param'")
        nominal = {str(k): float(v)
                   for k, v in raw.get("parameters", {}).items()}
        model = HamiltonianModel(n=n, terms=tuple(terms),
                                 parameter_names=tuple(param_names),
                                 nominal=nominal)
        observables = tuple(BasisElement(PauliString.from_label(lbl))
                            for lbl in raw["observables"])
        if not observables:
            raise FileFormatError("model file lists no observables")
        state = raw.get("initial_state")
        if state is not None:
            _build_state(n, dict(state))  # validate eagerly
        return ModelFile(model=model, observables=observables,
                         initial_state=dict(state) if state else None)
    except FileFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise FileFormatError(f"malformed model file {path}: {exc}") from exc


def save_model(mf: ModelFile, path) -> None:
    terms = []
    for t in mf.model.terms:
        entry: dict = {"pauli": t.pauli.label}
        if t.is_known:
            entry["value"] = t.value
        else:
            entry["param"] = mf.model.parameter_names[t.param]
            if t.scale != 1.0:
                entry["scale"] = t.scale
        terms.append(entry)
    doc = {
        "n": mf.model.n,
        "terms": terms,
        "observables": [el.label for el in mf.observables],
    }
    if mf.initial_state is not None:
        doc["initial_state"] = mf.initial_state
    if mf.model.nominal:
        doc["parameters"] = dict(sorted(mf.model.nominal.items()))
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def save_trace(trace: TimeTrace, path) -> None:
    lines = ["# hamid trace v1",
             f"# dt = {trace.dt:.17g}",
             f"# sigma = {trace.noise_sigma:.17g}",
             f"# seed = {trace.seed}"]
    if trace.initial_state_label:
        lines.append(f"# initial_state = {trace.initial_state_label}")
    if trace.observable_labels:
        lines.append(f"# observables = {','.join(trace.observable_labels)}")
    header = ",".join(["t"] + [f"y{i + 1}" for i in range(trace.n_outputs)])
    lines.append(header)
    for j in range(trace.n_samples):
        row = [f"{j * trace.dt:.17g}"]
        row += [f"{v:.17g}" for v in trace.samples[j]]
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n")


def load_trace(path) -> TimeTrace:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FileFormatError(f"cannot read trace file {path}: {exc}") from exc
    meta: dict[str, str] = {}
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            if "=" in line:
                key, _, val = line[1:].partition("=")
                meta[key.strip()] = val.strip()
            continue
        if line.startswith("t,") or line == "t":
            continue
        try:
            rows.append([float(v) for v in line.split(",")])
        except ValueError as exc:
            raise FileFormatError(f"bad CSV row in {path}: {line!r}") from exc
    if len(rows) < 2:
        raise FileFormatError(f"trace file {path} has fewer than two samples")
    data = np.asarray(rows)
    if "dt" not in meta:
        raise FileFormatError(f"trace file {path} is missing the dt metadata")
    dt = float(meta["dt"])
    seed = None
    if meta.get("seed", "None") != "None":
        try:
            seed = ast.literal_eval(meta["seed"])
        except (SyntaxError, ValueError):
            seed = None
    observables = tuple(meta.get("observables", "").split(",")) \
        if meta.get("observables") else ()
    return TimeTrace(dt=dt, samples=data[:, 1:],
                     noise_sigma=float(meta.get("sigma", 0.0)),
                     seed=seed,
                     initial_state_label=meta.get("initial_state", ""),
                     observable_labels=observables)


def write_report(obj: dict, path) -> None:
    """Deterministic JSON dump (sorted keys, repr floats)."""
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True,
                                     default=_jsonable) + "\n")


def _jsonable(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, (np.bool_,)):
        return bool(value)
    raise TypeError(f"cannot serialize {type(value)}")
