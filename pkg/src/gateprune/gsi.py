"""Gate Significance Index: exact (state access) and shot-based engines."""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .featuremap import BoundCircuit
from .simcore import (
    Circuit,
    GateOp,
    NoiseSpec,
    apply_gate,
    bloch_density,
    dagger,
    derive_seed,
    gate_unitary,
    partial_trace,
    pauli_expectation,
    sample_counts,
    von_neumann_entropy,
    zero_state,
)

CSV_COLUMNS = ("position", "gate", "F", "E", "P", "GSI")


@dataclass(frozen=True)
class GateMetrics:
    gate: str
    position: int
    F: float
    E: float
    P: float
    GSI: float

    @classmethod
    def combine(cls, gate: str, position: int, F: float, E: float, P: float) -> "GateMetrics":
        F, E, P = (float(min(max(v, 0.0), 1.0)) for v in (F, E, P))
        return cls(gate, int(position), F, E, P, (F + E + (1.0 - P)) / 3.0)


@dataclass(frozen=True)
class SensitivityConfig:
    delta: float = 0.1

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")

    @property
    def deltas(self) -> tuple[float, float, float]:
        return (0.0, self.delta, -self.delta)


@dataclass(frozen=True)
class HardwareEstimatorConfig:
    shots: int = 10_000
    qubit: int | None = None
    delta: float = 0.1
    noise: NoiseSpec | None = None
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.shots < 1:
            raise ValueError("shots must be positive")
        if not self.delta > 0:
            raise ValueError("delta must be positive")


def _as_circuit(circuit) -> Circuit:
    return circuit.circuit if isinstance(circuit, BoundCircuit) else circuit


def _local_overlap(rho: np.ndarray, op: np.ndarray) -> float:
    return float(abs(np.trace(rho @ op)) ** 2)


def sensitivity_exact(rho_prev: np.ndarray, gate: GateOp, sens: SensitivityConfig = SensitivityConfig()) -> float:
    """Population std of ``|Tr(rho U(t)^dag U(t + d))|^2`` over d in {0, +delta, -delta}."""
    if not gate.parameterized:
        raise ValueError(f"{gate.kind} has no parameter to perturb")
    base = gate_unitary(gate).conj().T
    fids = [
        _local_overlap(rho_prev, base @ gate_unitary(gate.with_theta(gate.theta + d)))
        for d in sens.deltas
    ]
    return float(np.std(fids))


def default_ent_qubit(n: int) -> int:
    return min(1, n - 1)


def gsi_exact(
    circuit: BoundCircuit | Circuit,
    ent_qubit: int | None = None,
    sens: SensitivityConfig = SensitivityConfig(),
) -> list[GateMetrics]:
    circ = _as_circuit(circuit)
    if not circ.gates:
        raise ValueError("cannot score an empty circuit")
    n = circ.num_qubits
    q = default_ent_qubit(n) if ent_qubit is None else min(int(ent_qubit), n - 1)
    psi = zero_state(n)
    out = []
    for pos, g in enumerate(circ.gates):
        rho_prev = partial_trace(psi, g.qubits)
        F = _local_overlap(rho_prev, gate_unitary(g))
        psi = apply_gate(psi, g)
        E = von_neumann_entropy(partial_trace(psi, [q]))  # log2(dim) = 1 for one qubit
        Ps = sensitivity_exact(rho_prev, g, sens) if g.parameterized else 0.0
        out.append(GateMetrics.combine(g.kind, pos, F, E, Ps))
    return out


# tags for derived per-circuit seeds
_TAG_F, _TAG_Z, _TAG_X, _TAG_Y, _TAG_PLUS, _TAG_MINUS = range(6)


def _p_all_zero(circuit: Circuit, cfg: HardwareEstimatorConfig, pos: int, tag: int) -> float:
    counts = sample_counts(circuit, cfg.shots, cfg.noise, derive_seed(cfg.seed, pos, tag))
    return counts.probability("0" * circuit.num_qubits)


def _hardware_gate(circ: Circuit, pos: int, q: int, cfg: HardwareEstimatorConfig) -> GateMetrics:
    n = circ.num_qubits
    g = circ.gates[pos]
    prev = circ.prefix(pos)
    cur = circ.prefix(pos + 1)
    F = _p_all_zero(cur + dagger(prev), cfg, pos, _TAG_F)

    if n > 1:
        z, x, y = (
            pauli_expectation(cur, q, b, cfg.shots, cfg.noise, derive_seed(cfg.seed, pos, tag))
            for b, tag in (("Z", _TAG_Z), ("X", _TAG_X), ("Y", _TAG_Y))
        )
        E = von_neumann_entropy(bloch_density(x, y, z))
    else:
        E = 0.0

    if g.parameterized:
        inv = dagger(cur)
        shifted = []
        for d, tag in ((cfg.delta, _TAG_PLUS), (-cfg.delta, _TAG_MINUS)):
            pert = prev.append(g.with_theta(g.theta + d))
            shifted.append(_p_all_zero(pert + inv, cfg, pos, tag))
        Ps = float(np.std([1.0, *shifted]))
    else:
        Ps = 0.0
    return GateMetrics.combine(g.kind, pos, F, E, Ps)


def gsi_hardware(circuit: BoundCircuit | Circuit, cfg: HardwareEstimatorConfig = HardwareEstimatorConfig()) -> list[GateMetrics]:
    """Per-gate GSI estimated from sampled counts only.

    Per gate i: overlap circuit ``U_{i-1}^dag U_i`` (all-zero frequency gives F),
    Z/X/Y tomography of qubit ``cfg.qubit`` after ``U_i`` (entropy gives E) and,
    for parameterized gates, overlaps ``U_i^dag U_i^{+/-}`` with the gate angle
    shifted by ``+/-delta`` (P = std(1, F+, F-)).
    """
    circ = _as_circuit(circuit)
    if not circ.gates:
        raise ValueError("cannot score an empty circuit")
    n = circ.num_qubits
    q = default_ent_qubit(n) if cfg.qubit is None else int(cfg.qubit)
    if not 0 <= q < n:
        raise ValueError(f"tomography qubit {q} out of range for {n} qubits")
    positions = range(len(circ.gates))
    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as ex:
            return list(ex.map(lambda i: _hardware_gate(circ, i, q, cfg), positions))
    return [_hardware_gate(circ, i, q, cfg) for i in positions]


def gsi_range(metrics: Sequence[GateMetrics]) -> tuple[float, float]:
    if not metrics:
        raise ValueError("no metrics")
    vals = [m.GSI for m in metrics]
    return min(vals), max(vals)


def metrics_to_csv(metrics: Sequence[GateMetrics]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for m in metrics:
        w.writerow([m.position, m.gate, repr(m.F), repr(m.E), repr(m.P), repr(m.GSI)])
    return buf.getvalue()


def metrics_from_csv(text: str) -> list[GateMetrics]:
    rows = csv.DictReader(io.StringIO(text))
    return [
        GateMetrics(r["gate"], int(r["position"]), float(r["F"]), float(r["E"]), float(r["P"]), float(r["GSI"]))
        for r in rows
    ]


def metrics_to_json(metrics: Sequence[GateMetrics]) -> str:
    return json.dumps([asdict(m) for m in metrics], indent=2)
