"""ZZ feature maps and gate-mask pruning."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .simcore import CNOT, Circuit, GateOp, H, P

ROLES = ("hadamard", "single-phase", "entangler-cx", "entangler-phase")


@dataclass(frozen=True)
class FeatureMapSpec:
    num_features: int
    entanglement: str = "linear"
    reps: int = 1

    def __post_init__(self):
        if self.num_features < 1:
            raise ValueError("num_features must be >= 1")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if self.entanglement not in ("linear", "full"):
            raise ValueError(f"entanglement must be 'linear' or 'full', got {self.entanglement!r}")

    @property
    def num_qubits(self) -> int:
        return self.num_features

    def pairs(self) -> list[tuple[int, int]]:
        return entangler_pairs(self.num_features, self.entanglement)

    @property
    def gate_count(self) -> int:
        return self.reps * (2 * self.num_features + 3 * len(self.pairs()))


@dataclass(frozen=True)
class Provenance:
    layer: int
    role: str


@dataclass(frozen=True)
class BoundCircuit:
    circuit: Circuit
    x: tuple[float, ...]
    provenance: tuple[Provenance, ...]
    positions: tuple[int, ...]
    """Original gate positions in the unpruned map."""

    @property
    def num_qubits(self) -> int:
        return self.circuit.num_qubits

    @property
    def gates(self) -> tuple[GateOp, ...]:
        return self.circuit.gates

    def __len__(self):
        return len(self.circuit)


def entangler_pairs(n: int, pattern: str) -> list[tuple[int, int]]:
    if pattern == "linear":
        return [(i, i + 1) for i in range(n - 1)]
    if pattern == "full":
        return [(i, j) for i in range(n) for j in range(i + 1, n)]
    raise ValueError(f"unknown entanglement pattern {pattern!r}")


def build_zz_map(spec: FeatureMapSpec, x: Sequence[float]) -> BoundCircuit:
    """Bind ``x`` (already scaled to [0, 1]) into a ZZ feature map.

    Each repetition is H on every qubit, ``P(2*pi*x_i)`` on qubit i, then for
    every pair ``CNOT(i, j) . P(2(pi - pi*x_i)(pi - pi*x_j)) on j . CNOT(i, j)``.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (spec.num_features,):
        raise ValueError(f"expected {spec.num_features} features, got shape {x.shape}")
    if not np.all(np.isfinite(x)) or x.min() < 0.0 or x.max() > 1.0:
        raise ValueError("features must be normalized to [0, 1]")
    xt = np.pi * x
    n = spec.num_features
    gates: list[GateOp] = []
    prov: list[Provenance] = []
    for layer in range(spec.reps):
        for q in range(n):
            gates.append(H(q))
            prov.append(Provenance(layer, "hadamard"))
        for q in range(n):
            gates.append(P(2.0 * xt[q], q))
            prov.append(Provenance(layer, "single-phase"))
        for i, j in spec.pairs():
            phi = 2.0 * (np.pi - xt[i]) * (np.pi - xt[j])
            gates += [CNOT(i, j), P(phi, j), CNOT(i, j)]
            prov += [
                Provenance(layer, "entangler-cx"),
                Provenance(layer, "entangler-phase"),
                Provenance(layer, "entangler-cx"),
            ]
    return BoundCircuit(
        Circuit(n, tuple(gates)),
        tuple(float(v) for v in x),
        tuple(prov),
        tuple(range(len(gates))),
    )


def prune(circuit: BoundCircuit, mask: Sequence[bool]) -> BoundCircuit:
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (len(circuit),):
        raise ValueError(f"mask length {mask.size} does not match {len(circuit)} gates")
    keep = np.flatnonzero(mask)
    return BoundCircuit(
        Circuit(circuit.num_qubits, tuple(circuit.gates[i] for i in keep)),
        circuit.x,
        tuple(circuit.provenance[i] for i in keep),
        tuple(circuit.positions[i] for i in keep),
    )


def active_qubits(circuit: Circuit | BoundCircuit) -> set[int]:
    if isinstance(circuit, BoundCircuit):
        circuit = circuit.circuit
    return {q for g in circuit.gates for q in g.qubits}


def masked_builder(spec: FeatureMapSpec, mask: Sequence[bool] | None = None):
    """``x -> Circuit`` for the map pruned by ``mask`` (None keeps everything)."""
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (spec.gate_count,):
            raise ValueError("mask does not match the feature map")

    def build(x):
        bound = build_zz_map(spec, x)
        if mask is not None:
            bound = prune(bound, mask)
        return bound.circuit

    return build
