"""Dense statevector simulation for small circuits.

Conventions
-----------
* Little-endian: qubit 0 is the least significant bit of a basis index.
* Bitstrings in :class:`Counts` are rendered most-significant qubit first,
  i.e. ``format(index, "0{n}b")``; the rightmost character is qubit 0.
* Local gate matrices follow the same rule over the gate's listed qubits:
  for ``CNOT(control, target)`` the control is the low bit of the 4x4 index.
  :func:`partial_trace` returns reduced states in exactly that ordering when
  called with ``keep=gate.qubits``, so ``Tr(rho_prev @ U)`` is well defined.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

GATE_KINDS = ("H", "X", "P", "RZ", "RX", "CNOT")
PARAMETRIC = frozenset({"P", "RZ", "RX"})
_ARITY = {"H": 1, "X": 1, "P": 1, "RZ": 1, "RX": 1, "CNOT": 2}

_SQ2 = 1 / np.sqrt(2)
H_MAT = np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex)
X_MAT = np.array([[0, 1], [1, 0]], dtype=complex)
Y_MAT = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z_MAT = np.array([[1, 0], [0, -1]], dtype=complex)
I_MAT = np.eye(2, dtype=complex)
PAULIS = (I_MAT, X_MAT, Y_MAT, Z_MAT)
# control = local qubit 0 (low bit), target = local qubit 1
CNOT_MAT = np.array(
    [[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=complex
)

ENTROPY_NEG_TOL = 1e-9
HERMITIAN_TOL = 1e-10


@dataclass(frozen=True)
class GateOp:
    kind: str
    qubits: tuple[int, ...]
    theta: float | None = None

    def __post_init__(self):
        if self.kind not in _ARITY:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if len(self.qubits) != _ARITY[self.kind]:
            raise ValueError(f"{self.kind} acts on {_ARITY[self.kind]} qubit(s), got {self.qubits}")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"repeated qubit in {self.kind}{self.qubits}")
        if any(q < 0 for q in self.qubits):
            raise ValueError(f"negative qubit index in {self.qubits}")
        if self.kind in PARAMETRIC:
            if self.theta is None:
                raise ValueError(f"{self.kind} needs an angle")
            object.__setattr__(self, "theta", float(self.theta))
        elif self.theta is not None:
            raise ValueError(f"{self.kind} takes no angle")

    @property
    def parameterized(self) -> bool:
        return self.kind in PARAMETRIC

    def with_theta(self, theta: float) -> "GateOp":
        return GateOp(self.kind, self.qubits, theta)

    def inverse(self) -> "GateOp":
        if self.parameterized:
            return GateOp(self.kind, self.qubits, -self.theta)
        return self

    def __str__(self):
        args = ",".join(str(q) for q in self.qubits)
        if self.parameterized:
            return f"{self.kind}({self.theta:.6g})[{args}]"
        return f"{self.kind}[{args}]"


def H(q):
    return GateOp("H", (q,))


def X(q):
    return GateOp("X", (q,))


def P(theta, q):
    return GateOp("P", (q,), theta)


def RZ(theta, q):
    return GateOp("RZ", (q,), theta)


def RX(theta, q):
    return GateOp("RX", (q,), theta)


def CNOT(control, target):
    return GateOp("CNOT", (control, target))


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    gates: tuple[GateOp, ...] = ()

    def __post_init__(self):
        if self.num_qubits < 1:
            raise ValueError("a circuit needs at least one qubit")
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            if max(g.qubits) >= self.num_qubits:
                raise ValueError(f"{g} out of range for {self.num_qubits} qubits")

    def __len__(self):
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def __add__(self, other: "Circuit") -> "Circuit":
        if other.num_qubits != self.num_qubits:
            raise ValueError("qubit count mismatch")
        return Circuit(self.num_qubits, self.gates + other.gates)

    def prefix(self, k: int) -> "Circuit":
        """First ``k`` gates."""
        return Circuit(self.num_qubits, self.gates[:k])

    def append(self, *gates: GateOp) -> "Circuit":
        return Circuit(self.num_qubits, self.gates + gates)


def dagger(circuit: Circuit) -> Circuit:
    return Circuit(circuit.num_qubits, tuple(g.inverse() for g in reversed(circuit.gates)))


@dataclass(frozen=True)
class NoiseSpec:
    """Parametric noise: depolarizing after every gate, bit flips on readout."""

    p1: float = 0.0
    p2: float = 0.0
    p_ro: float = 0.0

    def __post_init__(self):
        for name in ("p1", "p2", "p_ro"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")

    @property
    def gate_noise(self) -> bool:
        return self.p1 > 0 or self.p2 > 0


@dataclass(frozen=True)
class Counts:
    counts: dict[str, int]
    shots: int
    qubits: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if sum(self.counts.values()) != self.shots:
            raise ValueError("counts do not sum to shots")

    def probability(self, bitstring: str) -> float:
        return self.counts.get(bitstring, 0) / self.shots

    def __getitem__(self, key):
        return self.counts.get(key, 0)


def derive_seed(seed, *key: int) -> int:
    """Independent child seed for ``key`` (order-insensitive to evaluation order)."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0])


def zero_state(num_qubits: int) -> np.ndarray:
    psi = np.zeros(2**num_qubits, dtype=complex)
    psi[0] = 1.0
    return psi


def gate_unitary(gate: GateOp) -> np.ndarray:
    k = gate.kind
    if k == "H":
        return H_MAT.copy()
    if k == "X":
        return X_MAT.copy()
    if k == "CNOT":
        return CNOT_MAT.copy()
    t = gate.theta
    if k == "P":
        return np.array([[1, 0], [0, np.exp(1j * t)]], dtype=complex)
    if k == "RZ":
        return np.array([[np.exp(-0.5j * t), 0], [0, np.exp(0.5j * t)]], dtype=complex)
    c, s = np.cos(t / 2), np.sin(t / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def _num_qubits_of(dim: int) -> int:
    n = dim.bit_length() - 1
    if dim < 2 or 1 << n != dim:
        raise ValueError(f"state length {dim} is not a power of two")
    return n


def apply_matrix(states: np.ndarray, mat: np.ndarray, qubits: Sequence[int]) -> np.ndarray:
    """Apply a local matrix to a batch of states.

    ``states`` has shape ``(B, 2**n)``; ``mat`` is ``(d, d)`` or a per-row
    stack ``(B, d, d)`` with ``d = 2**len(qubits)``.
    """
    b, dim = states.shape
    n = _num_qubits_of(dim)
    k = len(qubits)
    if any(not 0 <= q < n for q in qubits):
        raise ValueError(f"qubits {tuple(qubits)} out of range for {n} qubits")
    t = states.reshape((b,) + (2,) * n)
    # tensor axis of qubit q is 1 + (n - 1 - q); gather high local bit first
    axes = [1 + n - 1 - q for q in reversed(qubits)]
    front = list(range(1, k + 1))
    t = np.moveaxis(t, axes, front).reshape(b, 2**k, -1)
    t = np.matmul(mat, t)
    t = np.moveaxis(t.reshape((b,) + (2,) * n), front, axes)
    return t.reshape(b, dim)


def apply_gate(state: np.ndarray, gate: GateOp) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    return apply_matrix(state[None, :], gate_unitary(gate), gate.qubits)[0]


def run_statevector(circuit: Circuit, init: np.ndarray | None = None) -> np.ndarray:
    psi = zero_state(circuit.num_qubits) if init is None else np.asarray(init, dtype=complex)
    if psi.shape != (2**circuit.num_qubits,):
        raise ValueError("initial state does not match circuit width")
    psi = psi[None, :]
    for g in circuit.gates:
        psi = apply_matrix(psi, gate_unitary(g), g.qubits)
    return psi[0]


def same_structure(circuits: Sequence[Circuit]) -> bool:
    first = circuits[0]
    sig = [(g.kind, g.qubits) for g in first.gates]
    return all(
        c.num_qubits == first.num_qubits and [(g.kind, g.qubits) for g in c.gates] == sig
        for c in circuits[1:]
    )


def run_batch(circuits: Sequence[Circuit]) -> np.ndarray:
    """Statevectors for many circuits, shape ``(len(circuits), 2**n)``.

    Circuits sharing one gate layout (e.g. a feature map bound to different
    samples) are evolved together with per-row matrices.
    """
    if not circuits:
        raise ValueError("no circuits")
    if not same_structure(circuits):
        return np.stack([run_statevector(c) for c in circuits])
    n = circuits[0].num_qubits
    psi = np.zeros((len(circuits), 2**n), dtype=complex)
    psi[:, 0] = 1.0
    for pos, g in enumerate(circuits[0].gates):
        if g.parameterized:
            mats = np.stack([gate_unitary(c.gates[pos]) for c in circuits])
        else:
            mats = gate_unitary(g)
        psi = apply_matrix(psi, mats, g.qubits)
    return psi


def partial_trace(state: np.ndarray, keep: Sequence[int] | Iterable[int]) -> np.ndarray:
    """Reduced density matrix of a pure state on ``keep``.

    ``keep[0]`` is the least significant bit of the returned matrix; pass a
    sorted sequence for the usual little-endian subsystem ordering. Sets are
    sorted.
    """
    if isinstance(keep, (set, frozenset)):
        keep = sorted(keep)
    keep = [int(q) for q in keep]
    if not keep:
        raise ValueError("keep must name at least one qubit")
    state = np.asarray(state, dtype=complex)
    n = _num_qubits_of(state.shape[0])
    if len(set(keep)) != len(keep) or any(not 0 <= q < n for q in keep):
        raise ValueError(f"invalid subsystem {keep} for {n} qubits")
    t = state.reshape((2,) * n)
    axes = [n - 1 - q for q in reversed(keep)]
    m = np.moveaxis(t, axes, list(range(len(keep)))).reshape(2 ** len(keep), -1)
    return m @ m.conj().T


def _check_density(rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("density matrix must be square")
    if np.max(np.abs(rho - rho.conj().T)) > HERMITIAN_TOL:
        raise ValueError("density matrix is not Hermitian")
    return rho


def von_neumann_entropy(rho: np.ndarray) -> float:
    """Entropy in bits, ``-sum(l * log2(l))`` with ``0 log 0 = 0``."""
    rho = _check_density(rho)
    lam = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if lam.min() < -ENTROPY_NEG_TOL:
        raise ValueError(f"density matrix has eigenvalue {lam.min():.3g} < 0")
    lam = np.clip(lam, 0.0, 1.0)
    lam = lam[lam > 0]
    s = float(-np.sum(lam * np.log2(lam)))
    return min(max(s, 0.0), float(np.log2(rho.shape[0])))


def _marginal_probs(psi: np.ndarray, qubits: Sequence[int]) -> np.ndarray:
    """Outcome probabilities over ``qubits`` (qubits[0] = low bit)."""
    n = _num_qubits_of(psi.shape[0])
    probs = np.abs(psi) ** 2
    if list(qubits) == list(range(n)):
        return probs
    t = probs.reshape((2,) * n)
    axes = [n - 1 - q for q in reversed(qubits)]
    t = np.moveaxis(t, axes, list(range(len(qubits))))
    return t.reshape(2 ** len(qubits), -1).sum(axis=1)


def _pauli_draws(rng: np.random.Generator, gates: Sequence[GateOp], shots: int, noise: NoiseSpec):
    """Per-shot Pauli error codes, shape ``(shots, len(gates))``; 0 = no error.

    With probability ``p`` a gate is followed by a uniformly random Pauli
    string on its support (identity included), i.e. a depolarizing channel.
    """
    codes = np.zeros((shots, len(gates)), dtype=np.int64)
    for j, g in enumerate(gates):
        p = noise.p1 if len(g.qubits) == 1 else noise.p2
        if p <= 0:
            continue
        hit = rng.random(shots) < p
        nhit = int(hit.sum())
        if nhit:
            codes[hit, j] = rng.integers(0, 4 ** len(g.qubits), size=nhit)
    return codes


def _pauli_string(code: int, k: int) -> np.ndarray:
    mat = np.array([[1.0 + 0j]])
    for pos in reversed(range(k)):
        mat = np.kron(mat, PAULIS[(code >> (2 * pos)) & 3])
    return mat


_BATCH_ROWS = 2048


def _noisy_distributions(circuit: Circuit, patterns: np.ndarray, qubits) -> np.ndarray:
    """Marginal outcome distribution for each distinct error pattern row."""
    out = []
    n = circuit.num_qubits
    for start in range(0, len(patterns), _BATCH_ROWS):
        block = patterns[start : start + _BATCH_ROWS]
        psi = np.zeros((len(block), 2**n), dtype=complex)
        psi[:, 0] = 1.0
        for j, g in enumerate(circuit.gates):
            psi = apply_matrix(psi, gate_unitary(g), g.qubits)
            col = block[:, j]
            if not col.any():
                continue
            k = len(g.qubits)
            mats = np.stack([_pauli_string(int(c), k) for c in col])
            psi = apply_matrix(psi, mats, g.qubits)
        for row in psi:
            out.append(_marginal_probs(row, qubits))
    return np.array(out)


def _bitstrings(outcomes: np.ndarray, width: int) -> dict[str, int]:
    vals, cnt = np.unique(outcomes, return_counts=True)
    return {format(int(v), f"0{width}b"): int(c) for v, c in zip(vals, cnt)}


def sample_counts(
    circuit: Circuit,
    shots: int,
    noise: NoiseSpec | None = None,
    rng_seed: int = 0,
    qubits: Sequence[int] | None = None,
) -> Counts:
    """Measure ``qubits`` (default: all) ``shots`` times.

    Without gate noise this is a single multinomial draw from the exact
    distribution. With gate noise, Pauli errors are drawn per shot; shots with
    identical error patterns share one simulation.
    """
    shots = int(shots)
    if shots < 1:
        raise ValueError("shots must be positive")
    n = circuit.num_qubits
    qubits = list(range(n)) if qubits is None else [int(q) for q in qubits]
    rng = np.random.default_rng(rng_seed)
    width = len(qubits)

    if noise is not None and noise.gate_noise and circuit.gates:
        codes = _pauli_draws(rng, circuit.gates, shots, noise)
        patterns, inverse = np.unique(codes, axis=0, return_inverse=True)
        dists = _noisy_distributions(circuit, patterns, qubits)
        inverse = np.asarray(inverse).reshape(-1)
        group_sizes = np.bincount(inverse, minlength=len(patterns))
        outcomes = np.empty(shots, dtype=np.int64)
        order = np.argsort(inverse, kind="stable")
        pos = 0
        for g, size in enumerate(group_sizes):
            if size == 0:
                continue
            p = np.clip(dists[g], 0, None)
            outcomes[order[pos : pos + size]] = rng.choice(p.size, size=size, p=p / p.sum())
            pos += size
    else:
        p = _marginal_probs(run_statevector(circuit), qubits)
        p = np.clip(p, 0, None)
        hist = rng.multinomial(shots, p / p.sum())
        outcomes = np.repeat(np.arange(p.size), hist)

    if noise is not None and noise.p_ro > 0:
        flips = rng.random((shots, width)) < noise.p_ro
        masks = flips.astype(np.int64) @ (1 << np.arange(width, dtype=np.int64))
        outcomes = outcomes ^ masks
    return Counts(_bitstrings(outcomes, width), shots, tuple(qubits))


def _rotation_for(basis: str, qubit: int) -> tuple[GateOp, ...]:
    if basis == "Z":
        return ()
    if basis == "X":
        return (H(qubit),)
    if basis == "Y":
        return (P(-np.pi / 2, qubit), H(qubit))
    raise ValueError(f"basis must be X, Y or Z, got {basis!r}")


def pauli_expectation(
    circuit: Circuit,
    qubit: int,
    basis: str,
    shots: int | None = None,
    noise: NoiseSpec | None = None,
    rng_seed: int = 0,
) -> float:
    rotation = _rotation_for(basis, qubit)
    if not 0 <= qubit < circuit.num_qubits:
        raise ValueError(f"qubit {qubit} out of range")
    if shots is None:
        rho = partial_trace(run_statevector(circuit), [qubit])
        op = {"X": X_MAT, "Y": Y_MAT, "Z": Z_MAT}[basis]
        return float(np.clip(np.real(np.trace(rho @ op)), -1.0, 1.0))
    counts = sample_counts(circuit.append(*rotation), shots, noise, rng_seed, qubits=[qubit])
    return (counts["0"] - counts["1"]) / counts.shots


def bloch_density(x: float, y: float, z: float) -> np.ndarray:
    """``(I + xX + yY + zZ) / 2`` with the vector rescaled onto the ball."""
    r = np.array([x, y, z], dtype=float)
    norm = np.linalg.norm(r)
    if norm > 1.0:
        r = r / norm
    return 0.5 * (I_MAT + r[0] * X_MAT + r[1] * Y_MAT + r[2] * Z_MAT)


def fidelity_with_zero(state: np.ndarray) -> float:
    return float(abs(state[0]) ** 2)
