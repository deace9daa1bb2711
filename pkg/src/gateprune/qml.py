"""Fidelity kernel and kernelized Pegasos SVM."""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .simcore import Circuit, NoiseSpec, dagger, derive_seed, run_batch, run_statevector, sample_counts

Builder = Callable[[Sequence[float]], Circuit]


@dataclass(frozen=True)
class KernelMode:
    """``shots=None`` is exact statevector overlap; otherwise sampled overlap circuits."""

    shots: int | None = None
    seed: int = 0
    noise: NoiseSpec | None = None

    @property
    def exact(self) -> bool:
        return self.shots is None


EXACT = KernelMode()


def _check_pair(x1, x2):
    x1, x2 = np.asarray(x1, float), np.asarray(x2, float)
    if x1.shape != x2.shape:
        raise ValueError(f"feature dimension mismatch: {x1.shape} vs {x2.shape}")
    return x1, x2


def _sampled_overlap(builder: Builder, x1, x2, mode: KernelMode, seed: int) -> float:
    c = builder(x2) + dagger(builder(x1))
    counts = sample_counts(c, mode.shots, mode.noise, seed)
    return counts.probability("0" * c.num_qubits)


def kernel_entry(builder: Builder, x1, x2, mode: KernelMode = EXACT) -> float:
    x1, x2 = _check_pair(x1, x2)
    if mode.exact:
        a, b = run_statevector(builder(x1)), run_statevector(builder(x2))
        return float(min(abs(np.vdot(a, b)) ** 2, 1.0))
    return _sampled_overlap(builder, x1, x2, mode, mode.seed)


def statevectors(builder: Builder, X) -> np.ndarray:
    return run_batch([builder(x) for x in np.asarray(X, float)])


def kernel_matrix(builder: Builder, XA, XB=None, mode: KernelMode = EXACT, workers: int = 1) -> np.ndarray:
    """Kernel values ``K[a, b] = k(XA[a], XB[b])``; ``XB=None`` gives the square Gram matrix."""
    XA = np.asarray(XA, float)
    square = XB is None
    XB = XA if square else np.asarray(XB, float)
    if XA.shape[1:] != XB.shape[1:]:
        raise ValueError("feature dimension mismatch")
    if mode.exact:
        SA = statevectors(builder, XA)
        SB = SA if square else statevectors(builder, XB)
        K = np.abs(SA.conj() @ SB.T) ** 2
        K = np.minimum(K, 1.0)
        if square:
            K = 0.5 * (K + K.T)
            np.fill_diagonal(K, 1.0)
        return K

    if square:
        idx = [(a, b) for a in range(len(XA)) for b in range(a, len(XA))]
    else:
        idx = [(a, b) for a in range(len(XA)) for b in range(len(XB))]

    def entry(ab):
        a, b = ab
        return _sampled_overlap(builder, XA[a], XB[b], mode, derive_seed(mode.seed, a, b, int(square)))

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            vals = list(ex.map(entry, idx))
    else:
        vals = [entry(ab) for ab in idx]
    K = np.empty((len(XA), len(XB)))
    for (a, b), v in zip(idx, vals):
        K[a, b] = v
        if square:
            K[b, a] = v
    return K


@dataclass
class PegasosModel:
    alphas: np.ndarray
    labels: np.ndarray
    lam: float
    num_steps: int

    def decision(self, K_eval: np.ndarray) -> np.ndarray:
        K_eval = np.asarray(K_eval, float)
        if K_eval.ndim != 2 or K_eval.shape[0] != self.alphas.size:
            raise ValueError(
                f"kernel rows {K_eval.shape[0] if K_eval.ndim == 2 else '?'} != training size {self.alphas.size}"
            )
        return (self.alphas * self.labels) @ K_eval


def _binary_labels(y) -> np.ndarray:
    y = np.asarray(y)
    if y.size and not np.all(np.isin(y, (-1, 1))):
        raise ValueError("labels must be -1 or +1")
    return y.astype(int)


def train_pegasos(K: np.ndarray, labels, C: float = 5000.0, num_steps: int = 500, seed: int = 0) -> PegasosModel:
    """Kernelized Pegasos with ``lambda = 1/(C m)``.

    At step t a uniform index i is drawn; if ``y_i / (lambda t) * sum_j a_j y_j K_ji < 1``
    the coefficient ``a_i`` is incremented.
    """
    y = _binary_labels(labels)
    m = y.size
    if m == 0:
        raise ValueError("empty training set")
    K = np.asarray(K, float)
    if K.shape != (m, m):
        raise ValueError(f"kernel shape {K.shape} does not match {m} labels")
    lam = 1.0 / (C * m)
    rng = np.random.default_rng(seed)
    alphas = np.zeros(m, dtype=np.int64)
    picks = rng.integers(0, m, size=num_steps)
    weighted = np.zeros(m)  # sum_j a_j y_j K[j, :], kept incrementally
    for t, i in enumerate(picks, start=1):
        if y[i] * weighted[i] / (lam * t) < 1:
            alphas[i] += 1
            weighted += y[i] * K[i]
    return PegasosModel(alphas, y, lam, num_steps)


def predict(model: PegasosModel, K_eval: np.ndarray) -> np.ndarray:
    """Labels for the columns of ``K_eval`` (train x eval); a zero decision maps to +1."""
    d = model.decision(K_eval)
    return np.where(d < 0, -1, 1)


@dataclass(frozen=True)
class EvalResult:
    accuracy: float
    time: float
    tp: int
    tn: int
    fp: int
    fn: int

    @classmethod
    def from_predictions(cls, y_true, y_pred, elapsed: float = 0.0) -> "EvalResult":
        y_true = _binary_labels(y_true)
        y_pred = _binary_labels(y_pred)
        tp = int(np.sum((y_pred == 1) & (y_true == 1)))
        tn = int(np.sum((y_pred == -1) & (y_true == -1)))
        fp = int(np.sum((y_pred == 1) & (y_true == -1)))
        fn = int(np.sum((y_pred == -1) & (y_true == 1)))
        return cls(accuracy_from_counts(tp, tn, fp, fn), float(elapsed), tp, tn, fp, fn)

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "time": self.time,
            "tp": self.tp,
            "tn": self.tn,
            "fp": self.fp,
            "fn": self.fn,
        }


def accuracy_from_counts(tp: int, tn: int, fp: int, fn: int) -> float:
    total = tp + tn + fp + fn
    return (tp + tn) / total if total else 0.0


def evaluate(model: PegasosModel, K_eval, true_labels, timer: Callable[[], float] | float = 0.0) -> EvalResult:
    """Score predictions; ``timer`` is either the elapsed time or a callable returning it."""
    pred = predict(model, K_eval)
    elapsed = timer() if callable(timer) else timer
    return EvalResult.from_predictions(true_labels, pred, elapsed)


def fit_and_score(
    builder: Builder,
    X_train,
    y_train,
    X_eval,
    y_eval,
    C: float = 5000.0,
    num_steps: int = 500,
    seed: int = 0,
    mode: KernelMode = EXACT,
    clock: Callable[[], float] = time.perf_counter,
    workers: int = 1,
) -> tuple[PegasosModel, EvalResult]:
    """Kernel build + training + prediction for one circuit, timed as a single unit."""
    t0 = clock()
    K = kernel_matrix(builder, X_train, mode=mode, workers=workers)
    model = train_pegasos(K, y_train, C, num_steps, seed)
    K_eval = kernel_matrix(builder, X_train, X_eval, mode=mode, workers=workers)
    result = evaluate(model, K_eval, y_eval, lambda: clock() - t0)
    return model, result
