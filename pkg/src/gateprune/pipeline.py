"""Threshold scan: prune by GSI, score each pruned map, rank, test the winners."""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .featuremap import BoundCircuit, FeatureMapSpec, active_qubits, build_zz_map, masked_builder, prune
from .gsi import GateMetrics, HardwareEstimatorConfig, SensitivityConfig, gsi_exact, gsi_hardware, gsi_range
from .qml import EvalResult, KernelMode, fit_and_score
from .simcore import NoiseSpec, derive_seed


class ScanError(RuntimeError):
    """The data or metrics admit no valid scan."""


STOP = None

BENCH_CONFIGS = {
    "S1": ("linear", 1),
    "S2": ("linear", 3),
    "S3": ("full", 1),
}


@dataclass(frozen=True)
class DatasetSplit:
    X_train: np.ndarray
    y_train: np.ndarray
    X_val: np.ndarray
    y_val: np.ndarray
    X_test: np.ndarray
    y_test: np.ndarray
    seed: int
    indices: tuple[np.ndarray, np.ndarray, np.ndarray] = field(repr=False, default=None)


def map_labels(labels) -> np.ndarray:
    """Map two distinct label values onto -1/+1 by sorted order (-1/+1 pass through)."""
    labels = np.asarray(labels)
    values = np.unique(labels)
    if values.size > 2:
        raise ValueError(f"expected binary labels, found {values.size} distinct values")
    if set(values.tolist()) <= {-1, 1}:
        return labels.astype(int)
    signs = np.array([-1, 1])[: values.size]
    return signs[np.searchsorted(values, labels)]


def split_dataset(features, labels, seed: int = 0) -> DatasetSplit:
    """Seeded 60/20/20 split: floor(0.6m) train, round(0.2m) validation, rest test.

    Rounding the validation share keeps every part within one sample of its
    nominal size (163 rows -> 97/33/33).
    """
    X = np.asarray(features, float)
    y = map_labels(labels)
    m = len(X)
    if m < 5:
        raise ScanError(f"need at least 5 samples, got {m}")
    if len(y) != m:
        raise ValueError("features and labels differ in length")
    perm = np.random.default_rng(seed).permutation(m)
    n_tr, n_va = math.floor(0.6 * m), math.floor(0.2 * m + 0.5)
    tr, va, te = perm[:n_tr], perm[n_tr : n_tr + n_va], perm[n_tr + n_va :]
    return DatasetSplit(X[tr], y[tr], X[va], y[va], X[te], y[te], seed, (tr, va, te))


def threshold_grid(gsi_l: float, gsi_u: float, step: float) -> list[float]:
    """``gsi_l, gsi_l + step, ...`` strictly below ``gsi_u``; ``[gsi_l]`` if the range is empty."""
    if not step > 0:
        raise ValueError("step must be positive")
    if gsi_l > gsi_u:
        raise ValueError("lower bound above upper bound")
    grid = [gsi_l]
    k = 1
    while True:
        t = gsi_l + k * step
        if t >= gsi_u - 1e-12:
            break
        grid.append(t)
        k += 1
    return grid


def generate_candidate(baseline: BoundCircuit, metrics: Sequence[GateMetrics], threshold: float):
    """Keep-mask for ``GSI >= threshold``, or ``STOP`` if any qubit would be left idle."""
    if len(metrics) != len(baseline) or any(m.position != i for i, m in enumerate(metrics)):
        raise ValueError("metrics are not aligned with the circuit gates")
    mask = np.array([m.GSI >= threshold for m in metrics], dtype=bool)
    if active_qubits(prune(baseline, mask)) != set(range(baseline.num_qubits)):
        return STOP
    return mask


def balanced_score(A_b: float, T_b: float, A_n: float, T_n: float) -> float:
    if T_b == 0:
        raise ValueError("baseline time must be nonzero")
    return (A_n - A_b) + (T_b - T_n) / T_b


@dataclass
class CandidateModel:
    threshold: float
    mask: np.ndarray
    result: EvalResult
    B: float = 0.0
    ranks: tuple[int, int, int] | None = None
    meets_floor: bool = True
    is_baseline: bool = False

    @property
    def kept(self) -> int:
        return int(np.count_nonzero(self.mask))

    @property
    def accuracy(self) -> float:
        return self.result.accuracy

    @property
    def time(self) -> float:
        return self.result.time

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "kept_gates": self.kept,
            "mask": [bool(b) for b in self.mask],
            "validation": self.result.to_dict(),
            "B": self.B,
            "ranks": None if self.ranks is None else dict(zip(("R_A", "R_T", "R_B"), self.ranks)),
            "meets_accuracy_floor": self.meets_floor,
            "is_baseline": self.is_baseline,
        }


def accuracy_floor(A_b: float, tolerance: float, rule: str = "relative_drop") -> float:
    """Minimum accuracy for the time ranking.

    ``relative_drop``: at most ``tolerance`` relative loss, ``(1 - tol) * A_b``.
    ``fraction``: the literal reading, ``tol * A_b``.
    """
    if rule == "relative_drop":
        return (1.0 - tolerance) * A_b
    if rule == "fraction":
        return tolerance * A_b
    raise ValueError(f"unknown time rule {rule!r}")


def _ranks(order: list[int], k: int) -> list[int]:
    r = [0] * k
    for rank, idx in enumerate(order, start=1):
        r[idx] = rank
    return r


def rank_candidates(
    candidates: Sequence[CandidateModel],
    A_b: float,
    tolerance: float = 0.15,
    rule: str = "relative_drop",
) -> list[CandidateModel]:
    """Attach (R_A, R_T, R_B). Ties go to the lower threshold, then the earlier entry."""
    if not candidates:
        raise ValueError("no candidates to rank")
    floor = accuracy_floor(A_b, tolerance, rule)
    k = len(candidates)
    idx = range(k)
    c = candidates
    by_a = sorted(idx, key=lambda i: (-c[i].accuracy, c[i].threshold, i))
    by_b = sorted(idx, key=lambda i: (-c[i].B, c[i].threshold, i))
    by_t = sorted(idx, key=lambda i: (c[i].accuracy < floor, c[i].time, c[i].threshold, i))
    ra, rt, rb = _ranks(by_a, k), _ranks(by_t, k), _ranks(by_b, k)
    return [
        replace(cand, ranks=(ra[i], rt[i], rb[i]), meets_floor=cand.accuracy >= floor)
        for i, cand in enumerate(c)
    ]


Evaluator = Callable[[np.ndarray], EvalResult]


@dataclass
class ScanOutcome:
    grid: list[float]
    baseline: CandidateModel
    candidates: list[CandidateModel]
    stopped_at: float | None


def threshold_scan(
    baseline: BoundCircuit,
    metrics: Sequence[GateMetrics],
    step: float,
    evaluator: Evaluator,
    tolerance: float = 0.15,
    rule: str = "relative_drop",
    workers: int = 1,
) -> ScanOutcome:
    """Walk the grid, build candidates until the stop rule fires, evaluate and rank.

    The first grid point keeps every gate and is the baseline. Later points
    whose mask repeats an earlier one are skipped.
    """
    lo, hi = gsi_range(metrics)
    grid = threshold_grid(lo, hi, step)
    masks: list[tuple[float, np.ndarray]] = []
    stopped_at = None
    seen = set()
    for t in grid:
        mask = generate_candidate(baseline, metrics, t)
        if mask is STOP:
            stopped_at = t
            break
        key = mask.tobytes()
        if key in seen:
            continue
        seen.add(key)
        masks.append((t, mask))
    if not masks:
        raise ScanError(f"every threshold in [{lo:.6g}, {hi:.6g}) leaves a qubit idle")

    t0, m0 = masks[0]
    base_res = evaluator(m0)
    base = CandidateModel(t0, m0, base_res, 0.0, is_baseline=True)
    A_b, T_b = base_res.accuracy, base_res.time

    rest = masks[1:]
    if workers > 1 and len(rest) > 1:
        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(lambda tm: evaluator(tm[1]), rest))
    else:
        results = [evaluator(m) for _, m in rest]
    cands = [
        CandidateModel(t, m, r, balanced_score(A_b, T_b, r.accuracy, r.time))
        for (t, m), r in zip(rest, results)
    ]
    if not cands:
        # nothing to prune: the baseline is the only model
        cands = [replace(base)]
    ranked = rank_candidates(cands, A_b, tolerance, rule)
    base.ranks = None
    return ScanOutcome(grid, base, ranked, stopped_at)


@dataclass(frozen=True)
class ScanConfig:
    entanglement: str = "linear"
    reps: int = 1
    engine: str = "exact"
    shots: int = 10_000
    noise: NoiseSpec | None = None
    seed: int = 0
    split_seed: int | None = None
    step: float = 0.02
    C: float = 5000.0
    num_steps: int = 500
    tolerance: float = 0.15
    time_rule: str = "relative_drop"
    delta: float = 0.1
    ent_qubit: int | None = None
    bind: str | int = "mean"
    kernel_shots: int | None = None
    timing: str = "wall"
    workers: int = 1

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("step must be positive")
        if not 0.0 <= self.tolerance <= 1.0:
            raise ValueError("tolerance must be in [0, 1]")
        if self.engine not in ("exact", "hardware"):
            raise ValueError(f"engine must be 'exact' or 'hardware', got {self.engine!r}")
        if self.timing not in ("wall", "cost"):
            raise ValueError(f"timing must be 'wall' or 'cost', got {self.timing!r}")
        if self.shots < 1:
            raise ValueError("shots must be positive")
        accuracy_floor(1.0, self.tolerance, self.time_rule)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["noise"] = None if self.noise is None else asdict(self.noise)
        return d


def compute_gsi(bound: BoundCircuit, cfg: ScanConfig) -> list[GateMetrics]:
    if cfg.engine == "exact":
        return gsi_exact(bound, cfg.ent_qubit, SensitivityConfig(cfg.delta))
    hw = HardwareEstimatorConfig(
        shots=cfg.shots,
        qubit=cfg.ent_qubit,
        delta=cfg.delta,
        noise=cfg.noise,
        seed=derive_seed(cfg.seed, 2),
        workers=cfg.workers,
    )
    return gsi_hardware(bound, hw)


def binding_vector(X_train: np.ndarray, bind: str | int) -> np.ndarray:
    if bind == "mean":
        return X_train.mean(axis=0)
    return X_train[int(bind)]


@dataclass
class ScanReport:
    config: dict
    baseline: CandidateModel
    gsi_table: list[GateMetrics]
    grid: list[float]
    candidates: list[CandidateModel]
    selections: dict[str, float]
    test_results: dict[str, dict]
    baseline_gates: int
    stopped_at: float | None = None

    def selected(self, key: str) -> CandidateModel:
        t = self.selections[key]
        return next(c for c in self.candidates if c.threshold == t)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "baseline": {
                "threshold": self.baseline.threshold,
                "kept_gates": self.baseline.kept,
                "validation": self.baseline.result.to_dict(),
            },
            "gsi_table": [asdict(m) for m in self.gsi_table],
            "grid": list(self.grid),
            "stopped_at": self.stopped_at,
            "candidates": [c.to_dict() for c in self.candidates],
            "selections": dict(self.selections),
            "test_results": self.test_results,
        }


def _timed_fit(builder, cfg: ScanConfig, kept: int, Xtr, ytr, Xev, yev, mode, clock):
    _, res = fit_and_score(
        builder, Xtr, ytr, Xev, yev, cfg.C, cfg.num_steps, derive_seed(cfg.seed, 1), mode, clock
    )
    if cfg.timing == "cost":
        # deterministic proxy: gate applications spent building both kernels
        res = replace(res, time=float(kept * (len(Xtr) + len(Xev))))
    return res


def run_scan(
    features,
    labels,
    cfg: ScanConfig = ScanConfig(),
    clock: Callable[[], float] = time.perf_counter,
    metrics: Sequence[GateMetrics] | None = None,
) -> ScanReport:
    """End-to-end scan. ``metrics`` may be supplied to skip the GSI step."""
    split = split_dataset(features, labels, cfg.seed if cfg.split_seed is None else cfg.split_seed)
    n = split.X_train.shape[1]
    fmap = FeatureMapSpec(n, cfg.entanglement, cfg.reps)
    mode = KernelMode(cfg.kernel_shots, derive_seed(cfg.seed, 3), cfg.noise) if cfg.kernel_shots else KernelMode()
    bound = build_zz_map(fmap, binding_vector(split.X_train, cfg.bind))
    if metrics is None:
        metrics = compute_gsi(bound, cfg)

    def validate(mask):
        return _timed_fit(
            masked_builder(fmap, mask), cfg, int(mask.sum()),
            split.X_train, split.y_train, split.X_val, split.y_val, mode, clock,
        )

    outcome = threshold_scan(bound, metrics, cfg.step, validate, cfg.tolerance, cfg.time_rule, cfg.workers)

    selections = {}
    for key, r in (("best_A", 0), ("best_T", 1), ("best_B", 2)):
        selections[key] = next(c.threshold for c in outcome.candidates if c.ranks[r] == 1)

    tested: dict[float, dict] = {}

    def test(mask, t):
        if t not in tested:
            res = _timed_fit(
                masked_builder(fmap, mask), cfg, int(mask.sum()),
                split.X_train, split.y_train, split.X_test, split.y_test, mode, clock,
            )
            tested[t] = {"threshold": t, "kept_gates": int(mask.sum()), **res.to_dict()}
        return tested[t]

    test_results = {"baseline": test(outcome.baseline.mask, outcome.baseline.threshold)}
    for key, t in selections.items():
        cand = next(c for c in outcome.candidates if c.threshold == t)
        test_results[key] = test(cand.mask, t)

    return ScanReport(
        config=cfg.to_dict(),
        baseline=outcome.baseline,
        gsi_table=list(metrics),
        grid=outcome.grid,
        candidates=outcome.candidates,
        selections=selections,
        test_results=test_results,
        baseline_gates=len(bound),
        stopped_at=outcome.stopped_at,
    )


def bench_scalability(
    configs: Sequence[str] = ("S1", "S2", "S3"),
    qubits: Sequence[int] = (4, 6, 8, 10),
    engine: str = "exact",
    max_qubits: int = 16,
    hardware: HardwareEstimatorConfig | None = None,
    seed: int = 0,
    clock: Callable[[], float] = time.perf_counter,
) -> list[dict]:
    """Gate count and wall time of one GSI computation per (configuration, width)."""
    if engine == "exact" and max(qubits) > max_qubits:
        raise MemoryError(f"exact engine capped at {max_qubits} qubits, asked for {max(qubits)}")
    rows = []
    for name in configs:
        ent, reps = BENCH_CONFIGS[name]
        for n in qubits:
            x = np.random.default_rng(derive_seed(seed, n)).random(n)
            bound = build_zz_map(FeatureMapSpec(n, ent, reps), x)
            t0 = clock()
            if engine == "exact":
                gsi_exact(bound)
            else:
                gsi_hardware(bound, hardware or HardwareEstimatorConfig(seed=seed))
            rows.append(
                {
                    "config": name,
                    "entanglement": ent,
                    "reps": reps,
                    "qubits": n,
                    "gates": len(bound),
                    "engine": engine,
                    "seconds": clock() - t0,
                }
            )
    return rows


def rows_to_csv(rows: Sequence[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


CANDIDATE_COLUMNS = ("threshold", "kept_gates", "accuracy", "time", "B", "meets_accuracy_floor", "is_baseline")
RANKING_COLUMNS = ("threshold", "kept_gates", "R_A", "R_T", "R_B")


def candidate_rows(report: ScanReport) -> list[dict]:
    rows = [
        {
            "threshold": report.baseline.threshold,
            "kept_gates": report.baseline.kept,
            "accuracy": report.baseline.accuracy,
            "time": report.baseline.time,
            "B": 0.0,
            "meets_accuracy_floor": True,
            "is_baseline": True,
        }
    ]
    for c in report.candidates:
        if c.is_baseline:
            continue
        rows.append(
            {
                "threshold": c.threshold,
                "kept_gates": c.kept,
                "accuracy": c.accuracy,
                "time": c.time,
                "B": c.B,
                "meets_accuracy_floor": c.meets_floor,
                "is_baseline": False,
            }
        )
    return rows


def ranking_rows(report: ScanReport) -> list[dict]:
    return [
        {"threshold": c.threshold, "kept_gates": c.kept, "R_A": c.ranks[0], "R_T": c.ranks[1], "R_B": c.ranks[2]}
        for c in report.candidates
    ]
