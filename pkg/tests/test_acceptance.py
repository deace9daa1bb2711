"""Numbered acceptance criteria. Each prints one PASS/FAIL line in the terminal summary."""

import json
import time

import numpy as np
import pytest

from gateprune.cli import EXIT_OK, main
from gateprune.data import fixture_path, ingest_csv
from gateprune.featuremap import FeatureMapSpec, build_zz_map, masked_builder, prune
from gateprune.gsi import (
    GateMetrics,
    HardwareEstimatorConfig,
    SensitivityConfig,
    gsi_exact,
    gsi_hardware,
    sensitivity_exact,
)
from gateprune.pipeline import (
    STOP,
    balanced_score,
    bench_scalability,
    generate_candidate,
    split_dataset,
    threshold_grid,
    threshold_scan,
)
from gateprune.qml import EvalResult, fit_and_score
from gateprune.simcore import CNOT, Circuit, H, P
from scenarios import BREASTW_AT, BREASTW_RANKS, breastw_scenario, strip_times, stub_evaluator

acceptance = pytest.mark.acceptance


@acceptance(1, "GSI components and score stay in [0,1] over 1000 random circuits, < 60 s")
def test_gsi_bounds():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    checked = 0
    for k in range(1000):
        n = int(rng.integers(2, 9))
        ent = ("linear", "full")[k % 2]
        reps = int(rng.integers(1, 4))
        bound = build_zz_map(FeatureMapSpec(n, ent, reps), rng.random(n))
        for m in gsi_exact(bound):
            for v in (m.F, m.E, m.P, m.GSI):
                assert 0.0 <= v <= 1.0
            assert m.GSI == (m.F + m.E + (1 - m.P)) / 3
            checked += 1
    elapsed = time.perf_counter() - t0
    assert checked > 0
    assert elapsed < 60, f"{elapsed:.1f} s"


@acceptance(2, "noiseless hardware estimator matches exact within 5e-3 at 1e6 shots, < 5 min")
def test_estimator_consistency():
    bound = build_zz_map(FeatureMapSpec(4, "linear", 1), np.random.default_rng(0).random(4))
    assert len(bound) == 17
    t0 = time.perf_counter()
    exact = gsi_exact(bound)
    hw = gsi_hardware(bound, HardwareEstimatorConfig(shots=1_000_000, seed=0))
    elapsed = time.perf_counter() - t0
    worst = max(abs(getattr(a, f) - getattr(b, f)) for a, b in zip(exact, hw) for f in ("F", "E", "P"))
    assert worst <= 5e-3, f"max deviation {worst:.2e}"
    assert elapsed < 300


@acceptance(3, "analytic spot checks: H fidelity, Bell entropy, phase sensitivity on |+>")
def test_analytic():
    first = gsi_exact(Circuit(2, (H(0), CNOT(0, 1))), ent_qubit=1)
    assert abs(first[0].F - 0.5) <= 1e-12
    assert abs(first[1].E - 1.0) <= 1e-10
    plus = np.full((2, 2), 0.5, dtype=complex)
    # hand evaluation: overlaps {1, cos^2(d/2), cos^2(d/2)} with d = 0.1
    f = np.cos(0.05) ** 2
    oracle = float(np.std([1.0, f, f]))
    assert abs(oracle - 1.178e-3) <= 1e-6
    got = sensitivity_exact(plus, P(1.3, 0), SensitivityConfig(0.1))
    assert abs(got - oracle) <= 1e-6


@acceptance(4, "gate census: 42 gates, 42 -> 32 after a 10-gate prune, 47/141/155 at n=10")
def test_census():
    bound = build_zz_map(FeatureMapSpec(9, "linear", 1), np.random.default_rng(1).random(9))
    assert len(bound) == 42
    mask = np.ones(42, bool)
    mask[np.random.default_rng(2).choice(42, 10, replace=False)] = False
    assert len(prune(bound, mask)) == 32
    counts = [len(build_zz_map(FeatureMapSpec(10, e, r), np.zeros(10))) for e, r in (("linear", 1), ("linear", 3), ("full", 1))]
    assert counts == [47, 141, 155]


@acceptance(5, "BreastW cutoffs 0.518..0.578 with reference (A, T) give ranks 2-2-3 / 1-1-1 / 3-3-2")
def test_breastw_ranks():
    bound, metrics, grid = breastw_scenario()
    assert grid == pytest.approx([0.518, 0.538, 0.558, 0.578], abs=1e-12)
    out = threshold_scan(bound, metrics, 0.02, stub_evaluator(BREASTW_AT))
    assert out.baseline.kept == 42
    assert [c.kept for c in out.candidates] == [33, 29, 28]
    assert [c.ranks for c in out.candidates] == BREASTW_RANKS


def _idle_oracle(bound, values, t):
    """True if some qubit has no gate with GSI >= t (computed from gate supports directly)."""
    alive = set()
    for g, v in zip(bound.gates, values):
        if v >= t:
            alive.update(g.qubits)
    return len(alive) < bound.num_qubits


@acceptance(6, "stop rule fires exactly where a qubit goes idle, 200 random instances")
def test_stop_property():
    for inst in range(200):
        rng = np.random.default_rng(10_000 + inst)
        n = int(rng.integers(2, 7))
        spec = FeatureMapSpec(n, ("linear", "full")[inst % 2], int(rng.integers(1, 3)))
        bound = build_zz_map(spec, rng.random(n))
        victim = int(rng.integers(n))
        cap = float(rng.uniform(0.35, 0.8))
        values = rng.uniform(0.3, 1.0, len(bound))
        touches = np.array([victim in g.qubits for g in bound.gates])
        values[touches] = rng.uniform(0.3, cap, touches.sum())
        values[np.flatnonzero(~touches)[0]] = 1.0
        metrics = [GateMetrics(g.kind, i, 1.0, 0.0, 0.0, float(v)) for i, (g, v) in enumerate(zip(bound.gates, values))]
        step = float(rng.uniform(0.01, 0.08))
        grid = threshold_grid(values.min(), values.max(), step)
        t_star = next(t for t in grid if _idle_oracle(bound, values, t))
        for t in grid:
            mask = generate_candidate(bound, metrics, t)
            if t < t_star:
                assert mask is not STOP
                assert not _idle_oracle(bound, values, t)
            elif t == t_star:
                assert mask is STOP
                break
        out = threshold_scan(bound, metrics, step, lambda m: EvalResult(0.5, 1.0 + m.sum(), 0, 0, 0, 0))
        assert out.stopped_at == t_star
        for c in [out.baseline, *out.candidates]:
            kept_values = np.where(c.mask, values, -1.0)
            assert not _idle_oracle(bound, kept_values, 0.0)


@acceptance(7, "Pegasos (C=5000, 500 steps) reaches >= 0.9 test accuracy on the separable fixture, 5 seeds, < 2 min")
def test_classifier_sanity():
    X, y = ingest_csv(fixture_path("separable"))
    builder = masked_builder(FeatureMapSpec(X.shape[1], "linear", 1))
    t0 = time.perf_counter()
    accs = []
    for seed in range(5):
        s = split_dataset(X, y, seed)
        _, res = fit_and_score(builder, s.X_train, s.y_train, s.X_test, s.y_test, C=5000, num_steps=500, seed=seed)
        accs.append(res.accuracy)
    assert min(accs) >= 0.9, accs
    assert time.perf_counter() - t0 < 120


@acceptance(8, "scan twice with the same seeds gives identical report.json modulo time; kept gates non-increasing")
def test_end_to_end_determinism(tmp_path):
    docs = []
    for d in ("a", "b"):
        assert main(["scan", "--dataset", "fixture:separable", "--seed", "3", "--out", str(tmp_path / d), "--serial"]) == EXIT_OK
        docs.append(json.loads((tmp_path / d / "report.json").read_text()))
    assert strip_times(docs[0]) == strip_times(docs[1])
    kept = [docs[0]["baseline"]["kept_gates"]] + [c["kept_gates"] for c in docs[0]["candidates"]]
    assert all(a >= b for a, b in zip(kept, kept[1:]))
    thresholds = [docs[0]["baseline"]["threshold"]] + [c["threshold"] for c in docs[0]["candidates"]]
    assert thresholds == sorted(thresholds)


@acceptance(9, "balanced score reproduces B = 0.4465 from the Flare row")
def test_balanced_score():
    # independent arithmetic: 0.254 + 41/213
    assert abs((0.845 - 0.591) + 41 / 213 - 0.4465) <= 5e-4
    assert abs(balanced_score(0.591, 213, 0.845, 172) - 0.4465) <= 5e-4


@acceptance(10, "bench S1 over n = 4, 6, 8, 10 under 2 min with increasing gate counts")
def test_bench_smoke():
    t0 = time.perf_counter()
    rows = bench_scalability(("S1",), (4, 6, 8, 10), engine="exact")
    assert time.perf_counter() - t0 < 120
    gates = [r["gates"] for r in rows]
    assert gates == [17, 27, 37, 47]
    assert all(a < b for a, b in zip(gates, gates[1:]))
