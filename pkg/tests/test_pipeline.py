import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gateprune.data import fixture_path, ingest_csv
from gateprune.featuremap import FeatureMapSpec, build_zz_map
from gateprune.gsi import GateMetrics
from gateprune.pipeline import (
    STOP,
    CandidateModel,
    ScanConfig,
    ScanError,
    accuracy_floor,
    balanced_score,
    bench_scalability,
    candidate_rows,
    generate_candidate,
    map_labels,
    rank_candidates,
    ranking_rows,
    run_scan,
    split_dataset,
    threshold_grid,
    threshold_scan,
)
from gateprune.qml import EvalResult
from scenarios import BREASTW_AT, BREASTW_RANKS, breastw_scenario, stub_evaluator


def cand(t, acc, time, A_b=0.8, T_b=100.0):
    return CandidateModel(t, np.ones(3, bool), EvalResult(acc, time, 0, 0, 0, 0), balanced_score(A_b, T_b, acc, time))


def metrics_from(values, bound):
    return [GateMetrics(g.kind, i, 1.0, 0.0, 0.0, float(v)) for i, (g, v) in enumerate(zip(bound.gates, values))]


class TestSplit:
    @pytest.mark.parametrize("m, sizes", [(100, (60, 20, 20)), (163, (97, 33, 33)), (5, (3, 1, 1)), (7, (4, 1, 2))])
    def test_sizes(self, m, sizes):
        s = split_dataset(np.random.default_rng(0).random((m, 2)), np.arange(m) % 2, seed=1)
        assert (len(s.X_train), len(s.X_val), len(s.X_test)) == sizes

    @given(st.integers(5, 2000))
    def test_partition_and_balance(self, m):
        s = split_dataset(np.zeros((m, 1)), np.arange(m) % 2, seed=3)
        tr, va, te = s.indices
        assert sorted(np.concatenate(s.indices).tolist()) == list(range(m))
        assert len(tr) == int(0.6 * m) or len(tr) == np.floor(0.6 * m)
        assert abs(len(va) - 0.2 * m) <= 1 and abs(len(te) - 0.2 * m) <= 1

    def test_seeded(self):
        X, y = np.arange(40.0)[:, None], np.arange(40) % 2
        a, b, c = split_dataset(X, y, 4), split_dataset(X, y, 4), split_dataset(X, y, 5)
        assert np.array_equal(a.X_train, b.X_train)
        assert not np.array_equal(a.X_train, c.X_train)

    def test_too_small(self):
        with pytest.raises(ScanError):
            split_dataset(np.zeros((4, 2)), [0, 1, 0, 1])

    def test_labels(self):
        assert map_labels(["b", "a", "b"]).tolist() == [1, -1, 1]
        assert map_labels([-1, 1, 1]).tolist() == [-1, 1, 1]
        assert map_labels([2, 4]).tolist() == [-1, 1]
        with pytest.raises(ValueError):
            map_labels([0, 1, 2])


class TestGrid:
    def test_examples(self):
        assert threshold_grid(0.5, 0.6, 0.02) == pytest.approx([0.5, 0.52, 0.54, 0.56, 0.58])
        assert threshold_grid(0.518, 0.59, 0.02) == pytest.approx([0.518, 0.538, 0.558, 0.578])
        assert threshold_grid(0.4, 0.4, 0.02) == [0.4]
        assert threshold_grid(0.4, 0.41, 0.02) == [0.4]

    @given(st.floats(0, 1), st.floats(0, 1), st.floats(0.001, 0.5))
    def test_properties(self, a, b, step):
        lo, hi = min(a, b), max(a, b)
        g = threshold_grid(lo, hi, step)
        assert g[0] == lo
        assert all(t < hi or t == lo for t in g)
        assert np.all(np.diff(g) > 0)

    def test_invalid(self):
        with pytest.raises(ValueError):
            threshold_grid(0.1, 0.2, 0)
        with pytest.raises(ValueError):
            threshold_grid(0.3, 0.2, 0.01)


class TestCandidate:
    def setup_method(self):
        self.bound = build_zz_map(FeatureMapSpec(3), [0.2, 0.4, 0.6])
        self.n = len(self.bound)

    def test_keep_all_at_minimum(self):
        vals = np.linspace(0.3, 0.7, self.n)
        assert generate_candidate(self.bound, metrics_from(vals, self.bound), 0.3).all()

    def test_stop_when_qubit_idle(self):
        vals = np.full(self.n, 0.7)
        for i, g in enumerate(self.bound.gates):
            if 2 in g.qubits:
                vals[i] = 0.4
        m = metrics_from(vals, self.bound)
        assert generate_candidate(self.bound, m, 0.4) is not STOP
        assert generate_candidate(self.bound, m, 0.5) is STOP

    def test_misaligned(self):
        m = metrics_from(np.ones(self.n), self.bound)
        with pytest.raises(ValueError):
            generate_candidate(self.bound, m[:-1], 0.5)
        with pytest.raises(ValueError):
            generate_candidate(self.bound, m[::-1], 0.5)

    @given(st.lists(st.floats(0, 1), min_size=12, max_size=12), st.floats(0, 1))
    @settings(max_examples=100)
    def test_mask_semantics(self, vals, t):
        m = metrics_from(vals, self.bound)
        mask = generate_candidate(self.bound, m, t)
        if mask is not STOP:
            assert mask.tolist() == [v >= t for v in vals]


class TestScores:
    def test_flare(self):
        assert balanced_score(0.591, 213, 0.845, 172) == pytest.approx(0.4465, abs=5e-4)

    def test_baseline_scores_zero(self):
        assert balanced_score(0.7, 10.0, 0.7, 10.0) == 0.0

    def test_zero_time(self):
        with pytest.raises(ValueError):
            balanced_score(0.7, 0.0, 0.7, 1.0)

    def test_floor_rules(self):
        assert accuracy_floor(0.8, 0.15) == pytest.approx(0.68)
        assert accuracy_floor(0.8, 0.15, "fraction") == pytest.approx(0.12)
        with pytest.raises(ValueError):
            accuracy_floor(0.8, 0.15, "other")


class TestRanking:
    def test_breastw(self):
        cands = [cand(0.538, 0.785, 144, 0.792, 187), cand(0.558, 0.892, 116, 0.792, 187), cand(0.578, 0.628, 103, 0.792, 187)]
        ranked = rank_candidates(cands, 0.792)
        assert [c.ranks for c in ranked] == BREASTW_RANKS
        assert [c.meets_floor for c in ranked] == [True, True, False]

    def test_ties_prefer_lower_threshold(self):
        ranked = rank_candidates([cand(0.6, 0.7, 50), cand(0.5, 0.7, 50)], 0.8)
        assert [c.ranks for c in ranked] == [(2, 2, 2), (1, 1, 1)]

    def test_all_equal(self):
        ranked = rank_candidates([cand(0.5, 0.7, 50)] * 3, 0.8)
        assert [c.ranks for c in ranked] == [(1, 1, 1), (2, 2, 2), (3, 3, 3)]

    def test_floor_failures_rank_last_for_time(self):
        ranked = rank_candidates([cand(0.5, 0.9, 80), cand(0.6, 0.1, 10)], 0.8)
        assert ranked[0].ranks[1] == 1 and ranked[1].ranks[1] == 2

    @given(st.lists(st.tuples(st.floats(0, 1), st.floats(1, 100)), min_size=1, max_size=12))
    def test_permutations(self, pairs):
        ranked = rank_candidates([cand(0.5 + 0.01 * i, a, t) for i, (a, t) in enumerate(pairs)], 0.8)
        for r in range(3):
            assert sorted(c.ranks[r] for c in ranked) == list(range(1, len(pairs) + 1))

    def test_empty(self):
        with pytest.raises(ValueError):
            rank_candidates([], 0.8)


class TestScan:
    def test_breastw_scan(self):
        bound, metrics, grid = breastw_scenario()
        out = threshold_scan(bound, metrics, 0.02, stub_evaluator(BREASTW_AT))
        assert out.grid == grid
        assert out.baseline.kept == 42 and out.baseline.threshold == grid[0]
        assert [c.kept for c in out.candidates] == [33, 29, 28]
        assert [c.ranks for c in out.candidates] == BREASTW_RANKS
        assert out.stopped_at is None

    def test_duplicate_masks_skipped(self):
        bound = build_zz_map(FeatureMapSpec(2), [0.1, 0.9])
        vals = np.where(np.arange(len(bound)) < 2, 0.9, 0.5)
        vals[-1] = 0.52
        out = threshold_scan(bound, metrics_from(vals, bound), 0.1, stub_evaluator({7: (0.7, 10.0), 2: (0.6, 1.0)}))
        assert [c.kept for c in out.candidates] == [2]

    def test_nothing_to_prune(self):
        bound = build_zz_map(FeatureMapSpec(2), [0.1, 0.9])
        out = threshold_scan(bound, metrics_from(np.full(7, 0.6), bound), 0.02, stub_evaluator({7: (0.7, 5.0)}))
        assert len(out.candidates) == 1
        assert out.candidates[0].ranks == (1, 1, 1) and out.candidates[0].kept == 7

    def test_stop_recorded(self):
        bound = build_zz_map(FeatureMapSpec(2), [0.1, 0.9])
        vals = np.full(7, 0.8)
        vals[[1, 3]] = 0.5  # H and P on qubit 1
        vals[[4, 6]] = 0.5  # the CNOTs
        vals[5] = 0.6  # entangler phase, also on qubit 1
        out = threshold_scan(bound, metrics_from(vals, bound), 0.05, stub_evaluator({7: (0.7, 5.0), 3: (0.7, 2.0)}))
        assert out.stopped_at == pytest.approx(0.65)
        assert [c.kept for c in out.candidates] == [3]

    def test_parallel_matches_serial(self):
        bound, metrics, _ = breastw_scenario()
        a = threshold_scan(bound, metrics, 0.02, stub_evaluator(BREASTW_AT))
        b = threshold_scan(bound, metrics, 0.02, stub_evaluator(BREASTW_AT), workers=3)
        assert [c.ranks for c in a.candidates] == [c.ranks for c in b.candidates]


@pytest.fixture(scope="module")
def corral_report():
    X, y = ingest_csv(fixture_path("corral"))
    return run_scan(X, y, ScanConfig(timing="cost", step=0.02, num_steps=200))


class TestRunScan:
    def test_monotone_kept(self, corral_report):
        kept = [corral_report.baseline.kept] + [c.kept for c in corral_report.candidates]
        assert kept[0] == corral_report.baseline_gates == 7 * 2 + 6 * 3
        assert all(a >= b for a, b in zip(kept, kept[1:]))

    def test_selections_have_rank_one(self, corral_report):
        for key, r in (("best_A", 0), ("best_T", 1), ("best_B", 2)):
            assert corral_report.selected(key).ranks[r] == 1
        assert set(corral_report.test_results) == {"baseline", "best_A", "best_T", "best_B"}

    def test_rows(self, corral_report):
        rows = candidate_rows(corral_report)
        assert rows[0]["is_baseline"] and rows[0]["kept_gates"] == 32
        assert len(ranking_rows(corral_report)) == len(corral_report.candidates)

    def test_cost_timing_deterministic(self, corral_report):
        X, y = ingest_csv(fixture_path("corral"))
        again = run_scan(X, y, ScanConfig(timing="cost", step=0.02, num_steps=200))
        assert again.to_dict() == corral_report.to_dict()

    def test_config_validation(self):
        for bad in ({"step": 0}, {"tolerance": 2}, {"engine": "gpu"}, {"timing": "cpu"}, {"time_rule": "x"}):
            with pytest.raises(ValueError):
                ScanConfig(**bad)


def test_bench_counts():
    rows = bench_scalability(("S1", "S2", "S3"), (10,), clock=lambda: 0.0)
    assert [r["gates"] for r in rows] == [47, 141, 155]


def test_bench_cap():
    with pytest.raises(MemoryError):
        bench_scalability(("S1",), (18,))
