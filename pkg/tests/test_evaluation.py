import numpy as np
import pytest

from twostage.errors import DatasetError
from twostage.evaluation import accuracy, benchmark, credit_halves, log_loss
from twostage.fit import FitConfig
from twostage.fitters import LogisticFitter, TallyingFitter, TwoStageFitter
from twostage.schema import ComparisonDataset
from twostage.synth import SimulatedDM, bayes_accuracy, simulate_dataset


def always_tie(first, second):
    return np.zeros(len(first), dtype=np.int8)


def tie_fitter(train):
    return always_tie


class Replay:
    def __init__(self, ds):
        self.ds = ds

    def __call__(self, first, second):
        return np.where(self.ds.choice == 1, 1, -1)


def failing_fitter(train):
    raise RuntimeError("boom")


class TestAccuracy:
    def test_oracle(self):
        ds = simulate_dataset("dm1", 200, 0)
        assert accuracy(Replay(ds), ds) == 1.0

    def test_always_tie(self):
        assert accuracy(always_tie, simulate_dataset("dm1", 200, 0)) == 0.5

    def test_credit(self):
        assert credit_halves(np.array([1, -1, 0, 1]), np.array([1, 1, 0, 0])) == 3

    def test_dm1_bayes_predictor(self):
        ds = simulate_dataset("dm1", 100_000, 31)
        assert abs(accuracy(SimulatedDM("dm1"), ds) - bayes_accuracy("dm1")) <= 0.01

    def test_empty(self, kidney):
        empty = ComparisonDataset(kidney, np.zeros((0, 4)), np.zeros((0, 4)), [])
        with pytest.raises(DatasetError):
            accuracy(always_tie, empty)


class TestBenchmark:
    def test_constant_fitter(self):
        res = benchmark(tie_fitter, simulate_dataset("dm2", 100, 1), reps=5)
        assert res.mean == 0.5 and res.std == 0.0
        assert res.per_rep == [0.5] * 5

    def test_single_rep(self):
        res = benchmark(TallyingFitter(), simulate_dataset("dm5", 100, 1), reps=1)
        assert res.std == 0.0 and len(res.per_rep) == 1

    def test_deterministic(self):
        ds = simulate_dataset("dm1", 300, 2)
        f = TwoStageFitter(FitConfig(max_iter=60), None)
        assert benchmark(f, ds, reps=3, seed=4).to_dict() == benchmark(f, ds, reps=3, seed=4).to_dict()

    def test_row_permutation_stable(self):
        ds = simulate_dataset("dm3", 300, 3)
        perm = ds.subset(np.random.default_rng(0).permutation(len(ds)))
        f = LogisticFitter()
        assert benchmark(f, ds, reps=4, seed=1).per_rep == benchmark(f, perm, reps=4, seed=1).per_rep

    def test_seed_changes_splits(self):
        ds = simulate_dataset("dm1", 300, 2)
        assert benchmark(LogisticFitter(), ds, 3, seed=0).per_rep != benchmark(LogisticFitter(), ds, 3, seed=1).per_rep

    def test_failures_reported(self):
        res = benchmark(failing_fitter, simulate_dataset("dm1", 50, 0), reps=2)
        assert res.per_rep == [None, None]
        assert [r for r, _ in res.failures] == [0, 1]
        assert np.isnan(res.mean)

    def test_workers_match_serial(self):
        ds = simulate_dataset("dm4", 200, 5)
        f = TwoStageFitter(FitConfig(max_iter=40), None)
        assert benchmark(f, ds, 3, jobs=2).per_rep == benchmark(f, ds, 3, jobs=1).per_rep

    def test_invalid_reps(self):
        with pytest.raises(ValueError):
            benchmark(tie_fitter, simulate_dataset("dm1", 50, 0), reps=0)


def test_log_loss():
    assert log_loss(np.array([0.5, 0.5]), np.array([1, 0])) == pytest.approx(np.log(2))
