import numpy as np
import pytest

from driftbench.data import Dataset
from driftbench.errors import EmptyInputError, ParameterError
from driftbench.margins import (
    ENSEMBLE_DISAGREEMENT,
    PROBABILISTIC_CONFIDENCE,
    SVM_GEOMETRIC,
    MarginSpec,
    ensemble_margin_signal,
    margin_density,
    probabilistic_margin_signal,
    svm_margin_signal,
)
from driftbench.models import LinearModel, SubspaceEnsemble


def vote_ensemble(votes_plus, k=20):
    members = [LinearModel(np.array([1.0]), -0.5) for _ in range(votes_plus)]
    members += [LinearModel(np.array([-1.0]), 0.5) for _ in range(k - votes_plus)]
    return SubspaceEnsemble(members, [np.array([0])] * k, d=1)


class TestSvmSignal:
    def test_inside(self):
        model = LinearModel(np.array([2.0, 0.0]), 0.0)
        assert svm_margin_signal(model, [0.4, 0.9]) == 1

    def test_outside(self):
        model = LinearModel(np.array([2.0, 0.0]), 0.0)
        assert svm_margin_signal(model, [0.6, 0.1]) == 0

    def test_boundary_inclusive(self):
        model = LinearModel(np.array([2.0, 0.0]), 0.0)
        assert svm_margin_signal(model, [0.5, 0.3]) == 1  # score exactly 1


class TestEnsembleSignal:
    def test_disagreement_inside(self):
        assert ensemble_margin_signal(vote_ensemble(12), [1.0], 0.5) == 1

    def test_strong_agreement_outside(self):
        assert ensemble_margin_signal(vote_ensemble(19), [1.0], 0.5) == 0

    def test_boundary_inclusive(self):
        assert ensemble_margin_signal(vote_ensemble(15), [1.0], 0.5) == 1

    def test_theta_validation(self):
        with pytest.raises(ParameterError):
            ensemble_margin_signal(vote_ensemble(10), [1.0], 1.0)


class TestProbabilisticSignal:
    def model_with_p(self, p):
        # pick b so the logistic link returns exactly p at x = 0
        b = float(np.log(p / (1 - p)))
        return LinearModel(np.array([0.0]), b, probabilistic=True)

    def test_maximal_uncertainty(self):
        assert probabilistic_margin_signal(self.model_with_p(0.5), [0.0], 0.1) == 1

    def test_confident_outside(self):
        assert probabilistic_margin_signal(self.model_with_p(0.95), [0.0], 0.5) == 0

    def test_boundary_inclusive(self):
        assert probabilistic_margin_signal(self.model_with_p(0.75), [0.0], 0.5) == 1


class TestMarginDensity:
    def test_all_in_margin(self):
        model = LinearModel(np.array([0.1]), 0.0)
        batch = np.linspace(0, 1, 50).reshape(-1, 1)
        assert margin_density(model, MarginSpec(SVM_GEOMETRIC), batch) == 1.0

    def test_none_in_margin(self):
        model = LinearModel(np.array([100.0]), -50.0)
        batch = np.array([[0.0], [1.0]])
        assert margin_density(model, MarginSpec(SVM_GEOMETRIC), batch) == 0.0

    def test_exact_count(self):
        # brute-force: 17 of 100 samples fall inside |10x - 5| <= 1
        model = LinearModel(np.array([10.0]), -5.0)
        rng = np.random.default_rng(0)
        batch = rng.random((100, 1))
        expected = int(np.sum(np.abs(batch[:, 0] * 10 - 5) <= 1.0))
        got = margin_density(model, MarginSpec(SVM_GEOMETRIC), batch)
        assert got == pytest.approx(expected / 100)

    def test_empty_batch(self):
        model = LinearModel(np.array([1.0]), 0.0)
        with pytest.raises(EmptyInputError):
            margin_density(model, MarginSpec(SVM_GEOMETRIC), np.zeros((0, 1)))

    def test_accepts_dataset(self):
        model = LinearModel(np.array([1.0]), 0.0)
        ds = Dataset(np.array([[0.5], [0.9]]), None)
        assert 0.0 <= margin_density(model, MarginSpec(SVM_GEOMETRIC), ds) <= 1.0


class TestSpecValidation:
    def test_kind_checked(self):
        with pytest.raises(ParameterError):
            MarginSpec("geometric", 0.5)

    def test_theta_range(self):
        with pytest.raises(ParameterError):
            MarginSpec(ENSEMBLE_DISAGREEMENT, 0.0)
        with pytest.raises(ParameterError):
            MarginSpec(PROBABILISTIC_CONFIDENCE, 1.0)


def test_density_bounds_and_theta_monotonicity():
    # 1000 random vote/threshold cases: density stays in [0, 1] and never
    # decreases as the margin width grows
    rng = np.random.default_rng(123)
    for _ in range(1000):
        k = int(rng.integers(2, 40))
        votes = rng.integers(0, k + 1, size=int(rng.integers(1, 30)))
        thetas = np.sort(rng.uniform(0.01, 0.99, size=3))
        densities = []
        for theta in thetas:
            sig = (np.abs(2 * votes / k - 1) <= theta).astype(float)
            densities.append(sig.mean())
        assert all(0.0 <= d <= 1.0 for d in densities)
        assert densities == sorted(densities)


def test_ensemble_density_monotone_in_theta_real_model(bench16):
    from driftbench.models import TrainConfig, train_subspace_ensemble

    ens = train_subspace_ensemble(
        bench16.subset(np.arange(400)), TrainConfig(kind="ensemble", K=9, J=6, seed=0)
    )
    batch = bench16.X[400:600]
    prev = -1.0
    for theta in (0.1, 0.3, 0.5, 0.7, 0.9):
        d = margin_density(ens, MarginSpec(ENSEMBLE_DISAGREEMENT, theta), batch)
        assert d >= prev
        prev = d
