import numpy as np
import pytest

from driftbench.errors import ParameterError
from driftbench.models import train_linear_svm
from driftbench.synth import (
    GaussianBlobSpec,
    HD20_MAX_DRIFTED,
    ScenarioId,
    generate_scenario,
    hd20_change_point,
    sample_blobs,
)


class TestScenarioId:
    def test_parse_plain(self):
        assert ScenarioId.parse("a0") == ScenarioId("a0")
        assert ScenarioId.parse("C1") == ScenarioId("c1")

    def test_parse_hd20(self):
        sid = ScenarioId.parse("hd20:8")
        assert sid.name == "hd20" and sid.drifted == 8

    def test_hd20_range(self):
        with pytest.raises(ParameterError):
            ScenarioId("hd20", HD20_MAX_DRIFTED + 1)
        with pytest.raises(ParameterError):
            ScenarioId("hd20", -1)
        with pytest.raises(ParameterError):
            ScenarioId.parse("hd20")

    def test_unknown_scenario(self):
        with pytest.raises(ParameterError):
            ScenarioId.parse("zz")


class TestHd20:
    def test_no_change_means(self):
        ds = generate_scenario(ScenarioId("hd20", 0), 1000, seed=3)
        pos = ds.X[ds.y == 1]
        neg = ds.X[ds.y == -1]
        assert np.all(np.abs(pos[:, 5:].mean(axis=0) - 0.85) < 0.02)
        assert np.all(np.abs(neg[:, 5:].mean(axis=0) - 0.15) < 0.02)

    def test_drifted_block_means(self):
        ds = generate_scenario(ScenarioId("hd20", 8), 1000, seed=3)
        cp = hd20_change_point(len(ds))
        post = ds.subset(np.arange(cp, len(ds)))
        neg = post.X[post.y == -1]
        assert np.all(np.abs(neg[:, :8].mean(axis=0) - 0.75) < 0.02)
        assert np.all(np.abs(neg[:, 8:].mean(axis=0) - 0.15) < 0.02)

    def test_pre_drift_irrelevant_features_shared(self):
        ds = generate_scenario(ScenarioId("hd20", 12), 6000, seed=5)
        cp = hd20_change_point(len(ds))
        pre = ds.subset(np.arange(cp))
        mean_pos = pre.X[pre.y == 1][:, :5].mean(axis=0)
        mean_neg = pre.X[pre.y == -1][:, :5].mean(axis=0)
        assert np.all(np.abs(mean_pos - mean_neg) < 0.02)
        assert np.all(np.abs(mean_pos - 0.5) < 0.02)

    def test_class1_fixed_throughout(self):
        ds = generate_scenario(ScenarioId("hd20", 15), 2000, seed=9)
        cp = hd20_change_point(len(ds))
        pos_pre = ds.X[:cp][ds.y[:cp] == 1]
        pos_post = ds.X[cp:][ds.y[cp:] == 1]
        assert np.all(np.abs(pos_pre.mean(axis=0) - pos_post.mean(axis=0)) < 0.03)


class TestGeneration:
    @pytest.mark.parametrize("name", ["a0", "a1", "a2", "a3", "a4", "b0", "b1", "c0", "c1"])
    def test_balanced(self, name):
        ds = generate_scenario(ScenarioId.parse(name), 101, seed=1)
        assert abs(int((ds.y == 1).sum()) - int((ds.y == -1).sum())) <= 1

    def test_deterministic_bit_for_bit(self):
        a = generate_scenario(ScenarioId.parse("hd20:5"), 200, seed=42)
        b = generate_scenario(ScenarioId.parse("hd20:5"), 200, seed=42)
        assert a == b

    def test_values_in_unit_interval(self):
        ds = generate_scenario(ScenarioId.parse("c1"), 400, seed=2)
        assert ds.X.min() >= 0.0 and ds.X.max() <= 1.0

    def test_n_per_class_validation(self):
        with pytest.raises(ParameterError):
            generate_scenario(ScenarioId.parse("a0"), 0, seed=1)

    def test_blob_spec_validation(self):
        with pytest.raises(ParameterError):
            GaussianBlobSpec((0.5,), 0.0, 10, 1)

    def test_sample_blobs_dimension_check(self):
        with pytest.raises(ParameterError):
            sample_blobs(
                [GaussianBlobSpec((0.5,), 0.1, 5, 1), GaussianBlobSpec((0.5, 0.5), 0.1, 5, -1)],
                seed=0,
            )


def test_model_trained_off_margin_shift_keeps_accuracy():
    # train on the initial scenario, test on the away-from-margin shift:
    # a brute-force error count must stay at or below 1%
    train = generate_scenario(ScenarioId.parse("a0"), 500, seed=7)
    away = generate_scenario(ScenarioId.parse("a2"), 500, seed=7)
    model = train_linear_svm(train, 1.0, seed=1)
    errors = int(np.sum(model.predict(away.X) != away.y))
    assert errors <= 0.01 * len(away)
