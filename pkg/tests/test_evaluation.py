import json

import numpy as np
import pytest

from cbm_advbench.attack import AttackConfig, craft_attack_set
from cbm_advbench.config import build_experiment_config
from cbm_advbench.errors import GateFailure
from cbm_advbench.evaluation import (
    DefenseConfig,
    _stratified_count,
    cross_validate,
    perturb_training_set,
    report_document,
    score,
    transfer_evaluate,
)
from cbm_advbench.experiment import format_summary, run_experiment, write_reports
from cbm_advbench.metrics import confusion_matrix, macro_f1
from cbm_advbench.models import TrainConfig, mlp_train, predict_batch, train_classifier


class RandomVictim:
    """Guesses uniformly at random; the seed is fixed so reruns agree."""

    def __init__(self, seed):
        self.rng = np.random.default_rng(seed)

    def predict_batch(self, X):
        return self.rng.integers(0, 4, np.atleast_2d(X).shape[0])


@pytest.fixture(scope="module")
def substitute(small_dataset):
    return mlp_train(TrainConfig(mlp_epochs=40), small_dataset)


def test_fold_scores_recomputed_from_fold_models(small_dataset):
    cv = cross_validate("decision_tree", TrainConfig(), small_dataset, 5, keep_models=True)
    for (_, val), model, f1 in zip(cv.folds, cv.models, cv.fold_f1):
        pred = predict_batch(model, small_dataset.X[val])
        assert macro_f1(confusion_matrix(pred, small_dataset.y[val])) == f1
    assert cv.mean_f1 == pytest.approx(np.mean(cv.fold_f1))


def test_cv_is_seeded(small_dataset):
    a = cross_validate("knn", TrainConfig(seed=1), small_dataset, 4)
    b = cross_validate("knn", TrainConfig(seed=1), small_dataset, 4)
    assert a.fold_f1 == b.fold_f1


def test_perturbed_training_set_row_count(small_dataset, substitute):
    mod, chosen = perturb_training_set(small_dataset, DefenseConfig(0.2, 0.03, seed=4), substitute)
    changed = np.flatnonzero(np.any(mod.X != small_dataset.X, axis=1))
    n = len(small_dataset)
    assert chosen.size == int(np.floor(0.2 * n))
    assert set(changed.tolist()) <= set(chosen.tolist())
    assert changed.size >= chosen.size - 2  # a row only stays put if its whole gradient vanishes
    assert np.array_equal(mod.y, small_dataset.y)
    counts = np.bincount(small_dataset.y[chosen], minlength=4)
    assert counts.max() - counts.min() <= 1


def test_stratified_quota_sums_to_total():
    y = np.repeat([0, 1, 2, 3], [7, 5, 3, 1])
    q = _stratified_count(y, 3, 0.2)
    assert q.sum() == 3 and np.all(q <= [7, 5, 3, 1])


def test_zero_fraction_leaves_data_alone(small_dataset, substitute):
    mod, chosen = perturb_training_set(small_dataset, DefenseConfig(0.0, 0.03), substitute)
    assert chosen.size == 0 and mod is small_dataset


def test_transfer_report_shape(small_dataset, substitute):
    victims = {k: train_classifier(k, TrainConfig(forest_trees=10), small_dataset) for k in ("knn", "decision_tree")}
    rep = transfer_evaluate(victims, substitute, small_dataset, AttackConfig())
    assert rep.epsilons == (0.01, 0.02, 0.03, 0.04, 0.05)
    assert [m.algorithm for m in rep.models] == ["knn", "decision_tree"]
    assert all(len(m.sweep) == 5 for m in rep.models)
    rows = list(rep.csv_rows())
    assert len(rows) == 3 * 6
    adv = craft_attack_set(substitute, small_dataset, 0.03)
    assert rep.model("knn").f1_at(0.03) == score(victims["knn"], adv.perturbed, adv.labels).f1
    doc = report_document([rep])
    assert json.loads(json.dumps(doc))["epsilons"] == list(rep.epsilons)


def test_random_victim_is_excluded_and_named(tmp_path):
    cfg = build_experiment_config(
        {"input.synthetic": "true", "synthetic.per_class": "60", "victims": "decision_tree"}, 0
    )
    result = run_experiment(cfg, extra_victims={"random_guess": lambda c, ds: RandomVictim(0)})
    assert result.passed == ["decision_tree"]
    assert [name for name, _ in result.excluded] == ["random_guess"]
    assert "random_guess" in format_summary(result) and "EXCLUDED" in format_summary(result)
    json_path, _ = write_reports(result, tmp_path)
    doc = json.loads(json_path.read_text())
    assert doc["excluded"][0]["algorithm"] == "random_guess"
    assert [m["algorithm"] for m in doc["models"]] == ["decision_tree"]


def test_gate_failure_carries_partial_result():
    cfg = build_experiment_config(
        {"input.synthetic": "true", "synthetic.per_class": "40", "victims": "adaboost", "gate.threshold": "1.0"}, 0
    )
    with pytest.raises(GateFailure) as err:
        run_experiment(cfg)
    assert err.value.result.excluded[0][0] == "adaboost"


def test_defended_forest_not_worse_at_reference_eps(pipeline_result):
    u = pipeline_result.report.model("random_forest")
    d = pipeline_result.defended.model("random_forest")
    assert d.f1_at(0.03) >= u.f1_at(0.03)


def test_pipeline_report_lists_gate_passers(pipeline_result):
    assert [m.algorithm for m in pipeline_result.report.models] == pipeline_result.passed
    assert pipeline_result.defended.label == "defended"
    assert pipeline_result.substitute.layer_sizes == (12, 64, 64, 32, 4)
