import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cbm_advbench.attack import (
    AdversarialSample,
    AttackConfig,
    attack_success,
    craft_attack_set,
    distance_stats,
    fgsm_craft,
    fgsm_perturb,
    gradient_sign,
    lp_distance,
    read_adversarial_csv,
    success_rate,
    write_adversarial_csv,
)
from cbm_advbench.data import Label, LabeledDataset
from cbm_advbench.errors import DimensionMismatch, EmptyPool
from cbm_advbench.models import TrainConfig, mlp_train
from cbm_advbench.models.mlp import MlpModel, init_mlp, mlp_input_gradient

# standardized inner-race point and its eps=0.03 perturbation
ORIGINAL = np.array([0.18, 0.43, 0.23, -0.08, -0.10, -0.59, -0.65, 0.17, 1.46, -0.65, -0.63, 1.01])
PERTURBED = np.array([0.21, 0.40, 0.26, -0.05, -0.13, -0.62, -0.68, 0.20, 1.43, -0.68, -0.60, 0.98])


class ConstantVictim:
    def __init__(self, label):
        self.label = int(label)

    def predict_batch(self, X):
        return np.full(np.atleast_2d(X).shape[0], self.label)


@pytest.fixture(scope="module")
def substitute(small_dataset):
    return mlp_train(TrainConfig(mlp_epochs=40), small_dataset)


def test_fgsm_formula(substitute, small_dataset):
    X, y = small_dataset.X[:20], small_dataset.y[:20]
    g = substitute.input_gradient(X, y)
    assert np.array_equal(fgsm_perturb(substitute, X, y, 0.03), X + 0.03 * np.sign(g))


def test_fgsm_deltas_are_plus_minus_eps(substitute, small_dataset):
    adv = craft_attack_set(substitute, small_dataset, 0.03)
    delta = adv.perturbed - adv.original
    assert np.all(np.isclose(np.abs(delta), 0.03, rtol=0, atol=1e-12) | (delta == 0))
    linf = np.abs(delta).max(axis=1)
    assert np.all(np.isclose(linf, 0.03, rtol=0, atol=1e-12))


def test_zero_gradient_gives_no_perturbation():
    flat = MlpModel((np.zeros((12, 4)),), (np.zeros(4),))
    x = np.arange(12.0)
    s = fgsm_craft(flat, x, Label.BALL, 0.05)
    assert np.array_equal(s.perturbed, x)
    assert lp_distance(s.original, s.perturbed, "Linf") == 0.0


def test_gradient_sign_dead_zone():
    assert gradient_sign([1e-13, -1e-13, 0.0, 2e-12, -3.0]).tolist() == [0.0, 0.0, 0.0, 1.0, -1.0]


def test_fgsm_increases_substitute_loss_to_first_order(rng):
    m = init_mlp((12, 16, 4), rng)
    x = rng.standard_normal(12)
    g = mlp_input_gradient(m, x, 2)
    x_star = fgsm_craft(m, x, 2, 1e-6).perturbed
    assert m.loss(x_star[None, :], [2])[0] > m.loss(x[None, :], [2])[0]
    assert (x_star - x) @ g == pytest.approx(1e-6 * np.abs(g).sum(), rel=1e-6)


def test_epsilon_zero_is_identity(substitute, small_dataset):
    X = small_dataset.X[:5]
    assert np.array_equal(fgsm_perturb(substitute, X, small_dataset.y[:5], 0.0), X)


def test_reference_pair_distances():
    assert lp_distance(ORIGINAL, PERTURBED, "Linf") == pytest.approx(0.03, abs=1e-12)
    assert lp_distance(ORIGINAL, PERTURBED, "L0") == 12
    assert lp_distance(ORIGINAL, PERTURBED, "L2") == pytest.approx(0.03 * math.sqrt(12), abs=1e-12)


def test_reference_pair_attack_success():
    s = AdversarialSample(ORIGINAL, PERTURBED, Label.INNER_RACE, 0.03)
    assert attack_success(ConstantVictim(Label.OUTER_RACE), s)
    assert not attack_success(ConstantVictim(Label.INNER_RACE), s)


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=12), st.floats(0, 1))
def test_distance_ordering(values, eps):
    x = np.array(values)
    x_star = x + eps * np.sign(np.arange(x.size) - 2.5)
    linf = lp_distance(x, x_star, "Linf")
    l2 = lp_distance(x, x_star, "L2")
    assert linf <= l2 + 1e-12
    assert l2 <= math.sqrt(lp_distance(x, x_star, "L0")) * linf + 1e-12


def test_distance_errors():
    with pytest.raises(DimensionMismatch):
        lp_distance([1.0, 2.0], [1.0])
    with pytest.raises(ValueError):
        lp_distance([1.0], [1.0], "L3")


def test_success_rate_is_one_minus_accuracy(substitute, small_dataset):
    adv = craft_attack_set(substitute, small_dataset, 0.05)
    pred = substitute.predict(adv.perturbed)
    wrong = sum(int(p != t) for p, t in zip(pred, adv.labels))
    assert success_rate(substitute, adv) == pytest.approx(wrong / len(adv))
    assert sum(attack_success(substitute, s) for s in adv.samples) == wrong


def test_distance_stats(substitute, small_dataset):
    adv = craft_attack_set(substitute, small_dataset, 0.02)
    st_ = distance_stats(adv)
    assert st_["max_linf"] == pytest.approx(0.02, abs=1e-12)
    assert 0 < st_["mean_l0"] <= 12


def test_empty_pool(substitute):
    with pytest.raises(EmptyPool):
        craft_attack_set(substitute, LabeledDataset(np.zeros((0, 12)), np.zeros(0), True), 0.03)


def test_adversarial_csv_round_trip(tmp_path, substitute, small_dataset):
    sets = [craft_attack_set(substitute, small_dataset, e) for e in (0.01, 0.05)]
    path = tmp_path / "adv.csv"
    write_adversarial_csv(path, sets)
    back = read_adversarial_csv(path)
    assert [b.epsilon for b in back] == [0.01, 0.05]
    for a, b in zip(sets, back):
        assert np.array_equal(a.perturbed, b.perturbed)
        assert np.array_equal(a.labels, b.labels)


def test_attack_config_validation():
    with pytest.raises(ValueError):
        AttackConfig(epsilon_sweep=(0.02, 0.01))
    with pytest.raises(ValueError):
        AttackConfig(epsilon=-0.1)
    assert AttackConfig().epsilon_sweep == (0.01, 0.02, 0.03, 0.04, 0.05)


def test_adversarial_set_is_immutable(substitute, small_dataset):
    adv = craft_attack_set(substitute, small_dataset, 0.03)
    with pytest.raises(ValueError):
        adv.perturbed[0, 0] = 0.0
    assert adv.substitute == substitute.fingerprint()
