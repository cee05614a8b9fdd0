import pytest

from cbm_advbench.config import build_experiment_config, parse_flat, read_flat
from cbm_advbench.data import Label
from cbm_advbench.errors import ConfigError

BASE = {"input.synthetic": "true"}


def test_parse_flat_strips_comments():
    vals = parse_flat("# header\nseed = 3  # trailing\n\nattack.epsilon_sweep = 0.01, 0.02\n")
    assert vals == {"seed": "3", "attack.epsilon_sweep": "0.01, 0.02"}


def test_parse_flat_reports_line():
    with pytest.raises(ConfigError, match=":2:"):
        parse_flat("seed = 1\nnonsense\n")


def test_missing_file():
    with pytest.raises(ConfigError):
        read_flat("/nonexistent/exp.cfg")


def test_seed_precedence(monkeypatch):
    vals = dict(BASE, seed="3")
    monkeypatch.delenv("CBM_ADVBENCH_SEED", raising=False)
    assert build_experiment_config(vals).seed == 3
    monkeypatch.setenv("CBM_ADVBENCH_SEED", "5")
    assert build_experiment_config(vals).seed == 5
    cfg = build_experiment_config(vals, seed_override=9)
    assert cfg.seed == 9
    assert cfg.train.seed == cfg.split.seed == cfg.synthetic.seed == cfg.defense.seed == 9


def test_sections_reach_nested_configs():
    cfg = build_experiment_config(dict(
        BASE,
        **{
            "attack.epsilon_sweep": "0.1,0.2",
            "train.forest_trees": "7",
            "train.mlp_hidden": "16,8",
            "synthetic.ball.impulse_amplitude": "0.4",
            "synthetic.per_class": "30",
            "defense.enabled": "yes",
            "defense.perturbed_fraction": "0.1",
            "gate.cv_folds": "3",
            "victims": "knn, qda",
        },
    ))
    assert cfg.attack.epsilon_sweep == (0.1, 0.2)
    assert cfg.train.forest_trees == 7 and cfg.train.mlp_hidden == (16, 8)
    assert cfg.synthetic.classes[Label.BALL].impulse_amplitude == 0.4
    assert cfg.synthetic.counts[Label.NORMAL] == 30
    assert cfg.defend and cfg.defense.perturbed_fraction == 0.1
    assert cfg.cv_folds == 3 and cfg.victims == ("knn", "qda")


@pytest.mark.parametrize(
    "extra",
    [
        {"bogus": "1"},
        {"train.nope": "1"},
        {"gate.nope": "1"},
        {"victims": "kernel_svm"},
        {"input.features": "f.csv"},
        {"synthetic.ball.carrier_hz": "9000"},
        {"split.substitute_fraction": "0.9"},
        {"train.forest_trees": "many"},
        {"attack.epsilon_sweep": "0.05,0.01"},
    ],
)
def test_invalid_configs_raise(extra):
    with pytest.raises(ConfigError):
        build_experiment_config(dict(BASE, **extra))


def test_needs_exactly_one_input():
    with pytest.raises(ConfigError):
        build_experiment_config({})


def test_signals_need_sample_rate():
    with pytest.raises(ConfigError):
        build_experiment_config({"input.signals": "ball:b.csv"})
    cfg = build_experiment_config({"input.signals": "ball:b.csv,normal:n.csv", "input.sample_rate_hz": "12000"})
    assert cfg.signal_paths == ((Label.BALL, "b.csv"), (Label.NORMAL, "n.csv"))
