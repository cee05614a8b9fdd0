"""Flat ``key = value`` experiment configuration files.

Keys use dotted section prefixes; ``#`` starts a comment. Recognised keys::

    seed = 7                               # master seed, fans out to every stage
    input.features = features.csv          # or input.synthetic = true,
    input.signals = ball:b.csv,normal:n.csv  # with input.sample_rate_hz
    input.sample_rate_hz = 12000
    input.window_seconds = 0.1
    output.dir = reports
    victims = random_forest,mlp,decision_tree,knn,qda,linear_svm,naive_bayes,adaboost
    gate.threshold = 0.95
    gate.cv_folds = 5
    split.substitute_fraction = 0.4        # also attack_fraction, victim_fraction
    synthetic.per_class = 200              # also sample_rate_hz, window_seconds, shaft_hz, ...
    synthetic.ball.impulse_amplitude = 0.2 # per class: carrier_hz, impulse_hz, impulse_amplitude, noise_std
    train.forest_trees = 100               # any TrainConfig field
    attack.epsilon_sweep = 0.01,0.02,0.03,0.04,0.05
    defense.enabled = true                 # also perturbed_fraction, defense_epsilon
"""
from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field
from pathlib import Path

from .attack import AttackConfig
from .data import ClassSignal, Label, SplitSpec, SyntheticConfig
from .errors import ConfigError
from .evaluation import DefenseConfig
from .models import ALGORITHMS, TrainConfig

SEED_ENV = "CBM_ADVBENCH_SEED"
DEFAULT_VICTIMS = tuple(ALGORITHMS)


def parse_flat(text: str, origin: str = "<config>") -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{origin}:{lineno}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        if not key:
            raise ConfigError(f"{origin}:{lineno}: empty key")
        out[key] = value
    return out


def read_flat(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_flat(text, str(path))


def _parse_bool(v: str) -> bool:
    v = v.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {v!r}")


def _coerce(value: str, like, key: str):
    """Convert ``value`` to the type of the field default ``like``."""
    try:
        if isinstance(like, bool):
            return _parse_bool(value)
        if isinstance(like, int):
            return int(value)
        if isinstance(like, float):
            return float(value)
        if isinstance(like, tuple):
            parts = [p.strip() for p in value.split(",") if p.strip()]
            if like and isinstance(like[0], int):
                return tuple(int(p) for p in parts)
            return tuple(float(p) for p in parts)
        if like is None:
            return None if value.lower() in ("none", "") else int(value)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {value!r}") from None
    return value


def _apply(dc_cls, defaults, values: dict, section: str):
    fields = {f.name: getattr(defaults, f.name) for f in dataclasses.fields(dc_cls)}
    kwargs = {}
    for k, v in values.items():
        if k not in fields:
            raise ConfigError(f"unknown key {section}.{k}")
        kwargs[k] = _coerce(v, fields[k], f"{section}.{k}")
    try:
        return dataclasses.replace(defaults, **kwargs)
    except (ValueError, ConfigError) as exc:
        raise ConfigError(f"{section}: {exc}") from None


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    features_path: str | None = None
    signal_paths: tuple = ()
    sample_rate_hz: float | None = None
    window_seconds: float = 0.1
    synthetic: SyntheticConfig | None = None
    output_dir: str = "reports"
    victims: tuple = DEFAULT_VICTIMS
    gate_threshold: float = 0.95
    cv_folds: int = 5
    split: SplitSpec = field(default_factory=SplitSpec)
    train: TrainConfig = field(default_factory=TrainConfig)
    attack: AttackConfig = field(default_factory=AttackConfig)
    defense: DefenseConfig = field(default_factory=DefenseConfig)
    defend: bool = False

    def validate(self):
        chosen = sum([self.features_path is not None, bool(self.signal_paths), self.synthetic is not None])
        if chosen != 1:
            raise ConfigError("select exactly one input: input.features, input.signals or input.synthetic")
        if self.signal_paths and not self.sample_rate_hz:
            raise ConfigError("input.signals needs input.sample_rate_hz")
        for v in self.victims:
            if v not in ALGORITHMS:
                raise ConfigError(f"unknown victim {v!r}")
        if not 0 <= self.gate_threshold <= 1:
            raise ConfigError("gate.threshold must lie in [0, 1]")
        if self.cv_folds < 2:
            raise ConfigError("gate.cv_folds must be at least 2")
        return self

    def with_seed(self, seed: int) -> "ExperimentConfig":
        """Propagate a master seed into every seeded stage."""
        synth = dataclasses.replace(self.synthetic, seed=seed) if self.synthetic else None
        return dataclasses.replace(
            self,
            seed=seed,
            synthetic=synth,
            split=dataclasses.replace(self.split, seed=seed),
            train=self.train.replace(seed=seed),
            defense=dataclasses.replace(self.defense, seed=seed),
        )


def synthetic_config_from(values: dict) -> SyntheticConfig:
    base = SyntheticConfig()
    per_class = {}
    flat = {}
    for k, v in values.items():
        head, _, rest = k.partition(".")
        if rest:
            try:
                lab = Label.parse(head)
            except Exception:
                raise ConfigError(f"unknown key synthetic.{k}") from None
            per_class.setdefault(lab, {})[rest] = v
        else:
            flat[k] = v
    counts = dict(base.counts)
    if "per_class" in flat:
        n = _coerce(flat.pop("per_class"), 0, "synthetic.per_class")
        counts = {lab: n for lab in Label}
    classes = dict(base.classes)
    for lab, vals in per_class.items():
        if "count" in vals:
            counts[lab] = _coerce(vals.pop("count"), 0, f"synthetic.{lab.canonical}.count")
        classes[lab] = _apply(ClassSignal, classes[lab], vals, f"synthetic.{lab.canonical}")
    flat.pop("seed", None)
    fields = {f.name for f in dataclasses.fields(SyntheticConfig)} - {"counts", "classes", "seed"}
    kwargs = {}
    for k, v in flat.items():
        if k not in fields:
            raise ConfigError(f"unknown key synthetic.{k}")
        kwargs[k] = _coerce(v, getattr(base, k), f"synthetic.{k}")
    try:
        return SyntheticConfig(counts=counts, classes=classes, seed=base.seed, **kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def build_experiment_config(values: dict, seed_override: int | None = None) -> ExperimentConfig:
    """Build and validate an ExperimentConfig from flat key/value pairs.

    Seed precedence: ``seed_override`` > ``$CBM_ADVBENCH_SEED`` > ``seed`` key > 0.
    """
    sections: dict[str, dict] = {}
    top = {}
    for k, v in values.items():
        head, _, rest = k.partition(".")
        if rest:
            sections.setdefault(head, {})[rest] = v
        else:
            top[k] = v
    known = {"input", "output", "gate", "split", "synthetic", "train", "attack", "defense"}
    for s in sections:
        if s not in known:
            raise ConfigError(f"unknown section {s!r}")
    for k in top:
        if k not in ("seed", "victims"):
            raise ConfigError(f"unknown key {k!r}")

    inp = dict(sections.get("input", {}))
    synthetic_on = _parse_bool(inp.pop("synthetic", "false"))
    synth_values = sections.get("synthetic", {})
    signals = ()
    if "signals" in inp:
        pairs = []
        for item in inp.pop("signals").split(","):
            lab, sep, path = item.partition(":")
            if not sep:
                raise ConfigError("input.signals entries must look like label:path")
            pairs.append((Label.parse(lab.strip()), path.strip()))
        signals = tuple(pairs)
    cfg = ExperimentConfig(
        features_path=inp.pop("features", None),
        signal_paths=signals,
        sample_rate_hz=_coerce(inp.pop("sample_rate_hz"), 0.0, "input.sample_rate_hz") if "sample_rate_hz" in inp else None,
        window_seconds=_coerce(inp.pop("window_seconds", "0.1"), 0.0, "input.window_seconds"),
        synthetic=synthetic_config_from(synth_values) if synthetic_on else None,
        output_dir=sections.get("output", {}).get("dir", "reports"),
        victims=tuple(v.strip() for v in top["victims"].split(",") if v.strip()) if "victims" in top else DEFAULT_VICTIMS,
        gate_threshold=_coerce(sections.get("gate", {}).get("threshold", "0.95"), 0.0, "gate.threshold"),
        cv_folds=_coerce(sections.get("gate", {}).get("cv_folds", "5"), 0, "gate.cv_folds"),
        split=_apply(SplitSpec, SplitSpec(), sections.get("split", {}), "split"),
        train=_apply(TrainConfig, TrainConfig(), sections.get("train", {}), "train"),
        attack=_apply(AttackConfig, AttackConfig(), sections.get("attack", {}), "attack"),
        defense=_apply(
            DefenseConfig, DefenseConfig(),
            {k: v for k, v in sections.get("defense", {}).items() if k != "enabled"}, "defense",
        ),
        defend=_parse_bool(sections.get("defense", {}).get("enabled", "false")),
    )
    if inp:
        raise ConfigError(f"unknown key input.{next(iter(inp))}")
    for section, allowed in (("output", {"dir"}), ("gate", {"threshold", "cv_folds"})):
        for k in sections.get(section, {}):
            if k not in allowed:
                raise ConfigError(f"unknown key {section}.{k}")

    seed = _coerce(top["seed"], 0, "seed") if "seed" in top else 0
    env = os.environ.get(SEED_ENV)
    if env:
        seed = _coerce(env, 0, SEED_ENV)
    if seed_override is not None:
        seed = seed_override
    return cfg.with_seed(seed).validate()
