"""The end-to-end study: split, substitute, CV gate, victims, transfer sweep,
optional adversarial-training rerun."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import ExperimentConfig
from .data import LabeledDataset, split_dataset, synthesize_bearing_dataset, load_feature_csv
from .errors import GateFailure
from .evaluation import (
    RobustnessReport,
    adversarial_training,
    cross_validate,
    transfer_evaluate,
    write_report_csv,
    write_report_json,
)
from .features import Standardizer, extract_signal_features, fit_standardizer, read_signal_csv
from .models import ALGORITHMS, MlpModel, mlp_train, train_classifier

log = logging.getLogger(__name__)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    standardizer: Standardizer
    substitute: MlpModel
    cv: dict  # algorithm -> CrossValidation
    passed: list
    excluded: list  # (algorithm, cv f1)
    victims: dict = field(default_factory=dict)
    reports: list = field(default_factory=list)

    @property
    def report(self) -> RobustnessReport | None:
        return self.reports[0] if self.reports else None

    @property
    def defended(self) -> RobustnessReport | None:
        return self.reports[1] if len(self.reports) > 1 else None

    def cv_table(self) -> list:
        return [
            {
                "algorithm": name,
                "cv_f1": cv.mean_f1,
                "fold_f1": list(cv.fold_f1),
                "passed_gate": name in self.passed,
            }
            for name, cv in self.cv.items()
        ]


def load_dataset(cfg: ExperimentConfig) -> LabeledDataset:
    if cfg.synthetic is not None:
        return synthesize_bearing_dataset(cfg.synthetic)[1]
    if cfg.features_path is not None:
        return load_feature_csv(cfg.features_path)
    blocks, labels = [], []
    for label, path in cfg.signal_paths:
        signal, fs = read_signal_csv(path, cfg.sample_rate_hz)
        feats = extract_signal_features(signal, fs, cfg.window_seconds)
        blocks.append(feats)
        labels.append(np.full(feats.shape[0], int(label)))
    return LabeledDataset(np.vstack(blocks), np.concatenate(labels), False, "signals")


def run_experiment(cfg: ExperimentConfig, ds: LabeledDataset | None = None, extra_victims=None) -> ExperimentResult:
    """Run the whole study.

    ``extra_victims`` maps a name to ``trainer(train_cfg, dataset) -> model``;
    such victims go through the same CV gate as the built-in algorithms.
    Raises GateFailure (after computing the CV table) when nothing passes.
    """
    ds = load_dataset(cfg) if ds is None else ds
    sub_raw, pool_raw, vic_raw = split_dataset(ds, cfg.split)
    scaler = fit_standardizer(sub_raw.X)

    def scaled(part):
        return part.with_features(scaler.transform(part.X), standardized=True)

    sub, pool, vic = scaled(sub_raw), scaled(pool_raw), scaled(vic_raw)
    log.info("split sizes: substitute=%d attack=%d victim=%d", len(sub), len(pool), len(vic))

    substitute = mlp_train(cfg.train, sub, cfg.train.substitute_hidden)
    log.info("substitute training macro-F1 %.4f", substitute.metadata["train_macro_f1"])

    trainers = {name: None for name in cfg.victims}
    trainers.update(extra_victims or {})
    cv, passed, excluded = {}, [], []
    for name, trainer in trainers.items():
        cv[name] = cross_validate(name, cfg.train, vic, cfg.cv_folds, trainer=trainer)
        if cv[name].mean_f1 >= cfg.gate_threshold:
            passed.append(name)
        else:
            excluded.append((name, cv[name].mean_f1))
        log.info("cv %-14s %.4f", name, cv[name].mean_f1)

    result = ExperimentResult(cfg, scaler, substitute, cv, passed, excluded)
    if not passed:
        raise GateFailure(f"no victim reached CV macro-F1 {cfg.gate_threshold}", result)

    def fit(name, data):
        trainer = trainers[name]
        return trainer(cfg.train, data) if trainer else train_classifier(name, cfg.train, data)

    result.victims = {name: fit(name, vic) for name in passed}
    result.reports.append(transfer_evaluate(result.victims, substitute, pool, cfg.attack))

    if cfg.defend:
        defended = {}
        for name in passed:
            if trainers[name] is None:
                defended[name] = adversarial_training(name, cfg.train, vic, cfg.defense, substitute)
        result.reports.append(transfer_evaluate(defended, substitute, pool, cfg.attack, label="defended"))
    return result


def write_reports(result: ExperimentResult, out_dir) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = result.config
    meta = {
        "seed": cfg.seed,
        "victims": list(cfg.victims),
        "gate_threshold": cfg.gate_threshold,
        "cv_folds": cfg.cv_folds,
        "substitute_architecture": list(cfg.train.substitute_hidden),
        "substitute_fingerprint": result.substitute.fingerprint(),
        "defense": {
            "enabled": cfg.defend,
            "perturbed_fraction": cfg.defense.perturbed_fraction,
            "defense_epsilon": cfg.defense.defense_epsilon,
        },
    }
    excluded = [{"algorithm": n, "cv_f1": f} for n, f in result.excluded]
    json_path = out / "report.json"
    csv_path = out / "sweep.csv"
    if result.reports:
        write_report_json(json_path, result.reports, result.cv_table(), excluded, meta)
        write_report_csv(csv_path, result.reports)
    else:
        import json

        doc = {"meta": meta, "cross_validation": result.cv_table(), "excluded": excluded, "models": []}
        json_path.write_text(json.dumps(doc, indent=2) + "\n")
        csv_path.write_text("algorithm,epsilon,f1,success_rate\n")
    return json_path, csv_path


def format_summary(result: ExperimentResult) -> str:
    lines = ["Algorithm                          CV macro-F1  gate"]
    for name, cv in sorted(result.cv.items(), key=lambda kv: -kv[1].mean_f1):
        label = ALGORITHMS.get(name, name)
        status = "pass" if name in result.passed else "EXCLUDED"
        lines.append(f"{label:<34} {cv.mean_f1:>10.4f}  {status}")
    for rep in result.reports:
        lines.append("")
        lines.append(f"[{rep.label}] macro-F1 by epsilon")
        eps = ["0"] + [f"{e:g}" for e in rep.epsilons]
        lines.append(f"{'algorithm':<16}" + "".join(f"{e:>8}" for e in eps))
        for m in rep.models + (rep.substitute,):
            vals = [m.clean.f1] + [p.f1 for p in m.sweep]
            lines.append(f"{m.algorithm:<16}" + "".join(f"{v:>8.3f}" for v in vals))
    return "\n".join(lines)
