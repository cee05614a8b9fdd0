"""Command-line driver.

Subcommands::

    features  window a signal CSV and write its feature CSV
    synth     generate the synthetic bearing corpus (signals + features)
    train     fit one classifier (or the substitute network) on a feature CSV
    attack    craft FGSM samples on a saved substitute
    evaluate  score saved models on clean or adversarial features
    run       the full study driven by a config file
    defend    ``run --defend``

Exit codes: 0 success, 2 usage or config error, 3 no victim passed the CV
gate, 4 numerical failure during training.

The config file read by ``run`` and ``synth`` is flat ``key = value`` text
with dotted sections; see ``cbm_advbench.config`` for the full key list.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import errors
from .attack import AttackConfig, craft_attack_set, read_adversarial_csv, write_adversarial_csv
from .config import build_experiment_config, read_flat, synthetic_config_from
from .data import Label, LabeledDataset, load_feature_csv, synthesize_bearing_dataset, write_feature_csv
from .evaluation import score
from .experiment import format_summary, run_experiment, write_reports
from .features import Standardizer, extract_signal_features, fit_standardizer, read_signal_csv, write_signal_csv
from .models import ALGORITHMS, TrainConfig, load_model, mlp_train, save_model, train_classifier

EXIT_OK, EXIT_USAGE, EXIT_GATE, EXIT_NUMERIC = 0, 2, 3, 4

log = logging.getLogger("cbm_advbench")


class UsageError(errors.CbmError):
    pass


def _write_json(path, doc):
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _read_standardizer(path) -> Standardizer:
    try:
        return Standardizer.from_dict(json.loads(Path(path).read_text()))
    except (OSError, KeyError, ValueError) as exc:
        raise UsageError(f"--standardizer: cannot read {path}: {exc}") from None


def _standardized(ds: LabeledDataset, scaler: Standardizer) -> LabeledDataset:
    return ds.with_features(scaler.transform(ds.X), standardized=True)


def _class_counts(ds: LabeledDataset) -> str:
    counts = ds.class_counts()
    return ", ".join(f"{Label(c).canonical}={int(n)}" for c, n in enumerate(counts) if n)


def _overrides(pairs) -> dict:
    out = {}
    for item in pairs or ():
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise UsageError(f"--set expects key=value, got {item!r}")
        out[key.strip()] = value.strip()
    return out


# -- subcommands --------------------------------------------------------------

def cmd_features(args) -> int:
    if args.fs <= 0:
        raise UsageError("--fs must be positive")
    if args.window <= 0:
        raise UsageError("--window must be positive")
    label = Label.parse(args.label)
    signal, fs = read_signal_csv(args.inp, args.fs)
    X = extract_signal_features(signal, fs, args.window)
    ds = LabeledDataset(X, np.full(X.shape[0], int(label)), False, str(args.inp))
    write_feature_csv(args.out, ds)
    print(f"wrote {len(ds)} rows to {args.out} ({_class_counts(ds)})")
    return EXIT_OK


def cmd_synth(args) -> int:
    values = {}
    if args.config:
        values.update({k.partition(".")[2]: v for k, v in read_flat(args.config).items()
                       if k.startswith("synthetic.")})
    values.update(_overrides(args.set))
    cfg = synthetic_config_from(values)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    signals, ds = synthesize_bearing_dataset(cfg)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for lab, sig in signals.items():
        write_signal_csv(out / f"signal_{lab.canonical}.csv", sig, cfg.sample_rate_hz)
    write_feature_csv(out / "features.csv", ds)
    print(f"wrote {len(ds)} feature rows to {out / 'features.csv'} ({_class_counts(ds)})")
    return EXIT_OK


def cmd_train(args) -> int:
    ds = load_feature_csv(args.features)
    if args.standardizer:
        scaler = _read_standardizer(args.standardizer)
    else:
        scaler = fit_standardizer(ds.X)
    if args.save_standardizer:
        _write_json(args.save_standardizer, scaler.to_dict())
    train = _standardized(ds, scaler)
    cfg = TrainConfig(seed=args.seed)
    if args.algorithm == "substitute":
        model = mlp_train(cfg, train, cfg.substitute_hidden)
        f1 = model.metadata["train_macro_f1"]
    else:
        model = train_classifier(args.algorithm, cfg, train)
        f1 = score(model, train.X, train.y).f1
    save_model(model, args.out)
    print(f"{args.algorithm}: training macro-F1 {f1:.4f}; saved to {args.out}")
    return EXIT_OK


def cmd_attack(args) -> int:
    sub = load_model(args.substitute)
    if sub.kind != "mlp":
        raise UsageError("--substitute must be an MLP model file")
    pool = _standardized(load_feature_csv(args.features), _read_standardizer(args.standardizer))
    eps = tuple(args.epsilon) if args.epsilon else AttackConfig().epsilon_sweep
    try:
        AttackConfig(epsilon=eps[0], epsilon_sweep=tuple(sorted(set(eps))))
    except ValueError as exc:
        raise UsageError(f"--epsilon: {exc}") from None
    sets = [craft_attack_set(sub.model, pool, e) for e in eps]
    write_adversarial_csv(args.out, sets)
    print(f"wrote {sum(len(s) for s in sets)} adversarial rows ({len(eps)} epsilon values) to {args.out}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    if bool(args.adversarial) == bool(args.features):
        raise UsageError("give exactly one of --adversarial or --features")
    if args.adversarial:
        groups = [(s.epsilon, s.perturbed, s.labels) for s in read_adversarial_csv(args.adversarial)]
    else:
        if not args.standardizer:
            raise UsageError("--features needs --standardizer")
        ds = _standardized(load_feature_csv(args.features), _read_standardizer(args.standardizer))
        groups = [(0.0, ds.X, ds.y)]
    rows = []
    for path in args.model:
        m = load_model(path)
        for eps, X, y in groups:
            p = score(m.model if m.kind == "mlp" else m, X, y, eps)
            rows.append({"model": str(path), "algorithm": m.kind, "epsilon": eps,
                         "f1": p.f1, "success_rate": p.success_rate, "confusion": p.confusion.tolist()})
            print(f"{m.kind:<14} eps={eps:<6g} macro-F1 {p.f1:.4f}  misclassified {p.success_rate:.4f}")
    if args.out:
        _write_json(args.out, rows)
    return EXIT_OK


def cmd_run(args) -> int:
    values = read_flat(args.config) if args.config else {}
    if args.synthetic:
        values = {k: v for k, v in values.items() if not k.startswith("input.")}
        values["input.synthetic"] = "true"
    if args.features:
        values = {k: v for k, v in values.items() if not k.startswith("input.")}
        values["input.features"] = args.features
    if args.defend:
        values["defense.enabled"] = "true"
    cfg = build_experiment_config(values, args.seed)
    out_dir = args.out_dir or cfg.output_dir
    try:
        result = run_experiment(cfg)
    except errors.GateFailure as exc:
        if exc.result is not None:
            write_reports(exc.result, out_dir)
            print(format_summary(exc.result))
        raise
    json_path, csv_path = write_reports(result, out_dir)
    print(format_summary(result))
    print()
    print(csv_path.read_text(), end="")
    print(f"\nreports: {json_path} {csv_path}")
    return EXIT_OK


# -- parser --------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cbm-advbench", description="Adversarial robustness study for vibration-based fault classifiers.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    f = sub.add_parser("features", help="extract features from a signal CSV")
    f.add_argument("--in", dest="inp", required=True, help="signal CSV")
    f.add_argument("--fs", type=float, required=True, help="sample rate in Hz")
    f.add_argument("--window", type=float, default=0.1, help="window length in seconds")
    f.add_argument("--label", required=True, help="health state of the whole recording")
    f.add_argument("--out", required=True, help="feature CSV to write")
    f.set_defaults(func=cmd_features)

    s = sub.add_parser("synth", help="generate the synthetic bearing corpus")
    s.add_argument("--config", help="config file; only synthetic.* keys are used")
    s.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a synthetic.* key (without the prefix)")
    s.add_argument("--seed", type=int)
    s.add_argument("--out-dir", default="synthetic")
    s.set_defaults(func=cmd_synth)

    t = sub.add_parser("train", help="train a classifier or the substitute network")
    t.add_argument("--features", required=True)
    t.add_argument("--algorithm", required=True, choices=list(ALGORITHMS) + ["substitute"])
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--standardizer", help="reuse a saved standardizer instead of fitting one")
    t.add_argument("--save-standardizer", help="write the fitted standardizer as JSON")
    t.add_argument("--out", required=True, help="model JSON to write")
    t.set_defaults(func=cmd_train)

    a = sub.add_parser("attack", help="craft FGSM samples on a saved substitute")
    a.add_argument("--substitute", required=True)
    a.add_argument("--features", required=True, help="raw feature CSV of the attack pool")
    a.add_argument("--standardizer", required=True)
    a.add_argument("--epsilon", type=float, action="append", help="repeatable; default is the standard sweep")
    a.add_argument("--out", required=True)
    a.set_defaults(func=cmd_attack)

    e = sub.add_parser("evaluate", help="score saved models")
    e.add_argument("--model", required=True, action="append")
    e.add_argument("--adversarial", help="adversarial CSV from the attack command")
    e.add_argument("--features", help="raw feature CSV (needs --standardizer)")
    e.add_argument("--standardizer")
    e.add_argument("--out", help="JSON results file")
    e.set_defaults(func=cmd_evaluate)

    for name in ("run", "defend"):
        r = sub.add_parser(name, help="run the full study" if name == "run" else "run with adversarial training")
        r.add_argument("--config")
        r.add_argument("--synthetic", action="store_true", help="use the synthetic corpus as input")
        r.add_argument("--features", help="feature CSV as input")
        r.add_argument("--seed", type=int)
        r.add_argument("--out-dir")
        if name == "run":
            r.add_argument("--defend", action="store_true")
        r.set_defaults(func=cmd_run, defend=name == "defend")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except errors.GateFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GATE
    except (errors.NonFiniteLoss, errors.SingularCovariance) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (errors.CbmError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
