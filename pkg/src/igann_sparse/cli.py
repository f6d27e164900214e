"""Command-line front end.

Subcommands cover the full workflow: ``prep`` (CSV -> prepared artifact),
``train`` (prepared artifact -> model artifact), ``select`` (feature
selection via the sparse model or the lasso baseline), ``benchmark`` (the
repeated cross-validation protocol over a dataset registry), ``sweep``
(feature-count sweep) and ``shapes`` (per-feature shape-function export).

Options resolve in three layers: built-in defaults, then a JSON config file
passed with ``--config`` (one object per subcommand name), then explicit
flags. The resolved configuration and seed are embedded in every artifact.
Exit codes: 0 success, 2 usage error, 1 runtime error.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import lasso_select
from .data import (
    DataError,
    PreprocessConfig,
    kfold_split,
    load_csv,
    load_prepared,
    load_registry,
    preprocess,
    save_prepared,
)
from .evaluation import KNOWN_MODELS, run_benchmark, sweep_csv, sweep_features
from .gam import IGANNConfig, fit, load_model, save_model, selected_features, shape_functions
from .seeding import derive_seed

_TRAIN_DEFAULTS = {
    "k": 10,
    "rounds": 100,
    "lr": 0.1,
    "lam": 1e-3,
    "smax": None,
    "seed": 0,
    "val_fraction": 0.15,
    "patience": 5,
    "activation": "elu",
    "df_mode": "coefficients",
}


def _resolve(args: argparse.Namespace, file_section: dict, name: str, default):
    value = getattr(args, name, None)
    if value is not None:
        return value
    if name in file_section:
        return file_section[name]
    return default


def _file_section(args: argparse.Namespace, command: str) -> dict:
    path = getattr(args, "config", None)
    if not path:
        return {}
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise DataError(f"{path}: config file must hold a JSON object")
    section = doc.get(command, {})
    if not isinstance(section, dict):
        raise DataError(f"{path}: section {command!r} must be a JSON object")
    return section


def _train_config(args: argparse.Namespace, section: dict, sparse: bool, task: str | None) -> IGANNConfig:
    return IGANNConfig(
        k=int(_resolve(args, section, "k", _TRAIN_DEFAULTS["k"])),
        n_rounds=int(_resolve(args, section, "rounds", _TRAIN_DEFAULTS["rounds"])),
        learning_rate=float(_resolve(args, section, "lr", _TRAIN_DEFAULTS["lr"])),
        lam=float(_resolve(args, section, "lam", _TRAIN_DEFAULTS["lam"])),
        sparse=sparse,
        s_max=_maybe_int(_resolve(args, section, "smax", _TRAIN_DEFAULTS["smax"])),
        early_stop_patience=int(_resolve(args, section, "patience", _TRAIN_DEFAULTS["patience"])),
        val_fraction=float(_resolve(args, section, "val_fraction", _TRAIN_DEFAULTS["val_fraction"])),
        seed=int(_resolve(args, section, "seed", _TRAIN_DEFAULTS["seed"])),
        task=task,
        activation=str(_resolve(args, section, "activation", _TRAIN_DEFAULTS["activation"])),
        df_mode=str(_resolve(args, section, "df_mode", _TRAIN_DEFAULTS["df_mode"])),
    )


def _maybe_int(value):
    return None if value is None else int(value)


def _config_provenance(config: IGANNConfig) -> dict:
    out = {
        "k": config.k,
        "n_rounds": config.n_rounds,
        "learning_rate": config.learning_rate,
        "lam": config.lam,
        "sparse": config.sparse,
        "s_max": config.s_max,
        "early_stop_patience": config.early_stop_patience,
        "val_fraction": config.val_fraction,
        "seed": config.seed,
        "task": config.task,
        "activation": config.activation,
        "df_mode": config.df_mode,
    }
    return out


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _split_csv_arg(value: str | None) -> tuple[str, ...]:
    if not value:
        return ()
    return tuple(v.strip() for v in value.split(",") if v.strip())


def cmd_prep(args: argparse.Namespace) -> int:
    section = _file_section(args, "prep")
    id_cols = _split_csv_arg(_resolve(args, section, "id_cols", None))
    id_patterns = _split_csv_arg(_resolve(args, section, "id_patterns", None))
    task = _resolve(args, section, "task", None)
    raw = load_csv(args.data, target=args.target, id_columns=id_cols)
    prepared = preprocess(
        raw, PreprocessConfig(task=task, id_columns=id_cols, id_patterns=id_patterns)
    )
    out = Path(args.out)
    save_prepared(prepared, out)
    n_numeric = sum(1 for f in prepared.feature_names if prepared.groups[f][1] - prepared.groups[f][0] == 1
                    and f in prepared.column_names)
    summary = {
        "run_config": {
            "command": "prep",
            "data": str(args.data),
            "target": args.target,
            "task": task,
            "id_cols": list(id_cols),
            "id_patterns": list(id_patterns),
        },
        "n_rows": prepared.n,
        "n_features": len(prepared.feature_names),
        "n_columns": prepared.n_columns,
        "n_numeric_columns": n_numeric,
        "n_dummy_columns": prepared.n_columns - n_numeric,
        "task": prepared.task,
        "groups": {k: list(v) for k, v in prepared.groups.items()},
        "dropped": prepared.dropped,
        "class_labels": list(prepared.class_labels) if prepared.class_labels else None,
    }
    _write_json(out.with_suffix(out.suffix + ".summary.json"), summary)
    print(f"prepared {prepared.n} rows x {prepared.n_columns} columns -> {out}")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    section = _file_section(args, "train")
    data = load_prepared(args.data)
    config = _train_config(args, section, sparse=bool(args.sparse), task=data.task)
    model = fit(data, config)
    out = Path(args.out)
    save_model(model, out)
    log = {
        "run_config": {"command": "train", "data": str(args.data), **_config_provenance(config)},
        "train_losses": model.train_losses,
        "val_losses": model.val_losses,
        "n_stages": len(model.stages),
        "empty_selection": model.empty_selection,
        "selected_features": list(selected_features(model)),
        "selection": None
        if model.selection is None
        else {
            "blocks": list(model.selection.blocks),
            "bic": model.selection.bic,
            "log_lik": model.selection.log_lik,
            "trace": [list(t) for t in model.selection.trace],
        },
    }
    _write_json(out.with_suffix(out.suffix + ".log.json"), log)
    print(f"trained {'sparse' if config.sparse else 'full'} model: {len(model.stages)} stages -> {out}")
    return 0


def cmd_select(args: argparse.Namespace) -> int:
    section = _file_section(args, "select")
    data = load_prepared(args.data)
    seed = int(_resolve(args, section, "seed", 0))
    if args.method == "igann":
        config = _train_config(args, section, sparse=True, task=data.task)
        config = replace(config, seed=seed)
        model = fit(data, config)
        features = list(selected_features(model))
        n_cols = int(model.active_cols.sum())
        detail = {"selection_bic": model.selection.bic if model.selection else None}
    else:
        folds = kfold_split(data.n, min(5, data.n), derive_seed(seed, "lasso-folds"))
        selection = lasso_select(data, folds)
        features = list(selection.features)
        n_cols = selection.n_selected_columns
        detail = {"lambda": selection.lam, "magnitudes": selection.coef_magnitudes}
    doc = {
        "run_config": {"command": "select", "data": str(args.data), "method": args.method, "seed": seed},
        "method": args.method,
        "features": features,
        "n_selected_columns": n_cols,
        "n_columns": data.n_columns,
        "pct_selected": n_cols / data.n_columns,
        **detail,
    }
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_benchmark(args: argparse.Namespace) -> int:
    section = _file_section(args, "benchmark")
    registry = load_registry(args.registry)
    models = list(_split_csv_arg(_resolve(args, section, "models", None)) or KNOWN_MODELS)
    repeats = int(_resolve(args, section, "repeats", 20))
    folds = int(_resolve(args, section, "folds", 5))
    config = _train_config(args, section, sparse=False, task=None)
    report = run_benchmark(registry, models, repeats=repeats, folds=folds, config=config)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "report.json").write_text(report.to_json(), encoding="utf-8")
    (outdir / "report.txt").write_text(report.to_text(), encoding="utf-8")
    sys.stdout.write(report.to_text())
    if report.errors:
        sys.stderr.write(f"{len(report.errors)} dataset(s) failed: {sorted(report.errors)}\n")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    section = _file_section(args, "sweep")
    data = load_prepared(args.data)
    counts = [int(c) for c in _split_csv_arg(args.counts)]
    if not counts:
        raise DataError("no counts given")
    folds = int(_resolve(args, section, "folds", 5))
    seed = int(_resolve(args, section, "seed", 0))
    config = _train_config(args, section, sparse=True, task=data.task)
    points = sweep_features(data, counts, config=config, folds=folds, seed=seed)
    provenance = {
        "command": "sweep", "data": str(args.data), "counts": counts,
        "folds": folds, "seed": seed, **_config_provenance(config),
    }
    Path(args.out).write_text(sweep_csv(points, provenance), encoding="utf-8")
    print(f"swept {len(counts)} support sizes -> {args.out}")
    return 0


def _safe_filename(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.=-]+", "_", name)


def cmd_shapes(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    provenance = {"command": "shapes", "model": str(args.model), "grid": args.grid}
    written = []
    for shape in shape_functions(model, grid_size=args.grid):
        lines = ["# " + json.dumps({**provenance, "feature": shape.feature}, sort_keys=True)]
        lines.append("grid,value")
        for g, v in zip(shape.grid, shape.values):
            lines.append(f"{float(g)!r},{float(v)!r}")
        path = outdir / f"{_safe_filename(shape.feature)}.csv"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        written.append(path.name)
    print(f"wrote {len(written)} shape files to {outdir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="igann-sparse",
        description="Sparse additive modelling with boosted ELMs and BIC block selection.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prep", help="preprocess a CSV into a prepared-dataset artifact")
    p.add_argument("--data", required=True, help="input CSV path")
    p.add_argument("--target", required=True, help="target column name")
    p.add_argument("--task", choices=["classification", "regression"])
    p.add_argument("--id-cols", dest="id_cols", help="comma-separated id columns to drop")
    p.add_argument("--id-patterns", dest="id_patterns", help="comma-separated id-column regexes")
    p.add_argument("--out", required=True, help="output artifact path")
    p.add_argument("--config", help="JSON config file")
    p.set_defaults(func=cmd_prep)

    def add_train_flags(sp, with_sparse=True):
        if with_sparse:
            sp.add_argument("--sparse", action="store_true", help="enable the sparsity layer")
        sp.add_argument("--k", type=int, help="hidden units per feature")
        sp.add_argument("--rounds", type=int, help="max boosting rounds")
        sp.add_argument("--lr", type=float, help="learning rate")
        sp.add_argument("--lambda", dest="lam", type=float, help="ridge strength")
        sp.add_argument("--smax", type=int, help="support-size cap for selection")
        sp.add_argument("--seed", type=int, help="master seed")
        sp.add_argument("--val-fraction", dest="val_fraction", type=float)
        sp.add_argument("--patience", type=int, help="early-stopping patience")
        sp.add_argument("--activation", choices=["elu", "tanh", "relu"])
        sp.add_argument("--df-mode", dest="df_mode", choices=["blocks", "coefficients"])
        sp.add_argument("--config", help="JSON config file")

    p = sub.add_parser("train", help="fit a model on a prepared-dataset artifact")
    p.add_argument("--data", required=True, help="prepared-dataset artifact")
    p.add_argument("--out", required=True, help="output model path")
    add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("select", help="run feature selection and emit a JSON feature list")
    p.add_argument("--data", required=True, help="prepared-dataset artifact")
    p.add_argument("--method", choices=["igann", "lasso"], default="igann")
    p.add_argument("--out", help="output JSON path (default: stdout)")
    add_train_flags(p, with_sparse=False)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("benchmark", help="run the repeated cross-validation benchmark")
    p.add_argument("--registry", required=True, help="dataset registry JSON")
    p.add_argument("--models", help=f"comma-separated subset of: {', '.join(KNOWN_MODELS)}")
    p.add_argument("--repeats", type=int, help="number of repeats (default 20)")
    p.add_argument("--folds", type=int, help="folds per repeat (default 5)")
    p.add_argument("--out", required=True, help="output directory")
    add_train_flags(p, with_sparse=False)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("sweep", help="feature-count sweep on one dataset")
    p.add_argument("--data", required=True, help="prepared-dataset artifact")
    p.add_argument("--counts", required=True, help="comma-separated support sizes")
    p.add_argument("--folds", type=int)
    p.add_argument("--out", required=True, help="output CSV path")
    add_train_flags(p, with_sparse=False)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("shapes", help="export per-feature shape functions as CSV")
    p.add_argument("--model", required=True, help="model artifact")
    p.add_argument("--grid", type=int, default=100, help="grid points per feature")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_shapes)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DataError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
