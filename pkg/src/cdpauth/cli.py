"""Command-line entry points.

Verbs cover the full pipeline: synthesize a dataset, rerun copy attacks,
train either authentication pipeline, tune the one-class SVM, evaluate
checkpoints, render report tables, and ingest an external corpus.  Every
verb takes ``--config`` (YAML run configuration), ``--seed`` (overrides
the configured seed), and ``--out`` (overrides the configured output
directory).  Exit code 0 on success; failures print a diagnostic to
stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path
from typing import Sequence

from .channel import copy_attack, synthesize_dataset
from .config import ConfigError, RunConfig, from_mapping, load_config
from .core import FAKE_LABELS, Dataset, Label, ProbeRecord, derive_seed
from .dataio import (
    load_classifier,
    load_dataset,
    load_extractor,
    load_ocsvm,
    save_classifier,
    save_dataset,
    save_extractor,
    save_ocsvm,
)
from .ingest import ingest_external
from .ocsvm import select_hyperparams
from .oneclass import evaluate_oneclass, extract_feature_matrix, run_oneclass_protocol
from .report import run_report, write_scatter_csv
from .supervised import Metrics, evaluate, make_setup, run_supervised_protocol

__all__ = ["main", "metrics_to_jsonable", "metrics_from_jsonable"]

METRICS_FORMAT_VERSION = 1


# ---------------------------------------------------------------------------
# metrics serialization (confusion counts, so rates reproduce bit-exactly)
# ---------------------------------------------------------------------------

def metrics_to_jsonable(metrics: Metrics) -> dict:
    return {
        "miss_errors": metrics.miss_errors,
        "miss_trials": metrics.miss_trials,
        "fa_errors": {l.value: metrics.fa_errors[l] for l in FAKE_LABELS},
        "fa_trials": {l.value: metrics.fa_trials[l] for l in FAKE_LABELS},
    }


def metrics_from_jsonable(data: dict) -> Metrics:
    return Metrics(
        data["miss_errors"],
        data["miss_trials"],
        {Label(k): v for k, v in data["fa_errors"].items()},
        {Label(k): v for k, v in data["fa_trials"].items()},
    )


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(json.dumps(payload, indent=2, sort_keys=True))
        f.write("\n")


def _write_metrics(path: Path, name: str, all_metrics: Sequence[Metrics]) -> None:
    payload = {
        "format_version": METRICS_FORMAT_VERSION,
        "rows": [{"name": name, "runs": [metrics_to_jsonable(m) for m in all_metrics]}],
    }
    _write_json(path, payload)


def _metrics_line(tag: str, metrics: Metrics) -> str:
    miss = metrics.p_miss
    parts = [f"{tag}: p_miss={'-' if miss is None else f'{miss:.4f}'}"]
    for label in FAKE_LABELS:
        fa = metrics.p_fa(label)
        parts.append(f"p_fa[{label.value}]={'-' if fa is None else f'{fa:.4f}'}")
    return "  ".join(parts)


# ---------------------------------------------------------------------------
# shared option handling
# ---------------------------------------------------------------------------

def _load_run_config(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(args.config) if args.config else from_mapping({})
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    if args.out is not None:
        cfg = dataclasses.replace(cfg, out_dir=args.out)
    return cfg


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_data(args: argparse.Namespace) -> Dataset:
    dataset, _ = load_dataset(args.data)
    return dataset


# ---------------------------------------------------------------------------
# verbs
# ---------------------------------------------------------------------------

def _cmd_gen_dataset(args: argparse.Namespace) -> int:
    cfg = _load_run_config(args)
    synth = cfg.dataset
    if args.seed is not None:
        synth = dataclasses.replace(synth, master_seed=args.seed)
    dataset = synthesize_dataset(synth)
    out = _out_dir(cfg)
    rows = save_dataset(dataset, out)
    print(f"wrote {len(rows)} manifest rows ({synth.n_templates} templates) to {out}")
    return 0


def _cmd_attack(args: argparse.Namespace) -> int:
    cfg = _load_run_config(args)
    dataset = _load_data(args)
    originals = dataset.probes_in(labels=(Label.ORIGINAL,))
    if not originals:
        raise ValueError("dataset has no original probes to attack")
    probes: list[ProbeRecord] = list(originals)
    for probe in originals:
        for label in FAKE_LABELS:
            fake = copy_attack(
                probe.image,
                cfg.dataset.attacks[label],
                cfg.dataset.acquisition,
                derive_seed(cfg.seed, "attack", label.value, probe.template_id),
            )
            probes.append(ProbeRecord(fake, label, probe.template_id))
    attacked = Dataset(
        dataset.templates, probes, dataset.split_of, dataset.master_seed, dataset.geometry
    )
    out = _out_dir(cfg)
    rows = save_dataset(attacked, out)
    print(
        f"attacked {len(originals)} originals with {len(FAKE_LABELS)} presets; "
        f"wrote {len(rows)} manifest rows to {out}"
    )
    return 0


def _cmd_train_supervised(args: argparse.Namespace) -> int:
    cfg = _load_run_config(args)
    dataset = _load_data(args)
    setup = make_setup(cfg.pipeline.setup_id)
    runs = run_supervised_protocol(
        dataset, setup, cfg.supervised_hyper, seed=cfg.seed, n_runs=cfg.pipeline.runs
    )
    out = _out_dir(cfg)
    name = setup.setup_id.value
    for run in runs:
        path = out / f"classifier_{name}_run{run.run_index}.ckpt"
        save_classifier(
            path,
            run.model,
            extra={
                "run_index": run.run_index,
                "split_seed": run.split_seed,
                "train_seed": run.train_seed,
            },
        )
        print(_metrics_line(f"run{run.run_index}", run.metrics))
    _write_metrics(out / f"metrics_{name}.json", name, [r.metrics for r in runs])
    print(f"wrote {len(runs)} checkpoints and metrics_{name}.json to {out}")
    return 0


def _cmd_train_oneclass(args: argparse.Namespace) -> int:
    cfg = _load_run_config(args)
    dataset = _load_data(args)
    setup = cfg.pipeline.feature_setup_id
    runs = run_oneclass_protocol(
        dataset,
        setup,
        cfg.oneclass_hyper,
        beta=cfg.pipeline.beta,
        seed=cfg.seed,
        n_runs=cfg.pipeline.runs,
        nus=cfg.ocsvm_grid.nus,
        kernel_gammas=cfg.ocsvm_grid.kernel_gammas,
    )
    out = _out_dir(cfg)
    name = setup.name.lower()
    for run in runs:
        extra = {
            "run_index": run.run_index,
            "split_seed": run.split_seed,
            "train_seed": run.train_seed,
            "feature_setup": setup.value,
        }
        save_extractor(
            out / f"extractor_{name}_run{run.run_index}.ckpt",
            run.extractor,
            run.discriminators,
            extra=extra,
        )
        save_ocsvm(out / f"ocsvm_{name}_run{run.run_index}.ckpt", run.svm, extra=extra)
        print(_metrics_line(f"run{run.run_index}", run.metrics))
    _write_metrics(out / f"metrics_{name}.json", name, [r.metrics for r in runs])
    print(f"wrote {2 * len(runs)} checkpoints and metrics_{name}.json to {out}")
    return 0


def _cmd_fit_ocsvm(args: argparse.Namespace) -> int:
    cfg = _load_run_config(args)
    dataset = _load_data(args)
    model, discs = load_extractor(args.extractor)
    setup = cfg.pipeline.feature_setup_id
    train_orig = dataset.probes_in("train", (Label.ORIGINAL,))
    val_orig = dataset.probes_in("val", (Label.ORIGINAL,))
    if not train_orig or not val_orig:
        raise ValueError("dataset needs original probes in both train and val splits")
    f_train = extract_feature_matrix(model, discs, train_orig, dataset.templates, setup)
    f_val = extract_feature_matrix(model, discs, val_orig, dataset.templates, setup)
    svm, selection = select_hyperparams(
        f_train, f_val, nus=cfg.ocsvm_grid.nus, gammas=cfg.ocsvm_grid.kernel_gammas
    )
    out = _out_dir(cfg)
    path = out / "ocsvm.ckpt"
    save_ocsvm(
        path,
        svm,
        extra={
            "feature_setup": setup.value,
            "selection": [
                {"nu": s.nu, "kernel_gamma": s.kernel_gamma, "val_p_miss": s.val_p_miss}
                for s in selection
            ],
        },
    )
    print(f"selected nu={svm.nu} kernel_gamma={svm.kernel_gamma}; wrote {path}")
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    cfg = _load_run_config(args)
    dataset = _load_data(args)
    probes = dataset.probes_in(args.split)
    if not probes:
        raise ValueError(f"no probes in split {args.split!r}")
    if args.classifier and (args.extractor or args.svm):
        raise ValueError("pass either --classifier or --extractor with --svm, not both")
    if args.classifier:
        model = load_classifier(args.classifier)
        metrics = evaluate(model, probes)
        name = args.name or "supervised"
    elif args.extractor and args.svm:
        extractor, discs = load_extractor(args.extractor)
        svm = load_ocsvm(args.svm)
        setup = cfg.pipeline.feature_setup_id
        metrics = evaluate_oneclass(svm, extractor, discs, probes, dataset.templates, setup)
        name = args.name or setup.name.lower()
        if args.scatter:
            features = extract_feature_matrix(
                extractor, discs, probes, dataset.templates, setup
            )
            labels = [p.label.value for p in probes]
            scatter_path = _out_dir(cfg) / f"{args.scatter}_scatter.csv"
            write_scatter_csv(scatter_path, features, labels)
            print(f"scatter: {scatter_path}")
    else:
        raise ValueError("pass --classifier, or --extractor together with --svm")
    out = _out_dir(cfg)
    _write_metrics(out / f"metrics_{name}.json", name, [metrics])
    print(_metrics_line(f"{name}[{args.split}]", metrics))
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    cfg = _load_run_config(args)
    rows: list[tuple[str, list[Metrics]]] = []
    for path in args.metrics:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
        version = data.get("format_version")
        if version != METRICS_FORMAT_VERSION:
            raise ValueError(f"{path}: metrics format version {version!r} is not supported")
        for row in data["rows"]:
            rows.append((row["name"], [metrics_from_jsonable(r) for r in row["runs"]]))
    paths = run_report(rows, _out_dir(cfg), stem=args.stem)
    for kind, path in sorted(paths.items()):
        print(f"{kind}: {path}")
    return 0


def _cmd_ingest(args: argparse.Namespace) -> int:
    cfg = _load_run_config(args)
    mapping = None
    if args.map:
        mapping = {}
        for item in args.map:
            if "=" not in item:
                raise ValueError(f"--map entries look like label=folder, got {item!r}")
            label, folder = item.split("=", 1)
            mapping[label] = folder
    dataset, summary = ingest_external(
        args.data, mapping, symbol_size=args.symbol_size, seed=cfg.seed
    )
    out = _out_dir(cfg)
    rows = save_dataset(dataset, out)
    print(summary.describe())
    print(f"wrote {len(rows)} manifest rows to {out}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML run configuration file")
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("--out", help="override the configured output directory")

    parser = argparse.ArgumentParser(
        prog="cdpauth", description="Copy-detection-pattern authentication pipelines."
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("gen-dataset", parents=[common], help="synthesize a dataset")
    p.set_defaults(func=_cmd_gen_dataset)

    p = sub.add_parser(
        "attack", parents=[common], help="rerun copy attacks on a dataset's originals"
    )
    p.add_argument("--data", required=True, help="dataset directory (manifest + images)")
    p.set_defaults(func=_cmd_attack)

    p = sub.add_parser(
        "train-supervised", parents=[common], help="train the binary classifier protocol"
    )
    p.add_argument("--data", required=True, help="dataset directory (manifest + images)")
    p.set_defaults(func=_cmd_train_supervised)

    p = sub.add_parser(
        "train-oneclass", parents=[common], help="train the one-class extractor protocol"
    )
    p.add_argument("--data", required=True, help="dataset directory (manifest + images)")
    p.set_defaults(func=_cmd_train_oneclass)

    p = sub.add_parser(
        "fit-ocsvm", parents=[common], help="tune a one-class SVM on extractor features"
    )
    p.add_argument("--data", required=True, help="dataset directory (manifest + images)")
    p.add_argument("--extractor", required=True, help="extractor checkpoint")
    p.set_defaults(func=_cmd_fit_ocsvm)

    p = sub.add_parser("eval", parents=[common], help="evaluate a checkpoint on a split")
    p.add_argument("--data", required=True, help="dataset directory (manifest + images)")
    p.add_argument("--classifier", help="supervised classifier checkpoint")
    p.add_argument("--extractor", help="one-class extractor checkpoint")
    p.add_argument("--svm", help="one-class SVM checkpoint")
    p.add_argument("--split", default="test", choices=("train", "val", "test"))
    p.add_argument("--name", help="row name used in the metrics file")
    p.add_argument("--scatter", help="also write a PCA scatter CSV under this stem")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("report", parents=[common], help="render metrics files as tables")
    p.add_argument("metrics", nargs="+", help="metrics JSON files from training or eval")
    p.add_argument("--stem", default="table", help="output file stem")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser(
        "ingest", parents=[common], help="normalize an external label-per-folder corpus"
    )
    p.add_argument("--data", required=True, help="corpus root directory")
    p.add_argument(
        "--map",
        action="append",
        metavar="LABEL=FOLDER",
        help="label-to-subfolder mapping entry (repeatable)",
    )
    p.add_argument("--symbol-size", type=int, default=1, help="symbol size of ingested templates")
    p.set_defaults(func=_cmd_ingest)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
