"""Dataset and model persistence.

Datasets are materialized as a directory of 8-bit PNG images plus a CSV
manifest (fixed header: format_version, path, template_id, label, split)
and a JSON sidecar carrying the seeds and geometry that pixels alone
cannot encode.  Float images are quantized by round(v*255) on save and
mapped back as byte/255 on load, so a save/load/save cycle is bit-exact.

Trained models are stored in a single binary checkpoint file: magic
bytes, a little-endian format version, a JSON header, then one ``.npy``
block per parameter array.  Round-trips are bit-exact and a version
mismatch is rejected up front.
"""

from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np
from PIL import Image

from . import ocsvm, oneclass, supervised
from .core import (
    SPLIT_NAMES,
    CodeImage,
    Dataset,
    DigitalTemplate,
    Label,
    ORIGINAL_PRINT,
    ProbeRecord,
    Provenance,
)

__all__ = [
    "FORMAT_VERSION",
    "MANIFEST_HEADER",
    "MANIFEST_NAME",
    "META_NAME",
    "DIGITAL_LABEL",
    "MANIFEST_LABELS",
    "ManifestRow",
    "save_dataset",
    "load_dataset",
    "CHECKPOINT_MAGIC",
    "CHECKPOINT_VERSION",
    "save_checkpoint",
    "load_checkpoint",
    "save_classifier",
    "load_classifier",
    "save_extractor",
    "load_extractor",
    "save_ocsvm",
    "load_ocsvm",
]

FORMAT_VERSION = 1
MANIFEST_NAME = "manifest.csv"
META_NAME = "dataset_meta.json"
MANIFEST_HEADER = ("format_version", "path", "template_id", "label", "split")

DIGITAL_LABEL = "digital"
MANIFEST_LABELS = (DIGITAL_LABEL,) + tuple(label.value for label in Label)


@dataclass(frozen=True)
class ManifestRow:
    """One manifest line; ``path`` is POSIX-relative to the dataset root."""

    format_version: int
    path: str
    template_id: str
    label: str
    split: str


# ---------------------------------------------------------------------------
# PNG helpers
# ---------------------------------------------------------------------------

def _write_png(path: Path, data: np.ndarray) -> None:
    mode = "L" if data.ndim == 2 else "RGB"
    Image.fromarray(data, mode=mode).save(path, format="PNG")


def _read_png(path: Path) -> np.ndarray:
    """8-bit pixel array, (h, w) grayscale or (h, w, 3) color."""
    with Image.open(path) as img:
        if img.mode == "L":
            return np.asarray(img, dtype=np.uint8)
        if img.mode == "1":
            return np.asarray(img.convert("L"), dtype=np.uint8)
        return np.asarray(img.convert("RGB"), dtype=np.uint8)


def _quantize(pixels: np.ndarray) -> np.ndarray:
    return np.rint(np.asarray(pixels, dtype=np.float64) * 255.0).astype(np.uint8)


# ---------------------------------------------------------------------------
# dataset save / load
# ---------------------------------------------------------------------------

def save_dataset(dataset: Dataset, directory: str | Path) -> list[ManifestRow]:
    """Write images, manifest, and metadata sidecar; return the manifest.

    Images land under ``images/`` with names derived from template id and
    label, so repeated saves of the same dataset are byte-identical.
    Repeated (template, label) probes get an occurrence suffix.
    """
    root = Path(directory)
    (root / "images").mkdir(parents=True, exist_ok=True)
    rows: list[ManifestRow] = []
    used: set[str] = set()

    def reserve(template_id: str, label: str) -> str:
        stem = f"{template_id}_{label}"
        name = f"images/{stem}.png"
        k = 1
        while name in used:
            k += 1
            name = f"images/{stem}_{k}.png"
        used.add(name)
        return name

    for tid, template in dataset.templates.items():
        split = dataset.split_of.get(tid)
        if split is None:
            raise ValueError(f"template {tid!r} has no split assignment")
        rel = reserve(tid, DIGITAL_LABEL)
        _write_png(root / rel, template.pixels * np.uint8(255))
        rows.append(ManifestRow(FORMAT_VERSION, rel, tid, DIGITAL_LABEL, split))
    for probe in dataset.probes:
        rel = reserve(probe.template_id, probe.label.value)
        _write_png(root / rel, _quantize(probe.image.pixels))
        rows.append(
            ManifestRow(
                FORMAT_VERSION,
                rel,
                probe.template_id,
                probe.label.value,
                dataset.split_of[probe.template_id],
            )
        )

    with open(root / MANIFEST_NAME, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(MANIFEST_HEADER)
        for row in rows:
            writer.writerow(
                (row.format_version, row.path, row.template_id, row.label, row.split)
            )

    m, s = dataset.geometry
    meta = {
        "format_version": FORMAT_VERSION,
        "master_seed": dataset.master_seed,
        "geometry": {"m": m, "s": s},
        "templates": {
            tid: {"seed": t.seed, "symbol_size": t.symbol_size}
            for tid, t in dataset.templates.items()
        },
    }
    with open(root / META_NAME, "w", encoding="utf-8") as f:
        json.dump(meta, f, indent=2, sort_keys=True)
        f.write("\n")
    return rows


def _parse_manifest(path: Path) -> list[ManifestRow]:
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        try:
            header = tuple(next(reader))
        except StopIteration:
            raise ValueError(f"{path}: manifest is empty") from None
        if header != MANIFEST_HEADER:
            raise ValueError(
                f"{path}: manifest header mismatch: expected "
                f"{','.join(MANIFEST_HEADER)}, got {','.join(header)}"
            )
        rows = []
        for n, fields in enumerate(reader, start=2):
            where = f"{path} row {n}"
            if len(fields) != len(MANIFEST_HEADER):
                raise ValueError(f"{where}: expected {len(MANIFEST_HEADER)} fields, got {len(fields)}")
            version_s, rel, tid, label, split = fields
            try:
                version = int(version_s)
            except ValueError:
                raise ValueError(f"{where}: non-integer format_version {version_s!r}") from None
            if version != FORMAT_VERSION:
                raise ValueError(
                    f"{where}: unsupported format_version {version} (expected {FORMAT_VERSION})"
                )
            if not tid:
                raise ValueError(f"{where}: empty template_id")
            if label not in MANIFEST_LABELS:
                raise ValueError(f"{where}: unknown label {label!r} (template {tid!r})")
            if split not in SPLIT_NAMES:
                raise ValueError(f"{where}: unknown split {split!r}")
            rows.append(ManifestRow(version, rel, tid, label, split))
    if not rows:
        raise ValueError(f"{path}: manifest has no data rows")
    return rows


def load_dataset(directory: str | Path) -> tuple[Dataset, list[ManifestRow]]:
    """Reverse of :func:`save_dataset`; fails with row-level diagnostics."""
    root = Path(directory)
    manifest_path = root / MANIFEST_NAME
    if not manifest_path.is_file():
        raise FileNotFoundError(f"{manifest_path}: manifest not found")
    meta_path = root / META_NAME
    if not meta_path.is_file():
        raise FileNotFoundError(f"{meta_path}: dataset metadata not found")
    rows = _parse_manifest(manifest_path)
    with open(meta_path, "r", encoding="utf-8") as f:
        meta = json.load(f)
    template_meta = meta.get("templates", {})

    for n, row in enumerate(rows, start=2):
        if not (root / row.path).is_file():
            raise ValueError(f"{manifest_path} row {n}: missing image file {row.path!r}")

    templates: dict[str, DigitalTemplate] = {}
    split_of: dict[str, str] = {}
    for n, row in enumerate(rows, start=2):
        if row.label != DIGITAL_LABEL:
            continue
        where = f"{manifest_path} row {n}"
        if row.template_id in templates:
            raise ValueError(f"{where}: duplicate digital row for template {row.template_id!r}")
        entry = template_meta.get(row.template_id)
        if entry is None:
            raise ValueError(f"{where}: template {row.template_id!r} missing from {META_NAME}")
        data = _read_png(root / row.path)
        if data.ndim != 2:
            raise ValueError(f"{where}: digital template must be grayscale")
        if not np.all(np.isin(data, (0, 255))):
            raise ValueError(f"{where}: digital template bytes must be 0 or 255")
        templates[row.template_id] = DigitalTemplate(
            pixels=(data // 255).astype(np.uint8),
            symbol_size=int(entry["symbol_size"]),
            template_id=row.template_id,
            seed=int(entry["seed"]),
        )
        split_of[row.template_id] = row.split

    probes: list[ProbeRecord] = []
    for n, row in enumerate(rows, start=2):
        if row.label == DIGITAL_LABEL:
            continue
        where = f"{manifest_path} row {n}"
        if row.template_id not in templates:
            raise ValueError(
                f"{where}: probe references template {row.template_id!r} with no digital row"
            )
        if row.split != split_of[row.template_id]:
            raise ValueError(
                f"{where}: split {row.split!r} contradicts the template's "
                f"digital row ({split_of[row.template_id]!r})"
            )
        label = Label(row.label)
        provenance = ORIGINAL_PRINT if label is Label.ORIGINAL else Provenance.fake(label)
        pixels = _read_png(root / row.path).astype(np.float64) / 255.0
        image = CodeImage(pixels, provenance, row.template_id)
        probes.append(ProbeRecord(image, label, row.template_id))

    geometry = (int(meta["geometry"]["m"]), int(meta["geometry"]["s"]))
    dataset = Dataset(templates, probes, split_of, int(meta["master_seed"]), geometry)
    return dataset, rows


# ---------------------------------------------------------------------------
# binary checkpoints
# ---------------------------------------------------------------------------

CHECKPOINT_MAGIC = b"CDPAUTH\x00"
CHECKPOINT_VERSION = 1


def save_checkpoint(
    path: str | Path,
    kind: str,
    arrays: Mapping[str, np.ndarray],
    meta: Mapping[str, object],
) -> None:
    """Magic + version + JSON header + one .npy block per array."""
    names = list(arrays)
    header = json.dumps(
        {"kind": kind, "meta": dict(meta), "arrays": names}, sort_keys=True
    ).encode("utf-8")
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<I", CHECKPOINT_VERSION))
        f.write(struct.pack("<Q", len(header)))
        f.write(header)
        for name in names:
            np.save(f, np.ascontiguousarray(arrays[name]), allow_pickle=False)


def load_checkpoint(path: str | Path) -> tuple[str, dict[str, np.ndarray], dict]:
    """Returns (kind, arrays, meta); rejects foreign files and other versions."""
    with open(path, "rb") as f:
        magic = f.read(len(CHECKPOINT_MAGIC))
        if magic != CHECKPOINT_MAGIC:
            raise ValueError(f"{path}: not a checkpoint file (bad magic)")
        (version,) = struct.unpack("<I", f.read(4))
        if version != CHECKPOINT_VERSION:
            raise ValueError(
                f"{path}: checkpoint format version {version} is not supported "
                f"(this build reads version {CHECKPOINT_VERSION})"
            )
        (header_len,) = struct.unpack("<Q", f.read(8))
        header = json.loads(f.read(header_len).decode("utf-8"))
        arrays = {name: np.load(f, allow_pickle=False) for name in header["arrays"]}
    return header["kind"], arrays, header["meta"]


def _expect_kind(path: str | Path, found: str, expected: str) -> None:
    if found != expected:
        raise ValueError(f"{path}: checkpoint holds {found!r}, expected {expected!r}")


# -- supervised classifier ---------------------------------------------------

def save_classifier(
    path: str | Path,
    model: supervised.ClassifierModel,
    extra: Mapping[str, object] | None = None,
) -> None:
    meta = {
        "side": model.side,
        "setup_id": model.setup_id.value,
        "seed": model.seed,
        "epochs_trained": model.epochs_trained,
        "best_epoch": model.best_epoch,
        "best_val_loss": model.best_val_loss,
        "extra": dict(extra) if extra else {},
    }
    save_checkpoint(path, "supervised-classifier", model.network.state_arrays(), meta)


def load_classifier(path: str | Path) -> supervised.ClassifierModel:
    kind, arrays, meta = load_checkpoint(path)
    _expect_kind(path, kind, "supervised-classifier")
    channels = tuple(arrays[f"c{i}.weight"].shape[0] for i in (1, 2, 3))
    network = supervised.ConvClassifier(int(meta["side"]), int(meta["seed"]), channels)
    network.load_state(arrays)
    return supervised.ClassifierModel(
        network=network,
        setup_id=supervised.SetupId(meta["setup_id"]),
        seed=int(meta["seed"]),
        epochs_trained=int(meta["epochs_trained"]),
        best_epoch=int(meta["best_epoch"]),
        best_val_loss=float(meta["best_val_loss"]),
    )


# -- one-class extractor (+ optional discriminators) -------------------------

def save_extractor(
    path: str | Path,
    model: oneclass.ExtractorModel,
    discs: oneclass.DiscriminatorPair | None = None,
    extra: Mapping[str, object] | None = None,
) -> None:
    arrays: dict[str, np.ndarray] = {}
    arrays.update(model.encoder.state_arrays())
    arrays.update(model.decoder.state_arrays())
    if discs is not None:
        arrays.update(discs.disc_t.state_arrays())
        arrays.update(discs.disc_x.state_arrays())
    meta = {
        "side": model.side,
        "variant": model.variant.value,
        "beta": model.beta,
        "seed": model.seed,
        "epochs_trained": model.epochs_trained,
        "best_epoch": model.best_epoch,
        "best_val_loss": model.best_val_loss,
        "has_discriminators": discs is not None,
        "extra": dict(extra) if extra else {},
    }
    save_checkpoint(path, "oneclass-extractor", arrays, meta)


def load_extractor(
    path: str | Path,
) -> tuple[oneclass.ExtractorModel, oneclass.DiscriminatorPair | None]:
    kind, arrays, meta = load_checkpoint(path)
    _expect_kind(path, kind, "oneclass-extractor")
    side, seed = int(meta["side"]), int(meta["seed"])

    def subset(prefix: str) -> dict[str, np.ndarray]:
        return {k: v for k, v in arrays.items() if k.startswith(prefix + ".")}

    base = arrays["encoder.c1.weight"].shape[0]
    encoder = oneclass.SkipNet(side, seed, "encoder", base)
    encoder.load_state(subset("encoder"))
    decoder = oneclass.SkipNet(side, seed, "decoder", base)
    decoder.load_state(subset("decoder"))
    model = oneclass.ExtractorModel(
        encoder=encoder,
        decoder=decoder,
        variant=oneclass.Variant(meta["variant"]),
        beta=float(meta["beta"]),
        seed=seed,
        epochs_trained=int(meta["epochs_trained"]),
        best_epoch=int(meta["best_epoch"]),
        best_val_loss=float(meta["best_val_loss"]),
    )
    discs = None
    if meta["has_discriminators"]:
        channels = tuple(arrays[f"disc_t.c{i}.weight"].shape[0] for i in (1, 2, 3))
        disc_t = oneclass.ConvDiscriminator(side, seed, "disc_t", channels)
        disc_t.load_state(subset("disc_t"))
        disc_x = oneclass.ConvDiscriminator(side, seed, "disc_x", channels)
        disc_x.load_state(subset("disc_x"))
        discs = oneclass.DiscriminatorPair(disc_t, disc_x)
    return model, discs


# -- OC-SVM -------------------------------------------------------------------

def save_ocsvm(
    path: str | Path, model: ocsvm.OcSvmModel, extra: Mapping[str, object] | None = None
) -> None:
    arrays = {
        "support_vectors": model.support_vectors,
        "alphas": model.alphas,
        "feature_mean": model.feature_mean,
        "feature_scale": model.feature_scale,
    }
    meta = {
        "rho": model.rho,
        "kernel": model.kernel,
        "kernel_gamma": model.kernel_gamma,
        "nu": model.nu,
        "n_train": model.n_train,
        "extra": dict(extra) if extra else {},
    }
    save_checkpoint(path, "ocsvm", arrays, meta)


def load_ocsvm(path: str | Path) -> ocsvm.OcSvmModel:
    kind, arrays, meta = load_checkpoint(path)
    _expect_kind(path, kind, "ocsvm")
    return ocsvm.OcSvmModel(
        support_vectors=arrays["support_vectors"],
        alphas=arrays["alphas"],
        rho=float(meta["rho"]),
        kernel=str(meta["kernel"]),
        kernel_gamma=float(meta["kernel_gamma"]),
        nu=float(meta["nu"]),
        n_train=int(meta["n_train"]),
        feature_mean=arrays["feature_mean"],
        feature_scale=arrays["feature_scale"],
    )
