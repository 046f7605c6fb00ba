"""External dataset ingestion.

Normalizes a directory tree organized as one subfolder per label
(digital templates plus printed/faked probes) into the internal dataset
form.  Probes pair to templates by filename stem; probes without a
matching template are skipped and reported rather than failing the whole
ingest.  Color probes are kept 3-channel; digital templates are
binarized at mid-gray.  Splits are drawn per template from a seed, since
external corpora carry no split assignment of their own.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from PIL import Image

from .core import (
    CodeImage,
    Dataset,
    DigitalTemplate,
    Label,
    ORIGINAL_PRINT,
    ProbeRecord,
    Provenance,
    split_dataset,
)

__all__ = ["IMAGE_EXTENSIONS", "DEFAULT_LABEL_DIRS", "IngestSummary", "ingest_external"]

IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff")

DIGITAL_KEY = "digital"
DEFAULT_LABEL_DIRS: dict[str, str] = {
    DIGITAL_KEY: "digital",
    **{label.value: label.value for label in Label},
}


@dataclass(frozen=True)
class IngestSummary:
    """What an ingest run found, kept, and skipped."""

    n_templates: int
    n_probes: int
    labels: tuple[str, ...]
    skipped: tuple[tuple[str, str], ...]  # (label, stem) without a template

    def describe(self) -> str:
        lines = [
            f"ingested {self.n_templates} templates, {self.n_probes} probes "
            f"(labels: {', '.join(self.labels) if self.labels else 'none'})"
        ]
        for label, stem in self.skipped:
            lines.append(f"skipped unpaired probe: {label}/{stem} (no digital template)")
        return "\n".join(lines)


def _image_files(folder: Path) -> dict[str, Path]:
    """Stem -> file for every recognized image, rejecting stem collisions."""
    out: dict[str, Path] = {}
    for path in sorted(folder.iterdir()):
        if not path.is_file() or path.suffix.lower() not in IMAGE_EXTENSIONS:
            continue
        if path.stem in out:
            raise ValueError(f"{folder}: duplicate image stem {path.stem!r}")
        out[path.stem] = path
    return out


def _load_pixels(path: Path) -> np.ndarray:
    """Float pixels in [0, 1]; grayscale (h, w) or color (h, w, 3)."""
    with Image.open(path) as img:
        if img.mode in ("L", "1"):
            data = np.asarray(img.convert("L"), dtype=np.float64)
        else:
            data = np.asarray(img.convert("RGB"), dtype=np.float64)
    return data / 255.0


def _load_template(path: Path, stem: str, symbol_size: int) -> DigitalTemplate:
    data = _load_pixels(path)
    if data.ndim == 3:
        data = data.mean(axis=2)
    binary = (data >= 0.5).astype(np.uint8)
    return DigitalTemplate(
        pixels=binary, symbol_size=symbol_size, template_id=stem, seed=-1
    )


def ingest_external(
    directory: str | Path,
    label_dirs: Mapping[str, str] | None = None,
    symbol_size: int = 1,
    fractions: Sequence[float] = (0.4, 0.1, 0.5),
    seed: int = 0,
) -> tuple[Dataset, IngestSummary]:
    """Build a Dataset from a label-per-subfolder directory tree.

    ``label_dirs`` maps label names ("digital", "original", fake labels)
    to subfolder names.  With the default mapping, only the digital and
    original folders are mandatory; fake folders are used when present.
    An explicitly supplied mapping must name existing folders.
    """
    root = Path(directory)
    if not root.is_dir():
        raise ValueError(f"{root}: not a directory")

    explicit = label_dirs is not None
    mapping = dict(label_dirs) if explicit else dict(DEFAULT_LABEL_DIRS)
    unknown = sorted(set(mapping) - set(DEFAULT_LABEL_DIRS))
    if unknown:
        raise ValueError(f"unknown ingest label(s) {unknown}")
    if DIGITAL_KEY not in mapping:
        raise ValueError("ingest mapping must include the digital template folder")

    folders: dict[str, Path] = {}
    for label, sub in mapping.items():
        folder = root / sub
        if folder.is_dir():
            folders[label] = folder
        elif explicit or label in (DIGITAL_KEY, Label.ORIGINAL.value):
            raise ValueError(f"{folder}: required label folder is missing")

    template_files = _image_files(folders[DIGITAL_KEY])
    if not template_files:
        raise ValueError(f"{folders[DIGITAL_KEY]}: no digital templates found")
    templates: dict[str, DigitalTemplate] = {}
    side = None
    for stem, path in template_files.items():
        template = _load_template(path, stem, symbol_size)
        if side is None:
            side = template.side
        elif template.side != side:
            raise ValueError(
                f"{path}: template side {template.side} differs from {side}; "
                "all templates must share one geometry"
            )
        templates[stem] = template

    probes: list[ProbeRecord] = []
    skipped: list[tuple[str, str]] = []
    seen_labels: list[str] = []
    for label_name, folder in folders.items():
        if label_name == DIGITAL_KEY:
            continue
        label = Label(label_name)
        provenance = ORIGINAL_PRINT if label is Label.ORIGINAL else Provenance.fake(label)
        files = _image_files(folder)
        kept = False
        for stem, path in files.items():
            if stem not in templates:
                skipped.append((label_name, stem))
                continue
            image = CodeImage(_load_pixels(path), provenance, stem)
            probes.append(ProbeRecord(image, label, stem))
            kept = True
        if kept:
            seen_labels.append(label_name)
    if not probes:
        raise ValueError(f"{root}: no probes paired to any digital template")

    # A split needs one template per part; corpora too small to split are
    # evaluation material and land wholly in test.
    ids = list(templates)
    if len(ids) >= 3:
        split = split_dataset(len(ids), fractions, seed)
        split_of = {}
        for part, name in (
            (split.train_ids, "train"),
            (split.val_ids, "val"),
            (split.test_ids, "test"),
        ):
            for i in part:
                split_of[ids[i]] = name
    else:
        split_of = {tid: "test" for tid in ids}

    assert side is not None
    dataset = Dataset(templates, probes, split_of, master_seed=seed, geometry=(side, symbol_size))
    summary = IngestSummary(
        n_templates=len(templates),
        n_probes=len(probes),
        labels=tuple(seen_labels),
        skipped=tuple(skipped),
    )
    return dataset, summary
