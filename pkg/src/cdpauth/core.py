"""Core domain objects shared by every authentication pipeline.

Binary digital templates, acquired code images, labeled probes, dataset
splits, and the seed-derivation rule that keeps the whole toolchain
reproducible.  Pixel convention used throughout: template value 0 is printed
with ink (black), value 1 is bare paper (white); acquired images live in
[0, 1] reflectance units.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "ROTATIONS",
    "SPLIT_NAMES",
    "Label",
    "FAKE_LABELS",
    "Provenance",
    "DIGITAL",
    "ORIGINAL_PRINT",
    "DigitalTemplate",
    "CodeImage",
    "ProbeRecord",
    "DatasetSplit",
    "Dataset",
    "derive_seed",
    "derive_rng",
    "generate_template",
    "augment",
    "split_dataset",
]

SPLIT_NAMES = ("train", "val", "test")
ROTATIONS = (0, 90, 180, 270)


# ---------------------------------------------------------------------------
# seed derivation
# ---------------------------------------------------------------------------

def derive_seed(seed: int, *path: int | str) -> int:
    """Derive a child seed from ``seed`` and a path of tags.

    This is the single seed-splitting rule of the package: SHA-256 over the
    canonical encoding of ``(seed, *path)``, truncated to 63 bits.  The same
    master seed and path give the same child seed on every platform and
    independently of call order, so any stage of a pipeline can be recomputed
    in isolation.
    """
    h = hashlib.sha256()
    h.update(repr(int(seed)).encode("ascii"))
    for part in path:
        if isinstance(part, bool) or not isinstance(part, (int, str)):
            raise TypeError(f"seed path parts must be int or str, got {part!r}")
        tag = f"i{part}" if isinstance(part, int) else f"s{part}"
        h.update(b"/")
        h.update(tag.encode("utf-8"))
    return int.from_bytes(h.digest()[:8], "big") >> 1


def derive_rng(seed: int, *path: int | str) -> np.random.Generator:
    """PCG64 generator seeded via :func:`derive_seed`."""
    return np.random.default_rng(derive_seed(seed, *path))


# ---------------------------------------------------------------------------
# labels and provenance
# ---------------------------------------------------------------------------

class Label(str, Enum):
    """Probe class label: the genuine class plus the four copy-fake kinds."""

    ORIGINAL = "original"
    F1_WHITE = "f1_white"
    F1_GRAY = "f1_gray"
    F2_WHITE = "f2_white"
    F2_GRAY = "f2_gray"

    def __str__(self) -> str:  # manifest-friendly
        return self.value


FAKE_LABELS: tuple[Label, ...] = (
    Label.F1_WHITE,
    Label.F1_GRAY,
    Label.F2_WHITE,
    Label.F2_GRAY,
)

_PROVENANCE_KINDS = ("digital", "original_print", "fake")


@dataclass(frozen=True)
class Provenance:
    """Where a code image came from.  Immutable once attached to an image."""

    kind: str
    fake_kind: Label | None = None

    def __post_init__(self) -> None:
        if self.kind not in _PROVENANCE_KINDS:
            raise ValueError(f"unknown provenance kind {self.kind!r}")
        if self.kind == "fake":
            if self.fake_kind not in FAKE_LABELS:
                raise ValueError("fake provenance requires one of the fake labels")
        elif self.fake_kind is not None:
            raise ValueError(f"{self.kind!r} provenance carries no fake kind")

    @classmethod
    def fake(cls, kind: Label) -> "Provenance":
        return cls("fake", Label(kind))

    def label(self) -> Label:
        """Probe label implied by this provenance."""
        if self.kind == "original_print":
            return Label.ORIGINAL
        if self.kind == "fake":
            assert self.fake_kind is not None
            return self.fake_kind
        raise ValueError("digital templates are not probes and carry no label")


DIGITAL = Provenance("digital")
ORIGINAL_PRINT = Provenance("original_print")


def _frozen_array(values: np.ndarray, dtype) -> np.ndarray:
    out = np.ascontiguousarray(values, dtype=dtype)
    out.setflags(write=False)
    return out


# ---------------------------------------------------------------------------
# records
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DigitalTemplate:
    """Binary m-by-m template built from constant s-by-s symbol blocks."""

    pixels: np.ndarray  # (m, m) uint8 in {0, 1}; 0 = ink, 1 = paper
    symbol_size: int
    template_id: str
    seed: int  # generation seed; -1 marks externally supplied templates

    def __post_init__(self) -> None:
        px = _frozen_array(self.pixels, np.uint8)
        if px.ndim != 2 or px.shape[0] != px.shape[1]:
            raise ValueError(f"template must be square, got shape {px.shape}")
        m = px.shape[0]
        s = self.symbol_size
        if s < 1 or m < s or m % s != 0:
            raise ValueError(f"side {m} is not a multiple of symbol size {s}")
        values = np.unique(px)
        if not np.all(np.isin(values, (0, 1))):
            raise ValueError("template pixels must be strictly binary")
        blocks = px.reshape(m // s, s, m // s, s)
        if not (blocks == blocks[:, :1, :, :1]).all():
            raise ValueError("template symbol blocks are not constant")
        if not self.template_id:
            raise ValueError("template_id must be non-empty")
        object.__setattr__(self, "pixels", px)

    @property
    def side(self) -> int:
        return self.pixels.shape[0]

    @property
    def symbols_per_side(self) -> int:
        return self.side // self.symbol_size

    def black_fraction(self) -> float:
        """Observed fraction of ink (zero-valued) symbols."""
        s = self.symbol_size
        sym = self.pixels[::s, ::s]
        return float(np.mean(sym == 0))


@dataclass(frozen=True)
class CodeImage:
    """Continuous-valued code image in [0, 1] with provenance attached."""

    pixels: np.ndarray  # (h, w) or (h, w, 3) float64
    provenance: Provenance
    template_id: str

    def __post_init__(self) -> None:
        px = _frozen_array(self.pixels, np.float64)
        if px.ndim == 3 and px.shape[2] == 1:
            px = _frozen_array(px[:, :, 0], np.float64)
        if px.ndim not in (2, 3) or (px.ndim == 3 and px.shape[2] != 3):
            raise ValueError(f"expected (h, w) or (h, w, 3) pixels, got shape {px.shape}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError("image must contain at least one pixel")
        if not np.isfinite(px).all():
            raise ValueError("image contains non-finite values")
        if px.min() < 0.0 or px.max() > 1.0:
            raise ValueError("image values must lie in [0, 1]")
        if not self.template_id:
            raise ValueError("template_id must be non-empty")
        object.__setattr__(self, "pixels", px)

    @property
    def channels(self) -> int:
        return 1 if self.pixels.ndim == 2 else self.pixels.shape[2]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True)
class ProbeRecord:
    """A code image presented for authentication, with its ground truth."""

    image: CodeImage
    label: Label
    template_id: str

    def __post_init__(self) -> None:
        if self.image.provenance.kind == "digital":
            raise ValueError("digital templates cannot be probes")
        implied = self.image.provenance.label()
        if Label(self.label) is not implied:
            raise ValueError(
                f"label {self.label!r} contradicts image provenance ({implied.value!r})"
            )
        if self.template_id != self.image.template_id:
            raise ValueError("probe and image disagree on template_id")


# ---------------------------------------------------------------------------
# template generation and augmentation
# ---------------------------------------------------------------------------

def generate_template(
    seed: int,
    m: int,
    s: int,
    black_fraction: float = 0.5,
    template_id: str | None = None,
) -> DigitalTemplate:
    """Generate a random binary template.

    Parameters
    ----------
    seed : int
        Generation seed; the result is a pure function of
        ``(seed, m, s, black_fraction)``.
    m : int
        Side length in pixels.  Must be a positive multiple of ``s``.
    s : int
        Symbol block size in pixels.
    black_fraction : float
        Probability that a symbol is ink (value 0).  Must lie strictly
        inside (0, 1): an all-white or all-black pattern carries no signal.
    """
    if s < 1 or m < s or m % s != 0:
        raise ValueError(f"side {m} is not a positive multiple of symbol size {s}")
    if not 0.0 < black_fraction < 1.0:
        raise ValueError(f"black_fraction must lie strictly in (0, 1), got {black_fraction}")
    rng = derive_rng(seed, "template")
    n = m // s
    black = rng.random((n, n)) < black_fraction
    symbols = np.where(black, 0, 1).astype(np.uint8)
    pixels = np.repeat(np.repeat(symbols, s, axis=0), s, axis=1)
    return DigitalTemplate(
        pixels=pixels,
        symbol_size=s,
        template_id=template_id if template_id is not None else f"t{seed}",
        seed=seed,
    )


def augment(image: CodeImage, rotation: int = 0, gamma: float = 1.0) -> CodeImage:
    """Right-angle rotation plus gamma correction, metadata preserved.

    ``rotation`` must be one of 0, 90, 180, 270 (degrees, counter-clockwise);
    ``gamma`` must be positive.  With ``rotation=0`` and ``gamma=1`` the pixel
    array is returned bit-exact.
    """
    if rotation not in ROTATIONS:
        raise ValueError(f"rotation must be one of {ROTATIONS}, got {rotation}")
    if not gamma > 0.0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    px = np.rot90(image.pixels, k=rotation // 90, axes=(0, 1))
    if gamma != 1.0:
        px = px**gamma
    return CodeImage(np.ascontiguousarray(px), image.provenance, image.template_id)


# ---------------------------------------------------------------------------
# dataset splitting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DatasetSplit:
    """Disjoint train/val/test index sets covering range(n)."""

    train_ids: tuple[int, ...]
    val_ids: tuple[int, ...]
    test_ids: tuple[int, ...]
    fractions: tuple[float, float, float]
    seed: int

    def __post_init__(self) -> None:
        parts = (self.train_ids, self.val_ids, self.test_ids)
        if any(len(p) == 0 for p in parts):
            raise ValueError("every split part must be non-empty")
        merged = sorted(i for p in parts for i in p)
        n = len(merged)
        if merged != list(range(n)):
            raise ValueError("split parts must be disjoint and cover range(n)")

    @property
    def n(self) -> int:
        return len(self.train_ids) + len(self.val_ids) + len(self.test_ids)

    def name_of(self, index: int) -> str:
        if index in set(self.train_ids):
            return "train"
        if index in set(self.val_ids):
            return "val"
        return "test"


def _partition_sizes(n: int, fractions: Sequence[float]) -> list[int]:
    """Largest-remainder apportionment, with every part kept non-empty."""
    base = [int(np.floor(f * n)) for f in fractions]
    remainders = [f * n - b for f, b in zip(fractions, base)]
    short = n - sum(base)
    order = sorted(range(len(fractions)), key=lambda i: (-remainders[i], i))
    for i in order[:short]:
        base[i] += 1
    while 0 in base:  # n >= len(fractions) guarantees this terminates
        base[base.index(max(base))] -= 1
        base[base.index(0)] += 1
    return base


def split_dataset(
    n: int,
    fractions: Sequence[float] = (0.4, 0.1, 0.5),
    seed: int = 0,
) -> DatasetSplit:
    """Randomly split range(n) into train/val/test by template.

    Fractions must be positive and sum to 1 (within 1e-9).  Realized sizes
    match the fractions up to largest-remainder rounding, and every part is
    guaranteed non-empty (so n must be at least 3).
    """
    fractions = tuple(float(f) for f in fractions)
    if len(fractions) != 3:
        raise ValueError("exactly three fractions (train, val, test) required")
    if any(f <= 0.0 for f in fractions):
        raise ValueError(f"fractions must be positive, got {fractions}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions must sum to 1, got {sum(fractions)}")
    if n < 3:
        raise ValueError(f"need at least 3 templates to split, got {n}")
    sizes = _partition_sizes(n, fractions)
    perm = derive_rng(seed, "split").permutation(n)
    a, b = sizes[0], sizes[0] + sizes[1]
    return DatasetSplit(
        train_ids=tuple(int(i) for i in perm[:a]),
        val_ids=tuple(int(i) for i in perm[a:b]),
        test_ids=tuple(int(i) for i in perm[b:]),
        fractions=fractions,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# in-memory dataset
# ---------------------------------------------------------------------------

@dataclass
class Dataset:
    """Materialized dataset: templates, probes, and a split assignment."""

    templates: dict[str, DigitalTemplate]
    probes: list[ProbeRecord]
    split_of: dict[str, str]  # template_id -> "train" | "val" | "test"
    master_seed: int
    geometry: tuple[int, int]  # (m, s)

    def __post_init__(self) -> None:
        for tid in self.split_of:
            if self.split_of[tid] not in SPLIT_NAMES:
                raise ValueError(f"unknown split name {self.split_of[tid]!r}")
        for probe in self.probes:
            if probe.template_id not in self.templates:
                raise ValueError(f"probe references unknown template {probe.template_id!r}")

    @property
    def template_ids(self) -> list[str]:
        return list(self.templates)

    def probes_in(
        self,
        split: str | None = None,
        labels: Iterable[Label] | None = None,
    ) -> list[ProbeRecord]:
        """Probes filtered by split and/or label set, order preserved."""
        wanted = None if labels is None else {Label(l) for l in labels}
        out = []
        for probe in self.probes:
            if split is not None and self.split_of.get(probe.template_id) != split:
                continue
            if wanted is not None and probe.label not in wanted:
                continue
            out.append(probe)
        return out

    def resplit(self, seed: int, fractions: Sequence[float] | None = None) -> "Dataset":
        """Same templates and probes under a freshly drawn split."""
        ids = self.template_ids
        fracs = fractions
        if fracs is None:
            counts = [sum(1 for t in ids if self.split_of[t] == name) for name in SPLIT_NAMES]
            fracs = tuple(c / len(ids) for c in counts)
        split = split_dataset(len(ids), fracs, seed)
        split_of = {}
        for part, name in ((split.train_ids, "train"), (split.val_ids, "val"), (split.test_ids, "test")):
            for i in part:
                split_of[ids[i]] = name
        return Dataset(self.templates, self.probes, split_of, self.master_seed, self.geometry)
