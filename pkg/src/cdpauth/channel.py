"""Parametric print, acquisition, and copy-attack channel simulation.

The physical chain is modeled in reflectance units on [0, 1]:

1. ``print_sim``    ink/paper value mapping, dot gain (morphological growth
                    of dark regions), Gaussian PSF blur, additive noise.
2. ``acquire_sim``  bilinear resampling, per-channel gains, sensor gamma,
                    sensor noise.
3. ``copy_attack``  threshold estimation of the template from a genuine
                    image, reprint through an attacker press, re-acquisition
                    through the standard acquisition channel.

All stochastic steps draw from generators derived with
:func:`cdpauth.core.derive_seed`, so every probe is reproducible in
isolation from a master seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import ndimage

from .core import (
    CodeImage,
    Dataset,
    DigitalTemplate,
    FAKE_LABELS,
    Label,
    ORIGINAL_PRINT,
    ProbeRecord,
    Provenance,
    derive_rng,
    derive_seed,
    generate_template,
    split_dataset,
)

__all__ = [
    "PrintModel",
    "AcquisitionModel",
    "AttackModel",
    "default_print_model",
    "default_acquisition_model",
    "default_attack_presets",
    "validate_preset_family",
    "print_sim",
    "acquire_sim",
    "estimate_template",
    "copy_attack",
    "SynthesisConfig",
    "synthesize_dataset",
]


# ---------------------------------------------------------------------------
# channel parameter records
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PrintModel:
    """Press parameters for one printing pass."""

    ink_reflectance: float = 0.05
    paper_reflectance: float = 0.95
    dot_gain: int = 0  # growth radius of dark regions, pixels
    psf_sigma: float = 0.8  # Gaussian point-spread sigma, pixels
    noise_sigma: float = 0.02

    def __post_init__(self) -> None:
        if not 0.0 <= self.ink_reflectance < self.paper_reflectance <= 1.0:
            raise ValueError(
                "need 0 <= ink_reflectance < paper_reflectance <= 1, got "
                f"ink={self.ink_reflectance}, paper={self.paper_reflectance}"
            )
        if int(self.dot_gain) != self.dot_gain or self.dot_gain < 0:
            raise ValueError(f"dot_gain must be a nonnegative integer, got {self.dot_gain}")
        if self.psf_sigma < 0.0 or self.noise_sigma < 0.0:
            raise ValueError("psf_sigma and noise_sigma must be nonnegative")


@dataclass(frozen=True)
class AcquisitionModel:
    """Imaging-side parameters shared by verifier and attacker."""

    scale_factor: float = 1.0
    sensor_gamma: float = 1.0
    noise_sigma: float = 0.01
    channel_gains: tuple[float, ...] = (1.0,)

    def __post_init__(self) -> None:
        if not self.scale_factor > 0.0:
            raise ValueError(f"scale_factor must be positive, got {self.scale_factor}")
        if not self.sensor_gamma > 0.0:
            raise ValueError(f"sensor_gamma must be positive, got {self.sensor_gamma}")
        if self.noise_sigma < 0.0:
            raise ValueError("noise_sigma must be nonnegative")
        gains = tuple(float(g) for g in self.channel_gains)
        if len(gains) not in (1, 3) or any(g <= 0.0 for g in gains):
            raise ValueError("channel_gains must be 1 or 3 positive values")
        object.__setattr__(self, "channel_gains", gains)


@dataclass(frozen=True)
class AttackModel:
    """Copy attack: template estimation threshold plus the attacker press."""

    preset_name: Label
    reprint: PrintModel
    estimation_threshold: float = 0.5

    def __post_init__(self) -> None:
        if Label(self.preset_name) not in FAKE_LABELS:
            raise ValueError(f"attack preset must be a fake label, got {self.preset_name!r}")
        if not 0.0 < self.estimation_threshold < 1.0:
            raise ValueError(
                f"estimation_threshold must lie strictly in (0, 1), got {self.estimation_threshold}"
            )


def default_print_model() -> PrintModel:
    """Defender press used for genuine prints."""
    return PrintModel(
        ink_reflectance=0.05,
        paper_reflectance=0.95,
        dot_gain=0,
        psf_sigma=0.8,
        noise_sigma=0.02,
    )


def default_acquisition_model() -> AcquisitionModel:
    """Verifier-side acquisition applied to originals and fakes alike."""
    return AcquisitionModel(scale_factor=1.0, sensor_gamma=1.0, noise_sigma=0.01)


def default_attack_presets() -> dict[Label, AttackModel]:
    """The four copier presets: two presses, each on white and gray stock.

    Press 1 is a near-miss of the reference press: same ink and dot
    behavior, a slightly softer point spread, and a grainier deposit.
    Press 2 is a coarse copier: heavy dot gain, darker ink, much softer
    point spread, and the grainiest deposit.  Gray stock is darker than
    white stock on either press.  Print grain is ordered reference <
    press 1 < press 2 so that every cue separating fakes from originals
    grows monotonically with attack severity.
    """
    f1 = dict(ink_reflectance=0.05, dot_gain=0, psf_sigma=1.0, noise_sigma=0.05)
    f2 = dict(ink_reflectance=0.02, dot_gain=2, psf_sigma=1.4, noise_sigma=0.08)
    presets = {
        Label.F1_WHITE: AttackModel(Label.F1_WHITE, PrintModel(paper_reflectance=1.0, **f1)),
        Label.F1_GRAY: AttackModel(Label.F1_GRAY, PrintModel(paper_reflectance=0.8, **f1)),
        Label.F2_WHITE: AttackModel(Label.F2_WHITE, PrintModel(paper_reflectance=1.0, **f2)),
        Label.F2_GRAY: AttackModel(Label.F2_GRAY, PrintModel(paper_reflectance=0.8, **f2)),
    }
    validate_preset_family(presets)
    return presets


def validate_preset_family(presets: Mapping[Label, AttackModel]) -> None:
    """Cross-preset orderings every attack family must satisfy.

    Press 2 must have strictly larger dot gain than press 1, and gray stock
    must be strictly darker than white stock within each press.
    """
    missing = [l.value for l in FAKE_LABELS if l not in presets]
    if missing:
        raise ValueError(f"attack preset family is missing {missing}")
    f1_gain = min(presets[Label.F1_WHITE].reprint.dot_gain, presets[Label.F1_GRAY].reprint.dot_gain)
    f2_gain = min(presets[Label.F2_WHITE].reprint.dot_gain, presets[Label.F2_GRAY].reprint.dot_gain)
    if not f2_gain > f1_gain:
        raise ValueError(f"press 2 dot gain ({f2_gain}) must exceed press 1 ({f1_gain})")
    for white, gray in ((Label.F1_WHITE, Label.F1_GRAY), (Label.F2_WHITE, Label.F2_GRAY)):
        pw = presets[white].reprint.paper_reflectance
        pg = presets[gray].reprint.paper_reflectance
        if not pg < pw:
            raise ValueError(
                f"{gray.value} paper reflectance ({pg}) must be below {white.value} ({pw})"
            )


# ---------------------------------------------------------------------------
# printing
# ---------------------------------------------------------------------------

def print_sim(
    template: DigitalTemplate | np.ndarray,
    model: PrintModel,
    seed: int,
    template_id: str | None = None,
) -> CodeImage:
    """Render a binary template through a press.

    Value mapping sends 0 to ``ink_reflectance`` and 1 to
    ``paper_reflectance``; dark regions then grow by ``dot_gain`` pixels
    (grayscale minimum filter, Chebyshev radius), the result is blurred by a
    Gaussian PSF, and zero-mean Gaussian noise is added before clamping to
    [0, 1].  Accepts a raw binary array so attack reprints can render
    estimated templates that need not respect symbol-block structure.
    """
    if isinstance(template, DigitalTemplate):
        bits = template.pixels
        tid = template.template_id if template_id is None else template_id
    else:
        bits = np.asarray(template)
        if not np.all(np.isin(np.unique(bits), (0, 1))):
            raise ValueError("template array must be strictly binary")
        if template_id is None:
            raise ValueError("template_id is required when printing a raw array")
        tid = template_id
    refl = model.ink_reflectance + bits.astype(np.float64) * (
        model.paper_reflectance - model.ink_reflectance
    )
    if model.dot_gain > 0:
        size = 2 * int(model.dot_gain) + 1
        refl = ndimage.minimum_filter(refl, size=size, mode="nearest")
    if model.psf_sigma > 0.0:
        refl = ndimage.gaussian_filter(refl, sigma=model.psf_sigma, mode="nearest")
    if model.noise_sigma > 0.0:
        refl = refl + derive_rng(seed, "print-noise").normal(0.0, model.noise_sigma, refl.shape)
    refl = np.clip(refl, 0.0, 1.0)
    return CodeImage(refl, ORIGINAL_PRINT, tid)


# ---------------------------------------------------------------------------
# acquisition
# ---------------------------------------------------------------------------

def _resample_bilinear(img: np.ndarray, scale: float) -> np.ndarray:
    """Bilinear resampling with half-pixel centers and clamp-to-edge."""
    h, w = img.shape[:2]
    oh = int(round(h * scale))
    ow = int(round(w * scale))
    if oh < 1 or ow < 1:
        raise ValueError(f"scale {scale} collapses the image to zero size")
    if oh == h and ow == w and scale == 1.0:
        return img.copy()

    def axis_coords(n_in: int, n_out: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        u = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
        u = np.clip(u, 0.0, n_in - 1.0)
        lo = np.floor(u).astype(np.intp)
        hi = np.minimum(lo + 1, n_in - 1)
        return lo, hi, u - lo

    i0, i1, fi = axis_coords(h, oh)
    j0, j1, fj = axis_coords(w, ow)
    if img.ndim == 3:
        fi = fi[:, None, None]
        fj = fj[None, :, None]
    else:
        fi = fi[:, None]
        fj = fj[None, :]
    top = img[i0][:, j0] * (1.0 - fj) + img[i0][:, j1] * fj
    bot = img[i1][:, j0] * (1.0 - fj) + img[i1][:, j1] * fj
    return top * (1.0 - fi) + bot * fi


def acquire_sim(
    image: CodeImage,
    model: AcquisitionModel,
    seed: int,
    symbol_size: int | None = None,
) -> CodeImage:
    """Image a printed code through the acquisition channel.

    Resamples by ``scale_factor`` (bilinear, clamp-to-edge), applies
    per-channel gains (a mono input is expanded to three channels when three
    gains are given), sensor gamma, additive sensor noise, and clamps to
    [0, 1].  When ``symbol_size`` is known, scales that would render a symbol
    at under one pixel are rejected.
    """
    if image.provenance.kind == "digital":
        raise ValueError("acquisition applies to printed codes, not digital templates")
    if symbol_size is not None and symbol_size * model.scale_factor < 1.0:
        raise ValueError(
            f"scale {model.scale_factor} renders a {symbol_size}px symbol below one pixel"
        )
    out = _resample_bilinear(image.pixels, model.scale_factor)
    gains = model.channel_gains
    if len(gains) == 3:
        if out.ndim == 2:
            out = np.stack([out * g for g in gains], axis=2)
        else:
            out = out * np.asarray(gains)[None, None, :]
    else:
        out = out * gains[0]
    if model.sensor_gamma != 1.0:
        out = np.clip(out, 0.0, None) ** model.sensor_gamma
    if model.noise_sigma > 0.0:
        out = out + derive_rng(seed, "acquire-noise").normal(0.0, model.noise_sigma, out.shape)
    out = np.clip(out, 0.0, 1.0)
    return CodeImage(out, image.provenance, image.template_id)


# ---------------------------------------------------------------------------
# copy attack
# ---------------------------------------------------------------------------

def estimate_template(image: CodeImage, threshold: float = 0.5) -> np.ndarray:
    """Attacker's binary template estimate: pixels at/above threshold are paper."""
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must lie strictly in (0, 1), got {threshold}")
    px = image.pixels
    if px.ndim == 3:
        px = px.mean(axis=2)
    return (px >= threshold).astype(np.uint8)


def copy_attack(
    image: CodeImage,
    attack: AttackModel,
    acquisition: AcquisitionModel | None = None,
    seed: int = 0,
) -> CodeImage:
    """Produce a fake: estimate, reprint, and re-acquire a genuine code.

    ``image`` must be a printed or acquired original.  The attacker
    thresholds it into a template estimate, reprints that estimate through
    ``attack.reprint``, and the result is imaged through the standard
    acquisition channel (``acquisition``, defaulting to
    :func:`default_acquisition_model`).  The composition is exactly
    ``acquire_sim(print_sim(estimate_template(image)))`` with child seeds
    ``(seed, "reprint")`` and ``(seed, "reacquire")``.
    """
    if image.provenance.kind != "original_print":
        raise ValueError("copy attacks start from a genuine printed code")
    if acquisition is None:
        acquisition = default_acquisition_model()
    estimate = estimate_template(image, attack.estimation_threshold)
    printed = print_sim(
        estimate, attack.reprint, derive_seed(seed, "reprint"), template_id=image.template_id
    )
    reacquired = acquire_sim(printed, acquisition, derive_seed(seed, "reacquire"))
    return CodeImage(
        reacquired.pixels, Provenance.fake(attack.preset_name), image.template_id
    )


# ---------------------------------------------------------------------------
# dataset synthesis
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SynthesisConfig:
    """Everything needed to synthesize a dataset from a master seed."""

    n_templates: int = 300
    m: int = 60
    s: int = 4
    black_fraction: float = 0.5
    fractions: tuple[float, float, float] = (0.4, 0.1, 0.5)
    master_seed: int = 0
    print_model: PrintModel = field(default_factory=default_print_model)
    acquisition: AcquisitionModel = field(default_factory=default_acquisition_model)
    attacks: Mapping[Label, AttackModel] = field(default_factory=default_attack_presets)

    def __post_init__(self) -> None:
        if self.n_templates < 3:
            raise ValueError(f"need at least 3 templates to split, got {self.n_templates}")
        if self.s < 1 or self.m < self.s or self.m % self.s != 0:
            raise ValueError(f"side {self.m} is not a positive multiple of symbol size {self.s}")
        if not 0.0 < self.black_fraction < 1.0:
            raise ValueError(
                f"black_fraction must lie strictly in (0, 1), got {self.black_fraction}"
            )
        validate_preset_family(self.attacks)


def synthesize_dataset(config: SynthesisConfig) -> Dataset:
    """Generate templates, genuine probes, and all four fakes per template.

    Every probe's randomness is derived from the master seed and the
    template index, so any single row can be regenerated independently.
    """
    split = split_dataset(
        config.n_templates, config.fractions, derive_seed(config.master_seed, "split")
    )
    templates: dict[str, DigitalTemplate] = {}
    probes: list[ProbeRecord] = []
    width = max(4, len(str(config.n_templates - 1)))
    for i in range(config.n_templates):
        tid = f"{i:0{width}d}"
        template = generate_template(
            derive_seed(config.master_seed, "template", i),
            config.m,
            config.s,
            config.black_fraction,
            template_id=tid,
        )
        templates[tid] = template
        printed = print_sim(template, config.print_model, derive_seed(config.master_seed, "print", i))
        original = acquire_sim(
            printed,
            config.acquisition,
            derive_seed(config.master_seed, "acquire", i),
            symbol_size=config.s,
        )
        probes.append(ProbeRecord(original, Label.ORIGINAL, tid))
        for label in FAKE_LABELS:
            fake = copy_attack(
                original,
                config.attacks[label],
                config.acquisition,
                derive_seed(config.master_seed, "attack", label.value, i),
            )
            probes.append(ProbeRecord(fake, label, tid))
    ids = list(templates)
    split_of: dict[str, str] = {}
    for part, name in ((split.train_ids, "train"), (split.val_ids, "val"), (split.test_ids, "test")):
        for idx in part:
            split_of[ids[idx]] = name
    return Dataset(templates, probes, split_of, config.master_seed, (config.m, config.s))
