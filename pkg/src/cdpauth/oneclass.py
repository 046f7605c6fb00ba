"""One-class feature extraction for template-verified authentication.

An encoder maps an acquired code image to an estimate of its binary
template; a decoder maps that estimate back to print space.  Both are
trained only on originals.  Two loss variants exist: ``l1`` is plain
reconstruction, ``l2`` adds a pair of adversarial regularizers (one per
space) trained to tell real images from reconstructions.  Per-probe
scalar features (reconstruction errors and regularizer logits) feed a
one-class SVM downstream.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .core import (
    FAKE_LABELS,
    CodeImage,
    Dataset,
    DigitalTemplate,
    Label,
    ProbeRecord,
    derive_rng,
    derive_seed,
)
from .nn import Adam, Conv2d, Dense, Module, Tensor
from .nn import engine
from .nn.engine import no_grad
from . import ocsvm
from .supervised import Metrics

__all__ = [
    "ONECLASS_GAMMA_GRID",
    "Variant",
    "FeatureSetup",
    "SkipNet",
    "ConvDiscriminator",
    "ExtractorModel",
    "DiscriminatorPair",
    "ExtractorHyper",
    "OneClassRun",
    "train_extractor",
    "reconstruction_scores",
    "discriminator_scores",
    "extract_features",
    "extract_feature_matrix",
    "evaluate_oneclass",
    "run_oneclass_protocol",
]

# gamma correction grid for training-time augmentation: [0.5, 1.2] in steps of 0.1
ONECLASS_GAMMA_GRID = (0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.2)

# plateau detection compares validation loss this many epochs apart
_REINIT_LOOKBACK = 4


class Variant(str, Enum):
    """Extractor training objective.

    ``l1`` minimizes reconstruction error alone; ``l2`` additionally
    trains one discriminator per space and asks the extractor to fool
    them, pulling reconstruction statistics toward the real ones.
    """

    L1 = "l1"
    L2 = "l2"


class FeatureSetup(Enum):
    """Which scalars feed the one-class SVM, and from which variant."""

    RECON_L1 = 1  # (d_tt, d_xx) from an l1 extractor
    TT_DISC = 2  # (d_tt, d_t)
    XX_DISC = 3  # (d_xx, d_x)
    RECON_L2 = 4  # (d_tt, d_xx) from an l2 extractor
    ALL_L2 = 5  # (d_tt, d_t, d_xx, d_x)

    @property
    def variant(self) -> Variant:
        return Variant.L1 if self is FeatureSetup.RECON_L1 else Variant.L2

    @property
    def feature_names(self) -> tuple[str, ...]:
        return {
            FeatureSetup.RECON_L1: ("d_tt", "d_xx"),
            FeatureSetup.TT_DISC: ("d_tt", "d_t"),
            FeatureSetup.XX_DISC: ("d_xx", "d_x"),
            FeatureSetup.RECON_L2: ("d_tt", "d_xx"),
            FeatureSetup.ALL_L2: ("d_tt", "d_t", "d_xx", "d_x"),
        }[self]

    @property
    def needs_discriminators(self) -> bool:
        return any(name in ("d_t", "d_x") for name in self.feature_names)


# ---------------------------------------------------------------------------
# networks
# ---------------------------------------------------------------------------

class SkipNet(Module):
    """Encoder-decoder with skip connections and a sigmoid head.

    Two pooling stages, so the input side must be a positive multiple of
    4; the output shares the input's geometry and lies in [0, 1].
    """

    def __init__(self, side: int, seed: int, name: str, base: int = 4):
        if side < 8 or side % 4 != 0:
            raise ValueError(f"input side must be a multiple of 4 and at least 8, got {side}")
        rng = derive_rng(seed, "skipnet-init", name)
        self.side = side
        b = base
        self.c1 = Conv2d(1, b, 3, rng, f"{name}.c1")
        self.c2 = Conv2d(b, 2 * b, 3, rng, f"{name}.c2")
        self.c3 = Conv2d(2 * b, 4 * b, 3, rng, f"{name}.c3")
        self.c4 = Conv2d(6 * b, 2 * b, 3, rng, f"{name}.c4")
        self.c5 = Conv2d(3 * b, b, 3, rng, f"{name}.c5")
        self.head = Conv2d(b, 1, 1, rng, f"{name}.head")

    def __call__(self, x: Tensor) -> Tensor:
        h1 = engine.relu(self.c1(x))
        h2 = engine.relu(self.c2(engine.maxpool2(h1)))
        h3 = engine.relu(self.c3(engine.maxpool2(h2)))
        u2 = engine.concat_channels(engine.upsample2(h3), h2)
        h4 = engine.relu(self.c4(u2))
        u1 = engine.concat_channels(engine.upsample2(h4), h1)
        h5 = engine.relu(self.c5(u1))
        return engine.sigmoid(self.head(h5))


class ConvDiscriminator(Module):
    """Conv-pool stack ending in a single real-vs-generated logit."""

    def __init__(self, side: int, seed: int, name: str, channels: tuple[int, int, int] = (4, 8, 16)):
        if side < 8:
            raise ValueError(f"input side must be at least 8, got {side}")
        rng = derive_rng(seed, "disc-init", name)
        c1, c2, c3 = channels
        self.side = side
        self.c1 = Conv2d(1, c1, 3, rng, f"{name}.c1")
        self.c2 = Conv2d(c1, c2, 3, rng, f"{name}.c2")
        self.c3 = Conv2d(c2, c3, 3, rng, f"{name}.c3")
        reduced = side // 2 // 2 // 2
        self.head = Dense(c3 * reduced * reduced, 1, rng, f"{name}.head")

    def __call__(self, x: Tensor) -> Tensor:
        h = engine.maxpool2(engine.relu(self.c1(x)))
        h = engine.maxpool2(engine.relu(self.c2(h)))
        h = engine.maxpool2(engine.relu(self.c3(h)))
        return self.head(engine.flatten(h))


@dataclass
class ExtractorModel:
    """Trained encoder/decoder pair plus training metadata."""

    encoder: SkipNet
    decoder: SkipNet
    variant: Variant
    beta: float
    seed: int
    epochs_trained: int
    best_epoch: int
    best_val_loss: float

    @property
    def side(self) -> int:
        return self.encoder.side


@dataclass
class DiscriminatorPair:
    """Template-space and print-space discriminators (logit outputs)."""

    disc_t: ConvDiscriminator
    disc_x: ConvDiscriminator


@dataclass(frozen=True)
class ExtractorHyper:
    """Extractor training hyperparameters; see SupervisedHyper for the
    early-stopping scheme (best-validation checkpoint, warmup floor).

    A rare initialization lands the decoder on a plateau where validation
    loss falls by ~1e-3 per epoch instead of converging.  Plateaus are
    caught by their shallow slope: after ``reinit_epoch`` epochs, if the
    loss is still above ``reinit_floor`` and has improved by less than a
    factor of ``reinit_ratio`` over the last four epochs, training
    restarts from a reseeded initialization (at most ``max_reinits``
    times).  Restarts spend the same total epoch budget, and the reseed
    is derived from the training seed, so runs stay reproducible.
    """

    epochs: int = 60
    lr: float = 1e-3
    batch: int = 18
    patience: int = 10
    min_epochs: int = 30
    # keeps the BCE-scale adversarial term from swamping the MSE-scale
    # reconstruction term (~70x smaller per sample)
    adv_weight: float = 0.01
    augment: bool = True
    base: int = 4
    reinit_epoch: int = 14
    reinit_ratio: float = 1.5
    reinit_floor: float = 0.02
    max_reinits: int = 2

    def __post_init__(self) -> None:
        if self.epochs < 1 or self.patience < 1 or self.batch < 1:
            raise ValueError("epochs, patience, and batch must be positive")
        if self.min_epochs < 0:
            raise ValueError("min_epochs must be nonnegative")
        if not self.lr > 0.0:
            raise ValueError("learning rate must be positive")
        if self.adv_weight < 0.0:
            raise ValueError("adv_weight must be nonnegative")
        if self.base < 1:
            raise ValueError("base width must be positive")
        if self.reinit_epoch <= _REINIT_LOOKBACK:
            raise ValueError(f"reinit_epoch must exceed the {_REINIT_LOOKBACK}-epoch lookback")
        if not self.reinit_ratio > 0.0 or not self.reinit_floor > 0.0:
            raise ValueError("reinit_ratio and reinit_floor must be positive")
        if self.max_reinits < 0:
            raise ValueError("max_reinits must be nonnegative")


# ---------------------------------------------------------------------------
# array plumbing
# ---------------------------------------------------------------------------

def _probe_plane(image: CodeImage, side: int) -> np.ndarray:
    px = image.pixels
    if px.ndim == 3:
        px = px.mean(axis=2)
    if px.shape != (side, side):
        raise ValueError(f"probe shape {px.shape} does not match model side {side}")
    return px


def _template_plane(template: DigitalTemplate, side: int) -> np.ndarray:
    px = template.pixels
    if px.shape != (side, side):
        raise ValueError(f"template shape {px.shape} does not match model side {side}")
    return px.astype(np.float64)


def _paired_stacks(
    probes: Sequence[ProbeRecord],
    templates: Mapping[str, DigitalTemplate],
    side: int,
) -> tuple[np.ndarray, np.ndarray]:
    """(x, t) batches for original probes; every probe must pair up."""
    xs, ts = [], []
    for probe in probes:
        if probe.label is not Label.ORIGINAL:
            raise ValueError(
                f"one-class training admits only originals, got {probe.label.value!r}"
            )
        template = templates.get(probe.template_id)
        if template is None:
            raise ValueError(f"probe {probe.template_id!r} has no paired template")
        xs.append(_probe_plane(probe.image, side))
        ts.append(_template_plane(template, side))
    return np.stack(xs)[:, None], np.stack(ts)[:, None]


def _gamma_augment(x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Per-image gamma draw; the paired template is left untouched."""
    gammas = rng.choice(ONECLASS_GAMMA_GRID, size=len(x))
    return x ** gammas[:, None, None, None]


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------

def _recon_loss(
    encoder: SkipNet, decoder: SkipNet, x: np.ndarray, t: np.ndarray, beta: float
) -> tuple[Tensor, Tensor, Tensor]:
    """(loss, t_hat, x_hat); the decoder path is skipped when beta == 0."""
    t_hat = encoder(Tensor(x))
    loss = engine.mse_loss(t_hat, t)
    if beta > 0.0:
        x_hat = decoder(t_hat)
        loss = loss + beta * engine.mse_loss(x_hat, x)
    else:
        with no_grad():
            x_hat = decoder(Tensor(t_hat.data))
    return loss, t_hat, x_hat


def _val_recon(
    encoder: SkipNet, decoder: SkipNet, x: np.ndarray, t: np.ndarray, beta: float, chunk: int = 32
) -> float:
    total = 0.0
    with no_grad():
        for start in range(0, len(x), chunk):
            xb, tb = x[start : start + chunk], t[start : start + chunk]
            t_hat = encoder(Tensor(xb))
            part = float(engine.mse_loss(t_hat, tb).data)
            if beta > 0.0:
                part += beta * float(engine.mse_loss(decoder(t_hat), xb).data)
            total += part * len(xb)
    return total / len(x)


def train_extractor(
    train_probes: Sequence[ProbeRecord],
    templates: Mapping[str, DigitalTemplate],
    val_probes: Sequence[ProbeRecord],
    variant: Variant | str = Variant.L1,
    beta: float = 1.0,
    hyper: ExtractorHyper | None = None,
    seed: int = 0,
) -> tuple[ExtractorModel, DiscriminatorPair | None]:
    """Train the encoder/decoder on original probes paired with templates.

    Only original-labeled probes are admitted, and each must have its
    template in ``templates``.  Under ``l2`` the two discriminators are
    trained one step per extractor step on detached reconstructions, and
    the extractor earns an extra fooling term weighted by
    ``hyper.adv_weight``.  The returned extractor carries the parameters
    with the best validation reconstruction loss.
    """
    hyper = hyper or ExtractorHyper()
    variant = Variant(variant)
    if beta < 0.0:
        raise ValueError("beta must be nonnegative")
    if not train_probes:
        raise ValueError("training needs at least one original probe")
    if not val_probes:
        raise ValueError("validation needs at least one original probe")

    side = train_probes[0].image.height
    x_train, t_train = _paired_stacks(train_probes, templates, side)
    x_val, t_val = _paired_stacks(val_probes, templates, side)

    n = len(train_probes)
    steps_per_epoch = max(1, n // hyper.batch)

    reinits = 0
    consumed = 0
    while True:
        # first attempt reproduces the restart-free behavior exactly
        init_seed = seed if reinits == 0 else derive_seed(seed, "reinit", reinits)
        encoder = SkipNet(side, derive_seed(init_seed, "encoder"), "encoder", base=hyper.base)
        decoder = SkipNet(side, derive_seed(init_seed, "decoder"), "decoder", base=hyper.base)
        gen_opt = Adam(encoder.parameters() + decoder.parameters(), lr=hyper.lr)

        discs: DiscriminatorPair | None = None
        disc_opt = None
        if variant is Variant.L2:
            discs = DiscriminatorPair(
                ConvDiscriminator(side, derive_seed(init_seed, "disc_t"), "disc_t"),
                ConvDiscriminator(side, derive_seed(init_seed, "disc_x"), "disc_x"),
            )
            disc_opt = Adam(discs.disc_t.parameters() + discs.disc_x.parameters(), lr=hyper.lr)

        def _state() -> dict[str, np.ndarray]:
            state = {**encoder.state_arrays(), **decoder.state_arrays()}
            if discs is not None:
                state.update(discs.disc_t.state_arrays())
                state.update(discs.disc_x.state_arrays())
            return state

        def _restore(state: dict[str, np.ndarray]) -> None:
            enc_names = set(encoder.state_arrays())
            dec_names = set(decoder.state_arrays())
            encoder.load_state({k: v for k, v in state.items() if k in enc_names})
            decoder.load_state({k: v for k, v in state.items() if k in dec_names})
            if discs is not None:
                t_names = set(discs.disc_t.state_arrays())
                x_names = set(discs.disc_x.state_arrays())
                discs.disc_t.load_state({k: v for k, v in state.items() if k in t_names})
                discs.disc_x.load_state({k: v for k, v in state.items() if k in x_names})

        best_state = _state()
        best_loss = _val_recon(encoder, decoder, x_val, t_val, beta)
        best_epoch = -1
        epoch = -1
        plateau = False
        val_history: list[float] = []
        for epoch in range(hyper.epochs - consumed):
            rng = derive_rng(seed, "epoch", epoch)
            perm = rng.permutation(n)
            for b in range(steps_per_epoch):
                idx = perm[b * hyper.batch : (b + 1) * hyper.batch]
                if idx.size == 0:
                    idx = perm[: hyper.batch]
                xb = x_train[idx]
                tb = t_train[idx]
                if hyper.augment:
                    xb = _gamma_augment(xb, rng)

                # extractor step
                encoder.zero_grad()
                decoder.zero_grad()
                loss, t_hat, x_hat = _recon_loss(encoder, decoder, xb, tb, beta)
                if discs is not None and hyper.adv_weight > 0.0:
                    ones = np.ones((len(idx), 1))
                    fool = engine.bce_with_logits(discs.disc_t(t_hat), ones)
                    if beta > 0.0:
                        fool = fool + beta * engine.bce_with_logits(discs.disc_x(x_hat), ones)
                    loss = loss + hyper.adv_weight * fool
                loss.backward()
                gen_opt.step()

                # discriminator step on detached reconstructions
                if discs is not None and disc_opt is not None:
                    discs.disc_t.zero_grad()
                    discs.disc_x.zero_grad()
                    ones = np.ones((len(idx), 1))
                    zeros = np.zeros((len(idx), 1))
                    d_loss = engine.bce_with_logits(discs.disc_t(Tensor(tb)), ones)
                    d_loss = d_loss + engine.bce_with_logits(discs.disc_t(Tensor(t_hat.data)), zeros)
                    d_loss = d_loss + engine.bce_with_logits(discs.disc_x(Tensor(xb)), ones)
                    d_loss = d_loss + engine.bce_with_logits(discs.disc_x(Tensor(x_hat.data)), zeros)
                    d_loss.backward()
                    disc_opt.step()

            val_loss = _val_recon(encoder, decoder, x_val, t_val, beta)
            val_history.append(val_loss)
            if (
                epoch + 1 == hyper.reinit_epoch
                and reinits < hyper.max_reinits
                and val_loss > hyper.reinit_floor
                and val_history[-1 - _REINIT_LOOKBACK] < hyper.reinit_ratio * val_loss
            ):
                plateau = True
                break
            if val_loss < best_loss:
                best_loss = val_loss
                best_state = _state()
                best_epoch = epoch
            elif epoch >= hyper.min_epochs and epoch - best_epoch >= hyper.patience:
                break

        if not plateau:
            break
        reinits += 1
        consumed += hyper.reinit_epoch

    _restore(best_state)
    model = ExtractorModel(
        encoder=encoder,
        decoder=decoder,
        variant=variant,
        beta=beta,
        seed=seed,
        epochs_trained=epoch + 1,
        best_epoch=best_epoch,
        best_val_loss=best_loss,
    )
    return model, discs


# ---------------------------------------------------------------------------
# per-probe scores
# ---------------------------------------------------------------------------

def _reconstruct(model: ExtractorModel, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    with no_grad():
        t_hat = model.encoder(Tensor(x)).data
        x_hat = model.decoder(Tensor(t_hat)).data
    return t_hat, x_hat


def _per_sample_mse(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return ((a - b) ** 2).mean(axis=(1, 2, 3))


def reconstruction_scores(
    model: ExtractorModel, probe: CodeImage, template: DigitalTemplate
) -> tuple[float, float]:
    """(d_tt, d_xx): template- and print-space reconstruction errors."""
    x = _probe_plane(probe, model.side)[None, None]
    t = _template_plane(template, model.side)[None, None]
    t_hat, x_hat = _reconstruct(model, x)
    return float(_per_sample_mse(t, t_hat)[0]), float(_per_sample_mse(x, x_hat)[0])


def discriminator_scores(
    discs: DiscriminatorPair, t_hat: np.ndarray, x_hat: np.ndarray
) -> tuple[float, float]:
    """(d_t, d_x): discriminator logits on a reconstruction pair.

    Inputs are single-image planes shaped (side, side) or (1, 1, side,
    side) as produced by the extractor.
    """
    t_hat = np.asarray(t_hat, dtype=np.float64).reshape(1, 1, discs.disc_t.side, -1)
    x_hat = np.asarray(x_hat, dtype=np.float64).reshape(1, 1, discs.disc_x.side, -1)
    with no_grad():
        d_t = float(discs.disc_t(Tensor(t_hat)).data[0, 0])
        d_x = float(discs.disc_x(Tensor(x_hat)).data[0, 0])
    if not np.isfinite(d_t) or not np.isfinite(d_x):
        raise ValueError("discriminator produced a non-finite logit")
    return d_t, d_x


def _score_matrix(
    model: ExtractorModel,
    discs: DiscriminatorPair | None,
    x: np.ndarray,
    t: np.ndarray,
    setup: FeatureSetup,
    chunk: int = 32,
) -> np.ndarray:
    names = setup.feature_names
    rows = []
    with no_grad():
        for start in range(0, len(x), chunk):
            xb, tb = x[start : start + chunk], t[start : start + chunk]
            t_hat = model.encoder(Tensor(xb)).data
            x_hat = model.decoder(Tensor(t_hat)).data
            cols = {}
            if "d_tt" in names:
                cols["d_tt"] = _per_sample_mse(tb, t_hat)
            if "d_xx" in names:
                cols["d_xx"] = _per_sample_mse(xb, x_hat)
            if "d_t" in names:
                cols["d_t"] = discs.disc_t(Tensor(t_hat)).data[:, 0]
            if "d_x" in names:
                cols["d_x"] = discs.disc_x(Tensor(x_hat)).data[:, 0]
            rows.append(np.column_stack([cols[name] for name in names]))
    out = np.concatenate(rows)
    if not np.isfinite(out).all():
        raise ValueError("feature extraction produced non-finite values")
    return out


def extract_features(
    model: ExtractorModel,
    discs: DiscriminatorPair | None,
    probe: CodeImage,
    template: DigitalTemplate,
    setup: FeatureSetup,
) -> np.ndarray:
    """Ordered feature vector for one probe under the given setup."""
    setup = FeatureSetup(setup)
    if setup.variant is not model.variant:
        raise ValueError(
            f"setup {setup.name} expects a {setup.variant.value} extractor, "
            f"got {model.variant.value}"
        )
    if setup.needs_discriminators and discs is None:
        raise ValueError(f"setup {setup.name} needs discriminators")
    x = _probe_plane(probe, model.side)[None, None]
    t = _template_plane(template, model.side)[None, None]
    return _score_matrix(model, discs, x, t, setup)[0]


def extract_feature_matrix(
    model: ExtractorModel,
    discs: DiscriminatorPair | None,
    probes: Sequence[ProbeRecord],
    templates: Mapping[str, DigitalTemplate],
    setup: FeatureSetup,
) -> np.ndarray:
    """Feature rows for many probes (any labels), probe order preserved."""
    setup = FeatureSetup(setup)
    if setup.variant is not model.variant:
        raise ValueError(
            f"setup {setup.name} expects a {setup.variant.value} extractor, "
            f"got {model.variant.value}"
        )
    if setup.needs_discriminators and discs is None:
        raise ValueError(f"setup {setup.name} needs discriminators")
    xs, ts = [], []
    for probe in probes:
        template = templates.get(probe.template_id)
        if template is None:
            raise ValueError(f"probe {probe.template_id!r} has no paired template")
        xs.append(_probe_plane(probe.image, model.side))
        ts.append(_template_plane(template, model.side))
    return _score_matrix(model, discs, np.stack(xs)[:, None], np.stack(ts)[:, None], setup)


# ---------------------------------------------------------------------------
# end-to-end protocol
# ---------------------------------------------------------------------------

def evaluate_oneclass(
    svm: ocsvm.OcSvmModel,
    model: ExtractorModel,
    discs: DiscriminatorPair | None,
    probes: Sequence[ProbeRecord],
    templates: Mapping[str, DigitalTemplate],
    setup: FeatureSetup,
) -> Metrics:
    """Accept/reject every probe through the one-class decision."""
    setup = FeatureSetup(setup)
    features = extract_feature_matrix(model, discs, probes, templates, setup)
    accepted = ocsvm.decision_scores(svm, features) > 0.0
    miss_errors = miss_trials = 0
    fa_errors = {label: 0 for label in FAKE_LABELS}
    fa_trials = {label: 0 for label in FAKE_LABELS}
    for probe, ok in zip(probes, accepted):
        if probe.label is Label.ORIGINAL:
            miss_trials += 1
            if not ok:
                miss_errors += 1
        else:
            fa_trials[probe.label] += 1
            if ok:
                fa_errors[probe.label] += 1
    return Metrics(miss_errors, miss_trials, fa_errors, fa_trials)


@dataclass
class OneClassRun:
    run_index: int
    split_seed: int
    train_seed: int
    setup: FeatureSetup
    metrics: Metrics
    svm: ocsvm.OcSvmModel
    selection: list[ocsvm.SelectionRecord]
    extractor: ExtractorModel
    discriminators: DiscriminatorPair | None


def run_oneclass_protocol(
    dataset: Dataset,
    setup: FeatureSetup,
    hyper: ExtractorHyper | None = None,
    beta: float = 1.0,
    seed: int = 0,
    n_runs: int = 5,
    nus: Sequence[float] = (0.01, 0.02, 0.05, 0.1),
    kernel_gammas: Sequence[float] = (0.05, 0.1, 0.5, 1.0, 2.0),
) -> list[OneClassRun]:
    """Train, tune, and evaluate the one-class pipeline ``n_runs`` times.

    Each run resplits the dataset, trains the extractor on train-split
    originals, selects OC-SVM hyperparameters on val-split originals,
    and reports metrics over the full test split.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be positive")
    setup = FeatureSetup(setup)
    runs: list[OneClassRun] = []
    for r in range(n_runs):
        split_seed = derive_seed(seed, "split", r)
        train_seed = derive_seed(seed, "train", r)
        ds = dataset.resplit(split_seed)
        train_orig = ds.probes_in("train", (Label.ORIGINAL,))
        val_orig = ds.probes_in("val", (Label.ORIGINAL,))
        model, discs = train_extractor(
            train_orig, ds.templates, val_orig, setup.variant, beta, hyper, seed=train_seed
        )
        f_train = extract_feature_matrix(model, discs, train_orig, ds.templates, setup)
        f_val = extract_feature_matrix(model, discs, val_orig, ds.templates, setup)
        svm, selection = ocsvm.select_hyperparams(f_train, f_val, nus=nus, gammas=kernel_gammas)

        metrics = evaluate_oneclass(svm, model, discs, ds.probes_in("test"), ds.templates, setup)
        runs.append(
            OneClassRun(r, split_seed, train_seed, setup, metrics, svm, selection, model, discs)
        )
    return runs
