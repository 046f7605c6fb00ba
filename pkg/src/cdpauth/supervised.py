"""Supervised original-vs-fake authentication.

A small convolutional classifier is trained on printed originals plus
whichever fake kinds the defender has in hand.  Five availability setups
are supported: all four fake kinds, or exactly one of them.  Evaluation
reports the miss rate over originals and a false-acceptance rate per fake
kind, all as exact ratios of integer counts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .core import FAKE_LABELS, CodeImage, Dataset, Label, ProbeRecord, derive_rng, derive_seed
from .nn import Adam, Conv2d, Dense, Module, Tensor
from .nn import engine
from .nn.engine import no_grad

__all__ = [
    "GAMMA_GRID",
    "SetupId",
    "SupervisedSetup",
    "SupervisedHyper",
    "ConvClassifier",
    "ClassifierModel",
    "Verdict",
    "Metrics",
    "SupervisedRun",
    "make_setup",
    "train_supervised",
    "classify",
    "classify_batch",
    "evaluate",
    "run_supervised_protocol",
]

# gamma correction grid for training-time augmentation: [0.4, 1.3] in steps of 0.2
GAMMA_GRID = (0.4, 0.6, 0.8, 1.0, 1.2)

# class indices for the two logits
_FAKE_CLASS = 0
_ORIGINAL_CLASS = 1


class SetupId(str, Enum):
    """Which fake kinds the defender can train on."""

    ALL_FAKES = "all_fakes"
    F1_WHITE = "f1_white"
    F1_GRAY = "f1_gray"
    F2_WHITE = "f2_white"
    F2_GRAY = "f2_gray"


@dataclass(frozen=True)
class SupervisedSetup:
    """A fake-availability setup: originals plus the listed fake labels."""

    setup_id: SetupId
    fake_labels: tuple[Label, ...]

    def __post_init__(self) -> None:
        sid = SetupId(self.setup_id)
        object.__setattr__(self, "setup_id", sid)
        labels = tuple(Label(l) for l in self.fake_labels)
        object.__setattr__(self, "fake_labels", labels)
        for label in labels:
            if label not in FAKE_LABELS:
                raise ValueError(f"{label.value!r} is not a fake label")
        if sid is SetupId.ALL_FAKES:
            if set(labels) != set(FAKE_LABELS):
                raise ValueError("all_fakes setup must include every fake label")
        else:
            if labels != (Label(sid.value),):
                raise ValueError(f"setup {sid.value!r} must include exactly its own fake label")


def make_setup(setup_id: SetupId | str) -> SupervisedSetup:
    sid = SetupId(setup_id)
    if sid is SetupId.ALL_FAKES:
        return SupervisedSetup(sid, FAKE_LABELS)
    return SupervisedSetup(sid, (Label(sid.value),))


@dataclass(frozen=True)
class SupervisedHyper:
    """Training hyperparameters.

    An epoch is ``n_originals // batch_originals`` balanced batches; each
    batch holds ``batch_originals`` originals and ``batch_fakes`` fakes.
    Early stopping keeps the best-validation-loss parameters and halts
    after ``patience`` epochs without improvement; it is armed only once
    ``min_epochs`` epochs have run, so an early plateau cannot end
    training before slow-to-emerge features are learned.

    Rejecting a genuine item is the costly mistake in authentication, so
    ``original_weight`` scales genuine samples in both the training and
    the validation cross-entropy.  Values above one push the decision
    boundary away from the originals, trading a little false-acceptance
    headroom for miss margins; 1.0 recovers the plain balanced loss.
    """

    epochs: int = 140
    lr: float = 1e-3
    batch_originals: int = 10
    batch_fakes: int = 11
    patience: int = 10
    min_epochs: int = 100
    augment: bool = True
    channels: tuple[int, int, int] = (4, 8, 16)
    original_weight: float = 2.0

    def __post_init__(self) -> None:
        if self.epochs < 1 or self.patience < 1:
            raise ValueError("epochs and patience must be positive")
        if self.min_epochs < 0:
            raise ValueError("min_epochs must be nonnegative")
        if self.batch_originals < 1 or self.batch_fakes < 1:
            raise ValueError("batch sizes must be positive")
        if not self.lr > 0.0:
            raise ValueError("learning rate must be positive")
        if not self.original_weight > 0.0:
            raise ValueError("original_weight must be positive")


class ConvClassifier(Module):
    """Three conv-relu-pool blocks and a dense head producing two logits."""

    def __init__(self, side: int, seed: int, channels: tuple[int, int, int] = (4, 8, 16)):
        if side < 8:
            raise ValueError(f"input side must be at least 8, got {side}")
        rng = derive_rng(seed, "classifier-init")
        c1, c2, c3 = channels
        self.side = side
        self.c1 = Conv2d(1, c1, 3, rng, "c1")
        self.c2 = Conv2d(c1, c2, 3, rng, "c2")
        self.c3 = Conv2d(c2, c3, 3, rng, "c3")
        reduced = side // 2 // 2 // 2
        self.head = Dense(c3 * reduced * reduced, 2, rng, "head")

    def __call__(self, x: Tensor) -> Tensor:
        h = engine.maxpool2(engine.relu(self.c1(x)))
        h = engine.maxpool2(engine.relu(self.c2(h)))
        h = engine.maxpool2(engine.relu(self.c3(h)))
        return self.head(engine.flatten(h))


@dataclass
class ClassifierModel:
    """A trained classifier plus the metadata needed to reuse it."""

    network: ConvClassifier
    setup_id: SetupId
    seed: int
    epochs_trained: int
    best_epoch: int
    best_val_loss: float

    @property
    def side(self) -> int:
        return self.network.side


class Verdict(str, Enum):
    ORIGINAL = "original"
    FAKE = "fake"


# ---------------------------------------------------------------------------
# array plumbing
# ---------------------------------------------------------------------------

def _image_plane(image: CodeImage, side: int) -> np.ndarray:
    """One grayscale plane, shape (side, side); color inputs are averaged."""
    px = image.pixels
    if px.ndim == 3:
        px = px.mean(axis=2)
    if px.shape != (side, side):
        raise ValueError(f"probe shape {px.shape} does not match model side {side}")
    return px


def _stack(images: Sequence[CodeImage], side: int) -> np.ndarray:
    return np.stack([_image_plane(img, side) for img in images])[:, None, :, :]


def _augment_batch(x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """A rotation/gamma pair drawn independently for every image."""
    ks = rng.integers(4, size=len(x))
    gammas = rng.choice(GAMMA_GRID, size=len(x))
    out = np.empty_like(x)
    for i in range(len(x)):
        plane = x[i]
        if ks[i]:
            plane = np.rot90(plane, k=int(ks[i]), axes=(1, 2))
        out[i] = plane ** gammas[i]
    return out


def _mean_ce(
    network: ConvClassifier,
    x: np.ndarray,
    y: np.ndarray,
    weights: np.ndarray | None = None,
    batch: int = 64,
) -> float:
    total = 0.0
    denom = 0.0
    with no_grad():
        for start in range(0, len(x), batch):
            xb = x[start : start + batch]
            yb = y[start : start + batch]
            if weights is None:
                loss = engine.softmax_cross_entropy(network(Tensor(xb)), yb)
                total += float(loss.data) * len(xb)
                denom += len(xb)
            else:
                wb = weights[start : start + batch]
                loss = engine.softmax_cross_entropy(network(Tensor(xb)), yb, weights=wb)
                total += float(loss.data) * float(wb.sum())
                denom += float(wb.sum())
    return total / denom


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------

def train_supervised(
    train_probes: Sequence[ProbeRecord],
    val_probes: Sequence[ProbeRecord],
    setup: SupervisedSetup,
    hyper: SupervisedHyper | None = None,
    seed: int = 0,
) -> ClassifierModel:
    """Train a binary classifier on originals plus the setup's fakes.

    ``train_probes`` must contain at least one original and at least one
    fake, and no fake label outside the setup.  Probes of other labels in
    ``val_probes`` are ignored so validation sees the same label universe
    as training.  The returned model carries the parameters that achieved
    the best validation cross-entropy.
    """
    hyper = hyper or SupervisedHyper()
    allowed = set(setup.fake_labels)

    originals = [p for p in train_probes if p.label is Label.ORIGINAL]
    fakes = [p for p in train_probes if p.label is not Label.ORIGINAL]
    for p in fakes:
        if p.label not in allowed:
            raise ValueError(
                f"training probe labeled {p.label.value!r} is outside setup {setup.setup_id.value!r}"
            )
    if not originals or not fakes:
        raise ValueError("training data must contain both originals and fakes")

    val_kept = [p for p in val_probes if p.label is Label.ORIGINAL or p.label in allowed]
    if not val_kept:
        raise ValueError("validation data contains no probes usable under this setup")

    side = originals[0].image.height
    x_orig = _stack([p.image for p in originals], side)
    x_fake = _stack([p.image for p in fakes], side)
    x_val = _stack([p.image for p in val_kept], side)
    y_val = np.array(
        [_ORIGINAL_CLASS if p.label is Label.ORIGINAL else _FAKE_CLASS for p in val_kept]
    )
    # weight 1.0 keeps the exact unweighted code path
    w_val = None
    if hyper.original_weight != 1.0:
        w_val = np.where(y_val == _ORIGINAL_CLASS, hyper.original_weight, 1.0)

    network = ConvClassifier(side, derive_seed(seed, "init"), channels=hyper.channels)
    opt = Adam(network.parameters(), lr=hyper.lr)
    n_orig, n_fake = len(originals), len(fakes)
    steps_per_epoch = max(1, n_orig // hyper.batch_originals)

    best_state = network.state_arrays()
    best_loss = _mean_ce(network, x_val, y_val, w_val)
    best_epoch = -1
    epoch = -1
    for epoch in range(hyper.epochs):
        rng = derive_rng(seed, "epoch", epoch)
        perm = rng.permutation(n_orig)
        for b in range(steps_per_epoch):
            oi = perm[b * hyper.batch_originals : (b + 1) * hyper.batch_originals]
            if oi.size == 0:
                oi = perm[: hyper.batch_originals]
            fi = rng.choice(n_fake, size=hyper.batch_fakes, replace=n_fake < hyper.batch_fakes)
            xb = np.concatenate([x_orig[oi], x_fake[fi]])
            yb = np.array([_ORIGINAL_CLASS] * len(oi) + [_FAKE_CLASS] * len(fi))
            if hyper.augment:
                xb = _augment_batch(xb, rng)
            wb = None
            if hyper.original_weight != 1.0:
                wb = np.where(yb == _ORIGINAL_CLASS, hyper.original_weight, 1.0)
            network.zero_grad()
            loss = engine.softmax_cross_entropy(network(Tensor(xb)), yb, weights=wb)
            loss.backward()
            opt.step()
        val_loss = _mean_ce(network, x_val, y_val, w_val)
        if val_loss < best_loss:
            best_loss = val_loss
            best_state = network.state_arrays()
            best_epoch = epoch
        elif epoch >= hyper.min_epochs and epoch - best_epoch >= hyper.patience:
            break

    network.load_state(best_state)
    return ClassifierModel(
        network=network,
        setup_id=setup.setup_id,
        seed=seed,
        epochs_trained=epoch + 1,
        best_epoch=best_epoch,
        best_val_loss=best_loss,
    )


# ---------------------------------------------------------------------------
# inference
# ---------------------------------------------------------------------------

def classify_batch(model: ClassifierModel, images: Sequence[CodeImage]) -> list[Verdict]:
    """Deterministic verdicts, one per image, order preserved.

    A probe is accepted only when the original logit strictly exceeds the
    fake logit; an exact tie rejects.
    """
    if not images:
        return []
    x = _stack(images, model.side)
    with no_grad():
        logits = model.network(Tensor(x)).data
    accept = logits[:, _ORIGINAL_CLASS] > logits[:, _FAKE_CLASS]
    return [Verdict.ORIGINAL if a else Verdict.FAKE for a in accept]


def classify(model: ClassifierModel, probe: CodeImage) -> Verdict:
    return classify_batch(model, [probe])[0]


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Metrics:
    """Error counts and the exact rates they imply.

    Rates are ``errors / trials``; a rate whose trial count is zero is
    absent (``None``), never reported as zero.
    """

    miss_errors: int
    miss_trials: int
    fa_errors: Mapping[Label, int]
    fa_trials: Mapping[Label, int]

    def __post_init__(self) -> None:
        counts = [self.miss_errors, self.miss_trials]
        counts += [*self.fa_errors.values(), *self.fa_trials.values()]
        if any(c < 0 for c in counts):
            raise ValueError("counts must be nonnegative")
        if self.miss_errors > self.miss_trials:
            raise ValueError("more misses than original trials")
        for label in self.fa_errors:
            if self.fa_errors[label] > self.fa_trials.get(label, 0):
                raise ValueError(f"more false accepts than trials for {label}")

    @property
    def p_miss(self) -> float | None:
        if self.miss_trials == 0:
            return None
        return self.miss_errors / self.miss_trials

    def p_fa(self, label: Label) -> float | None:
        label = Label(label)
        if self.fa_trials.get(label, 0) == 0:
            return None
        return self.fa_errors[label] / self.fa_trials[label]

    def p_fa_pooled(self, labels: Sequence[Label]) -> float | None:
        """False-acceptance rate with the given labels' counts pooled."""
        errors = sum(self.fa_errors.get(Label(l), 0) for l in labels)
        trials = sum(self.fa_trials.get(Label(l), 0) for l in labels)
        if trials == 0:
            return None
        return errors / trials

    def total_error(self) -> float:
        """Miss rate plus every defined per-label false-acceptance rate."""
        total = self.p_miss or 0.0
        for label in self.fa_trials:
            rate = self.p_fa(label)
            if rate is not None:
                total += rate
        return total


def evaluate(model: ClassifierModel, probes: Sequence[ProbeRecord]) -> Metrics:
    """Miss and per-fake-label false-acceptance rates over labeled probes."""
    if not probes:
        raise ValueError("cannot evaluate on an empty probe set")
    verdicts = classify_batch(model, [p.image for p in probes])
    miss_errors = miss_trials = 0
    fa_errors = {label: 0 for label in FAKE_LABELS}
    fa_trials = {label: 0 for label in FAKE_LABELS}
    for probe, verdict in zip(probes, verdicts):
        if probe.label is Label.ORIGINAL:
            miss_trials += 1
            if verdict is Verdict.FAKE:
                miss_errors += 1
        else:
            fa_trials[probe.label] += 1
            if verdict is Verdict.ORIGINAL:
                fa_errors[probe.label] += 1
    return Metrics(miss_errors, miss_trials, fa_errors, fa_trials)


# ---------------------------------------------------------------------------
# multi-run protocol
# ---------------------------------------------------------------------------

@dataclass
class SupervisedRun:
    run_index: int
    split_seed: int
    train_seed: int
    metrics: Metrics
    model: ClassifierModel = field(repr=False)


def run_supervised_protocol(
    dataset: Dataset,
    setup: SupervisedSetup,
    hyper: SupervisedHyper | None = None,
    seed: int = 0,
    n_runs: int = 5,
) -> list[SupervisedRun]:
    """Train and evaluate ``n_runs`` times under freshly drawn splits.

    Run ``r`` resplits the dataset with a seed derived from ``(seed,
    "split", r)`` and trains with a seed derived from ``(seed, "train",
    r)``; both seeds are recorded in the result.  Evaluation always runs
    on the full test split, so rates for fake kinds unseen in training
    are part of every run's metrics.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be positive")
    train_labels = (Label.ORIGINAL, *setup.fake_labels)
    runs: list[SupervisedRun] = []
    for r in range(n_runs):
        split_seed = derive_seed(seed, "split", r)
        train_seed = derive_seed(seed, "train", r)
        ds = dataset.resplit(split_seed)
        model = train_supervised(
            ds.probes_in("train", train_labels),
            ds.probes_in("val", train_labels),
            setup,
            hyper,
            seed=train_seed,
        )
        metrics = evaluate(model, ds.probes_in("test"))
        runs.append(SupervisedRun(r, split_seed, train_seed, metrics, model))
    return runs
