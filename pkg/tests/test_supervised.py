"""Supervised classifier tests.

The separability test checks the conv net against a logistic-regression
oracle trained on the same scalar feature: if the oracle reaches zero
training error, the classifier must as well within its step budget.
"""

import numpy as np
import pytest

from cdpauth.channel import SynthesisConfig, synthesize_dataset
from cdpauth.core import (
    FAKE_LABELS,
    ORIGINAL_PRINT,
    CodeImage,
    Label,
    ProbeRecord,
    Provenance,
    derive_rng,
    derive_seed,
)
from cdpauth.supervised import (
    ClassifierModel,
    ConvClassifier,
    Metrics,
    SetupId,
    SupervisedHyper,
    SupervisedSetup,
    Verdict,
    classify,
    classify_batch,
    evaluate,
    make_setup,
    run_supervised_protocol,
    train_supervised,
)

SIDE = 16


# ---------------------------------------------------------------------------
# oracle: logistic regression on a scalar feature
# ---------------------------------------------------------------------------

def logistic_reaches_zero_error(values, labels, steps=500, lr=2.0):
    """Plain gradient descent on 1-d logistic regression."""
    v = np.asarray(values, dtype=float)
    y = np.asarray(labels, dtype=float)
    w = 0.0
    b = 0.0
    for _ in range(steps):
        p = 1.0 / (1.0 + np.exp(-(w * v + b)))
        g = p - y
        w -= lr * float(g @ v) / len(v)
        b -= lr * float(g.mean())
    return np.array_equal((w * v + b) > 0, y > 0.5)


# ---------------------------------------------------------------------------
# toy probe helpers
# ---------------------------------------------------------------------------

def flat_probe(value: float, label: Label, tid: str) -> ProbeRecord:
    """A probe whose image is a constant plane at the given brightness."""
    prov = ORIGINAL_PRINT if label is Label.ORIGINAL else Provenance.fake(label)
    image = CodeImage(np.full((SIDE, SIDE), value), prov, tid)
    return ProbeRecord(image, label, tid)


def noise_probe(rng: np.random.Generator, label: Label, tid: str) -> ProbeRecord:
    prov = ORIGINAL_PRINT if label is Label.ORIGINAL else Provenance.fake(label)
    image = CodeImage(rng.random((SIDE, SIDE)), prov, tid)
    return ProbeRecord(image, label, tid)


def blob_probes(seed: int, n_per_class: int, fake_label=Label.F1_WHITE):
    """Two brightness blobs: originals near 0.7, fakes near 0.35."""
    rng = derive_rng(seed, "blobs")
    probes = []
    values = []
    targets = []
    for i in range(n_per_class):
        v = float(np.clip(0.70 + 0.05 * rng.standard_normal(), 0.05, 0.95))
        probes.append(flat_probe(v, Label.ORIGINAL, f"o{i}"))
        values.append(v)
        targets.append(1)
    for i in range(n_per_class):
        v = float(np.clip(0.35 + 0.05 * rng.standard_normal(), 0.05, 0.95))
        probes.append(flat_probe(v, fake_label, f"f{i}"))
        values.append(v)
        targets.append(0)
    return probes, np.array(values), np.array(targets)


def zeroed_model(setup_id=SetupId.ALL_FAKES, head_bias=(0.0, 0.0)) -> ClassifierModel:
    """A classifier with all-zero weights and a chosen head bias."""
    net = ConvClassifier(SIDE, seed=0)
    state = {name: np.zeros_like(arr) for name, arr in net.state_arrays().items()}
    state["head.bias"] = np.asarray(head_bias, dtype=float)
    net.load_state(state)
    return ClassifierModel(net, setup_id, seed=0, epochs_trained=0, best_epoch=-1, best_val_loss=0.0)


# ---------------------------------------------------------------------------
# setups
# ---------------------------------------------------------------------------

def test_make_setup_all_fakes_includes_every_fake_label():
    setup = make_setup(SetupId.ALL_FAKES)
    assert set(setup.fake_labels) == set(FAKE_LABELS)


@pytest.mark.parametrize("sid", [SetupId.F1_WHITE, SetupId.F1_GRAY, SetupId.F2_WHITE, SetupId.F2_GRAY])
def test_make_setup_single_fake_is_exactly_its_own_label(sid):
    setup = make_setup(sid)
    assert setup.fake_labels == (Label(sid.value),)


def test_setup_invariants_rejected():
    with pytest.raises(ValueError):
        SupervisedSetup(SetupId.F1_WHITE, (Label.F2_GRAY,))
    with pytest.raises(ValueError):
        SupervisedSetup(SetupId.ALL_FAKES, (Label.F1_WHITE, Label.F1_GRAY))
    with pytest.raises(ValueError):
        SupervisedSetup(SetupId.ALL_FAKES, (*FAKE_LABELS, Label.ORIGINAL))


def test_make_setup_accepts_plain_strings():
    assert make_setup("f2_gray").fake_labels == (Label.F2_GRAY,)


# ---------------------------------------------------------------------------
# training on separable toy data
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def blob_model():
    train, values, targets = blob_probes(seed=100, n_per_class=20)
    val, _, _ = blob_probes(seed=101, n_per_class=5)
    assert logistic_reaches_zero_error(values, targets)
    # 20 originals / batch 10 originals -> 2 steps per epoch; 100 epochs = 200 steps
    hyper = SupervisedHyper(epochs=100, lr=3e-3, patience=100, augment=False)
    setup = make_setup(SetupId.F1_WHITE)
    model = train_supervised(train, val, setup, hyper, seed=7)
    return model, train


def test_separable_blobs_reach_zero_training_error(blob_model):
    model, train = blob_model
    verdicts = classify_batch(model, [p.image for p in train])
    expected = [Verdict.ORIGINAL if p.label is Label.ORIGINAL else Verdict.FAKE for p in train]
    assert verdicts == expected


def test_overfit_model_memorizes_training_originals():
    rng = derive_rng(0, "memorize")
    train = [
        noise_probe(rng, Label.ORIGINAL, "o0"),
        noise_probe(rng, Label.ORIGINAL, "o1"),
        noise_probe(rng, Label.F2_WHITE, "f0"),
        noise_probe(rng, Label.F2_WHITE, "f1"),
    ]
    hyper = SupervisedHyper(epochs=80, lr=5e-3, patience=80, augment=False)
    model = train_supervised(train, train, make_setup(SetupId.F2_WHITE), hyper, seed=3)
    for probe in train:
        want = Verdict.ORIGINAL if probe.label is Label.ORIGINAL else Verdict.FAKE
        assert classify(model, probe.image) is want


# ---------------------------------------------------------------------------
# inference contract
# ---------------------------------------------------------------------------

def test_exact_logit_tie_rejects():
    model = zeroed_model()  # every logit pair is exactly (0, 0)
    probe = flat_probe(0.5, Label.ORIGINAL, "t")
    assert classify(model, probe.image) is Verdict.FAKE


def test_classify_batch_preserves_order(blob_model):
    model, train = blob_model
    images = [train[0].image, train[20].image, train[1].image, train[21].image]
    verdicts = classify_batch(model, images)
    assert verdicts == [Verdict.ORIGINAL, Verdict.FAKE, Verdict.ORIGINAL, Verdict.FAKE]
    assert classify_batch(model, images[::-1]) == verdicts[::-1]
    assert classify_batch(model, []) == []


def test_classify_rejects_geometry_mismatch(blob_model):
    model, _ = blob_model
    wrong = CodeImage(np.full((SIDE + 4, SIDE + 4), 0.5), ORIGINAL_PRINT, "w")
    with pytest.raises(ValueError):
        classify(model, wrong)


def test_classification_is_deterministic(blob_model):
    model, train = blob_model
    images = [p.image for p in train[:6]]
    assert classify_batch(model, images) == classify_batch(model, images)


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

def test_metrics_counting_three_of_ten_fakes_accepted():
    m = Metrics(0, 10, {Label.F1_WHITE: 3}, {Label.F1_WHITE: 10})
    assert m.p_miss == 0.0
    assert m.p_fa(Label.F1_WHITE) == 0.3
    assert m.total_error() == 0.3


def test_accept_everything_model_has_zero_miss_and_full_fa():
    model = zeroed_model(head_bias=(0.0, 1.0))  # original logit always wins
    probes = [flat_probe(0.5, Label.ORIGINAL, "o")]
    probes += [flat_probe(0.5, label, f"x{label.value}") for label in FAKE_LABELS]
    m = evaluate(model, probes)
    assert m.p_miss == 0.0
    for label in FAKE_LABELS:
        assert m.p_fa(label) == 1.0


def test_reject_everything_model_has_full_miss_and_zero_fa():
    model = zeroed_model()  # ties everywhere; tie-break rejects
    probes = [flat_probe(0.5, Label.ORIGINAL, "o"), flat_probe(0.5, Label.F1_GRAY, "g")]
    m = evaluate(model, probes)
    assert m.p_miss == 1.0
    assert m.p_fa(Label.F1_GRAY) == 0.0


def test_absent_rates_are_none_not_zero():
    model = zeroed_model()
    only_fakes = [flat_probe(0.5, Label.F1_WHITE, "f")]
    m = evaluate(model, only_fakes)
    assert m.p_miss is None
    assert m.p_fa(Label.F1_WHITE) == 0.0
    assert m.p_fa(Label.F2_GRAY) is None

    only_originals = [flat_probe(0.5, Label.ORIGINAL, "o")]
    m = evaluate(model, only_originals)
    assert m.p_miss == 1.0
    for label in FAKE_LABELS:
        assert m.p_fa(label) is None


def test_metrics_pooling_and_validation():
    m = Metrics(
        1,
        10,
        {Label.F1_WHITE: 2, Label.F1_GRAY: 1, Label.F2_WHITE: 0, Label.F2_GRAY: 0},
        {Label.F1_WHITE: 10, Label.F1_GRAY: 5, Label.F2_WHITE: 10, Label.F2_GRAY: 0},
    )
    assert m.p_fa_pooled((Label.F1_WHITE, Label.F1_GRAY)) == 3 / 15
    assert m.p_fa_pooled((Label.F2_GRAY,)) is None
    assert m.total_error() == pytest.approx(0.1 + 0.2 + 0.2 + 0.0)
    with pytest.raises(ValueError):
        Metrics(-1, 10, {}, {})
    with pytest.raises(ValueError):
        Metrics(11, 10, {}, {})
    with pytest.raises(ValueError):
        Metrics(0, 1, {Label.F1_WHITE: 2}, {Label.F1_WHITE: 1})


def test_evaluate_rejects_empty_probe_list():
    with pytest.raises(ValueError):
        evaluate(zeroed_model(), [])


# ---------------------------------------------------------------------------
# training-data validation
# ---------------------------------------------------------------------------

def test_train_rejects_missing_class_and_out_of_setup_fakes():
    setup = make_setup(SetupId.F1_WHITE)
    orig = flat_probe(0.7, Label.ORIGINAL, "o")
    fake = flat_probe(0.3, Label.F1_WHITE, "f")
    wrong = flat_probe(0.3, Label.F2_GRAY, "w")
    hyper = SupervisedHyper(epochs=1)
    with pytest.raises(ValueError):
        train_supervised([orig], [orig, fake], setup, hyper)
    with pytest.raises(ValueError):
        train_supervised([fake], [orig, fake], setup, hyper)
    with pytest.raises(ValueError):
        train_supervised([orig, wrong], [orig, fake], setup, hyper)
    with pytest.raises(ValueError):
        train_supervised([orig, fake], [wrong], setup, hyper)


def test_training_is_deterministic_in_seed():
    train, _, _ = blob_probes(seed=200, n_per_class=4)
    hyper = SupervisedHyper(epochs=3, patience=3)
    setup = make_setup(SetupId.F1_WHITE)
    a = train_supervised(train, train, setup, hyper, seed=11)
    b = train_supervised(train, train, setup, hyper, seed=11)
    c = train_supervised(train, train, setup, hyper, seed=12)
    sa, sb, sc = (m.network.state_arrays() for m in (a, b, c))
    for name in sa:
        np.testing.assert_array_equal(sa[name], sb[name])
    assert any(not np.array_equal(sa[name], sc[name]) for name in sa)


# ---------------------------------------------------------------------------
# multi-run protocol on a tiny synthetic dataset
# ---------------------------------------------------------------------------

def test_protocol_records_seeds_and_full_test_metrics():
    config = SynthesisConfig(n_templates=6, m=20, s=4, master_seed=42)
    dataset = synthesize_dataset(config)
    hyper = SupervisedHyper(epochs=2, patience=2)
    runs = run_supervised_protocol(dataset, make_setup(SetupId.ALL_FAKES), hyper, seed=5, n_runs=2)
    assert [r.run_index for r in runs] == [0, 1]
    for r in runs:
        assert r.split_seed == derive_seed(5, "split", r.run_index)
        assert r.train_seed == derive_seed(5, "train", r.run_index)
        assert r.metrics.miss_trials > 0
        for label in FAKE_LABELS:
            assert r.metrics.fa_trials[label] == r.metrics.miss_trials
    assert runs[0].split_seed != runs[1].split_seed
    with pytest.raises(ValueError):
        run_supervised_protocol(dataset, make_setup(SetupId.ALL_FAKES), hyper, n_runs=0)
