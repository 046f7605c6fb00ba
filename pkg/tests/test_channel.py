"""Print, acquisition, and copy-attack channel contracts."""

import numpy as np
import pytest

from cdpauth.core import CodeImage, FAKE_LABELS, Label, ORIGINAL_PRINT, generate_template
from cdpauth.channel import (
    AcquisitionModel,
    AttackModel,
    PrintModel,
    SynthesisConfig,
    acquire_sim,
    copy_attack,
    default_acquisition_model,
    default_attack_presets,
    default_print_model,
    estimate_template,
    print_sim,
    synthesize_dataset,
    validate_preset_family,
)

IDENTITY_PRINT = PrintModel(
    ink_reflectance=0.0, paper_reflectance=1.0, dot_gain=0, psf_sigma=0.0, noise_sigma=0.0
)
NOISELESS_ACQ = AcquisitionModel(scale_factor=1.0, sensor_gamma=1.0, noise_sigma=0.0)


# ---------------------------------------------------------------------------
# print_sim
# ---------------------------------------------------------------------------

def test_print_identity_channel_reproduces_template():
    t = generate_template(seed=1, m=24, s=4)
    out = print_sim(t, IDENTITY_PRINT, seed=0)
    assert np.array_equal(out.pixels, t.pixels.astype(np.float64))
    assert out.provenance == ORIGINAL_PRINT
    assert out.template_id == t.template_id


def test_print_gray_stock_sets_white_level():
    t = generate_template(seed=2, m=24, s=4)
    model = PrintModel(
        ink_reflectance=0.0, paper_reflectance=0.8, dot_gain=0, psf_sigma=0.0, noise_sigma=0.0
    )
    out = print_sim(t, model, seed=0)
    whites = out.pixels[t.pixels == 1]
    blacks = out.pixels[t.pixels == 0]
    assert np.all(whites == 0.8)
    assert np.all(blacks == 0.0)


def test_print_dot_gain_strictly_darkens():
    # monotonicity swept over several templates and the preset gain range
    model = dict(ink_reflectance=0.05, paper_reflectance=0.95, psf_sigma=0.0, noise_sigma=0.0)
    for seed in range(5):
        t = generate_template(seed=seed, m=40, s=4)
        means = []
        for gain in (0, 1, 2):
            out = print_sim(t, PrintModel(dot_gain=gain, **model), seed=0)
            means.append(out.pixels.mean())
        assert means[0] > means[1] > means[2]


def test_print_output_clamped_and_deterministic():
    t = generate_template(seed=3, m=40, s=4)
    model = PrintModel(noise_sigma=0.3)  # heavy noise exercises the clamp
    a = print_sim(t, model, seed=11)
    b = print_sim(t, model, seed=11)
    c = print_sim(t, model, seed=12)
    assert np.array_equal(a.pixels, b.pixels)
    assert not np.array_equal(a.pixels, c.pixels)
    assert a.pixels.min() >= 0.0 and a.pixels.max() <= 1.0


def test_print_raw_array_requires_id_and_binary_values():
    arr = np.zeros((8, 8), dtype=np.uint8)
    with pytest.raises(ValueError):
        print_sim(arr, IDENTITY_PRINT, seed=0)  # missing template_id
    out = print_sim(arr, IDENTITY_PRINT, seed=0, template_id="x")
    assert out.template_id == "x"
    with pytest.raises(ValueError):
        print_sim(arr + 3, IDENTITY_PRINT, seed=0, template_id="x")


def test_print_model_validation():
    with pytest.raises(ValueError):
        PrintModel(ink_reflectance=0.9, paper_reflectance=0.5)
    with pytest.raises(ValueError):
        PrintModel(dot_gain=-1)
    with pytest.raises(ValueError):
        PrintModel(psf_sigma=-0.1)


# ---------------------------------------------------------------------------
# acquire_sim
# ---------------------------------------------------------------------------

def test_acquire_identity_is_exact():
    t = generate_template(seed=4, m=24, s=4)
    printed = print_sim(t, default_print_model(), seed=5)
    out = acquire_sim(printed, NOISELESS_ACQ, seed=6)
    assert np.array_equal(out.pixels, printed.pixels)


def test_acquire_downsample_checkerboard_matches_averaging_oracle():
    # period-2 checkerboard halved: bilinear with half-pixel centers lands
    # exactly on 2x2 block centers, so the oracle is the plain block mean
    n = 16
    board = ((np.indices((n, n)).sum(axis=0)) % 2).astype(np.float64)
    img = CodeImage(board, ORIGINAL_PRINT, "t")
    model = AcquisitionModel(scale_factor=0.5, sensor_gamma=1.0, noise_sigma=0.0)
    out = acquire_sim(img, model, seed=0)
    oracle = board.reshape(n // 2, 2, n // 2, 2).mean(axis=(1, 3))
    assert out.pixels.shape == (n // 2, n // 2)
    assert np.max(np.abs(out.pixels - oracle)) < 1e-6
    assert np.max(np.abs(out.pixels - 0.5)) < 1e-6


def test_acquire_gains_scale_channels():
    img = CodeImage(np.full((6, 6), 0.5), ORIGINAL_PRINT, "t")
    model = AcquisitionModel(
        scale_factor=1.0, sensor_gamma=1.0, noise_sigma=0.0, channel_gains=(0.4, 1.0, 1.6)
    )
    out = acquire_sim(img, model, seed=0)
    assert out.pixels.shape == (6, 6, 3)
    assert np.allclose(out.pixels[:, :, 0], 0.2)
    assert np.allclose(out.pixels[:, :, 1], 0.5)
    assert np.allclose(out.pixels[:, :, 2], 0.8)  # clamp not hit at 0.8


def test_acquire_gamma_and_clamp():
    img = CodeImage(np.full((4, 4), 0.25), ORIGINAL_PRINT, "t")
    model = AcquisitionModel(scale_factor=1.0, sensor_gamma=0.5, noise_sigma=0.0)
    out = acquire_sim(img, model, seed=0)
    assert np.allclose(out.pixels, 0.5)
    noisy = AcquisitionModel(scale_factor=1.0, sensor_gamma=1.0, noise_sigma=0.5)
    out = acquire_sim(img, noisy, seed=1)
    assert out.pixels.min() >= 0.0 and out.pixels.max() <= 1.0


def test_acquire_rejects_subsymbol_scale_and_digital_input():
    t = generate_template(seed=5, m=24, s=4)
    printed = print_sim(t, default_print_model(), seed=0)
    bad = AcquisitionModel(scale_factor=0.2, sensor_gamma=1.0, noise_sigma=0.0)
    with pytest.raises(ValueError):
        acquire_sim(printed, bad, seed=0, symbol_size=4)
    from cdpauth.core import DIGITAL

    digital = CodeImage(t.pixels.astype(np.float64), DIGITAL, t.template_id)
    with pytest.raises(ValueError):
        acquire_sim(digital, NOISELESS_ACQ, seed=0)


def test_acquisition_model_validation():
    with pytest.raises(ValueError):
        AcquisitionModel(scale_factor=0.0)
    with pytest.raises(ValueError):
        AcquisitionModel(sensor_gamma=-1.0)
    with pytest.raises(ValueError):
        AcquisitionModel(channel_gains=(1.0, 1.0))


# ---------------------------------------------------------------------------
# copy_attack
# ---------------------------------------------------------------------------

def test_estimate_recovers_template_through_clean_channel():
    t = generate_template(seed=6, m=24, s=4)
    printed = print_sim(t, IDENTITY_PRINT, seed=0)
    est = estimate_template(printed, threshold=0.5)
    assert np.array_equal(est, t.pixels)  # Hamming distance 0


def test_estimate_threshold_bounds():
    img = CodeImage(np.full((4, 4), 0.5), ORIGINAL_PRINT, "t")
    with pytest.raises(ValueError):
        estimate_template(img, threshold=0.0)
    with pytest.raises(ValueError):
        estimate_template(img, threshold=1.0)


def test_copy_attack_decomposes_into_stages():
    from cdpauth.core import derive_seed

    t = generate_template(seed=7, m=40, s=4)
    printed = print_sim(t, default_print_model(), seed=1)
    original = acquire_sim(printed, default_acquisition_model(), seed=2)
    attack = default_attack_presets()[Label.F1_WHITE]
    seed = 99
    fake = copy_attack(original, attack, default_acquisition_model(), seed)
    est = estimate_template(original, attack.estimation_threshold)
    stage_print = print_sim(
        est, attack.reprint, derive_seed(seed, "reprint"), template_id=t.template_id
    )
    stage_acq = acquire_sim(stage_print, default_acquisition_model(), derive_seed(seed, "reacquire"))
    assert np.array_equal(fake.pixels, stage_acq.pixels)
    assert fake.provenance.kind == "fake"
    assert fake.provenance.fake_kind is Label.F1_WHITE


def test_copy_attack_rejects_fake_input():
    t = generate_template(seed=8, m=24, s=4)
    printed = print_sim(t, default_print_model(), seed=0)
    original = acquire_sim(printed, default_acquisition_model(), seed=0)
    presets = default_attack_presets()
    fake = copy_attack(original, presets[Label.F1_WHITE], seed=0)
    with pytest.raises(ValueError):
        copy_attack(fake, presets[Label.F2_WHITE], seed=0)


def test_press2_darker_than_press1_on_average():
    # brute-force evaluation over 10 templates: the larger dot gain of
    # press 2 must strictly lower the mean fake intensity on both stocks
    presets = default_attack_presets()
    acq = default_acquisition_model()
    diffs_white = []
    diffs_gray = []
    for i in range(10):
        t = generate_template(seed=200 + i, m=60, s=4)
        printed = print_sim(t, default_print_model(), seed=i)
        original = acquire_sim(printed, acq, seed=i)
        f1w = copy_attack(original, presets[Label.F1_WHITE], acq, seed=i)
        f2w = copy_attack(original, presets[Label.F2_WHITE], acq, seed=i)
        f1g = copy_attack(original, presets[Label.F1_GRAY], acq, seed=i)
        f2g = copy_attack(original, presets[Label.F2_GRAY], acq, seed=i)
        diffs_white.append(f1w.pixels.mean() - f2w.pixels.mean())
        diffs_gray.append(f1g.pixels.mean() - f2g.pixels.mean())
        # gray stock darker than white stock for the same press
        assert f1g.pixels.mean() < f1w.pixels.mean()
        assert f2g.pixels.mean() < f2w.pixels.mean()
    assert all(d > 0 for d in diffs_white)
    assert all(d > 0 for d in diffs_gray)


def test_attack_preset_family_invariants():
    presets = default_attack_presets()
    validate_preset_family(presets)
    broken = dict(presets)
    broken[Label.F2_WHITE] = AttackModel(
        Label.F2_WHITE, PrintModel(dot_gain=0, paper_reflectance=1.0)
    )
    broken[Label.F2_GRAY] = AttackModel(
        Label.F2_GRAY, PrintModel(dot_gain=0, paper_reflectance=0.8)
    )
    with pytest.raises(ValueError):
        validate_preset_family(broken)
    with pytest.raises(ValueError):
        validate_preset_family({Label.F1_WHITE: presets[Label.F1_WHITE]})


def test_attack_model_validation():
    with pytest.raises(ValueError):
        AttackModel(Label.ORIGINAL, PrintModel())
    with pytest.raises(ValueError):
        AttackModel(Label.F1_WHITE, PrintModel(), estimation_threshold=1.0)


# ---------------------------------------------------------------------------
# synthesis
# ---------------------------------------------------------------------------

def test_synthesize_dataset_counts_and_determinism():
    cfg = SynthesisConfig(n_templates=6, m=20, s=4, master_seed=5)
    ds = synthesize_dataset(cfg)
    assert len(ds.templates) == 6
    assert len(ds.probes) == 6 * 5  # one original plus four fakes each
    assert len(ds.probes_in(labels=[Label.ORIGINAL])) == 6
    for label in FAKE_LABELS:
        assert len(ds.probes_in(labels=[label])) == 6
    counts = [sum(1 for v in ds.split_of.values() if v == name) for name in ("train", "val", "test")]
    assert sum(counts) == 6 and all(c > 0 for c in counts)
    ds2 = synthesize_dataset(cfg)
    for p, q in zip(ds.probes, ds2.probes):
        assert np.array_equal(p.image.pixels, q.image.pixels)


def test_resplit_preserves_probes_and_changes_assignment():
    cfg = SynthesisConfig(n_templates=10, m=20, s=4, master_seed=6)
    ds = synthesize_dataset(cfg)
    re = ds.resplit(seed=123)
    assert re.probes is ds.probes
    assert sorted(re.split_of) == sorted(ds.split_of)
    assert any(re.split_of[t] != ds.split_of[t] for t in ds.split_of)
