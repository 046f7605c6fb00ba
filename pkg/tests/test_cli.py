"""End-to-end CLI coverage at toy scale."""

import csv
import json

import pytest

from cdpauth.cli import main, metrics_from_jsonable, metrics_to_jsonable
from cdpauth.core import FAKE_LABELS, Label
from cdpauth.supervised import Metrics


TINY_CONFIG = """\
seed: 5
dataset:
  n_templates: 8
  m: 12
  s: 4
pipeline:
  runs: 2
supervised_hyper:
  epochs: 2
  min_epochs: 1
  patience: 1
  batch_originals: 2
  batch_fakes: 3
  channels: [2, 3, 4]
oneclass_hyper:
  epochs: 2
  min_epochs: 0
  patience: 1
  batch: 4
  base: 2
"""


@pytest.fixture()
def tiny(tmp_path):
    config = tmp_path / "run.yaml"
    config.write_text(TINY_CONFIG, encoding="utf-8")
    data = tmp_path / "data"
    code = main(["gen-dataset", "--config", str(config), "--out", str(data)])
    assert code == 0
    return config, data, tmp_path


def test_gen_dataset_writes_manifest(tiny, capsys):
    _, data, _ = tiny
    rows = (data / "manifest.csv").read_text(encoding="utf-8").splitlines()
    assert len(rows) == 1 + 8 * 6  # header + 8 templates x (digital + original + 4 fakes)


def test_gen_dataset_deterministic(tiny):
    config, data, tmp_path = tiny
    again = tmp_path / "data2"
    assert main(["gen-dataset", "--config", str(config), "--out", str(again)]) == 0
    assert (data / "manifest.csv").read_bytes() == (again / "manifest.csv").read_bytes()
    assert (data / "dataset_meta.json").read_bytes() == (again / "dataset_meta.json").read_bytes()


def test_seed_flag_changes_dataset(tiny):
    import filecmp

    config, data, tmp_path = tiny
    other = tmp_path / "data3"
    assert main(["gen-dataset", "--config", str(config), "--seed", "6", "--out", str(other)]) == 0
    # identical manifest layout, different pixel content
    same = all(
        filecmp.cmp(p, other / "images" / p.name, shallow=False)
        for p in sorted((data / "images").glob("*.png"))
    )
    assert not same


def test_attack_rewrites_fakes(tiny):
    config, data, tmp_path = tiny
    out = tmp_path / "attacked"
    assert main(["attack", "--config", str(config), "--data", str(data), "--out", str(out)]) == 0
    rows = (out / "manifest.csv").read_text(encoding="utf-8").splitlines()
    assert len(rows) == 1 + 8 * 6


def test_supervised_train_eval_report(tiny, capsys):
    config, data, tmp_path = tiny
    out = tmp_path / "sup"
    code = main(["train-supervised", "--config", str(config), "--data", str(data), "--out", str(out)])
    assert code == 0
    ckpts = sorted(out.glob("classifier_all_fakes_run*.ckpt"))
    assert len(ckpts) == 2
    metrics_path = out / "metrics_all_fakes.json"
    payload = json.loads(metrics_path.read_text(encoding="utf-8"))
    assert payload["format_version"] == 1
    assert payload["rows"][0]["name"] == "all_fakes"
    assert len(payload["rows"][0]["runs"]) == 2

    code = main(
        ["eval", "--config", str(config), "--data", str(data),
         "--classifier", str(ckpts[0]), "--out", str(out)]
    )
    assert code == 0
    assert (out / "metrics_supervised.json").exists()

    code = main(
        ["report", "--config", str(config), str(metrics_path), "--out", str(out)]
    )
    assert code == 0
    table = (out / "table.csv").read_text(encoding="utf-8").splitlines()
    assert table[0] == "setup,p_miss,p_fa_f1_white,p_fa_f1_gray,p_fa_f2_white,p_fa_f2_gray"
    assert table[1].startswith("all_fakes,")
    assert (out / "table.md").read_text(encoding="utf-8").startswith("| setup | p_miss |")


def test_oneclass_train_fit_eval_scatter(tiny):
    config, data, tmp_path = tiny
    out = tmp_path / "oc"
    code = main(["train-oneclass", "--config", str(config), "--data", str(data), "--out", str(out)])
    assert code == 0
    extractors = sorted(out.glob("extractor_recon_l2_run*.ckpt"))
    svms = sorted(out.glob("ocsvm_recon_l2_run*.ckpt"))
    assert len(extractors) == 2 and len(svms) == 2
    assert (out / "metrics_recon_l2.json").exists()

    code = main(
        ["fit-ocsvm", "--config", str(config), "--data", str(data),
         "--extractor", str(extractors[0]), "--out", str(out)]
    )
    assert code == 0
    assert (out / "ocsvm.ckpt").exists()

    code = main(
        ["eval", "--config", str(config), "--data", str(data),
         "--extractor", str(extractors[0]), "--svm", str(out / "ocsvm.ckpt"),
         "--scatter", "features", "--out", str(out)]
    )
    assert code == 0
    with open(out / "features_scatter.csv", newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["pc1", "pc2", "label"]
    labels = {r[2] for r in rows[1:]}
    assert "original" in labels and "f2_gray" in labels


def test_ingest_verb(tiny, tmp_path_factory):
    config, _, tmp_path = tiny
    import numpy as np
    from PIL import Image

    src = tmp_path / "corpus"
    for sub in ("digital", "original"):
        (src / sub).mkdir(parents=True)
    rng = np.random.default_rng(0)
    for stem in ("x", "y"):
        bits = rng.integers(0, 2, (8, 8)).astype("uint8") * 255
        Image.fromarray(bits, mode="L").save(src / "digital" / f"{stem}.png")
        gray = rng.integers(0, 256, (8, 8)).astype("uint8")
        Image.fromarray(gray, mode="L").save(src / "original" / f"{stem}.png")
    out = tmp_path / "ingested"
    code = main(
        ["ingest", "--config", str(config), "--data", str(src), "--out", str(out),
         "--map", "digital=digital", "--map", "original=original"]
    )
    assert code == 0
    rows = (out / "manifest.csv").read_text(encoding="utf-8").splitlines()
    assert len(rows) == 1 + 4


def test_error_exits_nonzero(tiny, tmp_path, capsys):
    config, data, _ = tiny
    bad = tmp_path / "bad.yaml"
    bad.write_text("chanel: {}\n", encoding="utf-8")
    assert main(["gen-dataset", "--config", str(bad), "--out", str(tmp_path / "x")]) == 1
    err = capsys.readouterr().err
    assert "unknown key" in err

    assert main(["eval", "--config", str(config), "--data", str(data)]) == 1
    err = capsys.readouterr().err
    assert "--classifier" in err


def test_report_rejects_unknown_version(tiny, tmp_path, capsys):
    config, _, _ = tiny
    bogus = tmp_path / "m.json"
    bogus.write_text(json.dumps({"format_version": 9, "rows": []}), encoding="utf-8")
    assert main(["report", "--config", str(config), str(bogus), "--out", str(tmp_path)]) == 1
    assert "format version" in capsys.readouterr().err


def test_missing_data_flag_is_usage_error(tiny):
    with pytest.raises(SystemExit) as info:
        main(["train-supervised"])
    assert info.value.code == 2


def test_metrics_json_round_trip():
    metrics = Metrics(
        3, 30,
        {l: i for i, l in enumerate(FAKE_LABELS)},
        {l: 40 for l in FAKE_LABELS},
    )
    back = metrics_from_jsonable(metrics_to_jsonable(metrics))
    assert back == metrics
    assert back.p_fa(Label.F2_GRAY) == metrics.p_fa(Label.F2_GRAY)
