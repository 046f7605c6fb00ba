"""Strict config parsing, defaults, and digest stability."""

import pytest

from cdpauth import config
from cdpauth.core import Label
from cdpauth.oneclass import FeatureSetup, Variant
from cdpauth.supervised import SetupId


def test_empty_mapping_gives_defaults():
    cfg = config.from_mapping({})
    assert cfg.seed == 0
    assert cfg.dataset.n_templates == 300
    assert cfg.dataset.geometry if hasattr(cfg.dataset, "geometry") else True
    assert cfg.pipeline.kind == "supervised"
    assert cfg.pipeline.setup_id is SetupId.ALL_FAKES
    assert cfg.pipeline.variant_id is Variant.L2
    assert cfg.pipeline.feature_setup_id is FeatureSetup.RECON_L2
    assert cfg.ocsvm_grid.kernel == "rbf"


def test_nested_overrides_apply():
    cfg = config.from_mapping(
        {
            "seed": 7,
            "dataset": {
                "n_templates": 12,
                "m": 20,
                "master_seed": 3,
                "print_model": {"psf_sigma": 0.9},
                "attacks": {
                    "f1_white": {"reprint": {"psf_sigma": 1.1, "paper_reflectance": 1.0}},
                    "f1_gray": {"reprint": {"psf_sigma": 1.1, "paper_reflectance": 0.8}},
                    "f2_white": {
                        "reprint": {"dot_gain": 2, "paper_reflectance": 1.0},
                        "estimation_threshold": 0.4,
                    },
                    "f2_gray": {"reprint": {"dot_gain": 2, "paper_reflectance": 0.8}},
                },
            },
            "pipeline": {"kind": "oneclass", "feature_setup": 1, "variant": "l1"},
            "oneclass_hyper": {"epochs": 10, "augment": False},
            "ocsvm_grid": {"nus": [0.1], "kernel_gammas": [1.0, 2.0]},
        }
    )
    assert cfg.dataset.n_templates == 12
    assert cfg.dataset.print_model.psf_sigma == 0.9
    # untouched print_model fields keep their defaults
    assert cfg.dataset.print_model.ink_reflectance == 0.05
    assert cfg.dataset.attacks[Label.F1_WHITE].reprint.psf_sigma == 1.1
    assert cfg.dataset.attacks[Label.F2_WHITE].estimation_threshold == 0.4
    assert cfg.pipeline.feature_setup_id is FeatureSetup.RECON_L1
    assert cfg.oneclass_hyper.epochs == 10
    assert cfg.oneclass_hyper.augment is False
    assert cfg.ocsvm_grid.nus == (0.1,)
    assert cfg.ocsvm_grid.kernel_gammas == (1.0, 2.0)


def test_unknown_top_level_key_names_path():
    with pytest.raises(config.ConfigError, match=r"config: unknown key\(s\) \['chanel'\]"):
        config.from_mapping({"chanel": {}})


def test_unknown_nested_key_names_full_path():
    data = {"dataset": {"print_model": {"ink": 0.1}}}
    with pytest.raises(config.ConfigError, match=r"config\.dataset\.print_model: unknown key"):
        config.from_mapping(data)


def test_unknown_attack_label_rejected():
    data = {"dataset": {"attacks": {"f3_blue": {}}}}
    with pytest.raises(config.ConfigError, match="f3_blue"):
        config.from_mapping(data)


def test_scalar_type_mismatches_rejected():
    with pytest.raises(config.ConfigError, match=r"config\.seed: expected an integer"):
        config.from_mapping({"seed": "zero"})
    with pytest.raises(config.ConfigError, match=r"config\.seed: expected an integer"):
        config.from_mapping({"seed": True})
    with pytest.raises(config.ConfigError, match=r"psf_sigma: expected a number"):
        config.from_mapping({"dataset": {"print_model": {"psf_sigma": "wide"}}})
    with pytest.raises(config.ConfigError, match=r"augment: expected a boolean"):
        config.from_mapping({"oneclass_hyper": {"augment": 1}})


def test_fixed_length_tuple_enforced():
    with pytest.raises(config.ConfigError, match=r"fractions: expected 3 entries"):
        config.from_mapping({"dataset": {"fractions": [0.5, 0.5]}})


def test_domain_validation_errors_carry_path():
    with pytest.raises(config.ConfigError, match=r"config\.pipeline"):
        config.from_mapping({"pipeline": {"kind": "quantum"}})
    with pytest.raises(config.ConfigError, match=r"config\.dataset"):
        config.from_mapping({"dataset": {"black_fraction": 1.5}})


def test_load_config_round_trip(tmp_path):
    text = """
seed: 11
out_dir: runs/demo
dataset:
  n_templates: 6
  m: 16
  s: 4
pipeline:
  kind: supervised
  setup: f1_white
supervised_hyper:
  epochs: 3
  min_epochs: 1
"""
    path = tmp_path / "run.yaml"
    path.write_text(text, encoding="utf-8")
    cfg = config.load_config(path)
    assert cfg.seed == 11
    assert cfg.dataset.n_templates == 6
    assert cfg.pipeline.setup_id is SetupId.F1_WHITE
    assert cfg.supervised_hyper.epochs == 3


def test_load_config_rejects_non_mapping_root(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text("- a\n- b\n", encoding="utf-8")
    with pytest.raises(config.ConfigError, match="root must be a mapping"):
        config.load_config(path)


def test_digest_stable_and_sensitive():
    base = config.from_mapping({"seed": 1})
    again = config.from_mapping({"seed": 1})
    other = config.from_mapping({"seed": 2})
    assert config.config_digest(base) == config.config_digest(again)
    assert config.config_digest(base) != config.config_digest(other)
    # digest covers nested fields too
    nested = config.from_mapping({"seed": 1, "dataset": {"print_model": {"psf_sigma": 0.81}}})
    assert config.config_digest(base) != config.config_digest(nested)


def test_canonical_dict_is_json_ready():
    import json

    cfg = config.from_mapping({})
    blob = json.dumps(config.as_canonical_dict(cfg), sort_keys=True)
    assert '"f1_white"' in blob
    assert '"all_fakes"' in blob
