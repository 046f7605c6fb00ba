"""Desk-scale copy-detection-pattern authentication toolkit.

Synthetic CDP generation, print/acquire/copy-attack channel simulation, a
supervised two-class authenticator, and a one-class pipeline built from an
encoder/decoder feature extractor and a nu-one-class SVM.
"""

from .channel import (
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
)
from .config import (
    ConfigError,
    OcSvmGrid,
    PipelineConfig,
    RunConfig,
    as_canonical_dict,
    config_digest,
    from_mapping,
    load_config,
)
from .core import (
    CodeImage,
    Dataset,
    DatasetSplit,
    DigitalTemplate,
    FAKE_LABELS,
    Label,
    ProbeRecord,
    Provenance,
    augment,
    derive_rng,
    derive_seed,
    generate_template,
    split_dataset,
)
from .dataio import (
    ManifestRow,
    load_classifier,
    load_dataset,
    load_extractor,
    load_ocsvm,
    save_classifier,
    save_dataset,
    save_extractor,
    save_ocsvm,
)
from .ingest import IngestSummary, ingest_external
from .ocsvm import OcSvmModel, decision_scores, fit, select_hyperparams
from .oneclass import (
    ExtractorHyper,
    ExtractorModel,
    FeatureSetup,
    OneClassRun,
    Variant,
    evaluate_oneclass,
    extract_feature_matrix,
    extract_features,
    run_oneclass_protocol,
    train_extractor,
)
from .report import build_metrics_table, pca_project, run_report
from .supervised import (
    ClassifierModel,
    Metrics,
    SetupId,
    SupervisedHyper,
    SupervisedRun,
    SupervisedSetup,
    Verdict,
    classify,
    evaluate,
    make_setup,
    run_supervised_protocol,
    train_supervised,
)

__version__ = "0.1.0"

__all__ = [
    "AcquisitionModel",
    "AttackModel",
    "PrintModel",
    "SynthesisConfig",
    "acquire_sim",
    "copy_attack",
    "default_acquisition_model",
    "default_attack_presets",
    "default_print_model",
    "estimate_template",
    "print_sim",
    "synthesize_dataset",
    "ConfigError",
    "OcSvmGrid",
    "PipelineConfig",
    "RunConfig",
    "as_canonical_dict",
    "config_digest",
    "from_mapping",
    "load_config",
    "CodeImage",
    "Dataset",
    "DatasetSplit",
    "DigitalTemplate",
    "FAKE_LABELS",
    "Label",
    "ProbeRecord",
    "Provenance",
    "augment",
    "derive_rng",
    "derive_seed",
    "generate_template",
    "split_dataset",
    "ManifestRow",
    "load_classifier",
    "load_dataset",
    "load_extractor",
    "load_ocsvm",
    "save_classifier",
    "save_dataset",
    "save_extractor",
    "save_ocsvm",
    "IngestSummary",
    "ingest_external",
    "OcSvmModel",
    "decision_scores",
    "fit",
    "select_hyperparams",
    "ExtractorHyper",
    "ExtractorModel",
    "FeatureSetup",
    "OneClassRun",
    "Variant",
    "evaluate_oneclass",
    "extract_feature_matrix",
    "extract_features",
    "run_oneclass_protocol",
    "train_extractor",
    "build_metrics_table",
    "pca_project",
    "run_report",
    "ClassifierModel",
    "Metrics",
    "SetupId",
    "SupervisedHyper",
    "SupervisedRun",
    "SupervisedSetup",
    "Verdict",
    "classify",
    "evaluate",
    "make_setup",
    "run_supervised_protocol",
    "train_supervised",
    "__version__",
]
