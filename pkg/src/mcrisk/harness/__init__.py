from .config import ExperimentConfig, load_config, make_config, parse_config
from .io import (
    DataError,
    canonical_json,
    dataset_to_csv,
    emit_report,
    ingest_csv,
    load_model,
    parse_dataset_csv,
    save_model,
    write_dataset_csv,
)
from .synthetic import GeneratorSpec, generate_synthetic, ground_truth, random_in_class_model
from .tables import alpha_table
from .verify import VerificationReport, certify_model, run_verification

__all__ = [
    "DataError",
    "ExperimentConfig",
    "GeneratorSpec",
    "VerificationReport",
    "alpha_table",
    "canonical_json",
    "certify_model",
    "dataset_to_csv",
    "emit_report",
    "generate_synthetic",
    "ground_truth",
    "ingest_csv",
    "load_config",
    "load_model",
    "make_config",
    "parse_config",
    "parse_dataset_csv",
    "random_in_class_model",
    "run_verification",
    "save_model",
    "write_dataset_csv",
]
