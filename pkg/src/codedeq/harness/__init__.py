"""Experiment orchestration: datasets, SNR sweep, BER reports."""
from .config import VARIANTS, ExperimentConfig, format_config, load_config, parse_config
from .datasets import Dataset, dataset_meta, generate_dataset, load_dataset, save_dataset
from .experiment import Experiment, run_experiment
from .metrics import (
    ber_standard_error,
    measure_post_decoder_ber,
    measure_pre_decoder_ber,
    qpsk_theory_ber,
)
from .report import CSV_HEADER, BerReport, BerRow, merge_reports

__all__ = [
    "VARIANTS", "ExperimentConfig", "format_config", "load_config", "parse_config",
    "Dataset", "dataset_meta", "generate_dataset", "load_dataset", "save_dataset",
    "Experiment", "run_experiment",
    "ber_standard_error", "measure_post_decoder_ber", "measure_pre_decoder_ber",
    "qpsk_theory_ber", "CSV_HEADER", "BerReport", "BerRow", "merge_reports",
]
