"""The SNR sweep: datasets, equalizer variants, BER before and after decoding.

Output directory layout::

    config.txt                      effective configuration
    datasets/<role>_snr<S>.cdqd     (+ .json sidecar), ``_noisi`` for the ISI-free reference
    models/<variant>_snr<S>.cdqw    trained neural equalizers
    cells/<variant>_snr<S>.csv      one-row result per (variant, SNR), used for resuming
    report.csv                      merged report

All neural variants are evaluated on the test datasets, never on training data.
"""
from __future__ import annotations

import logging
import os
from pathlib import Path
from typing import Optional

import numpy as np

from .._container import FormatError
from ..coding import build_trellis, viterbi_decode_soft
from ..equalizers import (
    CNNEqualizer,
    RNNEqualizer,
    load_equalizer,
    make_training_pairs,
)
from ..lms import LMSEqualizer
from ..modem import qpsk_hard_demodulate
from .config import VARIANTS, ExperimentConfig, format_config
from .datasets import Dataset, dataset_meta, generate_dataset, load_dataset, save_dataset, snr_key
from .metrics import bit_errors
from .report import BerReport, BerRow, read_rows, write_rows

__all__ = ["Experiment", "run_experiment", "MIN_RELIABLE_ERRORS", "cell_seed"]

log = logging.getLogger(__name__)

MIN_RELIABLE_ERRORS = 20
NEURAL = ("cnn", "rnn")


def _snr_tag(snr_db: float) -> str:
    return f"{snr_db:g}".replace("-", "m")


def cell_seed(base_seed: int, variant: str, snr_db: Optional[float]) -> int:
    """Training seed of one (variant, SNR) model, derived from the experiment seed."""
    key = (10 + VARIANTS.index(variant), snr_key(snr_db) if snr_db is not None else 0)
    return int(np.random.SeedSequence(base_seed, spawn_key=key).generate_state(1)[0])


class Experiment:
    def __init__(self, cfg: ExperimentConfig, output_dir: Optional[str] = None):
        self.cfg = cfg
        self.root = Path(output_dir if output_dir is not None else cfg.output_dir)
        self.trellis = build_trellis(cfg.code_spec)
        self._datasets: dict = {}
        self._mixed: dict = {}
        self.reuse = cfg.resume and self._config_matches()

    # paths ------------------------------------------------------------------
    def _dir(self, name: str) -> Path:
        d = self.root / name
        try:
            d.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise OSError(f"cannot create {d}: {exc}") from exc
        return d

    def dataset_path(self, role: str, snr_db, isi: bool = True) -> Path:
        suffix = "" if isi else "_noisi"
        tag = "inf" if snr_db is None else _snr_tag(snr_db)
        return self._dir("datasets") / f"{role}_snr{tag}{suffix}.cdqd"

    def model_relpath(self, variant: str, snr_db) -> str:
        tag = "mixed" if self.cfg.mixed_snr_training else f"snr{_snr_tag(snr_db)}"
        return f"models/{variant}_{tag}.cdqw"

    def cell_path(self, variant: str, snr_db) -> Path:
        return self._dir("cells") / f"{variant}_snr{_snr_tag(snr_db)}.csv"

    def _config_text(self) -> str:
        # output location and resume policy don't change results
        return format_config(self.cfg.replace(output_dir="", resume=False))

    def _config_matches(self) -> bool:
        p = self.root / "config.txt"
        try:
            return p.read_text(encoding="utf-8") == self._config_text()
        except OSError:
            return False

    def write_config(self) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        (self.root / "config.txt").write_text(self._config_text(), encoding="utf-8")

    # data -------------------------------------------------------------------
    def dataset(self, role: str, snr_db, isi: bool = True) -> Dataset:
        key = (role, snr_db, isi)
        if key in self._datasets:
            return self._datasets[key]
        path = self.dataset_path(role, snr_db, isi)
        expected = dataset_meta(self.cfg, role, snr_db, isi=isi)
        ds = None
        if path.exists():
            try:
                ds = load_dataset(path)
            except FormatError as exc:
                log.warning("regenerating unreadable dataset %s: %s", path, exc)
            if ds is not None and ds.meta != expected:
                log.info("dataset %s does not match the config; regenerating", path)
                ds = None
        if ds is None:
            ds = generate_dataset(self.cfg, role, snr_db, isi=isi)
            save_dataset(path, ds)
        self._datasets[key] = ds
        return ds

    # models -----------------------------------------------------------------
    def _new_estimator(self, variant: str, seed: int):
        c = self.cfg
        common = dict(
            max_epochs=c.train_max_epochs, patience=c.train_patience,
            batch_size=c.train_batch_size, learning_rate=c.train_learning_rate,
            validation_fraction=c.train_validation_fraction, random_state=seed,
        )
        if variant == "cnn":
            a = c.cnn_arch
            return CNNEqualizer(a.conv1_filters, a.conv1_width, a.conv2_filters,
                                a.conv2_width, **common)
        a = c.rnn_arch
        return RNNEqualizer(a.lstm1_units, a.lstm2_units, a.dense_units, **common)

    def train(self, variant: str, snr_db: float):
        """Train (or reload) the neural equalizer used at ``snr_db``."""
        if variant not in NEURAL:
            raise ValueError(f"only {NEURAL} are trainable models, got {variant!r}")
        rel = self.model_relpath(variant, snr_db)
        path = self.root / rel
        if self.cfg.mixed_snr_training and variant in self._mixed:
            return self._mixed[variant], rel
        if self.reuse and path.exists():
            try:
                est = load_equalizer(path)
                if est.arch_ == (self.cfg.cnn_arch if variant == "cnn" else self.cfg.rnn_arch):
                    log.info("reusing %s", path)
                    if self.cfg.mixed_snr_training:
                        self._mixed[variant] = est
                    return est, rel
            except (FormatError, ValueError) as exc:
                log.warning("retraining; cannot load %s: %s", path, exc)

        if self.cfg.mixed_snr_training:
            est = self._new_estimator(variant, cell_seed(self.cfg.seed, variant, None))
            pairs = [make_training_pairs(ds.rx, ds.tx, est._arch().frame)
                     for ds in (self.dataset("train", s) for s in self.cfg.snr_list)]
            est.fit_pairs(np.concatenate([p[0] for p in pairs]),
                          np.concatenate([p[1] for p in pairs]))
            self._mixed[variant] = est
        else:
            train = self.dataset("train", snr_db)
            est = self._new_estimator(variant, cell_seed(self.cfg.seed, variant, snr_db))
            est.fit(train.rx, train.tx)
        self._dir("models")
        est.save(path)
        log.info("%s @ %g dB: %d epochs, best %d", variant, snr_db,
                 len(est.training_log_), est.best_epoch_)
        return est, rel

    # evaluation -------------------------------------------------------------
    def equalize(self, variant: str, snr_db: float):
        """Return (soft symbols for the test set, model file or '')."""
        test = self.dataset("test", snr_db)
        if variant == "none":
            return test.rx, ""
        if variant == "no_isi_reference":
            return self.dataset("test", snr_db, isi=False).rx, ""
        if variant == "lms":
            train = self.dataset("train", snr_db)
            c = self.cfg.lms_config
            est = LMSEqualizer(c.num_taps, c.step_size, c.reference_delay, c.training_len)
            return est.fit(train.rx, train.tx).predict(test.rx), ""
        if variant in NEURAL:
            est, rel = self.train(variant, snr_db)
            return est.predict(test.rx), rel
        raise ValueError(f"unknown variant {variant!r}")

    def evaluate(self, variant: str, snr_db: float) -> BerRow:
        """Run one (variant, SNR) cell; failures become an error row."""
        cell = self.cell_path(variant, snr_db)
        if self.reuse and cell.exists():
            try:
                rows = read_rows(cell)
                if len(rows) == 1 and not rows[0].status.startswith("error"):
                    return rows[0]
            except (OSError, ValueError):
                pass
        test = None
        try:
            test = self.dataset("test", snr_db)
            soft, model_file = self.equalize(variant, snr_db)
            pre_err = bit_errors(qpsk_hard_demodulate(soft), test.coded)
            post_err = bit_errors(viterbi_decode_soft(soft, self.trellis), test.info)
            status = "ok"
            if min(pre_err, post_err) < MIN_RELIABLE_ERRORS:
                status = "unreliable"
            row = BerRow(variant, snr_db, pre_err / test.coded.size, post_err / test.info.size,
                         test.coded.size, test.info.size, self.cfg.seed, model_file, status)
        except Exception as exc:  # recorded in the report; the sweep continues
            log.exception("cell %s @ %g dB failed", variant, snr_db)
            msg = f"error: {type(exc).__name__}: {exc}".replace("\n", " ")
            n_coded = test.coded.size if test is not None else 0
            n_info = test.info.size if test is not None else 0
            row = BerRow(variant, snr_db, float("nan"), float("nan"), n_coded, n_info,
                         self.cfg.seed, "", msg)
        write_rows(cell, [row])
        return row

    def run(self) -> BerReport:
        self.write_config()
        rows = []
        for snr in self.cfg.snr_list:
            for variant in self.cfg.variants:
                row = self.evaluate(variant, snr)
                log.info("%-16s %5g dB  pre %.3e  post %.3e  %s", variant, snr,
                         row.pre_ber, row.post_ber, row.status)
                rows.append(row)
        order = {v: i for i, v in enumerate(self.cfg.variants)}
        rows.sort(key=lambda r: (order[r.variant], self.cfg.snr_list.index(r.snr_db)))
        report = BerReport(rows)
        report.write_csv(self.root / "report.csv")
        return report


def run_experiment(cfg: ExperimentConfig, output_dir: Optional[str | os.PathLike] = None) -> BerReport:
    return Experiment(cfg, output_dir).run()
