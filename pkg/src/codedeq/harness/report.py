"""BER report rows and their CSV form."""
from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .metrics import ber_standard_error

__all__ = ["CSV_HEADER", "BerRow", "BerReport", "read_rows", "write_rows", "merge_reports"]

CSV_HEADER = ("variant", "snr_db", "pre_ber", "post_ber", "coded_bits", "info_bits",
              "seed", "model_file", "status")


@dataclass(frozen=True)
class BerRow:
    variant: str
    snr_db: float
    pre_ber: float
    post_ber: float
    coded_bits: int
    info_bits: int
    seed: int
    model_file: str
    status: str

    @property
    def ok(self) -> bool:
        return not self.status.startswith("error")

    @property
    def pre_se(self) -> float:
        return ber_standard_error(self.pre_ber, self.coded_bits)

    @property
    def post_se(self) -> float:
        return ber_standard_error(self.post_ber, self.info_bits)

    def as_strings(self) -> list[str]:
        return [
            self.variant,
            f"{self.snr_db:g}",
            repr(float(self.pre_ber)),
            repr(float(self.post_ber)),
            str(self.coded_bits),
            str(self.info_bits),
            str(self.seed),
            self.model_file,
            self.status,
        ]

    @classmethod
    def from_strings(cls, rec: dict) -> "BerRow":
        try:
            return cls(
                rec["variant"], float(rec["snr_db"]), float(rec["pre_ber"]),
                float(rec["post_ber"]), int(rec["coded_bits"]), int(rec["info_bits"]),
                int(rec["seed"]), rec["model_file"], rec["status"],
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise ValueError(f"malformed report row {rec!r}: {exc}") from None


def _to_csv(rows: Iterable[BerRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow(r.as_strings())
    return buf.getvalue()


def write_rows(path, rows: Iterable[BerRow]) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(_to_csv(rows), encoding="utf-8")
    os.replace(tmp, path)


def read_rows(path) -> list[BerRow]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise ValueError(f"{path}: unexpected CSV header {reader.fieldnames}")
        return [BerRow.from_strings(rec) for rec in reader]


class BerReport:
    def __init__(self, rows: Iterable[BerRow] = ()):
        self.rows = list(rows)
        seen = set()
        for r in self.rows:
            key = (r.variant, r.snr_db)
            if key in seen:
                raise ValueError(f"duplicate report cell {key}")
            seen.add(key)

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def get(self, variant: str, snr_db: float) -> BerRow:
        for r in self.rows:
            if r.variant == variant and math.isclose(r.snr_db, snr_db):
                return r
        raise KeyError((variant, snr_db))

    def to_csv(self) -> str:
        return _to_csv(self.rows)

    def write_csv(self, path) -> None:
        write_rows(path, self.rows)

    @classmethod
    def read_csv(cls, path) -> "BerReport":
        return cls(read_rows(path))

    def format_table(self) -> str:
        lines = [f"{'variant':<17}{'SNR':>5}  {'pre-BER':>10}  {'post-BER':>10}  status"]
        for r in self.rows:
            lines.append(f"{r.variant:<17}{r.snr_db:>5g}  {r.pre_ber:>10.3e}  "
                         f"{r.post_ber:>10.3e}  {r.status}")
        lines.append("BER measured on the test set, which shares no bits or noise with training.")
        return "\n".join(lines)


def merge_reports(paths: Iterable[str | os.PathLike]) -> BerReport:
    """Concatenate report/cell CSVs; later files override earlier cells."""
    cells: dict = {}
    for p in paths:
        for r in read_rows(p):
            cells[(r.variant, r.snr_db)] = r
    return BerReport(cells.values())
