"""Result rows and deterministic CSV output."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import astuple, dataclass, field, fields
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class ScanRecord:
    """One point of a stability scan: ``value`` should stay below ``threshold``.

    ``parameter`` carries the second scan coordinate where there is one
    (``zeta`` for the scalar scan, ``etabar`` for splitting scans).
    """

    abscissa: float
    value: float
    threshold: float
    parameter: float = float("nan")

    @property
    def excess(self) -> float:
        return self.value - self.threshold


@dataclass
class ScanResult:
    name: str
    records: list = field(default_factory=list)
    parameters: dict = field(default_factory=dict)

    def excess(self) -> np.ndarray:
        return np.array([r.excess for r in self.records])

    def abscissae(self) -> np.ndarray:
        return np.array([r.abscissa for r in self.records])

    def max_excess(self) -> float:
        ex = self.excess()
        return float(ex.max()) if ex.size else -math.inf

    def sorted(self) -> "ScanResult":
        recs = sorted(self.records, key=lambda r: (r.parameter if math.isfinite(r.parameter) else 0.0, r.abscissa))
        return ScanResult(self.name, recs, dict(self.parameters))


@dataclass(frozen=True)
class ConvergenceRecord:
    dt: float
    err: float
    s_mean: float
    m_mean: float
    eta_mean: float
    n_fast_evals: int
    n_slow_evals: int


def observed_order(dts, errs) -> float:
    """Least-squares slope of ``log err`` against ``log dt``."""
    dts = np.asarray(dts, dtype=float)
    errs = np.asarray(errs, dtype=float)
    if dts.size < 2:
        raise ValueError("need at least two step sizes")
    if np.any(errs <= 0):
        return float("nan")
    slope, _ = np.polyfit(np.log(dts), np.log(errs), 1)
    return float(slope)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.17g" % float(v)


def format_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path, header, rows) -> None:
    """Write a CSV with a header row, ``%.17g`` floats and ``\\n`` line endings."""
    text = format_csv(header, rows)
    with open(Path(path), "w", newline="", encoding="ascii") as fh:
        fh.write(text)


def dataclass_rows(items) -> tuple[list, list]:
    """Header and rows of a homogeneous list of dataclass instances."""
    items = list(items)
    if not items:
        return [], []
    header = [f.name for f in fields(items[0])]
    return header, [astuple(it) for it in items]
