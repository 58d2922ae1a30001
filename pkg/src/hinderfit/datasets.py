"""CSV ingestion and seeded synthetic series."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError, DuplicateTime, NonPositiveQ, ParseError, TooFewRows
from .fitting import GrowthModel, predict
from .kernel import family_label
from .stats import TimeSeries


@dataclass(frozen=True)
class Dataset:
    series: TimeSeries
    t_unit: str = "t"
    q_unit: str = "Q"
    source: str = ""

    def __post_init__(self):
        if not (self.t_unit and self.q_unit):
            raise DomainError("unit labels must be non-empty")


def parse_csv(text: str, t_col: str = "t", q_col: str = "Q", source: str = "<string>") -> Dataset:
    """Parse CSV text with a header row; columns other than ``t_col`` and ``q_col`` are ignored.

    Rows may come in any order. Blank lines are skipped. Line numbers in
    errors are 1-based and count the header.
    """
    reader = csv.reader(io.StringIO(text))
    header = None
    rows = []
    for row in reader:
        line = reader.line_num
        if not row or all(not cell.strip() for cell in row):
            continue
        if header is None:
            header = [cell.strip() for cell in row]
            missing = [c for c in (t_col, q_col) if c not in header]
            if missing:
                raise ParseError(f"header lacks column(s) {', '.join(missing)}", line=line)
            it, iq = header.index(t_col), header.index(q_col)
            continue
        if len(row) <= max(it, iq):
            raise ParseError("row has too few fields", line=line)
        try:
            t, q = float(row[it]), float(row[iq])
        except ValueError:
            raise ParseError(f"cannot parse number in {row!r}", line=line) from None
        if not (math.isfinite(t) and math.isfinite(q)):
            raise ParseError("values must be finite", line=line)
        if q <= 0:
            raise NonPositiveQ(f"Q = {q!r} on line {line} is not positive")
        rows.append((t, q, line))
    if header is None:
        raise ParseError("empty input, no header row", line=1)
    if len(rows) < 2:
        raise TooFewRows(f"need at least 2 data rows, got {len(rows)}")
    rows.sort(key=lambda r: r[0])
    for a, b in zip(rows, rows[1:]):
        if a[0] == b[0]:
            raise DuplicateTime(f"t = {a[0]!r} appears on lines {a[2]} and {b[2]}")
    t = np.array([r[0] for r in rows])
    q = np.array([r[1] for r in rows])
    return Dataset(TimeSeries(t, q), t_unit=t_col, q_unit=q_col, source=source)


def load_csv(path, t_col: str = "t", q_col: str = "Q") -> Dataset:
    """Read a UTF-8 CSV file (a leading byte-order mark is tolerated)."""
    text = Path(path).read_text(encoding="utf-8-sig")
    return parse_csv(text, t_col=t_col, q_col=q_col, source=str(path))


def format_float(v: float) -> str:
    """17 significant digits, so every float survives a text round trip."""
    return format(float(v), ".17g")


def dataset_to_csv(ds: Dataset) -> bytes:
    lines = [f"{ds.t_unit},{ds.q_unit}"]
    lines += [f"{format_float(t)},{format_float(q)}" for t, q in zip(ds.series.t, ds.series.Q)]
    return ("\n".join(lines) + "\n").encode("utf-8")


@dataclass(frozen=True)
class SynthConfig:
    """Evenly spaced grid ``linspace(t0, t1, n)`` with log-normal noise of size ``sigma``."""

    model: GrowthModel
    t0: float
    t1: float
    n: int
    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.sigma >= 0:
            raise DomainError("sigma must be non-negative")
        if self.n < 2:
            raise TooFewRows("a synthetic series needs n >= 2")
        if not self.t1 > self.t0:
            raise DomainError("need t1 > t0")


def synth_generate(cfg: SynthConfig) -> Dataset:
    """``Q_i = predict(t_i) * exp(sigma * eps_i)``.

    ``eps`` comes from numpy's PCG64 generator (``default_rng(seed)``), so a
    seed fixes the output bit for bit. ``sigma = 0`` returns the model exactly.
    """
    t = np.linspace(cfg.t0, cfg.t1, cfg.n)
    eps = np.random.default_rng(cfg.seed).standard_normal(cfg.n)
    q = np.asarray(predict(cfg.model, t)) * np.exp(cfg.sigma * eps)
    source = f"synth:{family_label(cfg.model.family)}:sigma={cfg.sigma!r}:seed={cfg.seed}"
    return Dataset(TimeSeries(t, q), source=source)
