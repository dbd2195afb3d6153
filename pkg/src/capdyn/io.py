"""Config files, matrix and table CSV, and minimal SVG line charts.

Every file is written atomically: content goes to a temporary file in the
destination directory and is renamed into place.
"""

from __future__ import annotations

import csv
import io
import math
import os
import tempfile
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Union

import numpy as np

from .model import CapabilityRequirements, Endowments

PathLike = Union[str, os.PathLike]


class ConfigError(ValueError):
    pass


class MatrixFormatError(ValueError):
    pass


# ---------------------------------------------------------------- config


@dataclass
class RunConfig:
    """Flat set of typed run parameters.

    Values left at ``None`` fall back to each command's default.
    """

    gamma: Optional[float] = None
    delta: Optional[float] = None
    q_bar: Optional[float] = None
    r0: Optional[float] = None
    rate: Optional[float] = None
    t_end: Optional[float] = None
    dt: Optional[float] = None
    n_r: Optional[int] = None
    n_q: Optional[int] = None
    n_delta: Optional[int] = None
    n_economies: Optional[int] = None
    n_activities: Optional[int] = None
    n_capabilities: Optional[int] = None
    seed: Optional[int] = None
    q_path: Optional[str] = None
    r_path: Optional[str] = None
    weights_path: Optional[str] = None
    out: Optional[str] = None
    name: Optional[str] = None

    def validate(self) -> "RunConfig":
        if self.gamma is not None and not (0.0 < self.gamma <= 1.0):
            raise ConfigError(f"gamma must lie in (0, 1], got {self.gamma}")
        if self.delta is not None and not (self.delta >= 0.0 and math.isfinite(self.delta)):
            raise ConfigError(f"delta must be finite and >= 0, got {self.delta}")
        for key in ("q_bar", "r0"):
            v = getattr(self, key)
            if v is not None and not (0.0 <= v <= 1.0):
                raise ConfigError(f"{key} must lie in [0, 1], got {v}")
        if self.rate is not None and not (self.rate >= 0.0 and math.isfinite(self.rate)):
            raise ConfigError(f"rate must be finite and >= 0, got {self.rate}")
        for key in ("t_end", "dt"):
            v = getattr(self, key)
            if v is not None and not (v > 0.0 and math.isfinite(v)):
                raise ConfigError(f"{key} must be positive, got {v}")
        for key in ("n_r", "n_q", "n_delta", "n_economies", "n_activities", "n_capabilities"):
            v = getattr(self, key)
            if v is not None and v < 1:
                raise ConfigError(f"{key} must be >= 1, got {v}")
        if self.seed is not None and self.seed < 0:
            raise ConfigError(f"seed must be >= 0, got {self.seed}")
        return self

    def merged(self, overrides: Mapping[str, object]) -> "RunConfig":
        """Copy with every non-``None`` override applied."""
        known = {f.name for f in fields(self)}
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        for key, value in overrides.items():
            if key not in known:
                raise ConfigError(f"unknown config key '{key}'")
            if value is not None:
                values[key] = value
        return RunConfig(**values).validate()


_CONFIG_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(key: str, raw: str):
    kind = _CONFIG_TYPES[key]
    try:
        if "float" in kind:
            return float(raw)
        if "int" in kind:
            return int(raw)
    except ValueError:
        raise ConfigError(f"config key '{key}': cannot parse {raw!r}") from None
    return raw


def parse_config(text: str) -> RunConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _CONFIG_TYPES:
            raise ConfigError(f"line {lineno}: unknown config key '{key}'")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key '{key}'")
        values[key] = _coerce(key, raw)
    return RunConfig(**values).validate()


def load_config(path: PathLike) -> RunConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------- writing


def format_number(x) -> str:
    """Shortest round-trip decimal, independent of locale."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return repr(x)
    return str(x)


def atomic_write_text(path: PathLike, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_number(v) for v in row])
    return buf.getvalue()


@dataclass
class Table:
    """Named columns of equal length, written as CSV in column order."""

    columns: Dict[str, Sequence] = field(default_factory=dict)

    def __post_init__(self):
        lengths = {len(v) for v in self.columns.values()}
        if len(lengths) > 1:
            raise ValueError(f"columns have unequal lengths: {sorted(lengths)}")

    @property
    def header(self) -> List[str]:
        return list(self.columns)

    def __len__(self):
        return len(next(iter(self.columns.values()))) if self.columns else 0

    def __getitem__(self, key):
        return self.columns[key]

    def rows(self):
        return zip(*self.columns.values())

    def to_csv(self) -> str:
        return _csv_text(self.header, self.rows())


def write_table(path: PathLike, table: Table) -> Path:
    return atomic_write_text(path, table.to_csv())


def read_table(path: PathLike) -> Dict[str, list]:
    """Read a CSV written by :func:`write_table`; numeric cells become floats."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        cols = {h: [] for h in header}
        for row in reader:
            for h, cell in zip(header, row):
                try:
                    cols[h].append(float(cell))
                except ValueError:
                    cols[h].append(cell)
    return cols


def trajectory_table(traj, labels: Sequence[str]) -> Table:
    """Trajectory as columns ``t`` plus one column per series."""
    values = traj.values.reshape(len(traj.times), -1)
    if values.shape[1] != len(labels):
        raise ValueError(f"{values.shape[1]} series but {len(labels)} labels")
    cols = {"t": traj.times}
    for j, name in enumerate(labels):
        cols[name] = values[:, j]
    return Table(cols)


# ---------------------------------------------------------------- matrices


def save_matrix(matrix: Union[CapabilityRequirements, Endowments], path: PathLike) -> Path:
    """Write a labelled matrix: header row of capability labels, label column first."""
    if isinstance(matrix, CapabilityRequirements):
        corner, rows, data = "activity", matrix.activities, matrix.q
    elif isinstance(matrix, Endowments):
        corner, rows, data = "economy", matrix.economies, matrix.r
    else:
        raise TypeError(f"cannot save {type(matrix).__name__}")
    header = [corner, *matrix.capabilities]
    body = ([label, *row] for label, row in zip(rows, data.tolist()))
    return atomic_write_text(path, _csv_text(header, body))


def save_labelled_matrix(path: PathLike, corner: str, row_labels, col_labels, data) -> Path:
    data = np.asarray(data, dtype=float)
    header = [corner, *col_labels]
    body = ([label, *row] for label, row in zip(row_labels, data.tolist()))
    return atomic_write_text(path, _csv_text(header, body))


def load_matrix(path: PathLike, kind: Optional[str] = None):
    """Read a labelled probability matrix.

    ``kind`` is ``"requirements"`` or ``"endowments"``; when omitted it is
    inferred from the corner cell (``activity`` or ``economy``), defaulting
    to requirements.

    Raises
    ------
    MatrixFormatError
        On malformed rows or unparsable cells (with row/column location) and
        on entries outside [0, 1] (listing every offending cell).
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r and any(cell.strip() for cell in r)]
    if not rows:
        raise MatrixFormatError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if len(header) < 2:
        raise MatrixFormatError(f"{path}: header needs a label column and at least one capability")
    capabilities = header[1:]
    labels, data = [], []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise MatrixFormatError(
                f"{path}: row {i} has {len(row)} fields, header has {len(header)}"
            )
        labels.append(row[0].strip())
        values = []
        for j, cell in enumerate(row[1:], start=2):
            try:
                values.append(float(cell))
            except ValueError:
                raise MatrixFormatError(
                    f"{path}: row {i}, column {j} ({capabilities[j - 2]}): cannot parse {cell!r}"
                ) from None
        data.append(values)
    if not data:
        raise MatrixFormatError(f"{path}: no data rows")
    arr = np.array(data, dtype=float)
    bad = [
        f"row {i + 2} ({labels[i]}), column {j + 2} ({capabilities[j]}) = {float(arr[i, j])!r}"
        for i, j in zip(*np.nonzero(~((arr >= 0.0) & (arr <= 1.0))))
    ]
    if bad:
        raise MatrixFormatError(f"{path}: entries outside [0, 1]: " + "; ".join(bad))
    if kind is None:
        kind = "endowments" if header[0].lower() in ("economy", "economies", "c") else "requirements"
    if kind == "requirements":
        return CapabilityRequirements(arr, activities=labels, capabilities=capabilities)
    if kind == "endowments":
        return Endowments(arr, economies=labels, capabilities=capabilities)
    raise ValueError(f"unknown matrix kind {kind!r}")


def load_vector(path: PathLike) -> np.ndarray:
    """Read a two-column ``label,value`` CSV with a header row."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    out = []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise MatrixFormatError(f"{path}: row {i} must have 2 fields")
        try:
            out.append(float(row[1]))
        except ValueError:
            raise MatrixFormatError(f"{path}: row {i}, column 2: cannot parse {row[1]!r}") from None
    return np.array(out)


# ---------------------------------------------------------------- svg

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def svg_line_chart(
    x: Sequence[float],
    series: Mapping[str, Sequence[float]],
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    width: int = 640,
    height: int = 420,
) -> str:
    """Plain polyline chart; no external renderer involved."""
    x = np.asarray(x, dtype=float)
    ys = {k: np.asarray(v, dtype=float) for k, v in series.items()}
    finite = np.concatenate([v[np.isfinite(v)] for v in ys.values()]) if ys else np.zeros(1)
    y_lo, y_hi = float(finite.min()), float(finite.max())
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    x_lo, x_hi = float(x.min()), float(x.max())
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    ml, mr, mt, mb = 60, 130, 30, 45
    pw, ph = width - ml - mr, height - mt - mb

    def sx(v):
        return ml + (v - x_lo) / (x_hi - x_lo) * pw

    def sy(v):
        return mt + ph - (v - y_lo) / (y_hi - y_lo) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{ml}" y1="{mt + ph}" x2="{ml + pw}" y2="{mt + ph}" stroke="black"/>',
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{mt + ph}" stroke="black"/>',
        f'<text x="{ml + pw / 2:.1f}" y="{height - 8}" text-anchor="middle">{xlabel}</text>',
        f'<text x="14" y="{mt + ph / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 14 {mt + ph / 2:.1f})">{ylabel}</text>',
        f'<text x="{ml + pw / 2:.1f}" y="18" text-anchor="middle">{title}</text>',
        f'<text x="{ml - 4}" y="{mt + ph:.1f}" text-anchor="end">{y_lo:.3g}</text>',
        f'<text x="{ml - 4}" y="{mt + 10:.1f}" text-anchor="end">{y_hi:.3g}</text>',
        f'<text x="{ml}" y="{mt + ph + 16:.1f}" text-anchor="middle">{x_lo:.3g}</text>',
        f'<text x="{ml + pw}" y="{mt + ph + 16:.1f}" text-anchor="middle">{x_hi:.3g}</text>',
    ]
    for k, (name, y) in enumerate(ys.items()):
        color = _PALETTE[k % len(_PALETTE)]
        ok = np.isfinite(y)
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x[ok], y[ok]))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = mt + 14 + 16 * k
        parts.append(
            f'<line x1="{ml + pw + 10}" y1="{ly - 4}" x2="{ml + pw + 28}" y2="{ly - 4}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        parts.append(f'<text x="{ml + pw + 32}" y="{ly}">{name}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
