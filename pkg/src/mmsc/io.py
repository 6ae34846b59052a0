"""CSV, result-file and SVG plumbing."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from mmsc.correlations import CorrelationTrace
from mmsc.model import Spectrum

SPECTRUM_HEADER = ("freq_hz", "transmission")
G2_HEADER = ("tau_s", "g2")
GAMMA1_HEADER = ("tau_s", "re", "im")


class FormatError(ValueError):
    """A data file does not follow its declared layout."""


@dataclass
class ResultTable:
    """Named real-valued columns plus a caption."""

    columns: dict
    caption: str = ""
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        cols = {}
        for k, v in self.columns.items():
            arr = np.atleast_1d(np.asarray(v, dtype=float))
            if arr.ndim != 1:
                raise ValueError(f"column {k!r} is not one-dimensional")
            cols[str(k)] = arr
        if len(cols) != len(self.columns):
            raise ValueError("column names must be unique")
        lengths = {a.size for a in cols.values()}
        if len(lengths) > 1:
            raise ValueError("columns must all have the same length")
        self.columns = cols

    @property
    def n_rows(self) -> int:
        return next(iter(self.columns.values())).size if self.columns else 0

    def to_dict(self):
        return {"caption": self.caption, "columns": self.columns, "notes": self.notes}

    def to_text(self) -> str:
        names = list(self.columns)
        cells = [[fmt(self.columns[n][i]) for n in names] for i in range(self.n_rows)]
        widths = [max([len(n)] + [len(r[j]) for r in cells]) for j, n in enumerate(names)]
        lines = [self.caption] if self.caption else []
        lines.append("  ".join(n.rjust(w) for n, w in zip(names, widths)))
        for r in cells:
            lines.append("  ".join(c.rjust(w) for c, w in zip(r, widths)))
        return "\n".join(lines)


def fmt(x) -> str:
    """Shortest round-tripping decimal string, never in exponent notation."""
    return np.format_float_positional(float(x), unique=True, trim="-")


def _write_rows(path, header, columns):
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*columns):
            fh.write(",".join(fmt(v) for v in row) + "\n")


def _read_rows(path, header):
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            got = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file") from None
        if tuple(h.strip() for h in got) != header:
            raise FormatError(f"{path}: header {','.join(got)!r}, expected {','.join(header)!r}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise FormatError(f"{path}:{lineno}: expected {len(header)} fields")
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                raise FormatError(f"{path}:{lineno}: non-numeric field") from None
    if not rows:
        raise FormatError(f"{path}: no data rows")
    return np.array(rows).T


def write_spectrum(path, spec: Spectrum, sidecar=True):
    _write_rows(path, SPECTRUM_HEADER, (spec.freqs, spec.values))
    if sidecar:
        write_json(Path(path).with_suffix(".meta.json"), spec.meta)


def read_spectrum(path) -> Spectrum:
    f, t = _read_rows(path, SPECTRUM_HEADER)
    meta = {}
    side = Path(path).with_suffix(".meta.json")
    if side.exists():
        meta = json.loads(side.read_text())
    try:
        return Spectrum(f, t, meta)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None


def write_g2(path, trace: CorrelationTrace):
    _write_rows(path, G2_HEADER, (trace.taus, np.real(trace.values)))


def read_g2(path) -> CorrelationTrace:
    tau, g2 = _read_rows(path, G2_HEADER)
    try:
        return CorrelationTrace(tau, g2)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None


def write_gamma1(path, trace: CorrelationTrace):
    v = np.asarray(trace.values, dtype=complex)
    _write_rows(path, GAMMA1_HEADER, (trace.taus, v.real, v.imag))


def read_gamma1(path) -> CorrelationTrace:
    tau, re, im = _read_rows(path, GAMMA1_HEADER)
    return CorrelationTrace(tau, re + 1j * im)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, data):
    if isinstance(data, ResultTable):
        data = data.to_dict()
    Path(path).write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")


def read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from None


def write_table_csv(path, table: ResultTable):
    _write_rows(path, tuple(table.columns), tuple(table.columns.values()))


def read_records(path):
    """Calibration rows ``od,od_err,n_eff,n_err``."""
    cols = _read_rows(path, ("od", "od_err", "n_eff", "n_err"))
    return [tuple(row) for row in cols.T]


def write_svg(path, x, ys, xlabel="", ylabel="", title="", width=640, height=400, labels=None):
    """Line plot of one or more series sharing an x axis."""
    x = np.asarray(x, dtype=float)
    ys = [np.asarray(y, dtype=float) for y in (ys if isinstance(ys, (list, tuple)) else [ys])]
    ml, mr, mt, mb = 70, 20, 30, 50
    pw, ph = width - ml - mr, height - mt - mb
    x0, x1 = float(x.min()), float(x.max())
    y0 = float(min(y.min() for y in ys))
    y1 = float(max(y.max() for y in ys))
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1

    def px(v):
        return ml + (v - x0) / (x1 - x0) * pw

    def py(v):
        return mt + ph - (v - y0) / (y1 - y0) * ph

    colors = ("#1f77b4", "#d62728", "#7f7f7f", "#2ca02c")
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for i, y in enumerate(ys):
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y))
        out.append(
            f'<polyline fill="none" stroke="{colors[i % len(colors)]}" stroke-width="1" points="{pts}"/>'
        )
    for v in np.linspace(x0, x1, 5):
        out.append(
            f'<text x="{px(v):.1f}" y="{mt + ph + 18}" font-size="11" text-anchor="middle">{v:.4g}</text>'
        )
    for v in np.linspace(y0, y1, 5):
        out.append(
            f'<text x="{ml - 6}" y="{py(v) + 4:.1f}" font-size="11" text-anchor="end">{v:.3g}</text>'
        )
    out.append(
        f'<text x="{ml + pw / 2}" y="{height - 10}" font-size="13" text-anchor="middle">{xlabel}</text>'
    )
    out.append(
        f'<text x="15" y="{mt + ph / 2}" font-size="13" text-anchor="middle" '
        f'transform="rotate(-90 15 {mt + ph / 2})">{ylabel}</text>'
    )
    if title:
        out.append(f'<text x="{ml + pw / 2}" y="18" font-size="13" text-anchor="middle">{title}</text>')
    if labels:
        for i, lab in enumerate(labels):
            out.append(
                f'<text x="{ml + pw - 4}" y="{mt + 16 + 14 * i}" font-size="11" text-anchor="end" '
                f'fill="{colors[i % len(colors)]}">{lab}</text>'
            )
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")
