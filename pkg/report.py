# report.py
"""
Result files for fracwell
Writes CSV/JSON result tables and SVG plots, reads them back, and builds the plain-text report
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from config import Settings
from errors import ConfigurationError
from utils import FileUtils, FormatUtils

logger = logging.getLogger(__name__)

# Columns treated as per-row flags in the report summary
FLAG_COLUMNS = ("diverged", "heavy_tail", "truncated")
# Columns plotted against the first column when present, in this order
PLOT_COLUMNS = ("value", "estimate", "phi0", "j_m", "profile_lower", "profile_upper", "lower", "upper")


@dataclass
class ResultTable:
    columns: list
    rows: list
    meta: dict = field(default_factory=dict)

    def column(self, name: str) -> list:
        return [row[name] for row in self.rows]

    def numeric_columns(self) -> list:
        names = []
        for name in self.columns:
            values = self.column(name)
            if values and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in values):
                names.append(name)
        return names


def header_path(out) -> Path:
    """Sidecar file carrying the JSON header of a CSV result"""
    return Path(FileUtils.normalize_path(out) + ".meta.json")


def _json_value(value):
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    if isinstance(value, (tuple, np.ndarray)):
        return list(value)
    return value


def json_text(rows, columns, meta: Optional[dict] = None) -> str:
    """{"meta": ..., "rows": [...]} with the rows restricted to columns"""
    payload = {
        "meta": meta or {},
        "rows": [{c: _json_value(row[c]) for c in columns} for row in rows],
    }
    return json.dumps(payload, indent=2, default=_json_value) + "\n"


def write_results(rows, columns: Sequence[str], out="-", fmt: str = "csv", meta: Optional[dict] = None,
                  header: Optional[dict] = None) -> bool:
    """Write a result table; header (a JSON object) goes into meta for JSON and into a sidecar for CSV files"""
    rows = list(rows)
    columns = list(columns)
    if fmt == "json":
        full_meta = dict(meta or {})
        if header is not None:
            full_meta["header"] = header
        return FileUtils.write_text(out, json_text(rows, columns, full_meta))
    if fmt != "csv":
        raise ConfigurationError(f"format must be csv or json, got {fmt!r}")
    ok = FileUtils.write_text(out, FormatUtils.csv_text(rows, columns))
    if header is not None:
        if FileUtils.normalize_path(out) in ("", "-"):
            logger.info("header: %s", json.dumps(header, default=_json_value))
        else:
            ok = FileUtils.write_text(header_path(out), json.dumps(header, indent=2, default=_json_value) + "\n") and ok
    return ok


def _parse_csv(text: str) -> ResultTable:
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        return ResultTable([], [])
    columns = lines[0].split(",")
    rows = []
    for number, line in enumerate(lines[1:], 2):
        cells = line.split(",")
        if len(cells) != len(columns):
            raise ConfigurationError(f"line {number}: expected {len(columns)} fields, got {len(cells)}")
        rows.append({c: FormatUtils.parse_value(cell) for c, cell in zip(columns, cells)})
    return ResultTable(columns, rows)


def read_results(path) -> ResultTable:
    """Load a CSV or JSON result file written by write_results"""
    if not FileUtils.validate_path(path):
        raise ConfigurationError(f"result file not found: {path}")
    text = Path(FileUtils.normalize_path(path)).read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"malformed JSON result file {path}: {e}")
        rows = payload.get("rows", [])
        columns = list(rows[0].keys()) if rows else []
        return ResultTable(columns, rows, payload.get("meta", {}))
    table = _parse_csv(text)
    sidecar = header_path(path)
    if sidecar.exists():
        try:
            table.meta = {"header": json.loads(sidecar.read_text(encoding="utf-8"))}
        except json.JSONDecodeError:
            logger.warning("ignoring malformed header file %s", sidecar)
    return table


# ---------------------------------------------------------------------------
# SVG

@dataclass(frozen=True)
class Series:
    name: str
    xs: tuple
    ys: tuple
    dashed: bool = False


_COLOURS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")
_WIDTH, _HEIGHT = 720, 440
_LEFT, _RIGHT, _TOP, _BOTTOM = 80, 180, 40, 60


def _finite_pairs(series: Series, log_y: bool):
    for x, y in zip(series.xs, series.ys):
        if math.isfinite(x) and math.isfinite(y) and (y > 0 or not log_y):
            yield x, (math.log10(y) if log_y else y)


def _span(lo: float, hi: float):
    if hi <= lo:
        pad = abs(lo) * 0.05 or 1.0
        return lo - pad, hi + pad
    return lo, hi


def svg_plot(series: Sequence[Series], title: str = "", x_label: str = "", y_label: str = "",
             log_y: bool = False) -> str:
    """Polyline plot with axes box, five ticks per axis and a legend"""
    points = [list(_finite_pairs(s, log_y)) for s in series]
    xs = [x for pts in points for x, _ in pts] or [0.0, 1.0]
    ys = [y for pts in points for _, y in pts] or [0.0, 1.0]
    x_lo, x_hi = _span(min(xs), max(xs))
    y_lo, y_hi = _span(min(ys), max(ys))
    plot_w = _WIDTH - _LEFT - _RIGHT
    plot_h = _HEIGHT - _TOP - _BOTTOM

    def px(x):
        return _LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w

    def py(y):
        return _TOP + (y_hi - y) / (y_hi - y_lo) * plot_h

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<rect x="{_LEFT}" y="{_TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>',
        f'<text x="{_LEFT + plot_w / 2:.1f}" y="{_TOP - 14}" text-anchor="middle" font-size="14">{title}</text>',
        f'<text x="{_LEFT + plot_w / 2:.1f}" y="{_HEIGHT - 16}" text-anchor="middle">{x_label}</text>',
        f'<text x="18" y="{_TOP + plot_h / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 18 {_TOP + plot_h / 2:.1f})">{y_label}{" (log10)" if log_y else ""}</text>',
    ]
    for tick in np.linspace(x_lo, x_hi, 5):
        out.append(f'<line x1="{px(tick):.1f}" y1="{_TOP + plot_h}" x2="{px(tick):.1f}" y2="{_TOP + plot_h + 5}" stroke="black"/>')
        out.append(f'<text x="{px(tick):.1f}" y="{_TOP + plot_h + 18}" text-anchor="middle">{tick:.3g}</text>')
    for tick in np.linspace(y_lo, y_hi, 5):
        out.append(f'<line x1="{_LEFT - 5}" y1="{py(tick):.1f}" x2="{_LEFT}" y2="{py(tick):.1f}" stroke="black"/>')
        out.append(f'<text x="{_LEFT - 8}" y="{py(tick) + 4:.1f}" text-anchor="end">{tick:.3g}</text>')
    for k, (s, pts) in enumerate(zip(series, points)):
        colour = _COLOURS[k % len(_COLOURS)]
        dash = ' stroke-dasharray="6 4"' if s.dashed else ""
        if pts:
            coords = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in pts)
            out.append(f'<polyline points="{coords}" fill="none" stroke="{colour}" stroke-width="1.5"{dash}/>')
        ly = _TOP + 16 + 18 * k
        lx = _WIDTH - _RIGHT + 16
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 24}" y2="{ly}" stroke="{colour}" stroke-width="1.5"{dash}/>')
        out.append(f'<text x="{lx + 30}" y="{ly + 4}">{s.name}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def table_series(table: ResultTable) -> list:
    """Default series of a result table: known value columns against the first column"""
    if not table.columns or not table.rows:
        return []
    numeric = table.numeric_columns()
    x_name = table.columns[0]
    if x_name not in numeric:
        return []
    xs = tuple(float(v) for v in table.column(x_name))
    series = []
    for name in PLOT_COLUMNS:
        if name in numeric and name != x_name:
            ys = tuple(float(v) for v in table.column(name))
            series.append(Series(name, xs, ys, dashed=name not in ("value", "estimate", "phi0", "j_m")))
    return series


def write_plot(table: ResultTable, path, title: str = "", log_y: bool = False) -> bool:
    series = table_series(table)
    if not series:
        logger.warning("nothing to plot in %s", title or "result table")
    x_label = table.columns[0] if table.columns else ""
    return FileUtils.write_text(path, svg_plot(series, title, x_label, "", log_y))


# ---------------------------------------------------------------------------
# Text report

class ReportBuilder:
    """Plain-text summary of a result table"""

    def __init__(self, table: ResultTable, source: str = ""):
        self.table = table
        self.source = source

    def create_header(self):
        """Create the report header block"""
        meta = self.table.meta
        header = f"""{'='*80}
                      {Settings.APP_NAME.upper()} RESULT REPORT
{'='*80}

Source: {self.source or '-'}
Rows: {len(self.table.rows)}
Columns: {', '.join(self.table.columns)}
"""
        if meta:
            header += "\nRun configuration:\n"
            for key in sorted(meta):
                if key == "header":
                    continue
                header += f"    {key:<14} {meta[key]}\n"
        return header + "\n"

    def create_column_section(self, name):
        """Statistics for one numeric column"""
        values = np.asarray(self.table.column(name), dtype=float)
        finite = values[np.isfinite(values)]
        section = f"""{'─'*80}
Column: {name}
Count: {values.size}
Finite: {finite.size}
"""
        if finite.size:
            section += (f"Min: {FormatUtils.format_float(finite.min())}\n"
                        f"Max: {FormatUtils.format_float(finite.max())}\n"
                        f"Mean: {FormatUtils.format_float(finite.mean())}\n")
        return section + "\n"

    def flag_counts(self) -> dict:
        counts = {}
        for name in FLAG_COLUMNS:
            if name in self.table.columns:
                counts[name] = sum(1 for v in self.table.column(name) if v is True)
        if "truncated_fraction" in self.table.columns:
            counts["rows with truncation"] = sum(1 for v in self.table.column("truncated_fraction") if v > 0)
        return counts

    def create_summary(self):
        """Flags raised and per-column breakdown"""
        summary = f"""{'='*80}
                                 SUMMARY
{'='*80}

Flags raised:
"""
        counts = self.flag_counts()
        if not counts:
            summary += "    none\n"
        for name, count in counts.items():
            summary += f"    {name:<25} {count:>8}\n"
        summary += "\nColumn Breakdown:\n"
        numeric = set(self.table.numeric_columns())
        for name in self.table.columns:
            kind = "numeric" if name in numeric else "other"
            summary += f"    {name:<25} {kind:>8}\n"
        return summary + f"\n{'='*80}\n"

    def generate(self) -> str:
        parts = [self.create_header()]
        for name in self.table.numeric_columns():
            parts.append(self.create_column_section(name))
        parts.append(self.create_summary())
        return "".join(parts)

    def export(self, out="-") -> bool:
        """Write the report; False on I/O failure"""
        ok = FileUtils.write_text(out, self.generate())
        if ok:
            logger.info("report for %s written to %s", self.source or "result table", out)
        return ok
