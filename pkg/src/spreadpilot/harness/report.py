"""Experiment reports: CSV with a commented metadata header, and a bare-bones SVG plot."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path


@dataclass
class ExperimentReport:
    kind: str
    columns: tuple[str, ...]
    records: list[dict] = field(default_factory=list)
    metadata: dict[str, str] = field(default_factory=dict)

    def add(self, **record) -> None:
        missing = set(self.columns) - set(record)
        if missing:
            raise ValueError(f"record lacks columns {sorted(missing)}")
        self.records.append({c: record[c] for c in self.columns})

    def column(self, name: str, **where) -> list:
        return [r[name] for r in self.records if all(r[k] == v for k, v in where.items())]

    def curves(self, key: str = "curve") -> list:
        seen = []
        for r in self.records:
            if r[key] not in seen:
                seen.append(r[key])
        return seen


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse(text: str):
    for kind in (int, float):
        try:
            return kind(text)
        except ValueError:
            pass
    return text


def to_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    buf.write(f"# report: {report.kind}\n")
    for key, value in report.metadata.items():
        buf.write(f"# {key}: {value}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(report.columns)
    for r in report.records:
        writer.writerow([_fmt(r[c]) for c in report.columns])
    return buf.getvalue()


def from_csv(text: str) -> ExperimentReport:
    lines = text.splitlines(keepends=True)
    kind, metadata, i = "", {}, 0
    while i < len(lines) and lines[i].startswith("#"):
        key, _, value = lines[i][1:].strip().partition(": ")
        if key == "report" and not kind:
            kind = value
        else:
            metadata[key] = value
        i += 1
    rows = list(csv.reader(lines[i:]))
    columns = tuple(rows[0]) if rows else ()
    report = ExperimentReport(kind, columns, metadata=metadata)
    for row in rows[1:]:
        report.records.append({c: _parse(v) for c, v in zip(columns, row)})
    return report


# Which columns each report kind plots.
PLOTS = {
    "mse": ("snr_db", "mse", "curve", True),
    "variance": ("lf", "weighted_variance", "curve", True),
    "ber": ("ebn0_db", "ber", "curve", True),
    "boost-sweep": ("boost", "ber", "curve", True),
    "bitrate": ("L", "rate_mbps", "system", False),
}


def to_svg(report: ExperimentReport, x: str, y: str, curve: str = "curve", logy: bool = True,
           width: int = 640, height: int = 420) -> str:
    """Line plot with one ``<polyline>`` per curve."""
    pad = 50
    groups = {}
    for r in report.records:
        xv, yv = r[x], r[y]
        if not isinstance(yv, (int, float)) or (logy and yv <= 0) or math.isnan(yv):
            continue
        groups.setdefault(str(r[curve]), []).append((float(xv), math.log10(yv) if logy else float(yv)))
    pts = [p for g in groups.values() for p in g]
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
           f'<rect x="{pad}" y="{pad // 2}" width="{width - 2 * pad}" height="{height - 2 * pad}" '
           'fill="none" stroke="black"/>',
           f'<text x="{width // 2}" y="{height - 10}" text-anchor="middle">{x}</text>',
           f'<text x="12" y="{height // 2}" transform="rotate(-90 12 {height // 2})" '
           f'text-anchor="middle">{"log10 " if logy else ""}{y}</text>']
    if pts:
        x0, x1 = min(p[0] for p in pts), max(p[0] for p in pts)
        y0, y1 = min(p[1] for p in pts), max(p[1] for p in pts)
        sx = (width - 2 * pad) / ((x1 - x0) or 1.0)
        sy = (height - 2 * pad) / ((y1 - y0) or 1.0)
        palette = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"]
        for k, (label, g) in enumerate(groups.items()):
            coords = " ".join(f"{pad + (px - x0) * sx:.2f},{height - pad - (py - y0) * sy:.2f}" for px, py in g)
            colour = palette[k % len(palette)]
            out.append(f'<polyline fill="none" stroke="{colour}" points="{coords}"><title>{label}</title></polyline>')
            out.append(f'<text x="{width - pad + 4}" y="{pad + 14 * k}" fill="{colour}" font-size="10">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_report(report: ExperimentReport, out_dir: str | Path, formats=("csv",), stem: str | None = None) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = stem or report.kind
    written = []
    if "csv" in formats:
        path = out_dir / f"{stem}.csv"
        path.write_text(to_csv(report))
        written.append(path)
    if "svg" in formats and report.kind in PLOTS:
        x, y, curve, logy = PLOTS[report.kind]
        path = out_dir / f"{stem}.svg"
        path.write_text(to_svg(report, x, y, curve, logy))
        written.append(path)
    return written
