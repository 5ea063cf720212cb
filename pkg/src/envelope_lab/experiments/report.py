"""Convergence reports, slope fitting and output files."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import platform
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


def fit_slope(points) -> tuple[float, float]:
    """Least-squares slope of log(value) against log(h), and the RMS log residual."""
    pts = list(points)
    if len(pts) < 2:
        raise ValueError("need at least two points to fit a slope")
    h = np.array([p[0] for p in pts], dtype=float)
    v = np.array([p[1] for p in pts], dtype=float)
    if np.any(~(h > 0)) or np.any(~(v > 0)):
        raise ValueError("slope fitting needs positive h and values")
    x, y = np.log(h), np.log(v)
    if np.ptp(x) == 0:
        raise ValueError("all h values coincide")
    slope, icept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + icept)) ** 2)))
    return float(slope), resid


@dataclass
class ConvergenceReport:
    """Measured values over an eps sweep with the fitted and predicted exponents.

    ``values`` is the primary series; ``series`` holds any secondary columns
    aligned with ``eps``. ``band`` is the accepted slope interval. Runtime
    statistics live in ``runtime`` and are written to the manifest only, so
    that reruns give byte-identical CSV and JSON.
    """

    study: str
    eps: list = field(default_factory=list)
    x_label: str = "eps"
    values: list = field(default_factory=list)
    series: dict = field(default_factory=dict)
    predicted: float | None = None
    predicted_source: str = ""
    band: tuple | None = None
    slope: float | None = None
    residual: float | None = None
    passed: bool | None = None
    notes: dict = field(default_factory=dict)
    failures: dict = field(default_factory=dict)
    config_hash: str = ""
    runtime: dict = field(default_factory=dict)

    def finalize(self, min_points: int = 3) -> "ConvergenceReport":
        """Fit the slope (only with >= ``min_points`` positive values) and grade it."""
        pts = [(e, v) for e, v in zip(self.eps, self.values) if v is not None and v > 0]
        self.slope = self.residual = None
        if len(pts) >= min_points:
            self.slope, self.residual = fit_slope(pts)
        if self.band is not None and self.slope is not None:
            self.passed = bool(self.band[0] <= self.slope <= self.band[1])
        elif self.band is not None:
            self.passed = False
        return self

    def series_slope(self, name: str, min_points: int = 3):
        pts = [(e, v) for e, v in zip(self.eps, self.series[name]) if v is not None and v > 0]
        return fit_slope(pts) if len(pts) >= min_points else None

    def to_dict(self) -> dict:
        return {
            "study": self.study,
            "eps": list(self.eps),
            "x_label": self.x_label,
            "values": list(self.values),
            "series": {k: list(v) for k, v in self.series.items()},
            "predicted": self.predicted,
            "predicted_source": self.predicted_source,
            "band": list(self.band) if self.band is not None else None,
            "slope": self.slope,
            "residual": self.residual,
            "passed": self.passed,
            "notes": self.notes,
            "failures": self.failures,
            "config_hash": self.config_hash,
            "versions": versions(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ConvergenceReport":
        return cls(
            study=d["study"], eps=d["eps"], x_label=d.get("x_label", "eps"), values=d["values"], series=d["series"],
            predicted=d["predicted"], predicted_source=d["predicted_source"],
            band=tuple(d["band"]) if d["band"] is not None else None, slope=d["slope"],
            residual=d["residual"], passed=d["passed"], notes=d["notes"], failures=d["failures"],
            config_hash=d["config_hash"],
        )

    def table(self):
        header = [self.x_label, "value"] + sorted(self.series)
        rows = []
        for i, e in enumerate(self.eps):
            rows.append([e, self.values[i]] + [self.series[k][i] for k in sorted(self.series)])
        return header, rows

    def summary_line(self) -> str:
        slope = "n/a" if self.slope is None else f"{self.slope:.3f}"
        status = {True: "PASS", False: "FAIL", None: "----"}[self.passed]
        return f"{status} {self.study}: slope {slope} (predicted {self.predicted}, band {self.band})"


def versions() -> dict:
    import matplotlib
    import scipy

    from .. import __version__

    # only the major.minor of the interpreter, so reports stay stable across patch releases
    return {
        "envelope_lab": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "matplotlib": matplotlib.__version__,
        "python": ".".join(platform.python_version_tuple()[:2]),
    }


# Output files -----------------------------------------------------------------

def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def csv_text(report) -> str:
    return table_csv(*report.table())


def parse_csv(text: str):
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    return header, [[float(c) if c else None for c in r] for r in body]


def json_text(report) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True, allow_nan=True) + "\n"


def svg_text(report) -> str:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "envelope-lab", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(5, 4))
        pts = [(e, v) for e, v in zip(report.eps, report.values) if v is not None and v > 0]
        if pts:
            e = np.array([p[0] for p in pts])
            v = np.array([p[1] for p in pts])
            ax.loglog(e, v, "o", label="measured")
            if report.slope is not None:
                c = np.exp(np.mean(np.log(v) - report.slope * np.log(e)))
                ax.loglog(e, c * e ** report.slope, "-", label=f"fit, slope {report.slope:.2f}")
            if report.predicted is not None and np.isfinite(report.predicted):
                c = v[-1] / e[-1] ** report.predicted
                ax.loglog(e, c * e ** report.predicted, "--", label=f"guide, slope {report.predicted:.2f}")
            ax.legend()
        ax.set_xlabel(report.x_label)
        ax.set_ylabel("value")
        ax.set_title(report.study)
        buf = io.StringIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
        plt.close(fig)
    return buf.getvalue()


def atomic_write(path: Path, text: str):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise OSError(f"could not write {path}: {exc}") from exc


def _has_data(report) -> bool:
    return bool(report.table()[1])


def table_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def emit_outputs(report, out_dir, formats=("csv", "json", "svg"), extra_tables=None) -> dict:
    """Write the requested files plus ``manifest.json``; returns the manifest.

    ``extra_tables`` maps a file stem to a (header, rows) pair written as CSV.
    """
    formats = list(formats)
    bad = set(formats) - {"csv", "json", "svg"}
    if bad:
        raise ValueError(f"unknown output formats {sorted(bad)}")
    out_dir = Path(out_dir)
    writers = {"csv": csv_text, "json": json_text, "svg": svg_text}
    artifacts = []
    if _has_data(report):
        for fmt in formats:
            text = writers[fmt](report)
            path = out_dir / f"{report.study}.{fmt}"
            atomic_write(path, text)
            artifacts.append({"path": path.name, "sha256": hashlib.sha256(text.encode()).hexdigest()})
    for stem, (header, rows) in sorted((extra_tables or {}).items()):
        text = table_csv(header, rows)
        path = out_dir / f"{stem}.csv"
        atomic_write(path, text)
        artifacts.append({"path": path.name, "sha256": hashlib.sha256(text.encode()).hexdigest()})
    manifest = {
        "study": report.study,
        "config_hash": report.config_hash,
        "artifacts": artifacts,
        "runtime": getattr(report, "runtime", {}),
        "versions": versions(),
    }
    atomic_write(out_dir / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest

