"""Atomic CSV/JSON writers, run manifests and SVG plots derived from CSV files."""
from __future__ import annotations

import csv
import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return v


def _atomic_write(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_csv(path, rows: Iterable[dict], columns: Sequence[str]) -> Path:
    """CSV with '.' decimals and 17 significant digits, written via temp file + rename."""
    import io as _io

    buf = _io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt(r[k]) for k in columns})
    return _atomic_write(Path(path), buf.getvalue())


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.bool_,)):
        return bool(o)
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, default=_jsonable)


def write_json(path, doc) -> Path:
    return _atomic_write(Path(path), dumps(doc) + "\n")


def manifest(config: dict, seed: int, outputs: list) -> dict:
    from . import __version__

    return {"config": config, "seed": seed, "version": __version__,
            "numpy": np.__version__, "outputs": sorted(str(o) for o in outputs)}


# ----------------------------------------------------------------------- plots


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _save(fig, path) -> Path:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".svg")
    os.close(fd)
    fig.savefig(tmp, format="svg")
    os.replace(tmp, path)
    return path


def plot_xy_from_csv(csv_path, svg_path, x: str, y: str, group: str = None, logx=False, logy=False,
                     title: str = "", positive_only: bool = False) -> Path:
    """Line plot of column y against column x, one line per value of ``group``."""
    plt = _plt()
    rows = read_csv(csv_path)
    series = {}
    for r in rows:
        series.setdefault(r[group] if group else "", []).append((float(r[x]), float(r[y])))
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for name, pts in series.items():
        a = np.array(pts)
        if positive_only:
            a = a[(a[:, 0] > 0) & (a[:, 1] > 0)]
        ax.plot(a[:, 0], a[:, 1], label=name or None)
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(x)
    ax.set_ylabel(y)
    if title:
        ax.set_title(title)
    if group:
        ax.legend(fontsize=7)
    fig.tight_layout()
    out = _save(fig, svg_path)
    plt.close(fig)
    return out
