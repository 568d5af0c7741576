"""SVG figures from experiment CSVs.

The CSV schema is detected from the header: a performance CSV produces
``perf_ratios.svg`` and ``perf_guarantees.svg`` (one x tick per ``sigma_v``),
a runtime CSV produces ``runtime.svg``.  Output is byte-stable across runs.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .bench import PERF_COLUMNS, RUNTIME_COLUMNS  # noqa: E402
from .errors import CSVParseError  # noqa: E402

_TEXT_COLUMNS = {"ratio_source"}

_RC = {"svg.hashsalt": "nonsubmax", "svg.fonttype": "none"}


def _read(path: Union[str, Path]) -> tuple[list[str], list[tuple[int, dict]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise CSVParseError("empty file, no header", 1)
    header = rows[0]
    body = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise CSVParseError(f"expected {len(header)} fields, got {len(row)}", lineno)
        body.append((lineno, dict(zip(header, row))))
    if not body:
        raise CSVParseError("no data rows", 2)
    return header, body


def _num(rec: tuple[int, dict], name: str) -> float:
    lineno, row = rec
    try:
        val = float(row[name])
    except ValueError:
        raise CSVParseError(f"column {name!r}: not a number: {row[name]!r}", lineno) from None
    if math.isnan(val):
        raise CSVParseError(f"column {name!r} is NaN", lineno)
    return val


def _check_numeric(body, cols) -> None:
    for rec in body:
        for c in cols:
            if c not in _TEXT_COLUMNS:
                _num(rec, c)


def _means(body, key: str, cols: list[str]) -> tuple[list[float], dict[str, list[float]]]:
    groups: dict[float, list] = {}
    for rec in body:
        groups.setdefault(_num(rec, key), []).append(rec)
    xs = sorted(groups)
    out = {c: [math.fsum(_num(r, c) for r in groups[x]) / len(groups[x]) for x in xs] for c in cols}
    return xs, out


def _save(fig, path: Path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _line_panel(xs, series: dict[str, list[float]], labels: dict[str, str], xlabel: str, ylabel: str, title: str):
    fig, ax = plt.subplots(figsize=(7, 4))
    for col, ys in series.items():
        ax.plot(xs, ys, marker="o", markersize=3, label=labels[col])
    ax.set_xticks(xs)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    return fig


def emit_plots(csv_path: Union[str, Path], outdir: Union[str, Path]) -> list[Path]:
    """Render the figures for ``csv_path`` into ``outdir``; returns the written paths.

    Raises
    ------
    CSVParseError
        If the file is empty, has no data rows, an unknown header, or a
        malformed row.  Nothing is written in that case.
    """
    header, body = _read(csv_path)
    outdir = Path(outdir)
    cols = set(header)
    with plt.rc_context(_RC):
        if set(PERF_COLUMNS) <= cols:
            _check_numeric(body, header)
            xs, m = _means(body, "sigma_v", ["ratio_alg1", "ratio_alg2", "guarantee_thm1", "guarantee_thm2"])
            figs = {
                "perf_ratios.svg": _line_panel(
                    xs,
                    {k: m[k] for k in ("ratio_alg1", "ratio_alg2")},
                    {"ratio_alg1": "parallel greedy", "ratio_alg2": "general greedy"},
                    "sigma_v", "mean f(A) / f(A*)", "Actual approximation ratio",
                ),
                "perf_guarantees.svg": _line_panel(
                    xs,
                    {k: m[k] for k in ("guarantee_thm1", "guarantee_thm2")},
                    {"guarantee_thm1": "parallel greedy bound", "guarantee_thm2": "general greedy bound"},
                    "sigma_v", "mean guarantee", "Theoretical guarantee",
                ),
            }
        elif set(RUNTIME_COLUMNS) <= cols:
            _check_numeric(body, header)
            xs, m = _means(body, "m", ["mean_time_alg1", "mean_time_alg2"])
            figs = {
                "runtime.svg": _line_panel(
                    [int(x) for x in xs],
                    m,
                    {"mean_time_alg1": "parallel greedy", "mean_time_alg2": "general greedy"},
                    "sensors per step m", "mean wall time (s)", "Running time",
                )
            }
        else:
            raise CSVParseError("header matches neither the performance nor the runtime schema", 1)
        outdir.mkdir(parents=True, exist_ok=True)
        written = []
        for name, fig in figs.items():
            _save(fig, outdir / name)
            written.append(outdir / name)
    return written
