"""Figure rendering for run directories.

Reads the delimited outputs a run produced (trace.csv, capital.csv) and
renders matplotlib figures next to them.  Plotting converts exact rationals
to floats; this is presentation only and never feeds back into any check.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .rational import parse_rational

__all__ = ["render_capital_figure", "render_stage_figure", "render_run_figures"]


def render_capital_figure(capital_csv_path: Path, out_path: Path) -> Path:
    """Step plot of the decoder's capital along oracle prefixes."""
    lengths: list[int] = []
    values: list[float] = []
    with open(capital_csv_path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            lengths.append(int(row["prefix_len"]))
            values.append(float(parse_rational(row["value"])))
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.step(lengths, values, where="post", color="tab:blue", lw=1.8)
    ax.set_xlabel("oracle prefix length")
    ax.set_ylabel("decoder capital")
    ax.set_title("Capital along oracle prefixes")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def render_stage_figure(trace_csv_path: Path, out_path: Path) -> Path:
    """Per-stage capital of the mixture on the encoded prefix vs its bound."""
    stages: list[int] = []
    capital: list[float] = []
    bound: list[float] = []
    cuts: list[int] = []
    with open(trace_csv_path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            stages.append(int(row["stage"]))
            capital.append(float(parse_rational(row["d_at_beta"])))
            bound.append(float(parse_rational(row["running_bound"])))
            cuts.append(int(row["t"]))
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    ax1.plot(stages, capital, "o-", color="tab:blue", label="mixture capital on prefix")
    ax1.plot(stages, bound, "s--", color="tab:red", label="running bound")
    ax1.set_xlabel("stage")
    ax1.set_ylabel("capital")
    ax1.set_title("Mixture capital vs bound")
    ax1.legend()
    ax1.grid(True, alpha=0.3)
    ax2.plot(stages, cuts, "o-", color="tab:green")
    ax2.set_xlabel("stage")
    ax2.set_ylabel("cut point t")
    ax2.set_title("Stage cut points")
    ax2.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def render_run_figures(run_dir: Path, out_dir: Path | None = None) -> list[Path]:
    """Render every figure the run directory has data for."""
    run_dir = Path(run_dir)
    out_dir = Path(out_dir) if out_dir is not None else run_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    trace = run_dir / "trace.csv"
    if trace.exists():
        written.append(render_stage_figure(trace, out_dir / "stages.png"))
    capital = run_dir / "capital.csv"
    if capital.exists():
        written.append(render_capital_figure(capital, out_dir / "capital.png"))
    return written
