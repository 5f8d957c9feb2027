"""Figure rendering and the markdown index page.

Every figure has a fixed filename and deterministic content (Agg backend,
fixed sizes, PNG metadata stripped), so rerunning over the same inputs
reproduces the output files byte for byte.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .schema import (
    DIAGNOSTIC_COLUMNS,
    SHELL_COLUMNS,
    SchemaError,
    load_csv,
    load_summary,
    pivot,
)

FIGURES = ("spectra", "qr_decay", "cascade", "slack_hist")

_SAVE_OPTS = {"dpi": 110, "metadata": {"Software": None}}
_FLOOR = 1e-30  # log-scale floor for empty shells


@dataclass(frozen=True)
class ReportSpec:
    input_dir: str
    output_dir: str
    figures: tuple = field(default_factory=lambda: FIGURES)

    def __post_init__(self):
        unknown = [f for f in self.figures if f not in FIGURES]
        if unknown:
            raise SchemaError(f"unknown figures requested: {unknown}")


def _load_inputs(spec: ReportSpec) -> dict:
    shells = load_csv(os.path.join(spec.input_dir, "shells.csv"), SHELL_COLUMNS)
    diag = load_csv(os.path.join(spec.input_dir, "diagnostics.csv"), DIAGNOSTIC_COLUMNS)
    summary = load_summary(os.path.join(spec.input_dir, "summary.json"))
    times, shell_ids, shell_values = pivot(shells)
    dtimes, dshells, diag_values = pivot(diag)
    return {
        "times": times,
        "shells": shell_ids,
        "energy": shell_values[0],
        "dissipation": shell_values[1],
        "diag_times": dtimes,
        "diag_shells": dshells,
        "weighted_decrement": diag_values[2],
        "summary": summary,
    }


def _fig_spectra(inputs, path):
    times, shells, energy = inputs["times"], inputs["shells"], inputs["energy"]
    picks = sorted({0, len(times) // 3, 2 * len(times) // 3, len(times) - 1})
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for i in picks:
        ax.plot(shells, np.log2(np.maximum(energy[i], _FLOOR)), marker="o",
                label=f"t = {times[i]:g}")
    ax.set_xlabel("shell n")
    ax.set_ylabel("log2 shell energy")
    ax.set_title("shell spectrum over time")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)


def _fig_qr_decay(inputs, path):
    summary = inputs["summary"]
    q = np.asarray(summary["Q"], dtype=float)
    r_final = inputs["weighted_decrement"][-1]
    fig, (left, right) = plt.subplots(1, 2, figsize=(8.0, 3.6))
    left.semilogy(np.arange(len(q)), np.maximum(q, _FLOOR), marker="o", color="tab:blue")
    left.set_xlabel("n")
    left.set_ylabel("discounted peak history")
    left.set_title("Q decay")
    right.semilogy(inputs["diag_shells"], np.maximum(r_final, _FLOOR), marker="s",
                   color="tab:orange")
    right.set_xlabel("shell n")
    right.set_ylabel("weighted decrement sum")
    right.set_title("R at final time")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)


def _fig_cascade(inputs, path):
    indices = inputs["summary"]["cascade"]["indices"]
    fraction = inputs["summary"]["cascade"]["adjacency_fraction"]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.step(np.arange(len(indices)), indices, where="post")
    ax.set_xlabel("cascade step k")
    ax.set_ylabel("shell index n_k")
    ax.set_title(f"cascade indices (adjacency fraction {fraction:.2f})")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)


def _fig_slack_hist(inputs, path):
    summary = inputs["summary"]
    energy_violation = np.asarray(summary["energy_inequality"]["per_sample"], dtype=float)
    recursion_violation = np.asarray(
        summary["d_recursion"]["per_sample_violation"], dtype=float
    )
    fig, (left, right) = plt.subplots(1, 2, figsize=(8.0, 3.6))
    left.hist(energy_violation, bins=20, color="tab:blue")
    left.set_xlabel("energy inequality violation")
    left.set_ylabel("samples")
    left.set_title("energy ledger slack")
    right.hist(-recursion_violation, bins=20, color="tab:orange")
    right.set_xlabel("tail recursion slack (RHS - LHS)")
    right.set_title("recursion slack")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)


_RENDERERS = {
    "spectra": (_fig_spectra, "shell spectrum at selected times"),
    "qr_decay": (_fig_qr_decay, "discounted history Q and weighted decrements R"),
    "cascade": (_fig_cascade, "cascade index staircase"),
    "slack_hist": (_fig_slack_hist, "inequality slack histograms"),
}


def render(spec: ReportSpec) -> list[str]:
    """Render the selected figures plus index.md; returns the files written."""
    inputs = _load_inputs(spec)
    os.makedirs(spec.output_dir, exist_ok=True)
    written = []
    lines = ["# run report", ""]
    summary = inputs["summary"]
    lines.append(f"- samples: {len(inputs['times'])}, shells: {len(inputs['shells'])}")
    lines.append(
        "- worst energy-inequality violation: "
        f"{summary['energy_inequality']['worst_relative_violation']:.3e}"
    )
    lines.append(
        f"- tail recursion worst violation: {summary['d_recursion']['max_violation']:.3e}"
    )
    lines.append(
        f"- cascade adjacency fraction: {summary['cascade']['adjacency_fraction']:.2f}"
    )
    lines.append("")
    for name in spec.figures:
        renderer, caption = _RENDERERS[name]
        filename = f"{name}.png"
        renderer(inputs, os.path.join(spec.output_dir, filename))
        written.append(filename)
        lines.append(f"## {name}")
        lines.append("")
        lines.append(f"![{caption}]({filename})")
        lines.append("")
    index = os.path.join(spec.output_dir, "index.md")
    with open(index, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines))
    written.append("index.md")
    return written
