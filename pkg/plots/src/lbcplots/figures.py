"""Publication-style figures from sweep tables.

Both builders return a matplotlib Figure; the save helpers write vector
images and derive file names from the scenario id when given a directory.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .sweeps import EmptySelectionError, SweepTable  # noqa: E402

SWITCH_STYLE = {
    "lbc": dict(marker="o", color="tab:blue"),
    "oq": dict(marker="s", color="tab:orange", linestyle="--"),
}


def build_delay_vs_load(table: SweepTable):
    """Mean delay against input load, log delay axis, one curve per switch."""
    if not table.rows:
        raise EmptySelectionError("no rows matched the requested filters")
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    for switch in table.switches():
        loads, delays, _ = table.curve(switch)
        ax.plot(loads, delays, label=switch,
                **SWITCH_STYLE.get(switch, dict(marker="x")))
    ax.set_yscale("log")
    ax.set_xlim(0.0, 1.0)
    ax.set_xlabel("input load")
    ax.set_ylabel("mean delay (slots)")
    patterns = sorted({r.pattern for r in table.rows})
    ax.set_title(" / ".join(patterns))
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    return fig


def build_cb_occupancy(table: SweepTable):
    """Mean crosspoint-buffer occupancy per load with a reference line at 1.0."""
    if not table.rows:
        raise EmptySelectionError("no rows matched the requested filters")
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    width = 0.8 / max(1, len(table.switches()))
    for idx, switch in enumerate(table.switches()):
        loads, _, cb = table.curve(switch)
        xs = [l + (idx - (len(table.switches()) - 1) / 2) * width * 0.05
              for l in loads]
        ax.bar(xs, cb, width=0.04, label=switch, alpha=0.8)
    ax.axhline(1.0, color="tab:red", linestyle=":", linewidth=1.5,
               label="one-cell bound")
    ax.set_xlim(0.0, 1.05)
    ax.set_xlabel("input load")
    ax.set_ylabel("mean crosspoint occupancy (cells)")
    patterns = sorted({r.pattern for r in table.rows})
    ax.set_title(" / ".join(patterns))
    ax.grid(True, axis="y", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    return fig


def resolve_output_path(out: str, table: SweepTable, kind: str) -> str:
    """Explicit file path, or '<scenario_id>_<kind>.svg' inside a directory."""
    if os.path.isdir(out) or out.endswith(os.sep):
        stem = "_".join(table.scenario_ids()) or "sweep"
        return os.path.join(out, f"{stem}_{kind}.svg")
    return out


def save_figure(fig, path: str) -> str:
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_delay_vs_load(csv_path: str, out: str, pattern: str | None = None,
                       switch: str | None = None) -> str:
    table = SweepTable.read(csv_path).select(pattern=pattern, switch=switch)
    fig = build_delay_vs_load(table)
    return save_figure(fig, resolve_output_path(out, table, "delay"))


def plot_cb_occupancy(csv_path: str, out: str, pattern: str | None = None,
                      switch: str | None = None) -> str:
    table = SweepTable.read(csv_path).select(pattern=pattern, switch=switch)
    fig = build_cb_occupancy(table)
    return save_figure(fig, resolve_output_path(out, table, "cb"))
