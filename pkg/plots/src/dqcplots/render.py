"""Six figure kinds over dqcbench CSV tables, plus the CLI.

Every kind is a pure function of one table: measured columns draw as
markers with error bars, predicted columns as lines.  Output is written
as both PNG and SVG next to the requested path.  Rendering is pinned to
the Agg backend with a fixed hash salt and no date metadata, so repeated
runs on the same input produce byte-identical files.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "dqcplots"

import matplotlib.pyplot as plt
import numpy as np

from .reader import SchemaMismatchError, Table, read_table

FIGSIZE = (6.4, 4.8)
DPI = 150
HOP_IDEAL = 0.5 * (1.0 + math.log(2.0))

_COLORS = plt.rcParams["axes.prop_cycle"].by_key()["color"]


def device_label(key: tuple[str, ...]) -> str:
    topology, n, dqc, placement = key
    tail = f"dqc ({placement})" if dqc == "true" else "single"
    return f"{topology} n={n} {tail}"


def _device_groups(table: Table) -> dict[tuple[str, ...], Table]:
    return table.groups("topology", "n", "dqc", "placement")


def _new_axes():
    fig, ax = plt.subplots(figsize=FIGSIZE)
    ax.grid(alpha=0.3)
    return fig, ax


def error_fidelity(table: Table):
    """Fidelity against per-qubit error rate: simulation markers with
    error bars, analytic prediction as a line per device."""
    table.require("eps_in", "agf_sim", "agf_se", "agf_pred")
    fig, ax = _new_axes()
    for i, (key, part) in enumerate(_device_groups(table).items()):
        order = np.argsort(part.floats("eps_in"))
        x = 100.0 * part.floats("eps_in")[order]
        color = _COLORS[i % len(_COLORS)]
        ax.errorbar(
            x, part.floats("agf_sim")[order], yerr=part.floats("agf_se")[order],
            fmt="o", capsize=3, color=color, label=device_label(key),
        )
        ax.plot(x, part.floats("agf_pred")[order], "-", color=color, alpha=0.8)
    ax.set_xlabel("per-qubit error rate (%)")
    ax.set_ylabel("average gate fidelity")
    ax.legend(fontsize=8)
    return fig


def calibration_fit(table: Table):
    """Effective against input error rate with the fitted slope.

    The effective rate is read off the file's own columns as
    eps_in * ln(agf_sim) / ln(agf_pred); rows whose fidelities leave the
    logarithm undefined are dropped."""
    table.require("eps_in", "agf_sim", "agf_pred", "r_fit")
    fig, ax = _new_axes()
    for i, (key, part) in enumerate(_device_groups(table).items()):
        eps = 100.0 * part.floats("eps_in")
        sim, pred = part.floats("agf_sim"), part.floats("agf_pred")
        good = (sim > 0.0) & (sim < 1.0) & (pred > 0.0) & (pred < 1.0)
        if not good.any():
            continue
        eff = eps[good] * np.log(sim[good]) / np.log(pred[good])
        color = _COLORS[i % len(_COLORS)]
        ratio = part.floats("r_fit")[0]
        ax.plot(eps[good], eff, "o", color=color,
                label=f"{device_label(key)}  r={ratio:.3f}")
        line_x = np.array([0.0, eps.max()])
        ax.plot(line_x, ratio * line_x, "-", color=color, alpha=0.8)
    ax.axline((0.0, 0.0), slope=1.0, color="gray", ls=":", lw=1)
    ax.set_xlabel("input error rate (%)")
    ax.set_ylabel("effective error rate (%)")
    ax.legend(fontsize=8)
    return fig


def hop_lxe(table: Table):
    """Heavy-output probability against normalized cross entropy, with the
    correspondence line H = 1/2 + (ln2/2) x."""
    table.require("hop", "lxe", "lxe_ideal")
    fig, ax = _new_axes()
    top = 1.0
    for i, (key, part) in enumerate(_device_groups(table).items()):
        x = part.floats("lxe") / part.floats("lxe_ideal")
        top = max(top, float(x.max()))
        ax.plot(x, part.floats("hop"), "o", ms=4,
                color=_COLORS[i % len(_COLORS)], label=device_label(key))
    line_x = np.linspace(0.0, 1.05 * top, 50)
    ax.plot(line_x, 0.5 + 0.5 * math.log(2.0) * line_x, "k-", lw=1,
            label="1/2 + (ln2/2) x")
    ax.set_xlabel("normalized linear cross entropy")
    ax.set_ylabel("heavy-output probability")
    ax.legend(fontsize=8)
    return fig


def size_hop(table: Table):
    """Heavy-output probability against circuit size with the prediction
    and the 2/3 pass threshold."""
    table.require("n", "hop", "hop_se", "hop_pred")
    fig, ax = _new_axes()
    groups = table.groups("topology", "dqc", "placement", "eps_in")
    for i, (key, part) in enumerate(groups.items()):
        topology, dqc, placement, eps_in = key
        label = device_label((topology, "*", dqc, placement)).replace(" n=* ", " ")
        label += f"  eps={100 * float(eps_in):g}%"
        order = np.argsort(part.floats("n"))
        x = part.floats("n")[order]
        color = _COLORS[i % len(_COLORS)]
        ax.errorbar(x, part.floats("hop")[order],
                    yerr=part.floats("hop_se")[order],
                    fmt="o", capsize=3, color=color, label=label)
        ax.plot(x, part.floats("hop_pred")[order], "--", color=color, alpha=0.8)
    ax.axhline(2.0 / 3.0, color="gray", ls=":", lw=1, label="pass threshold 2/3")
    ax.set_xlabel("working qubits")
    ax.set_ylabel("heavy-output probability")
    ax.legend(fontsize=8)
    return fig


def ent_robustness(table: Table):
    """Fidelity against entangled-pair error rate; the eps_e-independent
    single-QPU rows draw as horizontal baselines."""
    table.require("eps_e", "dqc", "agf_sim", "agf_se", "agf_pred")
    fig, ax = _new_axes()
    span = 100.0 * table.floats("eps_e").max()
    for i, (key, part) in enumerate(_device_groups(table).items()):
        color = _COLORS[i % len(_COLORS)]
        if key[2] == "true":
            order = np.argsort(part.floats("eps_e"))
            x = 100.0 * part.floats("eps_e")[order]
            ax.errorbar(x, part.floats("agf_sim")[order],
                        yerr=part.floats("agf_se")[order],
                        fmt="o", capsize=3, color=color, label=device_label(key))
            ax.plot(x, part.floats("agf_pred")[order], "-", color=color,
                    alpha=0.8)
        else:
            sim = float(part.floats("agf_sim")[0])
            se = float(part.floats("agf_se")[0])
            ax.axhline(sim, color=color, ls="--",
                       label=f"{device_label(key)} baseline")
            ax.axhspan(sim - se, sim + se, color=color, alpha=0.15, lw=0)
            ax.axhline(float(part.floats("agf_pred")[0]), color=color, ls=":",
                       lw=1, alpha=0.8)
    ax.set_xlim(-0.02 * span, 1.05 * span if span > 0 else 1.0)
    ax.set_xlabel("entangled-pair error rate (%)")
    ax.set_ylabel("average gate fidelity")
    ax.legend(fontsize=8)
    return fig


def approx_band(table: Table):
    """Exponential approximation against the exact prediction, one panel
    per device."""
    table.require("eps_in", "agf_pred", "agf_approx")
    groups = _device_groups(table)
    ncols = min(3, len(groups))
    nrows = math.ceil(len(groups) / ncols)
    fig, axes = plt.subplots(
        nrows, ncols, figsize=(3.2 * ncols, 2.6 * nrows),
        sharex=True, sharey=True, squeeze=False,
    )
    for i, (key, part) in enumerate(groups.items()):
        ax = axes[i // ncols][i % ncols]
        order = np.argsort(part.floats("eps_in"))
        x = 100.0 * part.floats("eps_in")[order]
        ax.plot(x, part.floats("agf_pred")[order], "-", color=_COLORS[0],
                label="exact")
        ax.plot(x, part.floats("agf_approx")[order], "--", color=_COLORS[1],
                label="exp(-NAe/2)")
        ax.axhline(0.6, color="gray", ls=":", lw=1)
        ax.set_title(device_label(key), fontsize=8)
        ax.grid(alpha=0.3)
    for j in range(len(groups), nrows * ncols):
        axes[j // ncols][j % ncols].axis("off")
    axes[0][0].legend(fontsize=7)
    for ax in axes[-1]:
        ax.set_xlabel("error rate (%)", fontsize=8)
    for row in axes:
        row[0].set_ylabel("fidelity", fontsize=8)
    return fig


KINDS = {
    "error-fidelity": error_fidelity,
    "calibration-fit": calibration_fit,
    "hop-lxe": hop_lxe,
    "size-hop": size_hop,
    "ent-robustness": ent_robustness,
    "approx-band": approx_band,
}


def render(kind: str, csv_path: str | Path, out_path: str | Path) -> list[Path]:
    if kind not in KINDS:
        raise ValueError(f"unknown figure kind {kind!r}; have {sorted(KINDS)}")
    fig = KINDS[kind](read_table(csv_path))
    fig.set_dpi(DPI)
    fig.tight_layout()
    base = Path(out_path)
    if base.suffix in (".png", ".svg"):
        base = base.with_suffix("")
    written = []
    for suffix, metadata in ((".png", {"Software": "dqcplots"}),
                             (".svg", {"Date": None})):
        target = base.with_suffix(suffix)
        fig.savefig(target, dpi=DPI, metadata=metadata)
        written.append(target)
    plt.close(fig)
    return written


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dqcplots", description="Render figures from dqcbench CSV files."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one figure as PNG and SVG")
    p.add_argument("--kind", required=True, choices=sorted(KINDS))
    p.add_argument("--in", dest="input", required=True, help="input CSV path")
    p.add_argument("--out", required=True,
                   help="output image path; extension is replaced")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        written = render(args.kind, args.input, args.out)
    except (ValueError, OSError) as exc:
        print(f"dqcplots: {exc}", file=sys.stderr)
        return 2
    print(" ".join(str(p) for p in written))
    return 0


if __name__ == "__main__":
    sys.exit(main())
