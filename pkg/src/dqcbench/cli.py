"""Experiment runner: benchmark sweeps, placement search, predictions.

Each command expands a grid of (device, size, error-rate) points, runs the
trajectory simulator where needed, and streams records to a CSV file with
a versioned schema header.  Every random stream derives from the master
seed and the point's stable key (topology, size, circuit index), never
from eps values or wall clock, so reruns are byte-identical apart from
the trailing runtime column, grid points may execute in any order, and
an entanglement sweep at eps_e = 0 reproduces the error sweep exactly.

Rates on the command line are percentages (0.15 means eps = 0.0015); CSV
columns store plain fractions.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import dataclass, fields

import numpy as np

from .analytic import (
    IDEAL_HOP_LIMIT,
    approx_agf,
    calibration_fit,
    combine_with_memories,
    hop_from_agf,
    predicted_agf,
    preserving_from_agf,
)
from .circuits import sample_qv_circuit
from .noisemodel import NoiseSpec, allocation_matrix, characteristic_cost
from .sim import MetricsResult, NoiseAttachment, NoiseMode, aggregate_runs, simulate_circuit
from .topology import ExtendedGraph, MemoryPlacement, TopologyKind, standard_topology

CSV_SCHEMA_VERSION = 1

# stable small integers for seed derivation; never reorder
_KIND_INDEX = {
    TopologyKind.FULLY_CONNECTED: 0,
    TopologyKind.LINE_1D: 1,
    TopologyKind.GRID_2D: 2,
}

_VARIANTS: dict[str, tuple[bool, MemoryPlacement | None]] = {
    "single": (False, None),
    "dqc-hub": (True, MemoryPlacement.HUB),
    "dqc-edge": (True, MemoryPlacement.EDGE),
}

SWEEP_COLUMNS = [
    "topology",
    "n",
    "dqc",
    "placement",
    "eps_in",
    "eps_e",
    "circuits",
    "shots",
    "seed",
    "hop",
    "hop_se",
    "lxe",
    "lxe_ideal",
    "agf_sim",
    "agf_se",
    "agf_pred",
    "agf_approx",
    "hop_pred",
    "chi_ratio_pred",
    "r_fit",
    "agf_pred_cal",
    "hop_pred_cal",
    "runtime_s",
]

PREDICT_COLUMNS = [
    "topology",
    "n",
    "dqc",
    "placement",
    "eps_in",
    "eps_e",
    "agf_pred",
    "agf_approx",
    "hop_pred",
    "chi_ratio_pred",
]

PLACEMENT_COLUMNS = [
    "topology",
    "n",
    "eps_in",
    "site_a",
    "site_b",
    "characteristic",
    "agf_pred",
    "best",
]


@dataclass(frozen=True)
class ExperimentConfig:
    """One sweep request; grids are expanded as a full product."""

    command: str
    topologies: tuple[TopologyKind, ...]
    sizes: tuple[int, ...]
    variants: tuple[str, ...]
    eps_in: tuple[float, ...]
    eps_e: tuple[float, ...]
    circuits: int
    shots: int
    seed: int
    out: str

    def __post_init__(self) -> None:
        for name in ("topologies", "sizes", "variants", "eps_in", "eps_e"):
            if not getattr(self, name):
                raise ValueError(f"{name} grid must be nonempty")
        if self.circuits < 1 or self.shots < 1:
            raise ValueError("need at least one circuit and one shot")
        for v in self.variants:
            if v not in _VARIANTS:
                raise ValueError(f"unknown variant {v!r}")
        for e in (*self.eps_in, *self.eps_e):
            if not 0.0 <= e <= 1.0:
                raise ValueError("error rates must lie in [0, 1]")
        if any(n < 2 for n in self.sizes):
            raise ValueError("sizes must be at least 2")


@dataclass(frozen=True)
class BenchmarkRecord:
    """One CSV row: config echo, measured metrics, prediction overlays."""

    topology: str
    n: int
    dqc: bool
    placement: str
    eps_in: float
    eps_e: float
    circuits: int
    shots: int
    seed: int
    hop: float
    hop_se: float
    lxe: float
    lxe_ideal: float
    agf_sim: float
    agf_se: float
    agf_pred: float
    agf_approx: float
    hop_pred: float
    chi_ratio_pred: float
    r_fit: float
    agf_pred_cal: float
    hop_pred_cal: float
    runtime_s: float

    def row(self) -> list[str]:
        return [_fmt(getattr(self, f.name)) for f in fields(self)]


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


def build_device(kind: TopologyKind, variant: str, n: int) -> ExtendedGraph:
    dqc, placement = _VARIANTS[variant]
    if not dqc:
        return standard_topology(kind, n)
    return standard_topology(kind, n, dqc=True, memory_placement=placement)


def variant_available(variant: str, n: int) -> bool:
    """DQC devices split the working qubits evenly; odd sizes stay single."""
    return not _VARIANTS[variant][0] or n % 2 == 0


def point_rngs(
    seed: int, kind: TopologyKind, n: int, circuit_index: int
) -> tuple[np.random.Generator, np.random.Generator]:
    """Circuit and shot generators for one grid point.

    The key excludes the variant and both error rates: all devices of one
    (topology, n) family see the same circuits and base uniforms, which
    makes cross-variant comparisons paired and eps grids consistent.
    """
    ss = np.random.SeedSequence((seed, _KIND_INDEX[kind], n, circuit_index))
    c_ss, s_ss = ss.spawn(2)
    return np.random.default_rng(c_ss), np.random.default_rng(s_ss)


def simulate_point(
    graph: ExtendedGraph,
    kind: TopologyKind,
    n: int,
    eps_in: float,
    eps_e: float,
    circuits: int,
    shots: int,
    seed: int,
) -> MetricsResult:
    spec = NoiseSpec(per_qubit_error=eps_in, entanglement_error=eps_e)
    noise = NoiseAttachment.from_spec(NoiseMode.PER_BASIS_GATE, spec, graph)
    runs = []
    for k in range(circuits):
        circuit_rng, shot_rng = point_rngs(seed, kind, n, k)
        circuit = sample_qv_circuit(n, circuit_rng)
        runs.append(simulate_circuit(circuit, graph, noise, shots, shot_rng))
    return aggregate_runs(runs, n, seed=seed)


def invert_effective_rate(
    graph: ExtendedGraph, agf_measured: float, upper: float = 0.2
) -> float:
    """Per-qubit rate whose prediction reproduces the measured fidelity."""
    if agf_measured >= 1.0:
        return 0.0
    if predicted_agf(graph, NoiseSpec(per_qubit_error=upper)).agf >= agf_measured:
        return upper
    lo, hi = 0.0, upper
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if predicted_agf(graph, NoiseSpec(per_qubit_error=mid)).agf > agf_measured:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _characteristics(graph: ExtendedGraph) -> tuple[float, float]:
    allocation = allocation_matrix(graph, extended=True)
    char = float(characteristic_cost(allocation))
    char_e = float(sum(allocation.entanglement_array()))
    return char, char_e


def _predictions(graph: ExtendedGraph, n: int, eps_in: float, eps_e: float, ratio: float = 1.0):
    spec = NoiseSpec(
        per_qubit_error=eps_in, entanglement_error=eps_e, calibration_ratio=ratio
    )
    agf = predicted_agf(graph, spec).agf
    return agf, hop_from_agf(agf, IDEAL_HOP_LIMIT, n)


def sweep_records(
    config: ExperimentConfig,
    points: list[tuple[TopologyKind, str, int, float, float]],
) -> list[BenchmarkRecord]:
    """Simulate all points, then calibrate r per (topology, variant, n)
    series from its eps_e = 0 points and fill the prediction columns."""
    measured = []
    for kind, variant, n, eps_in, eps_e in points:
        graph = build_device(kind, variant, n)
        start = time.perf_counter()
        metrics = simulate_point(
            graph, kind, n, eps_in, eps_e, config.circuits, config.shots, config.seed
        )
        measured.append((kind, variant, n, eps_in, eps_e, graph, metrics,
                         time.perf_counter() - start))

    ratios: dict[tuple[TopologyKind, str, int], float] = {}
    for kind, variant, n in {(k, v, n) for k, v, n, _, _, _, _, _ in measured}:
        cal_points = [
            (eps_in, invert_effective_rate(graph, metrics.agf_via_lxe))
            for k2, v2, n2, eps_in, eps_e, graph, metrics, _ in measured
            if (k2, v2, n2) == (kind, variant, n) and eps_e == 0.0 and eps_in > 0.0
        ]
        if cal_points:
            ratios[(kind, variant, n)] = calibration_fit(cal_points)

    records = []
    for kind, variant, n, eps_in, eps_e, graph, metrics, runtime in measured:
        dqc, placement = _VARIANTS[variant]
        char, char_e = _characteristics(graph)
        agf_pred, hop_pred = _predictions(graph, n, eps_in, eps_e)
        r_fit = ratios.get((kind, variant, n), float("nan"))
        if np.isfinite(r_fit):
            agf_cal, hop_cal = _predictions(graph, n, eps_in, eps_e, ratio=r_fit)
        else:
            agf_cal, hop_cal = float("nan"), float("nan")
        records.append(
            BenchmarkRecord(
                topology=kind.value,
                n=n,
                dqc=dqc,
                placement=placement.value if placement else "none",
                eps_in=eps_in,
                eps_e=eps_e,
                circuits=config.circuits,
                shots=config.shots,
                seed=config.seed,
                hop=metrics.hop,
                hop_se=metrics.hop_se,
                lxe=metrics.lxe,
                lxe_ideal=metrics.lxe_ideal,
                agf_sim=metrics.agf_via_lxe,
                agf_se=metrics.agf_se,
                agf_pred=agf_pred,
                agf_approx=approx_agf(char, n, eps_in) * approx_agf(char_e, n, eps_e),
                hop_pred=hop_pred,
                chi_ratio_pred=preserving_from_agf(agf_pred, n),
                r_fit=r_fit,
                agf_pred_cal=agf_cal,
                hop_pred_cal=hop_cal,
                runtime_s=runtime,
            )
        )
    return records


def expand_points(config: ExperimentConfig) -> list[tuple]:
    """Grid-point list for the three simulation commands."""
    points = []
    for kind in config.topologies:
        for n in config.sizes:
            for variant in config.variants:
                if not variant_available(variant, n):
                    continue
                dqc = _VARIANTS[variant][0]
                if config.command == "ent-sweep" and not dqc:
                    # eps_e-independent baseline, one row per eps_in
                    points.extend(
                        (kind, variant, n, eps_in, 0.0) for eps_in in config.eps_in
                    )
                    continue
                for eps_in in config.eps_in:
                    for eps_e in config.eps_e:
                        points.append((kind, variant, n, eps_in, eps_e))
    return points


def run_sweep(config: ExperimentConfig) -> list[BenchmarkRecord]:
    records = sweep_records(config, expand_points(config))
    write_csv(config.out, config.command, SWEEP_COLUMNS, [r.row() for r in records])
    return records


def run_predict(config: ExperimentConfig) -> list[list[str]]:
    rows = []
    for kind, variant, n, eps_in, eps_e in expand_points(config):
        graph = build_device(kind, variant, n)
        dqc, placement = _VARIANTS[variant]
        char, char_e = _characteristics(graph)
        agf_pred, hop_pred = _predictions(graph, n, eps_in, eps_e)
        rows.append(
            [
                kind.value,
                str(n),
                _fmt(dqc),
                placement.value if placement else "none",
                _fmt(eps_in),
                _fmt(eps_e),
                _fmt(agf_pred),
                _fmt(approx_agf(char, n, eps_in) * approx_agf(char_e, n, eps_e)),
                _fmt(hop_pred),
                _fmt(preserving_from_agf(agf_pred, n)),
            ]
        )
    write_csv(config.out, "predict", PREDICT_COLUMNS, rows)
    return rows


def run_placement(config: ExperimentConfig) -> list[list[str]]:
    """Exhaustive single-site placement table per (topology, n)."""
    rows = []
    eps_in = config.eps_in[0]
    for kind in config.topologies:
        for n in config.sizes:
            if n % 2:
                raise ValueError("placement search needs an even size")
            local_a = standard_topology(kind, n // 2)
            local_b = standard_topology(kind, n // 2)
            scored = []
            for a in local_a.working_qubits:
                for b in local_b.working_qubits:
                    combined = combine_with_memories(local_a, local_b, (a,), (b,))
                    char = characteristic_cost(allocation_matrix(combined))
                    agf = predicted_agf(
                        combined, NoiseSpec(per_qubit_error=eps_in)
                    ).agf
                    scored.append((char, a, b, agf))
            best = min(scored)[:3]
            for char, a, b, agf in scored:
                rows.append(
                    [
                        kind.value,
                        str(n),
                        _fmt(eps_in),
                        str(a),
                        str(b),
                        _fmt(float(char)),
                        _fmt(agf),
                        _fmt((char, a, b) == best),
                    ]
                )
    write_csv(config.out, "placement", PLACEMENT_COLUMNS, rows)
    return rows


def write_csv(path: str, command: str, columns: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# dqcbench-csv v{CSV_SCHEMA_VERSION} {command}\n")
        writer = csv.writer(fh)
        writer.writerow(columns)
        writer.writerows(rows)


def _percent_list(text: str) -> tuple[float, ...]:
    return tuple(float(x) / 100.0 for x in text.split(","))


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(","))


def _kind_list(text: str) -> tuple[TopologyKind, ...]:
    return tuple(TopologyKind(x) for x in text.split(","))


_DEFAULTS = {
    "error-sweep": dict(
        topologies="line_1d,fully_connected",
        sizes="8",
        variants="single,dqc-hub",
        eps="0.05,0.15,0.3,0.5",
        eps_e="0",
    ),
    "size-sweep": dict(
        topologies="line_1d",
        sizes="3,4,5,6,7,8",
        variants="single,dqc-hub",
        eps="0.15",
        eps_e="0",
    ),
    "ent-sweep": dict(
        topologies="line_1d",
        sizes="8",
        variants="single,dqc-hub",
        eps="0.1625",
        eps_e="0,0.4,0.8,1.2,1.6",
    ),
    "placement": dict(
        topologies="line_1d", sizes="8", variants="dqc-hub", eps="0.15", eps_e="0"
    ),
    "predict": dict(
        topologies="line_1d,fully_connected,grid_2d",
        sizes="8",
        variants="single,dqc-hub",
        eps="0.05,0.15,0.3,0.5",
        eps_e="0",
    ),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dqcbench",
        description="Benchmark single-QPU vs distributed two-QPU devices "
        "on random quantum-volume circuits.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    help_by_cmd = {
        "error-sweep": "fidelity vs per-qubit error rate",
        "size-sweep": "fidelity and heavy-output probability vs size",
        "ent-sweep": "DQC fidelity vs entangled-pair error rate",
        "placement": "exhaustive memory-attachment table (no simulation)",
        "predict": "analytic predictions only (no simulation)",
    }
    for cmd, text in help_by_cmd.items():
        p = sub.add_parser(cmd, help=text)
        p.add_argument("--config", help="JSON file with any of the option names")
        p.add_argument("--topology", dest="topologies",
                       help="comma list: line_1d,fully_connected,grid_2d")
        p.add_argument("--sizes", help="comma list of working-qubit counts")
        p.add_argument("--variants", help="comma list: single,dqc-hub,dqc-edge")
        p.add_argument("--eps", help="comma list of per-qubit rates, percent")
        p.add_argument("--eps-e", dest="eps_e",
                       help="comma list of entangled-pair rates, percent")
        p.add_argument("--circuits", type=int, help="circuits per grid point")
        p.add_argument("--shots", type=int, help="shots per circuit")
        p.add_argument("--seed", type=int, help="master seed (default 0)")
        p.add_argument("--paper-scale", action="store_true",
                       help="1000 circuits x 10000 shots unless given explicitly")
        p.add_argument("--out", required=True, help="output CSV path")
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    file_opts = {}
    if args.config:
        with open(args.config) as fh:
            file_opts = json.load(fh)

    def pick(name: str, fallback):
        given = getattr(args, name, None)
        if given is not None:
            return given
        return file_opts.get(name, fallback)

    defaults = _DEFAULTS[args.command]
    scale = (1000, 10_000) if pick("paper_scale", False) else (200, 2000)
    return ExperimentConfig(
        command=args.command,
        topologies=_kind_list(str(pick("topologies", defaults["topologies"]))),
        sizes=_int_list(str(pick("sizes", defaults["sizes"]))),
        variants=tuple(str(pick("variants", defaults["variants"])).split(",")),
        eps_in=_percent_list(str(pick("eps", defaults["eps"]))),
        eps_e=_percent_list(str(pick("eps_e", defaults["eps_e"]))),
        circuits=int(pick("circuits", scale[0])),
        shots=int(pick("shots", scale[1])),
        seed=int(pick("seed", 0)),
        out=str(pick("out", args.out)),
    )


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
        if config.command == "predict":
            rows = run_predict(config)
        elif config.command == "placement":
            rows = run_placement(config)
        else:
            rows = run_sweep(config)
    except (ValueError, OSError) as exc:
        print(f"dqcbench: {exc}", file=sys.stderr)
        return 2
    print(f"{config.command}: wrote {len(rows)} rows to {config.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
