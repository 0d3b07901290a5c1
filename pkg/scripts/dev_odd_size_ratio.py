"""Dev loop: exact (sampling-free) calibration ratios per family and size.

Walks the compiled circuit through the density-matrix oracle from the sim
tests, so the only statistical scatter left is the circuit ensemble.  Used
to decide whether the odd-size ratio dip is systematic or seed luck.
"""

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))
from test_sim import exact_compiled_distribution  # noqa: E402

from dqcbench.analytic import agf_from_lxe, calibration_fit, predicted_agf
from dqcbench.circuits import compile_circuit, sample_qv_circuit
from dqcbench.cli import invert_effective_rate
from dqcbench.noisemodel import NoiseSpec
from dqcbench.sim import ideal_distribution
from dqcbench.topology import TopologyKind, standard_topology

EPS_GRID = (0.0005, 0.0015, 0.003, 0.005)
N_CIRCUITS = 120


def exact_family_ratio(kind: TopologyKind, n: int) -> float:
    graph = standard_topology(kind, n)
    rng = np.random.default_rng(99)
    circuits = [sample_qv_circuit(n, rng) for _ in range(N_CIRCUITS)]
    ideals = [ideal_distribution(c) for c in circuits]
    lxe_ideal = np.array([float(len(q) * np.sum(q * q) - 1.0) for q in ideals])
    points = []
    for eps in EPS_GRID:
        lxe = []
        for circuit, q in zip(circuits, ideals):
            p = exact_compiled_distribution(
                compile_circuit(circuit, graph), eps, 0.0, graph.working_qubits
            )
            lxe.append(float(len(q) * np.dot(p, q) - 1.0))
        agf = agf_from_lxe(float(np.mean(lxe)), float(lxe_ideal.mean()), n)
        eff = invert_effective_rate(graph, agf)
        points.append((eps, eff))
        pred = predicted_agf(graph, NoiseSpec(per_qubit_error=eps)).agf
        print(
            f"  {kind.value} n={n} eps={100 * eps:.2f}%: "
            f"F_exact={agf:.5f} F_pred={pred:.5f} eps_eff={100 * eff:.4f}%"
        )
    ratio = calibration_fit(points)
    print(f"  => exact ratio {kind.value} n={n}: {ratio:.4f}\n")
    return ratio


if __name__ == "__main__":
    for kind, n in [
        (TopologyKind.FULLY_CONNECTED, 5),
        (TopologyKind.FULLY_CONNECTED, 8),
        (TopologyKind.LINE_1D, 5),
        (TopologyKind.LINE_1D, 8),
    ]:
        exact_family_ratio(kind, n)
