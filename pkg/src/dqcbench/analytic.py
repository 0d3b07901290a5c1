"""Closed-form figures of merit for depolarized quantum-volume sampling.

Three equivalent figures of merit (average gate fidelity, heavy output
probability, linear cross entropy) are related by exact affine identities
once the noise is reduced to per-qubit depolarizing factors; this module
implements those identities, the per-qubit product prediction built on the
allocation matrices, the permutation-averaged Markov transfer matrix, and
the exhaustive memory-placement optimizer.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .noisemodel import (
    NoiseSpec,
    allocation_matrix,
    characteristic_cost,
    effective_preserving,
)
from .topology import (
    ExplicitPlacement,
    ExtendedGraph,
    QubitId,
    QubitRole,
)

IDEAL_HOP_LIMIT = 0.5 * (1.0 + np.log(2.0))


@dataclass(frozen=True)
class GlobalPreserving:
    """Effective global depolarizing survival probability."""

    p: float
    n_qubits: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("preserving factor must lie in [0, 1]")


@dataclass(frozen=True)
class FidelityPrediction:
    agf: float
    per_qubit: dict[QubitId, float]
    n_layers_exponent: int


@dataclass(frozen=True)
class MarkovTransfer:
    """Transfer matrix on outcome distributions.

    Product form keeps one flip probability per qubit; the permutation
    average collapses to diagonal F̄ and uniform off-diagonal leakage.
    """

    n_qubits: int
    per_qubit: tuple[float, ...] | None
    agf: float

    def matrix(self) -> np.ndarray:
        dim = 2**self.n_qubits
        if self.per_qubit is None:
            off = (1.0 - self.agf) / (dim - 1)
            return np.full((dim, dim), off) + (self.agf - off) * np.eye(dim)
        m = np.ones((1, 1))
        for p in self.per_qubit:
            keep = 0.5 * (1.0 + p)
            m = np.kron(m, np.array([[keep, 1.0 - keep], [1.0 - keep, keep]]))
        return m


def layers_exponent(n_qubits: int) -> int:
    """Depolarizing channels per qubit over one N-layer circuit: 2⌊N/2⌋."""
    return 2 * (n_qubits // 2)


def global_agf(p: float, n_qubits: int) -> float:
    """F̄ of the global depolarizing channel: ℘ + (1−℘)/2^N."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("preserving factor must lie in [0, 1]")
    return p + (1.0 - p) / 2**n_qubits


def global_hop(p: float, hop_ideal: float) -> float:
    """H̄ = H̄_ideal·℘ + (1−℘)/2."""
    return hop_ideal * p + 0.5 * (1.0 - p)


def global_lxe(p: float, lxe_ideal: float) -> float:
    """χ̄ = χ̄_ideal·℘."""
    return lxe_ideal * p


def preserving_from_agf(agf: float, n_qubits: int) -> float:
    """Invert global_agf: ℘ = (2^N F̄ − 1)/(2^N − 1)."""
    dim = 2**n_qubits
    return (dim * agf - 1.0) / (dim - 1.0)


def hop_from_agf(agf: float, hop_ideal: float, n_qubits: int) -> float:
    return global_hop(preserving_from_agf(agf, n_qubits), hop_ideal)


def lxe_from_agf(agf: float, lxe_ideal: float, n_qubits: int) -> float:
    return global_lxe(preserving_from_agf(agf, n_qubits), lxe_ideal)


def agf_from_lxe(lxe: float, lxe_ideal: float, n_qubits: int) -> float:
    if lxe_ideal == 0:
        raise ValueError("cannot invert with lxe_ideal = 0")
    return global_agf_unclipped(lxe / lxe_ideal, n_qubits)


def global_agf_unclipped(p: float, n_qubits: int) -> float:
    # estimators can produce ℘ slightly outside [0,1]; keep the map affine
    return p + (1.0 - p) / 2**n_qubits


def hop_from_lxe(lxe: float, lxe_ideal: float) -> float:
    """H̄ = 1/2 + (ln2/2)·χ̄/χ̄_ideal."""
    if lxe_ideal == 0:
        raise ValueError("cannot invert with lxe_ideal = 0")
    return 0.5 + 0.5 * np.log(2.0) * lxe / lxe_ideal


def hop_from_agf_large_n(agf: float) -> float:
    """Large-size shortcut (2^N ≫ 1): H̄ ≈ (1 + F̄ ln2)/2."""
    return 0.5 * (1.0 + agf * np.log(2.0))


def lxe_from_agf_large_n(agf: float, lxe_ideal: float) -> float:
    """Large-size shortcut: χ̄ ≈ F̄·χ̄_ideal."""
    return agf * lxe_ideal


def predicted_agf(graph: ExtendedGraph, noise: NoiseSpec) -> FidelityPrediction:
    """Analytic fidelity of one random circuit on the device.

    Composes the allocation matrix with the noise rates into per-qubit
    preserving factors, then F̄ = Π_q (1 + P̄_q^{2⌊N/2⌋})/2.  On fully
    connected devices this reduces to the bare per-qubit rates.
    """
    allocation = allocation_matrix(graph, extended=True)
    p_bar = effective_preserving(graph, noise, allocation)
    exponent = layers_exponent(graph.n_working)
    powered = p_bar**exponent
    agf = float(np.prod(0.5 * (1.0 + powered)))
    per_qubit = dict(zip(graph.working_qubits, p_bar.tolist()))
    return FidelityPrediction(agf=agf, per_qubit=per_qubit, n_layers_exponent=exponent)


def approx_agf(characteristic: float | Fraction, n_qubits: int, eps: float) -> float:
    """Leading-order exponential: F̄ ≈ exp(−N·𝒜·ε/2)."""
    return float(np.exp(-n_qubits * float(characteristic) * eps / 2.0))


def permutation_averaged_markov(
    per_qubit: tuple[float, ...] | list[float], n_qubits: int
) -> MarkovTransfer:
    """Average the product transfer matrix over all outcome relabelings.

    The result depends only on F̄ = Π (1+P_q)/2: diagonal F̄, off-diagonal
    (1−F̄)/(2^N−1).
    """
    if len(per_qubit) != n_qubits:
        raise ValueError("need one preserving factor per qubit")
    agf = float(np.prod([0.5 * (1.0 + p) for p in per_qubit]))
    return MarkovTransfer(n_qubits=n_qubits, per_qubit=None, agf=agf)


def product_markov(per_qubit: tuple[float, ...] | list[float]) -> MarkovTransfer:
    agf = float(np.prod([0.5 * (1.0 + p) for p in per_qubit]))
    return MarkovTransfer(
        n_qubits=len(per_qubit), per_qubit=tuple(per_qubit), agf=agf
    )


def brute_force_permutation_average(
    per_qubit: tuple[float, ...] | list[float],
) -> np.ndarray:
    """Test oracle: explicit average of Π^T D Π over all 2^N! permutations.

    Only feasible for N ≤ 2.
    """
    d = product_markov(per_qubit).matrix()
    dim = d.shape[0]
    total = np.zeros_like(d)
    count = 0
    for perm in itertools.permutations(range(dim)):
        p = np.zeros_like(d)
        p[list(perm), range(dim)] = 1.0
        total += p.T @ d @ p
        count += 1
    return total / count


def optimize_memory_placement(
    local_a: ExtendedGraph, local_b: ExtendedGraph
) -> tuple[ExplicitPlacement, Fraction]:
    """Pick the single-site memory attachments minimizing the summed
    allocation cost of the combined two-QPU device.

    Exhaustive over all (site_A, site_B) pairs; ties go to the lowest
    index pair.  Local graphs must be single-QPU, working-only.
    """
    for g in (local_a, local_b):
        if g.memory_qubits or g.entanglement_edges:
            raise ValueError("local graphs must be working-only")
    best: tuple[Fraction, tuple[int, int]] | None = None
    for a in local_a.working_qubits:
        for b in local_b.working_qubits:
            combined = combine_with_memories(local_a, local_b, (a,), (b,))
            cost = characteristic_cost(allocation_matrix(combined))
            key = (cost, (a, b))
            if best is None or key < best:
                best = key
    assert best is not None
    cost, (a, b) = best
    return ExplicitPlacement(attachments=((a,), (b,))), cost


def combine_with_memories(
    local_a: ExtendedGraph,
    local_b: ExtendedGraph,
    attach_a: tuple[QubitId, ...],
    attach_b: tuple[QubitId, ...],
) -> ExtendedGraph:
    """Join two local devices with one memory each and one entangled link.

    B's qubit ids are offset by A's size; memories take the last two ids.
    """
    na, nb = local_a.n_qubits, local_b.n_qubits
    mem_a, mem_b = na + nb, na + nb + 1
    edges = set(local_a.edges)
    edges |= {(x + na, y + na) for x, y in local_b.edges}
    edges |= {(q, mem_a) for q in attach_a}
    edges |= {(q + na, mem_b) for q in attach_b}
    return ExtendedGraph(
        roles=(QubitRole.WORKING,) * (na + nb) + (QubitRole.MEMORY,) * 2,
        edges=frozenset(edges),
        entanglement_edges=frozenset({(mem_a, mem_b)}),
        qpu_of=(0,) * na + (1,) * nb + (0, 1),
    )


def calibration_fit(points: list[tuple[float, float]]) -> float:
    """Least-squares slope through the origin of (ε_in, ε_eff) pairs."""
    if not points:
        raise ValueError("need at least one calibration point")
    x = np.array([p[0] for p in points])
    y = np.array([p[1] for p in points])
    xx = float(np.dot(x, x))
    if xx == 0.0:
        raise ValueError("all input rates are zero; slope is undefined")
    return float(np.dot(x, y) / xx)


def crossover_entanglement_rate(
    graph_single: ExtendedGraph,
    graph_dqc: ExtendedGraph,
    per_qubit_error: float,
    calibration_ratio: float = 1.0,
    upper: float = 0.2,
    iterations: int = 80,
) -> float:
    """Entangled-pair error rate at which the predicted fidelities of the
    distributed and monolithic devices cross, found by bisection.

    Raises:
        ValueError: if the distributed device is not ahead at ε_E = 0 or
            still ahead at ``upper``.
    """

    def gap(eps_e: float) -> float:
        noise = NoiseSpec(
            per_qubit_error=per_qubit_error,
            entanglement_error=eps_e,
            calibration_ratio=calibration_ratio,
        )
        return predicted_agf(graph_dqc, noise).agf - predicted_agf(graph_single, noise).agf

    lo, hi = 0.0, upper
    if gap(lo) <= 0.0:
        raise ValueError("distributed device has no advantage at eps_E = 0")
    if gap(hi) >= 0.0:
        raise ValueError("no crossover below the bisection upper bound")
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if gap(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
