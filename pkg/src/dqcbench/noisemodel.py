"""Cost and allocation matrices for gate-level depolarizing bookkeeping.

Every two-qubit gate is compiled as: walk one endpoint along the shortest
path, apply the gate, walk back.  Each swap deposits one single-qubit
depolarizing channel per participating position and each gate deposits one
per endpoint position; channels are then commuted to the end of the
circuit, later swaps relocating them.  The cost matrix C[n][m] of a gate
counts, exactly (fractions allowed), the channels with error parameter of
qubit m that end on qubit n.  Telegates replace memory-qubit channels by
channels on both endpoints with a 1/3 exponent per memory, and optionally
a 1/3-exponent entanglement column per endpoint.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .topology import ExtendedGraph, QubitId, swap_path

EJPP_SHIFT_EXPONENT = Fraction(1, 3)


@dataclass(frozen=True)
class NoiseSpec:
    """Device error rates.

    per_qubit_error is either one rate shared by all qubits (working and
    memory) or a full per-qubit tuple.  calibration_ratio rescales the
    per-qubit rates when predicting fidelities (fitted, around 0.8-1);
    the entanglement error is never rescaled.
    """

    per_qubit_error: float | tuple[float, ...]
    entanglement_error: float = 0.0
    calibration_ratio: float = 1.0

    def rates(self, n_qubits: int) -> np.ndarray:
        eps = self.per_qubit_error
        if isinstance(eps, (int, float)):
            return np.full(n_qubits, float(eps))
        if len(eps) != n_qubits:
            raise ValueError(f"expected {n_qubits} rates, got {len(eps)}")
        return np.asarray(eps, dtype=float)


@dataclass(frozen=True)
class CostMatrix:
    """Exact channel counts: rows index qubits, columns error parameters.

    ``entanglement`` is the optional extra column counting entangled-pair
    channels per row.  ``pair`` records the gate this matrix belongs to,
    or None for an allocation (gate-averaged) matrix.
    """

    entries: tuple[tuple[Fraction, ...], ...]
    entanglement: tuple[Fraction, ...] | None = None
    pair: tuple[QubitId, QubitId] | None = None

    @property
    def n_qubits(self) -> int:
        return len(self.entries)

    def as_array(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.entries])

    def entanglement_array(self) -> np.ndarray:
        if self.entanglement is None:
            return np.zeros(self.n_qubits)
        return np.array([float(x) for x in self.entanglement])

    def total(self) -> Fraction:
        return sum(x for row in self.entries for x in row)


@dataclass
class _Channel:
    position: QubitId
    column: QubitId | str  # qubit id, or "E" for the entanglement column
    weight: Fraction


def _deposit_and_commute(
    ops: list[tuple[str, tuple]],
    n_qubits: int,
) -> list[_Channel]:
    """Run the deposit rules over a closed op sequence, relocating channels
    through later swaps.  Since the swap path is closed, final positions
    coincide with qubit ids."""
    channels: list[_Channel] = []
    one = Fraction(1)
    third = EJPP_SHIFT_EXPONENT
    for kind, args in ops:
        if kind == "swap":
            x, y = args
            for ch in channels:
                if ch.position == x:
                    ch.position = y
                elif ch.position == y:
                    ch.position = x
            channels.append(_Channel(x, x, one))
            channels.append(_Channel(y, y, one))
        elif kind == "gate":
            x, y = args
            channels.append(_Channel(x, x, one))
            channels.append(_Channel(y, y, one))
        elif kind == "telegate":
            x, y, mem_a, mem_b, extended = args
            channels.append(_Channel(x, x, one))
            channels.append(_Channel(y, y, one))
            for endpoint in (x, y):
                channels.append(_Channel(endpoint, mem_a, third))
                channels.append(_Channel(endpoint, mem_b, third))
                if extended:
                    channels.append(_Channel(endpoint, "E", third))
        else:
            raise ValueError(f"unknown op kind: {kind}")
    return channels


def _gate_ops(
    graph: ExtendedGraph, q: QubitId, qp: QubitId, extended: bool
) -> list[tuple[str, tuple]]:
    """Swap/gate op sequence for one two-qubit gate, lower endpoint first."""
    lo, hi = (q, qp) if q < qp else (qp, q)
    path = swap_path(graph, lo, hi)
    nodes = path.nodes
    ops: list[tuple[str, tuple]] = []
    if path.crossing_at is None:
        # The lower endpoint walks to the position next to the other one.
        out = [("swap", (nodes[i], nodes[i + 1])) for i in range(len(nodes) - 2)]
        ops.extend(out)
        ops.append(("gate", (nodes[-2], nodes[-1])))
        ops.extend(reversed(out))
        return ops
    i = path.crossing_at
    mem_a, mem_b = nodes[i], nodes[i + 1]
    out_a = [("swap", (nodes[j], nodes[j + 1])) for j in range(i - 1)]
    out_b = [("swap", (nodes[j], nodes[j - 1])) for j in range(len(nodes) - 1, i + 2, -1)]
    ops.extend(out_a)
    ops.extend(out_b)
    ops.append(("telegate", (nodes[i - 1], nodes[i + 2], mem_a, mem_b, extended)))
    ops.extend(reversed(out_b))
    ops.extend(reversed(out_a))
    return ops


def gate_cost_matrix(
    graph: ExtendedGraph, q: QubitId, qp: QubitId, extended: bool = False
) -> CostMatrix:
    """Exact cost matrix of one gate between working qubits q and qp.

    Raises:
        ValueError: if q or qp is a memory qubit, or the pair is unroutable.
    """
    working = set(graph.working_qubits)
    if q not in working or qp not in working:
        raise ValueError("gates act between working qubits")
    n = graph.n_qubits
    rows = [[Fraction(0)] * n for _ in range(n)]
    ent = [Fraction(0)] * n
    if q != qp:
        for ch in _deposit_and_commute(_gate_ops(graph, q, qp, extended), n):
            if ch.column == "E":
                ent[ch.position] += ch.weight
            else:
                rows[ch.position][ch.column] += ch.weight
    return CostMatrix(
        entries=tuple(tuple(row) for row in rows),
        entanglement=tuple(ent) if extended else None,
        pair=(q, qp),
    )


def allocation_matrix(graph: ExtendedGraph, extended: bool = False) -> CostMatrix:
    """Average cost matrix over all ordered pairs of distinct working qubits,
    normalised by 2(N−1).  Fully connected devices give the identity."""
    n = graph.n_qubits
    working = graph.working_qubits
    norm = Fraction(1, 2 * (len(working) - 1))
    rows = [[Fraction(0)] * n for _ in range(n)]
    ent = [Fraction(0)] * n
    for q in working:
        for qp in working:
            if q == qp:
                continue
            cost = gate_cost_matrix(graph, q, qp, extended)
            for i in range(n):
                for j in range(n):
                    rows[i][j] += cost.entries[i][j]
            if extended and cost.entanglement is not None:
                for i in range(n):
                    ent[i] += cost.entanglement[i]
    rows = [[x * norm for x in row] for row in rows]
    ent = [x * norm for x in ent]
    return CostMatrix(
        entries=tuple(tuple(row) for row in rows),
        entanglement=tuple(ent) if extended else None,
        pair=None,
    )


def extend_entanglement_column(graph: ExtendedGraph, cost: CostMatrix) -> CostMatrix:
    """Recompute ``cost`` with the entangled-pair column appended."""
    if cost.entanglement is not None:
        return cost
    if cost.pair is not None:
        return gate_cost_matrix(graph, *cost.pair, extended=True)
    return allocation_matrix(graph, extended=True)


def characteristic_cost(allocation: CostMatrix) -> Fraction:
    """Sum of all allocation entries (qubit columns only)."""
    return allocation.total()


def ejpp_shift_preserving(p_a: float, p_b: float) -> float:
    """Preserving factor of the channels that replace memory-qubit noise on
    both telegate endpoints."""
    return (p_a * p_b) ** (1.0 / 3.0)


def effective_preserving(
    graph: ExtendedGraph,
    noise: NoiseSpec,
    allocation: CostMatrix | None = None,
) -> np.ndarray:
    """Per-working-qubit preserving factor after one average gate layer slot.

    P̄_q = Π_m (1 − r·ε_m)^{A[q][m]} · (1 − ε_E)^{A_E[q]}; the calibration
    ratio applies to qubit rates only.
    """
    if allocation is None:
        allocation = allocation_matrix(graph, extended=True)
    rates = noise.rates(graph.n_qubits) * noise.calibration_ratio
    if np.any(rates >= 1.0) or np.any(rates < 0.0):
        raise ValueError("calibrated error rates must lie in [0, 1)")
    if noise.entanglement_error > 0.0 and allocation.entanglement is None:
        raise ValueError("entanglement noise needs the extended column")
    a = allocation.as_array()
    log_keep = np.log1p(-rates)
    log_p = a @ log_keep
    if allocation.entanglement is not None and noise.entanglement_error > 0.0:
        log_p = log_p + allocation.entanglement_array() * np.log1p(
            -noise.entanglement_error
        )
    p_bar = np.exp(log_p)
    return p_bar[list(graph.working_qubits)]
