"""Connectivity graphs for single-QPU and two-QPU distributed devices.

A device is described by an extended graph: working qubits coupled by
physical edges, plus (for distributed devices) one auxiliary memory qubit
per QPU and a single entanglement edge between the two memories.  Memory
qubits are ordinary routable nodes for swap purposes; the entanglement
edge can only be traversed by a telegate, never by a swap.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property

QubitId = int


class QubitRole(enum.Enum):
    WORKING = "working"
    MEMORY = "memory"


class TopologyKind(enum.Enum):
    FULLY_CONNECTED = "fully_connected"
    LINE_1D = "line_1d"
    GRID_2D = "grid_2d"


class MemoryPlacement(enum.Enum):
    HUB = "hub"
    EDGE = "edge"


@dataclass(frozen=True)
class ExplicitPlacement:
    """Caller-chosen memory attachments, one tuple of local qubits per QPU."""

    attachments: tuple[tuple[QubitId, ...], ...]


Placement = MemoryPlacement | ExplicitPlacement


@dataclass(frozen=True)
class SwapPath:
    """Shortest route between two qubits.

    ``nodes`` lists every qubit on the route, endpoints included.  For a
    route through the entanglement edge, ``crossing_at`` is the index i
    such that (nodes[i], nodes[i+1]) is the entanglement edge; otherwise
    it is None.
    """

    nodes: tuple[QubitId, ...]
    crossing_at: int | None = None

    @property
    def crossing(self) -> bool:
        return self.crossing_at is not None


@dataclass(frozen=True)
class ExtendedGraph:
    """Device connectivity with roles, QPU assignment and entanglement edges."""

    roles: tuple[QubitRole, ...]
    edges: frozenset[tuple[QubitId, QubitId]]
    entanglement_edges: frozenset[tuple[QubitId, QubitId]]
    qpu_of: tuple[int, ...]

    def __post_init__(self) -> None:
        for a, b in self.edges | self.entanglement_edges:
            if not (0 <= a < b < self.n_qubits):
                raise ValueError(f"edge ({a}, {b}) is not sorted or out of range")
        for a, b in self.entanglement_edges:
            if self.roles[a] != QubitRole.MEMORY or self.roles[b] != QubitRole.MEMORY:
                raise ValueError("entanglement edges must join two memory qubits")

    @property
    def n_qubits(self) -> int:
        return len(self.roles)

    @property
    def n_working(self) -> int:
        return sum(1 for r in self.roles if r is QubitRole.WORKING)

    @cached_property
    def working_qubits(self) -> tuple[QubitId, ...]:
        return tuple(q for q, r in enumerate(self.roles) if r is QubitRole.WORKING)

    @cached_property
    def memory_qubits(self) -> tuple[QubitId, ...]:
        return tuple(q for q, r in enumerate(self.roles) if r is QubitRole.MEMORY)

    @cached_property
    def neighbors(self) -> tuple[tuple[QubitId, ...], ...]:
        """Adjacency over physical and entanglement edges, ids ascending."""
        adj: list[list[QubitId]] = [[] for _ in range(self.n_qubits)]
        for a, b in self.edges | self.entanglement_edges:
            adj[a].append(b)
            adj[b].append(a)
        return tuple(tuple(sorted(ns)) for ns in adj)

    def is_entanglement_edge(self, a: QubitId, b: QubitId) -> bool:
        return (min(a, b), max(a, b)) in self.entanglement_edges


def _edge(a: QubitId, b: QubitId) -> tuple[QubitId, QubitId]:
    return (a, b) if a < b else (b, a)


def _grid_sites(m: int) -> list[tuple[int, int]]:
    """Lattice sites of an m-qubit 2D patch, row-major order.

    Perfect squares use k×k, pronic numbers k×(k+1), and m = k²−1 uses the
    k×k patch with the most-central site removed (so 8 is the 3×3 ring).
    Everything else falls back to the most-square exact factorization,
    which degenerates to a line for primes.
    """
    if m < 1:
        raise ValueError("patch size must be positive")
    k = 1
    while k * k < m:
        k += 1
    if k * k == m:
        rows, cols = k, k
    elif (k - 1) * k == m:
        rows, cols = k - 1, k
    elif k * k - 1 == m:
        sites = [(r, c) for r in range(k) for c in range(k)]
        centre = ((k - 1) / 2, (k - 1) / 2)
        hole = min(
            sites,
            key=lambda s: ((s[0] - centre[0]) ** 2 + (s[1] - centre[1]) ** 2, s),
        )
        sites.remove(hole)
        return sites
    else:
        rows = max(d for d in range(1, int(m**0.5) + 1) if m % d == 0)
        cols = m // rows
    return [(r, c) for r in range(rows) for c in range(cols)]


def _grid_edges(sites: list[tuple[int, int]]) -> set[tuple[int, int]]:
    index = {s: i for i, s in enumerate(sites)}
    out: set[tuple[int, int]] = set()
    for (r, c), i in index.items():
        for s in ((r + 1, c), (r, c + 1)):
            if s in index:
                out.add(_edge(i, index[s]))
    return out


def _local_edges(kind: TopologyKind, m: int) -> set[tuple[QubitId, QubitId]]:
    """Couplings of one m-qubit QPU with local ids 0..m−1."""
    if kind is TopologyKind.FULLY_CONNECTED:
        return {(a, b) for a in range(m) for b in range(a + 1, m)}
    if kind is TopologyKind.LINE_1D:
        return {(i, i + 1) for i in range(m - 1)}
    if kind is TopologyKind.GRID_2D:
        return _grid_edges(_grid_sites(m))
    raise ValueError(f"unknown topology kind: {kind}")


def _hub_attachment(kind: TopologyKind, m: int) -> tuple[QubitId, ...]:
    """Local qubits the memory couples to under Hub placement.

    On a true 2D patch the hub position is the face whose surrounding
    plaquette touches the most qubits (the memory sits inside the patch,
    coupled to all of them); on lines, fully connected QPUs and
    degenerate one-row grids it is a pendant at the highest-degree qubit,
    lowest id first.
    """
    edges = _local_edges(kind, m)
    if kind is TopologyKind.GRID_2D:
        sites = _grid_sites(m)
        if len({r for r, _ in sites}) > 1 and len({c for _, c in sites}) > 1:
            index = {s: i for i, s in enumerate(sites)}
            present = set(index)
            faces: list[tuple[QubitId, ...]] = []
            rmax = max(r for r, _ in sites)
            cmax = max(c for _, c in sites)
            for r in range(rmax + 1):
                for c in range(cmax + 1):
                    corners = [(r, c), (r + 1, c), (r, c + 1), (r + 1, c + 1)]
                    faces.append(tuple(sorted(index[s] for s in corners if s in present)))
            for r in range(rmax + 1):
                for c in range(cmax + 1):
                    if (r, c) not in present:
                        around = [(r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)]
                        faces.append(tuple(sorted(index[s] for s in around if s in present)))
            return max(faces, key=lambda f: (len(f), tuple(-q for q in f)))
    degree = {q: 0 for q in range(m)}
    for a, b in edges:
        degree[a] += 1
        degree[b] += 1
    hub = max(range(m), key=lambda q: (degree[q], -q))
    return (hub,)


def standard_topology(
    kind: TopologyKind,
    n_working: int,
    dqc: bool = False,
    memory_placement: Placement = MemoryPlacement.HUB,
) -> ExtendedGraph:
    """Build one of the six standard device families.

    Args:
        kind: local coupling graph of each QPU.
        n_working: total number of working qubits.  For ``dqc`` devices this
            must be even; it is split evenly over the two QPUs.
        dqc: if True, build a two-QPU device with one memory qubit per QPU
            and a single entanglement edge between the memories.
        memory_placement: where each memory qubit attaches (dqc only).

    Returns:
        An ExtendedGraph with working qubits 0..n_working−1 (QPU A first)
        and, for dqc devices, memory qubits n_working and n_working+1.
    """
    if n_working < 2:
        raise ValueError("need at least two working qubits")
    if not dqc:
        roles = (QubitRole.WORKING,) * n_working
        edges = frozenset(_local_edges(kind, n_working))
        return ExtendedGraph(roles, edges, frozenset(), (0,) * n_working)

    if n_working % 2:
        raise ValueError("dqc devices need an even number of working qubits")
    half = n_working // 2

    if isinstance(memory_placement, ExplicitPlacement):
        attachments = memory_placement.attachments
        if len(attachments) != 2:
            raise ValueError("explicit placement needs one attachment tuple per QPU")
    elif memory_placement is MemoryPlacement.HUB:
        attachments = (_hub_attachment(kind, half),) * 2
    elif memory_placement is MemoryPlacement.EDGE:
        if kind is not TopologyKind.LINE_1D:
            raise ValueError("edge placement is defined for line topologies only")
        attachments = ((0,),) * 2
    else:
        raise ValueError(
            f"unknown memory placement: {memory_placement!r}; "
            f"expected Hub, Edge or ExplicitPlacement"
        )

    roles = (QubitRole.WORKING,) * n_working + (QubitRole.MEMORY,) * 2
    edges: set[tuple[QubitId, QubitId]] = set()
    for qpu, offset in enumerate((0, half)):
        for a, b in _local_edges(kind, half):
            edges.add(_edge(a + offset, b + offset))
        memory = n_working + qpu
        for local in attachments[qpu]:
            if not 0 <= local < half:
                raise ValueError(f"attachment {local} outside QPU of size {half}")
            edges.add(_edge(local + offset, memory))
    qpu_of = (0,) * half + (1,) * half + (0, 1)
    return ExtendedGraph(
        roles=roles,
        edges=frozenset(edges),
        entanglement_edges=frozenset({(n_working, n_working + 1)}),
        qpu_of=qpu_of,
    )


def swap_path(graph: ExtendedGraph, start: QubitId, goal: QubitId) -> SwapPath:
    """Deterministic shortest route between two qubits.

    Breadth-first distances from the goal, then a greedy descent taking the
    lowest-id neighbour at each step, which yields the lexicographically
    smallest of all shortest node sequences.

    Raises:
        ValueError: if the qubits are not connected.
    """
    if start == goal:
        return SwapPath(nodes=(start,))
    dist = {goal: 0}
    frontier = [goal]
    while frontier and start not in dist:
        nxt: list[QubitId] = []
        for node in frontier:
            for nb in graph.neighbors[node]:
                if nb not in dist:
                    dist[nb] = dist[node] + 1
                    nxt.append(nb)
        frontier = nxt
    if start not in dist:
        raise ValueError(f"no route between qubits {start} and {goal}")
    nodes = [start]
    while nodes[-1] != goal:
        here = nodes[-1]
        step = min(nb for nb in graph.neighbors[here] if dist.get(nb) == dist[here] - 1)
        nodes.append(step)
    crossing_at = None
    for i in range(len(nodes) - 1):
        if graph.is_entanglement_edge(nodes[i], nodes[i + 1]):
            crossing_at = i
            break
    return SwapPath(nodes=tuple(nodes), crossing_at=crossing_at)
