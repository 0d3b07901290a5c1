"""Quantum-volume random circuits and their compilation onto devices.

Abstract circuits hold one Haar-random SU(4) per working-qubit pair per
layer.  Compilation lowers every SU(4) to a fixed 3-CNOT template (the
error model budgets channels per SU(4) uniformly, so cheaper gates are
never special-cased), inserts closed swap chains for non-adjacent local
pairs, and realizes each CNOT of a cross-QPU pair as an EJPP telegate
consuming one fresh entangled memory pair.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .topology import ExtendedGraph, QubitId, swap_path

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)

# control is the second operand slot (q1), target the first (q0), and the
# reverse; computational basis ordered |q0 q1>
CNOT_10 = np.array(
    [[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=complex
)
CNOT_01 = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)

# magic basis columns; real orthogonal matrices here are local unitaries
_MAGIC = (1 / np.sqrt(2)) * np.array(
    [
        [1, 0, 0, 1j],
        [0, 1j, 1, 0],
        [0, 1j, -1, 0],
        [1, 0, 0, -1j],
    ],
    dtype=complex,
)

# diagonal sign patterns of XX, YY, ZZ in the magic basis; together with
# the identity they span all magic-diagonal generators
_SIGN_XX = np.array([1.0, 1.0, -1.0, -1.0])
_SIGN_YY = np.array([-1.0, 1.0, -1.0, 1.0])
_SIGN_ZZ = np.array([1.0, -1.0, -1.0, 1.0])
_SIGNS = np.stack([np.ones(4), _SIGN_XX, _SIGN_YY, _SIGN_ZZ], axis=1)
_SIGNS_INV = np.linalg.inv(_SIGNS)


def _check_unitary(u: np.ndarray, dim: int) -> None:
    if u.shape != (dim, dim):
        raise ValueError(f"expected {dim}x{dim} unitary, got shape {u.shape}")
    if np.max(np.abs(u.conj().T @ u - np.eye(dim))) > 1e-12:
        raise ValueError("matrix is not unitary to 1e-12")


@dataclass(frozen=True, eq=False)
class SingleQubit:
    unitary: np.ndarray
    qubit: QubitId

    def __post_init__(self) -> None:
        _check_unitary(self.unitary, 2)


@dataclass(frozen=True)
class CNOT:
    control: QubitId
    target: QubitId

    def __post_init__(self) -> None:
        if self.control == self.target:
            raise ValueError("CNOT operands must be distinct")


@dataclass(frozen=True)
class Swap:
    a: QubitId
    b: QubitId

    def __post_init__(self) -> None:
        if self.a == self.b:
            raise ValueError("swap operands must be distinct")


@dataclass(frozen=True)
class BellPrep:
    """Reset the memory pair and prepare (|00> + |11>)/sqrt(2)."""

    memory_a: QubitId
    memory_b: QubitId

    def __post_init__(self) -> None:
        if self.memory_a == self.memory_b:
            raise ValueError("memory pair must be distinct")


@dataclass(frozen=True)
class MeasureZ:
    qubit: QubitId
    bit: int


@dataclass(frozen=True)
class MeasureX:
    qubit: QubitId
    bit: int


@dataclass(frozen=True, eq=False)
class ClassicallyControlled:
    """Apply ``unitary`` to ``qubit`` iff classical ``bit`` is 1."""

    unitary: np.ndarray
    qubit: QubitId
    bit: int

    def __post_init__(self) -> None:
        _check_unitary(self.unitary, 2)


Gate = Union[
    SingleQubit, CNOT, Swap, BellPrep, MeasureZ, MeasureX, ClassicallyControlled
]


@dataclass(frozen=True, eq=False)
class Circuit:
    """Abstract volume-test circuit: N layers of SU(4)s on disjoint pairs."""

    n_working: int
    layers: tuple[tuple[tuple[tuple[QubitId, QubitId], np.ndarray], ...], ...]

    def __post_init__(self) -> None:
        if len(self.layers) != self.n_working:
            raise ValueError("a circuit has exactly one layer per qubit")
        per_layer = self.n_working // 2
        for layer in self.layers:
            if len(layer) != per_layer:
                raise ValueError(f"each layer needs {per_layer} gates")
            touched = [q for (pair, _) in layer for q in pair]
            if len(set(touched)) != len(touched):
                raise ValueError("pairs within a layer must be disjoint")


@dataclass(frozen=True, eq=False)
class PhysicalCircuit:
    gates: tuple[Gate, ...]
    n_qubits: int
    n_bits: int
    entanglement_pairs_consumed: int


def sample_su4(rng: np.random.Generator) -> np.ndarray:
    """Haar-random SU(4): QR of a complex Ginibre matrix with the R diagonal
    phase-fixed, then normalized to unit determinant."""
    g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    q, r = np.linalg.qr(g)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    return q / np.linalg.det(q) ** 0.25


def sample_qv_circuit(n_working: int, rng: np.random.Generator) -> Circuit:
    """N layers; per layer a uniform perfect matching on a uniform
    2⌊N/2⌋-subset (odd N idles one uniformly chosen qubit per layer)."""
    if n_working < 2:
        raise ValueError("need at least two working qubits")
    layers = []
    for _ in range(n_working):
        order = rng.permutation(n_working)
        gates = []
        for k in range(n_working // 2):
            a, b = int(order[2 * k]), int(order[2 * k + 1])
            pair = (a, b) if a < b else (b, a)
            gates.append((pair, sample_su4(rng)))
        gates.sort(key=lambda item: item[0])
        layers.append(tuple(gates))
    return Circuit(n_working=n_working, layers=tuple(layers))


def _rz(t: float) -> np.ndarray:
    return np.array([[np.exp(-0.5j * t), 0], [0, np.exp(0.5j * t)]])


def _ry(t: float) -> np.ndarray:
    c, s = np.cos(t / 2), np.sin(t / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _two_stage_real_diag(m: np.ndarray) -> np.ndarray:
    """Orthogonal diagonalizer of the commuting pair (Re m, Im m)."""
    w, p = np.linalg.eigh(m.real)
    i = 0
    while i < 4:
        j = i + 1
        while j < 4 and abs(w[j] - w[i]) < 1e-9:
            j += 1
        if j - i > 1:
            block = p[:, i:j]
            sub = block.T @ m.imag @ block
            _, u = np.linalg.eigh(0.5 * (sub + sub.T))
            p[:, i:j] = block @ u
        i = j
    return p


def _magic_frames(u: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Factor m = B†uB as o1·diag(e^{iθ})·o2 with o1, o2 ∈ SO(4)."""
    m = _MAGIC.conj().T @ u @ _MAGIC
    big = m.T @ m
    p = _two_stage_real_diag(big)
    lam = np.diag(p.T @ big @ p).copy()
    lam = lam / np.abs(lam)
    theta = 0.5 * np.angle(lam)
    order = np.argsort(-theta, kind="stable")
    theta = theta[order]
    p = p[:, order]
    if np.linalg.det(p) < 0:
        p[:, -1] *= -1

    def build_o1(th: np.ndarray) -> np.ndarray | None:
        o1 = m @ p @ np.diag(np.exp(-1j * th))
        if np.max(np.abs(o1.imag)) > 1e-7:
            return None
        return o1.real

    o1 = build_o1(theta)
    if o1 is None:
        theta = theta.copy()
        theta[0] -= np.pi
        o1 = build_o1(theta)
        if o1 is None:
            raise ValueError("magic-basis factorization failed")
    if np.linalg.det(o1) < 0:
        theta = theta.copy()
        theta[0] -= np.pi if theta[0] > 0 else -np.pi
        o1 = build_o1(theta)
        if o1 is None or np.linalg.det(o1) < 0:
            raise ValueError("magic-basis factorization failed")
    return theta, o1, p.T


def _kron_factor(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split a local 4x4 (scalar times g⊗h) into unitary factors."""
    k = m.reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(4, 4)
    u, s, vh = np.linalg.svd(k)
    g = (u[:, 0] * np.sqrt(s[0])).reshape(2, 2)
    h = (vh[0, :] * np.sqrt(s[0])).reshape(2, 2)
    det_g = np.linalg.det(g)
    g = g / np.sqrt(det_g)
    h = h * np.sqrt(det_g)
    return g, h


def _match_mod_pi(
    target: np.ndarray, source: np.ndarray
) -> tuple[list[int], list[float]]:
    """Pair source angles to target positions with offsets that are
    multiples of π; the multisets agree by construction."""
    used = [False] * 4
    positions = [0] * 4
    signs = [1.0] * 4
    for j in range(4):
        for cand in range(4):
            if used[cand]:
                continue
            diff = target[cand] - source[j]
            k = round(diff / np.pi)
            if abs(diff - k * np.pi) < 1e-7:
                used[cand] = True
                positions[j] = cand
                signs[j] = 1.0 if k % 2 == 0 else -1.0
                break
        else:
            raise ValueError("interaction angle multisets do not match")
    return positions, signs


def _template_interior(alpha: float, beta: float, delta: float) -> np.ndarray:
    return (
        CNOT_10
        @ np.kron(_rz(delta), _ry(beta))
        @ CNOT_01
        @ np.kron(PAULI_I, _ry(alpha))
        @ CNOT_10
    )


def kak_decompose(u: np.ndarray) -> list[Gate]:
    """Exact 3-CNOT synthesis of a two-qubit unitary.

    Returns gates in time order on abstract qubits 0 (left tensor factor)
    and 1, always in the uniform template
    (1q)·C10·(1q on 1)·C01·(1q,1q)·C10·(1q,1q).

    Raises:
        ValueError: non-unitary input or reconstruction above 1e-9.
    """
    _check_unitary(u, 4)
    det = np.linalg.det(u)
    u_su = u / det**0.25
    theta_u, o1u, o2u = _magic_frames(u_su)
    k1 = _MAGIC @ o1u @ _MAGIC.conj().T
    k2 = _MAGIC @ o2u @ _MAGIC.conj().T
    d, a, b, c = _SIGNS_INV @ theta_u
    alpha = np.pi / 2 - 2 * c
    beta = np.pi / 2 - 2 * b
    delta = 2 * a - np.pi / 2
    t_su = np.exp(1j * np.pi / 4) * _template_interior(alpha, beta, delta)
    theta_t, o1t, o2t = _magic_frames(t_su)
    theta_n = a * _SIGN_XX + b * _SIGN_YY + c * _SIGN_ZZ
    positions, signs = _match_mod_pi(theta_n, theta_t)
    perm = np.zeros((4, 4))
    perm[np.arange(4), positions] = 1.0
    d_fix = np.diag([-1.0, 1, 1, 1]) if np.linalg.det(perm) < 0 else np.eye(4)
    p1 = perm.T @ d_fix @ np.diag(signs) @ o1t.T
    p2 = o2t.T @ d_fix @ perm
    la = _MAGIC @ p1 @ _MAGIC.conj().T
    lb = _MAGIC @ p2 @ _MAGIC.conj().T
    scalar = det**0.25 * np.exp(1j * d) * np.exp(1j * np.pi / 4)
    g0, g1 = _kron_factor(scalar * (k1 @ la))
    h0, h1 = _kron_factor(lb @ k2)
    gates: list[Gate] = [
        SingleQubit(h0, 0),
        SingleQubit(h1, 1),
        CNOT(control=1, target=0),
        SingleQubit(_ry(alpha), 1),
        CNOT(control=0, target=1),
        SingleQubit(_rz(delta), 0),
        SingleQubit(_ry(beta), 1),
        CNOT(control=1, target=0),
        SingleQubit(g0, 0),
        SingleQubit(g1, 1),
    ]
    if np.max(np.abs(reconstruct_pair_unitary(gates) - u)) > 1e-9:
        raise ValueError("KAK reconstruction error above 1e-9")
    return gates


def reconstruct_pair_unitary(gates: list[Gate]) -> np.ndarray:
    """Multiply out a two-qubit gate list on abstract qubits 0 and 1."""
    total = np.eye(4, dtype=complex)
    for gate in gates:
        if isinstance(gate, SingleQubit):
            ops = [PAULI_I, PAULI_I]
            ops[gate.qubit] = gate.unitary
            total = np.kron(ops[0], ops[1]) @ total
        elif isinstance(gate, CNOT):
            total = (CNOT_01 if gate.control == 0 else CNOT_10) @ total
        else:
            raise ValueError(f"not a pair unitary gate: {gate}")
    return total


def ejpp_cnot(
    control: QubitId,
    target: QubitId,
    memory_pair: tuple[QubitId, QubitId],
    first_bit: int,
) -> list[Gate]:
    """Non-local CNOT by gate teleportation through an entangled pair.

    memory_pair[0] sits on the control's QPU.  Consumes one fresh pair and
    two classical bits; both memories end measured and free for reuse.
    """
    m_c, m_t = memory_pair
    operands = {control, target, m_c, m_t}
    if len(operands) != 4:
        raise ValueError("EJPP operands must be four distinct qubits")
    return [
        BellPrep(m_c, m_t) if m_c < m_t else BellPrep(m_t, m_c),
        CNOT(control=control, target=m_c),
        MeasureZ(m_c, first_bit),
        ClassicallyControlled(PAULI_X, m_t, first_bit),
        CNOT(control=m_t, target=target),
        MeasureX(m_t, first_bit + 1),
        ClassicallyControlled(PAULI_Z, control, first_bit + 1),
    ]


def compile_circuit(circuit: Circuit, graph: ExtendedGraph) -> PhysicalCircuit:
    """Lower an abstract circuit onto the device.

    Raises:
        ValueError: size mismatch or unroutable pair.
    """
    if circuit.n_working != graph.n_working:
        raise ValueError("circuit size does not match device working qubits")
    working = graph.working_qubits
    gates: list[Gate] = []
    n_bits = 0
    pairs_consumed = 0
    for layer in circuit.layers:
        for (lo, hi), u in layer:
            body = kak_decompose(u)
            path = swap_path(graph, working[lo], working[hi])
            nodes = path.nodes
            if path.crossing_at is None:
                out = [Swap(nodes[i], nodes[i + 1]) for i in range(len(nodes) - 2)]
                slot_pos = {0: nodes[-2], 1: nodes[-1]}
                gates.extend(out)
                gates.extend(_remap_pair(body, slot_pos))
                gates.extend(reversed(out))
            else:
                i = path.crossing_at
                mem_a, mem_b = nodes[i], nodes[i + 1]
                out_a = [Swap(nodes[j], nodes[j + 1]) for j in range(i - 1)]
                out_b = [
                    Swap(nodes[j], nodes[j - 1])
                    for j in range(len(nodes) - 1, i + 2, -1)
                ]
                slot_pos = {0: nodes[i - 1], 1: nodes[i + 2]}
                slot_mem = {0: mem_a, 1: mem_b}
                gates.extend(out_a)
                gates.extend(out_b)
                for gate in body:
                    if isinstance(gate, SingleQubit):
                        gates.append(
                            SingleQubit(gate.unitary, slot_pos[gate.qubit])
                        )
                    else:
                        gates.extend(
                            ejpp_cnot(
                                slot_pos[gate.control],
                                slot_pos[gate.target],
                                (slot_mem[gate.control], slot_mem[gate.target]),
                                n_bits,
                            )
                        )
                        n_bits += 2
                        pairs_consumed += 1
                gates.extend(reversed(out_b))
                gates.extend(reversed(out_a))
    return PhysicalCircuit(
        gates=tuple(gates),
        n_qubits=graph.n_qubits,
        n_bits=n_bits,
        entanglement_pairs_consumed=pairs_consumed,
    )


def _remap_pair(body: list[Gate], slot_pos: dict[int, QubitId]) -> list[Gate]:
    out: list[Gate] = []
    for gate in body:
        if isinstance(gate, SingleQubit):
            out.append(SingleQubit(gate.unitary, slot_pos[gate.qubit]))
        else:
            out.append(
                CNOT(control=slot_pos[gate.control], target=slot_pos[gate.target])
            )
    return out


def circuit_to_text(circuit: Circuit) -> str:
    """Line-oriented dump: one gate per line with re,im pairs."""
    lines = [f"qv {circuit.n_working}"]
    for k, layer in enumerate(circuit.layers):
        for (lo, hi), u in layer:
            entries = " ".join(
                f"{z.real:.17g} {z.imag:.17g}" for z in u.reshape(-1)
            )
            lines.append(f"su4 {k} {lo} {hi} {entries}")
    return "\n".join(lines) + "\n"


def circuit_from_text(text: str) -> Circuit:
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    head = lines[0].split()
    if head[0] != "qv":
        raise ValueError("not a circuit dump")
    n = int(head[1])
    layers: list[list[tuple[tuple[int, int], np.ndarray]]] = [[] for _ in range(n)]
    for ln in lines[1:]:
        parts = ln.split()
        if parts[0] != "su4":
            raise ValueError(f"unknown line kind: {parts[0]}")
        k, lo, hi = int(parts[1]), int(parts[2]), int(parts[3])
        vals = np.array([float(x) for x in parts[4:]])
        u = (vals[0::2] + 1j * vals[1::2]).reshape(4, 4)
        layers[k].append(((lo, hi), u))
    return Circuit(n_working=n, layers=tuple(tuple(lay) for lay in layers))


# 16 two-qubit Paulis in slot order (q0 factor, q1 factor)
_PAULI_1Q = [PAULI_I, PAULI_X, PAULI_Y, PAULI_Z]
PAULI_PAIR_BASIS = np.stack(
    [np.kron(p, q) for p in _PAULI_1Q for q in _PAULI_1Q]
)


def _pauli_transfer_matrix(u: np.ndarray) -> np.ndarray:
    conj = np.einsum("ab,ibc,dc->iad", u, PAULI_PAIR_BASIS, u.conj())
    return np.real(np.einsum("iab,jba->ij", PAULI_PAIR_BASIS, conj)) / 4.0


def average_commutator_deviation(
    n_samples: int, rng: np.random.Generator, preserving: float = 0.0
) -> float:
    """Spectral norm of the sample-averaged commutator between Haar SU(4)
    conjugation and one-sided depolarizing, in the Pauli transfer picture.

    The exact Haar average vanishes; the Monte Carlo residual decays as
    1/sqrt(n_samples).
    """
    depol = np.ones(16)
    for idx in range(16):
        if idx % 4 != 0:  # any Pauli acting on the second slot is damped
            depol[idx] = preserving
    d_mat = np.diag(depol)
    acc = np.zeros((16, 16))
    for _ in range(n_samples):
        ptm = _pauli_transfer_matrix(sample_su4(rng))
        acc += ptm @ d_mat - d_mat @ ptm
    return float(np.linalg.norm(acc / n_samples, ord=2))
