"""Trajectory engine against an exact density-matrix oracle, plus metrics."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dqcbench.circuits import (
    CNOT,
    BellPrep,
    ClassicallyControlled,
    MeasureX,
    MeasureZ,
    SingleQubit,
    Swap,
    compile_circuit,
    sample_qv_circuit,
)
from dqcbench.noisemodel import NoiseSpec
from dqcbench.sim import (
    CircuitRun,
    MAX_IDEAL_QUBITS,
    NoiseAttachment,
    NoiseMode,
    aggregate_runs,
    bell_pair_rate,
    compiled_program,
    heavy_set,
    hop,
    ideal_distribution,
    lxe,
    run_noisy,
    run_theory,
    sample_ideal,
    sample_program,
    simulate_circuit,
    theory_program,
)
from dqcbench.topology import MemoryPlacement, TopologyKind, standard_topology

L = TopologyKind.LINE_1D
FC = TopologyKind.FULLY_CONNECTED
G2 = TopologyKind.GRID_2D

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_P1 = [
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
]
_CNOT_T = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
).reshape(2, 2, 2, 2)


def attach(graph, eps, eps_e=0.0, mode=NoiseMode.PER_BASIS_GATE):
    spec = NoiseSpec(per_qubit_error=eps, entanglement_error=eps_e)
    return NoiseAttachment.from_spec(mode, spec, graph)


# ---------------------------------------------------------------------------
# exact oracle: density matrix shaped (2,)*2K, row axis q, column axis K+q


def _rho_u1(rho, u, q, K):
    rho = np.moveaxis(np.tensordot(u, rho, axes=([1], [q])), 0, q)
    return np.moveaxis(np.tensordot(u.conj(), rho, axes=([1], [K + q])), 0, K + q)


def _rho_u2(rho, u22, a, b, K):
    rho = np.moveaxis(
        np.tensordot(u22, rho, axes=([2, 3], [a, b])), [0, 1], [a, b]
    )
    return np.moveaxis(
        np.tensordot(u22.conj(), rho, axes=([2, 3], [K + a, K + b])),
        [0, 1],
        [K + a, K + b],
    )


def _rho_depol1(rho, q, rate, K):
    acc = sum(_rho_u1(rho, p, q, K) for p in _P1[1:])
    return (1.0 - rate) * rho + (rate / 3.0) * acc


def _rho_depol2(rho, a, b, rate, K):
    acc = np.zeros_like(rho)
    for pa in range(4):
        for pb in range(4):
            if pa == pb == 0:
                continue
            term = rho
            if pa:
                term = _rho_u1(term, _P1[pa], a, K)
            if pb:
                term = _rho_u1(term, _P1[pb], b, K)
            acc = acc + term
    return (1.0 - rate) * rho + (rate / 15.0) * acc


def _rho_select(rho, q, outcome, K):
    sel = [slice(None)] * (2 * K)
    sel[q] = outcome
    sel[K + q] = outcome
    out = np.zeros_like(rho)
    out[tuple(sel)] = rho[tuple(sel)]
    return out


def _rho_reset(rho, q, K):
    kept = rho[
        tuple(
            0 if ax == q else 0 if ax == K + q else slice(None)
            for ax in range(2 * K)
        )
    ] + rho[
        tuple(
            1 if ax == q else 1 if ax == K + q else slice(None)
            for ax in range(2 * K)
        )
    ]
    out = np.zeros_like(rho)
    sel = [slice(None)] * (2 * K)
    sel[q] = 0
    sel[K + q] = 0
    out[tuple(sel)] = kept
    return out


def exact_compiled_distribution(pc, eps, eps_e, working):
    """Full instrument semantics: real measurements, recorded bits, and the
    conditional corrections, with the same channel placement and rates as
    the engine's per-basis-gate mode.  Returns the working-qubit marginal
    after readout depolarization (a rate/2 classical flip per bit)."""
    K = pc.n_qubits
    cnot_rate = 1.0 - (1.0 - eps) ** (2 / 6)
    swap_rate = 1.0 - (1.0 - eps) ** (2 / 2)
    bell_rate = bell_pair_rate(eps_e)
    rho0 = np.zeros((2,) * (2 * K), dtype=complex)
    rho0[(0,) * (2 * K)] = 1.0
    branches = [({}, rho0)]
    for gate in pc.gates:
        out = []
        for bits, rho in branches:
            if isinstance(gate, SingleQubit):
                out.append((bits, _rho_u1(rho, gate.unitary, gate.qubit, K)))
            elif isinstance(gate, CNOT):
                rho = _rho_u2(rho, _CNOT_T, gate.control, gate.target, K)
                out.append(
                    (bits, _rho_depol2(rho, gate.control, gate.target, cnot_rate, K))
                )
            elif isinstance(gate, Swap):
                rho = _rho_u2(
                    rho,
                    np.eye(4).reshape(2, 2, 2, 2).transpose(0, 1, 3, 2),
                    gate.a,
                    gate.b,
                    K,
                )
                out.append((bits, _rho_depol2(rho, gate.a, gate.b, swap_rate, K)))
            elif isinstance(gate, BellPrep):
                rho = _rho_reset(rho, gate.memory_a, K)
                rho = _rho_reset(rho, gate.memory_b, K)
                rho = _rho_u1(rho, _H, gate.memory_a, K)
                rho = _rho_u2(rho, _CNOT_T, gate.memory_a, gate.memory_b, K)
                if bell_rate > 0.0:
                    rho = _rho_depol2(
                        rho, gate.memory_a, gate.memory_b, bell_rate, K
                    )
                out.append((bits, rho))
            elif isinstance(gate, (MeasureZ, MeasureX)):
                if isinstance(gate, MeasureX):
                    rho = _rho_u1(rho, _H, gate.qubit, K)
                for outcome in (0, 1):
                    out.append(
                        (
                            {**bits, gate.bit: outcome},
                            _rho_select(rho, gate.qubit, outcome, K),
                        )
                    )
            elif isinstance(gate, ClassicallyControlled):
                if bits[gate.bit]:
                    rho = _rho_u1(rho, gate.unitary, gate.qubit, K)
                # the bit is never read again: merge branches back together
                out.append(({k: v for k, v in bits.items() if k != gate.bit}, rho))
            else:
                raise AssertionError(f"unexpected gate {gate}")
        merged: dict = {}
        for bits, rho in out:
            key = tuple(sorted(bits.items()))
            merged[key] = merged.get(key, 0) + rho
        branches = [(dict(k), v) for k, v in merged.items()]
    assert len(branches) == 1
    rho = branches[0][1]
    diag = np.real(np.diag(rho.reshape(2**K, 2**K)))
    diag = diag / diag.sum()
    t = diag.reshape((2,) * K)
    rest = [ax for ax in range(K) if ax not in working]
    t = t.transpose(list(working) + rest)
    p = t.reshape(2 ** len(working), -1).sum(axis=1)
    # readout depolarization, as a symmetric flip channel on each bit
    p = p.reshape((2,) * len(working))
    for axis in range(len(working)):
        p = (1.0 - eps / 2.0) * p + (eps / 2.0) * np.flip(p, axis=axis)
    return p.reshape(-1)


def exact_program_distribution(prog):
    """Channel semantics for measurement-free programs (theory mode)."""
    K = prog.n_axes
    rho = np.zeros((2,) * (2 * K), dtype=complex)
    rho[(0,) * (2 * K)] = 1.0
    for step in prog.steps:
        kind = step[0]
        if kind == "u1":
            rho = _rho_u1(rho, step[2], step[1], K)
        elif kind == "u2":
            rho = _rho_u2(rho, step[3], step[1], step[2], K)
        elif kind == "n1":
            rho = _rho_depol1(rho, step[1], step[2], K)
        elif kind == "n2":
            rho = _rho_depol2(rho, step[1], step[2], step[3], K)
        else:
            raise AssertionError(f"unexpected step {step}")
    diag = np.real(np.diag(rho.reshape(2**K, 2**K)))
    diag = diag / diag.sum()
    t = diag.reshape((2,) * K)
    out = list(prog.out_axes)
    rest = [ax for ax in range(K) if ax not in out]
    return t.transpose(out + rest).reshape(2 ** len(out), -1).sum(axis=1)


def tv(p, q):
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def histogram(samples, m):
    return np.bincount(samples, minlength=m) / len(samples)


class TestAgainstExactOracle:
    @pytest.mark.parametrize(
        "kind,n,dqc,eps,eps_e",
        [
            (L, 3, False, 0.03, 0.0),
            (FC, 3, False, 0.04, 0.0),
            (L, 2, True, 0.04, 0.2),
            (L, 2, True, 0.0, 0.5),
        ],
    )
    def test_compiled_mode(self, kind, n, dqc, eps, eps_e):
        graph = standard_topology(kind, n, dqc=dqc)
        circuit = sample_qv_circuit(n, np.random.default_rng(21))
        pc = compile_circuit(circuit, graph)
        noise = attach(graph, eps, eps_e)
        exact = exact_compiled_distribution(
            pc, eps, eps_e, list(range(len(graph.working_qubits)))
        )
        samples = run_noisy(pc, noise, 100_000, np.random.default_rng(1))
        assert tv(histogram(samples, 2**n), exact) < 0.02

    def test_theory_mode(self):
        graph = standard_topology(L, 4, dqc=True)
        circuit = sample_qv_circuit(4, np.random.default_rng(22))
        noise = attach(graph, 0.05, 0.3, mode=NoiseMode.PER_SU4)
        prog = theory_program(circuit, graph, noise)
        exact = exact_program_distribution(prog)
        samples = sample_program(prog, 100_000, np.random.default_rng(2))
        assert tv(histogram(samples, 2**4), exact) < 0.02

    @pytest.mark.parametrize(
        "kind,dqc",
        [(L, False), (FC, False), (G2, False), (L, True), (FC, True), (G2, True)],
    )
    def test_noise_free_matches_ideal(self, kind, dqc):
        graph = standard_topology(kind, 4, dqc=dqc)
        circuit = sample_qv_circuit(4, np.random.default_rng(23))
        samples = run_noisy(
            compile_circuit(circuit, graph),
            attach(graph, 0.0),
            10_000,
            np.random.default_rng(3),
        )
        assert tv(histogram(samples, 16), ideal_distribution(circuit)) < 0.02


class TestPrograms:
    def test_mode_mismatch_rejected(self):
        graph = standard_topology(L, 4, dqc=True)
        circuit = sample_qv_circuit(4, np.random.default_rng(0))
        with pytest.raises(ValueError):
            compiled_program(
                compile_circuit(circuit, graph),
                attach(graph, 0.01, mode=NoiseMode.PER_SU4),
            )
        with pytest.raises(ValueError):
            theory_program(circuit, graph, attach(graph, 0.01))

    def test_deterministic_samples(self):
        graph = standard_topology(L, 4, dqc=True)
        circuit = sample_qv_circuit(4, np.random.default_rng(6))
        pc = compile_circuit(circuit, graph)
        noise = attach(graph, 0.02, 0.1)
        a = run_noisy(pc, noise, 3000, np.random.default_rng(9))
        b = run_noisy(pc, noise, 3000, np.random.default_rng(9))
        assert np.array_equal(a, b)
        assert a.min() >= 0 and a.max() < 16

    def test_full_depolarization_is_uniform(self):
        graph = standard_topology(FC, 3)
        circuit = sample_qv_circuit(3, np.random.default_rng(2))
        samples = run_noisy(
            compile_circuit(circuit, graph),
            attach(graph, 1.0),
            40_000,
            np.random.default_rng(4),
        )
        assert tv(histogram(samples, 8), np.full(8, 1 / 8)) < 0.02

    def test_unfair_measurement_detected(self):
        # measuring a memory left in |0> has branch weight 1, not 1/2
        graph = standard_topology(L, 2, dqc=True)
        circuit = sample_qv_circuit(2, np.random.default_rng(0))
        pc = compile_circuit(circuit, graph)
        broken = tuple(
            g for g in pc.gates if not isinstance(g, (BellPrep, CNOT))
        )
        prog = compiled_program(
            type(pc)(
                gates=broken,
                n_qubits=pc.n_qubits,
                n_bits=pc.n_bits,
                entanglement_pairs_consumed=0,
            ),
            attach(graph, 0.0),
        )
        with pytest.raises(RuntimeError):
            sample_program(prog, 10, np.random.default_rng(0))

    def test_bell_rate_frozen_form(self):
        assert bell_pair_rate(0.0) == 0.0
        assert bell_pair_rate(0.01) == pytest.approx(
            (4 / 3) * (1 - (1 - 0.005) ** (2 / 9))
        )
        assert bell_pair_rate(0.01) == pytest.approx(4 / 27 * 0.01, rel=0.02)
        assert 0.0 < bell_pair_rate(1.0) <= 1.0
        with pytest.raises(ValueError):
            bell_pair_rate(-0.1)

    def test_attachment_validation(self):
        graph = standard_topology(L, 4)
        with pytest.raises(ValueError):
            NoiseAttachment(
                mode=NoiseMode.PER_BASIS_GATE,
                qubit_rates=(1.5,) * graph.n_qubits,
                bell_rate=0.0,
                working_qubits=graph.working_qubits,
            )
        # the calibration ratio rescales predictions, not the device
        a = NoiseAttachment.from_spec(
            NoiseMode.PER_BASIS_GATE,
            NoiseSpec(per_qubit_error=0.01, calibration_ratio=0.8),
            graph,
        )
        b = NoiseAttachment.from_spec(
            NoiseMode.PER_BASIS_GATE, NoiseSpec(per_qubit_error=0.01), graph
        )
        assert a.qubit_rates == b.qubit_rates


class TestIdealDistribution:
    def test_normalized(self):
        q = ideal_distribution(sample_qv_circuit(5, np.random.default_rng(1)))
        assert q.shape == (32,)
        assert q.sum() == pytest.approx(1.0, abs=1e-10)
        assert q.min() >= 0.0

    def test_size_bound(self):
        big = sample_qv_circuit(MAX_IDEAL_QUBITS + 1, np.random.default_rng(0))
        with pytest.raises(ValueError):
            ideal_distribution(big)

    def test_sample_ideal_range(self):
        q = ideal_distribution(sample_qv_circuit(3, np.random.default_rng(2)))
        s = sample_ideal(q, 5000, np.random.default_rng(0))
        assert s.min() >= 0 and s.max() < 8


class TestHeavySet:
    def test_against_sort_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            q = rng.dirichlet(np.ones(16))
            got = heavy_set(q)
            want = set(np.argsort(-q, kind="stable")[:8])
            assert len(got) == 8
            # identical unless ties straddle the median
            assert sum(q[list(got)]) == pytest.approx(sum(q[list(want)]))

    def test_median_tie_break(self):
        q = np.full(8, 1 / 8)
        assert heavy_set(q) == frozenset({0, 1, 2, 3})

    def test_partial_tie(self):
        q = np.array([0.4, 0.2, 0.2, 0.2])
        assert heavy_set(q) == frozenset({0, 1})


class TestMetrics:
    def test_hop_micro(self):
        heavy = frozenset({0, 1})
        assert hop(np.array([0, 1, 2, 3, 0]), heavy) == pytest.approx(0.6)

    def test_lxe_micro(self):
        q = np.array([0.5, 0.3, 0.1, 0.1])
        samples = np.array([0, 0, 1, 3])
        assert lxe(samples, q) == pytest.approx(4 * 0.35 - 1)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            hop(np.array([], dtype=int), frozenset({0}))
        with pytest.raises(ValueError):
            lxe(np.array([], dtype=int), np.array([1.0]))

    @given(seed=st.integers(0, 2**32 - 1))
    @settings(max_examples=20, deadline=None)
    def test_bounds_property(self, seed):
        rng = np.random.default_rng(seed)
        q = rng.dirichlet(np.ones(16))
        s = sample_ideal(q, 200, rng)
        assert 0.0 <= hop(s, heavy_set(q)) <= 1.0
        assert lxe(s, q) >= -1.0

    def test_aggregate_runs_math(self):
        runs = [
            CircuitRun(hop=0.8, lxe=0.5, lxe_ideal=1.0, shots=100),
            CircuitRun(hop=0.6, lxe=0.3, lxe_ideal=0.8, shots=100),
        ]
        m = aggregate_runs(runs, 4, seed=7)
        assert m.hop == pytest.approx(0.7)
        assert m.hop_se == pytest.approx(np.std([0.8, 0.6], ddof=1) / np.sqrt(2))
        assert m.lxe == pytest.approx(0.4)
        assert m.lxe_ideal == pytest.approx(0.9)
        # ratio of means, not mean of ratios
        from dqcbench.analytic import agf_from_lxe

        assert m.agf_via_lxe == pytest.approx(agf_from_lxe(0.4, 0.9, 4))
        assert m.heavy_set_size == 8
        assert m.n_circuits == 2
        assert m.seed == 7

    def test_aggregate_empty_rejected(self):
        with pytest.raises(ValueError):
            aggregate_runs([], 4)


class TestCorrespondenceOnSimulation:
    def test_hop_tracks_lxe_line(self):
        # measured ensemble must land on the HOP-LXE line within 0.01
        graph = standard_topology(L, 6)
        noise = attach(graph, 0.003)
        runs = []
        for k in range(30):
            circuit = sample_qv_circuit(6, np.random.default_rng((31, k)))
            runs.append(
                simulate_circuit(circuit, graph, noise, 2000, np.random.default_rng(k))
            )
        m = aggregate_runs(runs, 6)
        predicted_hop = 0.5 + (np.log(2) / 2) * m.lxe / m.lxe_ideal
        assert abs(m.hop - predicted_hop) < 0.01

    def test_simulate_circuit_dispatch(self):
        graph = standard_topology(L, 4, dqc=True)
        circuit = sample_qv_circuit(4, np.random.default_rng(3))
        a = simulate_circuit(
            circuit, graph, attach(graph, 0.01), 500, np.random.default_rng(0)
        )
        b = simulate_circuit(
            circuit,
            graph,
            attach(graph, 0.01, mode=NoiseMode.PER_SU4),
            500,
            np.random.default_rng(0),
        )
        for r in (a, b):
            assert 0.0 <= r.hop <= 1.0
            assert r.lxe_ideal > 0.0
            assert r.shots == 500
