"""Figure-of-merit identities, Markov averaging, placement optimization."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dqcbench.analytic import (
    IDEAL_HOP_LIMIT,
    agf_from_lxe,
    approx_agf,
    brute_force_permutation_average,
    calibration_fit,
    crossover_entanglement_rate,
    global_agf,
    global_hop,
    global_lxe,
    hop_from_agf,
    hop_from_agf_large_n,
    hop_from_lxe,
    layers_exponent,
    lxe_from_agf,
    lxe_from_agf_large_n,
    optimize_memory_placement,
    permutation_averaged_markov,
    predicted_agf,
    preserving_from_agf,
    product_markov,
)
from dqcbench.noisemodel import NoiseSpec
from dqcbench.topology import TopologyKind, standard_topology

preserving = st.floats(min_value=0.0, max_value=1.0)
sizes = st.integers(min_value=1, max_value=10)


class TestGlobalForms:
    def test_identity_channel(self):
        assert global_agf(1.0, 5) == 1.0

    def test_complete_depolarization(self):
        assert global_agf(0.0, 3) == 1 / 8
        assert global_hop(0.0, 0.85) == 0.5
        assert global_lxe(0.0, 1.0) == 0.0

    def test_direct_substitution(self):
        assert global_agf(0.5, 2) == 0.625
        assert global_hop(0.5, 0.85) == pytest.approx(0.675)

    @given(p=preserving, n=sizes)
    def test_preserving_round_trip(self, p, n):
        assert preserving_from_agf(global_agf(p, n), n) == pytest.approx(
            p, abs=1e-12
        )


class TestCorrespondence:
    @settings(max_examples=1000, deadline=None)
    @given(
        n=st.integers(min_value=1, max_value=10),
        p=st.lists(preserving, min_size=1, max_size=10),
        lxe_ideal=st.floats(min_value=0.5, max_value=1.5),
        data=st.data(),
    )
    def test_round_trip_and_monotone(self, n, p, lxe_ideal, data):
        p = (p * n)[:n]
        agf = product_markov(p).agf
        chi = lxe_from_agf(agf, lxe_ideal, n)
        assert agf_from_lxe(chi, lxe_ideal, n) == pytest.approx(agf, abs=1e-12)
        # pairwise monotone across a second random configuration
        q = data.draw(st.lists(preserving, min_size=n, max_size=n))
        agf2 = product_markov(q).agf
        chi2 = lxe_from_agf(agf2, lxe_ideal, n)
        hop1 = hop_from_agf(agf, 0.85, n)
        hop2 = hop_from_agf(agf2, 0.85, n)
        assert (agf >= agf2) == (chi >= chi2) or agf == pytest.approx(agf2)
        assert (agf >= agf2) == (hop1 >= hop2) or agf == pytest.approx(agf2)

    def test_ideal_lxe_gives_asymptotic_hop(self):
        for chi_ideal in (0.7, 1.0, 1.3):
            assert hop_from_lxe(chi_ideal, chi_ideal) == pytest.approx(
                IDEAL_HOP_LIMIT, abs=1e-12
            )

    def test_full_fidelity_fixed_points(self):
        assert hop_from_agf(1.0, 0.85, 4) == pytest.approx(0.85)
        assert lxe_from_agf(1.0, 0.97, 4) == pytest.approx(0.97)

    def test_completely_depolarized(self):
        n = 5
        assert hop_from_agf(1 / 2**n, 0.85, n) == pytest.approx(0.5)
        assert lxe_from_agf(1 / 2**n, 1.0, n) == pytest.approx(0.0)

    def test_qv_threshold_in_lxe_units(self):
        # H̄ = 2/3 corresponds to χ̄/χ̄_ideal = 1/(3 ln 2)
        ratio = 1.0 / (3.0 * np.log(2.0))
        assert hop_from_lxe(ratio, 1.0) == pytest.approx(2 / 3, abs=1e-12)

    def test_large_n_shortcuts(self):
        # at N=10 the finite-size corrections are ~2^-N
        agf = 0.8
        assert hop_from_agf_large_n(agf) == pytest.approx(
            hop_from_agf(agf, IDEAL_HOP_LIMIT, 10), abs=2e-3
        )
        assert lxe_from_agf_large_n(agf, 1.0) == pytest.approx(
            lxe_from_agf(agf, 1.0, 10), abs=2e-3
        )

    def test_zero_ideal_lxe_rejected(self):
        with pytest.raises(ValueError):
            agf_from_lxe(0.5, 0.0, 4)
        with pytest.raises(ValueError):
            hop_from_lxe(0.5, 0.0)


class TestMarkov:
    def test_single_qubit_identity(self):
        m = permutation_averaged_markov((1.0,), 1).matrix()
        assert np.allclose(m, np.eye(2))

    @settings(max_examples=50, deadline=None)
    @given(p=st.lists(preserving, min_size=1, max_size=2))
    def test_brute_force_matches_analytic(self, p):
        n = len(p)
        oracle = brute_force_permutation_average(p)
        analytic = permutation_averaged_markov(p, n).matrix()
        assert np.allclose(oracle, analytic, atol=1e-12)

    @given(p=st.lists(preserving, min_size=1, max_size=4))
    def test_doubly_stochastic(self, p):
        m = permutation_averaged_markov(p, len(p)).matrix()
        assert np.allclose(m.sum(axis=0), 1.0, atol=1e-12)
        assert np.allclose(m.sum(axis=1), 1.0, atol=1e-12)
        assert np.all(m >= -1e-15)

    def test_product_matrix_diagonal(self):
        p = (0.9, 0.8, 0.7)
        m = product_markov(p).matrix()
        want = np.prod([(1 + x) / 2 for x in p])
        assert m[0, 0] == pytest.approx(want)


class TestPrediction:
    def test_zero_noise_is_perfect(self):
        g = standard_topology(TopologyKind.LINE_1D, 8, dqc=True)
        assert predicted_agf(g, NoiseSpec(0.0)).agf == pytest.approx(1.0)

    def test_fully_connected_closed_form(self):
        n, eps = 6, 0.002
        g = standard_topology(TopologyKind.FULLY_CONNECTED, n)
        got = predicted_agf(g, NoiseSpec(eps)).agf
        want = ((1 + (1 - eps) ** layers_exponent(n)) / 2) ** n
        assert got == pytest.approx(want, abs=1e-14)

    def test_distributed_line_beats_single_at_low_rate(self):
        noise = NoiseSpec(0.001)
        single = standard_topology(TopologyKind.LINE_1D, 8)
        dqc = standard_topology(TopologyKind.LINE_1D, 8, dqc=True)
        assert predicted_agf(dqc, noise).agf > predicted_agf(single, noise).agf

    def test_approx_agf_values(self):
        assert approx_agf(40, 8, 0.0) == 1.0
        n, eps = 6, 0.001
        assert approx_agf(n, n, eps) == pytest.approx(np.exp(-n * n * eps / 2))

    def test_crossover_bisection_brackets(self):
        gs = standard_topology(TopologyKind.LINE_1D, 8)
        gd = standard_topology(TopologyKind.LINE_1D, 8, dqc=True)
        x = crossover_entanglement_rate(gs, gd, 0.1625e-2)
        noise_lo = NoiseSpec(0.1625e-2, entanglement_error=x * 0.9)
        noise_hi = NoiseSpec(0.1625e-2, entanglement_error=x * 1.1)
        assert predicted_agf(gd, noise_lo).agf > predicted_agf(gs, noise_lo).agf
        assert predicted_agf(gd, noise_hi).agf < predicted_agf(gs, noise_hi).agf


class TestPlacement:
    def test_line_prefers_middle(self):
        local = standard_topology(TopologyKind.LINE_1D, 4)
        placement, cost = optimize_memory_placement(local, local)
        assert placement.attachments == ((1,), (1,))
        # the edge placement scores strictly worse
        from dqcbench.analytic import combine_with_memories
        from dqcbench.noisemodel import allocation_matrix, characteristic_cost

        edge = characteristic_cost(
            allocation_matrix(combine_with_memories(local, local, (0,), (0,)))
        )
        assert cost < edge

    def test_fully_connected_ties_to_lowest(self):
        local = standard_topology(TopologyKind.FULLY_CONNECTED, 4)
        placement, _ = optimize_memory_placement(local, local)
        assert placement.attachments == ((0,), (0,))

    def test_grid_2x2_deterministic(self):
        local = standard_topology(TopologyKind.GRID_2D, 4)
        first = optimize_memory_placement(local, local)
        second = optimize_memory_placement(local, local)
        assert first == second
        # brute force re-scoring confirms minimality
        from dqcbench.analytic import combine_with_memories
        from dqcbench.noisemodel import allocation_matrix, characteristic_cost

        costs = {
            (a, b): characteristic_cost(
                allocation_matrix(combine_with_memories(local, local, (a,), (b,)))
            )
            for a in range(4)
            for b in range(4)
        }
        assert len(costs) == 16
        assert first[1] == min(costs.values())

    def test_rejects_graphs_with_memories(self):
        dqc = standard_topology(TopologyKind.LINE_1D, 4, dqc=True)
        local = standard_topology(TopologyKind.LINE_1D, 4)
        with pytest.raises(ValueError):
            optimize_memory_placement(dqc, local)


class TestCalibrationFit:
    def test_exact_line(self):
        pts = [(0.001, 0.0009), (0.002, 0.0018), (0.004, 0.0036)]
        assert calibration_fit(pts) == pytest.approx(0.9)

    def test_single_point(self):
        assert calibration_fit([(0.002, 0.0017)]) == pytest.approx(0.85)

    def test_degenerate_rejected(self):
        with pytest.raises(ValueError):
            calibration_fit([(0.0, 0.0)])
        with pytest.raises(ValueError):
            calibration_fit([])

    @given(
        slope=st.floats(min_value=0.5, max_value=1.5),
        xs=st.lists(
            st.floats(min_value=1e-4, max_value=1e-2), min_size=2, max_size=8
        ),
    )
    def test_recovers_slope(self, slope, xs):
        pts = [(x, slope * x) for x in xs]
        assert calibration_fit(pts) == pytest.approx(slope, rel=1e-9)
