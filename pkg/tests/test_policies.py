import numpy as np
import pytest

from bcastsim import (Arborescence, ConstructionError, MultiClassState,
                      SchedulingError, VirtualQueueState, assign_class,
                      best_transition, broadcast_capacity,
                      build_randomized_table, count_exactly_at, default_eps,
                      max_weight_decide, multiclass_apply, multiclass_decide,
                      multiclass_edge_weight, randomized_decide,
                      sample_reachable_sequences, static_tree_decide,
                      tree_packing, validate_reachable_sequence)
from bcastsim.graph import Digraph

from conftest import (AB, BC, CA, R_, RA, RAB, RAC, RA_SET, RB, RBC, RC,
                      RC_SET)

BLUE = Arborescence((RA, AB, BC))
RED = Arborescence((RB, RC, CA))


class TestMaxWeightDecide:
    def test_prefers_larger_differential(self, d4):
        state = VirtualQueueState(d4)
        state.counts.update({R_: 4, RA_SET: 1})
        assert max_weight_decide(state, RA) == R_

    def test_idles_on_empty_state(self, d4):
        state = VirtualQueueState(d4)
        assert all(max_weight_decide(state, e) is None for e in range(d4.m))

    def test_zero_weight_idles(self, d4):
        state = VirtualQueueState(d4)
        state.counts.update({R_: 1, RA_SET: 1})
        assert max_weight_decide(state, RA) is None

    def test_negative_weight_idles(self, d4):
        state = VirtualQueueState(d4)
        state.counts.update({R_: 1, RA_SET: 5})
        assert max_weight_decide(state, RA) is None

    def test_tie_breaks_toward_smaller_set(self, d4):
        state = VirtualQueueState(d4)
        # Both {r} and {r,c} can use edge ra with weight 2.
        state.counts.update({R_: 2, RC_SET: 2})
        assert max_weight_decide(state, RA) == R_

    def test_tie_breaks_toward_smaller_mask(self, d4):
        state = VirtualQueueState(d4)
        # {r,a} and {r,c} both offer edge weight 1 on their boundary... use
        # edge rb: candidates {r}, {r,a}, {r,c}, {r,a,c} (those lacking b).
        state.counts.update({RA_SET: 3, RAC: 1, 0b1001: 3})
        assert max_weight_decide(state, RB) == RA_SET

    def test_best_transition_reports_weight(self, d4):
        state = VirtualQueueState(d4)
        state.counts.update({R_: 4, RA_SET: 1})
        assert best_transition(state, RA) == (R_, 3)


class TestAssignClass:
    def test_single_class(self):
        rng = np.random.default_rng(0)
        assert all(assign_class(rng, 1) == 0 for _ in range(50))

    def test_uniform(self):
        rng = np.random.default_rng(1)
        draws = 100_000
        counts = np.bincount([assign_class(rng, 4) for _ in range(draws)],
                             minlength=4)
        sigma = (draws * 0.25 * 0.75) ** 0.5
        assert all(abs(c - draws / 4) < 3 * sigma for c in counts)

    def test_deterministic_per_seed(self):
        a = [assign_class(np.random.default_rng(5), 7) for _ in range(1)]
        b = [assign_class(np.random.default_rng(5), 7) for _ in range(1)]
        assert a == b

    def test_rejects_no_classes(self):
        with pytest.raises(ValueError):
            assign_class(np.random.default_rng(0), 0)


def mc_state(g, rows, arrivals):
    state = MultiClassState(g, len(rows))
    for c, row in enumerate(rows):
        state.highest[c] = list(row)
        state.arrivals[c] = arrivals[c]
    # Rebuild the mirror from the rows it must summarize.
    state.mirror.admitted = sum(arrivals)
    for gset in range(1, 1 << g.n):
        cnt = count_exactly_at(state, gset)
        if cnt:
            if gset == g.full_mask:
                state.mirror.delivered = cnt
            else:
                state.mirror.counts[gset] = cnt
    return state


class TestMultiClassDecide:
    def test_single_class_hand_trace(self, d4):
        # r holds packets 1..2, a holds packet 1, b and c hold nothing.
        state = mc_state(d4, [[2, 1, 0, 0]], [2])
        assert count_exactly_at(state, RA_SET) == 1
        assert count_exactly_at(state, RAB) == 0
        assert multiclass_decide(state, AB) == 0

    def test_caught_up_head_idles(self, d4):
        state = mc_state(d4, [[2, 2, 2, 2]], [2])
        assert multiclass_decide(state, AB) is None

    def test_head_of_line_absent_at_tail(self, d4):
        # Packet 1 of the class sits at {r,b}; edge ab's tail a lacks it.
        state = mc_state(d4, [[1, 0, 1, 0]], [1])
        assert multiclass_decide(state, AB) is None

    def test_positive_weight_required(self, d4):
        # One packet at {r,a}, another at {r,a,b}: moving over ab has weight 0.
        state = mc_state(d4, [[2, 2, 1, 0]], [2])
        assert state.mirror.counts == {RA_SET: 1, RAB: 1}
        assert multiclass_decide(state, AB) is None

    def test_tie_breaks_to_lowest_class(self, d4):
        state = mc_state(d4, [[1, 1, 0, 0], [1, 1, 0, 0]], [1, 1])
        assert multiclass_decide(state, AB) == 0

    def test_final_hop_weight_ignores_delivered(self, d4):
        # Many packets already delivered; the last hop must stay attractive.
        state = mc_state(d4, [[9, 9, 9, 8]], [9])
        assert state.mirror.delivered == 8
        assert multiclass_decide(state, BC) == 0


class TestMultiClassApply:
    def test_increments_head(self, d4):
        state = mc_state(d4, [[5, 4, 0, 0]], [5])
        multiclass_apply(state, 0, AB)
        assert state.highest[0][2] == 1

    def test_node_delivery_total_rises_by_one(self, d4):
        state = mc_state(d4, [[5, 4, 0, 0]], [5])
        before = state.received_count(2)
        multiclass_apply(state, 0, AB)
        assert state.received_count(2) == before + 1

    def test_head_never_passes_source(self, d4):
        state = mc_state(d4, [[2, 0, 0, 0]], [2])
        multiclass_apply(state, 0, RA)
        multiclass_apply(state, 0, RA)
        with pytest.raises(SchedulingError):
            multiclass_apply(state, 0, RA)
        assert state.highest[0][1] == state.arrivals[0]

    def test_absent_packet_rejected(self, d4):
        state = mc_state(d4, [[1, 0, 1, 0]], [1])
        with pytest.raises(SchedulingError):
            multiclass_apply(state, 0, AB)

    def test_mirror_stays_in_step(self, d4):
        state = MultiClassState(d4, 2)
        rng = np.random.default_rng(3)
        for _ in range(400):
            if rng.random() < 0.3:
                state.admit_packet(assign_class(rng, 2))
            eid = int(rng.integers(d4.m))
            c = multiclass_decide(state, eid)
            if c is not None:
                multiclass_apply(state, c, eid)
            for gset in range(1, 1 << d4.n):
                expect = count_exactly_at(state, gset)
                if gset == d4.full_mask:
                    assert state.mirror.delivered == expect
                else:
                    assert state.mirror.counts.get(gset, 0) == expect


class TestStaticTree:
    def test_edge_owned_by_blue_tree(self, d4):
        state = mc_state(d4, [[3, 2, 1, 0], [3, 0, 1, 1]], [3, 3])
        assert static_tree_decide(state, [BLUE, RED], AB) == 0

    def test_ineligible_owner_idles_instead_of_borrowing(self, d4):
        # Class 0 owns ab but its head packet is not at a yet.
        state = mc_state(d4, [[3, 0, 0, 0], [3, 3, 3, 3]], [3, 3])
        assert static_tree_decide(state, [BLUE, RED], AB) is None

    def test_edge_on_no_tree(self):
        g = Digraph(3, [(0, 1), (0, 2), (1, 2)], 0)
        trees = tree_packing(g)
        assert broadcast_capacity(g) == 1
        unused = [e for e in range(g.m) if e not in trees[0].edge_set]
        state = mc_state(g, [[2, 0, 0]], [2])
        for eid in unused:
            assert static_tree_decide(state, trees, eid) is None

    def test_only_forwards_over_own_tree(self, d4):
        state = MultiClassState(d4, 2)
        rng = np.random.default_rng(11)
        trees = [BLUE, RED]
        for _ in range(600):
            if rng.random() < 0.4:
                state.admit_packet(assign_class(rng, 2))
            eid = int(rng.integers(d4.m))
            c = static_tree_decide(state, trees, eid)
            if c is not None:
                assert eid in trees[c].edge_set
                multiclass_apply(state, c, eid)


class TestRandomizedTable:
    def test_tree_only_probabilities(self, d4):
        eps = 0.08
        table = build_randomized_table(d4, [BLUE, RED], [], eps)
        by_edge = {e: dict(table.entries[e]) for e in range(d4.m)}
        assert by_edge[RA][R_] == pytest.approx(1 - 3 * eps / 4)
        assert by_edge[AB][RA_SET] == pytest.approx(1 - 2 * eps / 4)
        assert by_edge[BC][RAB] == pytest.approx(1 - eps / 4)
        assert by_edge[RB][R_] == pytest.approx(1 - 3 * eps / 4)
        assert by_edge[CA][RBC] == pytest.approx(1 - eps / 4)

    def test_per_edge_mass_bound(self, d4):
        eps = 0.1
        rng = np.random.default_rng(2)
        extra = sample_reachable_sequences(d4, 24, rng)
        table = build_randomized_table(d4, [BLUE, RED], extra, eps)
        bound = 1 - d4.m * 0 - eps / (2 * d4.n)
        for entry in table.entries:
            total = sum(p for _, p in entry)
            assert total <= bound + 1e-12
            assert all(p >= 0 for _, p in entry)

    def test_infeasible_eps_rejected(self, d4):
        with pytest.raises(ConstructionError):
            build_randomized_table(d4, [BLUE, RED], [], 2.0)
        with pytest.raises(ConstructionError):
            build_randomized_table(d4, [BLUE, RED], [], 0.0)

    def test_csv_rows(self, d4):
        table = build_randomized_table(d4, [BLUE, RED], [], 0.1)
        rows = list(table.csv_rows())
        assert rows[0] == "edge,bits,probability"
        assert len(rows) == 1 + 6

    def test_default_eps(self):
        assert default_eps(2, 1.9, 4) == pytest.approx(0.05)
        assert default_eps(2, 2.4, 4) == pytest.approx(1 / 16)


class TestRandomizedDecide:
    def test_empty_entry_idles(self, d4):
        table = build_randomized_table(d4, [BLUE], [], 0.1)
        state = VirtualQueueState(d4)
        state.admit(5)
        rng = np.random.default_rng(0)
        # Edge ca appears in no blue-tree pair, so its entry is empty.
        assert table.entries[CA] == ()
        assert randomized_decide(table, state, CA, rng) is None

    def test_empty_queue_idles(self, d4):
        table = build_randomized_table(d4, [BLUE, RED], [], 0.1)
        state = VirtualQueueState(d4)  # nothing admitted
        rng = np.random.default_rng(0)
        assert all(randomized_decide(table, state, e, rng) is None
                   for e in range(d4.m) for _ in range(20))

    def test_sampling_matches_table_mass(self, d4):
        eps = 0.2
        table = build_randomized_table(d4, [BLUE, RED], [], eps)
        state = VirtualQueueState(d4)
        state.admit(10 ** 6)
        rng = np.random.default_rng(42)
        draws = 20000
        hits = sum(randomized_decide(table, state, RA, rng) == R_
                   for _ in range(draws))
        expect = 1 - 3 * eps / 4
        sigma = (draws * expect * (1 - expect)) ** 0.5
        assert abs(hits - draws * expect) < 4 * sigma


class TestSampledSequences:
    def test_valid_and_deterministic(self, d4):
        seqs = sample_reachable_sequences(d4, 16, np.random.default_rng(9))
        again = sample_reachable_sequences(d4, 16, np.random.default_rng(9))
        assert seqs == again
        assert all(validate_reachable_sequence(d4, s) for s in seqs)

    def test_unreachable_graph_rejected(self):
        g = Digraph(3, [(0, 1), (2, 1)], 0)
        with pytest.raises(ValueError):
            sample_reachable_sequences(g, 1, np.random.default_rng(0))


def test_one_class_per_packet_matches_max_weight(d4):
    """With every packet in its own class, the multi-class rule and the
    virtual-queue max-weight rule pick actions of identical weight on every
    mini-slot (not necessarily identical packets)."""
    state = MultiClassState(d4, 1)  # class 0 stays empty
    rng = np.random.default_rng(123)
    for _ in range(2500):
        if rng.random() < 0.3:
            c = state.add_class()
            state.admit_packet(c)
        eid = int(rng.integers(d4.m))
        c = multiclass_decide(state, eid)
        fset = max_weight_decide(state.mirror, eid)
        if c is None:
            assert fset is None
        else:
            i, j = d4.edges[eid]
            chosen = state.packet_set(c, state.highest[c][j] + 1)
            assert fset is not None
            assert state.mirror.weight(chosen, eid) == state.mirror.weight(fset, eid)
            multiclass_apply(state, c, eid)


def test_multiclass_edge_weight_floor(d4):
    state = mc_state(d4, [[2, 2, 1, 0]], [2])
    # Only candidate move over ab has weight 0; floored result is 0.
    assert multiclass_edge_weight(state, AB) == 0
    state2 = mc_state(d4, [[3, 0, 0, 0]], [3])
    assert multiclass_edge_weight(state2, RA) == 3
