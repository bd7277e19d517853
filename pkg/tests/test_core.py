"""Core model tests: bits, inputs, graphs, views, execution, cost."""

import pytest
from hypothesis import given, strategies as st

from nofmux import (
    BOARD, BudgetError, CommPattern, DomainError, InputMatrix, LegalityError,
    Model, ObliviousnessError, Outgoing, ProtocolSpec, RestrictionGraph,
    TruthTable, View, bits_to_int, board_outputs, check_replay_determinism,
    check_symmetry, compute_view, domain_size, enumerate_inputs, int_to_bits,
    measure_cost, run_protocol, xor_bits,
)
from nofmux.core import MessageRecord


# ---------------------------------------------------------------------------
# bits
# ---------------------------------------------------------------------------

@given(st.integers(min_value=0, max_value=2 ** 20 - 1),
       st.integers(min_value=20, max_value=32))
def test_bits_roundtrip(value, width):
    assert bits_to_int(int_to_bits(value, width)) == value


def test_int_to_bits_rejects_overflow():
    with pytest.raises(DomainError):
        int_to_bits(4, 2)


@given(st.integers(min_value=0, max_value=255),
       st.integers(min_value=0, max_value=255))
def test_xor_bits_matches_integer_xor(a, b):
    assert bits_to_int(xor_bits(int_to_bits(a, 8), int_to_bits(b, 8))) == a ^ b


def test_xor_bits_rejects_unequal_lengths():
    with pytest.raises(DomainError):
        xor_bits("01", "011")


# ---------------------------------------------------------------------------
# input matrices
# ---------------------------------------------------------------------------

@given(st.integers(min_value=2, max_value=4),
       st.integers(min_value=1, max_value=3),
       st.integers(min_value=1, max_value=3),
       st.data())
def test_input_matrix_index_roundtrip(k, n, ell, data):
    idx = data.draw(st.integers(min_value=0,
                                max_value=domain_size(k, n, ell) - 1))
    x = InputMatrix.from_index(idx, k, n, ell)
    assert x.index == idx
    assert InputMatrix.from_index(x.index, k, n, ell) == x


def test_input_matrix_entry_addressing():
    x = InputMatrix(2, 3, 2, (("00", "01", "10"), ("11", "00", "01")))
    assert x.x(1, 2) == "01"
    assert x.x(2, 1) == "11"
    with pytest.raises(DomainError):
        x.x(3, 1)
    with pytest.raises(DomainError):
        x.x(0, 1)


def test_input_matrix_single():
    x = InputMatrix.single("01", "10", "11")
    assert (x.ell, x.k, x.n) == (1, 3, 2)
    assert x.x(1, 3) == "11"


def test_enumerate_inputs_is_exhaustive_and_ordered():
    seen = [x.index for x in enumerate_inputs(2, 1, 2)]
    assert seen == list(range(16))


# ---------------------------------------------------------------------------
# graphs and views
# ---------------------------------------------------------------------------

def test_restriction_graph_neighbors():
    g = RestrictionGraph(4, frozenset({(1, 2), (1, 3), (4, 1)}))
    assert g.neighbors(1) == {2, 3}
    assert g.non_neighbors(1) == {1, 4}
    assert g.neighbors(2) == frozenset()


def test_complete_graph_misses_only_self():
    g = RestrictionGraph.complete(4)
    for i in range(1, 5):
        assert g.non_neighbors(i) == {i}


def test_myopic_graph_visibility():
    g = RestrictionGraph.myopic((3, 1, 2, 4))
    # position 2 is party 1: sees position 1 (party 3) and position 3 (party 2)
    assert g.neighbors(1) == {3, 2}
    # the last position sees all predecessors
    assert g.neighbors(4) == {3, 1, 2}


def test_graph_rejects_self_loops_and_range():
    with pytest.raises(DomainError):
        RestrictionGraph(3, frozenset({(2, 2)}))
    with pytest.raises(DomainError):
        RestrictionGraph(3, frozenset({(1, 4)}))


def test_graph_json_roundtrip():
    g = RestrictionGraph(9, frozenset({(1, 2), (1, 5), (7, 8)}))
    assert RestrictionGraph.from_json(g.to_json()) == g


def test_view_denies_invisible_parties():
    v = View(2, {1: "01", 3: "10"})
    assert v[1] == "01"
    with pytest.raises(LegalityError):
        v[2]
    with pytest.raises(LegalityError):
        View(1, {1: "00"})


def test_compute_view_follows_graph():
    g = RestrictionGraph(3, frozenset({(1, 2), (1, 3)}))
    x = InputMatrix.single("0", "1", "0")
    v = compute_view(g, x, 1, 1)
    assert v[2] == "1" and v[3] == "0"
    assert compute_view(g, x, 1, 2).parties() == frozenset()


# ---------------------------------------------------------------------------
# truth tables
# ---------------------------------------------------------------------------

def test_truth_table_eq():
    f = TruthTable.eq(3, 1)
    assert f.evaluate(("0", "0", "0")) == 1
    assert f.evaluate(("0", "1", "0")) == 0
    assert sum(f.values) == 2  # all-zeros and all-ones


def test_truth_table_json_roundtrip(tmp_path):
    f = TruthTable.eq(2, 2)
    path = tmp_path / "f.json"
    f.save(str(path))
    assert TruthTable.load(str(path)) == f


def test_truth_table_totality_enforced():
    with pytest.raises(DomainError):
        TruthTable(2, 1, (0, 1, 1))


def test_check_symmetry():
    assert check_symmetry(TruthTable.eq(3, 1))
    assert check_symmetry(TruthTable.constant(3, 2, 1))
    # f = x_1 (ignore the rest) is not symmetric
    f = TruthTable.from_function(2, 1, lambda a: int(a[0]))
    assert not check_symmetry(f)
    assert check_symmetry(f, [1, 2])
    assert not check_symmetry(f, [2, 1])


# ---------------------------------------------------------------------------
# execution
# ---------------------------------------------------------------------------

def _xor_board_protocol(k=3, n=1):
    """Round 1: P_1 writes x_2 xor x_3; round 2: P_2 outputs that bit."""
    def next_message(p, t, views, inbox, board):
        if t == 1 and p == 1:
            return [Outgoing(BOARD, xor_bits(views[1][2], views[1][3]))]
        if t == 2 and p == 2:
            return [Outgoing(BOARD, board[0].payload, tag="out:1")]
        return []

    return ProtocolSpec(
        name="xor-demo", model=Model.NOF_BOARD, k=k, n=n, ell=1, rounds=2,
        next_message=next_message, output_party=1,
        output_rule=lambda views, inbox, board: board_outputs(board, 1),
        pattern=CommPattern({(1, 1, BOARD): n, (2, 2, BOARD): n}, 2))


def test_run_protocol_transcript_and_outputs():
    spec = _xor_board_protocol()
    t = run_protocol(spec, InputMatrix.single("0", "1", "0"))
    assert t.outputs == {1: 1}
    assert t.total_bits == 2
    assert t.payload_bits() == 1  # the out-tagged write is not payload
    assert [r.round for r in t.records] == [1, 2]


def test_run_protocol_checks_input_shape():
    with pytest.raises(DomainError):
        run_protocol(_xor_board_protocol(), InputMatrix.single("0", "1"))


def test_round_t_messages_cannot_see_round_t():
    """The board passed to a round-t rule holds only earlier rounds."""
    seen = {}

    def next_message(p, t, views, inbox, board):
        if t == 1:
            seen.setdefault(1, len(board))
            return [Outgoing(BOARD, "0")] if p == 1 else []
        seen.setdefault(2, len(board))
        return []

    spec = ProtocolSpec(
        name="probe", model=Model.NOF_BOARD, k=2, n=1, ell=1, rounds=2,
        next_message=next_message, output_party=1,
        output_rule=lambda views, inbox, board: {1: 0})
    run_protocol(spec, InputMatrix.single("0", "1"))
    assert seen == {1: 0, 2: 1}


def test_board_model_rejects_point_to_point():
    def next_message(p, t, views, inbox, board):
        return [Outgoing(2, "0")] if p == 1 else []

    spec = ProtocolSpec(
        name="bad", model=Model.NOF_BOARD, k=2, n=1, ell=1, rounds=1,
        next_message=next_message, output_party=1,
        output_rule=lambda views, inbox, board: {1: 0})
    with pytest.raises(LegalityError):
        run_protocol(spec, InputMatrix.single("0", "1"))


def test_myopic_model_rejects_off_chain_messages():
    def next_message(p, t, views, inbox, board):
        if t == 1 and p == 3:  # party 3 is not position 1
            return [Outgoing(1, "0")]
        return []

    spec = ProtocolSpec(
        name="bad-chain", model=Model.MYOPIC, k=3, n=1, ell=1, rounds=2,
        next_message=next_message, output_party=2, chain=(1, 3, 2),
        output_rule=lambda views, inbox, board: {1: 0})
    with pytest.raises(LegalityError):
        run_protocol(spec, InputMatrix.single("0", "0", "0"))


def test_replay_determinism():
    spec = _xor_board_protocol()
    t = check_replay_determinism(spec, InputMatrix.single("1", "0", "1"))
    assert t.outputs == {1: 1}


def test_pattern_violation_detected():
    """A protocol whose length depends on the input fails its declared LEN."""
    def next_message(p, t, views, inbox, board):
        if t == 1 and p == 1:
            return [Outgoing(BOARD, "1" if views[1][2] == "1" else "11")]
        return []

    spec = ProtocolSpec(
        name="lying", model=Model.NOF_BOARD, k=2, n=1, ell=1, rounds=1,
        next_message=next_message, output_party=1,
        output_rule=lambda views, inbox, board: {1: 0},
        pattern=CommPattern({(1, 1, BOARD): 1}, 1))
    with pytest.raises(ObliviousnessError):
        measure_cost(spec)


def test_measure_cost_worst_case_and_channels():
    report = measure_cost(_xor_board_protocol())
    assert report.worst_case_bits == 2
    assert report.domain_size == 8
    assert report.channel_matrix[(1, BOARD)] == 1
    assert report.per_round == {1: 1, 2: 1}


def test_measure_cost_budget_guard():
    with pytest.raises(BudgetError):
        measure_cost(_xor_board_protocol(), budget=4)


def test_pattern_permuted_relabels_endpoints():
    pat = CommPattern({(1, 3, 1): 2, (2, 1, BOARD): 1}, 2)

    class Swap:
        def __call__(self, i):
            return {1: 2, 2: 1, 3: 3}[i]

    out = pat.permuted(Swap())
    assert out.lengths == {(1, 3, 2): 2, (2, 2, BOARD): 1}


def test_board_outputs_requires_all_instances():
    records = (MessageRecord(2, 1, BOARD, "1", tag="out:1"),)
    assert board_outputs(records, 1) == {1: 1}
    with pytest.raises(DomainError):
        board_outputs(records, 2)
