"""Road graph validation, transition-row sampling, and the line builder."""

from __future__ import annotations

import pytest

from vecsim.mobility import (
    MarkovJumpModel,
    MobilityState,
    ModelValidationError,
    RoadGraph,
    advance,
    draw_from_row,
    line_graph,
    row_arrays,
)
from vecsim.rng import RngStream


class _FixedRng:
    """Scripted rng.random() values, for boundary checks on the sampler."""

    def __init__(self, values):
        self.values = list(values)

    def random(self):
        return self.values.pop(0)


def _two_cell_graph() -> RoadGraph:
    return RoadGraph(
        centers={0: (0.0, 0.0), 1: (100.0, 0.0)},
        adjacency={0: (0, 1), 1: (1,)},
    )


def test_road_graph_rejects_unknown_and_missing_cells():
    with pytest.raises(ModelValidationError, match="unknown cell 9"):
        RoadGraph(centers={0: (0.0, 0.0)}, adjacency={9: (0,)}).validate()
    with pytest.raises(ModelValidationError, match="edge to unknown cell 7"):
        RoadGraph(centers={0: (0.0, 0.0)}, adjacency={0: (7,)}).validate()
    with pytest.raises(ModelValidationError, match="missing from adjacency"):
        RoadGraph(centers={0: (0.0, 0.0), 1: (1.0, 0.0)}, adjacency={0: (0,)}).validate()


def test_road_graph_requires_an_outgoing_edge_everywhere():
    with pytest.raises(ModelValidationError, match="no outgoing edge"):
        RoadGraph(centers={0: (0.0, 0.0)}, adjacency={0: ()}).validate()
    # a pure self-loop is the minimal legal adjacency
    RoadGraph(centers={0: (0.0, 0.0)}, adjacency={0: (0,)}).validate()


def test_model_rejects_bad_rows_with_cell_and_class_named():
    graph = _two_cell_graph()
    short = MarkovJumpModel(rows={"default": {0: {0: 0.5, 1: 0.4}, 1: {1: 1.0}}})
    with pytest.raises(ModelValidationError) as err:
        short.validate(graph)
    assert "cell 0" in str(err.value)
    assert "'default'" in str(err.value)

    missing = MarkovJumpModel(rows={"default": {0: {0: 1.0}}})
    with pytest.raises(ModelValidationError, match="no transition row for cell 1"):
        missing.validate(graph)

    negative = MarkovJumpModel(rows={"default": {0: {0: 1.5, 1: -0.5}, 1: {1: 1.0}}})
    with pytest.raises(ModelValidationError, match="negative probability"):
        negative.validate(graph)

    offroad = MarkovJumpModel(rows={"default": {0: {0: 1.0}, 1: {0: 1.0}}})
    with pytest.raises(ModelValidationError, match="non-adjacent cell 0"):
        offroad.validate(graph)


def test_transition_matrix_matches_rows():
    _, model = line_graph(3, forward_prob=0.7)
    mat = model.transition_matrix("default", [0, 1, 2])
    assert mat[0, 0] == pytest.approx(0.3)
    assert mat[0, 1] == pytest.approx(0.7)
    assert mat[2, 0] == pytest.approx(0.7)   # wrap-around
    assert mat.sum(axis=1) == pytest.approx([1.0, 1.0, 1.0])


def test_row_arrays_sorted_targets_and_exact_final_cumulative():
    _, model = line_graph(4, forward_prob=0.8)
    targets, cum = row_arrays(model, "default", 1)
    assert targets == [1, 2]
    assert cum[0] == pytest.approx(0.2)
    assert cum[-1] == 1.0


def test_draw_from_row_boundaries():
    targets, cum = [0, 1], [0.2, 1.0]
    # mass for target 0 is the half-open interval [0, 0.2)
    assert draw_from_row(targets, cum, _FixedRng([0.0])) == 0
    assert draw_from_row(targets, cum, _FixedRng([0.19999])) == 0
    assert draw_from_row(targets, cum, _FixedRng([0.2])) == 1
    assert draw_from_row(targets, cum, _FixedRng([0.99999])) == 1


def test_advance_equals_draw_from_the_same_stream():
    _, model = line_graph(6, forward_prob=0.6)
    a = RngStream(11, "walk")
    b = RngStream(11, "walk")
    state = MobilityState(cell=2)
    for _ in range(200):
        state2 = advance(state, model, a)
        targets, cum = row_arrays(model, "default", state.cell)
        assert state2.cell == draw_from_row(targets, cum, b)
        state = state2


def test_advance_preserves_velocity_class_and_uses_its_row():
    graph = _two_cell_graph()
    model = MarkovJumpModel(
        rows={
            "default": {0: {0: 1.0}, 1: {1: 1.0}},
            "fast": {0: {1: 1.0}, 1: {1: 1.0}},
        }
    )
    model.validate(graph)
    rng = RngStream(0, "v")
    stay = advance(MobilityState(cell=0, velocity_class="default"), model, rng)
    assert stay.cell == 0 and stay.velocity_class == "default"
    go = advance(MobilityState(cell=0, velocity_class="fast"), model, rng)
    assert go.cell == 1 and go.velocity_class == "fast"


def test_long_run_transition_frequency_matches_the_row():
    _, model = line_graph(5, forward_prob=0.8)
    rng = RngStream(1234, "mob")
    n = 20000
    moved = 0
    for _ in range(n):
        if advance(MobilityState(cell=2), model, rng).cell == 3:
            moved += 1
    assert abs(moved / n - 0.8) < 0.01


def test_line_graph_shapes():
    graph, model = line_graph(4, spacing_m=50.0, forward_prob=0.8)
    assert graph.cells == [0, 1, 2, 3]
    assert graph.centers[3] == (150.0, 0.0)
    assert graph.adjacency[3] == (3, 0)
    graph.validate()
    model.validate(graph)

    single, single_model = line_graph(1)
    assert single.adjacency[0] == (0, 0)
    assert single_model.row("default", 0) == {0: 1.0}
