"""Road-graph Markov jump mobility.

Vehicles live on a discrete road graph (cells with 2-D centers, directed
adjacency). Per slot, a vehicle jumps to an adjacent cell according to the
transition row of its current cell, selected by its velocity class. Discrete
cells keep the downstream Bayesian filter exact.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field

import numpy as np

from vecsim.rng import RngStream

ROW_SUM_TOL = 1e-12


class ModelValidationError(ValueError):
    """Raised when a road graph or transition model violates its invariants."""


@dataclass(frozen=True)
class RoadGraph:
    """Road cells with center coordinates (meters) and directed adjacency."""

    centers: dict[int, tuple[float, float]]
    adjacency: dict[int, tuple[int, ...]]

    def validate(self) -> None:
        for cell, neighbors in self.adjacency.items():
            if cell not in self.centers:
                raise ModelValidationError(f"adjacency references unknown cell {cell}")
            if len(neighbors) == 0:
                raise ModelValidationError(f"cell {cell} has no outgoing edge (self-loop required at minimum)")
            for nb in neighbors:
                if nb not in self.centers:
                    raise ModelValidationError(f"cell {cell} has edge to unknown cell {nb}")
        for cell in self.centers:
            if cell not in self.adjacency:
                raise ModelValidationError(f"cell {cell} missing from adjacency")

    @property
    def cells(self) -> list[int]:
        return sorted(self.centers)


@dataclass(frozen=True)
class MarkovJumpModel:
    """Per-(velocity class, cell) transition rows over adjacent cells.

    rows[velocity_class][cell] is a mapping target-cell -> probability.
    Rows must sum to 1 and put zero mass on non-adjacent cells; both are
    enforced at load time so draws never see a bad row.
    """

    rows: dict[str, dict[int, dict[int, float]]]

    def validate(self, graph: RoadGraph) -> None:
        for vclass, per_cell in self.rows.items():
            for cell in graph.cells:
                if cell not in per_cell:
                    raise ModelValidationError(f"velocity class {vclass!r}: no transition row for cell {cell}")
                row = per_cell[cell]
                total = sum(row.values())
                if abs(total - 1.0) > ROW_SUM_TOL:
                    raise ModelValidationError(
                        f"velocity class {vclass!r}, cell {cell}: row sums to {total!r}, expected 1"
                    )
                allowed = set(graph.adjacency[cell])
                for target, p in row.items():
                    if p < 0:
                        raise ModelValidationError(
                            f"velocity class {vclass!r}, cell {cell}: negative probability for target {target}"
                        )
                    if p > 0 and target not in allowed:
                        raise ModelValidationError(
                            f"velocity class {vclass!r}, cell {cell}: positive mass on non-adjacent cell {target}"
                        )

    def row(self, vclass: str, cell: int) -> dict[int, float]:
        return self.rows[vclass][cell]

    def transition_matrix(self, vclass: str, cells: list[int]) -> np.ndarray:
        """Dense row-stochastic matrix P[i, j] = P(cells[j] | cells[i])."""
        index = {c: i for i, c in enumerate(cells)}
        mat = np.zeros((len(cells), len(cells)))
        for cell in cells:
            for target, p in self.rows[vclass][cell].items():
                mat[index[cell], index[target]] = p
        return mat


@dataclass
class MobilityState:
    cell: int
    velocity_class: str = "default"


def row_arrays(model: MarkovJumpModel, vclass: str, cell: int) -> tuple[list[int], list[float]]:
    """Sorted target cells and cumulative probabilities for one row."""
    row = model.row(vclass, cell)
    targets = sorted(row)
    cum, total = [], 0.0
    norm = sum(row.values())
    for t in targets:
        total += row[t] / norm
        cum.append(total)
    cum[-1] = 1.0
    return targets, cum


def draw_from_row(targets: list[int], cum: list[float], rng: RngStream) -> int:
    u = rng.random()
    idx = bisect.bisect_right(cum, u)
    return targets[min(idx, len(targets) - 1)]


def advance(state: MobilityState, model: MarkovJumpModel, rng: RngStream) -> MobilityState:
    """Draw the next cell from the transition row of (cell, velocity_class).

    The velocity class persists; scenario-scheduled changes are applied by the
    caller, never here.
    """
    targets, cum = row_arrays(model, state.velocity_class, state.cell)
    return MobilityState(cell=draw_from_row(targets, cum, rng), velocity_class=state.velocity_class)


def line_graph(n_cells: int, spacing_m: float = 100.0, forward_prob: float = 0.8) -> tuple[RoadGraph, MarkovJumpModel]:
    """Convenience builder: a one-way road of n cells with stay/advance dynamics.

    Used by bundled scenarios and tests; the last cell wraps to the first so
    every cell keeps an outgoing edge.
    """
    centers = {i: (i * spacing_m, 0.0) for i in range(n_cells)}
    adjacency = {i: (i, (i + 1) % n_cells) for i in range(n_cells)}
    rows: dict[int, dict[int, float]] = {}
    for i in range(n_cells):
        nxt = (i + 1) % n_cells
        if nxt == i:
            rows[i] = {i: 1.0}
        else:
            rows[i] = {i: 1.0 - forward_prob, nxt: forward_prob}
    graph = RoadGraph(centers=centers, adjacency=adjacency)
    model = MarkovJumpModel(rows={"default": rows})
    graph.validate()
    model.validate(graph)
    return graph, model
