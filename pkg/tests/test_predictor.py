"""Bayesian association filter against a hand-rolled forward-algorithm oracle."""

from __future__ import annotations

import ast
from pathlib import Path

import numpy as np
import pytest

from vecsim.predictor import (
    AssociationVector,
    ObservationModel,
    PosteriorBelief,
    derive_observation_model,
    predict_association,
    uniform_belief,
    update_belief,
)


def _forward_step(b, P, L, bits):
    """Textbook forward recursion, written with explicit loops on purpose."""
    n = len(b)
    prior = [sum(b[i] * P[i][j] for i in range(n)) for j in range(n)]
    like = []
    for j in range(n):
        l = 1.0
        for a, bit in enumerate(bits):
            l *= L[j][a] if bit else (1.0 - L[j][a])
        like.append(l)
    unnorm = [prior[j] * like[j] for j in range(n)]
    z = sum(unnorm)
    if z <= 0.0:
        zp = sum(prior)
        return [p / zp for p in prior], True
    return [u / z for u in unnorm], False


def _random_instance(rng, n_cells, n_aps):
    P = rng.random((n_cells, n_cells))
    P /= P.sum(axis=1, keepdims=True)
    L = rng.random((n_cells, n_aps)) * 0.9 + 0.05
    return P, L


def test_association_vector_rejects_non_binary_bits():
    with pytest.raises(ValueError):
        AssociationVector(vehicle_id=0, slot=0, bits=(0, 2))


def test_obs_likelihood_is_a_product_over_bits():
    model = ObservationModel(likelihood=np.array([[0.9, 0.2], [0.5, 0.5]]))
    got = model.obs_likelihood((1, 0))
    assert got == pytest.approx([0.9 * 0.8, 0.5 * 0.5])
    with pytest.raises(ValueError, match="length"):
        model.obs_likelihood((1,))


def test_observation_model_rejects_bad_likelihoods():
    with pytest.raises(ValueError):
        ObservationModel(likelihood=np.array([[1.2]]))
    with pytest.raises(ValueError):
        ObservationModel(likelihood=np.array([0.5, 0.5]))


def test_update_matches_a_hand_computed_two_cell_step():
    P = np.array([[0.7, 0.3], [0.4, 0.6]])
    model = ObservationModel(likelihood=np.array([[0.9], [0.1]]))
    belief = PosteriorBelief(0, np.array([0.5, 0.5]))
    out, fallback = update_belief(belief, AssociationVector(0, 0, (1,)), P, model)
    prior = [0.55, 0.45]
    unnorm = [0.55 * 0.9, 0.45 * 0.1]
    z = sum(unnorm)
    assert not fallback
    assert out.probs == pytest.approx([unnorm[0] / z, unnorm[1] / z])


def test_update_requires_a_normalized_belief():
    P = np.eye(2)
    model = ObservationModel(likelihood=np.full((2, 1), 0.5))
    with pytest.raises(ValueError, match="normalized"):
        update_belief(PosteriorBelief(0, np.array([0.7, 0.6])), AssociationVector(0, 0, (1,)), P, model)


def test_zero_likelihood_observation_falls_back_to_the_predicted_prior():
    P = np.array([[0.2, 0.8], [0.5, 0.5]])
    model = ObservationModel(likelihood=np.array([[0.0], [0.0]]))
    belief = PosteriorBelief(0, np.array([0.5, 0.5]))
    out, fallback = update_belief(belief, AssociationVector(0, 0, (1,)), P, model)
    assert fallback
    assert out.probs == pytest.approx([0.35, 0.65])
    assert out.normalized()


def test_filter_trajectories_match_the_loop_oracle():
    rng = np.random.default_rng(2024)
    for _ in range(30):
        n_cells = int(rng.integers(2, 9))
        n_aps = int(rng.integers(1, 5))
        P, L = _random_instance(rng, n_cells, n_aps)
        model = ObservationModel(likelihood=L)
        belief = uniform_belief(0, n_cells)
        oracle = [1.0 / n_cells] * n_cells
        for step in range(20):
            bits = tuple(int(b) for b in rng.integers(0, 2, size=n_aps))
            belief, fb = update_belief(belief, AssociationVector(0, step, bits), P, model)
            oracle, ofb = _forward_step(oracle, P.tolist(), L.tolist(), bits)
            assert fb == ofb
            assert np.max(np.abs(belief.probs - np.array(oracle))) < 1e-9
            assert belief.normalized()


def test_predict_association_thresholds_the_propagated_marginals():
    P = np.array([[0.0, 1.0], [1.0, 0.0]])
    model = ObservationModel(likelihood=np.array([[0.9, 0.1], [0.2, 0.8]]))
    belief = PosteriorBelief(3, np.array([1.0, 0.0]))
    out = predict_association(belief, P, model, threshold=0.5, slot=9)
    assert out.bits == (0, 1)       # all mass moves to cell 1
    assert out.vehicle_id == 3
    assert out.slot == 9
    low = predict_association(belief, P, model, threshold=0.15)
    assert low.bits == (1, 1)


def test_predict_association_threshold_bounds():
    belief = uniform_belief(0, 2)
    P = np.eye(2)
    model = ObservationModel(likelihood=np.full((2, 1), 0.5))
    for bad in (0.0, 1.0, -0.2):
        with pytest.raises(ValueError):
            predict_association(belief, P, model, threshold=bad)


def test_uniform_belief_is_normalized():
    assert uniform_belief(0, 7).normalized()


def test_derived_observation_model_floors_ceilings_and_defaults():
    model = derive_observation_model(
        cells=[10, 20],
        cell_snrs={10: [(0, 50.0), (1, 30.0)], 20: [(1, 40.0)]},
        n_aps=2,
        success_prob={(10, 0): 0.999, (10, 1): 0.5, (20, 1): 0.0001},
        floor=0.01,
        ceiling=0.99,
    )
    lk = model.likelihood
    assert lk[0, 0] == pytest.approx(0.99)    # clamped from above
    assert lk[0, 1] == pytest.approx(0.5)
    assert lk[1, 1] == pytest.approx(0.01)    # clamped from below
    assert lk[1, 0] == pytest.approx(0.01)    # out of range stays at the floor


def test_module_never_touches_positions_or_geometry():
    # the filter must see association bits only; importing the channel or
    # mobility modules here would be a leak of ground-truth position
    import vecsim.predictor as predictor_module

    source = Path(predictor_module.__file__).read_text(encoding="utf-8")
    tree = ast.parse(source)
    imported: set[str] = set()
    for node in ast.walk(tree):
        if isinstance(node, ast.Import):
            imported |= {a.name for a in node.names}
        elif isinstance(node, ast.ImportFrom) and node.module:
            imported.add(node.module)
    forbidden = {"vecsim.channel", "vecsim.mobility", "vecsim.simulation", "vecsim.config"}
    assert not (imported & forbidden)
