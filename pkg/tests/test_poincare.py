import math
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from libinquire.algorithms import PoincareEmbedding, EmbeddingTable, poincare_distance, \
    nll_loss, train_embeddings, action_features
from libinquire.algorithms.poincare import project, BALL_EPS
from libinquire.exceptions import TaxonomyError

coords = st.floats(min_value=-0.6, max_value=0.6, allow_nan=False)
points = st.tuples(coords, coords)


def test_distance_examples():
    assert poincare_distance([0.3, 0.1], [0.3, 0.1]) == 0.0
    assert poincare_distance([0.5, 0.0], [0.0, 0.0]) == pytest.approx(math.log(3.0), abs=1e-9)
    with pytest.raises(ValueError):
        poincare_distance([1.0, 0.0], [0.0, 0.0])


@given(points, points)
def test_distance_is_symmetric(u, v):
    assert poincare_distance(u, v) == pytest.approx(poincare_distance(v, u), abs=1e-9)
    assert poincare_distance(u, v) >= 0.0


def test_nll_equal_distances_is_log_two():
    vectors = np.array([[0.0, 0.0], [0.5, 0.0], [-0.5, 0.0]])
    assert nll_loss(vectors, [(0, 1)], [[2]]) == pytest.approx(math.log(2.0), abs=1e-12)


def test_nll_far_negative_vanishes():
    far = 1.0 - BALL_EPS
    vectors = np.array([[0.2, 0.0], [0.2, 0.0], [-far, 0.0]])
    assert nll_loss(EmbeddingTable(vectors), [(0, 1)], [[2]]) < 1e-4


def test_nll_rejects_empty_negatives():
    with pytest.raises(ValueError):
        nll_loss(np.zeros((2, 2)), [(0, 1)], [[]])


@settings(max_examples=50, deadline=None)
@given(st.lists(points, min_size=4, max_size=4))
def test_nll_is_non_negative(pts):
    assert nll_loss(np.array(pts), [(0, 1), (2, 3)], [[2, 3], [0, 1]]) >= 0.0


def test_projection_bound():
    vectors = np.array([[3.0, 4.0], [0.1, 0.0]])
    projected = project(vectors)
    assert np.linalg.norm(projected[0]) == pytest.approx(1.0 - BALL_EPS)
    np.testing.assert_array_equal(projected[1], vectors[1])


def test_action_features_layout():
    table = EmbeddingTable.random(5, dim=4, seed=0)
    full = action_features(table, (0, 1, 3))
    assert full.shape == (12,)
    short = action_features(table, (0,))
    np.testing.assert_array_equal(short[4:], np.zeros(8))
    np.testing.assert_array_equal(short[:4], table.vector(0))
    np.testing.assert_array_equal(action_features(table, (0, 1, 3)), full)
    with pytest.raises(TaxonomyError):
        action_features(table, (7,))


def test_table_state_roundtrip():
    table = EmbeddingTable.random(6, dim=3, seed=1)
    again = EmbeddingTable.from_state(table.state_dict())
    assert again.digest() == table.digest()
    assert EmbeddingTable.random(6, dim=3, seed=2).digest() != table.digest()


def test_short_training_decreases_loss(small_tree):
    model = PoincareEmbedding(dim=2, n_epochs=30, lr=0.3, negative=2, batch_size=4, seed=0)
    table = model.fit(small_tree, verbose=0)
    assert table.n_nodes == small_tree.n_nodes
    assert model.final_loss < model.initial_loss
    assert np.all(table.norms() <= 1.0 - BALL_EPS + 1e-12)


@pytest.mark.slow
def test_builtin_tree_embedding(tree):
    table = train_embeddings(tree, {"dim": 8, "n_epochs": 500, "seed": 42}, verbose=0)
    norms = table.norms()
    assert np.all(norms <= 1.0 - BALL_EPS + 1e-12)

    hits, total = 0, 0
    for parent in range(tree.n_nodes):
        kids = tree.children(parent)
        if not kids:
            continue
        outside = [n for n in range(tree.n_nodes)
                   if n != parent and n not in tree.descendants(parent)]
        for child in kids:
            d_child = table.distance(parent, child)
            for other in outside:
                hits += d_child < table.distance(parent, other)
                total += 1
    assert hits / float(total) >= 0.9

    edges = tree.edges()
    adjacent = set(edges) | {(v, u) for u, v in edges}
    rng = np.random.RandomState(0)
    far = []
    while len(far) < 100:
        u, v = rng.randint(tree.n_nodes, size=2)
        if u != v and (u, v) not in adjacent:
            far.append(table.distance(u, v))
    assert np.mean([table.distance(u, v) for u, v in edges]) < np.mean(far)
    assert norms[tree.nodes_at_level(1)].mean() < norms[tree.nodes_at_level(3)].mean()
