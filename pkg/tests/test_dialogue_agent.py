import numpy as np
import pytest
from libinquire.algorithms import DialogueAgent, EmbeddingTable
from libinquire.dataset import ActionTree, Appraisal
from libinquire.exceptions import TaxonomyError


def _agent(tree, state_dim=8, **kwargs):
    params = dict(compress_units=(16,), scorer_units=(16,), batch_norm=False, lr=1e-3,
                  lr_end=1e-3, seed=0)
    params.update(kwargs)
    table = EmbeddingTable.random(tree.n_nodes, dim=4, seed=0)
    return DialogueAgent(tree, table, **params).build_model(state_dim)


def _flatten_scorer(agent):
    last = agent.scorer.dense_layers[-1]
    last.W[...] = 0.0
    last.b[...] = 0.0


def test_table_must_match_tree(tree):
    with pytest.raises(TaxonomyError):
        DialogueAgent(tree, EmbeddingTable.random(5, dim=4))


def test_level_q_values_shapes(tree):
    agent = _agent(tree)
    s_aug = agent.augment(np.ones((1, 8)), [Appraisal.from_index(2)])[0]
    assert agent.aug_dim == 16 + 9
    assert agent.level_q_values(s_aug).shape == (3,)
    question = tree.lookup("Question")
    assert agent.level_q_values(s_aug, (question,)).shape == (3,)
    np.testing.assert_array_equal(agent.level_q_values(s_aug, (question,)),
                                  agent.level_q_values(s_aug, (question,)))
    leaf_prefix = tree.full_paths()[0]
    assert agent.level_q_values(s_aug, leaf_prefix).shape == (0,)


def test_level_q_values_rejects_bad_prefixes(tree):
    agent = _agent(tree)
    s_aug = agent.augment(np.ones((1, 8)), [0])[0]
    with pytest.raises(TaxonomyError):
        agent.level_q_values(s_aug, (1,))
    with pytest.raises(TaxonomyError):
        agent.level_q_values(s_aug, (0,), candidates=[13])


def test_select_action_path_is_full_on_builtin_tree(tree):
    agent = _agent(tree)
    states = np.random.RandomState(0).normal(size=(12, 8))
    paths = agent.predict(states, np.arange(12) % 9)
    assert all(len(p) == 3 and tree.is_full(p) for p in paths)
    single = agent.act(states[0], Appraisal.from_index(0))
    assert single == paths[0]


def test_ties_go_to_lowest_node_id(tree):
    agent = _agent(tree)
    _flatten_scorer(agent)
    assert agent.act(np.ones(8), 0) == (0, 1, 2)


def test_childless_root_stops_the_path():
    tree = ActionTree([(0, 1, "Pause", None), (1, 1, "Question", None),
                       (2, 2, "Probing question", 1), (3, 3, "Probe", 2)])
    agent = _agent(tree)
    _flatten_scorer(agent)
    assert agent.act(np.ones(8), 0) == (0,)


def test_argmax_invariant_to_constant_shift(tree):
    agent = _agent(tree)
    states = np.random.RandomState(4).normal(size=(6, 8))
    before = agent.predict(states, [1] * 6)
    agent.scorer.dense_layers[-1].b += 3.0
    assert agent.predict(states, [1] * 6) == before


def test_no_appraisal_ignores_appraisal(tree):
    agent = _agent(tree, no_appraisal=True)
    a = agent.augment(np.ones((1, 8)), [0])
    b = agent.augment(np.ones((1, 8)), [5])
    np.testing.assert_array_equal(a, b)
    assert not np.any(a[:, 16:])


def _tree_dataset(dataset_factory, tree, n=6, terminal=True, seed=0):
    rng = np.random.RandomState(seed)
    full = tree.full_paths()
    return dataset_factory(states=rng.normal(size=(n, 8)), appraisals=rng.randint(9, size=n),
                           paths=[full[i % len(full)] for i in range(n)],
                           rewards=rng.uniform(size=n), terminals=[terminal] * n,
                           next_states=rng.normal(size=(n, 8)))


def test_flat_scorer_has_zero_hierarchy_term(tree, dataset_factory):
    agent = _agent(tree)
    _flatten_scorer(agent)
    dataset = _tree_dataset(dataset_factory, tree)
    residuals = agent.hier_residuals(dataset)
    assert residuals.shape == (6, 2)
    assert np.nanmax(residuals) == 0.0
    report = agent.train_step(dataset, np.arange(dataset.n_hierarchical))
    assert report.hier == 0.0
    assert report.hier_residual == 0.0


def test_plain_per_level_ddqn_when_coefficients_vanish(tree, dataset_factory):
    agent = _agent(tree, beta=0.0, lam=0.0)
    dataset = _tree_dataset(dataset_factory, tree, terminal=False)
    report = agent.train_step(dataset, np.arange(dataset.n_hierarchical))
    assert report.total == report.td
    assert report.reg >= 0.0


def test_targets_bootstrap_on_next_turn_roots(tree, dataset_factory):
    agent = _agent(tree, gamma=0.5)
    dataset = _tree_dataset(dataset_factory, tree, terminal=False)
    rounds = np.arange(dataset.n_rounds)
    s_next = agent.augment(dataset.next_states, dataset.next_appraisals)
    s_next_target = agent.augment(dataset.next_states, dataset.next_appraisals, target=True)
    expected = []
    for r in rounds:
        main = agent.level_q_values(s_next[r])
        target = agent.level_q_values(s_next_target[r], target=True)
        expected.append(dataset.rewards[r] + 0.5 * target[int(np.argmax(main))])
    np.testing.assert_allclose(agent.targets(dataset, rounds), expected)


def test_train_step_rejects_inconsistent_tuples(tree, dataset_factory):
    agent = _agent(tree)
    dataset = _tree_dataset(dataset_factory, tree)
    dataset.h_action = dataset.h_action.copy()
    dataset.h_action[1] = 13
    with pytest.raises(TaxonomyError, match="invalid level prefix"):
        agent.train_step(dataset, np.arange(dataset.n_hierarchical))


def _bandit(small_tree, dataset_factory, n=20):
    """One state, terminal rounds; half take (0, 1, 3) for 1.0, half (0, 2, 4) for 0.5."""
    paths = [(0, 1, 3), (0, 2, 4)] * (n // 2)
    rewards = [1.0 if p[1] == 1 else 0.5 for p in paths]
    return dataset_factory(states=np.ones((n, 4)) * 0.5, appraisals=[0] * n, paths=paths,
                           rewards=rewards)


def _fit_bandit(small_tree, dataset, lam, steps=2000):
    table = EmbeddingTable.random(small_tree.n_nodes, dim=4, seed=0)
    agent = DialogueAgent(small_tree, table, compress_units=(8,), scorer_units=(32,),
                          gamma=0.9, tau=0.05, beta=0.0, lam=lam, lr=1e-2, lr_end=1e-4,
                          lr_horizon=steps, n_epochs=steps, batch_size=dataset.n_hierarchical,
                          batch_norm=False, seed=0)
    return agent.fit(dataset, verbose=0)


def test_hierarchy_consistency_on_bandit(small_tree, dataset_factory):
    dataset = _bandit(small_tree, dataset_factory)
    agent = _fit_bandit(small_tree, dataset, lam=1.0)
    assert np.nanmax(agent.hier_residuals(dataset)) <= 0.05
    assert agent.act(np.ones(4) * 0.5, 0) == (0, 1, 3)
    assert agent.history[-1]["hier_residual"] <= 0.05


def test_hierarchy_residual_shrinks_in_moving_average(small_tree, dataset_factory):
    dataset = _bandit(small_tree, dataset_factory)
    agent = _fit_bandit(small_tree, dataset, lam=1.0)
    residuals = np.array([h["hier_residual"] for h in agent.history])
    windows = residuals.reshape(-1, 200).mean(axis=1)
    for earlier, later in zip(windows[:-1], windows[1:]):
        assert later <= earlier * 1.05 + 1e-3
    assert windows[-1] < windows[0]


def test_without_hierarchy_loss_parent_tracks_mean(small_tree, dataset_factory):
    dataset = _bandit(small_tree, dataset_factory)
    agent = _fit_bandit(small_tree, dataset, lam=0.0)
    assert np.nanmax(agent.hier_residuals(dataset)) > 0.2


def test_fit_on_empty_dataset_fails(tree, dataset_factory):
    agent = DialogueAgent(tree, EmbeddingTable.random(tree.n_nodes, dim=4))
    dataset = dataset_factory(states=np.zeros((0, 8)), appraisals=[], paths=[], rewards=[])
    with pytest.raises(ValueError):
        agent.fit(dataset, verbose=0)


def test_state_roundtrip(tree, dataset_factory, tmp_path):
    agent = _agent(tree)
    dataset = _tree_dataset(dataset_factory, tree)
    agent.fit(dataset, n_epochs=2, verbose=0)
    state = agent.state_dict()
    twin = DialogueAgent.from_state(state, tree, agent.table)
    states = np.random.RandomState(9).normal(size=(4, 8))
    assert twin.predict(states, [0, 1, 2, 3]) == agent.predict(states, [0, 1, 2, 3])
    assert twin.epoch == 2
