import networkx as nx
import numpy as np
import pytest

from swarmres.criticality import surbi_rank
from swarmres.gcn import (GcnModel, _loss_and_grads, cross_entropy, gcn_forward, gcn_train,
                          load_checkpoint, neighbor_sample, ni_quantile_labels, normalized_adjacency,
                          save_checkpoint)
from swarmres.graphcore import centrality_features


def dense_oracle(weights, g, x):
    a = nx.to_numpy_array(g, nodelist=list(g.nodes), weight=None) + np.eye(len(g))
    deg = a.sum(axis=1)
    p = np.diag(deg ** -0.5) @ a @ np.diag(deg ** -0.5)
    h = x
    for w in weights:
        h = np.maximum(p @ h @ w, 0)
    return h


@pytest.mark.parametrize("seed", range(20))
def test_forward_matches_dense_oracle(seed):
    rng = np.random.default_rng(seed)
    g = nx.gnp_random_graph(int(rng.integers(2, 30)), 0.3, seed=seed)
    model = GcnModel.init(5, [8, 6], 3, rng)
    x = rng.normal(size=(len(g), 5))
    assert np.allclose(gcn_forward(model, g, x), dense_oracle(model.weights, g, x), atol=1e-9, rtol=0)


def test_four_node_two_layer_example():
    g = nx.path_graph(4)
    w1 = np.arange(6, dtype=float).reshape(3, 2) / 10 - 0.2
    w2 = np.array([[1.0, -1.0], [0.5, 2.0]])
    x = np.arange(12, dtype=float).reshape(4, 3)
    got = gcn_forward(GcnModel([w1, w2]), g, x)
    assert np.allclose(got, dense_oracle([w1, w2], g, x), atol=1e-9)


def test_single_node_and_zero_features():
    g = nx.empty_graph(1)
    w = [np.array([[2.0, -1.0]]), np.array([[1.0], [1.0]])]
    assert gcn_forward(GcnModel(w), g, np.array([[3.0]])).tolist() == [[6.0]]
    h = gcn_forward(GcnModel.init(5, [4], 2, np.random.default_rng(0)), nx.path_graph(5), np.zeros((5, 5)))
    assert not h.any()


def test_identity_layer_without_edges_is_relu():
    x = np.array([[1.0, -2.0], [-0.5, 3.0]])
    assert np.array_equal(gcn_forward(GcnModel([np.eye(2)]), nx.empty_graph(2), x), np.maximum(x, 0))


def test_shape_errors():
    with pytest.raises(ValueError):
        GcnModel([])
    with pytest.raises(ValueError):
        GcnModel([np.zeros((3, 4)), np.zeros((5, 2))])
    with pytest.raises(ValueError):
        gcn_forward(GcnModel([np.eye(3)]), nx.path_graph(2), np.zeros((2, 4)))


def test_normalized_adjacency_rows():
    p = normalized_adjacency(nx.to_numpy_array(nx.complete_graph(4)))
    assert np.allclose(p, np.full((4, 4), 0.25))


def test_neighbor_sample():
    g = nx.star_graph(6)
    rng = np.random.default_rng(0)
    assert neighbor_sample(g, 0, 10, rng) == set(range(1, 7))
    assert neighbor_sample(g, 0, 0, rng) == set()
    a = neighbor_sample(g, 0, 3, np.random.default_rng(42))
    b = neighbor_sample(g, 0, 3, np.random.default_rng(42))
    assert a == b and len(a) == 3 and a <= set(range(1, 7))


def test_gradients_match_finite_differences():
    rng = np.random.default_rng(3)
    g = nx.gnp_random_graph(12, 0.3, seed=3)
    x = rng.normal(size=(12, 4))
    labels = rng.integers(0, 3, size=12)
    model = GcnModel.init(4, [5, 5], 3, rng)
    ops = [normalized_adjacency(nx.to_numpy_array(g))] * 2
    batch = np.arange(12)
    _, gw, go, gb = _loss_and_grads(model, ops, x, labels, batch)

    def loss():
        return _loss_and_grads(model, ops, x, labels, batch)[0]

    eps = 1e-6
    for target, grad in [*zip(model.weights, gw), (model.out_weight, go), (model.out_bias, gb)]:
        for idx in list(np.ndindex(target.shape))[:6]:
            old = target[idx]
            target[idx] = old + eps
            up = loss()
            target[idx] = old - eps
            down = loss()
            target[idx] = old
            assert grad[idx] == pytest.approx((up - down) / (2 * eps), abs=1e-6)


def test_zero_learning_rate_keeps_weights():
    rng = np.random.default_rng(0)
    g = nx.barabasi_albert_graph(30, 2, seed=0)
    x = centrality_features(g)
    model = GcnModel.init(5, [8], 4, rng)
    trained = gcn_train(model, g, x, np.zeros(30, dtype=int), epochs=3, lr=0.0, rng=1)
    for a, b in zip(model.weights, trained.weights):
        assert np.array_equal(a, b)
    assert np.array_equal(model.out_weight, trained.out_weight)


def test_single_class_loss_goes_to_zero():
    g = nx.barabasi_albert_graph(40, 2, seed=1)
    x = centrality_features(g)
    model = GcnModel.init(5, [8], 3, np.random.default_rng(1))
    labels = np.full(40, 2)
    trained = gcn_train(model, g, x, labels, epochs=60, lr=0.05, rng=2)
    assert trained.history[-1] < 0.05 < trained.history[0]


def test_empty_training_set_rejected():
    g = nx.path_graph(4)
    model = GcnModel.init(5, [4], 2, np.random.default_rng(0))
    with pytest.raises(ValueError):
        gcn_train(model, g, np.zeros((4, 5)), np.zeros(4, dtype=int), train_idx=[])


def test_quantile_labels_beat_majority_baseline():
    g = nx.barabasi_albert_graph(100, 2, seed=7)
    x = centrality_features(g)
    labels = ni_quantile_labels(surbi_rank(g).ni, 4)
    assert set(labels.tolist()) == {0, 1, 2, 3}
    perm = np.random.default_rng(7).permutation(100)
    train, test = perm[:70], perm[70:]
    model = GcnModel.init(5, [16], 4, np.random.default_rng(7), fanouts=(10,))
    trained = gcn_train(model, g, x, labels, epochs=150, lr=0.05, rng=7, train_idx=train)
    assert trained.history[-1] <= trained.history[0]
    from swarmres.gcn import predict_proba
    acc = np.mean(predict_proba(trained, g, x)[test].argmax(axis=1) == labels[test])
    majority = np.bincount(labels[train], minlength=4).argmax()
    baseline = np.mean(labels[test] == majority)
    assert acc > max(baseline, 0.25)
    assert cross_entropy(trained, g, x, labels, train) == pytest.approx(trained.history[-1])


def test_checkpoint_round_trip(tmp_path):
    model = GcnModel.init(5, [7, 3], 4, np.random.default_rng(9), fanouts=(4, 2))
    save_checkpoint(model, tmp_path / "m.json")
    back = load_checkpoint(tmp_path / "m.json")
    for a, b in zip(model.weights, back.weights):
        assert np.array_equal(a, b)
    assert np.array_equal(model.out_weight, back.out_weight)
    assert back.fanouts == (4, 2) and back.classes == 4
