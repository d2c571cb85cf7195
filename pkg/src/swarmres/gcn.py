"""Graph convolutional surrogate scorer.

The analytic SurBi scores stay authoritative; this model is a cheap stand-in
trained on NI-quantile classes. Class labels are 0-based (``0..C-1``).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import networkx as nx
import numpy as np

from .graphcore import FeatureMatrix


def relu(x):
    return np.maximum(x, 0.0)


@dataclass
class GcnModel:
    weights: list                      # W^(l), l = 1..L
    out_weight: np.ndarray | None = None
    out_bias: np.ndarray | None = None
    fanouts: tuple = ()
    classes: int = 0
    history: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        if not self.weights:
            raise ValueError("a GCN needs at least one layer")
        for a, b in zip(self.weights, self.weights[1:]):
            if a.shape[1] != b.shape[0]:
                raise ValueError(f"layer shapes {a.shape} and {b.shape} do not chain")
        if self.out_weight is not None and self.out_weight.shape[0] != self.weights[-1].shape[1]:
            raise ValueError("output projection does not match the last layer width")

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    @classmethod
    def init(cls, in_dim, hidden, classes, rng, fanouts=None) -> "GcnModel":
        """Glorot-uniform layers ``in_dim -> hidden[0] -> ... -> hidden[-1]`` plus a softmax head."""
        dims = [in_dim, *hidden]

        def glorot(a, b):
            lim = np.sqrt(6.0 / (a + b))
            return rng.uniform(-lim, lim, size=(a, b))

        weights = [glorot(a, b) for a, b in zip(dims, dims[1:])]
        fanouts = tuple(fanouts) if fanouts is not None else (10,) * len(weights)
        return cls(weights, glorot(dims[-1], classes), np.zeros(classes), fanouts, classes)

    def copy(self) -> "GcnModel":
        return GcnModel([w.copy() for w in self.weights],
                        None if self.out_weight is None else self.out_weight.copy(),
                        None if self.out_bias is None else self.out_bias.copy(),
                        self.fanouts, self.classes, list(self.history))


def normalized_adjacency(a: np.ndarray) -> np.ndarray:
    """D^-1/2 (A + I) D^-1/2 for a dense symmetric 0/1 adjacency."""
    a_hat = a + np.eye(a.shape[0])
    d = 1.0 / np.sqrt(a_hat.sum(axis=1))
    return a_hat * d[:, None] * d[None, :]


def _features(features):
    return features.values if isinstance(features, FeatureMatrix) else np.asarray(features, dtype=float)


def gcn_forward(model: GcnModel, g: nx.Graph, features) -> np.ndarray:
    """Node embeddings after the L propagation layers (no softmax head)."""
    h = _features(features)
    if h.shape[0] != g.number_of_nodes():
        raise ValueError("feature rows do not match the node count")
    if h.shape[1] != model.weights[0].shape[0]:
        raise ValueError(f"feature width {h.shape[1]} != input width {model.weights[0].shape[0]}")
    p = normalized_adjacency(nx.to_numpy_array(g, nodelist=list(g.nodes), weight=None))
    for w in model.weights:
        h = relu(p @ h @ w)
    return h


def softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def predict_proba(model: GcnModel, g: nx.Graph, features) -> np.ndarray:
    h = gcn_forward(model, g, features)
    return softmax(h @ model.out_weight + model.out_bias)


def neighbor_sample(g: nx.Graph, v, k: int, rng) -> set:
    """Uniform sample of min(k, deg v) neighbors without replacement."""
    nbrs = sorted(g.adj[v])
    if k >= len(nbrs):
        return set(nbrs)
    if k <= 0:
        return set()
    picks = rng.choice(len(nbrs), size=k, replace=False)
    return {nbrs[i] for i in picks}


def _sampled_operator(g, nodes, index, k, rng):
    a = np.zeros((len(nodes), len(nodes)))
    for v in nodes:
        for u in neighbor_sample(g, v, k, rng):
            a[index[v], index[u]] = a[index[u], index[v]] = 1.0
    return normalized_adjacency(a)


def _loss_and_grads(model, ops, x, labels, batch):
    acts = [x]
    pre = []
    for p, w in zip(ops, model.weights):
        agg = p @ acts[-1]
        z = agg @ w
        pre.append((agg, z))
        acts.append(relu(z))
    logits = acts[-1] @ model.out_weight + model.out_bias
    prob = softmax(logits[batch])
    y = labels[batch]
    loss = -np.mean(np.log(prob[np.arange(len(batch)), y] + 1e-300))

    dlogits = np.zeros_like(logits)
    dlogits[batch] = prob
    dlogits[batch, y] -= 1.0
    dlogits /= len(batch)
    grads_w = [None] * model.n_layers
    g_out = acts[-1].T @ dlogits
    g_bias = dlogits.sum(axis=0)
    dh = dlogits @ model.out_weight.T
    for l in range(model.n_layers - 1, -1, -1):
        agg, z = pre[l]
        dz = dh * (z > 0)
        grads_w[l] = agg.T @ dz
        dh = ops[l].T @ (dz @ model.weights[l].T)
    return loss, grads_w, g_out, g_bias


def cross_entropy(model, g, features, labels, nodes_idx=None) -> float:
    prob = predict_proba(model, g, features)
    labels = np.asarray(labels)
    idx = np.arange(len(labels)) if nodes_idx is None else np.asarray(nodes_idx)
    return float(-np.mean(np.log(prob[idx, labels[idx]] + 1e-300)))


def gcn_train(model: GcnModel, g: nx.Graph, features, labels, epochs=200, batch=32, lr=0.05,
              momentum=0.9, rng=None, train_idx=None) -> GcnModel:
    """Mini-batch momentum SGD on cross-entropy with per-layer neighbor sampling.

    ``labels`` is one class index per node (``g.nodes`` order); only rows in
    ``train_idx`` (default: all) contribute to the loss. Returns a new model.
    """
    rng = np.random.default_rng(rng)
    x = _features(features)
    labels = np.asarray(labels, dtype=int)
    train_idx = np.arange(len(labels)) if train_idx is None else np.asarray(train_idx)
    if train_idx.size == 0:
        raise ValueError("empty training set")
    if model.out_weight is None:
        raise ValueError("model has no classification head")
    model = model.copy()
    nodes = list(g.nodes)
    index = {v: k for k, v in enumerate(nodes)}
    velocity = [np.zeros_like(w) for w in model.weights]
    v_out, v_bias = np.zeros_like(model.out_weight), np.zeros_like(model.out_bias)
    fanouts = model.fanouts or (len(nodes),) * model.n_layers
    model.history = [cross_entropy(model, g, x, labels, train_idx)]
    for _ in range(epochs):
        order = rng.permutation(train_idx)
        for start in range(0, len(order), batch):
            b = order[start:start + batch]
            ops = [_sampled_operator(g, nodes, index, k, rng) for k in fanouts]
            _, gw, go, gb = _loss_and_grads(model, ops, x, labels, b)
            for l in range(model.n_layers):
                velocity[l] = momentum * velocity[l] - lr * gw[l]
                model.weights[l] = model.weights[l] + velocity[l]
            v_out = momentum * v_out - lr * go
            v_bias = momentum * v_bias - lr * gb
            model.out_weight = model.out_weight + v_out
            model.out_bias = model.out_bias + v_bias
        model.history.append(cross_entropy(model, g, x, labels, train_idx))
    return model


def ni_quantile_labels(ni, classes: int = 4) -> np.ndarray:
    """Class k holds the k-th NI quantile band (0 = least critical)."""
    ni = np.asarray(ni, dtype=float)
    edges = np.quantile(ni, np.linspace(0, 1, classes + 1)[1:-1])
    return np.searchsorted(edges, ni, side="right")


def save_checkpoint(model: GcnModel, path) -> None:
    doc = {
        "layer_dims": [[int(d) for d in w.shape] for w in model.weights],
        "weights": [w.ravel(order="C").tolist() for w in model.weights],
        "out_dims": None if model.out_weight is None else list(model.out_weight.shape),
        "out_weight": None if model.out_weight is None else model.out_weight.ravel().tolist(),
        "out_bias": None if model.out_bias is None else model.out_bias.tolist(),
        "fanouts": list(model.fanouts),
        "classes": model.classes,
    }
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def load_checkpoint(path) -> GcnModel:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    weights = [np.array(w, dtype=float).reshape(d) for w, d in zip(doc["weights"], doc["layer_dims"])]
    out_w = None if doc["out_weight"] is None else np.array(doc["out_weight"]).reshape(doc["out_dims"])
    out_b = None if doc["out_bias"] is None else np.array(doc["out_bias"])
    return GcnModel(weights, out_w, out_b, tuple(doc["fanouts"]), doc["classes"])
