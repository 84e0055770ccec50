"""
Poincaré-ball embeddings of the dialogue-act hierarchy.

Positives are parent-child edges plus sibling pairs; each positive (u, v) is
scored against ``negative`` uniform non-neighbours of u with a softmax over
negative hyperbolic distances that includes v itself.  Training is Riemannian
SGD: the Euclidean gradient is rescaled by (1 - |x|^2)^2 / 4 and the point is
projected back inside the ball.

References: Maximilian Nickel, Douwe Kiela "Poincaré Embeddings for Learning
            Hierarchical Representations" (https://arxiv.org/abs/1705.08039)
"""
import hashlib
import logging
import time
import numpy as np
from scipy.special import logsumexp
from tqdm import tqdm
from ..exceptions import TaxonomyError
from ..utils.initializers import uniform_ball_init
from ..utils.sampling import NegativeSampling, minibatches

logger = logging.getLogger(__name__)

BALL_EPS = 1e-5


def poincare_distance(u, v):
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu, nv = np.dot(u, u), np.dot(v, v)
    if nu >= 1.0 or nv >= 1.0:
        raise ValueError("points must lie strictly inside the unit ball")
    diff = u - v
    gamma = 1.0 + 2.0 * np.dot(diff, diff) / ((1.0 - nu) * (1.0 - nv))
    return float(np.arccosh(max(gamma, 1.0)))


def project(vectors, eps=BALL_EPS):
    """Pull rows with norm above 1 - eps back onto that radius."""
    norms = np.linalg.norm(vectors, axis=-1, keepdims=True)
    limit = 1.0 - eps
    scale = np.where(norms > limit, limit / np.maximum(norms, 1e-300), 1.0)
    return vectors * scale


class _PoincareBatch(object):
    """Distances, softmax loss and Euclidean gradients for one batch of positives."""

    def __init__(self, vectors, anchors, positives, negatives):
        self.anchors = anchors
        self.others = np.concatenate([positives[:, None], negatives], axis=1)
        u = vectors[anchors]                               # (B, d)
        w = vectors[self.others]                           # (B, K+1, d)
        norm_u = np.sum(u * u, axis=1)                     # (B,)
        norm_w = np.sum(w * w, axis=2)                     # (B, K+1)
        dot_uw = np.einsum("bd,bkd->bk", u, w)
        euclid = norm_u[:, None] - 2.0 * dot_uw + norm_w
        alpha = 1.0 - norm_u
        beta = 1.0 - norm_w
        gamma = np.maximum(1.0 + 2.0 * euclid / (alpha[:, None] * beta), 1.0)
        self.distances = np.arccosh(gamma)

        neg_d = -self.distances
        self.loss = float(np.sum(self.distances[:, 0] + logsumexp(neg_d, axis=1)))

        probs = np.exp(neg_d - logsumexp(neg_d, axis=1, keepdims=True))
        dl_dd = -probs
        dl_dd[:, 0] += 1.0

        root = np.sqrt(gamma ** 2 - 1.0)
        safe = root > 1e-15
        root = np.where(safe, root, 1.0)
        c_u = np.where(safe, 4.0 / (beta * root), 0.0)
        c_w = np.where(safe, 4.0 / (alpha[:, None] * root), 0.0)
        coef_u = (norm_w - 2.0 * dot_uw + 1.0) / (alpha[:, None] ** 2)
        coef_w = (norm_u[:, None] - 2.0 * dot_uw + 1.0) / (beta ** 2)

        dd_du = c_u[..., None] * (coef_u[..., None] * u[:, None, :] - w / alpha[:, None, None])
        dd_dw = c_w[..., None] * (coef_w[..., None] * w - u[:, None, :] / beta[..., None])
        self.grad_u = np.sum(dl_dd[..., None] * dd_du, axis=1)
        self.grad_w = dl_dd[..., None] * dd_dw

    def accumulate(self, n_rows):
        grad = np.zeros((n_rows, self.grad_u.shape[1]))
        np.add.at(grad, self.anchors, self.grad_u)
        np.add.at(grad, self.others.reshape(-1), self.grad_w.reshape(-1, self.grad_u.shape[1]))
        touched = np.unique(np.concatenate([self.anchors, self.others.reshape(-1)]))
        return grad, touched


def _as_vectors(table):
    return table.vectors if isinstance(table, EmbeddingTable) else np.asarray(table, dtype=np.float64)


def nll_loss(table, positives, negatives):
    """
    -sum log( exp(-d(u,v)) / sum_{v' in N(u) + {v}} exp(-d(u,v')) ).

    :param positives: sequence of (u, v) node-id pairs
    :param negatives: one non-empty sequence of node ids per positive
    """
    vectors = _as_vectors(table)
    positives = np.asarray(positives, dtype=np.int64).reshape(-1, 2)
    if len(negatives) != len(positives):
        raise ValueError("need one negative set per positive pair")
    if any(len(n) == 0 for n in negatives):
        raise ValueError("negative sets must be non-empty")
    total = 0.0
    for (u, v), neg in zip(positives, negatives):
        batch = _PoincareBatch(vectors, np.array([u]), np.array([v]),
                               np.asarray(neg, dtype=np.int64)[None, :])
        total += batch.loss
    return total


class EmbeddingTable(object):
    """Per-node points in the Poincaré ball, keyed by taxonomy node id."""

    def __init__(self, vectors, config=None):
        self.vectors = np.asarray(vectors, dtype=np.float64)
        self.config = dict(config or {})

    @property
    def dim(self):
        return self.vectors.shape[1]

    @property
    def n_nodes(self):
        return self.vectors.shape[0]

    def vector(self, node_id):
        if not 0 <= int(node_id) < self.n_nodes:
            raise TaxonomyError("unknown node id: {!r}".format(node_id))
        return self.vectors[int(node_id)]

    def distance(self, a, b):
        return poincare_distance(self.vector(a), self.vector(b))

    def norms(self):
        return np.linalg.norm(self.vectors, axis=1)

    def prefix_features(self, prefix):
        feats = np.zeros(3 * self.dim)
        for i, node in enumerate(prefix):
            feats[i * self.dim:(i + 1) * self.dim] = self.vector(node)
        return feats

    def candidate_features(self, candidates):
        return np.stack([self.vector(c) for c in candidates]) if len(candidates) else \
            np.zeros((0, self.dim))

    def digest(self):
        sha = hashlib.sha256()
        sha.update(str(self.vectors.shape).encode("utf-8"))
        sha.update(np.ascontiguousarray(self.vectors).tobytes())
        return sha.hexdigest()

    def state_dict(self):
        return {"vectors": self.vectors.copy(), "config": dict(self.config)}

    @classmethod
    def from_state(cls, state):
        return cls(state["vectors"], state["config"])

    @classmethod
    def random(cls, n_nodes, dim=8, seed=42, radius=0.5):
        """Untrained points spread inside a ball of ``radius``; useful as fixed features."""
        rng = np.random.RandomState(seed)
        vectors = rng.normal(size=(n_nodes, dim))
        vectors *= (radius * rng.uniform(0.2, 1.0, size=(n_nodes, 1))
                    / np.linalg.norm(vectors, axis=1, keepdims=True))
        return cls(vectors, {"kind": "random", "seed": seed})


def action_features(table, path):
    if len(path) > 3:
        raise TaxonomyError("paths have at most three nodes, got {}".format(len(path)))
    return table.prefix_features(path)


def relation_pairs(tree):
    return list(tree.edges()) + list(tree.sibling_pairs())


class PoincareEmbedding(object):
    def __init__(self, dim=8, n_epochs=500, lr=0.1, negative=10, batch_size=10,
                 burn_in=10, burn_in_alpha=0.1, init_range=(-0.001, 0.001), seed=42):
        self.dim = dim
        self.n_epochs = n_epochs
        self.lr = lr
        self.negative = negative
        self.batch_size = batch_size
        self.burn_in = burn_in
        self.burn_in_alpha = burn_in_alpha
        self.init_range = init_range
        self.seed = seed
        self.loss_history = []

    def config(self):
        return {"dim": self.dim, "n_epochs": self.n_epochs, "lr": self.lr,
                "negative": self.negative, "batch_size": self.batch_size,
                "burn_in": self.burn_in, "seed": self.seed}

    def _epoch(self, vectors, pairs, sampler, rng, lr):
        epoch_loss = 0.0
        for idx in minibatches(len(pairs), self.batch_size, rng):
            anchors, positives = pairs[idx, 0], pairs[idx, 1]
            batch = _PoincareBatch(vectors, anchors, positives,
                                   sampler.sample_batch(anchors, rng))
            grad, touched = batch.accumulate(len(vectors))
            rows = vectors[touched]
            scale = ((1.0 - np.sum(rows * rows, axis=1)) ** 2 / 4.0)[:, None]
            vectors[touched] = project(rows - lr * scale * grad[touched])
            epoch_loss += batch.loss
        return epoch_loss / len(pairs)

    def fit(self, tree, verbose=1):
        rng = np.random.RandomState(self.seed)
        relations = relation_pairs(tree)
        sampler = NegativeSampling(tree.n_nodes, relations, self.negative)
        pairs = np.array(relations + [(v, u) for u, v in relations], dtype=np.int64)
        vectors = uniform_ball_init(tree.n_nodes, self.dim, rng, *self.init_range)

        eval_rng = np.random.RandomState(self.seed + 1)
        eval_neg = [sampler(u, eval_rng) for u in pairs[:, 0]]
        self.initial_loss = nll_loss(vectors, pairs, eval_neg) / len(pairs)
        self.loss_history = []

        epochs = tqdm(range(1, self.n_epochs + 1), desc="poincare", disable=verbose < 2)
        for epoch in epochs:
            t0 = time.time()
            lr = self.lr * self.burn_in_alpha if epoch <= self.burn_in else self.lr
            loss = self._epoch(vectors, pairs, sampler, rng, lr)
            self.loss_history.append(loss)
            if verbose > 0 and (epoch % 50 == 0 or epoch == self.n_epochs):
                logger.info("[embeddings] Epoch {}: training time: {:.4f}, loss: {:.6f}".format(
                    epoch, time.time() - t0, loss))

        self.final_loss = nll_loss(vectors, pairs, eval_neg) / len(pairs)
        self.table = EmbeddingTable(vectors, self.config())
        return self.table


def train_embeddings(tree, config=None, verbose=1):
    model = PoincareEmbedding(**(config or {}))
    return model.fit(tree, verbose=verbose)
