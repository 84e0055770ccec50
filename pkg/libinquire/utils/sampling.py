from collections import defaultdict
import numpy as np


class NegativeSampling(object):
    """
    Uniform negatives over the non-neighbours of a node.

    :param n_nodes: size of the node vocabulary
    :param positives: iterable of unordered (u, v) relation pairs
    :param num_neg: negatives drawn per positive
    """
    def __init__(self, n_nodes, positives, num_neg=10):
        self.n_nodes = n_nodes
        self.num_neg = num_neg
        self.neighbors = defaultdict(set)
        for u, v in positives:
            self.neighbors[u].add(v)
            self.neighbors[v].add(u)
        self.negative_pool = {}
        for u in range(n_nodes):
            self.negative_pool[u] = np.array(
                sorted(set(range(n_nodes)) - self.neighbors[u] - {u}), dtype=np.int64)
            if len(self.negative_pool[u]) == 0:
                raise ValueError("node {} is related to every other node, "
                                 "no negatives can be drawn".format(u))

    def __call__(self, u, rng):
        pool = self.negative_pool[u]
        return pool[rng.randint(0, len(pool), size=self.num_neg)]

    def sample_batch(self, anchors, rng):
        return np.stack([self(u, rng) for u in anchors]) if len(anchors) else \
            np.zeros((0, self.num_neg), dtype=np.int64)


def minibatches(n_samples, batch_size, rng, shuffle=True):
    """Yield index arrays covering range(n_samples) once, in a fresh order per call."""
    order = rng.permutation(n_samples) if shuffle else np.arange(n_samples)
    n_batches = int(np.ceil(n_samples / float(batch_size)))
    for n in range(n_batches):
        end = min(n_samples, (n + 1) * batch_size)
        yield order[n * batch_size: end]
