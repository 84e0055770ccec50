"""
Feed-forward building blocks with explicit backward passes, float64 throughout.

Each layer caches what its backward pass needs during ``forward``; the cache
always belongs to the most recent forward call, so callers run any
inference-only passes *before* the training pass they intend to differentiate.
"""
import copy
import numpy as np
from ..exceptions import NetworkStateError
from ..utils.initializers import he_init, xavier_init


class Dense(object):
    trainable = True

    def __init__(self, n_in, n_out, rng=None, init="he"):
        rng = rng if rng is not None else np.random.RandomState(0)
        if init == "he":
            self.W = he_init(n_in, n_out, rng)
        elif init == "xavier":
            self.W = xavier_init(n_in, n_out, rng)
        elif init == "zeros":
            self.W = np.zeros((n_in, n_out))
        else:
            raise ValueError("init must be one of these: he, xavier, zeros")
        self.b = np.zeros(n_out)
        self.dW = np.zeros_like(self.W)
        self.db = np.zeros_like(self.b)
        self._x = None

    @property
    def shape(self):
        return self.W.shape

    def forward(self, x, training=True):
        self._x = x
        return x.dot(self.W) + self.b

    def backward(self, dout):
        self.dW = self._x.T.dot(dout)
        self.db = dout.sum(axis=0)
        return dout.dot(self.W.T)

    def params(self):
        return [self.W, self.b]

    def grads(self):
        return [self.dW, self.db]

    def buffers(self):
        return []

    def describe(self):
        return ("dense", int(self.W.shape[0]), int(self.W.shape[1]))


class BatchNorm(object):
    """
    Batch normalization over the batch axis.  Running statistics use the
    biased batch variance, so that eval mode reproduces train mode on a
    batch whose statistics the running averages have converged to.
    """
    trainable = True

    def __init__(self, n_units, momentum=0.1, eps=1e-5):
        self.momentum = momentum
        self.eps = eps
        self.gamma = np.ones(n_units)
        self.beta = np.zeros(n_units)
        self.running_mean = np.zeros(n_units)
        self.running_var = np.ones(n_units)
        self.dgamma = np.zeros(n_units)
        self.dbeta = np.zeros(n_units)
        self._cache = None

    def forward(self, x, training=True):
        if training:
            mu = x.mean(axis=0)
            var = x.var(axis=0)
            self.running_mean *= (1.0 - self.momentum)
            self.running_mean += self.momentum * mu
            self.running_var *= (1.0 - self.momentum)
            self.running_var += self.momentum * var
        else:
            mu, var = self.running_mean, self.running_var
        inv_std = 1.0 / np.sqrt(var + self.eps)
        x_hat = (x - mu) * inv_std
        self._cache = (x_hat, inv_std, training)
        return self.gamma * x_hat + self.beta

    def backward(self, dout):
        x_hat, inv_std, training = self._cache
        self.dgamma = (dout * x_hat).sum(axis=0)
        self.dbeta = dout.sum(axis=0)
        dx_hat = dout * self.gamma
        if not training:
            return dx_hat * inv_std
        n = dout.shape[0]
        return (inv_std / n) * (n * dx_hat - dx_hat.sum(axis=0)
                                - x_hat * (dx_hat * x_hat).sum(axis=0))

    def params(self):
        return [self.gamma, self.beta]

    def grads(self):
        return [self.dgamma, self.dbeta]

    def buffers(self):
        return [self.running_mean, self.running_var]

    def describe(self):
        return ("batch_norm", int(self.gamma.shape[0]))


class LeakyReLU(object):
    trainable = False

    def __init__(self, slope=0.01):
        self.slope = slope
        self.last_input = None

    def forward(self, x, training=True):
        self.last_input = x
        return np.where(x > 0, x, self.slope * x)

    def backward(self, dout):
        return dout * np.where(self.last_input > 0, 1.0, self.slope)

    def params(self):
        return []

    def grads(self):
        return []

    def buffers(self):
        return []

    def describe(self):
        return ("leaky_relu", float(self.slope))


class Network(object):
    def __init__(self, layers):
        dims = [l.shape for l in layers if isinstance(l, Dense)]
        if not dims:
            raise ValueError("a network needs at least one dense layer")
        for (_, n_out), (n_in, _) in zip(dims[:-1], dims[1:]):
            if n_out != n_in:
                raise ValueError("layer dimensions do not chain: {} -> {}".format(n_out, n_in))
        self.layers = list(layers)
        self.in_dim = dims[0][0]
        self.out_dim = dims[-1][1]
        self.training = True
        self._forwarded = False

    def train(self):
        self.training = True
        return self

    def eval(self):
        self.training = False
        return self

    @property
    def dense_layers(self):
        return [l for l in self.layers if isinstance(l, Dense)]

    def forward(self, x, training=None):
        training = self.training if training is None else training
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ValueError("expected input of width {}, got shape {}".format(
                self.in_dim, x.shape))
        for layer in self.layers:
            x = layer.forward(x, training)
        self._forwarded = True
        return x

    def backward(self, dout):
        if not self._forwarded:
            raise NetworkStateError("backward called before forward")
        dout = np.asarray(dout, dtype=np.float64)
        for layer in reversed(self.layers):
            dout = layer.backward(dout)
        return dout

    def params(self):
        return [p for l in self.layers for p in l.params()]

    def grads(self):
        return [g for l in self.layers for g in l.grads()]

    def buffers(self):
        return [b for l in self.layers for b in l.buffers()]

    def architecture(self):
        return [l.describe() for l in self.layers]

    def n_params(self):
        return int(sum(p.size for p in self.params()))

    def copy(self):
        twin = copy.deepcopy(self)
        twin._forwarded = False
        return twin

    def state_dict(self):
        return {"architecture": self.architecture(),
                "params": [p.copy() for p in self.params()],
                "buffers": [b.copy() for b in self.buffers()],
                "training": self.training}

    def load_state_dict(self, state):
        if [tuple(a) for a in state["architecture"]] != self.architecture():
            raise NetworkStateError("checkpoint architecture {} does not match {}".format(
                state["architecture"], self.architecture()))
        for dst, src in zip(self.params() + self.buffers(), state["params"] + state["buffers"]):
            dst[...] = src
        self.training = state["training"]
        return self


def build_mlp(sizes, batch_norm=True, slope=0.01, output_activation=True, rng=None, init="he"):
    """
    Stack of dense [+ batch norm] + leaky-relu blocks.

    :param sizes: layer widths including the input width, e.g. (4096, 64, 32)
    :param output_activation: if False the last block is a bare dense layer,
                              which is what value and reward heads use
    """
    if len(sizes) < 2:
        raise ValueError("sizes must include input and output widths")
    rng = rng if rng is not None else np.random.RandomState(0)
    layers = []
    n_blocks = len(sizes) - 1
    for i, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        last = i == n_blocks - 1
        layers.append(Dense(n_in, n_out, rng, init="xavier" if last and not output_activation else init))
        if last and not output_activation:
            break
        if batch_norm:
            layers.append(BatchNorm(n_out))
        layers.append(LeakyReLU(slope))
    return Network(layers)


def forward(net, batch):
    return net.forward(batch)


def backward(net, upstream):
    net.backward(upstream)
    return net.grads()


def polyak_update(target, main, tau):
    """target <- tau * main + (1 - tau) * target, parameters and running statistics."""
    if target.architecture() != main.architecture():
        raise NetworkStateError("polyak update between different architectures")
    if not 0.0 <= tau <= 1.0:
        raise ValueError("tau must be in [0, 1], got {}".format(tau))
    for t, m in zip(target.params() + target.buffers(), main.params() + main.buffers()):
        t *= (1.0 - tau)
        t += tau * m
    return target
