import numpy as np


def exponential_decay(step, lr_start, lr_end=None, horizon=None):
    """lr_start * (lr_end / lr_start) ** (step / horizon), held at lr_end afterwards."""
    if lr_end is None or not horizon:
        return lr_start
    frac = min(float(step), float(horizon)) / float(horizon)
    return lr_start * (lr_end / lr_start) ** frac


class Optimizer(object):
    """
    SGD or Adam over a fixed list of numpy parameter arrays, updated in place.

    :param params: arrays owned by one or more networks
    :param kind: "sgd" or "adam"
    :param lr_start, lr_end, horizon: exponential decay schedule, see ``exponential_decay``
    :param weight_decay: L2 coefficient added to the gradient of every weight
                         matrix; biases and batch-norm vectors are not decayed
    """
    def __init__(self, params, kind="adam", lr_start=1e-3, lr_end=None, horizon=None,
                 beta1=0.9, beta2=0.999, eps=1e-8, weight_decay=0.0):
        if kind not in ("sgd", "adam"):
            raise ValueError("kind must be either 'sgd' or 'adam'")
        if lr_start <= 0 or (lr_end is not None and lr_end <= 0):
            raise ValueError("learning rates must be positive")
        if weight_decay < 0:
            raise ValueError("weight_decay must be non-negative")
        self.params = list(params)
        self.kind = kind
        self.lr_start = lr_start
        self.lr_end = lr_end
        self.horizon = horizon
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.weight_decay = weight_decay
        self.t = 0
        self.m = [np.zeros_like(p) for p in self.params]
        self.v = [np.zeros_like(p) for p in self.params]

    @property
    def lr(self):
        return exponential_decay(self.t, self.lr_start, self.lr_end, self.horizon)

    def step(self, grads):
        lr = self.lr
        if self.weight_decay:
            grads = [g + self.weight_decay * p if p.ndim > 1 else g
                     for p, g in zip(self.params, grads)]
        if self.kind == "sgd":
            for p, g in zip(self.params, grads):
                p -= lr * g
        else:
            k = self.t + 1
            for p, g, m, v in zip(self.params, grads, self.m, self.v):
                m *= self.beta1
                m += (1.0 - self.beta1) * g
                v *= self.beta2
                v += (1.0 - self.beta2) * g * g
                m_hat = m / (1.0 - self.beta1 ** k)
                v_hat = v / (1.0 - self.beta2 ** k)
                p -= lr * m_hat / (np.sqrt(v_hat) + self.eps)
        self.t += 1
        return lr

    def state_dict(self):
        return {"kind": self.kind, "t": self.t,
                "m": [a.copy() for a in self.m], "v": [a.copy() for a in self.v]}

    def load_state_dict(self, state):
        if state["kind"] != self.kind or len(state["m"]) != len(self.m):
            raise ValueError("optimizer state does not match this optimizer")
        self.t = int(state["t"])
        for dst, src in zip(self.m + self.v, state["m"] + state["v"]):
            dst[...] = src
        return self
