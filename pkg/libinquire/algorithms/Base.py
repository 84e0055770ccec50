import logging
import time
from abc import ABCMeta, abstractmethod
from dataclasses import dataclass, asdict
import numpy as np
from ..network import Optimizer
from ..utils.serialization import save_checkpoint, load_checkpoint

logger = logging.getLogger(__name__)


@dataclass
class LossReport:
    total: float
    td: float
    reg: float = 0.0
    hier: float = 0.0
    hier_residual: float = 0.0

    def to_dict(self):
        return asdict(self)


def ddqn_target(rewards, q_main_next, q_target_eval, terminals, gamma):
    """
    r + gamma * Q_target(., argmax_a Q_main(s', a)), or r on terminal rows.

    :param q_main_next: (n, k) main-network values at the successor state
    :param q_target_eval: (n, k) target-network values at the state the
                          bootstrap is read from (s' normally)
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    q_main_next = np.asarray(q_main_next, dtype=np.float64)
    q_target_eval = np.asarray(q_target_eval, dtype=np.float64)
    best = np.argmax(q_main_next, axis=1)
    bootstrap = q_target_eval[np.arange(len(best)), best]
    live = 1.0 - np.asarray(terminals, dtype=np.float64)
    return rewards + gamma * live * bootstrap


def conservative_reg(q_values, observed):
    """max_a Q(s, a) - Q(s, a_observed), row-wise for 2-d input."""
    q_values = np.asarray(q_values, dtype=np.float64)
    if q_values.ndim == 1:
        return float(q_values.max() - q_values[int(observed)])
    observed = np.asarray(observed, dtype=np.int64)
    return q_values.max(axis=1) - q_values[np.arange(len(observed)), observed]


def conservative_reg_grad(q_values, observed):
    """d(reg)/dQ per row: +1 at the argmax, -1 at the observed action; exactly 0 when they coincide."""
    grad = np.zeros_like(q_values)
    rows = np.arange(len(observed))
    grad[rows, np.argmax(q_values, axis=1)] += 1.0
    grad[rows, observed] -= 1.0
    return grad


class ConvergenceMonitor(object):
    """
    Converged when, over the last ``patience`` epochs, every relative loss
    change stays below ``loss_tol`` and the r_hat standard deviation stays
    below ``r_hat_tol``.  patience 0 never converges.
    """
    def __init__(self, patience=20, loss_tol=1e-4, r_hat_tol=1e-3):
        self.patience = patience
        self.loss_tol = loss_tol
        self.r_hat_tol = r_hat_tol
        self.losses = []
        self.r_hats = []

    def update(self, loss, r_hat=float("nan")):
        self.losses.append(float(loss))
        self.r_hats.append(float(r_hat))
        if self.patience <= 0 or len(self.losses) <= self.patience:
            return False
        window = np.array(self.losses[-(self.patience + 1):])
        rel = np.abs(np.diff(window)) / np.maximum(np.abs(window[:-1]), 1e-12)
        if np.any(rel >= self.loss_tol):
            return False
        r_hats = np.array(self.r_hats[-self.patience:])
        if np.all(np.isnan(r_hats)):
            return True
        return bool(np.nanstd(r_hats) < self.r_hat_tol)


class BaseModel(metaclass=ABCMeta):
    """Shared plumbing for the trainable components: optimizer, history, checkpoints."""

    def __init__(self):
        self.history = []
        self.epoch = 0
        self.built = False

    @abstractmethod
    def build_model(self, *args, **kwargs):
        pass

    @abstractmethod
    def fit(self, *args, **kwargs):
        raise NotImplementedError

    @abstractmethod
    def predict(self, *args, **kwargs):
        raise NotImplementedError

    @abstractmethod
    def hyperparameters(self):
        raise NotImplementedError

    @abstractmethod
    def networks(self):
        """Ordered mapping name -> Network covering every network the model owns."""
        raise NotImplementedError

    @abstractmethod
    def trainable(self):
        """Networks whose parameters the optimizer updates, in a fixed order."""
        raise NotImplementedError

    def _build_optimizer(self, kind, lr, lr_end, horizon, weight_decay=0.0):
        params = [p for net in self.trainable() for p in net.params()]
        logger.debug("%s: %d trainable parameters", type(self).__name__,
                     sum(net.n_params() for net in self.trainable()))
        self.optimizer = Optimizer(params, kind=kind, lr_start=lr, lr_end=lr_end,
                                   horizon=horizon, weight_decay=weight_decay)

    def _grads(self):
        return [g for net in self.trainable() for g in net.grads()]

    def _log_epoch(self, stage, epoch, t0, report, r_hat, verbose):
        if verbose > 0:
            logger.info("[{}] Epoch {}: training time: {:.4f}, loss: {:.6f}, td: {:.6f}, "
                        "reg: {:.6f}, hier: {:.6f}, r_hat: {:.6f}".format(
                            stage, epoch, time.time() - t0, report.total, report.td,
                            report.reg, report.hier, r_hat))

    def state_dict(self):
        return {"class": type(self).__name__,
                "hyperparameters": self.hyperparameters(),
                "state_dim": self.state_dim,
                "networks": {k: n.state_dict() for k, n in self.networks().items()},
                "optimizer": self.optimizer.state_dict(),
                "optimizer_horizon": self.optimizer.horizon,
                "rng": self.rng.get_state(),
                "epoch": self.epoch,
                "history": list(self.history)}

    def load_state_dict(self, state):
        if state["class"] != type(self).__name__:
            raise ValueError("checkpoint holds a {}, not a {}".format(
                state["class"], type(self).__name__))
        self.build_model(state["state_dim"], horizon=state["optimizer_horizon"])
        for name, net in self.networks().items():
            net.load_state_dict(state["networks"][name])
        self.optimizer.load_state_dict(state["optimizer"])
        self.rng.set_state(state["rng"])
        self.epoch = state["epoch"]
        self.history = list(state["history"])
        return self

    def save(self, path, manifest):
        save_checkpoint(path, self.state_dict(), manifest)

    def restore(self, path, expect=None):
        manifest, state = load_checkpoint(path, expect)
        self.load_state_dict(state)
        return manifest
