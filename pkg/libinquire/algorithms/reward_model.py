"""
Reward model for offline policy evaluation.

r_hat(s, p, a) = head(concat(compressor(s), onehot(p), features(a))), fitted
by mean squared error on the reward tuples of the dataset.
"""
import time
import logging
from collections import OrderedDict
import numpy as np
from sklearn.model_selection import train_test_split
from sklearn.metrics import mean_squared_error
from .Base import BaseModel, ConvergenceMonitor
from .dialogue_agent import appraisal_indices
from ..dataset.taxonomy import N_APPRAISALS
from ..network import build_mlp
from ..utils.sampling import minibatches

logger = logging.getLogger(__name__)


class RewardModel(BaseModel):
    def __init__(self, table, compress_units=(64, 32), hidden_units=(64, 32), lr=1e-3,
                 lr_end=1e-5, lr_horizon=None, optimizer="adam", n_epochs=100,
                 batch_size=64, batch_norm=True, slope=0.01, test_size=0.1, weight_decay=1e-2,
                 restore_best=True, seed=42):
        self.table = table
        self.compress_units = tuple(compress_units)
        self.hidden_units = tuple(hidden_units)
        self.lr = lr
        self.lr_end = lr_end
        self.lr_horizon = lr_horizon
        self.optimizer_kind = optimizer
        self.n_epochs = n_epochs
        self.batch_size = batch_size
        self.batch_norm = batch_norm
        self.slope = slope
        self.test_size = test_size
        self.weight_decay = weight_decay
        self.restore_best = restore_best
        self.seed = seed
        self.held_out_mse = None
        super(RewardModel, self).__init__()

    def hyperparameters(self):
        return {"compress_units": self.compress_units, "hidden_units": self.hidden_units,
                "lr": self.lr, "lr_end": self.lr_end, "lr_horizon": self.lr_horizon,
                "optimizer": self.optimizer_kind, "n_epochs": self.n_epochs,
                "batch_size": self.batch_size, "batch_norm": self.batch_norm,
                "slope": self.slope, "test_size": self.test_size,
                "weight_decay": self.weight_decay, "restore_best": self.restore_best,
                "seed": self.seed}

    def build_model(self, state_dim, horizon=None):
        rng = np.random.RandomState(self.seed)
        self.state_dim = state_dim
        self.compressor = build_mlp((state_dim,) + self.compress_units,
                                    batch_norm=self.batch_norm, slope=self.slope, rng=rng)
        in_dim = self.compress_units[-1] + N_APPRAISALS + 3 * self.table.dim
        self.head = build_mlp((in_dim,) + self.hidden_units + (1,), batch_norm=False,
                              slope=self.slope, output_activation=False, rng=rng)
        # the untrained head predicts 0 for every state
        self.head.dense_layers[-1].W[...] = 0.0
        self._build_optimizer(self.optimizer_kind, self.lr, self.lr_end,
                              horizon if horizon is not None else self.lr_horizon,
                              weight_decay=self.weight_decay)
        self.rng = np.random.RandomState(self.seed + 1)
        self.built = True
        return self

    def networks(self):
        return OrderedDict([("compressor", self.compressor), ("head", self.head)])

    def trainable(self):
        return [self.compressor, self.head]

    def path_features(self, paths, lengths=None):
        """Embedded action paths, (n, 3 * d_h); ``paths`` may be -1 padded with ``lengths``."""
        if lengths is not None:
            paths = [tuple(int(a) for a in p[:l]) for p, l in zip(paths, lengths)]
        if len(paths) == 0:
            return np.zeros((0, 3 * self.table.dim))
        return np.stack([self.table.prefix_features(p) for p in paths])

    def _inputs(self, z, appraisals, feats):
        onehots = np.zeros((len(z), N_APPRAISALS))
        onehots[np.arange(len(z)), appraisal_indices(appraisals)] = 1.0
        return np.hstack([z, onehots, feats])

    def predict(self, states, appraisals, paths, lengths=None):
        return self._predict_features(states, appraisals, self.path_features(paths, lengths))

    def _predict_features(self, states, appraisals, feats):
        states = np.atleast_2d(np.asarray(states, dtype=np.float64))
        z = self.compressor.forward(states, training=False)
        return self.head.forward(self._inputs(z, appraisals, feats), training=False)[:, 0]

    def train_step(self, states, appraisals, feats, rewards):
        n = len(rewards)
        z = self.compressor.forward(states, training=True)
        pred = self.head.forward(self._inputs(z, appraisals, feats), training=True)[:, 0]
        err = pred - rewards
        d_in = self.head.backward((2.0 * err / n)[:, None])
        self.compressor.backward(d_in[:, :z.shape[1]])
        self.optimizer.step(self._grads())
        return float(np.mean(err ** 2))

    def split(self, n):
        """Train / held-out indices; datasets under ten tuples train and validate on everything."""
        indices = np.arange(n)
        if n < 10 or not self.test_size:
            return indices, indices
        return train_test_split(indices, test_size=self.test_size, random_state=self.seed)

    def fit(self, dataset, n_epochs=None, verbose=1, evaluator=None, monitor=None):
        states, appraisals, paths, lengths, rewards = dataset.reward_tuples()
        n = len(rewards)
        if n == 0:
            raise ValueError("cannot train the reward model on an empty dataset")
        n_epochs = self.n_epochs if n_epochs is None else n_epochs
        train_idx, held_idx = self.split(n)
        if not self.built:
            n_batches = int(np.ceil(len(train_idx) / float(self.batch_size)))
            self.build_model(states.shape[1], horizon=self.lr_horizon or
                             max(1, self.n_epochs * n_batches))
        feats = self.path_features(paths, lengths)
        monitor = monitor if monitor is not None else ConvergenceMonitor(patience=0)
        best_mse, best_epoch, best_state = np.inf, None, None

        for _ in range(n_epochs):
            t0 = time.time()
            self.epoch += 1
            losses = []
            for batch in minibatches(len(train_idx), self.batch_size, self.rng):
                idx = train_idx[batch]
                losses.append(self.train_step(states[idx], appraisals[idx], feats[idx],
                                              rewards[idx]))
            held = self._predict_features(states[held_idx], appraisals[held_idx],
                                          feats[held_idx])
            self.held_out_mse = float(mean_squared_error(rewards[held_idx], held))
            train_loss = float(np.mean(losses))
            if self.restore_best and self.held_out_mse < best_mse:
                best_mse, best_epoch = self.held_out_mse, self.epoch
                best_state = {name: net.state_dict() for name, net in self.networks().items()}
            self.history.append({"epoch": self.epoch, "total": train_loss, "td": train_loss,
                                 "reg": 0.0, "hier": 0.0, "hier_residual": 0.0,
                                 "held_out_mse": self.held_out_mse, "r_hat": float("nan"),
                                 "lr": self.optimizer.lr})
            if verbose > 0:
                logger.info("[reward-model] Epoch {}: training time: {:.4f}, loss: {:.6f}, "
                            "held-out mse: {:.6f}".format(self.epoch, time.time() - t0,
                                                          train_loss, self.held_out_mse))
            if monitor.update(train_loss):
                logger.info("[reward-model] converged after epoch %d", self.epoch)
                break
        if best_state is not None and best_mse < self.held_out_mse:
            logger.info("[reward-model] keeping weights with held-out mse %.6f from epoch %d",
                        best_mse, best_epoch)
            for name, net in self.networks().items():
                net.load_state_dict(best_state[name])
            self.held_out_mse = best_mse
        return self

    def state_dict(self):
        state = super(RewardModel, self).state_dict()
        state["held_out_mse"] = self.held_out_mse
        return state

    def load_state_dict(self, state):
        super(RewardModel, self).load_state_dict(state)
        self.held_out_mse = state.get("held_out_mse")
        return self

    @classmethod
    def from_state(cls, state, table):
        return cls(table, **state["hyperparameters"]).load_state_dict(state)


def offline_policy_value(model, states, appraisal_agent, dialogue_agent=None, paths=None):
    """
    Mean r_hat at the agents' greedy choices over ``states``.

    Without a dialogue agent the acts come from ``paths`` (the behaviour
    policy), which is how the appraisal stage is scored on its own.
    """
    states = np.asarray(states, dtype=np.float64)
    if states.ndim != 2 or len(states) == 0:
        raise ValueError("offline policy value needs a nonempty 2-d state array")
    appraisals = appraisal_agent.predict(states)
    if dialogue_agent is not None:
        paths = dialogue_agent.predict(states, appraisals)
    elif paths is None:
        raise ValueError("either a dialogue agent or behaviour paths are required")
    return float(np.mean(model.predict(states, appraisals, paths)))
