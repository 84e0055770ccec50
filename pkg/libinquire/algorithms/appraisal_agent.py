"""
Appraisal agent: flat conservative double DQN over the appraisal classes.

Q(s, .) = head(compressor(s)); the loss per batch is
mean (Q(s, p) - Y)^2 + alpha * mean (max_p' Q(s, p') - Q(s, p)).
"""
import time
import logging
from collections import OrderedDict
import numpy as np
from .Base import BaseModel, LossReport, ddqn_target, conservative_reg, \
    conservative_reg_grad, ConvergenceMonitor
from ..dataset.taxonomy import Appraisal, N_APPRAISALS
from ..network import build_mlp, polyak_update
from ..utils.sampling import minibatches

logger = logging.getLogger(__name__)


class AppraisalAgent(BaseModel):
    def __init__(self, n_actions=N_APPRAISALS, compress_units=(64, 32), head_units=(),
                 gamma=0.9, tau=0.005, alpha=0.1, lr=1e-6, lr_end=3e-9, lr_horizon=None,
                 optimizer="adam", n_epochs=20, batch_size=64, batch_norm=True, slope=0.01,
                 bootstrap_at_state=False, seed=42):
        self.n_actions = n_actions
        self.compress_units = tuple(compress_units)
        self.head_units = tuple(head_units)
        self.gamma = gamma
        self.tau = tau
        self.alpha = alpha
        self.lr = lr
        self.lr_end = lr_end
        self.lr_horizon = lr_horizon
        self.optimizer_kind = optimizer
        self.n_epochs = n_epochs
        self.batch_size = batch_size
        self.batch_norm = batch_norm
        self.slope = slope
        self.bootstrap_at_state = bootstrap_at_state
        self.seed = seed
        super(AppraisalAgent, self).__init__()

    def hyperparameters(self):
        return {"n_actions": self.n_actions, "compress_units": self.compress_units,
                "head_units": self.head_units, "gamma": self.gamma, "tau": self.tau,
                "alpha": self.alpha, "lr": self.lr, "lr_end": self.lr_end,
                "lr_horizon": self.lr_horizon, "optimizer": self.optimizer_kind,
                "n_epochs": self.n_epochs, "batch_size": self.batch_size,
                "batch_norm": self.batch_norm, "slope": self.slope,
                "bootstrap_at_state": self.bootstrap_at_state, "seed": self.seed}

    def build_model(self, state_dim, horizon=None):
        rng = np.random.RandomState(self.seed)
        self.state_dim = state_dim
        self.compressor = build_mlp((state_dim,) + self.compress_units,
                                    batch_norm=self.batch_norm, slope=self.slope, rng=rng)
        self.head = build_mlp(self.compress_units[-1:] + self.head_units + (self.n_actions,),
                              batch_norm=False, slope=self.slope, output_activation=False,
                              rng=rng)
        self.compressor_target = self.compressor.copy()
        self.head_target = self.head.copy()
        self._build_optimizer(self.optimizer_kind, self.lr, self.lr_end,
                              horizon if horizon is not None else self.lr_horizon)
        self.rng = np.random.RandomState(self.seed + 1)
        self.built = True
        return self

    def networks(self):
        return OrderedDict([("compressor", self.compressor), ("head", self.head),
                            ("compressor_target", self.compressor_target),
                            ("head_target", self.head_target)])

    def trainable(self):
        return [self.compressor, self.head]

    def q_values(self, states, target=False):
        """Eval-mode Q-values, shape (n, n_actions)."""
        states = np.atleast_2d(np.asarray(states, dtype=np.float64))
        compressor, head = (self.compressor_target, self.head_target) if target else \
            (self.compressor, self.head)
        return head.forward(compressor.forward(states, training=False), training=False)

    def predict(self, states):
        """Greedy appraisal index per state; ties go to the lowest index."""
        return np.argmax(self.q_values(states), axis=1)

    def select_appraisal(self, state):
        index = int(self.predict(state)[0])
        if self.n_actions == N_APPRAISALS:
            return Appraisal.from_index(index)
        return index

    def targets(self, rewards, next_states, terminals, states=None):
        q_main_next = self.q_values(next_states)
        source = states if self.bootstrap_at_state else next_states
        q_target = self.q_values(source, target=True)
        return ddqn_target(rewards, q_main_next, q_target, terminals, self.gamma)

    def train_step(self, states, actions, rewards, next_states, terminals):
        states = np.asarray(states, dtype=np.float64)
        actions = np.asarray(actions, dtype=np.int64)
        n = len(actions)
        if n == 0:
            raise ValueError("train_step needs a nonempty batch")
        # eval-mode passes first: every forward overwrites the backward cache
        y = self.targets(rewards, next_states, terminals, states)

        q = self.head.forward(self.compressor.forward(states, training=True), training=True)
        rows = np.arange(n)
        td = q[rows, actions] - y
        reg = conservative_reg(q, actions)
        td_loss = float(np.mean(td ** 2))
        reg_loss = float(np.mean(reg))

        dq = np.zeros_like(q)
        dq[rows, actions] = 2.0 * td / n
        if self.alpha:
            dq += (self.alpha / n) * conservative_reg_grad(q, actions)
        self.compressor.backward(self.head.backward(dq))
        self.optimizer.step(self._grads())
        polyak_update(self.compressor_target, self.compressor, self.tau)
        polyak_update(self.head_target, self.head, self.tau)
        return LossReport(total=td_loss + self.alpha * reg_loss, td=td_loss, reg=reg_loss)

    def fit(self, dataset, n_epochs=None, verbose=1, evaluator=None, monitor=None):
        """
        :param dataset: DatasetInquire (its appraisal tuples are used)
        :param n_epochs: epochs to run from the current state, defaults to ``self.n_epochs``
        :param evaluator: callable(agent) -> offline r_hat, logged per epoch
        :param monitor: ConvergenceMonitor; training stops early once it reports convergence
        """
        states, actions, rewards, next_states, terminals = dataset.appraisal_tuples()
        n = len(rewards)
        if n == 0:
            raise ValueError("cannot train the appraisal agent on an empty dataset")
        n_epochs = self.n_epochs if n_epochs is None else n_epochs
        if not self.built:
            n_batches = int(np.ceil(n / float(self.batch_size)))
            self.build_model(states.shape[1], horizon=self.lr_horizon or
                             max(1, self.n_epochs * n_batches))
        monitor = monitor if monitor is not None else ConvergenceMonitor(patience=0)

        for _ in range(n_epochs):
            t0 = time.time()
            self.epoch += 1
            reports = [self.train_step(states[idx], actions[idx], rewards[idx],
                                       next_states[idx], terminals[idx])
                       for idx in minibatches(n, self.batch_size, self.rng)]
            report = LossReport(total=float(np.mean([r.total for r in reports])),
                                td=float(np.mean([r.td for r in reports])),
                                reg=float(np.mean([r.reg for r in reports])))
            r_hat = float(evaluator(self)) if evaluator is not None else float("nan")
            self.history.append(dict(report.to_dict(), epoch=self.epoch, r_hat=r_hat,
                                     lr=self.optimizer.lr))
            self._log_epoch("appraisal", self.epoch, t0, report, r_hat, verbose)
            if monitor.update(report.total, r_hat):
                logger.info("[appraisal] converged after epoch %d", self.epoch)
                break
        return self

    @classmethod
    def from_state(cls, state):
        return cls(**state["hyperparameters"]).load_state_dict(state)
