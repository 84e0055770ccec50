"""
Hierarchical dialogue agent.

One scorer network rates a candidate act given the augmented state, the
embedded parent prefix and the candidate's own embedding; the same scorer
serves every level of the act tree.  Training minimises, per batch of
level-expanded tuples,

    mean_tuples (Q(s, prefix, a) - Y)^2
    + beta * mean_tuples (max_c Q(s, prefix, c) - Q(s, prefix, a))
    + lambda * mean_turns sum_l (Q(s, a_{l-1}) - max_c Q(s, a_{l-1}, c))^2

Every level bootstraps against the level-0 candidates of the next turn.
"""
import time
import logging
from collections import OrderedDict
import numpy as np
from .Base import BaseModel, LossReport, ddqn_target, ConvergenceMonitor
from ..dataset.taxonomy import Appraisal, N_APPRAISALS, MAX_DEPTH
from ..exceptions import TaxonomyError
from ..network import build_mlp, polyak_update
from ..utils.sampling import minibatches

logger = logging.getLogger(__name__)


def appraisal_indices(appraisals):
    return np.array([a.index if isinstance(a, Appraisal) else int(a) for a in appraisals],
                    dtype=np.int64)


class DialogueAgent(BaseModel):
    def __init__(self, tree, table, compress_units=(64, 32), scorer_units=(64, 32),
                 gamma=0.9, tau=0.005, beta=0.1, lam=1.0, lr=1e-6, lr_end=1e-8,
                 lr_horizon=None, optimizer="adam", n_epochs=20, batch_size=64,
                 batch_norm=True, slope=0.01, no_appraisal=False,
                 bootstrap_at_state=False, seed=42):
        if table.n_nodes != tree.n_nodes:
            raise TaxonomyError("embedding table has {} rows but the taxonomy has {} nodes"
                                .format(table.n_nodes, tree.n_nodes))
        self.tree = tree
        self.table = table
        self.compress_units = tuple(compress_units)
        self.scorer_units = tuple(scorer_units)
        self.gamma = gamma
        self.tau = tau
        self.beta = beta
        self.lam = lam
        self.lr = lr
        self.lr_end = lr_end
        self.lr_horizon = lr_horizon
        self.optimizer_kind = optimizer
        self.n_epochs = n_epochs
        self.batch_size = batch_size
        self.batch_norm = batch_norm
        self.slope = slope
        self.no_appraisal = no_appraisal
        self.bootstrap_at_state = bootstrap_at_state
        self.seed = seed
        super(DialogueAgent, self).__init__()

    def hyperparameters(self):
        return {"compress_units": self.compress_units, "scorer_units": self.scorer_units,
                "gamma": self.gamma, "tau": self.tau, "beta": self.beta, "lam": self.lam,
                "lr": self.lr, "lr_end": self.lr_end, "lr_horizon": self.lr_horizon,
                "optimizer": self.optimizer_kind, "n_epochs": self.n_epochs,
                "batch_size": self.batch_size, "batch_norm": self.batch_norm,
                "slope": self.slope, "no_appraisal": self.no_appraisal,
                "bootstrap_at_state": self.bootstrap_at_state, "seed": self.seed}

    @property
    def aug_dim(self):
        return self.compress_units[-1] + N_APPRAISALS

    def build_model(self, state_dim, horizon=None):
        rng = np.random.RandomState(self.seed)
        self.state_dim = state_dim
        self.compressor = build_mlp((state_dim,) + self.compress_units,
                                    batch_norm=self.batch_norm, slope=self.slope, rng=rng)
        in_dim = self.aug_dim + 3 * self.table.dim + self.table.dim
        self.scorer = build_mlp((in_dim,) + self.scorer_units + (1,), batch_norm=False,
                                slope=self.slope, output_activation=False, rng=rng)
        self.compressor_target = self.compressor.copy()
        self.scorer_target = self.scorer.copy()
        self._build_optimizer(self.optimizer_kind, self.lr, self.lr_end,
                              horizon if horizon is not None else self.lr_horizon)
        self.rng = np.random.RandomState(self.seed + 1)
        self.built = True
        return self

    def networks(self):
        return OrderedDict([("compressor", self.compressor), ("scorer", self.scorer),
                            ("compressor_target", self.compressor_target),
                            ("scorer_target", self.scorer_target)])

    def trainable(self):
        return [self.compressor, self.scorer]

    def _onehots(self, appraisals, n):
        onehots = np.zeros((n, N_APPRAISALS))
        if not self.no_appraisal:
            onehots[np.arange(n), appraisal_indices(appraisals)] = 1.0
        return onehots

    def augment(self, states, appraisals, target=False):
        """Eval-mode augmented states concat(compressor(s), onehot(p)), shape (n, aug_dim)."""
        states = np.atleast_2d(np.asarray(states, dtype=np.float64))
        compressor = self.compressor_target if target else self.compressor
        z = compressor.forward(states, training=False)
        return np.hstack([z, self._onehots(appraisals, len(states))])

    def _score_segments(self, s_aug, segments, net, training):
        """
        Score a batch of (row, prefix, candidates) segments in one forward pass.

        :return: q of shape (n_rows,), [start, end) bounds per segment, and the
                 augmented-state row each scorer row came from
        """
        blocks, bounds, owners = [], [], []
        start = 0
        for row, prefix, cands in segments:
            k = len(cands)
            blocks.append(np.hstack([np.repeat(s_aug[row][None, :], k, axis=0),
                                     np.repeat(self.table.prefix_features(prefix)[None, :], k,
                                               axis=0),
                                     self.table.candidate_features(cands)]))
            bounds.append((start, start + k))
            owners.extend([row] * k)
            start += k
        q = net.forward(np.vstack(blocks), training=training)[:, 0]
        return q, bounds, np.asarray(owners, dtype=np.int64)

    def _check_candidates(self, prefix, candidates):
        prefix = tuple(int(a) for a in prefix)
        if prefix and not self.tree.validate_path(prefix):
            raise TaxonomyError("invalid level prefix {}".format(prefix))
        allowed = self.tree.candidates(prefix)
        if candidates is None:
            return prefix, allowed
        candidates = [int(c) for c in candidates]
        stray = [c for c in candidates if c not in allowed]
        if stray:
            raise TaxonomyError("nodes {} are not children of prefix {}".format(stray, prefix))
        return prefix, candidates

    def level_q_values(self, s_aug, prefix=(), candidates=None, target=False):
        prefix, candidates = self._check_candidates(prefix, candidates)
        if not candidates:
            return np.zeros(0)
        s_aug = np.asarray(s_aug, dtype=np.float64).reshape(1, -1)
        net = self.scorer_target if target else self.scorer
        q, _, _ = self._score_segments(s_aug, [(0, prefix, candidates)], net, training=False)
        return q

    def select_paths(self, s_aug):
        """Greedy level-wise argmax for a batch of augmented states."""
        s_aug = np.atleast_2d(s_aug)
        prefixes = [() for _ in range(len(s_aug))]
        active = list(range(len(s_aug)))
        for _ in range(MAX_DEPTH):
            segments = [(i, prefixes[i], self.tree.candidates(prefixes[i])) for i in active]
            segments = [seg for seg in segments if seg[2]]
            if not segments:
                break
            q, bounds, _ = self._score_segments(s_aug, segments, self.scorer, training=False)
            for (i, _, cands), (s, e) in zip(segments, bounds):
                prefixes[i] = prefixes[i] + (cands[int(np.argmax(q[s:e]))],)
            active = [seg[0] for seg in segments]
        return prefixes

    def select_action_path(self, s_aug):
        return self.select_paths(np.asarray(s_aug).reshape(1, -1))[0]

    def predict(self, states, appraisals):
        return self.select_paths(self.augment(states, appraisals))

    def act(self, state, appraisal):
        return self.select_action_path(self.augment(state, [appraisal])[0])

    def _level0(self, s_aug, net):
        roots = list(self.tree.roots)
        segments = [(i, (), roots) for i in range(len(s_aug))]
        q, _, _ = self._score_segments(s_aug, segments, net, training=False)
        return q.reshape(len(s_aug), len(roots))

    def targets(self, dataset, rounds):
        """One DDQN target per round, bootstrapped on the next turn's level-0 candidates."""
        rewards = dataset.rewards[rounds].astype(np.float64)
        live = ~dataset.terminals[rounds].astype(bool)
        y = rewards.copy()
        if live.any():
            nxt = rounds[live]
            q_main = self._level0(self.augment(dataset.next_states[nxt],
                                               dataset.next_appraisals[nxt]), self.scorer)
            if self.bootstrap_at_state:
                source = self.augment(dataset.states[nxt], dataset.appraisals[nxt], target=True)
            else:
                source = self.augment(dataset.next_states[nxt], dataset.next_appraisals[nxt],
                                      target=True)
            q_target = self._level0(source, self.scorer_target)
            y[live] = ddqn_target(rewards[live], q_main, q_target, np.zeros(len(nxt)),
                                  self.gamma)
        return y

    def _path_segments(self, paths):
        """Candidate segments along each path: level l holds candidates(path[:l])."""
        segments, index = [], {}
        for j, path in enumerate(paths):
            for level in range(min(len(path) + 1, MAX_DEPTH)):
                prefix = path[:level]
                cands = self.tree.candidates(prefix)
                if not cands:
                    break
                index[(j, level)] = len(segments)
                segments.append((j, prefix, cands))
        return segments, index

    @staticmethod
    def _hier_pairs(paths, segments, index, bounds):
        """(turn, level, parent row, children segment bounds) for every parent with children."""
        for j, path in enumerate(paths):
            for level in range(1, MAX_DEPTH):
                child = index.get((j, level))
                if child is None:
                    continue
                parent = index[(j, level - 1)]
                parent_row = bounds[parent][0] + segments[parent][2].index(path[level - 1])
                yield j, level, parent_row, bounds[child]

    def train_step(self, dataset, indices):
        indices = np.asarray(indices, dtype=np.int64)
        n = len(indices)
        if n == 0:
            raise ValueError("train_step needs a nonempty batch")
        turns, turn_of = np.unique(dataset.h_round[indices], return_inverse=True)
        levels = dataset.h_level[indices]
        actions = dataset.h_action[indices]
        # eval-mode passes first: every forward overwrites the backward cache
        y = self.targets(dataset, turns)

        z = self.compressor.forward(dataset.states[turns], training=True)
        s_aug = np.hstack([z, self._onehots(dataset.appraisals[turns], len(turns))])
        paths = [dataset.path(r) for r in turns]
        segments, index = self._path_segments(paths)
        q, bounds, owners = self._score_segments(s_aug, segments, self.scorer, training=True)
        dq = np.zeros_like(q)

        td = np.empty(n)
        reg = np.empty(n)
        for k in range(n):
            seg = index.get((turn_of[k], levels[k]))
            cands = segments[seg][2] if seg is not None else []
            if actions[k] not in cands:
                raise TaxonomyError("invalid level prefix for round {}: node {} at level {}"
                                    .format(turns[turn_of[k]], actions[k], levels[k]))
            s, e = bounds[seg]
            row = s + cands.index(actions[k])
            best = s + int(np.argmax(q[s:e]))
            td[k] = q[row] - y[turn_of[k]]
            reg[k] = q[best] - q[row]
            dq[row] += 2.0 * td[k] / n
            if self.beta and best != row:
                dq[best] += self.beta / n
                dq[row] -= self.beta / n

        hier = np.zeros(len(turns))
        residual = 0.0
        for j, _, parent_row, (s, e) in self._hier_pairs(paths, segments, index, bounds):
            best = s + int(np.argmax(q[s:e]))
            res = q[parent_row] - q[best]
            hier[j] += res ** 2
            residual = max(residual, abs(res))
            if self.lam:
                dq[parent_row] += self.lam * 2.0 * res / len(turns)
                dq[best] -= self.lam * 2.0 * res / len(turns)

        d_rows = self.scorer.backward(dq[:, None])
        dz = np.zeros_like(z)
        np.add.at(dz, owners, d_rows[:, :z.shape[1]])
        self.compressor.backward(dz)
        self.optimizer.step(self._grads())
        polyak_update(self.compressor_target, self.compressor, self.tau)
        polyak_update(self.scorer_target, self.scorer, self.tau)

        td_loss, reg_loss, hier_loss = float(np.mean(td ** 2)), float(np.mean(reg)), \
            float(np.mean(hier))
        return LossReport(total=td_loss + self.beta * reg_loss + self.lam * hier_loss,
                          td=td_loss, reg=reg_loss, hier=hier_loss, hier_residual=residual)

    def hier_residuals(self, dataset, rounds=None):
        """
        |Q(s, a_{l-1}) - max_c Q(s, a_{l-1}, c)| per round in eval mode.

        :return: array (n_rounds, 2); NaN where the path has no parent with children at that level
        """
        rounds = np.arange(dataset.n_rounds) if rounds is None else np.asarray(rounds)
        out = np.full((len(rounds), MAX_DEPTH - 1), np.nan)
        if len(rounds) == 0:
            return out
        s_aug = self.augment(dataset.states[rounds], dataset.appraisals[rounds])
        paths = [dataset.path(r) for r in rounds]
        segments, index = self._path_segments(paths)
        q, bounds, _ = self._score_segments(s_aug, segments, self.scorer, training=False)
        for j, level, parent_row, (s, e) in self._hier_pairs(paths, segments, index, bounds):
            out[j, level - 1] = abs(q[parent_row] - q[s:e].max())
        return out

    def fit(self, dataset, n_epochs=None, verbose=1, evaluator=None, monitor=None):
        n = dataset.n_hierarchical
        if n == 0:
            raise ValueError("cannot train the dialogue agent on an empty dataset")
        n_epochs = self.n_epochs if n_epochs is None else n_epochs
        if not self.built:
            n_batches = int(np.ceil(n / float(self.batch_size)))
            self.build_model(dataset.state_dim, horizon=self.lr_horizon or
                             max(1, self.n_epochs * n_batches))
        monitor = monitor if monitor is not None else ConvergenceMonitor(patience=0)

        for _ in range(n_epochs):
            t0 = time.time()
            self.epoch += 1
            reports = [self.train_step(dataset, idx)
                       for idx in minibatches(n, self.batch_size, self.rng)]
            residuals = self.hier_residuals(dataset)
            residuals = residuals[~np.isnan(residuals)]
            residual = float(residuals.max()) if len(residuals) else 0.0
            report = LossReport(total=float(np.mean([r.total for r in reports])),
                                td=float(np.mean([r.td for r in reports])),
                                reg=float(np.mean([r.reg for r in reports])),
                                hier=float(np.mean([r.hier for r in reports])),
                                hier_residual=residual)
            r_hat = float(evaluator(self)) if evaluator is not None else float("nan")
            self.history.append(dict(report.to_dict(), epoch=self.epoch, r_hat=r_hat,
                                     lr=self.optimizer.lr))
            self._log_epoch("dialogue", self.epoch, t0, report, r_hat, verbose)
            if verbose > 1:
                logger.debug("[dialogue] Epoch %d: max hier residual %.6f", self.epoch, residual)
            if monitor.update(report.total, r_hat):
                logger.info("[dialogue] converged after epoch %d", self.epoch)
                break
        return self

    @classmethod
    def from_state(cls, state, tree, table):
        return cls(tree, table, **state["hyperparameters"]).load_state_dict(state)
