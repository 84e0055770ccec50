"""
Stage orchestration behind the command line.

An output directory holds one run: the dataset bundle, one checkpoint per
training stage, learning curves, simulated traces and the metrics report.
Training runs embeddings, reward model, appraisal agent and dialogue agent in
that order; later stages load the earlier checkpoints and refuse ones built
for a different taxonomy or embedding table.
"""
import json
import logging
import os
import numpy as np
from .algorithms import AppraisalAgent, DialogueAgent, RewardModel, PoincareEmbedding, \
    EmbeddingTable, ConvergenceMonitor, offline_policy_value
from .arena import build_realizer, build_responder, simulate_cases
from .config import STAGES
from .dataset import ActionTree, DatasetInquire, builtin_tree, build_embedder, \
    parse_corpus, write_corpus
from .dataset.synthetic import make_synthetic_corpus
from .evaluate import evaluate_run, write_report, write_learning_curve
from .exceptions import ConfigError, DependencyError, CheckpointMismatchError
from .network import BatchNorm, build_mlp, grad_check
from .rewards import RewardEngine
from .utils.serialization import make_manifest, save_checkpoint, load_checkpoint, \
    export_json, run_lock
from .utils.similarities import build_oracle

logger = logging.getLogger(__name__)

BUNDLE = "dataset.joblib"
SUMMARY = "dataset_summary.json"
CHECKPOINTS = {"embeddings": "embeddings.ckpt",
               "reward-model": "reward_model.ckpt",
               "appraisal": "appraisal.ckpt",
               "dialogue": "dialogue.ckpt"}
REPORT = "report.json"
TRACES = "traces.jsonl"


class RunContext(object):
    """Everything a stage needs that is derived from the config alone."""

    def __init__(self, config):
        self.config = config
        self.out = config.out
        self.tree = ActionTree.load(config.taxonomy) if config.taxonomy else builtin_tree()
        self.taxonomy_hash = self.tree.digest()

    def path(self, name):
        return os.path.join(self.out, name)

    def checkpoint_path(self, stage):
        return self.path(CHECKPOINTS[stage])

    def manifest(self, stage, embedding_hash=None, **extra):
        return make_manifest(stage, self.config.config_hash(), self.config.seed,
                             self.taxonomy_hash, embedding_hash, **extra)

    def expect(self, embedding_hash=None):
        expect = {"taxonomy_hash": self.taxonomy_hash}
        if embedding_hash is not None:
            expect["embedding_hash"] = embedding_hash
        return expect

    def monitor(self):
        c = self.config
        return ConvergenceMonitor(c.patience, c.loss_tol, c.r_hat_tol)

    def corpus_path(self):
        if not self.config.corpus:
            raise ConfigError("no corpus given; set 'corpus' in the config or pass --corpus")
        return self.config.corpus

    # providers

    def provider(self):
        c = self.config
        return build_embedder(c.embedder, n_features=c.d_raw, seed=c.seed,
                              **({"model": c.embed_model, "timeout": c.provider_timeout}
                                 if c.embedder == "remote" else {}))

    def reward_engine(self):
        c = self.config
        oracle = build_oracle(c.oracle, **({"timeout": c.provider_timeout}
                                           if c.oracle == "remote" else {}))
        return RewardEngine(c.effective_weights(), oracle)

    def realizer(self):
        c = self.config
        return build_realizer(c.realizer, **({"model": c.chat_model, "timeout": c.provider_timeout}
                                             if c.realizer == "remote" else {}))

    def responder(self):
        c = self.config
        return build_responder(c.responder, **({"model": c.chat_model,
                                                "timeout": c.provider_timeout}
                                               if c.responder == "remote" else {}))

    # components

    def make_embedding(self):
        c = self.config
        return PoincareEmbedding(dim=c.d_h, n_epochs=c.embed_epochs, lr=c.embed_lr,
                                 negative=c.embed_negatives, batch_size=c.embed_batch_size,
                                 burn_in=c.embed_burn_in, seed=c.seed)

    def make_reward_model(self, table):
        c = self.config
        return RewardModel(table, compress_units=c.compress_units, hidden_units=c.reward_units,
                           lr=c.reward_lr, lr_end=c.reward_lr_end, optimizer=c.optimizer,
                           n_epochs=c.reward_epochs, batch_size=c.batch_size,
                           batch_norm=c.batch_norm, test_size=c.test_size,
                           weight_decay=c.reward_weight_decay, seed=c.seed)

    def make_appraisal_agent(self):
        c = self.config
        return AppraisalAgent(compress_units=c.compress_units, gamma=c.gamma, tau=c.tau,
                              alpha=c.alpha, lr=c.appraisal_lr, lr_end=c.appraisal_lr_end,
                              optimizer=c.optimizer, n_epochs=c.appraisal_epochs,
                              batch_size=c.batch_size, batch_norm=c.batch_norm,
                              bootstrap_at_state=c.bootstrap_at_state, seed=c.seed)

    def make_dialogue_agent(self, table):
        c = self.config
        return DialogueAgent(self.tree, table, compress_units=c.compress_units,
                             scorer_units=c.scorer_units, gamma=c.gamma, tau=c.tau,
                             beta=c.beta, lam=c.lam, lr=c.dialogue_lr,
                             lr_end=c.dialogue_lr_end, optimizer=c.optimizer,
                             n_epochs=c.dialogue_epochs, batch_size=c.batch_size,
                             batch_norm=c.batch_norm, no_appraisal=c.no_appraisal,
                             bootstrap_at_state=c.bootstrap_at_state, seed=c.seed)

    # loading

    def load_dataset(self):
        path = self.path(BUNDLE)
        if not os.path.exists(path):
            raise DependencyError("no dataset bundle at {}; run ingest first".format(path))
        dataset = DatasetInquire.load(path)
        if dataset.taxonomy_hash != self.taxonomy_hash:
            raise CheckpointMismatchError("bundle {} was built for another taxonomy".format(path))
        return dataset

    def load_table(self):
        manifest, payload = load_checkpoint(self.checkpoint_path("embeddings"), self.expect())
        return EmbeddingTable.from_state(payload["table"])

    def load_reward_model(self, table):
        return self._restore("reward-model", self.make_reward_model(table), table)

    def load_appraisal_agent(self, table):
        return self._restore("appraisal", self.make_appraisal_agent(), table)

    def load_dialogue_agent(self, table):
        return self._restore("dialogue", self.make_dialogue_agent(table), table)

    def _restore(self, stage, model, table):
        model.restore(self.checkpoint_path(stage), self.expect(table.digest()))
        return model


def _behaviour_paths(dataset):
    return [dataset.path(r) for r in range(dataset.n_rounds)]


def cmd_ingest(config):
    """Parse, embed and score the corpus into a dataset bundle plus a JSON summary."""
    ctx = RunContext(config)
    corpus = ctx.corpus_path()
    with run_lock(ctx.out):
        dataset = DatasetInquire().build_dataset(corpus, ctx.reward_engine(), ctx.provider(),
                                                 ctx.tree, verbose=config.verbose)
        dataset.save(ctx.path(BUNDLE))
        summary = dict(dataset.summary(), config_hash=config.config_hash(), seed=config.seed)
        export_json(ctx.path(SUMMARY), summary)
    logger.info("ingested %d appraisal / %d hierarchical tuples into %s",
                summary["n_appraisal_tuples"], summary["n_hierarchical_tuples"],
                ctx.path(BUNDLE))
    return summary


def train_embeddings(ctx):
    model = ctx.make_embedding()
    table = model.fit(ctx.tree, verbose=ctx.config.verbose)
    payload = {"table": table.state_dict(), "loss_history": list(model.loss_history),
               "initial_loss": float(model.initial_loss), "final_loss": float(model.final_loss)}
    save_checkpoint(ctx.checkpoint_path("embeddings"), payload,
                    ctx.manifest("embeddings", table.digest()))
    write_learning_curve([{"epoch": i + 1, "loss": loss}
                          for i, loss in enumerate(model.loss_history)],
                         ctx.path("learning_curve_embeddings.csv"))
    return table


def _fit_stage(ctx, stage, model, dataset, table, resume, evaluator=None):
    path = ctx.checkpoint_path(stage)
    if resume and os.path.exists(path):
        model.restore(path, ctx.expect(table.digest()))
        logger.info("[%s] resuming from epoch %d", stage, model.epoch)
    model.fit(dataset, verbose=ctx.config.verbose, evaluator=evaluator, monitor=ctx.monitor())
    extra = {"epoch": model.epoch}
    if isinstance(model, RewardModel):
        extra["held_out_mse"] = model.held_out_mse
    model.save(path, ctx.manifest(stage, table.digest(), **extra))
    write_learning_curve(model.history,
                         ctx.path("learning_curve_{}.csv".format(stage.replace("-", "_"))))
    return model


def cmd_train(config, stage="all", resume=False):
    """
    Train one stage or all of them in order.  Returns {stage: checkpoint path}.

    :param resume: continue a stage from its existing checkpoint for another
                   configured number of epochs
    """
    if stage != "all" and stage not in STAGES:
        raise ConfigError("stage must be one of {} or 'all'".format(", ".join(STAGES)))
    stages = STAGES if stage == "all" else (stage,)
    ctx = RunContext(config)
    done = {}
    with run_lock(ctx.out):
        if "embeddings" in stages:
            table = train_embeddings(ctx)
            done["embeddings"] = ctx.checkpoint_path("embeddings")
            if stages == ("embeddings",):
                return done
        else:
            table = ctx.load_table()
        dataset = ctx.load_dataset()
        behaviour = _behaviour_paths(dataset)

        if "reward-model" in stages:
            reward_model = _fit_stage(ctx, "reward-model", ctx.make_reward_model(table),
                                      dataset, table, resume)
            done["reward-model"] = ctx.checkpoint_path("reward-model")
            logger.info("[reward-model] held-out mse: %.6f", reward_model.held_out_mse)
        else:
            reward_model = ctx.load_reward_model(table)

        if "appraisal" in stages:
            appraisal = _fit_stage(
                ctx, "appraisal", ctx.make_appraisal_agent(), dataset, table, resume,
                evaluator=lambda agent: offline_policy_value(reward_model, dataset.states,
                                                             agent, paths=behaviour))
            done["appraisal"] = ctx.checkpoint_path("appraisal")
        elif "dialogue" in stages:
            appraisal = ctx.load_appraisal_agent(table)

        if "dialogue" in stages:
            _fit_stage(ctx, "dialogue", ctx.make_dialogue_agent(table), dataset, table, resume,
                       evaluator=lambda agent: offline_policy_value(reward_model, dataset.states,
                                                                    appraisal, agent))
            done["dialogue"] = ctx.checkpoint_path("dialogue")
    return done


def _simulate(ctx, appraisal, dialogue, rounds):
    config = ctx.config
    cases = parse_corpus(ctx.corpus_path())
    max_rounds = config.max_rounds if rounds is None else rounds
    traces = simulate_cases(appraisal, dialogue, cases, ctx.responder(), ctx.realizer(),
                            ctx.provider(), ctx.tree, ctx.reward_engine(), max_rounds,
                            max_in_flight=config.max_in_flight, verbose=config.verbose)
    with open(ctx.path(TRACES), "w", encoding="utf-8") as f:
        for trace in traces:
            f.write(json.dumps(trace.to_dict(ctx.tree), sort_keys=True) + "\n")
    return cases, traces


def cmd_simulate(config, rounds=None):
    ctx = RunContext(config)
    with run_lock(ctx.out):
        table = ctx.load_table()
        _, traces = _simulate(ctx, ctx.load_appraisal_agent(table),
                              ctx.load_dialogue_agent(table), rounds)
    logger.info("simulated %d dialogues into %s", len(traces), ctx.path(TRACES))
    return traces


def cmd_evaluate(config, rounds=None, sweep=None):
    """Simulate every corpus case with the trained policy and write the metrics report."""
    ctx = RunContext(config)
    with run_lock(ctx.out):
        table = ctx.load_table()
        reward_model = ctx.load_reward_model(table)
        appraisal = ctx.load_appraisal_agent(table)
        dialogue = ctx.load_dialogue_agent(table)
        dataset = ctx.load_dataset()
        cases, traces = _simulate(ctx, appraisal, dialogue, rounds)
        r_hat = offline_policy_value(reward_model, dataset.states, appraisal, dialogue) \
            if dataset.n_rounds else None
        report = evaluate_run(traces, cases, gamma=config.mr_gamma,
                              coverage_mode=config.coverage_mode, r_hat=r_hat,
                              config_hash=config.config_hash(), seed=config.seed,
                              sweep_caps=sweep if sweep is not None else config.sweep,
                              topic_source=config.topic_source)
        write_report(ctx.path(REPORT), report)
    return report


def random_network(rng, max_layers=3, max_width=6, batch_norm=True):
    """Small random MLP with frozen, non-trivial batch-norm statistics."""
    n_layers = rng.randint(1, max_layers + 1)
    sizes = tuple(int(s) for s in rng.randint(2, max_width + 1, size=n_layers + 1))
    net = build_mlp(sizes, batch_norm=batch_norm, output_activation=bool(rng.randint(2)),
                    rng=rng)
    for layer in net.layers:
        if isinstance(layer, BatchNorm):
            layer.running_mean[...] = rng.normal(scale=0.5, size=layer.running_mean.shape)
            layer.running_var[...] = rng.uniform(0.5, 2.0, size=layer.running_var.shape)
            layer.gamma[...] = rng.uniform(0.5, 1.5, size=layer.gamma.shape)
            layer.beta[...] = rng.normal(scale=0.1, size=layer.beta.shape)
    return net.eval()


def cmd_grad_check(config, n_nets=25, tolerance=1e-4, batch_size=4):
    """Finite-difference check of ``n_nets`` random networks; returns the per-network results."""
    rng = np.random.RandomState(config.seed)
    results = []
    for i in range(n_nets):
        net = random_network(rng)
        batch = rng.normal(size=(batch_size, net.in_dim))
        result = grad_check(net, batch, tolerance=tolerance, seed=i)
        logger.info("net %d %s: max relative error %.3e (%d checked, %d skipped)",
                    i, [a for a in net.architecture() if a[0] == "dense"], result.max_error,
                    result.checked, result.skipped)
        results.append(result)
    return results


def cmd_synth(config, n_episodes=200, min_rounds=3, max_rounds=7):
    """Write a seeded synthetic corpus with a known reward function to ``config.corpus``."""
    ctx = RunContext(config)
    path = ctx.corpus_path()
    cases = make_synthetic_corpus(ctx.tree, n_episodes=n_episodes, seed=config.seed,
                                  min_rounds=min_rounds, max_rounds=max_rounds)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    write_corpus(cases, path)
    logger.info("wrote %d synthetic episodes to %s", len(cases), path)
    return cases
