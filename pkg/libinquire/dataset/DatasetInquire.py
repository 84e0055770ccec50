"""
Offline transition dataset built from a parsed corpus.

Rows are dialogue rounds.  The appraisal set and the reward set are the rows
themselves; the hierarchical set expands each round's action path into one
tuple per level, sharing the round's state, appraisal, reward, next state and
terminal flag.
"""
import logging
import joblib
import numpy as np
from tqdm import tqdm
from .corpus import parse_corpus, round_appraisal
from .embedding import embed_contexts
from .taxonomy import Appraisal
from ..exceptions import DataError, TaxonomyError

logger = logging.getLogger(__name__)

OTHERWISE = Appraisal.from_label("Otherwise").index
BUNDLE_SCHEMA = 1


class DatasetInquire(object):
    array_fields = ("case_ids", "round_index", "states", "next_states", "appraisals",
                    "next_appraisals", "rewards", "terminals", "paths", "path_lengths",
                    "components", "h_round", "h_level", "h_action")

    def __init__(self, state_dim=0):
        self.state_dim = state_dim
        self.case_ids = np.zeros(0, dtype="<U1")
        self.round_index = np.zeros(0, dtype=np.int64)
        self.states = np.zeros((0, state_dim))
        self.next_states = np.zeros((0, state_dim))
        self.appraisals = np.zeros(0, dtype=np.int64)
        self.next_appraisals = np.zeros(0, dtype=np.int64)
        self.rewards = np.zeros(0)
        self.terminals = np.zeros(0, dtype=bool)
        self.paths = np.zeros((0, 3), dtype=np.int64)
        self.path_lengths = np.zeros(0, dtype=np.int64)
        self.components = np.zeros((0, 3))
        self.h_round = np.zeros(0, dtype=np.int64)
        self.h_level = np.zeros(0, dtype=np.int64)
        self.h_action = np.zeros(0, dtype=np.int64)
        self.provider_id = None
        self.taxonomy_hash = None

    def build_dataset(self, corpus_path, rewards, provider, tree, verbose=1):
        cases = parse_corpus(corpus_path)
        return build_transitions(cases, rewards, provider, tree, verbose=verbose, dataset=self)

    @property
    def n_rounds(self):
        return len(self.rewards)

    @property
    def n_hierarchical(self):
        return len(self.h_round)

    def prefix(self, i):
        """Parent prefix of hierarchical tuple ``i``."""
        return tuple(int(a) for a in self.paths[self.h_round[i], :self.h_level[i]])

    def path(self, r):
        return tuple(int(a) for a in self.paths[r, :self.path_lengths[r]])

    def appraisal_tuples(self):
        return self.states, self.appraisals, self.rewards, self.next_states, self.terminals

    def reward_tuples(self):
        return self.states, self.appraisals, self.paths, self.path_lengths, self.rewards

    def summary(self):
        return {"schema_version": BUNDLE_SCHEMA,
                "n_cases": int(len(np.unique(self.case_ids))),
                "n_appraisal_tuples": self.n_rounds,
                "n_hierarchical_tuples": self.n_hierarchical,
                "n_reward_tuples": self.n_rounds,
                "state_dim": int(self.state_dim),
                "mean_reward": float(self.rewards.mean()) if self.n_rounds else 0.0,
                "provider_id": self.provider_id,
                "taxonomy_hash": self.taxonomy_hash}

    def state_dict(self):
        state = {name: getattr(self, name) for name in self.array_fields}
        state.update(state_dim=self.state_dim, provider_id=self.provider_id,
                     taxonomy_hash=self.taxonomy_hash, schema_version=BUNDLE_SCHEMA)
        return state

    def save(self, path):
        with open(path, "wb") as f:
            joblib.dump(self.state_dict(), f)

    @classmethod
    def load(cls, path):
        with open(path, "rb") as f:
            state = joblib.load(f)
        if state.get("schema_version") != BUNDLE_SCHEMA:
            raise DataError("bundle {} has schema {}, expected {}".format(
                path, state.get("schema_version"), BUNDLE_SCHEMA))
        dataset = cls(state["state_dim"])
        for name in cls.array_fields:
            setattr(dataset, name, state[name])
        dataset.provider_id = state["provider_id"]
        dataset.taxonomy_hash = state["taxonomy_hash"]
        return dataset


def build_transitions(cases, rewards, provider, tree, verbose=1, dataset=None):
    rows = {name: [] for name in DatasetInquire.array_fields}
    state_dim = getattr(provider, "n_features", 0)

    for case in tqdm(cases, desc="ingest", disable=verbose < 2):
        n = len(case.rounds)
        if n == 0:
            continue
        contexts = embed_contexts(provider, [case.context(t) for t in range(n + 1)])
        vocab = rewards.start(case)
        appraisals = [round_appraisal(case, t).index for t in range(n)]

        for t, rnd in enumerate(case.rounds):
            where = "case {!r} round {}".format(case.case_id, t)
            if rnd.action_path is None:
                raise DataError("{}: missing action path".format(where))
            try:
                path = tree.resolve_labels(rnd.action_path)
            except TaxonomyError as e:
                raise DataError("{}: invalid action path: {}".format(where, e))
            try:
                breakdown = rewards.score_turn(rnd.justice, rnd.attorney, case, vocab)
            except ValueError as e:
                raise DataError("{}: {}".format(where, e))

            r = len(rows["rewards"])
            rows["case_ids"].append(case.case_id)
            rows["round_index"].append(t)
            rows["states"].append(contexts[t].raw)
            rows["next_states"].append(contexts[t + 1].raw)
            rows["appraisals"].append(appraisals[t])
            rows["next_appraisals"].append(appraisals[t + 1] if t + 1 < n else OTHERWISE)
            rows["rewards"].append(breakdown.total if rnd.reward is None else rnd.reward)
            rows["terminals"].append(t == n - 1)
            rows["paths"].append(list(path) + [-1] * (3 - len(path)))
            rows["path_lengths"].append(len(path))
            rows["components"].append([breakdown.relevance, breakdown.novelty,
                                       breakdown.succinctness])
            for level, action in enumerate(path):
                rows["h_round"].append(r)
                rows["h_level"].append(level)
                rows["h_action"].append(action)
        state_dim = contexts[0].dim

    dataset = dataset if dataset is not None else DatasetInquire(state_dim)
    dataset.state_dim = state_dim
    empty = DatasetInquire(state_dim)
    for name in DatasetInquire.array_fields:
        template = getattr(empty, name)
        values = rows[name]
        if name == "case_ids":
            array = np.array(values, dtype=str) if values else template
        elif values:
            array = np.asarray(values, dtype=template.dtype)
        else:
            array = template
        setattr(dataset, name, array)
    dataset.provider_id = getattr(provider, "provider_id", None)
    dataset.taxonomy_hash = tree.digest()
    logger.info("built %d appraisal, %d hierarchical and %d reward tuples",
                dataset.n_rounds, dataset.n_hierarchical, dataset.n_rounds)
    return dataset
