import json
import numpy as np
import pytest
from libinquire.dataset import DatasetInquire, HashingEmbedder, builtin_tree, ActionTree

PROBE_ASSUMPTION = ["Question", "Probing question",
                    "Probe the assumption underlying the attorney's arguments"]
TEST_LIMITS = ["Make hypothesis", "Present hypothesis",
               "Present hypothetical situations to test legal limits"]
OPPOSE = ["Declaration", "Rejection", "Oppose the attorney's arguments"]

FIXTURE_CASES = [
    {"case_id": "case-a",
     "background": "The petitioner was fined under a state statute for selling raw milk.",
     "argued_question": "Does the federal statute preempt the state licensing rule?",
     "sub_conclusions": ["the federal statute preempts the state licensing rule",
                         "the fine must be vacated"],
     "topics": ["preemption", "licensing", "remedy"],
     "rounds": [
         {"justice_text": "What is the assumption behind your preemption argument?",
          "attorney_text": "We assume congress occupied the whole field of milk licensing.",
          "appraisal": "Dive deeper", "action_path": PROBE_ASSUMPTION},
         {"justice_text": "Suppose a state banned all milk sales, would that be preempted?",
          "attorney_text": "Yes, the federal statute preempts the state licensing rule.",
          "action_path": TEST_LIMITS},
     ]},
    {"case_id": "case-b",
     "background": "An agency denied a permit without a hearing.",
     "argued_question": "Did the agency exceed its authority?",
     "sub_conclusions": ["the agency exceeded its authority"],
     "topics": ["agency authority", "hearing"],
     "rounds": [
         {"justice_text": "I do not accept that the agency lacked authority here.",
          "attorney_text": "The statute requires a hearing before any denial.",
          "appraisal": "Spot weakness", "action_path": OPPOSE},
     ]},
]


@pytest.fixture
def tree():
    return builtin_tree()


@pytest.fixture
def provider():
    return HashingEmbedder(n_features=64, seed=42)


@pytest.fixture
def fixture_records():
    return json.loads(json.dumps(FIXTURE_CASES))


@pytest.fixture
def corpus_path(tmp_path, fixture_records):
    path = tmp_path / "cases.jsonl"
    with open(path, "w", encoding="utf-8") as f:
        for record in fixture_records:
            f.write(json.dumps(record) + "\n")
    return str(path)


@pytest.fixture
def small_tree():
    """One root with two subtypes, each with a single leaf."""
    return ActionTree([(0, 1, "Question", None), (1, 2, "A", 0), (2, 2, "B", 0),
                       (3, 3, "a", 1), (4, 3, "b", 2)])


def make_dataset(states, appraisals, paths, rewards, terminals=None, next_states=None,
                 next_appraisals=None):
    """DatasetInquire assembled directly from arrays, one row per round."""
    states = np.asarray(states, dtype=np.float64)
    n = len(states)
    dataset = DatasetInquire(states.shape[1])
    dataset.case_ids = np.array(["case-{}".format(i) for i in range(n)])
    dataset.round_index = np.zeros(n, dtype=np.int64)
    dataset.states = states
    dataset.next_states = states.copy() if next_states is None else \
        np.asarray(next_states, dtype=np.float64)
    dataset.appraisals = np.asarray(appraisals, dtype=np.int64)
    dataset.next_appraisals = np.full(n, 8, dtype=np.int64) if next_appraisals is None else \
        np.asarray(next_appraisals, dtype=np.int64)
    dataset.rewards = np.asarray(rewards, dtype=np.float64)
    dataset.terminals = np.ones(n, dtype=bool) if terminals is None else \
        np.asarray(terminals, dtype=bool)
    dataset.paths = np.array([list(p) + [-1] * (3 - len(p)) for p in paths], dtype=np.int64)
    dataset.path_lengths = np.array([len(p) for p in paths], dtype=np.int64)
    dataset.components = np.zeros((n, 3))
    h = [(r, level, a) for r, p in enumerate(paths) for level, a in enumerate(p)]
    dataset.h_round = np.array([x[0] for x in h], dtype=np.int64)
    dataset.h_level = np.array([x[1] for x in h], dtype=np.int64)
    dataset.h_action = np.array([x[2] for x in h], dtype=np.int64)
    return dataset


@pytest.fixture
def dataset_factory():
    return make_dataset
