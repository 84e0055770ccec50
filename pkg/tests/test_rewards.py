import math
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from libinquire.dataset import Utterance, CaseRecord, tokenize
from libinquire.rewards import RewardEngine, VocabularyState, relevance_reward, \
    novelty_reward, succinct_reward, aggregate


class FixedOracle(object):
    def __init__(self, scores):
        self.scores = dict(scores)

    def __call__(self, a, b):
        return self.scores[a]


def attorney(text):
    return Utterance("attorney", text)


def test_relevance_takes_max_and_clamps():
    oracle = FixedOracle({"c1": 2.0, "c2": 4.5})
    assert relevance_reward(attorney("x"), ["c1", "c2"], oracle) == 4.5
    assert relevance_reward(attorney("x"), ["c1"], FixedOracle({"c1": 7.3})) == 5.0
    assert relevance_reward(attorney("x"), ["c1"], FixedOracle({"c1": -1.0})) == 0.0
    with pytest.raises(ValueError):
        relevance_reward(attorney("x"), [])


legal_words = st.sampled_from(["statute", "preempts", "rule", "agency", "warrant", "standing"])
conclusion = st.lists(legal_words, min_size=1, max_size=4).map(" ".join)


@settings(max_examples=50, deadline=None)
@given(st.lists(conclusion, min_size=1, max_size=5), st.randoms())
def test_relevance_ignores_sub_conclusion_order(conclusions, random):
    answer = attorney("the statute preempts the agency rule")
    shuffled = list(conclusions)
    random.shuffle(shuffled)
    assert relevance_reward(answer, shuffled) == relevance_reward(answer, conclusions)


def test_relevance_identical_text_default_oracle():
    text = "the agency exceeded its authority"
    assert relevance_reward(attorney(text), ["unrelated words", text]) == \
        pytest.approx(5.0, abs=1e-9)


@given(st.floats(min_value=-100, max_value=100, allow_nan=False))
def test_relevance_bounds(score):
    value = relevance_reward(attorney("x"), ["c"], FixedOracle({"c": score}))
    assert 0.0 <= value <= 5.0


def test_novelty_examples():
    vocab = VocabularyState("t{}".format(i) for i in range(10))
    expected = 3.0 / (10.0 * (1.0 - 0.9 ** 5))
    assert novelty_reward(attorney("t0 t1 n1 n2 n3"), vocab) == pytest.approx(expected)
    assert expected == pytest.approx(0.732584, abs=1e-5)
    assert novelty_reward(attorney("t0 t1 t2"), vocab) == 0.0
    assert novelty_reward(attorney("seen seen seen"), VocabularyState(["seen"])) == 0.0
    with pytest.raises(ValueError):
        novelty_reward(attorney(""), vocab)


def test_succinctness():
    assert succinct_reward(attorney("yes")) == 0.0
    assert succinct_reward(attorney(" ".join(["w"] * 10))) == pytest.approx(-2.302585, abs=1e-6)
    assert succinct_reward(attorney(" ".join(["w"] * 20))) < \
        succinct_reward(attorney(" ".join(["w"] * 5)))


def test_aggregate_examples():
    assert aggregate(5.0, 0.5, 0.0) == pytest.approx(1.35)
    assert aggregate(0.0, 0.0, 0.0) == 0.0
    assert aggregate(3.0, 9.0, -4.0, weights=(1.0, 0.0, 0.0)) == 3.0
    with pytest.raises(ValueError):
        aggregate(1.0, 1.0, 1.0, weights=(1.0, -1.0, 0.0))


def _brute_force_ead(question, turns):
    """Seen-set novelty recomputed from scratch for every turn."""
    values = []
    for k, (justice, answer) in enumerate(turns):
        seen = set(tokenize(question))
        for j, a in turns[:k]:
            seen |= set(tokenize(j)) | set(tokenize(a))
        seen |= set(tokenize(justice))
        tokens = tokenize(answer)
        n_new = len(set(tokens) - seen)
        V = len(seen)
        values.append(0.0 if n_new == 0 else n_new / (V * (1.0 - ((V - 1.0) / V) ** len(tokens))))
    return values


def test_novelty_matches_brute_force_on_random_dialogues():
    words = ["w{}".format(i) for i in range(30)]
    rng = np.random.RandomState(7)
    engine = RewardEngine()
    for d in range(20):
        question = " ".join(rng.choice(words, 4))
        turns = [(" ".join(rng.choice(words, rng.randint(1, 8))),
                  " ".join(rng.choice(words, rng.randint(1, 12))))
                 for _ in range(rng.randint(1, 8))]
        case = CaseRecord("d{}".format(d), "background", question, ("w0 w1",))
        vocab = engine.start(case)
        got = [engine.score_turn(Utterance("justice", j), attorney(a), case, vocab).novelty
               for j, a in turns]
        np.testing.assert_allclose(got, _brute_force_ead(question, turns), rtol=0, atol=1e-9)


def test_engine_weights_and_total():
    case = CaseRecord("c", "bg", "is the rule valid", ("the rule is valid",))
    engine = RewardEngine(weights=(0.2, 0.7, 0.1))
    vocab = engine.start(case)
    b = engine.score_turn(Utterance("justice", "why"), attorney("the rule is valid"), case, vocab)
    assert b.relevance == pytest.approx(5.0)
    assert b.succinctness == pytest.approx(-math.log(4))
    assert b.total == pytest.approx(0.2 * b.relevance + 0.7 * b.novelty + 0.1 * b.succinctness)
    assert vocab.V == len({"is", "the", "rule", "valid", "why"})
    with pytest.raises(ValueError):
        RewardEngine(weights=(1.0, 1.0))
