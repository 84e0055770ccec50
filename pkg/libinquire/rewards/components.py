"""
Turn-level rewards for an attorney response: relevance to the case's
sub-conclusions, novelty as expectation-adjusted distinct tokens, and
succinctness as negative log length.
"""
import logging
import math
from dataclasses import dataclass, asdict
import numpy as np
from ..dataset.corpus import tokenize
from ..utils.similarities import LexicalOracle, MAX_SCORE

logger = logging.getLogger(__name__)

DEFAULT_WEIGHTS = (0.2, 0.7, 0.1)


def _tokens(u):
    return u.tokens if hasattr(u, "tokens") else tokenize(u)


def _text(u):
    return u.text if hasattr(u, "text") else u


@dataclass(frozen=True)
class RewardBreakdown:
    relevance: float
    novelty: float
    succinctness: float
    total: float

    def to_dict(self):
        return asdict(self)


class VocabularyState(object):
    def __init__(self, tokens=()):
        self.seen = set(tokens)

    @property
    def V(self):
        return len(self.seen)

    def update(self, tokens):
        self.seen.update(tokens)
        return self

    def copy(self):
        return VocabularyState(self.seen)


def relevance_reward(u_a_next, sub_conclusions, oracle=None):
    if not sub_conclusions:
        raise ValueError("relevance needs at least one sub-conclusion")
    oracle = oracle or LexicalOracle()
    text = _text(u_a_next)
    best = max(float(oracle(c, text)) for c in sub_conclusions)
    return float(np.clip(best, 0.0, MAX_SCORE))


def novelty_reward(u_a_next, vocab):
    tokens = _tokens(u_a_next)
    if not tokens:
        raise ValueError("novelty is undefined for an empty utterance")
    seen = vocab.seen if vocab.V > 0 else {tokens[0]}
    V = len(seen)
    n_new = len(set(tokens) - seen)
    if n_new == 0:
        return 0.0
    expected = V * (1.0 - ((V - 1.0) / V) ** len(tokens))
    return n_new / expected


def succinct_reward(u_a_next):
    n = len(_tokens(u_a_next))
    if n == 0:
        raise ValueError("succinctness is undefined for an empty utterance")
    return -math.log(n)


def aggregate(relevance, novelty, succinctness, weights=DEFAULT_WEIGHTS):
    w_rel, w_nov, w_cla = weights
    if min(weights) < 0:
        raise ValueError("reward weights must be non-negative")
    return w_rel * relevance + w_nov * novelty + w_cla * succinctness


class RewardEngine(object):
    """
    Scores attorney responses turn by turn while tracking the dialogue vocabulary.

    The vocabulary starts from the argued question; before each answer is
    scored it absorbs the justice turn the answer replies to, and the answer's
    own tokens are added only after scoring.
    """
    def __init__(self, weights=DEFAULT_WEIGHTS, oracle=None):
        if len(weights) != 3 or min(weights) < 0:
            raise ValueError("weights must be three non-negative numbers")
        self.weights = tuple(float(w) for w in weights)
        self.oracle = oracle or LexicalOracle()

    def start(self, case):
        return VocabularyState(tokenize(case.argued_question))

    def score_turn(self, justice, attorney, case, vocab):
        vocab.update(_tokens(justice))
        relevance = relevance_reward(attorney, case.sub_conclusions, self.oracle)
        novelty = novelty_reward(attorney, vocab)
        succinctness = succinct_reward(attorney)
        vocab.update(_tokens(attorney))
        total = aggregate(relevance, novelty, succinctness, self.weights)
        return RewardBreakdown(relevance, novelty, succinctness, total)

    def score_case(self, case):
        vocab = self.start(case)
        return [self.score_turn(r.justice, r.attorney, case, vocab) for r in case.rounds]
