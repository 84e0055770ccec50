import logging
import os
import numpy as np
import requests
from sklearn.feature_extraction.text import CountVectorizer
from sklearn.metrics.pairwise import cosine_similarity
from ..exceptions import ProviderError

logger = logging.getLogger(__name__)

SIM_URL_ENV = "LIBINQUIRE_SIM_URL"
SIM_KEY_ENV = "LIBINQUIRE_SIM_KEY"
MAX_SCORE = 5.0


def _tokens(text):
    return text.lower().split()


class TfCosine(object):
    """Cosine similarity of term-frequency vectors over lowercased whitespace tokens."""

    def matrix(self, xs, ys):
        xs, ys = list(xs), list(ys)
        out = np.zeros((len(xs), len(ys)))
        if not xs or not ys or not any(_tokens(t) for t in xs + ys):
            return out
        vectorizer = CountVectorizer(analyzer=_tokens)
        counts = vectorizer.fit_transform(xs + ys).astype(np.float64)
        return cosine_similarity(counts[:len(xs)], counts[len(xs):])

    def __call__(self, a, b):
        return float(self.matrix([a], [b])[0, 0])


tf_cosine = TfCosine()


def similarity_matrix(sim, xs, ys):
    """sim(x, y) for every pair; uses a vectorised ``matrix`` method when sim has one."""
    if hasattr(sim, "matrix"):
        return np.asarray(sim.matrix(xs, ys), dtype=np.float64)
    return np.array([[float(sim(x, y)) for y in ys] for x in xs], dtype=np.float64).reshape(
        len(xs), len(ys))


class LexicalOracle(object):
    """Relevance oracle scoring in [0, 5]: five times the term-frequency cosine."""
    name = "lexical"

    def __call__(self, text_a, text_b):
        return MAX_SCORE * tf_cosine(text_a, text_b)

    def matrix(self, xs, ys):
        return MAX_SCORE * tf_cosine.matrix(xs, ys)


class RemoteOracle(object):
    """
    POST {"text_a": ..., "text_b": ...} -> {"score": float in [0, 5]}.

    Any failure falls back to the lexical oracle with a warning.
    """
    name = "remote"

    def __init__(self, url=None, api_key=None, timeout=30.0, fallback=None):
        self.url = url or os.environ.get(SIM_URL_ENV)
        self.api_key = api_key or os.environ.get(SIM_KEY_ENV)
        self.timeout = timeout
        self.fallback = fallback or LexicalOracle()

    def _request(self, text_a, text_b):
        if not self.url:
            raise ProviderError("similarity endpoint not configured", retriable=False)
        headers = {"Authorization": "Bearer {}".format(self.api_key)} if self.api_key else {}
        try:
            response = requests.post(self.url, json={"text_a": text_a, "text_b": text_b},
                                     headers=headers, timeout=self.timeout)
            response.raise_for_status()
            return float(response.json()["score"])
        except (requests.RequestException, KeyError, ValueError, TypeError) as e:
            raise ProviderError("similarity endpoint failed: {}".format(e))

    def __call__(self, text_a, text_b):
        try:
            return self._request(text_a, text_b)
        except ProviderError as e:
            logger.warning("%s, falling back to lexical similarity", e)
            return self.fallback(text_a, text_b)


def build_oracle(kind="lexical", **kwargs):
    if kind == "lexical":
        return LexicalOracle()
    elif kind == "remote":
        return RemoteOracle(**kwargs)
    raise ValueError("oracle kind must be either 'lexical' or 'remote'")
