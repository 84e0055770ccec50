"""
Text-embedding providers for dialogue contexts.

``HashingEmbedder`` is the default: a seeded bag-of-tokens feature hasher into
``n_features`` dimensions with L2 normalisation.  ``RemoteEmbedder`` posts to
an HTTP endpoint configured through environment variables.
"""
import hashlib
import logging
import os
import time
from dataclasses import dataclass
import numpy as np
import requests
from sklearn.feature_extraction.text import HashingVectorizer
from .corpus import tokenize
from ..exceptions import ProviderError

logger = logging.getLogger(__name__)

EMBED_URL_ENV = "LIBINQUIRE_EMBED_URL"
EMBED_KEY_ENV = "LIBINQUIRE_EMBED_KEY"


@dataclass(frozen=True)
class StateEmbedding:
    raw: np.ndarray
    provider_id: str
    content_hash: str

    @property
    def dim(self):
        return self.raw.shape[0]


def history_text(history):
    return "\n".join("{}: {}".format(u.speaker, u.text) for u in history)


def content_hash(text):
    return hashlib.sha1(text.encode("utf-8")).hexdigest()


class HashingEmbedder(object):
    def __init__(self, n_features=4096, seed=42):
        self.n_features = n_features
        self.seed = seed
        self.vectorizer = HashingVectorizer(n_features=n_features, analyzer=self._analyze,
                                            norm="l2", alternate_sign=True,
                                            dtype=np.float64)

    @property
    def provider_id(self):
        return "hashing:{}:{}".format(self.n_features, self.seed)

    def _analyze(self, text):
        salt = "{}|".format(self.seed)
        return [salt + t for t in tokenize(text)]

    def embed_texts(self, texts):
        return self.vectorizer.transform(list(texts)).toarray()


class RemoteEmbedder(object):
    """
    POST {"model": ..., "input": [...]} -> {"embeddings": [[...], ...]}.

    Endpoint and key come from LIBINQUIRE_EMBED_URL / LIBINQUIRE_EMBED_KEY.
    """
    def __init__(self, model, n_features, url=None, api_key=None, timeout=30.0, retries=2):
        self.model = model
        self.n_features = n_features
        self.url = url or os.environ.get(EMBED_URL_ENV)
        self.api_key = api_key or os.environ.get(EMBED_KEY_ENV)
        self.timeout = timeout
        self.retries = retries
        if not self.url:
            raise ProviderError("remote embedder needs {} to be set".format(EMBED_URL_ENV),
                                retriable=False)

    @property
    def provider_id(self):
        return "remote:{}:{}".format(self.model, self.n_features)

    def embed_texts(self, texts):
        headers = {"Authorization": "Bearer {}".format(self.api_key)} if self.api_key else {}
        payload = {"model": self.model, "input": list(texts)}
        last_error = None
        for attempt in range(self.retries + 1):
            try:
                response = requests.post(self.url, json=payload, headers=headers,
                                         timeout=self.timeout)
                response.raise_for_status()
                vectors = np.asarray(response.json()["embeddings"], dtype=np.float64)
                break
            except (requests.RequestException, KeyError, ValueError) as e:
                last_error = e
                logger.warning("embedding request failed (attempt %d/%d): %s",
                               attempt + 1, self.retries + 1, e)
                if attempt < self.retries:
                    time.sleep(min(2.0 ** attempt, 10.0))
        else:
            raise ProviderError("embedding endpoint {} unreachable: {}".format(self.url, last_error))
        if vectors.shape != (len(payload["input"]), self.n_features) or \
                not np.all(np.isfinite(vectors)):
            raise ProviderError("embedding endpoint returned shape {}, expected (n, {})".format(
                vectors.shape, self.n_features), retriable=False)
        return vectors


def build_embedder(kind="hashing", n_features=4096, seed=42, **kwargs):
    if kind == "hashing":
        return HashingEmbedder(n_features=n_features, seed=seed)
    elif kind == "remote":
        return RemoteEmbedder(n_features=n_features, **kwargs)
    raise ValueError("embedder kind must be either 'hashing' or 'remote'")


def embed_contexts(provider, histories):
    for h in histories:
        if not h:
            raise ValueError("cannot embed an empty history")
    texts = [history_text(h) for h in histories]
    vectors = provider.embed_texts(texts)
    return [StateEmbedding(v, provider.provider_id, content_hash(t))
            for v, t in zip(vectors, texts)]


def embed_context(provider, history):
    return embed_contexts(provider, [history])[0]
