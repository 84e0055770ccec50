"""
Run configuration.

Values come from the dataclass defaults, then a JSON file, then command-line
flags, later sources winning.  Credentials for remote providers are read from
the environment only and never stored here.
"""
import hashlib
import json
import logging
from dataclasses import dataclass, field, fields, asdict, replace
from typing import Optional, Tuple
from .exceptions import ConfigError

logger = logging.getLogger(__name__)

STAGES = ("embeddings", "reward-model", "appraisal", "dialogue")
ABLATIONS = {"relevance": 0, "novelty": 1, "succinctness": 2}
# not part of config_hash
UNHASHED = ("out", "verbose")


@dataclass(frozen=True)
class RunConfig:
    corpus: Optional[str] = None
    out: str = "runs/default"
    taxonomy: Optional[str] = None
    verbose: int = 1

    # providers
    embedder: str = "hashing"
    embed_model: Optional[str] = None
    oracle: str = "lexical"
    realizer: str = "template"
    responder: str = "scripted"
    chat_model: Optional[str] = None
    provider_timeout: float = 60.0
    max_in_flight: int = 1

    # representation
    d_raw: int = 4096
    d_h: int = 8
    compress_units: Tuple[int, ...] = (64, 32)
    scorer_units: Tuple[int, ...] = (64, 32)
    reward_units: Tuple[int, ...] = (64, 32)
    batch_norm: bool = True

    # hyperbolic embeddings
    embed_epochs: int = 500
    embed_lr: float = 0.1
    embed_negatives: int = 10
    embed_batch_size: int = 10
    embed_burn_in: int = 10

    # rewards
    reward_weights: Tuple[float, float, float] = (0.2, 0.7, 0.1)
    ablate: Optional[str] = None

    # agents
    gamma: float = 0.9
    tau: float = 0.005
    alpha: float = 0.1
    beta: float = 0.1
    lam: float = 1.0
    bootstrap_at_state: bool = False
    no_appraisal: bool = False
    optimizer: str = "adam"
    appraisal_lr: float = 1e-6
    appraisal_lr_end: float = 3e-9
    dialogue_lr: float = 1e-6
    dialogue_lr_end: float = 1e-8
    reward_lr: float = 1e-3
    reward_lr_end: float = 1e-5
    reward_weight_decay: float = 1e-2
    appraisal_epochs: int = 20
    dialogue_epochs: int = 20
    reward_epochs: int = 100
    batch_size: int = 64
    test_size: float = 0.1
    patience: int = 20
    loss_tol: float = 1e-4
    r_hat_tol: float = 1e-3

    # simulation and metrics
    seed: int = 42
    max_rounds: int = 10
    mr_gamma: float = 0.7
    coverage_mode: str = "simulated"
    topic_source: str = "tags"
    sweep: Tuple[int, ...] = field(default_factory=tuple)

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]

    @classmethod
    def from_dict(cls, values):
        unknown = sorted(set(values) - set(cls.field_names()))
        if unknown:
            raise ConfigError("unknown config keys: {}".format(", ".join(unknown)))
        tuples = {f.name for f in fields(cls) if "Tuple" in str(f.type)}
        values = {k: tuple(v) if k in tuples and v is not None else v
                  for k, v in values.items()}
        try:
            return cls(**values).validate()
        except TypeError as e:
            raise ConfigError("invalid config value: {}".format(e))

    @classmethod
    def from_file(cls, path):
        try:
            with open(path, "r", encoding="utf-8") as f:
                values = json.load(f)
        except OSError as e:
            raise ConfigError("cannot read config file {}: {}".format(path, e))
        except ValueError as e:
            raise ConfigError("config file {} is not valid JSON: {}".format(path, e))
        if not isinstance(values, dict):
            raise ConfigError("config file {} must hold a JSON object".format(path))
        return cls.from_dict(values)

    def with_overrides(self, **overrides):
        """Copy with every non-None override applied."""
        overrides = {k: v for k, v in overrides.items() if v is not None}
        merged = dict(self.to_dict(), **overrides)
        return type(self).from_dict(merged)

    def to_dict(self):
        return asdict(self)

    def config_hash(self):
        payload = {k: v for k, v in self.to_dict().items() if k not in UNHASHED}
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def effective_weights(self):
        weights = list(self.reward_weights)
        if self.ablate is not None:
            weights[ABLATIONS[self.ablate]] = 0.0
        return tuple(weights)

    def validate(self):
        def check(ok, message):
            if not ok:
                raise ConfigError(message)

        check(self.d_raw >= 1 and self.d_h >= 1, "d_raw and d_h must be positive")
        for name in ("compress_units", "scorer_units", "reward_units"):
            units = getattr(self, name)
            check(len(units) >= 1 and all(int(u) >= 1 for u in units),
                  "{} must be a nonempty list of positive widths".format(name))
        check(0.0 <= self.gamma <= 1.0, "gamma must be in [0, 1]")
        check(0.0 <= self.tau <= 1.0, "tau must be in [0, 1]")
        check(0.0 <= self.mr_gamma <= 1.0, "mr_gamma must be in [0, 1]")
        for name in ("alpha", "beta", "lam", "reward_weight_decay"):
            check(getattr(self, name) >= 0.0, "{} must be non-negative".format(name))
        check(len(self.reward_weights) == 3 and min(self.reward_weights) >= 0.0,
              "reward_weights must be three non-negative numbers")
        check(self.ablate is None or self.ablate in ABLATIONS,
              "ablate must be one of {}".format(sorted(ABLATIONS)))
        for name in ("appraisal_lr", "appraisal_lr_end", "dialogue_lr", "dialogue_lr_end",
                     "reward_lr", "reward_lr_end", "embed_lr"):
            check(getattr(self, name) > 0.0, "{} must be positive".format(name))
        for name in ("appraisal_epochs", "dialogue_epochs", "reward_epochs", "embed_epochs",
                     "embed_burn_in", "patience", "max_rounds"):
            check(getattr(self, name) >= 0, "{} must be non-negative".format(name))
        for name in ("batch_size", "embed_batch_size", "embed_negatives", "max_in_flight"):
            check(getattr(self, name) >= 1, "{} must be at least 1".format(name))
        check(0.0 <= self.test_size < 1.0, "test_size must be in [0, 1)")
        check(self.optimizer in ("adam", "sgd"), "optimizer must be 'adam' or 'sgd'")
        check(self.embedder in ("hashing", "remote"), "embedder must be 'hashing' or 'remote'")
        check(self.oracle in ("lexical", "remote"), "oracle must be 'lexical' or 'remote'")
        check(self.realizer in ("template", "remote"), "realizer must be 'template' or 'remote'")
        check(self.responder in ("scripted", "remote"),
              "responder must be 'scripted' or 'remote'")
        check(self.coverage_mode in ("simulated", "original"),
              "coverage_mode must be 'simulated' or 'original'")
        check(self.topic_source in ("tags", "text"), "topic_source must be 'tags' or 'text'")
        check(all(int(c) >= 1 for c in self.sweep), "sweep caps must be positive")
        check(self.provider_timeout > 0, "provider_timeout must be positive")
        return self

    def replace(self, **changes):
        return replace(self, **changes).validate()
