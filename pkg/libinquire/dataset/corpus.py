"""
Cases, dialogue rounds and the line-oriented corpus wire format.

Each line of a corpus file is one JSON object::

    {"case_id": ..., "background": ..., "argued_question": ...,
     "sub_conclusions": [...], "topics": [...],
     "rounds": [{"justice_text": ..., "attorney_text": ...,
                 "appraisal": optional label, "action_path": optional label list,
                 "reward": optional number}, ...]}
"""
import io
import json
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple
from .taxonomy import Appraisal, APPRAISAL_LABELS
from ..exceptions import CorpusParseError, SchemaError

logger = logging.getLogger(__name__)

SPEAKERS = ("justice", "attorney")
MANDATORY_FIELDS = ("case_id", "background", "argued_question", "sub_conclusions", "rounds")
REDUNDANCY_JACCARD = 0.8


def tokenize(text):
    return text.lower().split()


@dataclass(frozen=True)
class Utterance:
    speaker: str
    text: str

    def __post_init__(self):
        if self.speaker not in SPEAKERS:
            raise SchemaError("speaker must be one of {}, got {!r}".format(SPEAKERS, self.speaker))

    @property
    def tokens(self):
        return tokenize(self.text)

    def __len__(self):
        return len(self.tokens)


@dataclass(frozen=True)
class Round:
    justice: Utterance
    attorney: Utterance
    appraisal: Optional[str] = None
    action_path: Optional[Tuple[str, ...]] = None
    reward: Optional[float] = None

    def to_dict(self):
        out = {"justice_text": self.justice.text, "attorney_text": self.attorney.text}
        if self.appraisal is not None:
            out["appraisal"] = self.appraisal
        if self.action_path is not None:
            out["action_path"] = list(self.action_path)
        if self.reward is not None:
            out["reward"] = self.reward
        return out


@dataclass(frozen=True)
class CaseRecord:
    case_id: str
    background: str
    argued_question: str
    sub_conclusions: Tuple[str, ...]
    topics: Tuple[str, ...] = ()
    rounds: Tuple[Round, ...] = field(default_factory=tuple)

    def opening(self):
        """The attorney's opening statement: background followed by the argued question."""
        return Utterance("attorney", "{} {}".format(self.background, self.argued_question).strip())

    def context(self, upto):
        """Utterances visible before the justice speaks in round ``upto``."""
        history = [self.opening()]
        for r in self.rounds[:upto]:
            history.extend([r.justice, r.attorney])
        return history

    def to_dict(self):
        return {"case_id": self.case_id, "background": self.background,
                "argued_question": self.argued_question,
                "sub_conclusions": list(self.sub_conclusions),
                "topics": list(self.topics),
                "rounds": [r.to_dict() for r in self.rounds]}

    @classmethod
    def from_dict(cls, obj):
        if not isinstance(obj, dict):
            raise SchemaError("record must be an object")
        missing = [f for f in MANDATORY_FIELDS if f not in obj]
        if missing:
            raise SchemaError("missing mandatory fields: {}".format(", ".join(missing)))
        sub_conclusions = obj["sub_conclusions"]
        if not isinstance(sub_conclusions, list) or not sub_conclusions:
            raise SchemaError("sub_conclusions must be a non-empty list")
        if not isinstance(obj["rounds"], list):
            raise SchemaError("rounds must be a list")

        rounds = []
        for i, r in enumerate(obj["rounds"]):
            if not isinstance(r, dict) or "justice_text" not in r or "attorney_text" not in r:
                raise SchemaError("round {} needs justice_text and attorney_text".format(i))
            appraisal = r.get("appraisal")
            if appraisal is not None and appraisal not in APPRAISAL_LABELS:
                raise SchemaError("round {}: unknown appraisal label {!r}".format(i, appraisal))
            path = r.get("action_path")
            if path is not None:
                if not isinstance(path, list) or not 1 <= len(path) <= 3:
                    raise SchemaError("round {}: action_path must list 1 to 3 labels".format(i))
                path = tuple(str(p) for p in path)
            reward = r.get("reward")
            if reward is not None and not isinstance(reward, (int, float)):
                raise SchemaError("round {}: reward must be a number".format(i))
            rounds.append(Round(Utterance("justice", str(r["justice_text"])),
                                Utterance("attorney", str(r["attorney_text"])),
                                appraisal, path, None if reward is None else float(reward)))

        return cls(str(obj["case_id"]), str(obj["background"]), str(obj["argued_question"]),
                   tuple(str(c) for c in sub_conclusions),
                   tuple(str(t) for t in obj.get("topics", [])), tuple(rounds))


def parse_corpus(path):
    cases, seen = [], set()
    try:
        f = io.open(path, "r", encoding="utf-8")
    except (IOError, OSError) as e:
        raise CorpusParseError(path, 0, "cannot open corpus: {}".format(e))
    with f:
        for line_no, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except ValueError as e:
                raise CorpusParseError(path, line_no, "malformed record: {}".format(e))
            try:
                case = CaseRecord.from_dict(obj)
            except SchemaError as e:
                raise SchemaError("{}:{}: {}".format(path, line_no, e))
            if case.case_id in seen:
                raise SchemaError("{}:{}: duplicate case_id {!r}".format(path, line_no, case.case_id))
            seen.add(case.case_id)
            cases.append(case)
    logger.info("parsed %d cases from %s", len(cases), path)
    return cases


def write_corpus(cases, path):
    with io.open(path, "w", encoding="utf-8") as f:
        for case in cases:
            f.write(json.dumps(case.to_dict(), ensure_ascii=False) + "\n")


def token_jaccard(a, b):
    sa, sb = set(a.tokens), set(b.tokens)
    if not sa and not sb:
        return 1.0
    return len(sa & sb) / float(len(sa | sb))


def infer_appraisal(u_j_prev, u_a, u_j, annotation=None):
    """
    Appraisal of the attorney's answer ``u_a`` given the justice turns around it.

    An annotation always wins.  Otherwise: a near-repeat of the previous
    justice turn signals redundancy, a follow-up question reusing the
    attorney's words signals digging deeper, and everything else is Otherwise.
    """
    if annotation is not None:
        return Appraisal.from_label(annotation)
    if u_j_prev is not None and u_j_prev.tokens and \
            token_jaccard(u_j_prev, u_j) >= REDUNDANCY_JACCARD:
        return Appraisal.from_label("Find redundancy")
    if u_a is not None and u_j.text.rstrip().endswith("?") and \
            set(u_j.tokens) & set(u_a.tokens):
        return Appraisal.from_label("Dive deeper")
    return Appraisal.from_label("Otherwise")


def round_appraisal(case, t):
    """Appraisal guiding the justice turn of round ``t``: a judgement of the previous answer."""
    current = case.rounds[t]
    if t == 0:
        return infer_appraisal(None, case.opening(), current.justice, current.appraisal)
    prev = case.rounds[t - 1]
    return infer_appraisal(prev.justice, prev.attorney, current.justice, current.appraisal)
