"""
Agent-versus-responder dialogue simulation.

Each round embeds the visible context, lets the appraisal agent judge it,
lets the dialogue agent pick an act path on the augmented state, realizes the
justice utterance, asks the responder for the attorney's answer and scores
that answer with the reward engine.
"""
import logging
from concurrent import futures
from dataclasses import dataclass, field
from typing import List, Optional, Tuple
import numpy as np
from tqdm import tqdm
from ..dataset.corpus import Utterance
from ..dataset.embedding import embed_context
from ..dataset.taxonomy import Appraisal
from ..exceptions import ProviderError
from ..rewards import RewardBreakdown

logger = logging.getLogger(__name__)

MAX_ROUNDS = 10


@dataclass(frozen=True)
class TraceRound:
    justice: Utterance
    attorney: Utterance
    action_path: Tuple[int, ...]
    appraisal: Appraisal
    breakdown: RewardBreakdown
    topic: str
    tags: Tuple[str, ...] = ()

    def topics(self, source="tags"):
        """
        Leaf target phrase plus declared tags; the answer text stands in when
        no tags came back, or always with source "text".
        """
        if source == "tags" and self.tags:
            return [self.topic] + list(self.tags)
        return [self.topic, self.attorney.text]

    def to_dict(self, tree=None):
        out = {"justice": self.justice.text, "attorney": self.attorney.text,
               "action_path": list(self.action_path), "appraisal": self.appraisal.label,
               "reward": self.breakdown.to_dict(), "topic": self.topic,
               "tags": list(self.tags)}
        if tree is not None:
            out["action_labels"] = tree.path_labels(self.action_path)
        return out


@dataclass
class DialogueTrace:
    case_id: str
    rounds: List[TraceRound] = field(default_factory=list)
    truncated: bool = False
    aborted: bool = False
    error: Optional[str] = None

    def __len__(self):
        return len(self.rounds)

    def justice_utterances(self):
        return [r.justice.text for r in self.rounds]

    def topics(self, source="tags"):
        seen, out = set(), []
        for r in self.rounds:
            for t in r.topics(source):
                if t not in seen:
                    seen.add(t)
                    out.append(t)
        return out

    def mean_breakdown(self):
        if not self.rounds:
            return RewardBreakdown(0.0, 0.0, 0.0, 0.0)
        values = np.array([[r.breakdown.relevance, r.breakdown.novelty,
                            r.breakdown.succinctness, r.breakdown.total] for r in self.rounds])
        return RewardBreakdown(*(float(v) for v in values.mean(axis=0)))

    def to_dict(self, tree=None):
        return {"case_id": self.case_id, "truncated": self.truncated, "aborted": self.aborted,
                "error": self.error, "rounds": [r.to_dict(tree) for r in self.rounds]}


def truncate_trace(trace, cap):
    """Prefix of ``trace`` with at most ``cap`` rounds."""
    rounds = list(trace.rounds[:cap])
    return DialogueTrace(trace.case_id, rounds,
                         truncated=trace.truncated or len(trace.rounds) > cap,
                         aborted=trace.aborted and len(trace.rounds) <= cap,
                         error=trace.error if len(trace.rounds) <= cap else None)


def run_episode(appraisal_agent, dialogue_agent, case, responder, realizer, provider, tree,
                rewards, max_rounds=MAX_ROUNDS):
    """
    Simulate one dialogue on ``case``; deterministic for a scripted responder.

    An embedder, responder or realizer failure ends the episode; the rounds
    played so far are kept and the trace is flagged ``aborted``.
    """
    if max_rounds < 0:
        raise ValueError("max_rounds must be non-negative")
    trace = DialogueTrace(case.case_id)
    history = [case.opening()]
    vocab = rewards.start(case)
    for t in range(max_rounds):
        try:
            state = embed_context(provider, history).raw
        except ProviderError as e:
            return _abort(trace, case, t, e)
        appraisal = appraisal_agent.select_appraisal(state)
        if not isinstance(appraisal, Appraisal):
            appraisal = Appraisal.from_index(appraisal)
        path = dialogue_agent.act(state, appraisal)
        try:
            text, topic = realizer.realize(tree, path, case, t, history)
            justice = Utterance("justice", text)
            answer, tags = responder.respond(tree.label(path[-1]), t, case,
                                             history + [justice])
            attorney = Utterance("attorney", answer)
        except (ProviderError, ValueError) as e:
            return _abort(trace, case, t, e)
        breakdown = rewards.score_turn(justice, attorney, case, vocab)
        trace.rounds.append(TraceRound(justice, attorney, tuple(path), appraisal, breakdown,
                                       topic, tuple(tags)))
        history.extend([justice, attorney])
    trace.truncated = True
    return trace


def _abort(trace, case, t, error):
    logger.warning("case %s aborted at round %d: %s", case.case_id, t, error)
    trace.aborted = True
    trace.error = str(error)
    return trace


def simulate_cases(appraisal_agent, dialogue_agent, cases, responder, realizer, provider,
                   tree, rewards, max_rounds=MAX_ROUNDS, max_in_flight=1, verbose=1):
    """Run one episode per case, returned in case order; ``max_in_flight`` bounds concurrent episodes."""
    def one(case):
        return run_episode(appraisal_agent, dialogue_agent, case, responder, realizer,
                           provider, tree, rewards, max_rounds)

    if max_in_flight <= 1:
        return [one(c) for c in tqdm(cases, desc="simulate", disable=verbose < 2)]
    with futures.ThreadPoolExecutor(max_workers=max_in_flight) as ex:
        return list(tqdm(ex.map(one, cases), total=len(cases), desc="simulate",
                         disable=verbose < 2))
