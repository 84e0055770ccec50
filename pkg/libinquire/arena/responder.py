"""
Attorney side of a simulated dialogue.

``respond`` returns the attorney's text and the topic tags the answer
declares (possibly empty).
"""
import logging
import os
from .realizer import chat_completion, round_topic, CHAT_URL_ENV, CHAT_KEY_ENV
from ..exceptions import ProviderError

logger = logging.getLogger(__name__)

DEFAULT_RESPONSE = "Your Honor, on {topic}, our position is that {conclusion}."


class ScriptedResponder(object):
    """
    Pure function of (leaf act label, round index, case).

    :param script: mapping (leaf label, round index) -> template; a key with
                   round index None applies to every round
    """
    kind = "scripted"

    def __init__(self, script=None, default=DEFAULT_RESPONSE):
        self.script = dict(script or {})
        self.default = default

    def respond(self, leaf_label, round_index, case, history=None):
        template = self.script.get((leaf_label, round_index),
                                   self.script.get((leaf_label, None), self.default))
        topic = round_topic(case, round_index)
        conclusion = case.sub_conclusions[round_index % len(case.sub_conclusions)]
        return template.format(topic=topic, conclusion=conclusion, label=leaf_label), [topic]


class RemoteResponder(object):
    kind = "remote"

    def __init__(self, model, url=None, api_key=None, timeout=60.0):
        self.model = model
        self.url = url or os.environ.get(CHAT_URL_ENV)
        self.api_key = api_key or os.environ.get(CHAT_KEY_ENV)
        self.timeout = timeout
        if not self.url:
            raise ProviderError("remote responder needs {} to be set".format(CHAT_URL_ENV),
                                retriable=False)

    def respond(self, leaf_label, round_index, case, history=None):
        messages = [{"role": "system",
                     "content": "You are the attorney arguing this case. Background: {} "
                                "Question presented: {}".format(case.background,
                                                                case.argued_question)}]
        for u in history or []:
            messages.append({"role": "assistant" if u.speaker == "attorney" else "user",
                             "content": u.text})
        return chat_completion(self.url, self.api_key, self.model, messages, self.timeout), []


def build_responder(kind="scripted", **kwargs):
    if kind == "scripted":
        return ScriptedResponder(**kwargs)
    elif kind == "remote":
        return RemoteResponder(**kwargs)
    raise ValueError("responder kind must be either 'scripted' or 'remote'")
