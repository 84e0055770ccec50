"""
Justice-utterance realization: a canned sentence frame per leaf act,
parameterised by a case topic, or a remote chat-completion endpoint behind
the same interface.
"""
import logging
import os
import requests
from ..exceptions import ProviderError

logger = logging.getLogger(__name__)

CHAT_URL_ENV = "LIBINQUIRE_CHAT_URL"
CHAT_KEY_ENV = "LIBINQUIRE_CHAT_KEY"

LEAF_TEMPLATES = {
    "Clarify important aspect of the case":
        "Counsel, what exactly happened with respect to {topic}?",
    "Clarify legal arguments or issues":
        "What is the precise legal issue you are raising about {topic}?",
    "Clarify definition of concept":
        "How do you define {topic} for purposes of this case?",
    "Probe the consistency between the attorney's arguments and "
    "established legal principles or precedents":
        "How is your position on {topic} consistent with our precedents?",
    "Probe the assumption underlying the attorney's arguments":
        "Are you assuming that {topic} settles the question?",
    "Ask for the attorney's position":
        "What is your position on {topic}?",
    "Lead the attorney toward a particular conclusion":
        "Wouldn't you agree that {topic} points the other way?",
    "Lead the attorney to certain aspects":
        "Let me direct you to {topic}. What follows from it?",
    "Present hypothetical situations to test legal limits":
        "Suppose {topic} were taken to its extreme. Where does your rule stop?",
    "Present hypothetical situations to test legal issues in the case":
        "Imagine a case just like this one but without {topic}. Same result?",
    "Compare to hypothetical situations to assess legal principles":
        "How is {topic} different from an ordinary commercial dispute?",
    "Highlight key differences from hypothetical situations":
        "The difference here is {topic}, isn't it?",
    "Explore different types of consequences":
        "What would the consequences of your rule on {topic} be?",
    "Acknowledge the attorney's arguments":
        "I understand your argument about {topic}.",
    "Prompt for information that would support the attorney's arguments":
        "Is there anything in the record on {topic} that supports you?",
    "Oppose the attorney's arguments":
        "I don't think {topic} helps you at all.",
    "Provide counterexample to challenge the attorney's arguments":
        "Consider a counterexample involving {topic}. How do you answer it?",
    "Lead attorneys by examples (non-questions) for detailed explanation of a concept":
        "Take {topic} as an example and walk us through it.",
    "Pressure a rash response from the attorney":
        "Yes or no, counsel: does {topic} decide this case?",
}
GENERIC_TEMPLATE = "Counsel, on {topic}: {label}."


def round_topic(case, round_index):
    """Topic a round is about: the case topics in turn, else the argued question."""
    if case.topics:
        return case.topics[round_index % len(case.topics)]
    return case.argued_question


class TemplateRealizer(object):
    kind = "template"

    def __init__(self, templates=None):
        self.templates = dict(LEAF_TEMPLATES)
        self.templates.update(templates or {})

    def realize(self, tree, path, case, round_index, history=None):
        label = tree.label(path[-1])
        topic = round_topic(case, round_index)
        template = self.templates.get(label, GENERIC_TEMPLATE)
        return template.format(topic=topic, label=label), topic


class RemoteRealizer(object):
    """POST {"model": ..., "messages": [...]} -> {"text": ...}."""
    kind = "remote"

    def __init__(self, model, url=None, api_key=None, timeout=60.0):
        self.model = model
        self.url = url or os.environ.get(CHAT_URL_ENV)
        self.api_key = api_key or os.environ.get(CHAT_KEY_ENV)
        self.timeout = timeout
        if not self.url:
            raise ProviderError("remote realizer needs {} to be set".format(CHAT_URL_ENV),
                                retriable=False)

    def realize(self, tree, path, case, round_index, history=None):
        topic = round_topic(case, round_index)
        acts = " > ".join(tree.path_labels(path))
        messages = [{"role": "system",
                     "content": "You are a Supreme Court justice questioning counsel. "
                                "Case background: {}".format(case.background)}]
        for u in history or []:
            messages.append({"role": "assistant" if u.speaker == "justice" else "user",
                             "content": u.text})
        messages.append({"role": "user",
                         "content": "Respond with one utterance performing the act "
                                    "'{}' about '{}'.".format(acts, topic)})
        return chat_completion(self.url, self.api_key, self.model, messages,
                               self.timeout), topic


def chat_completion(url, api_key, model, messages, timeout):
    headers = {"Authorization": "Bearer {}".format(api_key)} if api_key else {}
    try:
        response = requests.post(url, json={"model": model, "messages": messages},
                                 headers=headers, timeout=timeout)
        response.raise_for_status()
        text = response.json()["text"]
    except (requests.RequestException, KeyError, ValueError, TypeError) as e:
        raise ProviderError("chat endpoint {} failed: {}".format(url, e))
    if not isinstance(text, str) or not text.strip():
        raise ProviderError("chat endpoint returned an empty utterance", retriable=True)
    return text.strip()


def build_realizer(kind="template", **kwargs):
    if kind == "template":
        return TemplateRealizer(**kwargs)
    elif kind == "remote":
        return RemoteRealizer(**kwargs)
    raise ValueError("realizer kind must be either 'template' or 'remote'")
