"""
HTTP front end over a trained checkpoint set.

    POST /appraisal  {"history": [{"speaker": ..., "text": ...}, ...]}
    POST /action     {"history": [...], "appraisal": optional label}
    POST /step       {"case": {...}, "history": optional, "round": optional int}

``history`` lists the utterances visible so far, oldest first.  ``/step``
also realizes the justice utterance for the chosen act path.
"""
import logging
from dataclasses import dataclass
from typing import Any
from flask import Flask, jsonify, request
from ..dataset.corpus import CaseRecord, Utterance
from ..dataset.embedding import embed_context
from ..dataset.taxonomy import ActionTree, Appraisal
from ..exceptions import DataError, InquireError

logger = logging.getLogger(__name__)


@dataclass
class ServingPolicy:
    tree: ActionTree
    provider: Any
    appraisal_agent: Any
    dialogue_agent: Any
    realizer: Any

    def state(self, history):
        return embed_context(self.provider, history).raw

    def appraise(self, history):
        state = self.state(history)
        q = self.appraisal_agent.q_values(state)[0]
        return Appraisal.from_index(int(q.argmax())), q

    def choose(self, history, appraisal=None):
        if appraisal is None:
            appraisal, _ = self.appraise(history)
        path = self.dialogue_agent.act(self.state(history), appraisal)
        return appraisal, path


def load_policy(config):
    """Load the embeddings, appraisal and dialogue checkpoints of ``config.out``."""
    from ..pipeline import RunContext
    ctx = RunContext(config)
    table = ctx.load_table()
    return ServingPolicy(ctx.tree, ctx.provider(), ctx.load_appraisal_agent(table),
                         ctx.load_dialogue_agent(table), ctx.realizer())


def parse_history(obj):
    if not isinstance(obj, list) or not obj:
        raise DataError("history must be a non-empty list of utterances")
    history = []
    for i, u in enumerate(obj):
        if not isinstance(u, dict) or "speaker" not in u or "text" not in u:
            raise DataError("history item {} needs speaker and text".format(i))
        history.append(Utterance(str(u["speaker"]), str(u["text"])))
    return history


def parse_case(obj):
    if not isinstance(obj, dict):
        raise DataError("case must be an object")
    return CaseRecord.from_dict(dict(obj, rounds=obj.get("rounds", [])))


def _action_payload(tree, appraisal, path):
    return {"appraisal": appraisal.label,
            "action_path": [int(p) for p in path],
            "action_labels": tree.path_labels(path)}


def create_app(config=None, policy=None):
    """
    Build the Flask app.  Pass ``policy`` to serve already loaded agents,
    otherwise the checkpoints under ``config.out`` are loaded once here.
    """
    if policy is None:
        policy = load_policy(config)
    app = Flask(__name__)

    def body():
        data = request.get_json(force=True, silent=True)
        if not isinstance(data, dict):
            raise DataError("request body must be a JSON object")
        return data

    @app.route("/appraisal", methods=["POST"])
    def appraisal_call():
        history = parse_history(body().get("history"))
        appraisal, q = policy.appraise(history)
        return jsonify({"appraisal": appraisal.label, "index": appraisal.index,
                        "q_values": [float(v) for v in q]})

    @app.route("/action", methods=["POST"])
    def action_call():
        data = body()
        history = parse_history(data.get("history"))
        label = data.get("appraisal")
        appraisal = Appraisal.from_label(label) if label is not None else None
        appraisal, path = policy.choose(history, appraisal)
        return jsonify(_action_payload(policy.tree, appraisal, path))

    @app.route("/step", methods=["POST"])
    def step_call():
        data = body()
        case = parse_case(data.get("case"))
        history = parse_history(data["history"]) if data.get("history") else [case.opening()]
        round_index = data.get("round", 0)
        if not isinstance(round_index, int) or round_index < 0:
            raise DataError("round must be a non-negative integer")
        appraisal, path = policy.choose(history)
        text, topic = policy.realizer.realize(policy.tree, path, case, round_index, history)
        response = _action_payload(policy.tree, appraisal, path)
        response.update(utterance=text, topic=topic)
        return jsonify(response)

    @app.errorhandler(400)
    def bad_request(error=None):
        message = {
            "status": 400,
            "message": "Bad Request: " + request.url + " --> {}".format(
                getattr(error, "description", None) or error or "malformed request"),
        }
        resp = jsonify(message)
        resp.status_code = 400
        return resp

    @app.errorhandler(DataError)
    def data_error(error):
        return bad_request(str(error))

    @app.errorhandler(InquireError)
    def inquire_error(error):
        logger.warning("request to %s failed: %s", request.path, error)
        resp = jsonify({"status": 500, "message": str(error)})
        resp.status_code = 500
        return resp

    return app
