from .realizer import TemplateRealizer, RemoteRealizer, LEAF_TEMPLATES, round_topic, \
    build_realizer
from .responder import ScriptedResponder, RemoteResponder, build_responder
from .simulator import DialogueTrace, TraceRound, run_episode, simulate_cases, \
    truncate_trace, MAX_ROUNDS
