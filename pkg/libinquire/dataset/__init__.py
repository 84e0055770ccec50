from .taxonomy import ActionTree, ActionNode, Appraisal, builtin_tree, appraisal_onehot, \
    children, validate_path, APPRAISAL_LABELS, N_APPRAISALS, MAX_DEPTH
from .corpus import Utterance, Round, CaseRecord, parse_corpus, write_corpus, \
    infer_appraisal, round_appraisal, tokenize
from .embedding import StateEmbedding, HashingEmbedder, RemoteEmbedder, build_embedder, \
    embed_context, embed_contexts
from .DatasetInquire import DatasetInquire, build_transitions
