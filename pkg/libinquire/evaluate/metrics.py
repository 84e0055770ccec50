import numpy as np
from ..utils.similarities import tf_cosine, similarity_matrix

COVERAGE_MODES = ("simulated", "original")


def coverage_score(original_topics, simulated_topics, sim=tf_cosine, mode="simulated"):
    """
    Topic coverage of a simulated dialogue.

    mode "simulated": sum over simulated topics of the best similarity to any
    original topic, normalised by the number of simulated topics.
    mode "original": sum over original topics of the best similarity to any
    simulated topic, normalised by the number of original topics.

    :return: (raw, normalized)
    """
    original_topics, simulated_topics = list(original_topics), list(simulated_topics)
    if not original_topics or not simulated_topics:
        raise ValueError("coverage needs nonempty original and simulated topic lists")
    if mode not in COVERAGE_MODES:
        raise ValueError("coverage mode must be one of {}".format(COVERAGE_MODES))
    scores = similarity_matrix(sim, original_topics, simulated_topics)
    if mode == "simulated":
        raw = float(scores.max(axis=0).sum())
        return raw, raw / len(simulated_topics)
    raw = float(scores.max(axis=1).sum())
    return raw, raw / len(original_topics)


def mr_score(justice_utterances, question, gamma=0.7, sim=tf_cosine):
    """
    Marginal relevance of a justice's questioning:
    mean_j [gamma * sim(u_j, q) - (1 - gamma) * max_{i<j} sim(u_i, u_j)],
    the redundancy term being 0 for the first utterance.
    """
    utterances = list(justice_utterances)
    if not utterances:
        raise ValueError("mr_score needs at least one utterance")
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must be in [0, 1], got {}".format(gamma))
    relevance = similarity_matrix(sim, utterances, [question])[:, 0]
    pairwise = similarity_matrix(sim, utterances, utterances)
    redundancy = np.zeros(len(utterances))
    for j in range(1, len(utterances)):
        redundancy[j] = pairwise[:j, j].max()
    return float(np.mean(gamma * relevance - (1.0 - gamma) * redundancy))
