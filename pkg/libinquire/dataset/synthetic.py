"""
Seeded synthetic corpora with a known reward function.

The behaviour policy draws appraisals and full action paths uniformly; every
round carries an explicit reward that depends only on (appraisal, action)
through ``synthetic_reward``.
"""
import numpy as np
from .corpus import CaseRecord, Round, Utterance
from .taxonomy import APPRAISAL_LABELS, N_APPRAISALS
from ..arena.realizer import TemplateRealizer

TOPIC_POOL = (
    "the standing requirement", "the statute of limitations", "the commerce clause",
    "agency deference", "the equal protection claim", "the remedy sought",
    "the contract terms", "the jurisdictional question", "the removal power",
    "the search warrant", "the plain text", "legislative history",
)
CONCLUSION_POOL = (
    "the statute does not reach this conduct",
    "the agency exceeded its authority",
    "the petitioner lacks standing",
    "the lower court applied the wrong standard",
    "the claim is time barred",
    "the search was reasonable",
)
WORD_POOL = (
    "the", "record", "shows", "court", "precedent", "statute", "text", "congress",
    "intended", "petitioner", "respondent", "standard", "review", "remedy", "claim",
    "authority", "agency", "history", "rule", "limit", "facts", "evidence", "clear",
    "we", "argue", "because", "honor", "position", "case", "law",
)


def synthetic_reward(tree, appraisal, path):
    """0.6 when the top-level act is the one preferred for the appraisal, plus 0.4
    when the second level takes the first child of that act."""
    roots = tree.roots
    reward = 0.6 if path[0] == roots[appraisal % len(roots)] else 0.0
    if len(path) > 1 and path[1] == tree.children(path[0])[0]:
        reward += 0.4
    return reward


def make_synthetic_corpus(tree, n_episodes=200, seed=42, min_rounds=3, max_rounds=7):
    rng = np.random.RandomState(seed)
    realizer = TemplateRealizer()
    paths = tree.full_paths()
    cases = []
    for e in range(n_episodes):
        topics = [TOPIC_POOL[i] for i in rng.choice(len(TOPIC_POOL), 3, replace=False)]
        conclusions = [CONCLUSION_POOL[i] for i in
                       rng.choice(len(CONCLUSION_POOL), 2, replace=False)]
        shell = CaseRecord("synthetic-{:04d}".format(e),
                           "Synthetic case {} concerning {}.".format(e, topics[0]),
                           "Whether {}?".format(conclusions[0]),
                           tuple(conclusions), tuple(topics))
        rounds = []
        for t in range(rng.randint(min_rounds, max_rounds + 1)):
            appraisal = int(rng.randint(N_APPRAISALS))
            path = paths[rng.randint(len(paths))]
            justice, _ = realizer.realize(tree, path, shell, t)
            words = rng.choice(WORD_POOL, rng.randint(5, 16))
            rounds.append(Round(Utterance("justice", justice),
                                Utterance("attorney", " ".join(words)),
                                APPRAISAL_LABELS[appraisal],
                                tuple(tree.path_labels(path)),
                                synthetic_reward(tree, appraisal, path)))
        cases.append(CaseRecord(shell.case_id, shell.background, shell.argued_question,
                                shell.sub_conclusions, shell.topics, tuple(rounds)))
    return cases
