"""
The three-level dialogue-act hierarchy and the nine-way appraisal vocabulary.

Node ids are assigned in table order (pre-order over the built-in table), so
that argmax tie-breaking downstream is reproducible across runs.
"""
import hashlib
import logging
from collections import namedtuple
import numpy as np
import pandas as pd
from ..exceptions import SchemaError, TaxonomyError

logger = logging.getLogger(__name__)

MAX_DEPTH = 3

APPRAISAL_LABELS = (
    "Sense ambiguity",
    "Find deviates",
    "Find redundancy",
    "Spot weakness",
    "Identify flaws",
    "Identify chances",
    "Keep challenging",
    "Dive deeper",
    "Otherwise",
)
N_APPRAISALS = len(APPRAISAL_LABELS)

BUILTIN_ACTS = [
    ("Question", [
        ("Clarification question", [
            "Clarify important aspect of the case",
            "Clarify legal arguments or issues",
            "Clarify definition of concept",
        ]),
        ("Probing question", [
            "Probe the consistency between the attorney's arguments and "
            "established legal principles or precedents",
            "Probe the assumption underlying the attorney's arguments",
        ]),
        ("Leading question", [
            "Ask for the attorney's position",
            "Lead the attorney toward a particular conclusion",
            "Lead the attorney to certain aspects",
        ]),
    ]),
    ("Make hypothesis", [
        ("Present hypothesis", [
            "Present hypothetical situations to test legal limits",
            "Present hypothetical situations to test legal issues in the case",
        ]),
        ("Compare hypothesis", [
            "Compare to hypothetical situations to assess legal principles",
            "Highlight key differences from hypothetical situations",
        ]),
        ("Conclude hypothesis", [
            "Explore different types of consequences",
        ]),
    ]),
    ("Declaration", [
        ("Confirmation", [
            "Acknowledge the attorney's arguments",
            "Prompt for information that would support the attorney's arguments",
        ]),
        ("Rejection", [
            "Oppose the attorney's arguments",
            "Provide counterexample to challenge the attorney's arguments",
        ]),
        ("Declaration (non-questions) for more details", [
            "Lead attorneys by examples (non-questions) for detailed explanation of a concept",
        ]),
        ("Declaration with Time Pressure", [
            "Pressure a rash response from the attorney",
        ]),
    ]),
]

ActionNode = namedtuple("ActionNode", ["id", "level", "label", "parent", "children"])


class Appraisal(namedtuple("Appraisal", ["index", "label"])):
    __slots__ = ()

    @classmethod
    def from_index(cls, index):
        index = int(index)
        if not 0 <= index < N_APPRAISALS:
            raise ValueError("appraisal index must be in [0, {}], got {}".format(
                N_APPRAISALS - 1, index))
        return cls(index, APPRAISAL_LABELS[index])

    @classmethod
    def from_label(cls, label):
        try:
            return cls(APPRAISAL_LABELS.index(label), label)
        except ValueError:
            raise SchemaError("unknown appraisal label: {!r}".format(label))

    def onehot(self):
        return appraisal_onehot(self)


def appraisal_onehot(a):
    index = a.index if isinstance(a, Appraisal) else Appraisal.from_index(a).index
    vec = np.zeros(N_APPRAISALS, dtype=np.float64)
    vec[index] = 1.0
    return vec


class ActionTree(object):
    """
    Immutable forest of dialogue acts, at most three levels deep.

    :param rows: iterable of (id, level, label, parent) with ids 0..n-1 and
                 parent None for level-1 nodes
    """
    columns = ["id", "level", "label", "parent"]

    def __init__(self, rows):
        rows = sorted((int(i), int(lv), str(lb), None if p is None else int(p))
                      for i, lv, lb, p in rows)
        if not rows:
            raise TaxonomyError("taxonomy has no nodes")
        if [r[0] for r in rows] != list(range(len(rows))):
            raise TaxonomyError("node ids must be contiguous from 0")

        children = [[] for _ in rows]
        for node_id, level, label, parent in rows:
            if not 1 <= level <= MAX_DEPTH:
                raise TaxonomyError("node {} has level {} outside 1..{}".format(
                    node_id, level, MAX_DEPTH))
            if level == 1:
                if parent is not None:
                    raise TaxonomyError("level-1 node {} must not have a parent".format(node_id))
                continue
            if parent is None or not 0 <= parent < len(rows):
                raise TaxonomyError("node {} has no valid parent".format(node_id))
            if rows[parent][1] != level - 1:
                raise TaxonomyError("node {} (level {}) hangs under node {} (level {})".format(
                    node_id, level, parent, rows[parent][1]))
            children[parent].append(node_id)

        self._nodes = tuple(ActionNode(i, lv, lb, p, tuple(children[i]))
                            for i, lv, lb, p in rows)
        self.roots = tuple(n.id for n in self._nodes if n.level == 1)

    def __len__(self):
        return len(self._nodes)

    def __iter__(self):
        return iter(self._nodes)

    @property
    def n_nodes(self):
        return len(self._nodes)

    def node(self, node_id):
        try:
            node_id = int(node_id)
            if node_id < 0:
                raise IndexError
            return self._nodes[node_id]
        except (IndexError, TypeError, ValueError):
            raise TaxonomyError("unknown node id: {!r}".format(node_id))

    def label(self, node_id):
        return self.node(node_id).label

    def level(self, node_id):
        return self.node(node_id).level

    def parent(self, node_id):
        return self.node(node_id).parent

    def children(self, node_id):
        return list(self.node(node_id).children)

    def candidates(self, prefix=()):
        """Actions available after ``prefix``: roots for the empty prefix."""
        if len(prefix) == 0:
            return list(self.roots)
        return self.children(prefix[-1])

    def nodes_at_level(self, level):
        return [n.id for n in self._nodes if n.level == level]

    def lookup(self, label, parent=None):
        for n in self._nodes:
            if n.label == label and n.parent == parent:
                return n.id
        raise TaxonomyError("no node labelled {!r} under parent {}".format(label, parent))

    def validate_path(self, path):
        try:
            path = [int(p) for p in path]
        except (TypeError, ValueError):
            return False
        if not 1 <= len(path) <= MAX_DEPTH:
            return False
        if any(not 0 <= p < len(self._nodes) for p in path):
            return False
        if self._nodes[path[0]].parent is not None:
            return False
        return all(self._nodes[b].parent == a for a, b in zip(path[:-1], path[1:]))

    def is_full(self, path):
        return self.validate_path(path) and not self._nodes[int(path[-1])].children

    def full_paths(self):
        paths = []

        def walk(prefix):
            kids = self._nodes[prefix[-1]].children
            if not kids:
                paths.append(tuple(prefix))
            for k in kids:
                walk(prefix + [k])

        for r in self.roots:
            walk([r])
        return paths

    def resolve_labels(self, labels):
        """Walk a label sequence down from the roots and return the node ids."""
        path, parent = [], None
        for label in labels:
            path.append(self.lookup(label, parent))
            parent = path[-1]
        if not self.validate_path(path):
            raise TaxonomyError("labels {!r} do not form a valid path".format(list(labels)))
        return tuple(path)

    def path_labels(self, path):
        return [self.label(p) for p in path]

    def edges(self):
        return [(n.parent, n.id) for n in self._nodes if n.parent is not None]

    def sibling_pairs(self):
        """Unordered pairs sharing a parent; level-1 nodes count as siblings."""
        groups = [list(self.roots)] + [list(n.children) for n in self._nodes]
        pairs = []
        for group in groups:
            for i, a in enumerate(group):
                for b in group[i + 1:]:
                    pairs.append((a, b))
        return pairs

    def descendants(self, node_id):
        out, stack = [], list(self.node(node_id).children)
        while stack:
            n = stack.pop()
            out.append(n)
            stack.extend(self._nodes[n].children)
        return sorted(out)

    def rows(self):
        return [(n.id, n.level, n.label, n.parent) for n in self._nodes]

    def digest(self):
        sha = hashlib.sha256()
        for node_id, level, label, parent in self.rows():
            sha.update("{}\t{}\t{}\t{}\n".format(
                node_id, level, label, "" if parent is None else parent).encode("utf-8"))
        return sha.hexdigest()

    def save(self, path):
        frame = pd.DataFrame(self.rows(), columns=self.columns)
        frame["parent"] = frame["parent"].map(lambda p: "" if p is None or p != p else str(int(p)))
        frame.to_csv(path, index=False)

    @classmethod
    def load(cls, path):
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
        missing = set(cls.columns) - set(frame.columns)
        if missing:
            raise TaxonomyError("taxonomy file {} lacks columns {}".format(path, sorted(missing)))
        try:
            rows = [(int(r.id), int(r.level), r.label, int(r.parent) if r.parent.strip() else None)
                    for r in frame.itertuples(index=False)]
        except ValueError as e:
            raise TaxonomyError("malformed taxonomy file {}: {}".format(path, e))
        logger.info("loaded taxonomy with %d nodes from %s", len(rows), path)
        return cls(rows)


def builtin_tree():
    rows = []
    for act, subtypes in BUILTIN_ACTS:
        act_id = len(rows)
        rows.append((act_id, 1, act, None))
        for subtype, leaves in subtypes:
            sub_id = len(rows)
            rows.append((sub_id, 2, subtype, act_id))
            for leaf in leaves:
                rows.append((len(rows), 3, leaf, sub_id))
    return ActionTree(rows)


def children(tree, node):
    return tree.children(node)


def validate_path(tree, path):
    return tree.validate_path(path)
