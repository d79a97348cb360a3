"""End-to-end training: bounds, encoding, optimization, diverse extraction
and selection-set filtering, plus the decision tree model type.

A tree maps each node id to either a Split (feature plus the child for
value 1 and the child for value 0) or a Leaf (class id). Trees are
immutable once built and safe to share.
"""

from __future__ import annotations

import json
import math
import random
import time
from collections import Counter
from dataclasses import dataclass, replace

from . import optimizer
from .dataset import (BinDataset, InseparableDataError, check_separability,
                      derive_seed, split_train_selection)
from .encoder import build, decode


class TrainError(Exception):
    pass


class TrainTimeoutError(TrainError):
    """Time budget exhausted before any model was found."""

    def __init__(self, greedy_tree):
        self.greedy_tree = greedy_tree
        super().__init__("time budget exhausted before the first model")


@dataclass(frozen=True)
class Leaf:
    label: int


@dataclass(frozen=True)
class Split:
    feature: int
    on1: int  # child when the feature value is 1
    on0: int  # child when the feature value is 0


class DecisionTree:
    """Immutable binary classifier tree over bit-vector examples."""

    def __init__(self, nodes: dict[int, Leaf | Split], root: int):
        self.nodes = dict(nodes)
        self.root = root

    def __eq__(self, other):
        return (isinstance(other, DecisionTree)
                and self.nodes == other.nodes and self.root == other.root)

    def __hash__(self):
        return hash((frozenset(self.nodes.items()), self.root))

    def __repr__(self):
        return f"DecisionTree(size={self.size}, root={self.root})"

    @property
    def size(self) -> int:
        return len(self.nodes)

    @property
    def n_splits(self) -> int:
        return sum(1 for n in self.nodes.values() if isinstance(n, Split))

    @property
    def n_leaves(self) -> int:
        return self.size - self.n_splits

    @property
    def max_feature(self) -> int:
        feats = [n.feature for n in self.nodes.values() if isinstance(n, Split)]
        return max(feats) if feats else -1

    @property
    def depth(self) -> int:
        """Longest root-to-leaf path in edges."""
        def walk(node_id, d):
            node = self.nodes[node_id]
            if isinstance(node, Leaf):
                return d
            return max(walk(node.on1, d + 1), walk(node.on0, d + 1))
        return walk(self.root, 0)

    def validate(self) -> None:
        """Structural checks: single root, unique parents, leaf/split balance,
        odd size, no feature repeated along any path."""
        if self.root not in self.nodes:
            raise ValueError("root id missing from nodes")
        parents = Counter()
        for node in self.nodes.values():
            if isinstance(node, Split):
                for child in (node.on1, node.on0):
                    if child not in self.nodes:
                        raise ValueError(f"child id {child} missing from nodes")
                    parents[child] += 1
        if parents.get(self.root):
            raise ValueError("root has a parent")
        for node_id in self.nodes:
            if node_id != self.root and parents.get(node_id, 0) != 1:
                raise ValueError(f"node {node_id} has {parents.get(node_id, 0)} parents")
        if self.n_leaves != self.n_splits + 1:
            raise ValueError("leaf count must exceed split count by one")
        if self.size % 2 == 0:
            raise ValueError("tree size must be odd")

        def walk(node_id, seen):
            node = self.nodes[node_id]
            if isinstance(node, Leaf):
                return
            if node.feature in seen:
                raise ValueError(f"feature {node.feature} repeated on a path")
            walk(node.on1, seen | {node.feature})
            walk(node.on0, seen | {node.feature})
        walk(self.root, frozenset())

    def to_json_obj(self) -> dict:
        nodes = []
        for node_id in sorted(self.nodes):
            node = self.nodes[node_id]
            if isinstance(node, Leaf):
                nodes.append({"id": node_id, "kind": "leaf", "class": node.label})
            else:
                nodes.append({"id": node_id, "kind": "decision",
                              "feature": node.feature, "on1": node.on1, "on0": node.on0})
        return {"nodes": nodes, "root": self.root}

    @classmethod
    def from_json_obj(cls, obj: dict) -> "DecisionTree":
        nodes: dict[int, Leaf | Split] = {}
        for entry in obj["nodes"]:
            if entry["kind"] == "leaf":
                nodes[entry["id"]] = Leaf(entry["class"])
            elif entry["kind"] == "decision":
                nodes[entry["id"]] = Split(entry["feature"], entry["on1"], entry["on0"])
            else:
                raise ValueError(f"unknown node kind {entry['kind']!r}")
        return cls(nodes, obj["root"])


def predict(tree: DecisionTree, bits) -> int:
    """Class of one bit-vector; raises on a feature/width mismatch."""
    if tree.max_feature >= len(bits):
        raise ValueError(
            f"tree tests feature {tree.max_feature} but example has {len(bits)} bits")
    node = tree.nodes[tree.root]
    while isinstance(node, Split):
        node = tree.nodes[node.on1 if bits[node.feature] else node.on0]
    return node.label


def evaluate(tree: DecisionTree, ds: BinDataset) -> float:
    """Fraction of examples classified correctly."""
    if ds.n_rows == 0:
        return 1.0
    hits = sum(1 for bits, y in zip(ds.examples, ds.labels) if predict(tree, bits) == y)
    return hits / ds.n_rows


# --- greedy pure-tree construction -----------------------------------------


def _entropy(counts) -> float:
    total = sum(counts)
    h = 0.0
    for c in counts:
        if c:
            p = c / total
            h -= p * math.log2(p)
    return h


def greedy_upper_bound(ds: BinDataset):
    """Pure tree by top-down information gain; its size is a sound upper
    bound on the minimal pure tree size. Ties go to the lowest feature
    index; only features that actually split the current rows are
    candidates."""
    conflicts = check_separability(ds)
    if conflicts:
        raise InseparableDataError(conflicts)

    def grow(indices):
        labels = [ds.labels[i] for i in indices]
        first = labels[0] if labels else 0
        if all(y == first for y in labels):
            return Leaf(first)
        base = _entropy(Counter(labels).values())
        best_r, best_gain = None, -1.0
        best_parts = None
        for r in range(ds.k):
            ones = [i for i in indices if ds.examples[i][r] == 1]
            if not ones or len(ones) == len(indices):
                continue
            zeros = [i for i in indices if ds.examples[i][r] == 0]
            h1 = _entropy(Counter(ds.labels[i] for i in ones).values())
            h0 = _entropy(Counter(ds.labels[i] for i in zeros).values())
            gain = base - (len(ones) * h1 + len(zeros) * h0) / len(indices)
            if gain > best_gain + 1e-12:
                best_r, best_gain, best_parts = r, gain, (ones, zeros)
        if best_r is None:
            raise InseparableDataError([sorted(indices)])
        ones, zeros = best_parts
        return ("split", best_r, grow(ones), grow(zeros))

    shape = grow(list(range(ds.n_rows)))

    # breadth-first numbering: the children of the m-th split take ids 2m, 2m+1
    nodes: dict[int, Leaf | Split] = {}
    queue = [(1, shape)]
    next_id = 2
    while queue:
        node_id, item = queue.pop(0)
        if isinstance(item, Leaf):
            nodes[node_id] = item
            continue
        _, r, ones_sub, zeros_sub = item
        left_id, right_id = next_id, next_id + 1
        next_id += 2
        nodes[node_id] = Split(r, on1=right_id, on0=left_id)
        queue.append((left_id, zeros_sub))
        queue.append((right_id, ones_sub))
    tree = DecisionTree(nodes, root=1)
    tree.validate()
    return tree, tree.size


# --- training ----------------------------------------------------------------


@dataclass(frozen=True)
class TrainConfig:
    p: float = 0.8                 # fraction of the input kept for training
    k: int = 100                   # diverse solutions to request
    delta: float = 0.0             # selection-accuracy tolerance
    seed: int = 0
    time_budget: float | None = None  # seconds shared by all solver phases
    lb: int = 3
    fallback_greedy: bool = False
    accept_suboptimal_diverse: bool = False


@dataclass
class TrainResult:
    kept: list[tuple[DecisionTree, float]]
    status: str                    # "optimal" | "feasible" | "trivial"
    optimal_cost: int | None
    optimal_size: int | None
    greedy_size: int | None
    n_solutions: int
    all_accuracies: list[float]
    train_set: BinDataset
    selection_set: BinDataset
    bound_trace: list[int]

    @property
    def best_selection_accuracy(self) -> float:
        return max(acc for _, acc in self.kept)


def _single_leaf_result(ds: BinDataset, label: int, selection: BinDataset) -> TrainResult:
    tree = DecisionTree({1: Leaf(label)}, root=1)
    acc = evaluate(tree, selection) if selection.n_rows else 1.0
    return TrainResult(kept=[(tree, acc)], status="trivial", optimal_cost=None,
                       optimal_size=1, greedy_size=1, n_solutions=1,
                       all_accuracies=[acc], train_set=ds, selection_set=selection,
                       bound_trace=[])


def train(ds: BinDataset, cfg: TrainConfig) -> TrainResult:
    """Minimal pure trees for a training split of `ds`, filtered on the
    held-out selection split.

    Splits off a selection part, proves the minimal pure tree size for the
    remainder, extracts up to cfg.k diverse optimal trees, and keeps each
    tree whose selection accuracy is no more than cfg.delta below the best
    seen so far.
    """
    conflicts = check_separability(ds)
    if conflicts:
        raise InseparableDataError(conflicts)
    empty = ds.subset([])
    if len(set(ds.labels)) == 1:
        # a bare leaf classifies everything; the encoding never allows one
        return _single_leaf_result(ds, ds.labels[0], empty)
    train_set, selection_set = split_train_selection(ds, cfg.p, cfg.seed)
    if len(set(train_set.labels)) == 1:
        return _single_leaf_result(train_set, train_set.labels[0], selection_set)

    deadline = time.monotonic() + cfg.time_budget if cfg.time_budget else None
    greedy_tree, greedy_size = greedy_upper_bound(train_set)
    inst = build(train_set, greedy_size, cfg.lb)
    bound_trace: list[int] = []
    outcome = optimizer.linear_maxsat(
        inst.formula, deadline=deadline, seed=derive_seed(cfg.seed, "solver") % (2 ** 31),
        on_improve=bound_trace.append)
    if outcome.status == optimizer.UNSAT:
        raise TrainError("encoding unsatisfiable below a valid upper bound")
    if outcome.model is None:
        if cfg.fallback_greedy:
            acc = evaluate(greedy_tree, selection_set)
            return TrainResult(kept=[(greedy_tree, acc)], status="feasible",
                               optimal_cost=None, optimal_size=None,
                               greedy_size=greedy_size, n_solutions=1,
                               all_accuracies=[acc], train_set=train_set,
                               selection_set=selection_set, bound_trace=bound_trace)
        raise TrainTimeoutError(greedy_tree)

    if outcome.status == optimizer.OPTIMAL:
        # every optimal model is a tree of cost-1 splits, one feature each
        models = optimizer.mdsol(outcome, cfg.k, inst.layout.feature_vars(),
                                 deadline=deadline,
                                 accept_suboptimal=cfg.accept_suboptimal_diverse,
                                 fixed_true_count=outcome.cost - 1)
        if not models:
            models = [outcome.model]
        status = "optimal"
    else:
        models = [outcome.model]
        status = "feasible"

    trees = [decode(inst, m) for m in models]
    for tree in trees:
        if evaluate(tree, train_set) != 1.0:
            raise TrainError("decoded tree is impure on its training split")

    kept: list[tuple[DecisionTree, float]] = []
    accuracies: list[float] = []
    best = -1.0
    for tree in trees:
        acc = evaluate(tree, selection_set)
        accuracies.append(acc)
        if acc >= best - cfg.delta:
            kept.append((tree, acc))
        best = max(best, acc)
    return TrainResult(kept=kept, status=status, optimal_cost=outcome.cost,
                       optimal_size=2 * outcome.cost - 1, greedy_size=greedy_size,
                       n_solutions=len(trees), all_accuracies=accuracies,
                       train_set=train_set, selection_set=selection_set,
                       bound_trace=bound_trace)


def select_final(kept: list[tuple[DecisionTree, float]], seed: int) -> int:
    """Index of the tree used as the final model: one kept entry at random."""
    rng = random.Random(derive_seed(seed, "tie-break"))
    return rng.randrange(len(kept))


# --- export -------------------------------------------------------------------


def export_tree(tree: DecisionTree, fmt: str, path: str,
                feature_names=None, class_names=None) -> None:
    """Write a tree as canonical JSON or as a DOT digraph."""
    if fmt == "json":
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(tree.to_json_obj(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    elif fmt == "dot":
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(to_dot(tree, feature_names, class_names))
    else:
        raise ValueError(f"unknown export format {fmt!r}")


def to_dot(tree: DecisionTree, feature_names=None, class_names=None) -> str:
    def feature_label(r):
        return feature_names[r] if feature_names else f"f{r}"

    def class_label(c):
        return str(class_names[c]) if class_names else str(c)

    lines = ["digraph tree {"]
    for node_id in sorted(tree.nodes):
        node = tree.nodes[node_id]
        if isinstance(node, Leaf):
            lines.append(f'  n{node_id} [shape=box, label="{class_label(node.label)}"];')
        else:
            lines.append(f'  n{node_id} [label="{feature_label(node.feature)}"];')
    for node_id in sorted(tree.nodes):
        node = tree.nodes[node_id]
        if isinstance(node, Split):
            lines.append(f'  n{node_id} -> n{node.on1} [label="1"];')
            lines.append(f'  n{node_id} -> n{node.on0} [label="0"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def load_tree_json(path: str) -> DecisionTree:
    with open(path, encoding="utf-8") as fh:
        return DecisionTree.from_json_obj(json.load(fh))
