"""Compile a binarized dataset into a weighted clause set whose optimum cost
reveals the minimal pure tree, and decode models back into trees.

Nodes 1..n are numbered breadth-first: left children take even indices,
right children odd ones, and the children of node i live in (i, 2i+1].
Odd-indexed `used` variables switch node pairs on or off, so minimizing the
number of true `used` variables minimizes the tree size. At a decision node
the examples with feature value 1 follow the right edge, those with value 0
the left edge; the sep0/sep1 variables track which example values have been
separated away from each node, and every leaf must be unreachable for all
training examples of other classes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .cnf import VarPool, WcnfFormula, at_most_one
from .dataset import BinDataset, check_separability


class EncodingError(Exception):
    """Invalid build parameters."""


class ModelIntegrityError(Exception):
    """A supposedly hard-satisfying model violates tree structure."""


def left_slots(i: int, n: int) -> list[int]:
    """Even indices that may hold the left child of node i."""
    return [j for j in range(i + 1, min(2 * i, n - 1) + 1) if j % 2 == 0]


def right_slots(i: int, n: int) -> list[int]:
    """Odd indices that may hold the right child of node i."""
    return [j for j in range(i + 2, min(2 * i + 1, n) + 1) if j % 2 == 1]


@dataclass
class VariableLayout:
    """Bidirectional map between encoding symbols and solver variables."""

    n: int
    k: int
    n_classes: int
    lb: int
    leaf: dict[int, int] = field(default_factory=dict)
    left: dict[tuple[int, int], int] = field(default_factory=dict)
    right: dict[tuple[int, int], int] = field(default_factory=dict)
    used: dict[int, int] = field(default_factory=dict)
    feat: dict[tuple[int, int], int] = field(default_factory=dict)
    tested: dict[tuple[int, int], int] = field(default_factory=dict)
    sep0: dict[tuple[int, int], int] = field(default_factory=dict)
    sep1: dict[tuple[int, int], int] = field(default_factory=dict)
    label: dict = field(default_factory=dict)  # j -> var, or (cls, j) -> var
    leaves_ge: dict[tuple[int, int], int] = field(default_factory=dict)
    splits_ge: dict[tuple[int, int], int] = field(default_factory=dict)

    @property
    def binary_labels(self) -> bool:
        return self.n_classes <= 2

    def used_lit(self, i: int) -> int:
        """Variable switching node i on (an even node shares its right
        sibling's switch)."""
        return self.used[i] if i % 2 == 1 else self.used[i + 1]

    def parent_edges(self, j: int) -> list[tuple[int, int]]:
        """(parent node, edge variable) pairs that can make j a child."""
        edges = []
        for i in range(j // 2, j):
            key = (i, j)
            var = self.left.get(key) if j % 2 == 0 else self.right.get(key)
            if var is not None:
                edges.append((i, var))
        return edges

    def feature_vars(self) -> list[int]:
        """All feature-assignment variables, the diversity targets."""
        return [self.feat[(r, j)] for j in range(1, self.n + 1) for r in range(self.k)]

    def to_json_obj(self) -> dict:
        def dump(d):
            return {",".join(str(x) for x in (k if isinstance(k, tuple) else (k,))): v
                    for k, v in d.items()}

        return {
            "n": self.n, "k": self.k, "n_classes": self.n_classes, "lb": self.lb,
            "leaf": dump(self.leaf), "left": dump(self.left), "right": dump(self.right),
            "used": dump(self.used), "feat": dump(self.feat), "tested": dump(self.tested),
            "sep0": dump(self.sep0), "sep1": dump(self.sep1), "label": dump(self.label),
            "leaves_ge": dump(self.leaves_ge), "splits_ge": dump(self.splits_ge),
        }

    def write_json(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_obj(), fh, indent=2, sort_keys=True)


@dataclass
class MpdtInstance:
    layout: VariableLayout
    formula: WcnfFormula
    dataset: BinDataset
    lb: int
    ub: int
    pool: VarPool


def build(ds: BinDataset, ub: int, lb: int = 3) -> MpdtInstance:
    """Instance whose optimal cost c yields a minimal pure tree of 2c-1 nodes."""
    if ub % 2 == 0:
        raise EncodingError(f"node upper bound must be odd, got {ub}")
    if lb % 2 == 0:
        raise EncodingError(f"node lower bound must be odd, got {lb}")
    if not 3 <= lb <= ub:
        raise EncodingError(f"bounds must satisfy 3 <= lb <= ub, got lb={lb} ub={ub}")
    conflicts = check_separability(ds)
    if conflicts:
        raise EncodingError(f"dataset is not separable: {conflicts[:3]}")
    if ds.k < 1:
        raise EncodingError("dataset has no features")

    n, k = ub, ds.k
    pool = VarPool()
    lay = VariableLayout(n=n, k=k, n_classes=ds.n_classes, lb=lb)
    f = WcnfFormula()

    for i in range(1, n + 1):
        lay.leaf[i] = pool.new_var()
    for i in range(1, n + 1):
        for j in left_slots(i, n):
            lay.left[(i, j)] = pool.new_var()
        for j in right_slots(i, n):
            lay.right[(i, j)] = pool.new_var()
    for i in range(1, n + 1, 2):
        lay.used[i] = pool.new_var()
    for j in range(1, n + 1):
        for r in range(k):
            lay.feat[(r, j)] = pool.new_var()
            lay.tested[(r, j)] = pool.new_var()
            lay.sep0[(r, j)] = pool.new_var()
            lay.sep1[(r, j)] = pool.new_var()
    if lay.binary_labels:
        for j in range(1, n + 1):
            lay.label[j] = pool.new_var()
    else:
        for m in range(ds.n_classes):
            for j in range(1, n + 1):
                lay.label[(m, j)] = pool.new_var()
    for i in range(1, n + 1):
        for t in range(1, (i + 1) // 2 + 1):
            lay.leaves_ge[(t, i)] = pool.new_var()
        for t in range(1, i + 1):
            lay.splits_ge[(t, i)] = pool.new_var()

    leaf, left, right = lay.leaf, lay.left, lay.right
    feat, tested, sep0, sep1 = lay.feat, lay.tested, lay.sep0, lay.sep1

    # one unit soft clause per node pair: pay for every pair switched on
    for i in range(1, n + 1, 2):
        f.add_soft([-lay.used[i]], 1)

    # the root is a decision node
    f.add_hard([-leaf[1]])
    for i in range(3, n + 1, 2):
        # a switched-off pair contains no leaves
        f.add_hard([lay.used[i], -leaf[i]])
        f.add_hard([lay.used[i], -leaf[i - 1]])
        # switched-on pairs form a prefix
        f.add_hard([-lay.used[i], lay.used[i - 2]])
    f.add_hard([lay.used_lit(lb)])

    for i in range(1, n + 1):
        slots = left_slots(i, n)
        if not slots:
            # no room for children: a used node this late must be a leaf
            f.add_hard([-lay.used_lit(i), leaf[i]])
            continue
        for j in slots:
            # leaves have no children
            f.add_hard([-leaf[i], -left[(i, j)]])
            # left and right children come as an adjacent pair
            f.add_hard([-left[(i, j)], right[(i, j + 1)]])
            f.add_hard([left[(i, j)], -right[(i, j + 1)]])
            # a child edge switches the child pair on
            f.add_hard([-left[(i, j)], lay.used_lit(j)])
        # a used decision node has exactly one left child
        f.add_hard([leaf[i], -lay.used_lit(i)] + [left[(i, j)] for j in slots])
        for c in at_most_one([left[(i, j)] for j in slots], pool):
            f.add_hard(c)

    for j in range(2, n + 1):
        edges = lay.parent_edges(j)
        # a used non-root node has exactly one parent
        f.add_hard([-lay.used_lit(j)] + [e for _, e in edges])
        for c in at_most_one([e for _, e in edges], pool):
            f.add_hard(c)

    # separation tracking: a node's path separates value v of feature r when
    # the parent tests r and the edge goes the other way, or the parent is
    # already separated for that value
    for r in range(k):
        f.add_hard([-sep0[(r, 1)]])
        f.add_hard([-sep1[(r, 1)]])
    for j in range(2, n + 1):
        for i, edge in lay.parent_edges(j):
            for r in range(k):
                if j % 2 == 1:  # right child: value-0 examples went left
                    f.add_hard([-edge, sep0[(r, j)], -feat[(r, i)]])
                    f.add_hard([-edge, sep0[(r, j)], -sep0[(r, i)]])
                    f.add_hard([-edge, -sep0[(r, j)], feat[(r, i)], sep0[(r, i)]])
                    f.add_hard([-edge, sep1[(r, j)], -sep1[(r, i)]])
                    f.add_hard([-edge, -sep1[(r, j)], sep1[(r, i)]])
                else:  # left child: value-1 examples went right
                    f.add_hard([-edge, sep1[(r, j)], -feat[(r, i)]])
                    f.add_hard([-edge, sep1[(r, j)], -sep1[(r, i)]])
                    f.add_hard([-edge, -sep1[(r, j)], feat[(r, i)], sep1[(r, i)]])
                    f.add_hard([-edge, sep0[(r, j)], -sep0[(r, i)]])
                    f.add_hard([-edge, -sep0[(r, j)], sep0[(r, i)]])

    # a feature tested above is never assigned again on the same path
    for j in range(2, n + 1):
        for i, edge in lay.parent_edges(j):
            for r in range(k):
                f.add_hard([-tested[(r, i)], -edge, -feat[(r, j)]])

    # tested = assigned here or tested at the parent
    for r in range(k):
        f.add_hard([-tested[(r, 1)], feat[(r, 1)]])
        f.add_hard([-feat[(r, 1)], tested[(r, 1)]])
    for j in range(2, n + 1):
        for r in range(k):
            f.add_hard([-feat[(r, j)], tested[(r, j)]])
        for i, edge in lay.parent_edges(j):
            for r in range(k):
                f.add_hard([-tested[(r, i)], -edge, tested[(r, j)]])
                f.add_hard([-edge, -tested[(r, j)], feat[(r, j)], tested[(r, i)]])

    for j in range(1, n + 1):
        # a used decision node carries exactly one feature
        f.add_hard([leaf[j], -lay.used_lit(j)] + [feat[(r, j)] for r in range(k)])
        for c in at_most_one([feat[(r, j)] for r in range(k)], pool):
            f.add_hard(c)
        for r in range(k):
            # leaves and switched-off nodes carry no feature
            f.add_hard([-leaf[j], -feat[(r, j)]])
            f.add_hard([lay.used_lit(j), -feat[(r, j)]])

    # purity: an example of another class must be separated away from a leaf
    distinct = sorted({(bits, y) for bits, y in zip(ds.examples, ds.labels)})
    sep_by_value = (sep0, sep1)
    for j in range(1, n + 1):
        for bits, y in distinct:
            reach = [sep_by_value[bits[r]][(r, j)] for r in range(k)]
            if lay.binary_labels:
                label_lit = lay.label[j] if y == 1 else -lay.label[j]
                f.add_hard([-leaf[j], label_lit] + reach)
            else:
                f.add_hard([-leaf[j], lay.label[(y, j)]] + reach)

    if not lay.binary_labels:
        for j in range(1, n + 1):
            class_vars = [lay.label[(m, j)] for m in range(ds.n_classes)]
            for var in class_vars:
                # only leaves carry a class
                f.add_hard([leaf[j], -var])
            f.add_hard([-leaf[j]] + class_vars)
            for c in at_most_one(class_vars, pool):
                f.add_hard(c)

    # counting rails: leaves_ge[t,i] / splits_ge[t,i] hold when the switched-on
    # prefix 1..i contains at least t leaves / decision nodes
    def define_counter(table, t, i, node_lit):
        x = table[(t, i)]
        prev_same = table.get((t, i - 1))  # false when out of range
        if t == 1:
            prev_down = True
        else:
            prev_down = table.get((t - 1, i - 1), False)
        on = lay.used_lit(i)
        if prev_down is True:
            if prev_same is None:
                # x <-> node_lit & on
                f.add_hard([-node_lit, -on, x])
                f.add_hard([-x, node_lit])
                f.add_hard([-x, on])
            else:
                f.add_hard([-prev_same, x])
                f.add_hard([-node_lit, -on, x])
                f.add_hard([-x, prev_same, node_lit])
                f.add_hard([-x, prev_same, on])
        elif prev_down is False:
            if prev_same is None:
                f.add_hard([-x])
            else:
                f.add_hard([-prev_same, x])
                f.add_hard([-x, prev_same])
        else:
            if prev_same is None:
                f.add_hard([-prev_down, -node_lit, -on, x])
                f.add_hard([-x, prev_down])
                f.add_hard([-x, node_lit])
                f.add_hard([-x, on])
            else:
                f.add_hard([-prev_same, x])
                f.add_hard([-prev_down, -node_lit, -on, x])
                f.add_hard([-x, prev_same, prev_down])
                f.add_hard([-x, prev_same, node_lit])
                f.add_hard([-x, prev_same, on])

    for i in range(1, n + 1):
        for t in range(1, (i + 1) // 2 + 1):
            define_counter(lay.leaves_ge, t, i, leaf[i])
        for t in range(1, i + 1):
            define_counter(lay.splits_ge, t, i, -leaf[i])

    # child slots shift with the counts: with t leaves up to i the slots from
    # 2(i-t+1) on are gone, and a decision node's slot is pinned from below
    for i in range(1, n + 1):
        for t in range(1, (i + 1) // 2 + 1):
            j0 = 2 * (i - t + 1)
            if (i, j0) in left:
                f.add_hard([-lay.leaves_ge[(t, i)], -left[(i, j0)]])
            if (i, j0 + 1) in right:
                f.add_hard([-lay.leaves_ge[(t, i)], -right[(i, j0 + 1)]])
        for t in range(max(1, (i + 1) // 2), i + 1):
            j0 = 2 * (t - 1)
            if (i, j0) in left:
                f.add_hard([-lay.splits_ge[(t, i)], -left[(i, j0)]])
            if (i, j0 + 1) in right:
                f.add_hard([-lay.splits_ge[(t, i)], -right[(i, j0 + 1)]])

    f.n_vars = max(f.n_vars, pool.n_vars)
    return MpdtInstance(layout=lay, formula=f, dataset=ds, lb=lb, ub=ub, pool=pool)


def decode(inst: MpdtInstance, model: list[bool]):
    """Materialize the switched-on nodes of a model as a decision tree."""
    from .trainer import DecisionTree, Leaf, Split  # local import: avoid cycle

    lay = inst.layout

    def used(i: int) -> bool:
        return model[lay.used_lit(i)]

    nodes = {}
    for i in range(1, lay.n + 1):
        if not used(i):
            break
        if model[lay.leaf[i]]:
            if lay.binary_labels:
                cls = 1 if model[lay.label[i]] else 0
            else:
                hits = [m for m in range(lay.n_classes) if model[lay.label[(m, i)]]]
                if len(hits) != 1:
                    raise ModelIntegrityError(f"leaf {i} carries {len(hits)} classes")
                cls = hits[0]
            nodes[i] = Leaf(cls)
        else:
            feats = [r for r in range(lay.k) if model[lay.feat[(r, i)]]]
            if len(feats) != 1:
                raise ModelIntegrityError(f"node {i} carries {len(feats)} features")
            children = [j for j in left_slots(i, lay.n) if model[lay.left[(i, j)]]]
            if len(children) != 1:
                raise ModelIntegrityError(f"node {i} has {len(children)} left children")
            j = children[0]
            if not (used(j) and used(j + 1)):
                raise ModelIntegrityError(f"node {i} points at switched-off children")
            # feature value 1 follows the right edge
            nodes[i] = Split(feats[0], on1=j + 1, on0=j)
    if not nodes:
        raise ModelIntegrityError("no switched-on nodes in model")
    tree = DecisionTree(nodes, root=1)
    tree.validate()
    return tree
