"""Exhaustive reference procedures for tests: minimal pure trees and MaxSAT.

Everything here trades speed for trustworthiness; budgets keep inputs small
enough that full enumeration stays feasible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import count

import numpy as np

from .cnf import WcnfFormula


class BudgetExceeded(Exception):
    """Input larger than the exhaustive-search budget allows."""


@dataclass(frozen=True)
class OracleBudget:
    max_features: int = 6
    max_examples: int = 24
    max_tree_size: int = 11
    max_variables: int = 20


def _distinct_points(examples, labels):
    """Deduplicate rows; a bit-vector with two labels has no pure tree."""
    seen: dict[tuple, int] = {}
    for bits, y in zip(examples, labels):
        key = tuple(bits)
        if key in seen and seen[key] != y:
            raise ValueError(f"inseparable rows with features {key}")
        seen[key] = y
    return list(seen.items())


def count_pure_trees(points, n_features: int, size: int, banned: frozenset = frozenset(),
                     _memo=None) -> int:
    """Number of distinct trees of exactly `size` nodes pure on `points`.

    A tree is a feature choice plus left/right subtrees; features never
    repeat on a root-to-leaf path. Leaf labels are not enumerated: a leaf
    is feasible when the examples reaching it agree, so two trees differing
    only in the label of an example-free leaf count once.
    """
    if _memo is None:
        _memo = {}
    if size == 1:
        return 1 if len({y for _, y in points}) <= 1 else 0
    key = (frozenset(bits for bits, _ in points), size, banned)
    if key in _memo:
        return _memo[key]
    total = 0
    for r in range(n_features):
        if r in banned:
            continue
        ones = [(bits, y) for bits, y in points if bits[r] == 1]
        zeros = [(bits, y) for bits, y in points if bits[r] == 0]
        sub_banned = banned | {r}
        for left_size in range(1, size - 1, 2):
            right_size = size - 1 - left_size
            n1 = count_pure_trees(ones, n_features, right_size, sub_banned, _memo)
            if n1 == 0:
                continue
            n0 = count_pure_trees(zeros, n_features, left_size, sub_banned, _memo)
            total += n1 * n0
    _memo[key] = total
    return total


def brute_force_mpdt(ds, budget: OracleBudget = OracleBudget()):
    """Exact minimal pure tree size by enumeration of increasing odd sizes.

    Returns (size, tree) where the tree is one witness of minimal size.
    """
    from .trainer import DecisionTree, Leaf, Split  # local import: avoid cycle

    if ds.k > budget.max_features:
        raise BudgetExceeded(f"{ds.k} features exceeds budget {budget.max_features}")
    if len(ds.examples) > budget.max_examples:
        raise BudgetExceeded(f"{len(ds.examples)} examples exceeds budget {budget.max_examples}")
    points = _distinct_points(ds.examples, ds.labels)

    def build_witness(pts, size, banned, ids):
        """First pure tree of this exact size, as (nodes dict, root id)."""
        node_id = next(ids)
        if size == 1:
            labels = {y for _, y in pts}
            label = labels.pop() if labels else 0
            return {node_id: Leaf(label)}, node_id
        for r in range(ds.k):
            if r in banned:
                continue
            ones = [(bits, y) for bits, y in pts if bits[r] == 1]
            zeros = [(bits, y) for bits, y in pts if bits[r] == 0]
            sub = banned | {r}
            for left_size in range(1, size - 1, 2):
                right_size = size - 1 - left_size
                if count_pure_trees(ones, ds.k, right_size, sub) == 0:
                    continue
                if count_pure_trees(zeros, ds.k, left_size, sub) == 0:
                    continue
                left_nodes, left_root = build_witness(zeros, left_size, sub, ids)
                right_nodes, right_root = build_witness(ones, right_size, sub, ids)
                nodes = {node_id: Split(r, on1=right_root, on0=left_root)}
                nodes.update(left_nodes)
                nodes.update(right_nodes)
                return nodes, node_id
        raise AssertionError("witness requested for an infeasible size")

    for size in count(1, 2):
        if size > budget.max_tree_size:
            raise BudgetExceeded(f"no pure tree within size budget {budget.max_tree_size}")
        if count_pure_trees(points, ds.k, size) > 0:
            nodes, root = build_witness(points, size, frozenset(), count(1))
            return size, DecisionTree(nodes, root)


def count_minimal_pure_trees(ds, budget: OracleBudget = OracleBudget()):
    """(minimal size, number of distinct minimal pure trees)."""
    if ds.k > budget.max_features:
        raise BudgetExceeded(f"{ds.k} features exceeds budget {budget.max_features}")
    points = _distinct_points(ds.examples, ds.labels)
    for size in count(1, 2):
        if size > budget.max_tree_size:
            raise BudgetExceeded(f"no pure tree within size budget {budget.max_tree_size}")
        n = count_pure_trees(points, ds.k, size)
        if n > 0:
            return size, n


def brute_force_maxsat(formula: WcnfFormula, budget: OracleBudget = OracleBudget()):
    """Minimal soft cost over all assignments, or math.inf if hard-unsatisfiable.

    Assignments are enumerated as the bits of 0..2^n-1 with numpy, variable v
    mapped to bit v-1.
    """
    n = formula.n_vars
    if n > budget.max_variables:
        raise BudgetExceeded(f"{n} variables exceeds budget {budget.max_variables}")
    count_assignments = 1 << n
    idx = np.arange(count_assignments, dtype=np.uint32)

    def sat_mask(clause):
        mask = np.zeros(count_assignments, dtype=bool)
        for lit in clause:
            bit = (idx >> (abs(lit) - 1)) & 1
            mask |= bit.astype(bool) if lit > 0 else ~bit.astype(bool)
        return mask

    feasible = np.ones(count_assignments, dtype=bool)
    for clause in formula.hard:
        feasible &= sat_mask(clause)
    if not feasible.any():
        return math.inf
    costs = np.zeros(count_assignments, dtype=np.int64)
    for clause, weight in formula.soft:
        costs[~sat_mask(clause)] += weight
    return int(costs[feasible].min())
