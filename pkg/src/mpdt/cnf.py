"""Propositional machinery: variables, clauses, cardinality counters, WCNF I/O.

Literals are nonzero ints in DIMACS style: variable ``v`` appears as the
positive literal ``v`` and its negation as ``-v``. A clause is a list of
literals. Weighted formulas keep hard clauses and ``(clause, weight)`` soft
pairs separately.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field


class CnfError(Exception):
    """Malformed clause set, bound or file content."""


class VarPool:
    """Issues fresh variable indices, strictly increasing, never reused."""

    def __init__(self, start: int = 0):
        if start < 0:
            raise ValueError("start must be >= 0")
        self._top = start

    def new_var(self) -> int:
        self._top += 1
        return self._top

    def new_vars(self, count: int) -> list[int]:
        return [self.new_var() for _ in range(count)]

    @property
    def n_vars(self) -> int:
        """Highest index issued so far."""
        return self._top


@dataclass
class WcnfFormula:
    """Hard clauses plus weighted soft clauses over variables 1..n_vars."""

    hard: list[list[int]] = field(default_factory=list)
    soft: list[tuple[list[int], int]] = field(default_factory=list)
    n_vars: int = 0

    def add_hard(self, clause: list[int]) -> None:
        self._track(clause)
        self.hard.append(list(clause))

    def add_soft(self, clause: list[int], weight: int = 1) -> None:
        if weight < 1:
            raise CnfError("soft weight must be >= 1")
        self._track(clause)
        self.soft.append((list(clause), weight))

    def _track(self, clause: list[int]) -> None:
        for lit in clause:
            if lit == 0:
                raise CnfError("literal 0 is not allowed")
            if abs(lit) > self.n_vars:
                self.n_vars = abs(lit)

    def soft_weight_sum(self) -> int:
        return sum(w for _, w in self.soft)

    def cost(self, model: list[bool]) -> int:
        """Total weight of soft clauses falsified by a model."""
        total = 0
        for clause, weight in self.soft:
            if not clause_satisfied(clause, model):
                total += weight
        return total


def clause_satisfied(clause: list[int], model: list[bool]) -> bool:
    for lit in clause:
        value = model[lit] if lit > 0 else not model[-lit]
        if value:
            return True
    return False


# --- cardinality helpers ------------------------------------------------

PAIRWISE_LIMIT = 6  # pairwise at-most-one is smaller up to about this many literals


def at_most_one(lits: list[int], pool: VarPool, pairwise_limit: int = PAIRWISE_LIMIT) -> list[list[int]]:
    """Clauses forbidding two or more of `lits` to hold simultaneously.

    Pairwise for short lists, a sequential ladder (one auxiliary per step)
    above `pairwise_limit`.
    """
    n = len(lits)
    if n <= 1:
        return []
    if n <= pairwise_limit:
        return [[-lits[i], -lits[j]] for i in range(n) for j in range(i + 1, n)]
    clauses = []
    steps = pool.new_vars(n - 1)  # steps[i]: some literal among lits[..i] holds
    clauses.append([-lits[0], steps[0]])
    for i in range(1, n - 1):
        clauses.append([-lits[i], steps[i]])
        clauses.append([-steps[i - 1], steps[i]])
        clauses.append([-lits[i], -steps[i - 1]])
    clauses.append([-lits[n - 1], -steps[n - 2]])
    return clauses


def exactly_one(lits: list[int], pool: VarPool, pairwise_limit: int = PAIRWISE_LIMIT) -> list[list[int]]:
    """Clauses satisfied exactly when one of `lits` holds."""
    if not lits:
        raise CnfError("exactly_one over an empty literal list")
    return [list(lits)] + at_most_one(lits, pool, pairwise_limit)


class _Node:
    """Balanced counter tree node; outs[t] is the 'at least t inputs' output."""

    __slots__ = ("left", "right", "outs", "size", "emitted")

    def __init__(self, left, right, outs, size):
        self.left = left
        self.right = right
        self.outs = outs  # index 0 unused; leaf nodes store [None, literal]
        self.size = size
        self.emitted = 0  # highest output index with clauses emitted (lazy modes)


def _build_tree(lits: list[int]) -> _Node:
    if len(lits) == 1:
        return _Node(None, None, [None, lits[0]], 1)
    mid = len(lits) // 2
    left = _build_tree(lits[:mid])
    right = _build_tree(lits[mid:])
    return _Node(left, right, [None], left.size + right.size)


class IncTotalizer:
    """Incremental at-most-k counter over a fixed literal multiset.

    Output variable ``out(t)`` may only become true when at least ``t``
    inputs are true, so the unit clause ``-out(b+1)`` caps the true-input
    count at ``b``. Bounds tighten monotonically: each ``update`` call must
    use a smaller bound than the previous one. ``assume_lit`` exposes the
    same cap as a literal for one-shot solver assumptions.
    """

    def __init__(self, lits: list[int], pool: VarPool):
        self.lits = list(lits)
        self.pool = pool
        self.n = len(self.lits)
        self.bound = self.n + 1  # no restriction yet
        self._root = _build_tree(self.lits) if self.lits else None
        self._materialized = False

    def _materialize(self, node: _Node, out: list[list[int]]) -> None:
        if node.size == 1:
            return
        self._materialize(node.left, out)
        self._materialize(node.right, out)
        p, q = node.left.size, node.right.size
        node.outs.extend(self.pool.new_vars(p + q))
        a, b, r = node.left.outs, node.right.outs, node.outs
        for i in range(p + 1):
            for j in range(q + 1):
                if i + j == 0:
                    continue
                clause = []
                if i > 0:
                    clause.append(-a[i])
                if j > 0:
                    clause.append(-b[j])
                clause.append(r[i + j])
                out.append(clause)

    def update(self, bound: int) -> list[list[int]]:
        """Clauses enforcing 'at most `bound` inputs true' from now on."""
        if bound < 0:
            raise CnfError("totalizer bound must be >= 0")
        if bound >= self.bound:
            raise CnfError(f"bound {bound} not below current bound {self.bound}")
        clauses: list[list[int]] = []
        if self._root is not None and not self._materialized:
            self._materialize(self._root, clauses)
            self._materialized = True
        lit = self.assume_lit(bound)
        if lit is not None:
            clauses.append([lit])
        self.bound = bound
        return clauses

    def assume_lit(self, bound: int) -> int | None:
        """Literal capping the count at `bound` for a single solver call.

        Returns None when the cap is trivial (bound >= input count). Sum
        clauses must have been materialized by a prior update().
        """
        if bound >= self.n:
            return None
        if self._root is None or not self._materialized:
            raise CnfError("assume_lit before the first update()")
        return -self._root.outs[bound + 1]


class BoundedAtMost:
    """Lazy at-most-k counter: clauses are materialized only up to the
    largest bound probed, so small bounds stay cheap. Bounds may be probed
    in any order; nothing is asserted by this class itself."""

    def __init__(self, lits: list[int], pool: VarPool):
        self.lits = list(lits)
        self.pool = pool
        self.n = len(self.lits)
        self._root = _build_tree(self.lits) if self.lits else None

    def _materialize(self, node: _Node, cap: int, out: list[list[int]]) -> None:
        if node.size == 1:
            return
        cap = min(cap, node.size)
        if cap <= node.emitted:
            return
        self._materialize(node.left, cap, out)
        self._materialize(node.right, cap, out)
        p, q = node.left.size, node.right.size
        while len(node.outs) - 1 < cap:
            node.outs.append(self.pool.new_var())
        a, b, r = node.left.outs, node.right.outs, node.outs
        for i in range(min(p, cap) + 1):
            for j in range(min(q, cap) + 1):
                t = i + j
                if t == 0 or t > cap or t <= node.emitted:
                    continue
                clause = []
                if i > 0:
                    clause.append(-a[i])
                if j > 0:
                    clause.append(-b[j])
                clause.append(r[t])
                out.append(clause)
        node.emitted = cap

    def atmost(self, bound: int) -> tuple[list[list[int]], int | None]:
        """Clauses plus a literal that, when assumed, caps the count at
        `bound`; the literal is None when the cap is trivial."""
        if bound < 0:
            raise CnfError("bound must be >= 0")
        if bound >= self.n:
            return [], None
        clauses: list[list[int]] = []
        self._materialize(self._root, bound + 1, clauses)
        return clauses, -self._root.outs[bound + 1]


class AtLeastCounter:
    """Lazy at-least-k counter over a fixed literal multiset.

    Output ``out(t)``, once forced true, requires at least ``t`` inputs to
    be true. Clauses are materialized only up to the largest threshold
    requested, which keeps the encoding small when thresholds stay low.
    """

    def __init__(self, lits: list[int], pool: VarPool):
        self.lits = list(lits)
        self.pool = pool
        self.n = len(self.lits)
        self._root = _build_tree(self.lits) if self.lits else None

    def _materialize(self, node: _Node, cap: int, out: list[list[int]]) -> None:
        if node.size == 1:
            return
        cap = min(cap, node.size)
        if cap <= node.emitted:
            return
        self._materialize(node.left, cap, out)
        self._materialize(node.right, cap, out)
        p, q = node.left.size, node.right.size
        while len(node.outs) - 1 < cap:
            node.outs.append(self.pool.new_var())
        a, b, r = node.left.outs, node.right.outs, node.outs
        for t in range(node.emitted + 1, cap + 1):
            # out(t) forces, for every split i+(t-1-i), one side to exceed it
            for i in range(t):
                j = t - 1 - i
                if i > p or j > q:
                    continue
                clause = []
                if i + 1 <= p:
                    clause.append(a[i + 1])
                if j + 1 <= q:
                    clause.append(b[j + 1])
                clause.append(-r[t])
                out.append(clause)
        node.emitted = cap

    def require(self, threshold: int) -> tuple[list[list[int]], int]:
        """Clauses plus a literal that, when assumed, forces >= threshold."""
        if threshold < 1 or threshold > self.n:
            raise CnfError(f"threshold {threshold} out of range 1..{self.n}")
        clauses: list[list[int]] = []
        self._materialize(self._root, threshold, clauses)
        return clauses, self._root.outs[threshold]


# --- DIMACS / WCNF files -------------------------------------------------


def write_wcnf(formula: WcnfFormula, path: str) -> None:
    """Classic `p wcnf` format; hard clauses carry the top weight."""
    top = formula.soft_weight_sum() + 1
    lines = [f"p wcnf {formula.n_vars} {len(formula.hard) + len(formula.soft)} {top}"]
    for clause in formula.hard:
        lines.append(" ".join([str(top)] + [str(l) for l in clause] + ["0"]))
    for clause, weight in formula.soft:
        lines.append(" ".join([str(weight)] + [str(l) for l in clause] + ["0"]))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_wcnf(path: str) -> WcnfFormula:
    formula = WcnfFormula()
    top = None
    declared_vars = 0
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("c"):
                continue
            if line.startswith("p"):
                parts = line.split()
                if len(parts) != 5 or parts[1] != "wcnf":
                    raise CnfError(f"malformed wcnf header: {line!r}")
                try:
                    declared_vars, _, top = int(parts[2]), int(parts[3]), int(parts[4])
                except ValueError as exc:
                    raise CnfError(f"malformed wcnf header: {line!r}") from exc
                continue
            if top is None:
                raise CnfError("clause line before wcnf header")
            nums = [int(tok) for tok in line.split()]
            if nums[-1] != 0:
                raise CnfError(f"clause line not 0-terminated: {line!r}")
            weight, lits = nums[0], nums[1:-1]
            for lit in lits:
                if lit == 0 or abs(lit) > declared_vars:
                    raise CnfError(f"literal {lit} out of declared range")
            if weight == top:
                formula.add_hard(lits)
            elif 1 <= weight < top:
                formula.add_soft(lits, weight)
            else:
                raise CnfError(f"invalid clause weight {weight} (top={top})")
    formula.n_vars = max(formula.n_vars, declared_vars)
    return formula


def read_dimacs(path: str) -> tuple[int, list[list[int]]]:
    """Plain `p cnf` reader for the standalone solver subcommand."""
    n_vars = 0
    clauses: list[list[int]] = []
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line[0] in "c%":
                continue
            if line.startswith("p"):
                parts = line.split()
                if len(parts) != 4 or parts[1] != "cnf":
                    raise CnfError(f"malformed cnf header: {line!r}")
                n_vars = int(parts[2])
                continue
            nums = [int(tok) for tok in line.split()]
            if nums and nums[-1] == 0:
                nums.pop()
            if nums:
                clauses.append(nums)
                n_vars = max(n_vars, max(abs(l) for l in nums))
    return n_vars, clauses


def random_wcnf(rng: random.Random, max_vars: int = 12, max_clauses: int = 14) -> WcnfFormula:
    """Small random weighted formula, used by round-trip and solver tests."""
    n_vars = rng.randint(1, max_vars)
    formula = WcnfFormula(n_vars=n_vars)
    for _ in range(rng.randint(0, max_clauses)):
        width = rng.randint(1, min(4, n_vars))
        variables = rng.sample(range(1, n_vars + 1), width)
        clause = [v if rng.random() < 0.5 else -v for v in variables]
        if rng.random() < 0.5:
            formula.add_hard(clause)
        else:
            formula.add_soft(clause, rng.randint(1, 4))
    return formula
