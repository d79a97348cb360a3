"""Linear SAT-based MaxSAT with a retained satisfiable clause set, and
diverse enumeration of optimal solutions.

The cost loop relaxes every soft clause with a fresh blocking variable,
counts blockers with an incremental at-most counter, and probes each
tighter bound as a one-shot assumption. Bounds matching a found model are
asserted permanently, so after an OPTIMAL run the solver's clause set is
satisfiable and its models are exactly the optimal-cost solutions.

Diverse extraction re-optimizes over that clause set: each found solution
is blocked on the target variables, and unit soft clauses preferring the
opposite polarities accumulate across iterations. Diversity bounds are
held as assumptions only, never asserted, since a later iteration may
legitimately need a worse diversity cost than an earlier optimum.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from . import sat
from .cnf import (AtLeastCounter, BoundedAtMost, IncTotalizer, VarPool,
                  WcnfFormula, clause_satisfied)
from .sat import SatSolver

OPTIMAL = "OPTIMAL"
FEASIBLE = "FEASIBLE"
UNSAT = "UNSAT"


@dataclass
class SolveOutcome:
    """Best cost and model plus the live solver for further enumeration."""

    status: str
    cost: int
    model: list[bool] | None
    solver: SatSolver
    pool: VarPool
    formula: WcnfFormula

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


@dataclass
class DiverseRun:
    """Bookkeeping of one diverse-extraction run."""

    target_vars: list[int]
    blocking_clauses: list[list[int]] = field(default_factory=list)
    diversity_units: list[int] = field(default_factory=list)
    solutions: list[list[bool]] = field(default_factory=list)
    exhausted: bool = False


def _cost_of(formula: WcnfFormula, model: list[bool]) -> int:
    return formula.cost(model)


def linear_maxsat(formula: WcnfFormula, timeout: float | None = None,
                  deadline: float | None = None, seed: int = 0,
                  on_improve=None) -> SolveOutcome:
    """Minimize the weighted soft-clause cost subject to the hard clauses.

    Each improved bound is reported through `on_improve(cost)`. On timeout
    the best bound and model found so far are returned with FEASIBLE
    status; a model is absent only when even the first query did not
    finish (or the hard clauses are unsatisfiable, status UNSAT).
    """
    if timeout is not None and deadline is None:
        deadline = time.monotonic() + timeout
    pool = VarPool(formula.n_vars)
    solver = SatSolver(seed=seed)
    solver.reserve(formula.n_vars)
    for clause in formula.hard:
        solver.add_clause(clause)
    counter_inputs: list[int] = []
    for clause, weight in formula.soft:
        blocker = pool.new_var()
        solver.add_clause(clause + [blocker])
        counter_inputs.extend([blocker] * weight)
    total_weight = formula.soft_weight_sum()

    solver.set_budget(deadline=deadline)
    status = solver.solve()
    if status == sat.UNSAT:
        return SolveOutcome(UNSAT, total_weight + 1, None, solver, pool, formula)
    if status == sat.INTERRUPTED:
        return SolveOutcome(FEASIBLE, total_weight + 1, None, solver, pool, formula)

    model = solver.model()
    cost = _cost_of(formula, model)
    if on_improve:
        on_improve(cost)
    counter = IncTotalizer(counter_inputs, pool) if counter_inputs else None

    while cost > 0:
        if deadline is not None and time.monotonic() > deadline:
            return SolveOutcome(FEASIBLE, cost, model, solver, pool, formula)
        # pin the proven bound, then probe one better as an assumption
        for clause in counter.update(cost):
            solver.add_clause(clause)
        probe = counter.assume_lit(cost - 1)
        solver.set_budget(deadline=deadline)
        status = solver.solve([probe] if probe is not None else [])
        if status == sat.UNSAT:
            break
        if status == sat.INTERRUPTED:
            return SolveOutcome(FEASIBLE, cost, model, solver, pool, formula)
        model = solver.model()
        new_cost = _cost_of(formula, model)
        assert new_cost < cost, "cost must strictly decrease"
        cost = new_cost
        if on_improve:
            on_improve(cost)
    return SolveOutcome(OPTIMAL, cost, model, solver, pool, formula)


def _minimize_agreements(solver: SatSolver, pool: VarPool, units: list[int],
                         deadline: float | None):
    """Best model of the solver's clause set by falsified diversity units.

    Returns (model, proved_optimal) or (None, exhausted_flag): None with
    True means the clause set is unsatisfiable, None with False a timeout
    before any model.
    """
    solver.set_budget(deadline=deadline)
    status = solver.solve()
    if status == sat.UNSAT:
        return None, True
    if status == sat.INTERRUPTED:
        return None, False
    best = solver.model()
    if not units:
        return best, True

    def agreements(model):
        return sum(0 if clause_satisfied([u], model) else 1 for u in units)

    counter = AtLeastCounter(units, pool)
    cost = agreements(best)
    while cost > 0:
        if deadline is not None and time.monotonic() > deadline:
            return best, False
        clauses, lit = counter.require(len(units) - cost + 1)
        for clause in clauses:
            solver.add_clause(clause)
        solver.set_budget(deadline=deadline)
        status = solver.solve([lit])
        if status == sat.UNSAT:
            break
        if status == sat.INTERRUPTED:
            return best, False
        best = solver.model()
        cost = agreements(best)
    return best, True


def _minimize_weighted_overlap(solver: SatSolver, pool: VarPool,
                               multiplicity: dict[int, int], floor: int,
                               deadline: float | None):
    """Model minimizing the multiplicity-weighted count of true target vars.

    Equivalent to minimizing total agreement with the prior solutions when
    every model sets the same number of target variables true: disagreement
    then differs from the true-variable overlap only by a constant. Bounds
    are searched upward from `floor` (a sound lower bound), so counter
    clauses stay proportional to the optimum rather than to the unit count.
    """
    solver.set_budget(deadline=deadline)
    status = solver.solve()
    if status == sat.UNSAT:
        return None, True, 0
    if status == sat.INTERRUPTED:
        return None, False, floor
    model = solver.model()
    if not multiplicity:
        return model, True, 0

    inputs = []
    for v in sorted(multiplicity):
        inputs.extend([v] * multiplicity[v])
    weight = sum(multiplicity[v] for v in multiplicity if model[v])
    counter = BoundedAtMost(inputs, pool)
    for bound in range(floor, weight):
        if deadline is not None and time.monotonic() > deadline:
            return model, False, bound
        clauses, lit = counter.atmost(bound)
        for clause in clauses:
            solver.add_clause(clause)
        solver.set_budget(deadline=deadline)
        status = solver.solve([lit] if lit is not None else [])
        if status == sat.INTERRUPTED:
            return model, False, bound
        if status == sat.SAT:
            return solver.model(), True, bound
    return model, True, weight


def mdsol(outcome: SolveOutcome, k: int, target_vars: list[int],
          deadline: float | None = None, accept_suboptimal: bool = False,
          fixed_true_count: int | None = None, on_solution=None) -> list[list[bool]]:
    """Up to k solutions of the retained clause set, pairwise distinct on
    the target variables, each maximizing disagreement with its
    predecessors on those variables.

    When every model of the clause set is known to make exactly
    `fixed_true_count` target variables true, the diversity objective is
    optimized through the much smaller true-variable overlap count. Stops
    early when the clause set is exhausted or the time budget runs out; on
    timeout a non-optimal diverse model is kept only when
    `accept_suboptimal` is set.
    """
    if not target_vars:
        raise ValueError("target variable set must not be empty")
    if outcome.model is None:
        raise ValueError("mdsol requires an outcome holding a model")
    run = DiverseRun(target_vars=sorted(target_vars))
    solver, pool = outcome.solver, outcome.pool
    multiplicity: dict[int, int] = {}
    floor = 0
    while len(run.solutions) < k:
        if fixed_true_count is None:
            model, proved = _minimize_agreements(solver, pool, run.diversity_units, deadline)
        else:
            model, proved, floor = _minimize_weighted_overlap(
                solver, pool, multiplicity, floor, deadline)
        if model is None:
            run.exhausted = proved
            break
        if not proved and not accept_suboptimal:
            break
        true_vars = [v for v in run.target_vars if model[v]]
        if fixed_true_count is not None and len(true_vars) != fixed_true_count:
            raise ValueError(
                f"model sets {len(true_vars)} target vars, expected {fixed_true_count}")
        run.solutions.append(model)
        if on_solution:
            on_solution(len(run.solutions))
        literals = [v if model[v] else -v for v in run.target_vars]
        if fixed_true_count is not None:
            # same true-variable set means same projection, so flipping one
            # true variable off is a complete block
            blocking = [-v for v in true_vars]
            for v in true_vars:
                multiplicity[v] = multiplicity.get(v, 0) + 1
        else:
            blocking = [-lit for lit in literals]
            run.diversity_units.extend(-lit for lit in literals)
        solver.add_clause(blocking)
        run.blocking_clauses.append(blocking)
    return run.solutions
