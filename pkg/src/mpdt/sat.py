"""Incremental CDCL SAT solver with assumptions.

Conflict-driven clause learning with two-watched-literal propagation,
first-UIP learning with local clause minimization, activity-based
branching, phase saving, Luby restarts and learned-clause reduction.
Clauses persist across `solve` calls; assumptions hold for one call only.
Fully deterministic for a fixed seed and call sequence.
"""

from __future__ import annotations

import time

SAT = "SAT"
UNSAT = "UNSAT"
INTERRUPTED = "INTERRUPTED"

_LUBY_START = 100  # conflicts allowed before the first restart


def luby(i: int) -> int:
    """i-th element (1-based) of the Luby restart sequence."""
    k = 1
    while (1 << k) - 1 < i:
        k += 1
    while (1 << k) - 1 != i:
        i -= (1 << (k - 1)) - 1
        k = 1
        while (1 << k) - 1 < i:
            k += 1
    return 1 << (k - 1)


class _Clause(list):
    __slots__ = ("learnt", "lbd", "deleted")

    def __init__(self, lits, learnt=False, lbd=0):
        super().__init__(lits)
        self.learnt = learnt
        self.lbd = lbd
        self.deleted = False


class _VarHeap:
    """Max-heap over variable activities with in-heap position tracking."""

    def __init__(self):
        self.heap: list[int] = []
        self.pos: list[int] = []

    def grow(self, n_vars: int) -> None:
        while len(self.pos) <= n_vars:
            self.pos.append(-1)

    def __contains__(self, v: int) -> bool:
        return self.pos[v] >= 0

    def push(self, v: int, act: list[float]) -> None:
        if self.pos[v] >= 0:
            return
        self.heap.append(v)
        self.pos[v] = len(self.heap) - 1
        self._sift_up(self.pos[v], act)

    def bump(self, v: int, act: list[float]) -> None:
        if self.pos[v] >= 0:
            self._sift_up(self.pos[v], act)

    def pop(self, act: list[float]) -> int:
        heap, pos = self.heap, self.pos
        top = heap[0]
        last = heap.pop()
        pos[top] = -1
        if heap:
            heap[0] = last
            pos[last] = 0
            self._sift_down(0, act)
        return top

    def __len__(self) -> int:
        return len(self.heap)

    def _sift_up(self, i: int, act: list[float]) -> None:
        heap, pos = self.heap, self.pos
        v = heap[i]
        a = act[v]
        while i > 0:
            parent = (i - 1) >> 1
            pv = heap[parent]
            if act[pv] >= a:
                break
            heap[i] = pv
            pos[pv] = i
            i = parent
        heap[i] = v
        pos[v] = i

    def _sift_down(self, i: int, act: list[float]) -> None:
        heap, pos = self.heap, self.pos
        n = len(heap)
        v = heap[i]
        a = act[v]
        while True:
            left = 2 * i + 1
            if left >= n:
                break
            best = left
            right = left + 1
            if right < n and act[heap[right]] > act[heap[left]]:
                best = right
            bv = heap[best]
            if a >= act[bv]:
                break
            heap[i] = bv
            pos[bv] = i
            i = best
        heap[i] = v
        pos[v] = i


class SatSolver:
    """CDCL solver over DIMACS-style integer literals."""

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.n_vars = 0
        self.ok = True
        # literal l (internal 2v / 2v+1) -> 0 undef, 1 true, 2 false
        self._val = bytearray(2)
        self._watches: list[list] = [[], []]
        self._level = [0]
        self._reason: list = [None]
        self._activity = [0.0]
        self._phase = [False]
        self._seen = bytearray(1)
        self._heap = _VarHeap()
        self._heap.grow(0)
        self._trail: list[int] = []
        self._trail_lim: list[int] = []
        self._qhead = 0
        self._clauses: list[_Clause] = []
        self._learnts: list[_Clause] = []
        self._var_inc = 1.0
        self._max_learnts = 4000
        self._model: list[bool] | None = None
        self._last_status: str | None = None
        # statistics
        self.conflicts = 0
        self.decisions = 0
        self.propagations = 0
        # budgets (None = unlimited)
        self._conflict_budget: int | None = None
        self._deadline: float | None = None

    # -- variable / clause management -------------------------------------

    def _grow(self, v: int) -> None:
        while self.n_vars < v:
            self.n_vars += 1
            self._val.extend(b"\x00\x00")
            self._watches.append([])
            self._watches.append([])
            self._level.append(0)
            self._reason.append(None)
            self._activity.append(0.0)
            self._phase.append(False)
            self._seen.append(0)
            self._heap.grow(self.n_vars)
            self._heap.push(self.n_vars, self._activity)

    def reserve(self, n_vars: int) -> None:
        """Grow the variable tables up to n_vars."""
        self._grow(n_vars)

    def add_clause(self, lits: list[int]) -> None:
        """Add a clause, simplified against the top-level assignment."""
        if self._trail_lim:
            self._backtrack(0)
        if not self.ok:
            return
        top = 0
        for lit in lits:
            v = abs(lit)
            if v > self.n_vars:
                self._grow(v)
            if v > top:
                top = v
        val = self._val
        seen_pos = set()
        clause = []
        for lit in lits:
            il = (abs(lit) << 1) | (lit < 0)
            w = val[il]
            if w == 1:
                return  # satisfied at top level
            if w == 2:
                continue  # falsified at top level, drop literal
            if il ^ 1 in seen_pos:
                return  # tautology
            if il not in seen_pos:
                seen_pos.add(il)
                clause.append(il)
        if not clause:
            self.ok = False
            return
        if len(clause) == 1:
            self._enqueue(clause[0], None)
            if self._propagate() is not None:
                self.ok = False
            return
        c = _Clause(clause)
        self._clauses.append(c)
        self._attach(c)

    def _attach(self, c: _Clause) -> None:
        self._watches[c[0]].append((c[1], c))
        self._watches[c[1]].append((c[0], c))

    # -- assignment handling ----------------------------------------------

    def _enqueue(self, lit: int, reason) -> None:
        val = self._val
        val[lit] = 1
        val[lit ^ 1] = 2
        v = lit >> 1
        self._level[v] = len(self._trail_lim)
        self._reason[v] = reason
        self._trail.append(lit)

    def _backtrack(self, level: int) -> None:
        if len(self._trail_lim) <= level:
            return
        val = self._val
        phase = self._phase
        heap = self._heap
        act = self._activity
        limit = self._trail_lim[level]
        for i in range(len(self._trail) - 1, limit - 1, -1):
            lit = self._trail[i]
            v = lit >> 1
            phase[v] = not (lit & 1)
            val[lit] = 0
            val[lit ^ 1] = 0
            self._reason[v] = None
            heap.push(v, act)
        del self._trail[limit:]
        del self._trail_lim[level:]
        self._qhead = min(self._qhead, limit)

    # -- propagation -------------------------------------------------------

    def _propagate(self):
        trail = self._trail
        val = self._val
        watches = self._watches
        while self._qhead < len(trail):
            p = trail[self._qhead]
            self._qhead += 1
            self.propagations += 1
            false_lit = p ^ 1
            ws = watches[false_lit]
            i = j = 0
            n = len(ws)
            while i < n:
                blocker, c = ws[i]
                if val[blocker] == 1:
                    ws[j] = ws[i]
                    j += 1
                    i += 1
                    continue
                if c.deleted:
                    i += 1
                    continue
                if c[0] == false_lit:
                    c[0] = c[1]
                    c[1] = false_lit
                first = c[0]
                if first != blocker and val[first] == 1:
                    ws[j] = (first, c)
                    j += 1
                    i += 1
                    continue
                for k in range(2, len(c)):
                    lk = c[k]
                    if val[lk] != 2:
                        c[1] = lk
                        c[k] = false_lit
                        watches[lk].append((first, c))
                        break
                else:
                    if val[first] == 2:  # conflict
                        while i < n:
                            ws[j] = ws[i]
                            j += 1
                            i += 1
                        del ws[j:]
                        return c
                    ws[j] = (first, c)
                    j += 1
                    i += 1
                    self._enqueue(first, c)
                    continue
                i += 1
            del ws[j:]
        return None

    # -- conflict analysis ---------------------------------------------------

    def _bump(self, v: int) -> None:
        act = self._activity
        act[v] += self._var_inc
        if act[v] > 1e100:
            inv = 1e-100
            for i in range(1, self.n_vars + 1):
                act[i] *= inv
            self._var_inc *= inv
        self._heap.bump(v, act)

    def _analyze(self, confl: _Clause) -> tuple[list[int], int, int]:
        seen = self._seen
        level = self._level
        reason = self._reason
        trail = self._trail
        current = len(self._trail_lim)
        learnt = [0]
        to_clear = []
        counter = 0
        p = -1
        idx = len(trail) - 1
        c = confl
        while True:
            start = 1 if (p != -1 and c[0] == p) else 0
            for q in c[start:]:
                if q == p:
                    continue
                v = q >> 1
                if not seen[v] and level[v] > 0:
                    seen[v] = 1
                    to_clear.append(v)
                    self._bump(v)
                    if level[v] >= current:
                        counter += 1
                    else:
                        learnt.append(q)
            while not seen[trail[idx] >> 1]:
                idx -= 1
            p = trail[idx]
            v = p >> 1
            c = reason[v]
            seen[v] = 0
            counter -= 1
            idx -= 1
            if counter == 0:
                break
        learnt[0] = p ^ 1
        seen[p >> 1] = 1
        to_clear.append(p >> 1)

        # local minimization: drop literals implied by the rest of the clause
        kept = [learnt[0]]
        for q in learnt[1:]:
            r = reason[q >> 1]
            if r is None:
                kept.append(q)
                continue
            for other in r:
                ov = other >> 1
                if ov != (q >> 1) and not seen[ov] and level[ov] > 0:
                    kept.append(q)
                    break
        learnt = kept

        if len(learnt) == 1:
            bt = 0
        else:
            # watch the highest-level remaining literal in slot 1
            max_i = 1
            for i in range(2, len(learnt)):
                if level[learnt[i] >> 1] > level[learnt[max_i] >> 1]:
                    max_i = i
            learnt[1], learnt[max_i] = learnt[max_i], learnt[1]
            bt = level[learnt[1] >> 1]
        lbd = len({level[q >> 1] for q in learnt})
        for v in to_clear:
            seen[v] = 0
        return learnt, bt, lbd

    # -- learned clause reduction ------------------------------------------

    def _reduce_db(self) -> None:
        reasons = {id(r) for r in self._reason if isinstance(r, _Clause)}
        keep, candidates = [], []
        for c in self._learnts:
            if len(c) == 2 or c.lbd <= 2 or id(c) in reasons:
                keep.append(c)
            else:
                candidates.append(c)
        candidates.sort(key=lambda c: (c.lbd, len(c)))
        cut = len(candidates) // 2
        for c in candidates[cut:]:
            c.deleted = True
        self._learnts = keep + candidates[:cut]
        for lit in range(2, 2 * self.n_vars + 2):
            ws = self._watches[lit]
            self._watches[lit] = [w for w in ws if not w[1].deleted]
        self._max_learnts += 500

    # -- main search ---------------------------------------------------------

    def solve(self, assumptions: list[int] = ()) -> str:
        """Run the decision procedure; returns SAT, UNSAT or INTERRUPTED."""
        if not self.ok:
            self._last_status = UNSAT
            return UNSAT
        for lit in assumptions:
            if abs(lit) > self.n_vars:
                self._grow(abs(lit))
        assumps = [(abs(l) << 1) | (l < 0) for l in assumptions]

        self._backtrack(0)
        if self._propagate() is not None:
            self.ok = False
            self._last_status = UNSAT
            return UNSAT

        val = self._val
        restarts = 0
        budget = luby(restarts + 1) * _LUBY_START
        conflicts_here = 0

        while True:
            confl = self._propagate()
            if confl is not None:
                self.conflicts += 1
                conflicts_here += 1
                if not self._trail_lim:
                    self.ok = False
                    self._last_status = UNSAT
                    return UNSAT
                learnt, bt, lbd = self._analyze(confl)
                self._backtrack(bt)
                if len(learnt) == 1:
                    self._enqueue(learnt[0], None)
                else:
                    c = _Clause(learnt, learnt=True, lbd=lbd)
                    self._learnts.append(c)
                    self._attach(c)
                    self._enqueue(learnt[0], c)
                self._var_inc /= 0.95
                if conflicts_here % 256 == 0:
                    if self._conflict_budget is not None and self.conflicts >= self._conflict_budget:
                        self._finish_interrupted()
                        return INTERRUPTED
                    if self._deadline is not None and time.monotonic() > self._deadline:
                        self._finish_interrupted()
                        return INTERRUPTED
                continue

            if conflicts_here >= budget:
                restarts += 1
                budget = conflicts_here + luby(restarts + 1) * _LUBY_START
                self._backtrack(0)
                continue
            if len(self._learnts) > self._max_learnts:
                self._reduce_db()

            # extend with pending assumptions, then decide
            lit = None
            while len(self._trail_lim) < len(assumps):
                p = assumps[len(self._trail_lim)]
                if val[p] == 1:
                    self._trail_lim.append(len(self._trail))
                elif val[p] == 2:
                    self._backtrack(0)
                    self._last_status = UNSAT
                    return UNSAT
                else:
                    lit = p
                    break
            if lit is None:
                heap = self._heap
                act = self._activity
                v = None
                while len(heap):
                    cand = heap.pop(act)
                    if val[cand << 1] == 0:
                        v = cand
                        break
                if v is None:
                    self._model = [False] * (self.n_vars + 1)
                    for x in range(1, self.n_vars + 1):
                        self._model[x] = val[x << 1] == 1
                    self._backtrack(0)
                    self._last_status = SAT
                    return SAT
                lit = (v << 1) | (not self._phase[v])
                self.decisions += 1
            self._trail_lim.append(len(self._trail))
            self._enqueue(lit, None)

    def _finish_interrupted(self) -> None:
        self._backtrack(0)
        self._last_status = INTERRUPTED

    def set_budget(self, max_conflicts: int | None = None, deadline: float | None = None) -> None:
        """Resource caps for subsequent solve calls; deadline is monotonic time."""
        self._conflict_budget = (self.conflicts + max_conflicts) if max_conflicts is not None else None
        self._deadline = deadline

    def model(self) -> list[bool]:
        """Assignment of the last SAT call, indexed by variable (slot 0 unused)."""
        if self._last_status != SAT or self._model is None:
            raise RuntimeError("model() requires the previous solve() to return SAT")
        return list(self._model)
