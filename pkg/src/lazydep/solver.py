"""Incremental propositional satisfiability for symbolic feature models.

The engine is a small conflict-driven clause-learning solver: two watched
literals, activity-driven decisions, phase saving, restarts, and solving
under assumptions.  Clauses only ever accumulate within a session, and
assumptions never touch the clause store, which lets the discovery loop
grow its model monotonically while reusing prior search effort.

Unconstrained variables decide to false by default, which biases models
toward small products.  With a fixed seed and a fixed clause insertion
order the engine is deterministic.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

from lazydep.formula import AUX_PREFIX, PropFM, to_cnf

# Literal encoding: variable v (0-based) yields literals 2*v (positive) and
# 2*v+1 (negative); lit ^ 1 negates.

_RESTART_BASE = 100


class CdclEngine:
    def __init__(self, seed: int = 0):
        self._rng = random.Random(seed)
        self.nvars = 0
        self.clauses: list[list[int]] = []  # problem clauses, post-simplification
        self.learnts: list[list[int]] = []
        self.watches: list[list[list[int]]] = []  # indexed by literal
        self.assigns: list[int] = []  # -1 unassigned, 0 false, 1 true
        self.level: list[int] = []
        self.reason: list[Optional[list[int]]] = []
        self.phase: list[bool] = []
        self.activity: list[float] = []
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.var_inc = 1.0
        self.order: list[tuple[float, int]] = []  # lazy max-heap via negated keys
        self.ok = True
        self.model: list[int] = []
        self.conflicts = 0

    def add_var(self) -> int:
        v = self.nvars
        self.nvars += 1
        self.watches.append([])
        self.watches.append([])
        self.assigns.append(-1)
        self.level.append(0)
        self.reason.append(None)
        self.phase.append(False)
        # Tiny seeded jitter makes tie-breaking seed-dependent but reproducible.
        self.activity.append(self._rng.random() * 1e-6)
        heapq.heappush(self.order, (-self.activity[v], v))
        return v

    def value(self, lit: int) -> int:
        a = self.assigns[lit >> 1]
        return a if a < 0 else a ^ (lit & 1)

    def add_clause(self, lits: Iterable[int]) -> None:
        """Add a clause; only legal with no decisions outstanding."""
        if not self.ok:
            return
        assert not self.trail_lim, "clauses can only be added at the root level"
        seen = set()
        clause = []
        for lit in lits:
            if lit ^ 1 in seen:
                return  # tautology
            if lit in seen:
                continue
            v = self.value(lit)
            if v == 1:
                return  # already satisfied at root
            if v == 0:
                continue  # root-false literal drops out
            seen.add(lit)
            clause.append(lit)
        if not clause:
            self.ok = False
            return
        if len(clause) == 1:
            self._enqueue(clause[0], None)
            if self._propagate() is not None:
                self.ok = False
            return
        self.clauses.append(clause)
        self.watches[clause[0]].append(clause)
        self.watches[clause[1]].append(clause)

    def solve(self, assumptions: Iterable[int] = ()) -> bool:
        """Decide satisfiability under the assumptions; model kept on success."""
        if not self.ok:
            return False
        assumptions = list(assumptions)
        self._backtrack(0)
        restarts = 0
        ceiling = _RESTART_BASE * _luby(restarts)
        conflicts_here = 0
        while True:
            conflict = self._propagate()
            if conflict is not None:
                self.conflicts += 1
                conflicts_here += 1
                if not self.trail_lim:
                    self.ok = False
                    return False
                learnt, backjump = self._analyze(conflict)
                self._backtrack(backjump)
                if len(learnt) == 1:
                    self._enqueue(learnt[0], None)
                else:
                    self.learnts.append(learnt)
                    self.watches[learnt[0]].append(learnt)
                    self.watches[learnt[1]].append(learnt)
                    self._enqueue(learnt[0], learnt)
                self.var_inc /= 0.95
                if self.var_inc > 1e100:
                    self._rescale_activity()
                continue
            if conflicts_here >= ceiling:
                restarts += 1
                ceiling = _RESTART_BASE * _luby(restarts)
                conflicts_here = 0
                self._backtrack(0)
                continue
            # Place pending assumptions before any free decision, so a
            # falsified assumption is always caught.
            if len(self.trail_lim) < len(assumptions):
                lit = assumptions[len(self.trail_lim)]
                v = self.value(lit)
                if v == 0:
                    self._backtrack(0)
                    return False
                self.trail_lim.append(len(self.trail))
                if v == -1:
                    self._enqueue(lit, None)
                continue
            if len(self.trail) == self.nvars:
                self.model = list(self.assigns)
                self._backtrack(0)
                return True
            v = self._pick_branch_var()
            self.trail_lim.append(len(self.trail))
            self._enqueue(2 * v + (0 if self.phase[v] else 1), None)

    # -- internals --------------------------------------------------------

    def _enqueue(self, lit: int, reason: Optional[list[int]]) -> None:
        v = lit >> 1
        self.assigns[v] = (lit & 1) ^ 1
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.trail.append(lit)

    def _propagate(self) -> Optional[list[int]]:
        assigns = self.assigns
        while self.qhead < len(self.trail):
            p = self.trail[self.qhead]
            self.qhead += 1
            false_lit = p ^ 1
            watchlist = self.watches[false_lit]
            i = j = 0
            n = len(watchlist)
            while i < n:
                clause = watchlist[i]
                i += 1
                if clause[0] == false_lit:
                    clause[0], clause[1] = clause[1], clause[0]
                first = clause[0]
                a = assigns[first >> 1]
                if a >= 0 and a ^ (first & 1) == 1:
                    watchlist[j] = clause
                    j += 1
                    continue
                for k in range(2, len(clause)):
                    lk = clause[k]
                    ak = assigns[lk >> 1]
                    if ak < 0 or ak ^ (lk & 1) == 1:
                        clause[1], clause[k] = lk, false_lit
                        self.watches[lk].append(clause)
                        break
                else:
                    watchlist[j] = clause
                    j += 1
                    if a == -1:
                        self._enqueue(first, clause)
                    else:
                        while i < n:  # conflict; keep the rest of the list
                            watchlist[j] = watchlist[i]
                            j += 1
                            i += 1
                        del watchlist[j:]
                        return clause
            del watchlist[j:]
        return None

    def _analyze(self, conflict: list[int]) -> tuple[list[int], int]:
        """First-UIP conflict analysis; returns (learnt clause, backjump level)."""
        current = len(self.trail_lim)
        seen = bytearray(self.nvars)
        learnt: list[int] = [0]  # slot 0 for the asserting literal
        counter = 0
        idx = len(self.trail) - 1
        p = -1
        clause = conflict
        while True:
            start = 1 if p >= 0 else 0  # reason clauses carry their own lit at 0
            for q in clause[start:]:
                v = q >> 1
                if not seen[v] and self.level[v] > 0:
                    seen[v] = 1
                    self._bump(v)
                    if self.level[v] >= current:
                        counter += 1
                    else:
                        learnt.append(q)
            while not seen[self.trail[idx] >> 1]:
                idx -= 1
            p = self.trail[idx]
            idx -= 1
            seen[p >> 1] = 0
            counter -= 1
            if counter == 0:
                break
            clause = self.reason[p >> 1]
        learnt[0] = p ^ 1
        if len(learnt) == 1:
            return learnt, 0
        # Watch a literal from the backjump level in slot 1.
        max_i = max(range(1, len(learnt)), key=lambda i: self.level[learnt[i] >> 1])
        learnt[1], learnt[max_i] = learnt[max_i], learnt[1]
        return learnt, self.level[learnt[1] >> 1]

    def _backtrack(self, target: int) -> None:
        if len(self.trail_lim) <= target:
            return
        bound = self.trail_lim[target]
        for lit in reversed(self.trail[bound:]):
            v = lit >> 1
            self.phase[v] = self.assigns[v] == 1
            self.assigns[v] = -1
            self.reason[v] = None
            heapq.heappush(self.order, (-self.activity[v], v))
        del self.trail[bound:]
        del self.trail_lim[target:]
        self.qhead = len(self.trail)

    def _bump(self, v: int) -> None:
        self.activity[v] += self.var_inc
        heapq.heappush(self.order, (-self.activity[v], v))

    def _pick_branch_var(self) -> int:
        while self.order:
            act, v = heapq.heappop(self.order)
            if self.assigns[v] == -1 and -act == self.activity[v]:
                return v
        # Stale entries exhausted the heap; rebuild from the unassigned vars.
        self.order = [
            (-self.activity[v], v) for v in range(self.nvars) if self.assigns[v] == -1
        ]
        heapq.heapify(self.order)
        act, v = heapq.heappop(self.order)
        return v

    def _rescale_activity(self) -> None:
        self.activity = [a * 1e-100 for a in self.activity]
        self.var_inc *= 1e-100
        self.order = [
            (-self.activity[v], v) for v in range(self.nvars) if self.assigns[v] == -1
        ]
        heapq.heapify(self.order)


def _luby(i: int) -> int:
    """Luby restart sequence (0-based): 1 1 2 1 1 2 4 1 1 2 1 1 2 4 8 ..."""
    size, seq = 1, 0
    while size < i + 1:
        seq += 1
        size = 2 * size + 1
    while size - 1 != i:
        size = (size - 1) >> 1
        seq -= 1
        i %= size
    return 1 << seq


@dataclass
class SolverStats:
    solve_calls: int = 0
    clauses_added: int = 0


class SolverSession:
    """Feature-level view over one engine; owns the name/variable mapping.

    A session is exclusively owned by one discovery run.  Feature variables
    register once per name; auxiliary variables from the CNF encoding get
    fresh engine variables per assertion and never leak into models.
    """

    def __init__(self, seed: int = 0):
        self.engine = CdclEngine(seed)
        self.stats = SolverStats()
        self._feature_var: dict[str, int] = {}
        self._asserted: list[list[int]] = []  # as-written clauses, for dumps

    def register_features(self, names: Iterable[str]) -> None:
        for name in names:
            if name not in self._feature_var:
                self._feature_var[name] = self.engine.add_var()

    def assert_fm(self, fm: PropFM) -> None:
        """Register the features and add the constraint's CNF clauses."""
        self.register_features(sorted(fm.features))
        cs = to_cnf(fm.constraint)
        aux_var: dict[str, int] = {}
        for clause in cs.clauses:
            lits = []
            for name, positive in clause:
                if name.startswith(AUX_PREFIX):
                    v = aux_var.get(name)
                    if v is None:
                        v = aux_var[name] = self.engine.add_var()
                else:
                    v = self._feature_var[name]
                lits.append(2 * v + (0 if positive else 1))
            self._asserted.append(lits)
            self.engine.add_clause(lits)
        self.stats.clauses_added += len(cs.clauses)

    def select(
        self, fm_features: Iterable[str], request: Iterable[str]
    ) -> Optional[frozenset[str]]:
        """A product over fm_features containing the request, or None.

        Solves under positive assumptions for the request; the clause store
        is untouched either way.
        """
        fm_features = frozenset(fm_features)
        request = frozenset(request)
        if not request <= fm_features:
            raise ValueError(
                f"request features outside the model: {sorted(request - fm_features)}"
            )
        self.register_features(sorted(request))
        assumptions = [2 * self._feature_var[name] for name in sorted(request)]
        self.stats.solve_calls += 1
        if not self.engine.solve(assumptions):
            return None
        model = self.engine.model
        out = []
        for name in fm_features:
            v = self._feature_var.get(name)
            if v is not None and model[v] == 1:
                out.append(name)
        return frozenset(out)

    def read_model(self) -> dict[str, bool]:
        """The last model, projected to the registered feature variables."""
        model = self.engine.model
        return {name: model[v] == 1 for name, v in self._feature_var.items()}

    def dump_dimacs(self, path: Path | str) -> None:
        """Write the asserted clause store with a feature-name comment map."""
        lines = ["c feature-variable map:"]
        for name in sorted(self._feature_var):
            lines.append(f"c feature {name} {self._feature_var[name] + 1}")
        lines.append(f"p cnf {self.engine.nvars} {len(self._asserted)}")
        for clause in self._asserted:
            dimacs = [
                str((lit >> 1) + 1) if lit & 1 == 0 else str(-((lit >> 1) + 1))
                for lit in clause
            ]
            lines.append(" ".join(dimacs) + " 0")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
