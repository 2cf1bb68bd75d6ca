"""Shared generators and small oracles for the test suite."""

from __future__ import annotations

import itertools
import random
import statistics
from pathlib import Path

from hypothesis import strategies as st

from lazydep.extfm import ExtFM
from lazydep.formula import (
    FALSE,
    TRUE,
    And,
    ClauseSet,
    Const,
    Formula,
    Implies,
    Not,
    Or,
    PropFM,
    Var,
)
from lazydep.fragments import Fragment, detect_guard, write_repository


def powerset(names) -> list[frozenset[str]]:
    ordered = sorted(names)
    return [
        frozenset(c)
        for r in range(len(ordered) + 1)
        for c in itertools.combinations(ordered, r)
    ]


def spearman(xs, ys) -> float:
    """Rank correlation with midranks for ties."""

    def ranks(vs):
        order = sorted(range(len(vs)), key=lambda i: vs[i])
        out = [0.0] * len(vs)
        i = 0
        while i < len(order):
            j = i
            while j + 1 < len(order) and vs[order[j + 1]] == vs[order[i]]:
                j += 1
            mid = (i + j) / 2 + 1
            for k in range(i, j + 1):
                out[order[k]] = mid
            i = j + 1
        return out

    rx, ry = ranks(xs), ranks(ys)
    mx, my = statistics.mean(rx), statistics.mean(ry)
    num = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    den = (
        sum((a - mx) ** 2 for a in rx) * sum((b - my) ** 2 for b in ry)
    ) ** 0.5
    return num / den if den else 0.0


def cnf_satisfiable_under(cs: ClauseSet, selected) -> bool:
    """Decide CNF satisfiability with all feature variables fixed.

    Unit propagation pins every auxiliary variable once the leaves are
    assigned; a tiny exhaustive fallback covers anything left over.
    """
    assign = {
        name: name in selected
        for name, kind in cs.var_kind.items()
        if kind == "feature"
    }
    return _dpll([list(c) for c in cs.clauses], assign)


def _dpll(clauses, assign) -> bool:
    while True:
        unit = None
        for clause in clauses:
            satisfied = False
            open_lits = []
            for name, positive in clause:
                if name in assign:
                    if assign[name] == positive:
                        satisfied = True
                        break
                else:
                    open_lits.append((name, positive))
            if satisfied:
                continue
            if not open_lits:
                return False
            if len(open_lits) == 1:
                unit = open_lits[0]
                break
        if unit is None:
            break
        assign[unit[0]] = unit[1]
    remaining = {
        name
        for clause in clauses
        for name, _ in clause
        if name not in assign
    }
    if not remaining:
        return all(
            any(assign[name] == positive for name, positive in clause)
            for clause in clauses
        )
    name = min(remaining)
    for value in (False, True):
        if _dpll(clauses, dict(assign, **{name: value})):
            return True
    return False


# -- seeded random generators ------------------------------------------------

def random_formula(rng: random.Random, names, depth: int) -> Formula:
    if depth <= 0 or (names and rng.random() < 0.3):
        roll = rng.random()
        if roll < 0.05 or not names:
            return TRUE if rng.random() < 0.5 else FALSE
        return Var(rng.choice(list(names)))
    op = rng.randrange(4)
    if op == 0:
        return Not(random_formula(rng, names, depth - 1))
    left = random_formula(rng, names, depth - 1)
    right = random_formula(rng, names, depth - 1)
    return (And, Or, Implies)[op - 1](left, right)


def random_ext_fm(rng: random.Random, pool, max_features: int) -> ExtFM:
    k = rng.randint(0, min(max_features, len(pool)))
    feats = frozenset(rng.sample(list(pool), k))
    subsets = powerset(feats)
    count = rng.randint(0, len(subsets))
    return ExtFM(feats, frozenset(rng.sample(subsets, count)))


def random_prop_fm(rng: random.Random, pool, max_features: int, max_depth: int = 3) -> PropFM:
    k = rng.randint(0, min(max_features, len(pool)))
    feats = frozenset(rng.sample(list(pool), k))
    return PropFM(feats, random_formula(rng, sorted(feats), rng.randint(0, max_depth)))


def random_fragment(
    rng: random.Random, fid: str, pool, max_features: int, guarded_prob: float = 0.7
) -> Fragment:
    k = rng.randint(1, min(max_features, len(pool)))
    feats = frozenset(rng.sample(list(pool), k))
    if rng.random() < guarded_prob:
        guard = rng.choice(sorted(feats))
        body = random_formula(rng, sorted(feats), rng.randint(0, 3))
        constraint: Formula = Implies(Var(guard), body)
    else:
        constraint = random_formula(rng, sorted(feats), rng.randint(1, 3))
    fm = PropFM(feats, constraint)
    return Fragment(fid, fm, detect_guard(fm))


def random_repo(rng: random.Random, path: Path, pool, max_fragments: int = 5,
                max_features: int = 6) -> list[Fragment]:
    n = rng.randint(1, max_fragments)
    frags = [
        random_fragment(rng, f"frag{i}", pool, max_features) for i in range(n)
    ]
    write_repository(path, frags)
    return frags


def build_chain_repo(path: Path, depth: int, total: int) -> Path:
    """A chain a0 -> a1 -> ... -> a<depth> plus disconnected fragments."""
    frags = []
    for i in range(depth + 1):
        guard = f"a{i}"
        if i < depth:
            nxt = f"a{i + 1}"
            fm = PropFM(frozenset({guard, nxt}), Implies(Var(guard), Var(nxt)))
        else:
            fm = PropFM(frozenset({guard}), Implies(Var(guard), TRUE))
        frags.append(Fragment(guard, fm, guard))
    for i in range(total - (depth + 1)):
        guard = f"other{i}"
        fm = PropFM(frozenset({guard}), Implies(Var(guard), TRUE))
        frags.append(Fragment(guard, fm, guard))
    return write_repository(path, frags)


# -- hypothesis strategies ----------------------------------------------------

NAME_POOL = ("alpha", "beta", "gamma", "delta", "eps", "zeta")


def formulas(names=NAME_POOL, max_leaves: int = 16):
    leaf = st.one_of(
        st.sampled_from([Var(n) for n in names]),
        st.sampled_from([TRUE, FALSE]),
    )
    return st.recursive(
        leaf,
        lambda sub: st.one_of(
            st.builds(Not, sub),
            st.builds(And, sub, sub),
            st.builds(Or, sub, sub),
            st.builds(Implies, sub, sub),
        ),
        max_leaves=max_leaves,
    )


@st.composite
def ext_fms(draw, pool=NAME_POOL[:5], max_features: int = 5):
    feats = draw(
        st.frozensets(st.sampled_from(pool), max_size=max_features)
    )
    subsets = powerset(feats)
    products = draw(st.frozensets(st.sampled_from(subsets)))
    return ExtFM(feats, products)


@st.composite
def prop_fms(draw, pool=NAME_POOL, max_features: int = 6, max_leaves: int = 12):
    feats = draw(st.frozensets(st.sampled_from(pool), max_size=max_features))
    if feats:
        constraint = draw(formulas(tuple(sorted(feats)), max_leaves=max_leaves))
    else:
        constraint = draw(st.sampled_from([TRUE, FALSE]))
    return PropFM(feats, constraint)
