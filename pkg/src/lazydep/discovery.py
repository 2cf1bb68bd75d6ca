"""Lazy and eager product discovery over a fragment repository.

The lazy loop keeps a growing set of examined features, asserts a fragment's
constraints into the solver session only once its cut turns non-trivial, and
stops as soon as a candidate product stays inside the examined set.  Since
the examined set only grows, a fragment's cut can only go trivial-to-full,
so clauses are asserted once and never retracted.

The eager baseline asserts every fragment up front and solves once.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from lazydep import extfm
from lazydep.fragments import (
    Fragment,
    RepositoryIndex,
    compose_symbolic,
    load_fragment,
    pick_cut,
)
from lazydep.solver import SolverSession

STATS_HEADER = [
    "problem_id",
    "mode",
    "found",
    "iterations",
    "fragments_loaded",
    "features_loaded",
    "total_features",
    "solver_calls",
    "wall_ms",
]


class UnknownFeatureError(Exception):
    """Request features that no fragment declares."""

    def __init__(self, names: Iterable[str]):
        self.names = sorted(names)
        super().__init__(f"unknown features: {', '.join(self.names)}")


@dataclass
class DiscoveryStats:
    iterations: int = 0
    fragments_loaded: int = 0
    features_loaded: int = 0
    total_features: int = 0
    solver_calls: int = 0
    wall_ms: float = 0.0


@dataclass(frozen=True)
class DiscoveryState:
    """One loop snapshot: examined features, loaded fragments, candidate."""

    examined: frozenset[str]
    loaded: frozenset[str]
    composed_features: frozenset[str]
    solution: Optional[frozenset[str]]


@dataclass
class DebugTrace:
    snapshots: list[DiscoveryState] = field(default_factory=list)
    violations: list[str] = field(default_factory=list)


@dataclass
class DiscoveryResult:
    product: Optional[frozenset[str]]
    stats: DiscoveryStats
    debug: Optional[DebugTrace] = None

    @property
    def found(self) -> bool:
        return self.product is not None


def check_invariants(
    state: DiscoveryState,
    request: Iterable[str],
    prev: Optional[DiscoveryState] = None,
    at_exit: bool = False,
) -> list[str]:
    """Violation messages for the loop invariants; empty when all hold."""
    request = frozenset(request)
    out = []
    if not request <= state.examined:
        out.append(
            f"Inv1 violated: request not contained in examined features "
            f"(missing {sorted(request - state.examined)})"
        )
    if prev is not None:
        if not prev.examined <= state.examined:
            out.append("examined feature set shrank between iterations")
        if not prev.loaded <= state.loaded:
            out.append("loaded fragment set shrank between iterations")
    if at_exit and state.solution is not None and not state.solution <= state.examined:
        out.append("exit solution not contained in examined features")
    return out


def _validate_request(idx: RepositoryIndex, request: frozenset[str]) -> None:
    unknown = request - idx.all_features
    if unknown:
        raise UnknownFeatureError(unknown)


def lazy_discover(
    idx: RepositoryIndex,
    request: Iterable[str],
    *,
    seed: int = 0,
    debug: bool = False,
    cut_strategy: str = "full-or-trivial",
    dump_cnf: Optional[Path | str] = None,
) -> DiscoveryResult:
    """Find a product of the whole repository containing the request.

    Loads fragment bodies only when their cut turns non-trivial.  Returns a
    product iff the composition of all fragments has one.
    """
    request = frozenset(request)
    _validate_request(idx, request)
    if cut_strategy == "minimum":
        return _discover_minimum_cuts(idx, request, seed=seed, debug=debug)
    if cut_strategy != "full-or-trivial":
        raise ValueError(f"unknown cut strategy {cut_strategy!r}")

    start = time.perf_counter()
    stats = DiscoveryStats(total_features=len(idx.all_features))
    trace = DebugTrace() if debug else None
    session = SolverSession(seed)
    session.register_features(sorted(request))

    examined = set(request)
    loaded: set[str] = set()
    loaded_features: set[str] = set()
    # Unguarded fragments are always non-trivial cuts; guarded ones wait for
    # their guard feature to be examined.
    pending_unguarded = [e.id for e in idx.entries.values() if e.guard is None]
    waiting_on_guard: dict[str, list[str]] = {}
    for entry in idx.entries.values():
        if entry.guard is not None:
            waiting_on_guard.setdefault(entry.guard, []).append(entry.id)

    newly_examined = set(examined)
    prev_state: Optional[DiscoveryState] = None
    solution: Optional[frozenset[str]] = None
    while True:
        to_load = pending_unguarded
        pending_unguarded = []
        for name in sorted(newly_examined):
            to_load.extend(waiting_on_guard.pop(name, ()))
        for fid in to_load:
            frag = load_fragment(idx, fid)
            session.assert_fm(frag.fm)
            loaded.add(fid)
            loaded_features |= frag.fm.features
        composed_features = loaded_features | examined
        solution = session.select(composed_features, request)
        stats.iterations += 1
        if debug:
            state = DiscoveryState(
                frozenset(examined),
                frozenset(loaded),
                frozenset(composed_features),
                solution,
            )
            trace.snapshots.append(state)
            trace.violations.extend(check_invariants(state, request, prev_state))
            prev_state = state
        if solution is None or solution <= examined:
            break
        newly_examined = solution - examined
        examined |= solution

    if debug and trace.snapshots:
        trace.violations.extend(
            check_invariants(trace.snapshots[-1], request, at_exit=True)
        )
    if dump_cnf is not None:
        session.dump_dimacs(dump_cnf)
    stats.fragments_loaded = len(loaded)
    stats.features_loaded = len(loaded_features)
    stats.solver_calls = session.stats.solve_calls
    stats.wall_ms = (time.perf_counter() - start) * 1000.0
    return DiscoveryResult(solution, stats, trace)


def _discover_minimum_cuts(
    idx: RepositoryIndex,
    request: frozenset[str],
    *,
    seed: int = 0,
    debug: bool = False,
) -> DiscoveryResult:
    """The same loop over true minimum cuts; enumerates every fragment.

    Desk-scale only: computing minimum cuts needs each fragment's product
    set, so unlike the default strategy this loads everything.
    """
    start = time.perf_counter()
    stats = DiscoveryStats(total_features=len(idx.all_features))
    trace = DebugTrace() if debug else None
    fragments = [load_fragment(idx, fid) for fid in idx.entries]
    examined = set(request)
    prev_state: Optional[DiscoveryState] = None
    solution: Optional[frozenset[str]] = None
    while True:
        cuts = [pick_cut(f, examined, strategy="minimum") for f in fragments]
        composed = compose_symbolic(cuts)
        session = SolverSession(seed)
        session.assert_fm(composed)
        solution = session.select(composed.features, request)
        stats.iterations += 1
        stats.solver_calls += 1
        if debug:
            state = DiscoveryState(
                frozenset(examined),
                frozenset(f.id for f in fragments),
                composed.features,
                solution,
            )
            trace.snapshots.append(state)
            trace.violations.extend(check_invariants(state, request, prev_state))
            prev_state = state
        if solution is None or solution <= examined:
            break
        examined |= solution
    if debug and trace.snapshots:
        trace.violations.extend(
            check_invariants(trace.snapshots[-1], request, at_exit=True)
        )
    stats.fragments_loaded = len(fragments)
    stats.features_loaded = len(idx.all_features)
    stats.wall_ms = (time.perf_counter() - start) * 1000.0
    return DiscoveryResult(solution, stats, trace)


def eager_discover(
    idx: RepositoryIndex,
    request: Iterable[str],
    *,
    seed: int = 0,
    dump_cnf: Optional[Path | str] = None,
) -> DiscoveryResult:
    """Baseline: load and assert every fragment, then solve once."""
    request = frozenset(request)
    _validate_request(idx, request)
    start = time.perf_counter()
    stats = DiscoveryStats(total_features=len(idx.all_features))
    session = SolverSession(seed)
    session.register_features(sorted(request))
    for fid in idx.entries:
        session.assert_fm(load_fragment(idx, fid).fm)
    solution = session.select(idx.all_features, request)
    if dump_cnf is not None:
        session.dump_dimacs(dump_cnf)
    stats.iterations = 1
    stats.fragments_loaded = len(idx.entries)
    stats.features_loaded = len(idx.all_features)
    stats.solver_calls = session.stats.solve_calls
    stats.wall_ms = (time.perf_counter() - start) * 1000.0
    return DiscoveryResult(solution, stats)


def verify_result(
    idx: RepositoryIndex,
    request: Iterable[str],
    result: DiscoveryResult,
) -> Optional[bool]:
    """Check a result against the extensional composition of the repository.

    Returns True/False, or None when the repository exceeds the enumeration
    cap and verification has to be skipped.
    """
    request = frozenset(request)
    if len(idx.all_features) > extfm.ENUM_CAP:
        warnings.warn(
            f"verification skipped: {len(idx.all_features)} features exceed "
            f"the enumeration cap of {extfm.ENUM_CAP}",
            stacklevel=2,
        )
        return None
    exts = [
        extfm.enumerate_products(load_fragment(idx, fid).fm) for fid in idx.entries
    ]
    if result.product is None:
        return extfm.discover_ext(exts, request) is None
    if not request <= result.product:
        return False
    composed = extfm.compose_all(exts)
    return result.product in composed.products


def stats_csv_row(problem_id: str, mode: str, result: DiscoveryResult) -> list[str]:
    """One CSV row per run, matching STATS_HEADER."""
    s = result.stats
    return [
        problem_id,
        mode,
        "true" if result.found else "false",
        str(s.iterations),
        str(s.fragments_loaded),
        str(s.features_loaded),
        str(s.total_features),
        str(s.solver_calls),
        f"{s.wall_ms:.3f}",
    ]
