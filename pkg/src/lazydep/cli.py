"""Command-line entry point.

Subcommands cover the whole experiment pipeline: `discover` runs lazy or
eager product discovery on a repository, `oracle` answers the same question
extensionally (cap-guarded), `gen` writes seeded synthetic repositories,
`bench` replays a problem list into a CSV, and `translate` converts package
declarations into a fragment repository.

Exit codes for discover/oracle: 0 product found, 1 no product, 2 usage or
repository errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

from lazydep import depparse, extfm
from lazydep.discovery import (
    STATS_HEADER,
    DiscoveryResult,
    UnknownFeatureError,
    eager_discover,
    lazy_discover,
    stats_csv_row,
    verify_result,
)
from lazydep.formula import TRUE, Formula, Implies, Not, Or, PropFM, Var, conjoin
from lazydep.fragments import (
    Fragment,
    RepositoryError,
    RepositoryIndex,
    load_fragment,
    load_repository,
    write_repository,
)

SEED_ENV = "LAZYDEP_SEED"

_GEN_CORE = 10  # fragments every block may depend into
_GEN_BLOCK = 20  # fragments per block; keeps dependency closures small


@dataclass(frozen=True)
class GenSpec:
    """Parameters for the synthetic repository generator."""

    fragments: int
    features_per_fragment: int
    dep_out_degree: int
    share_prob: float
    seed: int

    def __post_init__(self):
        if min(self.fragments, self.features_per_fragment, self.dep_out_degree) < 0:
            raise ValueError("counts must be non-negative")
        if not 0.0 <= self.share_prob <= 1.0:
            raise ValueError("share_prob must be within [0, 1]")


def run_generate(spec: GenSpec, out: Path | str) -> RepositoryIndex:
    """Write a seeded repository of guarded fragments; byte-reproducible.

    Fragment i gets guard feature pkg<i> and local flag features pkg<i>:f<j>.
    Dependencies point into the fragment's own block, or, with share_prob,
    into a small shared core, so request closures stay bounded.  Some
    requirements are unconditional (plain `guard -> dep`), the rest hang off
    a use flag; unconditional ones force dependency chains the way package
    trees do, so how much a request loads varies with its closure.
    """
    rng = random.Random(spec.seed)
    n = spec.fragments
    core = min(_GEN_CORE, n)
    fragments = []
    for i in range(n):
        guard = f"pkg{i}"
        flags = [f"pkg{i}:f{j}" for j in range(1, spec.features_per_fragment)]
        if i < core:
            pool = [t for t in range(core) if t != i]
        else:
            block_start = core + ((i - core) // _GEN_BLOCK) * _GEN_BLOCK
            block = range(block_start, min(block_start + _GEN_BLOCK, n))
            pool = [t for t in block if t != i]
        items: list[Formula] = []
        referenced: set[str] = set()
        for _ in range(spec.dep_out_degree):
            local_pool = pool
            if i >= core and rng.random() < spec.share_prob:
                local_pool = list(range(core))
            if not local_pool:
                continue
            target = f"pkg{rng.choice(local_pool)}"
            referenced.add(target)
            kind = rng.random()
            if kind < 0.35 or not flags:
                items.append(Var(target))  # unconditional requirement
            elif kind < 0.6:
                items.append(Implies(Var(rng.choice(flags)), Var(target)))
            elif kind < 0.8:
                items.append(Implies(Var(rng.choice(flags)), Not(Var(target))))
            else:
                other = f"pkg{rng.choice(local_pool)}"
                referenced.add(other)
                items.append(
                    Implies(Var(rng.choice(flags)), Or(Var(target), Var(other)))
                )
        constraint = Implies(Var(guard), conjoin(items))
        features = frozenset({guard, *flags, *referenced})
        fragments.append(Fragment(guard, PropFM(features, constraint), guard))
    write_repository(out, fragments)
    return load_repository(out)


def _bench_one(task: tuple[str, str, str, str, int]) -> list[str]:
    repo, problem_id, request_text, mode, seed = task
    idx = load_repository(repo)
    request = _parse_request(request_text)
    if mode == "lazy":
        result = lazy_discover(idx, request, seed=seed)
    else:
        result = eager_discover(idx, request, seed=seed)
    return stats_csv_row(problem_id, mode, result)


def run_bench(
    repo: Path | str,
    problems: Path | str,
    modes: Iterable[str],
    out: Path | str,
    *,
    seed: int = 0,
    jobs: int = 1,
) -> None:
    """Run every problem in file order under each mode; write CSV rows."""
    mode_order = [m for m in ("lazy", "eager") if m in set(modes)]
    unknown = set(modes) - {"lazy", "eager"}
    if unknown:
        raise ValueError(f"unknown modes: {sorted(unknown)}")
    requests = [
        line.strip()
        for line in Path(problems).read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]
    tasks = [
        (str(repo), str(pid), request, mode, seed)
        for pid, request in enumerate(requests, 1)
        for mode in mode_order
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_bench_one, tasks))
    else:
        rows = [_bench_one(t) for t in tasks]
    with open(out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(STATS_HEADER)
        writer.writerows(rows)


def _parse_request(text: str) -> frozenset[str]:
    return frozenset(name.strip() for name in text.split(",") if name.strip())


def _default_seed() -> int:
    return int(os.environ.get(SEED_ENV, "0"))


def _print_result(result: DiscoveryResult, as_json: bool) -> None:
    if as_json:
        stats = result.stats
        print(
            json.dumps(
                {
                    "found": result.found,
                    "product": sorted(result.product) if result.found else None,
                    "stats": {
                        "iterations": stats.iterations,
                        "fragments_loaded": stats.fragments_loaded,
                        "features_loaded": stats.features_loaded,
                        "total_features": stats.total_features,
                        "solver_calls": stats.solver_calls,
                        "wall_ms": stats.wall_ms,
                    },
                }
            )
        )
    elif result.found:
        for name in sorted(result.product):
            print(name)


def _cmd_discover(args: argparse.Namespace) -> int:
    idx = load_repository(args.repo)
    request = _parse_request(args.request)
    kwargs = dict(seed=args.seed, dump_cnf=args.dump_cnf)
    if args.mode == "lazy":
        result = lazy_discover(
            idx, request, debug=args.debug_invariants, **kwargs
        )
    else:
        result = eager_discover(idx, request, **kwargs)
    if args.debug_invariants and result.debug and result.debug.violations:
        for v in result.debug.violations:
            print(f"invariant violation: {v}", file=sys.stderr)
        return 2
    if args.stats:
        with open(args.stats, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(STATS_HEADER)
            writer.writerow(stats_csv_row(args.request, args.mode, result))
    if args.verify_oracle:
        verdict = verify_result(idx, request, result)
        if verdict is None:
            print("oracle check skipped (repository too large)", file=sys.stderr)
        elif not verdict:
            print("oracle check FAILED", file=sys.stderr)
            return 2
        else:
            print("oracle check passed", file=sys.stderr)
    _print_result(result, args.json)
    if not result.found and not args.json:
        print("no product contains the requested features", file=sys.stderr)
    return 0 if result.found else 1


def _cmd_oracle(args: argparse.Namespace) -> int:
    idx = load_repository(args.repo)
    request = _parse_request(args.request)
    unknown = request - idx.all_features
    if unknown:
        raise UnknownFeatureError(unknown)
    exts = [
        extfm.enumerate_products(load_fragment(idx, fid).fm) for fid in idx.entries
    ]
    product = extfm.discover_ext(exts, request)
    if args.json:
        print(
            json.dumps(
                {
                    "found": product is not None,
                    "product": sorted(product) if product is not None else None,
                }
            )
        )
    elif product is not None:
        for name in sorted(product):
            print(name)
    else:
        print("no product contains the requested features", file=sys.stderr)
    return 0 if product is not None else 1


def _cmd_gen(args: argparse.Namespace) -> int:
    spec = GenSpec(
        fragments=args.fragments,
        features_per_fragment=args.features_per,
        dep_out_degree=args.out_degree,
        share_prob=args.share_prob,
        seed=args.seed,
    )
    idx = run_generate(spec, args.out)
    print(f"wrote {len(idx)} fragments, {len(idx.all_features)} features to {args.out}")
    return 0


def _cmd_bench(args: argparse.Namespace) -> int:
    modes = {m.strip() for m in args.modes.split(",") if m.strip()}
    run_bench(
        args.repo, args.problems, modes, args.out, seed=args.seed, jobs=args.jobs
    )
    return 0


def _cmd_translate(args: argparse.Namespace) -> int:
    translated = depparse.translate_tree(args.pkgs, args.out)
    idx = load_repository(translated)
    print(f"translated {len(idx)} packages into {args.out}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lazydep",
        description="Lazy product discovery over fragmented feature models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("discover", help="find a product containing the request")
    p.add_argument("--repo", required=True, help="repository directory")
    p.add_argument("--request", required=True, help="comma-separated feature names")
    p.add_argument("--mode", choices=["lazy", "eager"], default="lazy")
    p.add_argument("--verify-oracle", action="store_true",
                   help="check the answer against the extensional oracle")
    p.add_argument("--debug-invariants", action="store_true",
                   help="record loop snapshots and check invariants")
    p.add_argument("--dump-cnf", metavar="FILE", default=None,
                   help="write the final clause store as DIMACS CNF")
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--stats", metavar="FILE", default=None,
                   help="write a one-row stats CSV")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=_cmd_discover)

    p = sub.add_parser("oracle", help="extensional answer (small repositories only)")
    p.add_argument("--repo", required=True)
    p.add_argument("--request", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("gen", help="generate a seeded synthetic repository")
    p.add_argument("--out", required=True)
    p.add_argument("--fragments", type=int, required=True)
    p.add_argument("--features-per", type=int, required=True)
    p.add_argument("--out-degree", type=int, default=3)
    p.add_argument("--share-prob", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("bench", help="run a problem list and write stats CSV")
    p.add_argument("--repo", required=True)
    p.add_argument("--problems", required=True,
                   help="file with one comma-separated request per line")
    p.add_argument("--modes", default="lazy,eager")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("translate", help="convert .pkg declarations to a repository")
    p.add_argument("--pkgs", required=True, help="directory of .pkg files")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_translate)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2
    try:
        return args.func(args)
    except (
        RepositoryError,
        UnknownFeatureError,
        extfm.EnumerationCapError,
        depparse.DependSyntaxError,
        depparse.TranslationError,
        ValueError,
        OSError,
    ) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


def run() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    run()
