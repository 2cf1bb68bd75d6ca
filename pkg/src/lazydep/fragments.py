"""On-disk repositories of feature-model fragments, loaded lazily.

A repository is a directory with a `manifest.txt` describing every fragment
(id, file, guard feature, declared features) plus one `.fm` file per
fragment.  Building the index reads the manifest only; fragment constraint
bodies are parsed on demand, which is what makes discovery lazy.

Manifest line format (one per fragment):

    <id> <relative-file> guard=<feature|none> features=<comma-separated>

Fragment file format (`.fm`): `feature <name>` lines, then one or more
`constraint <formula>` lines, conjoined.  `#` starts a comment.  UTF-8,
LF line endings.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

from lazydep import extfm
from lazydep.formula import (
    TRUE,
    Formula,
    FormulaSyntaxError,
    Implies,
    InvalidFeatureName,
    Not,
    PropFM,
    Var,
    conjoin,
    disjoin,
    format_formula,
    parse_formula,
    validate_feature_name,
)


class RepositoryError(Exception):
    """Manifest or fragment file problems."""


# Counts fragment-body parses, so tests can assert that building an index
# parses no constraints at all.
_constraint_parses = 0


def constraint_parse_count() -> int:
    return _constraint_parses


@dataclass(frozen=True)
class Fragment:
    """A named feature model, optionally guarded by a distinguished feature.

    A guarded fragment's constraint has the shape `guard -> body`; its
    constraints are inert while the guard feature stays unexamined, which is
    what allows the discovery loop to skip loading it.
    """

    id: str
    fm: PropFM
    guard: Optional[str]

    def __post_init__(self):
        if self.guard is not None:
            c = self.fm.constraint
            if self.guard not in self.fm.features:
                raise ValueError(f"guard {self.guard!r} not a declared feature")
            if not (isinstance(c, Implies) and c.antecedent == Var(self.guard)):
                raise ValueError(
                    f"guard {self.guard!r} does not match the constraint shape"
                )


@dataclass(frozen=True)
class IndexEntry:
    id: str
    path: Path
    features: frozenset[str]
    guard: Optional[str]


@dataclass(frozen=True)
class RepositoryIndex:
    """Manifest-level view of a repository; immutable after load."""

    root: Path
    entries: dict[str, IndexEntry]  # manifest order
    feature_owners: dict[str, frozenset[str]]
    all_features: frozenset[str]

    def ids(self) -> list[str]:
        return list(self.entries)

    def __len__(self) -> int:
        return len(self.entries)


def detect_guard(fm: PropFM) -> Optional[str]:
    """The guard feature, if the constraint is `f -> body` for declared f."""
    c = fm.constraint
    if isinstance(c, Implies) and isinstance(c.antecedent, Var):
        if c.antecedent.name in fm.features:
            return c.antecedent.name
    return None


def load_repository(root: Path | str) -> RepositoryIndex:
    """Index a repository from its manifest; no fragment bodies are read."""
    root = Path(root)
    manifest = root / "manifest.txt"
    if not manifest.is_file():
        raise RepositoryError(f"missing manifest: {manifest}")
    entries: dict[str, IndexEntry] = {}
    owners: dict[str, set[str]] = {}
    for lineno, raw in enumerate(manifest.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) != 4 or not fields[2].startswith("guard=") or not fields[3].startswith("features="):
            raise RepositoryError(f"{manifest}:{lineno}: malformed manifest line: {raw!r}")
        fid, relfile = fields[0], fields[1]
        guard_text = fields[2][len("guard="):]
        features_text = fields[3][len("features="):]
        if fid in entries:
            raise RepositoryError(f"{manifest}:{lineno}: duplicate fragment id {fid!r}")
        try:
            features = frozenset(
                validate_feature_name(n) for n in features_text.split(",") if n
            )
            guard = None if guard_text == "none" else validate_feature_name(guard_text)
        except InvalidFeatureName as e:
            raise RepositoryError(f"{manifest}:{lineno}: {e}") from e
        if guard is not None and guard not in features:
            raise RepositoryError(
                f"{manifest}:{lineno}: guard {guard!r} not among declared features"
            )
        entries[fid] = IndexEntry(fid, root / relfile, features, guard)
        for name in features:
            owners.setdefault(name, set()).add(fid)
    return RepositoryIndex(
        root=root,
        entries=entries,
        feature_owners={n: frozenset(ids) for n, ids in owners.items()},
        all_features=frozenset(owners),
    )


def load_fragment(idx: RepositoryIndex, fid: str) -> Fragment:
    """Parse one fragment body and check it against its manifest entry."""
    global _constraint_parses
    entry = idx.entries.get(fid)
    if entry is None:
        raise RepositoryError(f"unknown fragment id {fid!r}")
    try:
        text = entry.path.read_text(encoding="utf-8")
    except OSError as e:
        raise RepositoryError(f"fragment {fid!r}: cannot read {entry.path}: {e}") from e
    features: set[str] = set()
    constraints: list[Formula] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        keyword, _, rest = line.partition(" ")
        if keyword == "feature":
            try:
                name = validate_feature_name(rest.strip())
            except InvalidFeatureName as e:
                raise RepositoryError(f"fragment {fid!r}:{lineno}: {e}") from e
            features.add(name)
        elif keyword == "constraint":
            try:
                _constraint_parses += 1
                constraints.append(parse_formula(rest))
            except FormulaSyntaxError as e:
                raise RepositoryError(f"fragment {fid!r}:{lineno}: {e}") from e
        else:
            raise RepositoryError(
                f"fragment {fid!r}:{lineno}: unrecognized line: {raw!r}"
            )
    if not constraints:
        raise RepositoryError(f"fragment {fid!r}: no constraint lines")
    if frozenset(features) != entry.features:
        raise RepositoryError(
            f"fragment {fid!r}: declared features differ from manifest "
            f"(file: {sorted(features)}, manifest: {sorted(entry.features)})"
        )
    constraint = conjoin(constraints)
    try:
        fm = PropFM(frozenset(features), constraint)
    except ValueError as e:
        raise RepositoryError(f"fragment {fid!r}: {e}") from e
    guard = detect_guard(fm)
    # A manifest guard that the file does not actually have would make the
    # trivial-cut shortcut unsound, so any mismatch is an error.
    if guard != entry.guard:
        raise RepositoryError(
            f"fragment {fid!r}: manifest guard {entry.guard!r} does not match "
            f"the constraint (detected {guard!r})"
        )
    return Fragment(fid, fm, guard)


@dataclass(frozen=True)
class CutFM:
    """A symbolic cut; trivial cuts carry features but no constraint."""

    fm: PropFM
    trivial: bool

    def __post_init__(self):
        if self.trivial and self.fm.constraint != TRUE:
            raise ValueError("trivial cut must have constraint true")


def pick_cut(frag: Fragment, examined: Iterable[str], strategy: str = "full-or-trivial") -> CutFM:
    """Return a cut of the fragment for the examined feature set.

    The default strategy returns the whole fragment unless its guard is
    unexamined, in which case the constraint-free model over the examined
    share of its features is already a cut.  The "minimum" strategy computes
    the actual least cut by enumeration; it exists for desk-scale experiments
    and defeats laziness at any real size.
    """
    examined = frozenset(examined)
    if strategy == "minimum":
        return _minimum_cut(frag, examined)
    if strategy != "full-or-trivial":
        raise ValueError(f"unknown cut strategy {strategy!r}")
    if frag.guard is not None and frag.guard not in examined:
        return CutFM(PropFM(examined & frag.fm.features, TRUE), trivial=True)
    return CutFM(frag.fm, trivial=False)


def _minimum_cut(frag: Fragment, examined: frozenset[str]) -> CutFM:
    cut = extfm.minimum_cut_fixpoint(extfm.enumerate_products(frag.fm), examined)
    if len(cut.products) == 1 << len(cut.features):
        return CutFM(PropFM(cut.features, TRUE), trivial=True)
    terms = []
    for p in sorted(cut.products, key=lambda p: (len(p), sorted(p))):
        lits = [Var(n) if n in p else Not(Var(n)) for n in sorted(cut.features)]
        terms.append(conjoin(lits))
    return CutFM(PropFM(cut.features, disjoin(terms)), trivial=False)


def compose_symbolic(cuts: Sequence[CutFM]) -> PropFM:
    """Union of features, conjunction of the non-trivial constraints."""
    if cuts:
        features = frozenset().union(*(c.fm.features for c in cuts))
    else:
        features = frozenset()
    parts = [c.fm.constraint for c in cuts if not c.trivial]
    return PropFM(features, conjoin(parts))


def closure_fragments(idx: RepositoryIndex, feature: str) -> frozenset[str]:
    """Upper bound on the fragments lazy discovery can load for a request.

    Follows declared features from guard owners transitively, using manifest
    data only.
    """
    seen: set[str] = set()
    frontier = [feature]
    guard_owner = {
        e.guard: e.id for e in idx.entries.values() if e.guard is not None
    }
    while frontier:
        name = frontier.pop()
        fid = guard_owner.get(name)
        if fid is None or fid in seen:
            continue
        seen.add(fid)
        frontier.extend(idx.entries[fid].features)
    return frozenset(seen)


_FILENAME_SAFE = re.compile(r"[^A-Za-z0-9_.+-]")


def write_repository(root: Path | str, fragments: Sequence[Fragment]) -> Path:
    """Write fragments and their manifest under root; returns the root path."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    manifest_lines = []
    used_names: set[str] = set()
    for frag in fragments:
        stem = _FILENAME_SAFE.sub("_", frag.id) or "fragment"
        filename = f"{stem}.fm"
        n = 2
        while filename in used_names:
            filename = f"{stem}-{n}.fm"
            n += 1
        used_names.add(filename)
        lines = [f"feature {name}" for name in sorted(frag.fm.features)]
        lines.append(f"constraint {format_formula(frag.fm.constraint)}")
        (root / filename).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
        guard_text = frag.guard if frag.guard is not None else "none"
        features_text = ",".join(sorted(frag.fm.features))
        manifest_lines.append(
            f"{frag.id} {filename} guard={guard_text} features={features_text}"
        )
    (root / "manifest.txt").write_text(
        "\n".join(manifest_lines) + ("\n" if manifest_lines else ""),
        encoding="utf-8",
        newline="\n",
    )
    return root
