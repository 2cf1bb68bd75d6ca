"""Extensional feature models: explicit feature and product sets.

Desk-scale executable semantics for the feature-model algebra behind the
lazy discovery engine: interfaces, slices, composition, conservative
interfaces, and cuts.  Everything here manipulates explicit product sets,
so operations are capped at small feature counts and serve as the
ground-truth oracle for the symbolic modules.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Optional

from lazydep.formula import PropFM, eval_formula, validate_feature_name

ENUM_CAP = 20  # 2^20 subsets is the most any enumeration walks
BRUTE_CUT_CAP = 12  # the doubly exponential cut search stops well short of that

Product = frozenset[str]


class EnumerationCapError(RuntimeError):
    """An operation would enumerate more subsets than the cap allows."""


class DisjointnessError(ValueError):
    """Precondition violation: the feature models share features."""


@dataclass(frozen=True)
class ExtFM:
    """A feature model given by its feature set and explicit product set."""

    features: frozenset[str]
    products: frozenset[Product]

    def __post_init__(self):
        object.__setattr__(self, "features", frozenset(self.features))
        object.__setattr__(
            self, "products", frozenset(frozenset(p) for p in self.products)
        )
        for p in self.products:
            if not p <= self.features:
                raise ValueError(
                    f"product {sorted(p)} not a subset of features {sorted(self.features)}"
                )

    @property
    def is_void(self) -> bool:
        return not self.products


EMPTY_FM = ExtFM(frozenset(), frozenset({frozenset()}))


def void_fm(features: Iterable[str]) -> ExtFM:
    """The feature model over the given features that has no products."""
    return ExtFM(frozenset(features), frozenset())


def _check_cap(n: int, cap: int, what: str) -> None:
    if n > cap:
        raise EnumerationCapError(f"{what}: {n} features exceeds cap of {cap}")


def _subsets(names: Iterable[str]) -> list[Product]:
    ordered = sorted(names)
    out = []
    for bits in range(1 << len(ordered)):
        out.append(frozenset(ordered[i] for i in range(len(ordered)) if bits >> i & 1))
    return out


def enumerate_products(m: PropFM) -> ExtFM:
    """All subsets of the declared features that satisfy the constraint."""
    _check_cap(len(m.features), ENUM_CAP, "enumerate_products")
    products = frozenset(
        p for p in _subsets(m.features) if eval_formula(m.constraint, p)
    )
    return ExtFM(m.features, products)


def is_interface(m1: ExtFM, m2: ExtFM) -> bool:
    """m1 hides some of m2's features and projects its products accordingly."""
    if not m1.features <= m2.features:
        return False
    return m1.products == frozenset(p & m1.features for p in m2.products)


def slice_fm(m: ExtFM, scope: Iterable[str]) -> ExtFM:
    """Restrict to the features in scope; the unique interface on F & scope."""
    scope = frozenset(scope)
    return ExtFM(m.features & scope, frozenset(p & scope for p in m.products))


def compose_ext(m1: ExtFM, m2: ExtFM) -> ExtFM:
    """Join products that agree on the shared features."""
    features = m1.features | m2.features
    by_overlap: dict[Product, list[Product]] = {}
    for q in m2.products:
        by_overlap.setdefault(q & m1.features, []).append(q)
    products = set()
    for p in m1.products:
        for q in by_overlap.get(p & m2.features, ()):
            products.add(p | q)
    return ExtFM(features, frozenset(products))


def compose_all(ms: Iterable[ExtFM]) -> ExtFM:
    return reduce(compose_ext, ms, EMPTY_FM)


def is_pre_product(m: ExtFM, config: Iterable[str]) -> bool:
    """True iff the configuration extends to some product of m."""
    config = frozenset(config)
    return any(config <= p for p in m.products)


def is_conservative_interface(m1: ExtFM, m2: ExtFM) -> bool:
    """An interface whose products are all products of the original."""
    return is_interface(m1, m2) and m1.products <= m2.products


def is_cut(candidate: ExtFM, m: ExtFM, scope: Iterable[str]) -> bool:
    """A conservative interface squeezed between the scope slice and m."""
    scope = frozenset(scope)
    return (
        is_interface(slice_fm(m, scope), candidate)
        and is_interface(candidate, m)
        and candidate.products <= m.products
    )


def minimum_cut_fixpoint(m: ExtFM, scope: Iterable[str]) -> ExtFM:
    """The least cut of m for the scope, grown to a fixpoint.

    Starting from (F & scope, no products), repeatedly add every product p
    all of whose proper sub-products p' leave (p - p') touching the current
    feature set, then add those products' features, until stable.
    """
    _check_cap(len(m.features), ENUM_CAP, "minimum_cut_fixpoint")
    scope = frozenset(scope)
    products = sorted(m.products, key=lambda p: (len(p), sorted(p)))
    proper_subs = {
        p: [q for q in products if q < p] for p in products
    }
    feats = m.features & scope
    kept: set[Product] = set()
    while True:
        added = {
            p
            for p in products
            if all((p - q) & feats for q in proper_subs[p])
        }
        new_feats = feats.union(*added) if added else feats
        if new_feats == feats and added <= kept:
            return ExtFM(frozenset(feats), frozenset(kept))
        feats = new_feats
        kept |= added


def minimum_cut_bruteforce(m: ExtFM, scope: Iterable[str]) -> ExtFM:
    """Independent search for the least cut: try every feature superset.

    Enumerates every F'' between F & scope and F, keeps the slices that are
    cuts, and returns the one below all others in the (features, products)
    inclusion order.  A missing unique minimum is an internal error.
    """
    _check_cap(len(m.features), BRUTE_CUT_CAP, "minimum_cut_bruteforce")
    scope = frozenset(scope)
    base = m.features & scope
    candidates = []
    for extra in _subsets(m.features - base):
        cand = slice_fm(m, base | extra)
        if is_cut(cand, m, scope):
            candidates.append(cand)
    best = min(
        candidates,
        key=lambda c: (len(c.features), len(c.products), sorted(c.features)),
    )
    for cand in candidates:
        if not (best.features <= cand.features and best.products <= cand.products):
            raise RuntimeError(
                "no unique minimum cut found; the fixpoint characterization is violated"
            )
    return best


def discover_ext(ms: Iterable[ExtFM], request: Iterable[str]) -> Optional[Product]:
    """Compose everything and search the product set for the request.

    Returns the lexicographically smallest product (by sorted feature names)
    that contains the request, or None if there is none.
    """
    ms = list(ms)
    request = frozenset(request)
    total = frozenset().union(*(m.features for m in ms)) if ms else frozenset()
    _check_cap(len(total), ENUM_CAP, "discover_ext")
    composed = compose_all(ms)
    matches = [p for p in composed.products if request <= p]
    if not matches:
        return None
    return min(matches, key=lambda p: sorted(p))


def disjoint_compat_criterion(ms: Iterable[ExtFM], request: Iterable[str]) -> bool:
    """Per-fragment compatibility check, valid only for disjoint fragments.

    True iff the request is covered by the union of feature sets and, for
    every fragment, its share of the request is a product of the fragment
    sliced to the request.
    """
    ms = list(ms)
    request = frozenset(request)
    for i, m1 in enumerate(ms):
        for m2 in ms[i + 1 :]:
            shared = m1.features & m2.features
            if shared:
                raise DisjointnessError(
                    f"fragments share features: {sorted(shared)}"
                )
    union = frozenset().union(*(m.features for m in ms)) if ms else frozenset()
    if not request <= union:
        return False
    return all(
        (request & m.features) in slice_fm(m, request).products for m in ms
    )


# ---------------------------------------------------------------------------
# Debug text format, used by golden-test fixtures:
#
#   features: a b c
#   product:
#   product: a b
# ---------------------------------------------------------------------------

def format_ext(m: ExtFM) -> str:
    lines = ["features: " + " ".join(sorted(m.features))]
    for p in sorted(m.products, key=lambda p: (len(p), sorted(p))):
        lines.append(("product: " + " ".join(sorted(p))).rstrip())
    return "\n".join(lines) + "\n"


def parse_ext(text: str) -> ExtFM:
    features: frozenset[str] | None = None
    products = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("features:"):
            if features is not None:
                raise ValueError("duplicate features line")
            names = line[len("features:") :].split()
            features = frozenset(validate_feature_name(n) for n in names)
        elif line.startswith("product:"):
            names = line[len("product:") :].split()
            products.append(frozenset(validate_feature_name(n) for n in names))
        else:
            raise ValueError(f"unrecognized line: {raw!r}")
    if features is None:
        raise ValueError("missing features line")
    return ExtFM(features, frozenset(products))
