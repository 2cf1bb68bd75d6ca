"""Fixtures shared across the suite: the glibc/g-shell desk examples."""

from __future__ import annotations

import pytest

from helpers import powerset
from lazydep.extfm import ExtFM
from lazydep.formula import PropFM, parse_formula
from lazydep.fragments import Fragment, load_repository, write_repository

GLIBC_FEATURES = frozenset({"glibc", "txinfo", "tzdata", "glibc:doc", "glibc:v"})
GSHELL_FEATURES = frozenset({"g-shell", "tzdata", "g-shell:nm"})

GLIBC_TEXT = "glibc -> ((glibc:doc -> txinfo) & (glibc:v -> !tzdata))"
GSHELL_TEXT = "g-shell -> (g-shell:nm -> tzdata)"


def _fs(*names: str) -> frozenset[str]:
    return frozenset(names)


def glibc_product_set() -> frozenset[frozenset[str]]:
    """The known product set of the glibc model, written out line by line."""
    explicit = [
        _fs("glibc"),
        _fs("glibc", "txinfo"),
        _fs("glibc", "tzdata"),
        _fs("glibc", "txinfo", "tzdata"),
        _fs("glibc", "glibc:doc", "txinfo"),
        _fs("glibc", "glibc:doc", "txinfo", "tzdata"),
        _fs("glibc", "glibc:v"),
        _fs("glibc", "glibc:v", "txinfo"),
        _fs("glibc", "glibc:doc", "glibc:v", "txinfo"),
    ]
    free = powerset({"txinfo", "tzdata", "glibc:doc", "glibc:v"})
    return frozenset(explicit) | frozenset(free)


def gshell_product_set() -> frozenset[frozenset[str]]:
    explicit = [
        _fs("g-shell"),
        _fs("g-shell", "tzdata"),
        _fs("g-shell", "tzdata", "g-shell:nm"),
    ]
    free = powerset({"tzdata", "g-shell:nm"})
    return frozenset(explicit) | frozenset(free)


def full_products_listed() -> frozenset[frozenset[str]]:
    """Known products of the glibc/g-shell composition, written out line by line.

    A spot-check subset: the composition also has mixed products (one package
    plus the other's stray flags) that the enumeration covers.
    """
    out = set(glibc_product_set()) | set(gshell_product_set())
    out |= set(powerset({"txinfo", "tzdata", "glibc:doc", "glibc:v", "g-shell:nm"}))
    out |= {_fs("glibc", "g-shell") | p for p in powerset({"txinfo", "tzdata"})}
    out |= {
        _fs("glibc", "glibc:doc", "txinfo", "g-shell") | p
        for p in powerset({"tzdata"})
    }
    out |= {_fs("glibc", "glibc:v", "g-shell") | p for p in powerset({"txinfo"})}
    out |= {
        _fs("glibc", "g-shell", "g-shell:nm", "tzdata") | p
        for p in powerset({"txinfo"})
    }
    out |= {_fs("glibc", "glibc:doc", "glibc:v", "txinfo", "g-shell")}
    out |= {_fs("glibc", "glibc:doc", "txinfo", "g-shell", "g-shell:nm", "tzdata")}
    return frozenset(out)


@pytest.fixture(scope="session")
def glibc_fm() -> PropFM:
    return PropFM(GLIBC_FEATURES, parse_formula(GLIBC_TEXT))


@pytest.fixture(scope="session")
def gshell_fm() -> PropFM:
    return PropFM(GSHELL_FEATURES, parse_formula(GSHELL_TEXT))


@pytest.fixture(scope="session")
def glibc_ext(glibc_fm) -> ExtFM:
    return ExtFM(glibc_fm.features, glibc_product_set())


@pytest.fixture(scope="session")
def gshell_ext(gshell_fm) -> ExtFM:
    return ExtFM(gshell_fm.features, gshell_product_set())


@pytest.fixture(scope="session")
def glibc_fragment(glibc_fm) -> Fragment:
    return Fragment("glibc", glibc_fm, "glibc")


@pytest.fixture(scope="session")
def gshell_fragment(gshell_fm) -> Fragment:
    return Fragment("g-shell", gshell_fm, "g-shell")


@pytest.fixture(scope="session")
def demo_repo(tmp_path_factory, glibc_fragment, gshell_fragment):
    root = tmp_path_factory.mktemp("demo_repo")
    write_repository(root, [glibc_fragment, gshell_fragment])
    return root


@pytest.fixture(scope="session")
def demo_index(demo_repo):
    return load_repository(demo_repo)
