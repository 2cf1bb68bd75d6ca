"""Parser and translator for a Gentoo-style dependency language.

Handles a small subset of the ebuild DEPEND syntax:

    cat/pkg             a dependency on any version of a package
    !cat/pkg            a conflict
    flag? ( ... )       items active only when the use flag is selected
    || ( ... )          at least one of the items
    ( ... )             plain grouping

A package declaration (``.pkg`` file) names the package, lists its use
flags, and carries dependency lines:

    name cat/pkg
    iuse flag1 flag2
    depend doc? ( sys-apps/texinfo )

Translation maps a package to a guarded feature-model fragment: the package
name becomes the guard feature, each use flag becomes `<package>:<flag>`,
and every referenced package collapses to a single shared feature.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from lazydep.formula import (
    Formula,
    Implies,
    Not,
    PropFM,
    Var,
    conjoin,
    disjoin,
)
from lazydep.fragments import Fragment, write_repository

_PACKAGE_RE = re.compile(
    r"[A-Za-z0-9_][A-Za-z0-9_+.-]*/[A-Za-z0-9_][A-Za-z0-9_+.-]*"
)
_FLAG_RE = re.compile(r"[A-Za-z0-9_][A-Za-z0-9_+.-]*")


class DependSyntaxError(ValueError):
    """Malformed dependency text."""


class TranslationError(ValueError):
    """A dependency refers to something the declaration does not provide."""


@dataclass(frozen=True)
class Atom:
    package: str
    negated: bool = False


@dataclass(frozen=True)
class UseCond:
    flag: str
    body: tuple["DependExpr", ...]


@dataclass(frozen=True)
class AnyOf:
    body: tuple["DependExpr", ...]

    def __post_init__(self):
        if not self.body:
            raise ValueError("any-of group must not be empty")


@dataclass(frozen=True)
class Group:
    body: tuple["DependExpr", ...]


DependExpr = Atom | UseCond | AnyOf | Group


@dataclass(frozen=True)
class PackageDecl:
    name: str
    use_flags: tuple[str, ...]
    depend: tuple[DependExpr, ...]

    def __post_init__(self):
        if not _PACKAGE_RE.fullmatch(self.name):
            raise ValueError(f"package name must look like cat/pkg: {self.name!r}")
        if len(set(self.use_flags)) != len(self.use_flags):
            raise ValueError(f"duplicate use flags in {self.name}")


def _tokenize(text: str) -> list[str]:
    return text.replace("(", " ( ").replace(")", " ) ").split()


def parse_depend(text: str) -> list[DependExpr]:
    """Parse dependency text into a list of conjoined items."""
    tokens = _tokenize(text)
    items, i = _parse_items(tokens, 0, top_level=True)
    return items


def _parse_items(
    tokens: list[str], i: int, top_level: bool
) -> tuple[list[DependExpr], int]:
    items: list[DependExpr] = []
    while i < len(tokens):
        tok = tokens[i]
        if tok == ")":
            if top_level:
                raise DependSyntaxError("unbalanced ')'")
            return items, i + 1
        item, i = _parse_item(tokens, i)
        items.append(item)
    if not top_level:
        raise DependSyntaxError("missing ')'")
    return items, i


def _parse_item(tokens: list[str], i: int) -> tuple[DependExpr, int]:
    tok = tokens[i]
    if tok == "(":
        body, i = _parse_items(tokens, i + 1, top_level=False)
        return Group(tuple(body)), i
    if tok == "||":
        body, i = _parse_group(tokens, i + 1)
        if not body:
            raise DependSyntaxError("empty '||' group")
        return AnyOf(tuple(body)), i
    if tok.endswith("?"):
        flag = tok[:-1]
        if not _FLAG_RE.fullmatch(flag):
            raise DependSyntaxError(f"bad use-flag token: {tok!r}")
        body, i = _parse_group(tokens, i + 1)
        return UseCond(flag, tuple(body)), i
    if tok.startswith("!"):
        return Atom(_check_package(tok[1:]), negated=True), i + 1
    return Atom(_check_package(tok)), i + 1


def _parse_group(tokens: list[str], i: int) -> tuple[list[DependExpr], int]:
    if i >= len(tokens) or tokens[i] != "(":
        raise DependSyntaxError("expected '(' after conditional or '||'")
    return _parse_items(tokens, i + 1, top_level=False)


def _check_package(token: str) -> str:
    if not _PACKAGE_RE.fullmatch(token):
        raise DependSyntaxError(f"bad package atom: {token!r}")
    return token


def format_depend(items: Sequence[DependExpr]) -> str:
    return " ".join(_format_item(item) for item in items)


def _format_item(item: DependExpr) -> str:
    if isinstance(item, Atom):
        return ("!" if item.negated else "") + item.package
    if isinstance(item, UseCond):
        return f"{item.flag}? {_format_group(item.body)}"
    if isinstance(item, AnyOf):
        return f"|| {_format_group(item.body)}"
    return _format_group(item.body)


def _format_group(body: Sequence[DependExpr]) -> str:
    inner = format_depend(body)
    return f"( {inner} )" if inner else "( )"


def referenced_packages(items: Iterable[DependExpr]) -> frozenset[str]:
    out: set[str] = set()
    stack = list(items)
    while stack:
        item = stack.pop()
        if isinstance(item, Atom):
            out.add(item.package)
        else:
            stack.extend(item.body)
    return frozenset(out)


def translate_package(decl: PackageDecl) -> Fragment:
    """Encode a package declaration as a guarded fragment.

    The constraint is `package -> (translated dependency items)`; a use
    condition becomes an implication from the package's flag feature.
    """
    flag_features = {flag: f"{decl.name}:{flag}" for flag in decl.use_flags}

    def item_formula(item: DependExpr) -> Formula:
        if isinstance(item, Atom):
            return Not(Var(item.package)) if item.negated else Var(item.package)
        if isinstance(item, UseCond):
            if item.flag not in flag_features:
                raise TranslationError(
                    f"{decl.name}: dependency uses undeclared flag {item.flag!r}"
                )
            return Implies(Var(flag_features[item.flag]), body_formula(item.body))
        if isinstance(item, AnyOf):
            return disjoin([item_formula(x) for x in item.body])
        return body_formula(item.body)

    def body_formula(body: Sequence[DependExpr]) -> Formula:
        return conjoin([item_formula(x) for x in body])

    constraint = Implies(Var(decl.name), body_formula(decl.depend))
    features = (
        frozenset({decl.name})
        | frozenset(flag_features.values())
        | referenced_packages(decl.depend)
    )
    return Fragment(decl.name, PropFM(features, constraint), guard=decl.name)


def parse_package_file(text: str, origin: str = "<string>") -> PackageDecl:
    """Parse a ``.pkg`` declaration file."""
    name: str | None = None
    flags: list[str] = []
    depend: list[DependExpr] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        keyword, _, rest = line.partition(" ")
        rest = rest.strip()
        if keyword == "name":
            if name is not None:
                raise DependSyntaxError(f"{origin}:{lineno}: duplicate name line")
            name = rest
        elif keyword == "iuse":
            flags.extend(rest.split())
        elif keyword == "depend":
            depend.extend(parse_depend(rest))
        else:
            raise DependSyntaxError(f"{origin}:{lineno}: unrecognized line: {raw!r}")
    if name is None:
        raise DependSyntaxError(f"{origin}: missing name line")
    try:
        return PackageDecl(name, tuple(flags), tuple(depend))
    except ValueError as e:
        raise DependSyntaxError(f"{origin}: {e}") from e


def translate_tree(pkg_dir: Path | str, out_dir: Path | str) -> Path:
    """Translate a directory of ``.pkg`` files into a fragment repository."""
    pkg_dir = Path(pkg_dir)
    fragments = []
    for path in sorted(pkg_dir.glob("*.pkg")):
        decl = parse_package_file(path.read_text(encoding="utf-8"), origin=str(path))
        fragments.append(translate_package(decl))
    return write_repository(out_dir, fragments)
