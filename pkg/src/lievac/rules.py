"""Rewrite rules on unknown-function derivative atoms.

A rule states that one derivative atom of an unknown function equals some
expression, e.g. ``dH[1;g[1,2]] -> 0`` or ``dPhi[1,2;g[2,2]] -> -dH[2;x1]``.
Every further derivative of the left-hand side is rewritten as the matching
derivative of the right-hand side, so a rule covers its whole closure.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .exprcore import Expr, substitute_expr, var_payload
from .jetspace import FuncAtom, func_name, partial_g, partial_x


class RuleError(ValueError):
    pass


def _contains(big: tuple, small: tuple) -> bool:
    need = Counter(small)
    have = Counter(big)
    return all(have[k] >= n for k, n in need.items())


def _minus(big: tuple, small: tuple) -> tuple:
    rest = Counter(big)
    rest.subtract(Counter(small))
    return tuple(sorted(rest.elements()))


@dataclass
class RuleSet:
    rules: dict = field(default_factory=dict)  # FuncAtom -> (Expr, label)
    _by_head: dict = field(default_factory=dict, repr=False)
    _image: dict = field(default_factory=dict, repr=False)

    def add(self, lhs: Expr, rhs: Expr, label: str = "") -> None:
        if len(lhs) != 1:
            raise RuleError("left-hand side must be a single atom")
        (mono, coeff), = lhs.items()
        if len(mono) != 1 or mono[0][1] != 1:
            raise RuleError("left-hand side must be a single atom")
        atom = var_payload(mono[0][0])
        if not isinstance(atom, FuncAtom):
            raise RuleError("rules act on unknown-function atoms only")
        rhs = rhs / coeff if coeff != 1 else rhs
        if atom in self.rules:
            old, _ = self.rules[atom]
            if old != rhs:
                raise RuleError(f"conflicting rules for {func_name(atom)}")
            return
        self.rules[atom] = (rhs, label)
        self._by_head.setdefault((atom.func, atom.idx), []).append(atom)
        self._image.clear()

    def extend(self, other: "RuleSet") -> "RuleSet":
        for atom, (rhs, label) in other.rules.items():
            self.add(_atom_expr(atom), rhs, label)
        return self

    def copy(self) -> "RuleSet":
        return RuleSet().extend(self)

    def __len__(self) -> int:
        return len(self.rules)

    def _match(self, atom: FuncAtom):
        best = None
        for base in self._by_head.get((atom.func, atom.idx), ()):
            if _contains(atom.xs, base.xs) and _contains(atom.gs, base.gs):
                key = (base.order, base.xs, base.gs)
                if best is None or key > best[0]:
                    best = (key, base)
        return None if best is None else best[1]

    def _rewrite_var(self, v: int, depth: int) -> Expr | None:
        if v in self._image:
            return self._image[v]
        atom = var_payload(v)
        out = None
        if isinstance(atom, FuncAtom):
            base = self._match(atom)
            if base is not None:
                if depth > 64:
                    raise RuleError("rewrite rules do not terminate")
                out, _ = self.rules[base]
                for a in _minus(atom.xs, base.xs):
                    out = partial_x(out, a)
                for p in _minus(atom.gs, base.gs):
                    out = partial_g(out, *p)
                out = self._apply(out, depth + 1)
        self._image[v] = out
        return out

    def _apply(self, p: Expr, depth: int) -> Expr:
        mapping = {}
        for v in p.variables():
            img = self._rewrite_var(v, depth)
            if img is not None:
                mapping[v] = img
        if not mapping:
            return p
        return substitute_expr(p, mapping)

    def apply(self, p: Expr) -> Expr:
        """Rewrite ``p`` until no rule applies."""
        return self._apply(p, 0)

    def describe(self) -> list[dict]:
        out = []
        for atom in sorted(self.rules, key=func_name):
            rhs, label = self.rules[atom]
            out.append({"lhs": func_name(atom), "rhs": rhs.to_text(), "source": label})
        return out


def _atom_expr(atom: FuncAtom) -> Expr:
    from .jetspace import func

    return func(atom.func, atom.idx, atom.xs, atom.gs)
