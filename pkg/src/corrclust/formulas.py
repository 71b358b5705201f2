"""CNF / NAE formulas and 3-uniform hypergraphs, with DIMACS-style text I/O.

Literals follow DIMACS: variable ``i`` (1-based) is the literal ``i`` and its
negation is ``-i``.  Hypergraph vertices are 0-based.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .instance import ParseError


class FormulaError(ValueError):
    pass


def _as_table(rows, width: int | None):
    """Rows as a 2-D int64 array, or None when row lengths differ."""
    rows = [tuple(int(x) for x in r) for r in rows]
    if not rows:
        return rows, np.zeros((0, width or 0), dtype=np.int64)
    if len({len(r) for r in rows}) != 1:
        return rows, None
    return rows, np.array(rows, dtype=np.int64)


def _check_clauses(num_vars: int, clauses, arity: int | None):
    clauses, table = _as_table(clauses, arity)
    if arity is not None and (table is None or (len(clauses) and table.shape[1] != arity)):
        bad = next(c for c in clauses if len(c) != arity)
        raise FormulaError(f"clause {bad} does not have {arity} literals")
    flat = np.concatenate([np.asarray(c, dtype=np.int64) for c in clauses]) if table is None else table.ravel()
    bad = (flat == 0) | (np.abs(flat) > num_vars)
    if bad.any():
        lit = int(flat[np.argmax(bad)])
        raise FormulaError(f"literal {lit} out of range for {num_vars} variables")
    return tuple(clauses)


def occurrences(num_vars: int, clauses) -> list[int]:
    """Number of clauses each variable appears in (index 0 is unused)."""
    clauses, table = _as_table(clauses, None)
    if table is None:
        counts = [0] * (num_vars + 1)
        for c in clauses:
            for v in {abs(l) for l in c}:
                counts[v] += 1
        return counts
    if table.size == 0:
        return [0] * (num_vars + 1)
    t = np.sort(np.abs(table), axis=1)
    first = np.ones_like(t, dtype=bool)
    first[:, 1:] = t[:, 1:] != t[:, :-1]
    return np.bincount(t[first], minlength=num_vars + 1).tolist()


def _max_occurrence(f) -> int:
    # formulas are immutable, so the count is computed once
    cached = f.__dict__.get("_max_occ")
    if cached is None:
        cached = max(occurrences(f.num_vars, f.clauses), default=0)
        object.__setattr__(f, "_max_occ", cached)
    return cached


@dataclass(frozen=True)
class CnfFormula:
    num_vars: int
    clauses: tuple
    arity: int = 3

    def __init__(self, num_vars: int, clauses, arity: int = 3):
        object.__setattr__(self, "num_vars", int(num_vars))
        object.__setattr__(self, "arity", int(arity))
        object.__setattr__(self, "clauses", _check_clauses(self.num_vars, clauses, self.arity))

    @property
    def m(self) -> int:
        return len(self.clauses)

    def max_occurrence(self) -> int:
        return _max_occurrence(self)


@dataclass(frozen=True)
class NaeFormula:
    num_vars: int
    clauses: tuple
    arity: int = 3

    def __init__(self, num_vars: int, clauses, arity: int = 3):
        if arity not in (3, 6):
            raise FormulaError("NAE arity must be 3 or 6")
        object.__setattr__(self, "num_vars", int(num_vars))
        object.__setattr__(self, "arity", int(arity))
        object.__setattr__(self, "clauses", _check_clauses(self.num_vars, clauses, self.arity))

    @property
    def m(self) -> int:
        return len(self.clauses)

    @property
    def monotone(self) -> bool:
        return all(l > 0 for c in self.clauses for l in c)

    def max_occurrence(self) -> int:
        return _max_occurrence(self)


@dataclass(frozen=True)
class Hypergraph3:
    num_vertices: int
    edges: tuple

    def __init__(self, num_vertices: int, edges):
        object.__setattr__(self, "num_vertices", int(num_vertices))
        edges, table = _as_table(edges, 3)
        if table is None or (len(edges) and table.shape[1] != 3):
            bad = next(e for e in edges if len(e) != 3)
            raise FormulaError(f"hyperedge {bad} must have 3 distinct vertices")
        if len(edges):
            t = np.sort(table, axis=1)
            repeat = (t[:, 1:] == t[:, :-1]).any(axis=1)
            if repeat.any():
                raise FormulaError(f"hyperedge {edges[int(np.argmax(repeat))]} must have 3 distinct vertices")
            out = ((table < 0) | (table >= self.num_vertices)).any(axis=1)
            if out.any():
                raise FormulaError(f"hyperedge {edges[int(np.argmax(out))]} out of range")
        object.__setattr__(self, "edges", tuple(edges))

    @property
    def m(self) -> int:
        return len(self.edges)

    def degrees(self) -> list[int]:
        flat = np.array(self.edges, dtype=np.int64).ravel()
        return np.bincount(flat, minlength=self.num_vertices).tolist()

    def max_degree(self) -> int:
        return max(self.degrees(), default=0)


FANO_LINES = ((0, 1, 2), (0, 3, 4), (0, 5, 6), (1, 3, 5), (1, 4, 6), (2, 3, 6), (2, 4, 5))


def fano_plane() -> Hypergraph3:
    return Hypergraph3(7, FANO_LINES)


# -- text I/O -------------------------------------------------------------------

_KINDS = {"cnf", "nae3", "nae6", "h3"}


def _lines(source):
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="ascii") as fh:
            text = fh.read()
    else:
        text = source.read()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line or line.startswith("c ") or line == "c" or line.startswith("%"):
            continue
        yield lineno, line


def read_header(source) -> str:
    """Return the problem kind named in the header: cnf, nae3, nae6 or h3."""
    for lineno, line in _lines(source):
        tok = line.split()
        if tok[0] != "p" or len(tok) < 2:
            raise ParseError("expected a 'p <kind> ...' header", lineno)
        return tok[1]
    raise ParseError("missing header")


def read_formula(source):
    """Parse a ``p cnf``, ``p nae3``, ``p nae6`` or ``p h3`` file."""
    kind = None
    nv = m = 0
    items: list[tuple[int, ...]] = []
    pending: list[int] = []
    for lineno, line in _lines(source):
        tok = line.split()
        if kind is None:
            if len(tok) != 4 or tok[0] != "p" or tok[1] not in _KINDS:
                raise ParseError("expected header 'p cnf|nae3|nae6|h3 <n> <m>'", lineno)
            kind = tok[1]
            try:
                nv, m = int(tok[2]), int(tok[3])
            except ValueError:
                raise ParseError("non-integer header field", lineno) from None
            continue
        try:
            nums = [int(t) for t in tok]
        except ValueError:
            raise ParseError("non-integer token", lineno) from None
        if kind == "h3":
            if len(nums) != 3:
                raise ParseError("hyperedge lines need exactly 3 vertex ids", lineno)
            if any(not 0 <= v < nv for v in nums):
                raise ParseError(f"vertex out of range for n={nv}", lineno)
            if len(set(nums)) != 3:
                raise ParseError("hyperedge repeats a vertex", lineno)
            items.append(tuple(nums))
            continue
        for x in nums:
            if x == 0:
                items.append(tuple(pending))
                pending = []
            else:
                if abs(x) > nv:
                    raise ParseError(f"literal {x} out of range for {nv} variables", lineno)
                pending.append(x)
    if kind is None:
        raise ParseError("missing header")
    if pending:
        raise ParseError("last clause is not terminated by 0")
    if len(items) != m:
        raise ParseError(f"header declares {m} items, found {len(items)}")
    try:
        if kind == "cnf":
            arity = len(items[0]) if items else 3
            return CnfFormula(nv, items, arity)
        if kind == "h3":
            return Hypergraph3(nv, items)
        return NaeFormula(nv, items, int(kind[-1]))
    except FormulaError as exc:
        raise ParseError(str(exc)) from None


def format_formula(obj) -> str:
    if isinstance(obj, Hypergraph3):
        head = f"p h3 {obj.num_vertices} {obj.m}\n"
        return head + "".join(f"{a} {b} {c}\n" for a, b, c in obj.edges)
    if isinstance(obj, NaeFormula):
        head = f"p nae{obj.arity} {obj.num_vars} {obj.m}\n"
    elif isinstance(obj, CnfFormula):
        head = f"p cnf {obj.num_vars} {obj.m}\n"
    else:
        raise TypeError(f"cannot format {type(obj).__name__}")
    return head + "".join(" ".join(map(str, c)) + " 0\n" for c in obj.clauses)


def write_formula(obj, target) -> None:
    text = format_formula(obj)
    if isinstance(target, (str, os.PathLike)):
        with open(target, "w", encoding="ascii", newline="\n") as fh:
            fh.write(text)
    else:
        target.write(text)


# -- random generators ------------------------------------------------------------


def random_e3sat(num_vars: int, num_clauses: int, rng) -> CnfFormula:
    """Clauses of 3 distinct variables with random signs."""
    if num_vars < 3:
        raise FormulaError("E3-SAT needs at least 3 variables")
    clauses = []
    for _ in range(num_clauses):
        vs = rng.choice(num_vars, size=3, replace=False) + 1
        signs = rng.choice([-1, 1], size=3)
        clauses.append(tuple(int(v * s) for v, s in zip(vs, signs)))
    return CnfFormula(num_vars, clauses, 3)


def random_nae(num_vars: int, num_clauses: int, arity: int, rng, monotone: bool = False) -> NaeFormula:
    """NAE clauses over distinct variables (requires num_vars >= arity)."""
    if num_vars < arity:
        raise FormulaError(f"need at least {arity} variables")
    clauses = []
    for _ in range(num_clauses):
        vs = rng.choice(num_vars, size=arity, replace=False) + 1
        signs = np.ones(arity, dtype=int) if monotone else rng.choice([-1, 1], size=arity)
        clauses.append(tuple(int(v * s) for v, s in zip(vs, signs)))
    return NaeFormula(num_vars, clauses, arity)


def unsatisfiable_e3sat() -> CnfFormula:
    """All eight sign patterns over x1, x2, x3: exactly 7/8 of clauses satisfiable."""
    clauses = [tuple(s * v for s, v in zip(signs, (1, 2, 3)))
               for signs in np.array(np.meshgrid([1, -1], [1, -1], [1, -1], indexing="ij")).reshape(3, -1).T]
    return CnfFormula(3, clauses, 3)
