"""Exact Fourier-Motzkin elimination over rational linear inequality systems.

Rows are ``sum_s a_s x_s  REL  b`` with ``REL`` one of ``<=``, ``>=``, ``=``
and exact :class:`fractions.Fraction` coefficients.  Elimination proceeds in
three stages:

1. equalities that contain a victim are solved for it and substituted;
2. the remaining victims are removed by pairing opposite-sign rows, with
   Chernikov's history rule discarding combinations that cannot be facets;
3. optionally, every surviving row is tested for implication by the others
   with an exact linear program (fraction-free simplex on Python integers).

No floating point is used anywhere in this module.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from math import gcd, lcm
from pathlib import Path
from typing import Iterable, Mapping, Sequence

RELS = ("<=", ">=", "=")
MAX_ROWS = 100_000


class FMEError(ValueError):
    """Malformed system or unknown symbol."""


class RowExplosionError(FMEError):
    """Intermediate row count exceeded the guard."""


def _frac(v) -> Fraction:
    if isinstance(v, float):
        # JSON floats such as 0.5 are taken at their shortest decimal form
        return Fraction(repr(v))
    return Fraction(v)


@dataclass(frozen=True)
class Relation:
    """One row ``sum coeffs[s] * s  rel  const``; zero coefficients are dropped."""

    coeffs: tuple[tuple[str, Fraction], ...]
    rel: str
    const: Fraction

    @classmethod
    def make(cls, coeffs: Mapping[str, object], rel: str, const=0) -> "Relation":
        if rel not in RELS:
            raise FMEError(f"relation must be one of {RELS}, got {rel!r}")
        c = tuple(sorted((s, _frac(v)) for s, v in coeffs.items() if _frac(v) != 0))
        return cls(c, rel, _frac(const))

    @property
    def coeff_map(self) -> dict[str, Fraction]:
        return dict(self.coeffs)

    def symbols(self) -> set[str]:
        return {s for s, _ in self.coeffs}

    def evaluate(self, point: Mapping[str, object]) -> bool:
        lhs = sum((v * _frac(point[s]) for s, v in self.coeffs), Fraction(0))
        if self.rel == "<=":
            return lhs <= self.const
        if self.rel == ">=":
            return lhs >= self.const
        return lhs == self.const

    def pretty(self, order: Sequence[str] | None = None) -> str:
        cm = self.coeff_map
        keys = [s for s in order if s in cm] if order else sorted(cm)
        parts = []
        for s in keys:
            v = cm[s]
            sign = "-" if v < 0 else "+"
            mag = abs(v)
            term = s if mag == 1 else f"{mag}*{s}"
            parts.append((sign, term))
        if not parts:
            lhs = "0"
        else:
            lhs = ("-" if parts[0][0] == "-" else "") + parts[0][1]
            lhs += "".join(f" {sg} {t}" for sg, t in parts[1:])
        return f"{lhs} {self.rel} {self.const}"


@dataclass(frozen=True)
class LinearInequalitySystem:
    symbols: tuple[str, ...]
    relations: tuple[Relation, ...]

    def __post_init__(self):
        if len(set(self.symbols)) != len(self.symbols):
            raise FMEError("duplicate symbols")
        known = set(self.symbols)
        for r in self.relations:
            bad = r.symbols() - known
            if bad:
                raise FMEError(f"row references undeclared symbol(s) {sorted(bad)}")

    @classmethod
    def from_rows(cls, symbols: Sequence[str], rows: Iterable[Relation]) -> "LinearInequalitySystem":
        return cls(tuple(symbols), tuple(rows))

    def contains(self, point: Mapping[str, object]) -> bool:
        return all(r.evaluate(point) for r in self.relations)

    # -- JSON ---------------------------------------------------------------

    @classmethod
    def from_json(cls, doc) -> "LinearInequalitySystem":
        """Load ``{"symbols": [...], "rows": [{"coeffs", "rel", "rhs"}], "nonnegative": [...]}``.

        ``rhs`` is a number or a map of symbol coefficients with an optional
        ``"const"`` entry; symbolic right-hand terms move to the left with a
        sign flip.  ``nonnegative`` (optional) lists symbols that get an
        explicit ``-x <= 0`` row.
        """
        if isinstance(doc, (str, Path)) and not str(doc).lstrip().startswith("{"):
            doc = Path(doc).read_text()
        if isinstance(doc, str):
            doc = json.loads(doc)
        try:
            symbols = list(doc["symbols"])
            raw_rows = doc["rows"]
        except (KeyError, TypeError) as e:
            raise FMEError(f"system JSON needs 'symbols' and 'rows': {e}") from None
        rows = []
        for i, raw in enumerate(raw_rows):
            coeffs = {s: _frac(v) for s, v in raw.get("coeffs", {}).items()}
            rhs = raw.get("rhs", 0)
            const = Fraction(0)
            if isinstance(rhs, Mapping):
                for s, v in rhs.items():
                    if s == "const":
                        const += _frac(v)
                    else:
                        coeffs[s] = coeffs.get(s, Fraction(0)) - _frac(v)
            else:
                const = _frac(rhs)
            unknown = set(coeffs) - set(symbols)
            if unknown:
                raise FMEError(f"row {i} uses undeclared symbol(s) {sorted(unknown)}")
            rows.append(Relation.make(coeffs, raw.get("rel", "<="), const))
        for s in doc.get("nonnegative", []):
            if s not in symbols:
                raise FMEError(f"nonnegative symbol {s!r} is not declared")
            rows.append(Relation.make({s: -1}, "<=", 0))
        return cls(tuple(symbols), tuple(rows))

    def to_json(self) -> dict:
        def num(f: Fraction):
            return f.numerator if f.denominator == 1 else str(f)

        return {
            "symbols": list(self.symbols),
            "rows": [{"coeffs": {s: num(v) for s, v in r.coeffs}, "rel": r.rel,
                      "rhs": num(r.const)} for r in self.relations],
        }


@dataclass(frozen=True)
class EliminationReport:
    eliminated: tuple[str, ...]
    result: LinearInequalitySystem
    dropped_redundant: int


# ---------------------------------------------------------------------------
# normalization

def _canonical(r: Relation, order: dict[str, int]) -> Relation | None:
    """Sign-canonical, leading-coefficient-scaled row; ``None`` for trivially true rows."""
    cm = r.coeff_map
    const = r.const
    rel = r.rel
    if rel == ">=":
        cm = {s: -v for s, v in cm.items()}
        const = -const
        rel = "<="
    if not cm:
        ok = const >= 0 if rel == "<=" else const == 0
        return None if ok else Relation((), rel, Fraction(-1) if rel == "<=" else Fraction(1))
    lead = min(cm, key=lambda s: order.get(s, len(order)))
    scale = abs(cm[lead]) if rel == "<=" else cm[lead]
    return Relation(tuple(sorted((s, v / scale) for s, v in cm.items())), rel, const / scale)


def _sort_key(r: Relation, symbols: Sequence[str]):
    cm = r.coeff_map
    return (r.rel != "=", tuple(-cm.get(s, Fraction(0)) for s in symbols), r.const)


def normalize(system: LinearInequalitySystem) -> LinearInequalitySystem:
    """Canonical form: ``<=``/``=`` rows with leading |coefficient| 1, deduplicated, sorted.

    Among ``<=`` rows with identical coefficients only the tightest survives.
    The operation is idempotent.
    """
    order = {s: i for i, s in enumerate(system.symbols)}
    best: dict = {}
    eqs: dict = {}
    for r in system.relations:
        c = _canonical(r, order)
        if c is None:
            continue
        if c.rel == "=":
            eqs[(c.coeffs, c.const)] = c
        else:
            if c.coeffs not in best or c.const < best[c.coeffs].const:
                best[c.coeffs] = c
    rows = list(eqs.values()) + list(best.values())
    rows.sort(key=lambda r: _sort_key(r, system.symbols))
    return LinearInequalitySystem(system.symbols, tuple(rows))


def check_equivalence(sys_a: LinearInequalitySystem, sys_b: LinearInequalitySystem) -> bool:
    """True iff both systems have identical normalized row sets (exact)."""
    if set(sys_a.symbols) != set(sys_b.symbols):
        raise FMEError(f"symbol sets differ: {sorted(set(sys_a.symbols) ^ set(sys_b.symbols))}")
    a = normalize(LinearInequalitySystem(tuple(sorted(sys_a.symbols)), sys_a.relations))
    b = normalize(LinearInequalitySystem(tuple(sorted(sys_b.symbols)), sys_b.relations))
    return set(a.relations) == set(b.relations)


def row_difference(sys_a: LinearInequalitySystem, sys_b: LinearInequalitySystem):
    """Normalized rows only in ``sys_a`` and only in ``sys_b``."""
    syms = tuple(sys_a.symbols) + tuple(s for s in sys_b.symbols if s not in sys_a.symbols)
    a = set(normalize(LinearInequalitySystem(syms, sys_a.relations)).relations)
    b = set(normalize(LinearInequalitySystem(syms, sys_b.relations)).relations)
    key = lambda r: _sort_key(r, syms)  # noqa: E731
    return sorted(a - b, key=key), sorted(b - a, key=key)


# ---------------------------------------------------------------------------
# exact LP: min c.x  s.t.  M x = q, x >= 0   (fraction-free simplex, Bland's rule)

def _int_row(values: Sequence) -> list[int]:
    if all(type(v) is int for v in values):
        return list(values)
    den = lcm(*(v.denominator for v in values)) if values else 1
    return [int(v * den) for v in values]


def _reduce(row: list[int]) -> list[int]:
    g = 0
    for v in row:
        if v:
            g = gcd(g, v)
            if g == 1:
                return row
    return [v // g for v in row] if g > 1 else row


def exact_lp(m_rows: Sequence[Sequence[Fraction]], q: Sequence[Fraction], c: Sequence[Fraction],
             stop_at: Fraction | None = None):
    """Solve ``min c.x, M x = q, x >= 0`` exactly.

    Returns ``(status, value)`` with status ``"infeasible"``, ``"unbounded"``,
    ``"optimal"`` or ``"reached"``; the last means a feasible point with
    objective ``<= stop_at`` was found and the search stopped early.
    """
    n = len(c)
    rows, rhs = [], []
    for mr, qi in zip(m_rows, q):
        r = list(mr) + [qi]
        if qi < 0:
            r = [-v for v in r]
        if all(v == 0 for v in r):
            continue
        ir = _int_row(r)
        rows.append(ir[:-1])
        rhs.append(ir[-1])
    m = len(rows)
    ncol = n + m
    tab = [_reduce(rows[i] + [1 if j == i else 0 for j in range(m)] + [rhs[i]]) for i in range(m)]
    basis = [n + i for i in range(m)]

    # phase-1 objective: sum of artificials, expressed in nonbasic terms
    obj = [0] * (ncol + 1)
    for j in range(n, ncol):
        obj[j] = 1
    obj_den = 1
    for i in range(m):
        t = tab[i]
        f = t[basis[i]]
        obj = [o * f - obj[basis[i]] * v for o, v in zip(obj, t)]
        obj_den *= f
    g = gcd(*obj, obj_den) if any(obj) else obj_den
    obj = [v // g for v in obj]
    obj_den //= g

    def pivot(r, col):
        nonlocal obj, obj_den
        pr = tab[r]
        p = pr[col]
        for i in range(m):
            if i != r and tab[i][col]:
                a = tab[i][col]
                tab[i] = _reduce([x * p - y * a for x, y in zip(tab[i], pr)])
        if obj[col]:
            a = obj[col]
            obj = [x * p - y * a for x, y in zip(obj, pr)]
            obj_den *= p
            g = gcd(*obj, obj_den)
            obj = [v // g for v in obj]
            obj_den //= g
        basis[r] = col

    def run(allowed: int, target_check) -> str:
        while True:
            if target_check():
                return "reached"
            col = next((j for j in range(allowed) if obj[j] < 0), None)
            if col is None:
                return "optimal"
            best = None
            for i in range(m):
                a = tab[i][col]
                if a > 0:
                    if best is None:
                        best = i
                    else:
                        # compare rhs_i / a with rhs_best / a_best
                        lhs = tab[i][-1] * tab[best][col]
                        rhs_ = tab[best][-1] * a
                        if lhs < rhs_ or (lhs == rhs_ and basis[i] < basis[best]):
                            best = i
            if best is None:
                return "unbounded"
            pivot(best, col)

    run(ncol, lambda: False)
    # phase-1 optimum is -obj[-1] / obj_den
    if obj[-1] != 0:
        return "infeasible", None
    # drive remaining artificials out of the basis
    for i in range(m):
        if basis[i] >= n:
            col = next((j for j in range(n) if tab[i][j] != 0), None)
            if col is not None:
                if tab[i][col] < 0:
                    tab[i] = [-v for v in tab[i]]
                pivot(i, col)
    keep = [i for i in range(m) if basis[i] < n]
    tab[:] = [tab[i] for i in keep]
    basis[:] = [basis[i] for i in keep]
    m = len(tab)

    cost = _int_row(list(c))
    c_den = lcm(*(v.denominator for v in c)) if c else 1
    obj = cost + [0] * m + [0]
    obj_den = 1
    for i in range(m):
        b = basis[i]
        if obj[b]:
            f = tab[i][b]
            a = obj[b]
            obj = [o * f - a * v for o, v in zip(obj, tab[i])]
            obj_den *= f
    # objective value z = -obj[-1] / (obj_den * c_den)

    def value() -> Fraction:
        return Fraction(-obj[-1], obj_den * c_den)

    check = (lambda: value() <= stop_at) if stop_at is not None else (lambda: False)
    status = run(n, check)
    return status, (value() if status != "unbounded" else None)


def _integral(r: Relation) -> tuple[dict[str, int], int]:
    den = lcm(r.const.denominator, *(v.denominator for _, v in r.coeffs))
    return {s: int(v * den) for s, v in r.coeffs}, int(r.const * den)


def _implied(others: Sequence[Relation], target: Relation, symbols: Sequence[str]) -> bool:
    """Is ``target`` (a ``<=`` row) implied by ``others`` (``<=``/``=`` rows)?

    Farkas: implied iff lambda >= 0 exists with sum lambda_i a_i = a_t and
    sum lambda_i b_i <= b_t, or the other rows are infeasible.
    """
    cols: list[tuple[dict, int]] = []
    for r in others:
        cm, b = _integral(r)
        cols.append((cm, b))
        if r.rel == "=":
            cols.append(({s: -v for s, v in cm.items()}, -b))
    # scaling the target by a positive integer keeps the question unchanged
    tm, tb = _integral(target)
    pos = {s: i for i, s in enumerate(symbols)}
    used = sorted(set(tm).union(*(cm.keys() for cm, _ in cols)), key=lambda s: pos.get(s, -1))
    m_rows = [[cm.get(s, 0) for cm, _ in cols] for s in used]
    q = [tm.get(s, 0) for s in used]
    c = [b for _, b in cols]
    status, _ = exact_lp(m_rows, q, c, stop_at=Fraction(tb))
    return status in ("reached", "unbounded")


def is_feasible(system: LinearInequalitySystem, fixed: Mapping[str, object] | None = None) -> bool:
    """Exact feasibility of the system with some symbols fixed to given values."""
    fixed = {s: _frac(v) for s, v in (fixed or {}).items()}
    rows = []
    for r in system.relations:
        cm = r.coeff_map
        const = r.const - sum((v * fixed[s] for s, v in cm.items() if s in fixed), Fraction(0))
        cm = {s: v for s, v in cm.items() if s not in fixed}
        rel = r.rel
        if rel == ">=":
            cm = {s: -v for s, v in cm.items()}
            const = -const
            rel = "<="
        rows.append(Relation(tuple(sorted(cm.items())), rel, const))
    free = [s for s in system.symbols if s not in fixed]
    # infeasible iff 0 <= -1 is implied
    return not _implied(rows, Relation((), "<=", Fraction(-1)), free or ["_"])


# ---------------------------------------------------------------------------
# elimination

def _substitute(rows: list[Relation], eq: Relation, victim: str) -> list[Relation]:
    em = eq.coeff_map
    a = em[victim]
    out = []
    for r in rows:
        cm = r.coeff_map
        if victim not in cm:
            out.append(r)
            continue
        f = cm[victim] / a
        new = dict(cm)
        for s, v in em.items():
            new[s] = new.get(s, Fraction(0)) - f * v
        out.append(Relation.make(new, r.rel, r.const - f * eq.const))
    return out


def _combine(p: Relation, n: Relation, victim: str) -> Relation:
    pm, nm = p.coeff_map, n.coeff_map
    a, b = pm[victim], -nm[victim]
    new: dict[str, Fraction] = {}
    for s, v in pm.items():
        new[s] = new.get(s, Fraction(0)) + b * v
    for s, v in nm.items():
        new[s] = new.get(s, Fraction(0)) + a * v
    new.pop(victim, None)
    return Relation.make(new, "<=", b * p.const + a * n.const)


def eliminate(system: LinearInequalitySystem, victims: Sequence[str],
              remove_redundant: bool = True, max_rows: int = MAX_ROWS) -> EliminationReport:
    """Project ``system`` onto the symbols not in ``victims``.

    The result is normalized.  With ``remove_redundant`` every row implied
    by the remaining ones is dropped (exact LP), leaving an irredundant
    description; ``dropped_redundant`` counts rows removed by that pass and
    by Chernikov's rule.
    """
    if not system.relations:
        raise FMEError("cannot eliminate from an empty system")
    unknown = [v for v in victims if v not in system.symbols]
    if unknown:
        raise FMEError(f"unknown symbol(s) to eliminate: {', '.join(unknown)}")
    victims = list(dict.fromkeys(victims))
    order = {s: i for i, s in enumerate(system.symbols)}
    kept_symbols = tuple(s for s in system.symbols if s not in set(victims))

    rows = []
    for r in system.relations:
        if r.rel == ">=":
            r = Relation(tuple((s, -v) for s, v in r.coeffs), "<=", -r.const)
        rows.append(r)

    remaining = []
    for v in victims:
        eqs = [r for r in rows if r.rel == "=" and v in r.coeff_map]
        if not eqs:
            remaining.append(v)
            continue
        # prefer a unit coefficient to keep numbers small
        eqs.sort(key=lambda r: (abs(r.coeff_map[v]) != 1, len(r.coeffs)))
        eq = eqs[0]
        rows = _substitute([r for r in rows if r is not eq], eq, v)

    ineqs = [r for r in rows if r.rel == "<="]
    eqs = [r for r in rows if r.rel == "="]
    # equalities still mentioning a victim cannot exist: each victim with an
    # equality was substituted away above
    cur = [(r, frozenset([i])) for i, r in enumerate(ineqs)]
    dropped = 0
    for k, v in enumerate(remaining, start=1):
        pos = [x for x in cur if x[0].coeff_map.get(v, 0) > 0]
        neg = [x for x in cur if x[0].coeff_map.get(v, 0) < 0]
        zero = [x for x in cur if v not in x[0].coeff_map]
        if len(zero) + len(pos) * len(neg) > max_rows:
            raise RowExplosionError(f"row explosion eliminating {v}: "
                           f"{len(zero) + len(pos) * len(neg)} rows exceed the {max_rows} guard")
        new = []
        for p in pos:
            for n in neg:
                h = p[1] | n[1]
                if len(h) > k + 1:
                    dropped += 1
                    continue
                new.append((_combine(p[0], n[0], v), h))
        # among new rows a history superset of another's is redundant
        new.sort(key=lambda x: len(x[1]))
        kept = []
        for x in new:
            if any(y[1] <= x[1] for y in kept):
                dropped += 1
                continue
            kept.append(x)
        merged: dict = {}
        for x in zero + kept:
            c = _canonical(x[0], order)
            if c is None:
                continue
            key = c.coeffs
            if key not in merged or c.const < merged[key][0].const or (
                    c.const == merged[key][0].const and len(x[1]) < len(merged[key][1])):
                merged[key] = (c, x[1])
        cur = list(merged.values())

    result = normalize(LinearInequalitySystem(kept_symbols,
                                              tuple(eqs) + tuple(r for r, _ in cur)))
    if remove_redundant:
        rows_ = list(result.relations)
        i = len(rows_) - 1
        while i >= 0:
            r = rows_[i]
            if r.rel == "<=" and r.coeffs and _implied(rows_[:i] + rows_[i + 1:], r, kept_symbols):
                rows_.pop(i)
                dropped += 1
            i -= 1
        result = LinearInequalitySystem(kept_symbols, tuple(rows_))
    return EliminationReport(tuple(victims), result, dropped)


def load_bundled(name: str) -> LinearInequalitySystem:
    """Load a system shipped in the package data directory (``split_rate_system``/``split_rate_projection``)."""
    path = Path(__file__).with_name("data") / f"{name}.json"
    return LinearInequalitySystem.from_json(path.read_text())
