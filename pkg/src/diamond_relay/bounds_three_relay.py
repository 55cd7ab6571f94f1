"""Lower and upper capacity bounds for the symmetric three-relay Gaussian diamond
network with conferencing.

The inputs share a common correlation ``rho`` and a common correlation
``rho_c`` with the auxiliary ``U``; all relays use power ``p``.  Given ``U``
the inputs have covariance ``a I + b 11^T`` with ``a = p (1 - rho)`` and
``b = p (rho - rho_c^2)``, which gives every term in closed form:

* ``Gamma(X_S | U)`` for ``|S| = m``:
  ``1/2 log2((a + b)^m / (a^(m-1) (a + m b)))``
* ``var(sum X_{S^c} | U, X_S)`` for ``|S^c| = r``: ``r a + r^2 b a / (a + m b)``
* ``I(X_{S^c}; Y | U, X_S) = 1/2 log2(1 + var(sum X_{S^c} | U, X_S))``

Capacities are a 3x3 matrix.  ``c[k][k]`` is the fronthaul of relay ``k`` and
``c[k][l]`` (``l != k``) the conferencing link that delivers to relay ``k``
from relay ``l``; row ``k`` therefore collects everything relay ``k`` can
receive.

The upper bound is evaluated with a single auxiliary ``U`` (the second
auxiliary of the general statement is taken constant) and ``V = Y + W``,
``W ~ N(0, N)``.  Both restrictions are legitimate for the inner choices
but make the computed number an approximation of the bound's max over
auxiliaries; it is validated through the sandwich with the lower bound.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .bounds_two_relay import BoundResult, SweepRow, _result, _run_points
from .gaussian_model import (PSD_TOL, ThreeRelaySymParams, assemble_sigma3, gaussian_mi,
                             gaussian_total_correlation)
from .optimize import GridSpec, box_grid, golden_min, golden_min_scalar, maximize_box

RELAYS = (0, 1, 2)
N_BRACKET = 1e6
N_TOL = 1e-9
DEGENERATE_TOL = 1e-12

ALL_SUBSETS = tuple(tuple(s) for m in range(4) for s in itertools.combinations(RELAYS, m))
PROPER_NONEMPTY = tuple(s for s in ALL_SUBSETS if 0 < len(s) < 3)
PROPER = tuple(s for s in ALL_SUBSETS if len(s) < 3)


def _name(s) -> str:
    return "{" + ",".join(str(k + 1) for k in s) + "}"


def _xs(s) -> list[str]:
    return [f"X{k + 1}" for k in s]


@dataclass(frozen=True)
class LinkCaps3:
    """3x3 nonnegative capacity matrix (row k: everything delivered to relay k)."""

    c: tuple[tuple[float, ...], ...]

    def __init__(self, c) -> None:
        m = np.array(c, dtype=float)
        if m.shape != (3, 3):
            raise ValueError(f"capacity matrix must be 3x3, got shape {m.shape}")
        if not np.all(np.isfinite(m)) or np.any(m < 0):
            raise ValueError("capacities must be finite and nonnegative")
        object.__setattr__(self, "c", tuple(tuple(float(v) for v in row) for row in m))

    @classmethod
    def symmetric(cls, fronthaul: float, conference: float) -> "LinkCaps3":
        return cls([[fronthaul if i == j else conference for j in RELAYS] for i in RELAYS])

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.c)

    def fronthaul(self, s) -> float:
        return sum(self.c[k][k] for k in s)

    def row_sum(self, s) -> float:
        """sum_{k in S, w in [3]} C_kw."""
        return sum(self.c[k][w] for k in s for w in RELAYS)

    def into(self, sc) -> float:
        """sum_{w in [3], w' in S^c, w' != w} C_{w w'} (conferencing terms of the upper bound)."""
        return sum(self.c[w][v] for w in RELAYS for v in sc if v != w)

    def total(self) -> float:
        return float(np.sum(self.matrix))


@dataclass(frozen=True)
class SubsetTermReport:
    """Every term attached to one subset S of the relays, with labels."""

    subset: tuple[int, ...]
    labels: tuple[str, ...]
    term_values: tuple[float, ...]


# ---------------------------------------------------------------------------
# closed forms on arrays of (rho, rho_c)

def _ab(r, rc, p):
    return p * (1.0 - r), p * (r - rc**2)


def feasible3(r, rc):
    return (1.0 + 2.0 * r - 3.0 * rc**2 >= -PSD_TOL) & (r <= 1.0)


def gamma_sym(r, rc, p, m):
    """Gamma(X_S | U) for |S| = m (inf where X_S given U is linearly dependent)."""
    a, b = _ab(r, rc, p)
    if m <= 1:
        return np.zeros(np.shape(a + b))
    var = a + b
    det = np.maximum(a, 0.0) ** (m - 1) * np.maximum(a + m * b, 0.0)
    scale = max(p, 1.0) ** m * DEGENERATE_TOL
    with np.errstate(divide="ignore", invalid="ignore"):
        g = 0.5 * np.log2(var**m / det)
    g = np.where(det > scale, g, np.inf)
    return np.where(var > DEGENERATE_TOL * max(p, 1.0), np.maximum(g, 0.0), 0.0)


def cond_sum_var(r, rc, p, m):
    """var(sum X_{S^c} | U, X_S) for |S| = m."""
    a, b = _ab(r, rc, p)
    k = 3 - m
    if m == 0:
        return k * a + k * k * b
    den = a + m * b
    safe = np.where(den > DEGENERATE_TOL, den, 1.0)
    v = np.where(den > DEGENERATE_TOL, k * a + k * k * b * a / safe, 0.0)
    return np.maximum(v, 0.0)


def _hl(x):
    with np.errstate(divide="ignore", invalid="ignore"):
        return 0.5 * np.log2(x)


@dataclass(frozen=True)
class _Info3:
    feasible: np.ndarray
    gamma: dict          # m -> Gamma(X_S|U)
    i_cond: dict         # m -> I(X_Sc;Y|U,X_S)
    i_mac: np.ndarray    # I(X[3];Y)
    i_mac_u: np.ndarray  # I(X[3];Y|U)
    s_all: np.ndarray    # var(sum X | U)
    v_pair: np.ndarray   # var(X_k + X_l | U, X_j)


def _info3(r, rc, p) -> _Info3:
    feasible = feasible3(r, rc)
    gamma = {m: gamma_sym(r, rc, p, m) for m in (1, 2, 3)}
    i_cond = {m: _hl(1.0 + cond_sum_var(r, rc, p, m)) for m in (0, 1, 2)}
    return _Info3(feasible, gamma, i_cond, _hl(1.0 + 3.0 * p + 6.0 * r * p), i_cond[0],
                  cond_sum_var(r, rc, p, 0), cond_sum_var(r, rc, p, 1))


def _lb3_terms(info: _Info3, caps: LinkCaps3):
    terms, labels = [], []
    terms.append(caps.fronthaul(RELAYS) - info.gamma[3])
    labels.append("sum C_ww - Gamma(X[3]|U)")
    for s in PROPER_NONEMPTY:
        m = len(s)
        terms.append(caps.row_sum(s) + info.i_cond[m] - info.gamma[m])
        labels.append(f"S={_name(s)}: sum_(k in S) C_k. + I(X_Sc;Y|U,X_S) - Gamma(X_S|U)")
    terms.append(info.i_mac)
    labels.append("I(X[3];Y)")
    for s in PROPER_NONEMPTY:
        if len(s) != 2:
            continue
        terms.append(0.5 * (caps.row_sum(s) + info.i_cond[2] + info.i_mac_u - info.gamma[2]))
        labels.append(f"S={_name(s)}: 1/2[sum_(k in S) C_k. + I(X_Sc;Y|U,X_S) + I(X[3];Y|U)"
                      " - Gamma(X_S|U)]")
    terms.append((caps.total() + 2.0 * info.i_mac_u - info.gamma[3]) / 3.0)
    labels.append("1/3[sum C + 2 I(X[3];Y|U) - Gamma(X[3]|U)]")
    return terms, tuple(labels)


def v_line(info_s_all, info_v_pair, n, fronthaul):
    """sum C_ww - 2 I(X[3];V|U) + sum_k I(X_[3]\\k;V|U,X_k) at V-noise variance n."""
    with np.errstate(divide="ignore", invalid="ignore"):
        return (fronthaul - np.log2(1.0 + n + info_s_all) + 1.5 * np.log2(1.0 + n + info_v_pair)
                - 0.5 * np.log2(1.0 + n))


def _v_line_min(info: _Info3, fronthaul: float):
    s = np.atleast_1d(info.s_all).astype(float)
    v = np.atleast_1d(info.v_pair).astype(float)
    if s.size == 1:
        s0, v0 = float(s[0]), float(v[0])
        log2 = math.log2

        def g(n):
            return fronthaul - log2(1.0 + n + s0) + 1.5 * log2(1.0 + n + v0) - 0.5 * log2(1.0 + n)

        n, val = golden_min_scalar(lambda n: v_line(s0, v0, n, fronthaul), g, 0.0, N_BRACKET,
                                   tol=N_TOL)
        return np.array([val]), np.array([n])
    n, val = golden_min(lambda n: v_line(s[:, None], v[:, None], n, fronthaul), 0.0, N_BRACKET,
                        s.size, tol=N_TOL)
    return val, n


def _ub3_terms(info: _Info3, caps: LinkCaps3, v_min):
    terms, labels = [], []
    terms.append(np.full(np.shape(info.i_mac), caps.fronthaul(RELAYS)))
    labels.append("S={1,2,3}: sum_(w in S) C_ww")
    for s in PROPER:
        sc = tuple(k for k in RELAYS if k not in s)
        terms.append(caps.fronthaul(s) + caps.into(sc) + info.i_cond[len(s)])
        labels.append(f"S={_name(s)}: sum_(w in S) C_ww + conferencing into S^c"
                      " + I(X_Sc;Y|U,X_S)")
    terms.append(info.i_mac)
    labels.append("I(X[3];Y)")
    terms.append(v_min)
    labels.append("sum C_ww - 2I(X[3];V|U) + sum_k I(X_[3]\\k;V|U,X_k)")
    return terms, tuple(labels)


# ---------------------------------------------------------------------------
# log-det evaluation at a fixed parameter point

def _gamma_ld(cov, s) -> float:
    return gaussian_total_correlation(cov, _xs(s), "U")


def lower_bound3_report(params: ThreeRelaySymParams, caps: LinkCaps3) -> list[SubsetTermReport]:
    """Lower-bound terms grouped by subset, each evaluated by log-det.

    Terms indexed by a proper subset sit under that subset; the terms that
    involve all three inputs sit under S = {1,2,3}, and I(X[3];Y) under the
    empty set.
    """
    cov = assemble_sigma3(params)
    out = []
    i_mac_u = gaussian_mi(cov, _xs(RELAYS), "Y", "U")
    for s in ALL_SUBSETS:
        sc = tuple(k for k in RELAYS if k not in s)
        labels, vals = [], []
        if not s:
            labels.append("I(X[3];Y)")
            vals.append(gaussian_mi(cov, _xs(RELAYS), "Y"))
        elif len(s) == 3:
            g3 = _gamma_ld(cov, s)
            labels += ["sum C_ww - Gamma(X[3]|U)", "1/3[sum C + 2 I(X[3];Y|U) - Gamma(X[3]|U)]"]
            vals += [caps.fronthaul(s) - g3, (caps.total() + 2.0 * i_mac_u - g3) / 3.0]
        else:
            g = _gamma_ld(cov, s)
            i_sc = gaussian_mi(cov, _xs(sc), "Y", ["U"] + _xs(s))
            labels.append("sum_(k in S) C_k. + I(X_Sc;Y|U,X_S) - Gamma(X_S|U)")
            vals.append(caps.row_sum(s) + i_sc - g)
            if len(s) == 2:
                labels.append("1/2[sum_(k in S) C_k. + I(X_Sc;Y|U,X_S) + I(X[3];Y|U)"
                              " - Gamma(X_S|U)]")
                vals.append(0.5 * (caps.row_sum(s) + i_sc + i_mac_u - g))
        out.append(SubsetTermReport(s, tuple(labels), tuple(float(v) for v in vals)))
    return out


def lower_bound3(params: ThreeRelaySymParams, caps: LinkCaps3) -> BoundResult:
    """Achievable rate at fixed (rho, rho_c): min over all subset terms, clamped at 0."""
    terms, labels = [], []
    for rep in lower_bound3_report(params, caps):
        for lab, v in zip(rep.labels, rep.term_values):
            terms.append(v)
            labels.append(f"S={_name(rep.subset)}: {lab}")
    return _result(terms, labels, (params.rho, params.rho_c))


def upper_bound3_report(params: ThreeRelaySymParams, caps: LinkCaps3) -> list[SubsetTermReport]:
    """Upper-bound terms at fixed (rho, rho_c, N) grouped by subset, by log-det.

    S = {1,2,3} carries the pure fronthaul term and the V term; every proper
    S carries its conferencing term, and the empty set also I(X[3];Y).
    """
    cov = assemble_sigma3(params)
    out = []
    for s in ALL_SUBSETS:
        sc = tuple(k for k in RELAYS if k not in s)
        labels, vals = [], []
        if len(s) == 3:
            i_v = gaussian_mi(cov, _xs(RELAYS), "V", "U")
            pairs = sum(gaussian_mi(cov, _xs(tuple(j for j in RELAYS if j != k)), "V",
                                    ["U", f"X{k + 1}"]) for k in RELAYS)
            labels += ["sum_(w in S) C_ww", "sum C_ww - 2I(X[3];V|U) + sum_k I(X_[3]\\k;V|U,X_k)"]
            vals += [caps.fronthaul(s), caps.fronthaul(s) - 2.0 * i_v + pairs]
        else:
            labels.append("sum_(w in S) C_ww + conferencing into S^c + I(X_Sc;Y|U,X_S)")
            cond = ["U"] + _xs(s)
            vals.append(caps.fronthaul(s) + caps.into(sc) + gaussian_mi(cov, _xs(sc), "Y", cond))
            if not s:
                labels.append("I(X[3];Y)")
                vals.append(gaussian_mi(cov, _xs(RELAYS), "Y"))
        out.append(SubsetTermReport(s, tuple(labels), tuple(float(v) for v in vals)))
    return out


def cut_set3(caps: LinkCaps3, p: float = 1.0) -> float:
    """Cut-set bound: min over relay sets S cut from the source.

    For each S the cut crosses the fronthaul of S, the conferencing links
    from S^c into S, and the channel from the relays in S^c (coherent).
    """
    best = math.inf
    for s in ALL_SUBSETS:
        sc = [k for k in RELAYS if k not in s]
        val = (caps.fronthaul(s) + sum(caps.c[w][v] for w in s for v in sc)
               + 0.5 * math.log2(1.0 + len(sc) ** 2 * p))
        best = min(best, val)
    return best


# ---------------------------------------------------------------------------
# optimized bounds over (rho, rho_c) in [0, 1]^2

@lru_cache(maxsize=16)
def _grid3(p: float, resolution: int):
    x = box_grid(2, resolution)
    keep = feasible3(x[:, 0], x[:, 1])
    x = x[keep]
    return x, _info3(x[:, 0], x[:, 1], p)


def _masked(terms, feasible):
    return np.where(feasible, np.min(np.stack(np.broadcast_arrays(*terms)), axis=0), -np.inf)


def _scalar_terms(terms):
    return [float(np.asarray(t).ravel()[0]) for t in terms]


def optimize_lower_bound3(caps: LinkCaps3, search: GridSpec = GridSpec(), p: float = 1.0) -> BoundResult:
    grid, info = _grid3(p, search.resolution)
    gvals = _masked(_lb3_terms(info, caps)[0], info.feasible)

    def f(x):
        inf = _info3(x[:, 0], x[:, 1], p)
        return _masked(_lb3_terms(inf, caps)[0], inf.feasible)

    best = maximize_box(f, 2, search, grid, gvals)
    inf = _info3(best.x[None, 0], best.x[None, 1], p)
    terms, labels = _lb3_terms(inf, caps)
    return _result(_scalar_terms(terms), labels, tuple(float(v) for v in best.x))


def upper_bound3(caps: LinkCaps3, search: GridSpec = GridSpec(), p: float = 1.0) -> BoundResult:
    """max over (rho, rho_c) of the min over subset terms, with the V term minimized over N."""
    grid, info = _grid3(p, search.resolution)
    fh = caps.fronthaul(RELAYS)
    vmin, _ = _v_line_min(info, fh)
    gvals = _masked(_ub3_terms(info, caps, vmin)[0], info.feasible)

    def f(x):
        inf = _info3(x[:, 0], x[:, 1], p)
        vm, _ = _v_line_min(inf, fh)
        return _masked(_ub3_terms(inf, caps, vm)[0], inf.feasible)

    best = maximize_box(f, 2, search, grid, gvals)
    inf = _info3(best.x[None, 0], best.x[None, 1], p)
    vm, n = _v_line_min(inf, fh)
    terms, labels = _ub3_terms(inf, caps, vm)
    return _result(_scalar_terms(terms), labels, tuple(float(v) for v in best.x), float(n[0]))


def sweep3_point(c: float, c0: float, p: float = 1.0, search: GridSpec = GridSpec()) -> SweepRow:
    caps = LinkCaps3.symmetric(c, c0)
    lo = optimize_lower_bound3(caps, search, p)
    up = upper_bound3(caps, search, p)
    return SweepRow(c0, c, lo.value_bits, up.value_bits, cut_set3(caps, p),
                    lo.binding_label, up.binding_label)


def sweep3(c_values: Sequence[float], c0_values: Sequence[float], p: float = 1.0,
           search: GridSpec = GridSpec(), workers: int = 1) -> list[SweepRow]:
    """Bounds for symmetric caps (diagonal C, off-diagonal C0), rows sorted by (C0, C)."""
    if not c_values or not c0_values:
        raise ValueError("sweep needs nonempty C and C0 lists")
    keys = sorted((float(c0), float(c)) for c0 in c0_values for c in c_values)
    return _run_points(lambda k: sweep3_point(k[1], k[0], p, search), keys, workers)

