"""Lower and upper capacity bounds for the Gaussian diamond network with two
conferencing relays.

Notation follows the usual parameterization of the input covariance: ``rho``
is the X1-X2 correlation, ``rho1``/``rho2`` the correlations of X1/X2 with the
auxiliary ``U``, ``p1``/``p2`` the relay powers and ``N`` the variance of the
extra noise in ``V = Y + W``.  With ``D = 1 - rho^2 - rho1^2 - rho2^2 +
2 rho rho1 rho2`` (determinant of the correlation matrix of U, X1, X2)::

    var(X2 | U, X1) = D P2 / (1 - rho1^2)
    varphi          = 1 + var(X1 + X2 | U)
    phi_k           = (1 - rho_k^2)(1 + N) + D P_other

All rates are in bits per channel use.  Closed forms are vectorized so that
the optimizers can evaluate a whole correlation grid in one call; every
closed form has a log-det counterpart built on :mod:`gaussian_model` and the
two are cross-checked in the test-suite.

The sixth term of the first upper bound is evaluated as
``1/2 [C11 + C22 + C12 + C21 + 1/2 log2(varphi phi1 phi2 /
((1 - rho1^2)(1 - rho2^2)(1 + N)(varphi + N)))]``, which is the exact
Gaussian value of ``1/2 [sum C + I(X1;V|U,X2) + I(X1,X2;Y|U,V) +
I(X2;V|U,X1)]``.  The form carrying an extra factor ``N / (1 + N)`` inside
the logarithm is available as ``term6="printed"`` for comparison only; it is
not a valid bound (it tends to ``-inf`` as ``N -> 0``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .gaussian_model import (PSD_TOL, ParameterDomainError, TwoRelayParams, assemble_sigma2,
                             gaussian_mi, two_relay_corr_det)
from .optimize import GridSpec, box_grid, golden_min, golden_min_scalar, maximize_box

NSTAR_BRACKET = 1e6
UB2_N_BRACKET = 1e3
NSTAR_TOL = 1e-9
# 1 - rho_k^2 below this counts as "X_k is a function of U"
DEGENERATE_TOL = 1e-12

PHI_VARIANTS = ("sq", "linear")
TERM6_VARIANTS = ("corrected", "printed")

UB_LABELS = (
    "C11+C22",
    "C11+C12+I(X2;Y|U,X1)",
    "C22+C21+I(X1;Y|U,X2)",
    "I(X1,X2;Y)",
    "C12+C21+I(X1,X2;Y|U)",
    "1/2[sum C+I(X1;V|U,X2)+I(X1,X2;Y|U,V)+I(X2;V|U,X1)]",
)
UB2_LAST_LABEL = "C11+C22-I(X1,X2;V|U)+I(X1;V|U,X2)+I(X2;V|U,X1) (EPI form)"
LB_LABELS = (
    "C11+C22-I(X1;X2|U)",
    "C11+C12+I(X2;Y|U,X1)",
    "C22+C21+I(X1;Y|U,X2)",
    "I(X1,X2;Y)",
    "1/2[sum C+I(X1,X2;Y|U)-I(X1;X2|U)]",
)
CUT_LABELS = ("C11+C22", "C11+C12+I(X2;Y)", "C22+C21+I(X1;Y)", "coherent MAC")


@dataclass(frozen=True)
class LinkCaps2:
    """Fronthaul (c11, c22) and conferencing capacities.

    ``c_kl`` is the link delivering to relay k from relay l: ``c12`` carries
    relay 2 -> relay 1 and ``c21`` carries relay 1 -> relay 2.
    """

    c11: float
    c22: float
    c12: float = 0.0
    c21: float = 0.0

    def __post_init__(self):
        for name in ("c11", "c22", "c12", "c21"):
            v = getattr(self, name)
            if not (v >= 0.0 and math.isfinite(v)):
                raise ValueError(f"capacity {name}={v} must be finite and nonnegative")

    @classmethod
    def from_seq(cls, values: Sequence[float]) -> "LinkCaps2":
        if len(values) != 4:
            raise ValueError(f"expected 4 capacities c11,c22,c12,c21, got {len(values)}")
        return cls(*(float(v) for v in values))

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.c11, self.c22, self.c12, self.c21)


@dataclass(frozen=True)
class BoundResult:
    """A bound value with the active constraint and the optimizing parameters.

    ``terms`` holds every min-term at the reported parameters, in the listed
    order; ``value_bits`` is their minimum clamped at zero, so it equals
    ``terms[binding_index]`` unless ``clamped`` is set.
    """

    value_bits: float
    binding_index: int
    binding_label: str
    argmax_params: tuple[float, ...] | None = None
    argmin_n: float | None = None
    terms: tuple[float, ...] = field(default=())
    labels: tuple[str, ...] = field(default=())

    @property
    def clamped(self) -> bool:
        return bool(self.terms) and self.terms[self.binding_index] < 0.0


def _result(terms, labels, params=None, n=None) -> BoundResult:
    terms = tuple(float(t) for t in terms)
    i = int(np.argmin(terms))
    return BoundResult(max(terms[i], 0.0), i, labels[i], params, n, terms, tuple(labels))


# ---------------------------------------------------------------------------
# vectorized closed forms

def _half_log2(x):
    with np.errstate(divide="ignore", invalid="ignore"):
        return 0.5 * np.log2(x)


def _det(r, r1, r2):
    d = two_relay_corr_det(r, r1, r2)
    return np.where(d < 0.0, np.where(d >= -PSD_TOL, 0.0, d), d)


def _cond_var_other(r, r1, r2, k, p_other):
    """var(X_other | U, X_k); equals var(X_other | U) when X_k is a function of U."""
    rk, ro = (r1, r2) if k == 1 else (r2, r1)
    d = _det(r, r1, r2)
    denom = 1.0 - rk**2
    safe = np.where(denom > DEGENERATE_TOL, denom, 1.0)
    return np.where(denom > DEGENERATE_TOL, d * p_other / safe, (1.0 - ro**2) * p_other)


def varphi_arr(r, r1, r2, p1, p2):
    return (1.0 + (1.0 - r1**2) * p1 + (1.0 - r2**2) * p2
            + 2.0 * (r - r1 * r2) * math.sqrt(p1 * p2))


def phi_k_arr(r, r1, r2, k, p_other, n, variant="sq"):
    rk = r1 if k == 1 else r2
    lead = (1.0 - rk**2) if variant == "sq" else (1.0 - rk) ** 2
    return lead * (1.0 + n) + two_relay_corr_det(r, r1, r2) * p_other


def i_x1x2_given_u(r, r1, r2):
    """I(X1;X2|U) = 1/2 log2((1-rho1^2)(1-rho2^2)/D); 0 if either input is a function of U."""
    # arrays, not Python floats, so a zero denominator gives inf instead of raising
    r, r1, r2 = (np.asarray(x, dtype=float) for x in (r, r1, r2))
    s = (1.0 - r1**2) * (1.0 - r2**2)
    d = _det(r, r1, r2)
    with np.errstate(divide="ignore", invalid="ignore"):
        v = np.where(s > DEGENERATE_TOL, _half_log2(s / d), 0.0)
    return np.maximum(v, 0.0)


def i_x1x2_given_uv(r, r1, r2, p1, p2, n):
    """I(X1;X2|U,V) with V = X1 + X2 + Z + W, var(W) = n, via the partial correlation."""
    r, r1, r2, n = (np.asarray(x, dtype=float) for x in (r, r1, r2, n))
    a = (r - r1 * r2) * math.sqrt(p1 * p2)
    s1 = (1.0 - r1**2) * p1
    s2 = (1.0 - r2**2) * p2
    tot = varphi_arr(r, r1, r2, p1, p2) + n
    pc = a - (s1 + a) * (s2 + a) / tot
    v1 = s1 - (s1 + a) ** 2 / tot
    v2 = s2 - (s2 + a) ** 2 / tot
    prod = v1 * v2
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(prod > DEGENERATE_TOL * max(p1, p2) ** 2, pc**2 / prod, 0.0)
        v = -_half_log2(1.0 - np.clip(ratio, 0.0, 1.0))
    return np.maximum(v, 0.0)


def nullifying_n(r, r1, r2, p1, p2):
    """The N solving I(X1;X2|U,V_N) = 0, or nan where no such N exists."""
    r, r1, r2 = (np.asarray(x, dtype=float) for x in (r, r1, r2))
    a = (r - r1 * r2) * math.sqrt(p1 * p2)
    s1 = (1.0 - r1**2) * p1
    s2 = (1.0 - r2**2) * p2
    with np.errstate(divide="ignore", invalid="ignore"):
        n0 = (s1 + a) * (s2 + a) / a - varphi_arr(r, r1, r2, p1, p2)
    return np.where(np.abs(a) > 0.0, n0, np.nan)


def _nstar_arr(r, r1, r2, p1, p2, use_nullifier=True):
    r, r1, r2 = np.broadcast_arrays(*(np.atleast_1d(np.asarray(x, float)) for x in (r, r1, r2)))
    r, r1, r2 = r.ravel(), r1.ravel(), r2.ravel()
    out = np.zeros(r.shape)
    need = np.ones(r.shape, bool)
    if use_nullifier:
        n0 = nullifying_n(r, r1, r2, p1, p2)
        ok = np.isfinite(n0) & (n0 >= 0.0) & (n0 <= NSTAR_BRACKET)
        out[ok] = n0[ok]
        need = ~ok
    idx = np.flatnonzero(need)
    if idx.size == 1:
        a, b, c = float(r[idx[0]]), float(r1[idx[0]]), float(r2[idx[0]])
        out[idx[0]], _ = golden_min_scalar(
            lambda n: i_x1x2_given_uv(a, b, c, p1, p2, n),
            lambda n: float(i_x1x2_given_uv(a, b, c, p1, p2, n)), 0.0, NSTAR_BRACKET, tol=NSTAR_TOL)
    elif idx.size:
        rr, q1, q2 = r[idx, None], r1[idx, None], r2[idx, None]
        x, _ = golden_min(lambda n: i_x1x2_given_uv(rr, q1, q2, p1, p2, n),
                          0.0, NSTAR_BRACKET, idx.size, tol=NSTAR_TOL)
        out[idx] = x
    return out


def term6_info(r, r1, r2, p1, p2, n, phi_variant="sq", term6="corrected"):
    """The information part of term six: the argument of the outer 1/2 minus sum C."""
    vp = varphi_arr(r, r1, r2, p1, p2)
    if phi_variant == "sq":
        g1 = 1.0 + n + _cond_var_other(r, r1, r2, 1, p2)
        g2 = 1.0 + n + _cond_var_other(r, r1, r2, 2, p1)
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            g1 = phi_k_arr(r, r1, r2, 1, p2, n, phi_variant) / (1.0 - r1**2)
            g2 = phi_k_arr(r, r1, r2, 2, p1, n, phi_variant) / (1.0 - r2**2)
    x = vp * g1 * g2 / ((1.0 + n) * (vp + n))
    if term6 == "printed":
        x = x * n / (1.0 + n)
    return _half_log2(x)


def ub2_last_term_arr(r, r1, r2, p1, p2, n, caps: LinkCaps2, phi_variant="sq"):
    """Largest R meeting the last constraint of the second upper bound.

    With xi = 2^{2R} the constraint reads xi^2 + B N xi <= A X / (1 + N),
    A = 2^{2(C11+C22+C12+C21)}, B = 2^{2(C12+C21)}, X = phi1 phi2 /
    ((1-rho1^2)(1-rho2^2)).  The positive root is evaluated in log2 scale
    in the cancellation-free form xi = q / (B N / 2 + sqrt((B N / 2)^2 + q)).
    """
    if phi_variant == "sq":
        lx = (np.log2(1.0 + n + _cond_var_other(r, r1, r2, 1, p2))
              + np.log2(1.0 + n + _cond_var_other(r, r1, r2, 2, p1)))
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            lx = (np.log2(phi_k_arr(r, r1, r2, 1, p2, n, phi_variant) / (1.0 - r1**2))
                  + np.log2(phi_k_arr(r, r1, r2, 2, p1, n, phi_variant) / (1.0 - r2**2)))
    conf = caps.c12 + caps.c21
    lq = 2.0 * (caps.c11 + caps.c22 + conf) + lx - np.log2(1.0 + n)
    with np.errstate(divide="ignore"):
        lh = 2.0 * conf + np.log2(n) - 1.0  # log2(B N / 2)
    m = np.maximum(lh, 0.5 * lq)
    eh = np.exp2(lh - m)
    lxi = lq - m - np.log2(eh + np.sqrt(eh**2 + np.exp2(lq - 2.0 * m)))
    return 0.5 * lxi


def ub2_implicit_residual(rate, r, r1, r2, p1, p2, n, caps: LinkCaps2):
    """RHS minus LHS of the last constraint written as an inequality in R (decreasing in R)."""
    lx = (np.log2(1.0 + n + _cond_var_other(r, r1, r2, 1, p2))
          + np.log2(1.0 + n + _cond_var_other(r, r1, r2, 2, p1)))
    return (caps.c11 + caps.c22 - 0.5 * np.log2(np.exp2(2.0 * (rate - caps.c12 - caps.c21)) + n)
            - 0.5 * np.log2(1.0 + n) + 0.5 * lx - rate)


@dataclass(frozen=True)
class _InfoTerms:
    """Cap-independent information quantities at a batch of correlation points."""

    feasible: np.ndarray
    i_x2y: np.ndarray     # I(X2;Y|U,X1)
    i_x1y: np.ndarray     # I(X1;Y|U,X2)
    i_mac: np.ndarray     # I(X1,X2;Y)
    i_mac_u: np.ndarray   # I(X1,X2;Y|U)
    i_x1x2: np.ndarray    # I(X1;X2|U)


def _info_terms(r, r1, r2, p1, p2) -> _InfoTerms:
    feasible = two_relay_corr_det(r, r1, r2) >= -PSD_TOL
    return _InfoTerms(
        feasible,
        _half_log2(1.0 + _cond_var_other(r, r1, r2, 1, p2)),
        _half_log2(1.0 + _cond_var_other(r, r1, r2, 2, p1)),
        _half_log2(1.0 + p1 + p2 + 2.0 * r * math.sqrt(p1 * p2)),
        _half_log2(varphi_arr(r, r1, r2, p1, p2)),
        i_x1x2_given_u(r, r1, r2),
    )


def _first_five(info: _InfoTerms, caps: LinkCaps2):
    c11, c22, c12, c21 = caps.as_tuple()
    return [np.full(info.i_mac.shape, c11 + c22), c11 + c12 + info.i_x2y,
            c22 + c21 + info.i_x1y, info.i_mac, c12 + c21 + info.i_mac_u]


def _lb_terms(info: _InfoTerms, caps: LinkCaps2):
    c11, c22, c12, c21 = caps.as_tuple()
    return [c11 + c22 - info.i_x1x2, c11 + c12 + info.i_x2y, c22 + c21 + info.i_x1y, info.i_mac,
            0.5 * (c11 + c22 + c12 + c21 + info.i_mac_u - info.i_x1x2)]


def _split(x: np.ndarray):
    return x[:, 0], x[:, 1], x[:, 2]


# ---------------------------------------------------------------------------
# public scalar API

def _check(params: TwoRelayParams) -> None:
    params.validate()


def phi_k(params: TwoRelayParams, k: int, p_other: float, variant: str = "sq") -> float:
    """(1 - rho_k^2)(1 + N) + D P_other (``variant="linear"`` uses (1 - rho_k)^2)."""
    _check(params)
    if k not in (1, 2):
        raise ValueError(f"k must be 1 or 2, got {k}")
    if variant not in PHI_VARIANTS:
        raise ValueError(f"phi variant must be one of {PHI_VARIANTS}")
    return float(phi_k_arr(params.rho, params.rho1, params.rho2, k, p_other, params.n_aux, variant))


def varphi(params: TwoRelayParams) -> float:
    """1 + (1-rho1^2) P1 + (1-rho2^2) P2 + 2 (rho - rho1 rho2) sqrt(P1 P2)."""
    _check(params)
    return float(varphi_arr(params.rho, params.rho1, params.rho2, params.p1, params.p2))


def lower_bound2_terms(params: TwoRelayParams, caps: LinkCaps2) -> tuple[float, ...]:
    """The five achievability terms, each evaluated by log-det on the assembled covariance."""
    cov = assemble_sigma2(params)
    c11, c22, c12, c21 = caps.as_tuple()
    i12 = gaussian_mi(cov, "X1", "X2", "U")
    return (
        c11 + c22 - i12,
        c11 + c12 + gaussian_mi(cov, "X2", "Y", ["U", "X1"]),
        c22 + c21 + gaussian_mi(cov, "X1", "Y", ["U", "X2"]),
        gaussian_mi(cov, ["X1", "X2"], "Y"),
        0.5 * (c11 + c22 + c12 + c21 + gaussian_mi(cov, ["X1", "X2"], "Y", "U") - i12),
    )


def lower_bound2(params: TwoRelayParams, caps: LinkCaps2) -> BoundResult:
    """Achievable rate at fixed correlations (min of the five terms, clamped at 0)."""
    return _result(lower_bound2_terms(params, caps), LB_LABELS,
                   (params.rho, params.rho1, params.rho2))


def upper_bound1_terms(params: TwoRelayParams, caps: LinkCaps2, phi_variant: str = "sq",
                       term6: str = "corrected") -> tuple[float, ...]:
    """All six right-hand sides of the first upper bound at fixed (rho, rho1, rho2, N)."""
    _check(params)
    if phi_variant not in PHI_VARIANTS:
        raise ValueError(f"phi variant must be one of {PHI_VARIANTS}")
    if term6 not in TERM6_VARIANTS:
        raise ValueError(f"term6 variant must be one of {TERM6_VARIANTS}")
    r, r1, r2, p1, p2 = params.rho, params.rho1, params.rho2, params.p1, params.p2
    info = _info_terms(np.array([r]), np.array([r1]), np.array([r2]), p1, p2)
    five = [float(t[0]) for t in _first_five(info, caps)]
    t6 = term6_info(r, r1, r2, p1, p2, params.n_aux, phi_variant, term6)
    six = 0.5 * (sum(caps.as_tuple()) + float(t6))
    return tuple(five + [six])


def nstar(params: TwoRelayParams) -> float:
    """argmin_{N >= 0} I(X1;X2|U,V_N) by scan plus golden-section on [0, 1e6].

    The N of ``params`` is ignored.  Where I(X1;X2|U) = 0 already the
    conditional information still decays towards zero with N, so the
    minimizer sits at the end of the bracket.
    """
    _check(params)
    return float(_nstar_arr(params.rho, params.rho1, params.rho2, params.p1, params.p2,
                            use_nullifier=False)[0])


def upper_bound2_last_term_closed_form(params: TwoRelayParams, caps: LinkCaps2,
                                       phi_variant: str = "sq") -> float:
    _check(params)
    return float(ub2_last_term_arr(params.rho, params.rho1, params.rho2, params.p1, params.p2,
                                   params.n_aux, caps, phi_variant))


def cut_set2(caps: LinkCaps2, p1: float = 1.0, p2: float = 1.0) -> float:
    """Classical cut-set bound with the correlation chosen per cut."""
    return float(min(cut_set2_terms(caps, p1, p2)))


def cut_set2_terms(caps: LinkCaps2, p1: float = 1.0, p2: float = 1.0) -> tuple[float, ...]:
    return (caps.c11 + caps.c22,
            caps.c11 + caps.c12 + 0.5 * math.log2(1.0 + p2),
            caps.c22 + caps.c21 + 0.5 * math.log2(1.0 + p1),
            0.5 * math.log2(1.0 + (math.sqrt(p1) + math.sqrt(p2)) ** 2))


# ---------------------------------------------------------------------------
# optimized bounds

@lru_cache(maxsize=16)
def _grid_cache(p1: float, p2: float, resolution: int, phi_variant: str):
    x = box_grid(3, resolution)
    r, r1, r2 = _split(x)
    info = _info_terms(r, r1, r2, p1, p2)
    keep = info.feasible
    x = x[keep]
    r, r1, r2 = _split(x)
    info = _info_terms(r, r1, r2, p1, p2)
    ns = _nstar_arr(r, r1, r2, p1, p2)
    t6 = term6_info(r, r1, r2, p1, p2, ns, phi_variant)
    return x, info, ns, t6


def _ub1_from(info, ns, t6, caps: LinkCaps2):
    terms = _first_five(info, caps)
    terms.append(np.where(ns > 0.0, 0.5 * (sum(caps.as_tuple()) + t6), np.inf))
    return terms


def _ub1_point_terms(x, p1, p2, caps, phi_variant):
    r, r1, r2 = _split(x)
    info = _info_terms(r, r1, r2, p1, p2)
    ns = _nstar_arr(r, r1, r2, p1, p2)
    t6 = term6_info(r, r1, r2, p1, p2, ns, phi_variant)
    return info, ns, _ub1_from(info, ns, t6, caps)


def _masked_min(terms, feasible):
    v = np.min(np.stack(terms), axis=0)
    return np.where(feasible, v, -np.inf)


def _finish(terms_at_best, labels, x, n=None) -> BoundResult:
    return _result([float(np.asarray(t).ravel()[0]) for t in terms_at_best], labels,
                   tuple(float(v) for v in x), n)


def upper_bound1(caps: LinkCaps2, search: GridSpec = GridSpec(), p1: float = 1.0,
                 p2: float = 1.0, phi_variant: str = "sq") -> BoundResult:
    """max over correlations of the first upper bound with N set to N*.

    When N* > 0 the sixth term is evaluated at N*; when N* = 0 it is dropped
    (V = Y) and the remaining five terms give the bound.
    """
    if phi_variant not in PHI_VARIANTS:
        raise ValueError(f"phi variant must be one of {PHI_VARIANTS}")
    grid, info, ns, t6 = _grid_cache(p1, p2, search.resolution, phi_variant)
    gvals = np.min(np.stack(_ub1_from(info, ns, t6, caps)), axis=0)

    def f(x):
        info_x, ns_x, terms = _ub1_point_terms(x, p1, p2, caps, phi_variant)
        return _masked_min(terms, info_x.feasible)

    best = maximize_box(f, 3, search, grid, gvals)
    info_b, ns_b, terms = _ub1_point_terms(best.x[None, :], p1, p2, caps, phi_variant)
    terms = [t if np.isfinite(t).all() else np.array([math.inf]) for t in terms]
    res = _finish(terms, UB_LABELS, best.x, float(ns_b[0]))
    if not math.isfinite(res.terms[5]):
        # term six inactive (N* = 0); report the five remaining terms only
        res = _finish(terms[:5], UB_LABELS[:5], best.x, 0.0)
    return res


def _ub2_last_scalar(r, r1, r2, p1, p2, caps, phi_variant):
    """Scalar closure of :func:`ub2_last_term_arr` for the single-point search path."""
    v21 = float(_cond_var_other(r, r1, r2, 1, p2))
    v12 = float(_cond_var_other(r, r1, r2, 2, p1))
    d = two_relay_corr_det(r, r1, r2)
    conf = caps.c12 + caps.c21
    base = 2.0 * (caps.c11 + caps.c22 + conf)
    log2 = math.log2

    def g(n):
        if phi_variant == "sq":
            lx = log2(1.0 + n + v21) + log2(1.0 + n + v12)
        else:
            lx = (log2(((1.0 - r1) ** 2 * (1.0 + n) + d * p2) / (1.0 - r1**2))
                  + log2(((1.0 - r2) ** 2 * (1.0 + n) + d * p1) / (1.0 - r2**2)))
        lq = base + lx - log2(1.0 + n)
        lh = 2.0 * conf + log2(n) - 1.0 if n > 0.0 else -math.inf
        m = max(lh, 0.5 * lq)
        eh = 2.0 ** (lh - m)
        return 0.5 * (lq - m - log2(eh + math.sqrt(eh * eh + 2.0 ** (lq - 2.0 * m))))

    return g


def _ub2_inner(r, r1, r2, p1, p2, caps, phi_variant, ns=None):
    """min over N in [0, 1e3] of the last term, multistart at 0 and N*; returns (value, N)."""
    r, r1, r2 = (np.asarray(v, float).ravel() for v in (r, r1, r2))
    k = r.size
    if k == 1 and ns is None:
        a, b, c = float(r[0]), float(r1[0]), float(r2[0])
        g1 = _ub2_last_scalar(a, b, c, p1, p2, caps, phi_variant)
        n_best, v_best = golden_min_scalar(
            lambda n: ub2_last_term_arr(a, b, c, p1, p2, n, caps, phi_variant), g1,
            0.0, UB2_N_BRACKET, tol=NSTAR_TOL)
        n_star = min(float(_nstar_arr(a, b, c, p1, p2)[0]), UB2_N_BRACKET)
        for cand in (0.0, n_star):
            v = g1(cand)
            if v < v_best:
                n_best, v_best = cand, v
        return np.array([v_best]), np.array([n_best])
    rr, q1, q2 = r[:, None], r1[:, None], r2[:, None]

    def g(n):
        return ub2_last_term_arr(rr, q1, q2, p1, p2, n, caps, phi_variant)

    n_best, v_best = golden_min(g, 0.0, UB2_N_BRACKET, k, tol=NSTAR_TOL)
    if ns is None:
        ns = _nstar_arr(r, r1, r2, p1, p2)
    cands = np.stack([np.zeros(k), np.minimum(ns, UB2_N_BRACKET)], axis=1)
    vc = g(cands)
    j = np.argmin(vc, axis=1)
    vj = vc[np.arange(k), j]
    better = vj < v_best
    return np.where(better, vj, v_best), np.where(better, cands[np.arange(k), j], n_best)


def upper_bound2(caps: LinkCaps2, search: GridSpec = GridSpec(), p1: float = 1.0,
                 p2: float = 1.0, phi_variant: str = "sq") -> BoundResult:
    """max over correlations of min{five shared terms, min_N last term}."""
    if phi_variant not in PHI_VARIANTS:
        raise ValueError(f"phi variant must be one of {PHI_VARIANTS}")
    grid, info, ns, _ = _grid_cache(p1, p2, search.resolution, phi_variant)
    r, r1, r2 = _split(grid)
    last, _ = _ub2_inner(r, r1, r2, p1, p2, caps, phi_variant, ns)
    gvals = np.min(np.stack(_first_five(info, caps) + [last]), axis=0)

    def terms_at(x):
        a, b, c = _split(x)
        inf = _info_terms(a, b, c, p1, p2)
        v, n = _ub2_inner(a, b, c, p1, p2, caps, phi_variant)
        return inf, _first_five(inf, caps) + [v], n

    def f(x):
        inf, terms, _ = terms_at(x)
        return _masked_min(terms, inf.feasible)

    best = maximize_box(f, 3, search, grid, gvals)
    _, terms, n = terms_at(best.x[None, :])
    return _finish(terms, UB_LABELS[:5] + (UB2_LAST_LABEL,), best.x, float(n[0]))


def optimize_lower_bound2(caps: LinkCaps2, search: GridSpec = GridSpec(), p1: float = 1.0,
                          p2: float = 1.0) -> BoundResult:
    """max over correlations of the five-term achievable rate."""
    grid, info, _, _ = _grid_cache(p1, p2, search.resolution, "sq")
    gvals = np.min(np.stack(_lb_terms(info, caps)), axis=0)

    def f(x):
        inf = _info_terms(*_split(x), p1, p2)
        return _masked_min(_lb_terms(inf, caps), inf.feasible)

    best = maximize_box(f, 3, search, grid, gvals)
    inf = _info_terms(*_split(best.x[None, :]), p1, p2)
    return _finish(_lb_terms(inf, caps), LB_LABELS, best.x)


@dataclass(frozen=True)
class SweepRow:
    c0: float
    c: float
    lower: float
    upper: float
    cutset: float
    binding_lower: str
    binding_upper: str


def sweep2_point(c: float, c0: float, p1: float = 1.0, p2: float = 1.0,
                 search: GridSpec = GridSpec()) -> SweepRow:
    """Bounds at caps (C, C, C0, C0); the upper column is the smaller of the two upper bounds."""
    caps = LinkCaps2(c, c, c0, c0)
    lo = optimize_lower_bound2(caps, search, p1, p2)
    u1 = upper_bound1(caps, search, p1, p2)
    u2 = upper_bound2(caps, search, p1, p2)
    up, tag = (u1, "UB1") if u1.value_bits <= u2.value_bits else (u2, "UB2")
    return SweepRow(c0, c, lo.value_bits, up.value_bits, cut_set2(caps, p1, p2),
                    lo.binding_label, f"{tag}: {up.binding_label}")


def sweep2(c_values: Sequence[float], c0_values: Sequence[float], p1: float = 1.0,
           p2: float = 1.0, search: GridSpec = GridSpec(), workers: int = 1) -> list[SweepRow]:
    """Two-relay bounds on the (C0, C) grid, rows sorted by (C0, C)."""
    if not c_values or not c0_values:
        raise ValueError("sweep needs nonempty C and C0 lists")
    keys = sorted((float(c0), float(c)) for c0 in c0_values for c in c_values)
    return _run_points(lambda k: sweep2_point(k[1], k[0], p1, p2, search), keys, workers)


def _run_points(fn, keys, workers: int):
    if workers <= 1:
        return [fn(k) for k in keys]
    from concurrent.futures import ThreadPoolExecutor
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, keys))


def params_from(x: Sequence[float], p1: float = 1.0, p2: float = 1.0, n: float = 0.0) -> TwoRelayParams:
    return TwoRelayParams(float(x[0]), float(x[1]), float(x[2]), p1, p2, n)


__all__ = [
    "LinkCaps2", "BoundResult", "ParameterDomainError", "phi_k", "varphi", "lower_bound2",
    "lower_bound2_terms", "optimize_lower_bound2", "upper_bound1_terms", "nstar", "upper_bound1",
    "upper_bound2_last_term_closed_form", "upper_bound2", "cut_set2", "cut_set2_terms",
    "SweepRow", "sweep2", "sweep2_point",
]
