"""Covariance assembly for the Gaussian diamond network and log-det information.

The channel is ``Y = X_1 + ... + X_K + Z`` with unit-variance noise ``Z`` and
the auxiliary output ``V = Y + W`` with ``W ~ N(0, N)``.  The auxiliary
``U`` has unit variance; only its correlations with the inputs matter.

:func:`gaussian_mi` is the general-purpose engine every closed form in
:mod:`bounds_two_relay` and :mod:`bounds_three_relay` is checked against.
Singular conditional covariances are handled by restricting each block to
its range space, so fully correlated corners evaluate (possibly to ``inf``)
instead of failing.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

LOG2 = math.log(2.0)
SYMMETRY_TOL = 1e-12
PSD_TOL = 1e-10
# eigenvalues below RANK_TOL * scale count as zero in range projections
RANK_TOL = 1e-12


class ParameterDomainError(ValueError):
    """Correlation/power parameters outside the admissible region."""


def _labels(subset: str | Iterable[str] | None) -> tuple[str, ...]:
    if subset is None:
        return ()
    if isinstance(subset, str):
        return (subset,)
    return tuple(subset)


@dataclass(frozen=True)
class CovarianceMatrix:
    """Symmetric PSD covariance over named scalar variables."""

    variable_names: tuple[str, ...]
    entries: np.ndarray = field(repr=False)

    def __init__(self, variable_names: Sequence[str], entries) -> None:
        names = tuple(variable_names)
        m = np.array(entries, dtype=float)
        if m.shape != (len(names), len(names)):
            raise ValueError(f"matrix shape {m.shape} does not match {len(names)} names")
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate variable names: {names}")
        if not np.allclose(m, m.T, rtol=0.0, atol=SYMMETRY_TOL):
            raise ValueError("covariance matrix is not symmetric")
        m = 0.5 * (m + m.T)
        lam_min = float(np.linalg.eigvalsh(m)[0]) if len(names) else 0.0
        if lam_min < -PSD_TOL:
            raise ParameterDomainError(
                f"covariance is not positive semidefinite (min eigenvalue {lam_min:.3e})")
        m.setflags(write=False)
        object.__setattr__(self, "variable_names", names)
        object.__setattr__(self, "entries", m)

    def index(self, subset) -> list[int]:
        labels = _labels(subset)
        missing = [s for s in labels if s not in self.variable_names]
        if missing:
            raise KeyError(f"unknown variable(s) {missing}; have {self.variable_names}")
        return [self.variable_names.index(s) for s in labels]

    def block(self, rows, cols=None) -> np.ndarray:
        r = self.index(rows)
        c = r if cols is None else self.index(cols)
        return self.entries[np.ix_(r, c)]

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.entries)[0])

    def to_json(self) -> str:
        return json.dumps({"vars": list(self.variable_names), "cov": self.entries.tolist()})


@dataclass(frozen=True)
class TwoRelayParams:
    """Correlations and powers of (U, X1, X2) plus the V-noise variance."""

    rho: float
    rho1: float
    rho2: float
    p1: float = 1.0
    p2: float = 1.0
    n_aux: float = 0.0

    @property
    def corr_det(self) -> float:
        """Determinant of the (U, X1, X2) correlation matrix."""
        return two_relay_corr_det(self.rho, self.rho1, self.rho2)

    def validate(self) -> None:
        for name in ("rho", "rho1", "rho2"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ParameterDomainError(f"{name}={v} outside [0, 1]")
        if self.p1 <= 0 or self.p2 <= 0:
            raise ParameterDomainError(f"powers must be positive, got {self.p1}, {self.p2}")
        if self.n_aux < 0:
            raise ParameterDomainError(f"auxiliary noise variance N={self.n_aux} < 0")
        if self.corr_det < -PSD_TOL:
            raise ParameterDomainError(
                "1 - rho^2 - rho1^2 - rho2^2 + 2 rho rho1 rho2 >= 0 violated "
                f"(value {self.corr_det:.6g})")


@dataclass(frozen=True)
class ThreeRelaySymParams:
    """Symmetric three-relay parameters: pairwise input correlation ``rho``,
    common U-input correlation ``rho_c``, per-relay power ``p``."""

    rho: float
    rho_c: float
    p: float = 1.0
    n_aux: float = 0.0

    def validate(self) -> None:
        if not -0.5 <= self.rho <= 1.0:
            raise ParameterDomainError(f"rho={self.rho} outside [-1/2, 1]")
        if not 0.0 <= self.rho_c <= 1.0:
            raise ParameterDomainError(f"rho_c={self.rho_c} outside [0, 1]")
        if self.p <= 0:
            raise ParameterDomainError(f"power must be positive, got {self.p}")
        if self.n_aux < 0:
            raise ParameterDomainError(f"auxiliary noise variance N={self.n_aux} < 0")
        if 1.0 + 2.0 * self.rho - 3.0 * self.rho_c**2 < -PSD_TOL:
            raise ParameterDomainError(
                "1 + 2 rho - 3 rho_c^2 >= 0 violated (U, X1, X2, X3 covariance not PSD)")


def two_relay_corr_det(rho, rho1, rho2):
    """1 - rho^2 - rho1^2 - rho2^2 + 2 rho rho1 rho2 (array friendly)."""
    return 1.0 - rho**2 - rho1**2 - rho2**2 + 2.0 * rho * rho1 * rho2


def _with_channel(inputs: np.ndarray, n_aux: float) -> np.ndarray:
    """Extend cov of (U, X_1..X_K) by Y = sum X + Z and V = Y + W."""
    k = inputs.shape[0] - 1
    d = k + 3
    s = np.zeros((d, d))
    s[: k + 1, : k + 1] = inputs
    # cov(., Y) = sum of cov(., X_j)
    col_y = inputs[:, 1:].sum(axis=1)
    var_y = inputs[1:, 1:].sum() + 1.0
    s[: k + 1, k + 1] = s[k + 1, : k + 1] = col_y
    s[: k + 1, k + 2] = s[k + 2, : k + 1] = col_y
    s[k + 1, k + 1] = var_y
    s[k + 1, k + 2] = s[k + 2, k + 1] = var_y
    s[k + 2, k + 2] = var_y + n_aux
    return s


def assemble_sigma2(params: TwoRelayParams) -> CovarianceMatrix:
    """Covariance of (U, X1, X2, Y, V) for the two-relay Gaussian MAC."""
    params.validate()
    r, r1, r2 = params.rho, params.rho1, params.rho2
    a1, a2 = math.sqrt(params.p1), math.sqrt(params.p2)
    inputs = np.array([
        [1.0, r1 * a1, r2 * a2],
        [r1 * a1, params.p1, r * a1 * a2],
        [r2 * a2, r * a1 * a2, params.p2],
    ])
    return CovarianceMatrix(("U", "X1", "X2", "Y", "V"), _with_channel(inputs, params.n_aux))


def assemble_sigma2_batch(rho, rho1, rho2, p1: float = 1.0, p2: float = 1.0,
                          n_aux=0.0) -> np.ndarray:
    """Stacked (U, X1, X2, Y, V) covariances, shape ``(B, 5, 5)``.

    Same layout as :func:`assemble_sigma2`; every point is validated.
    """
    r, r1, r2, n = np.broadcast_arrays(*(np.atleast_1d(np.asarray(v, dtype=float))
                                         for v in (rho, rho1, rho2, n_aux)))
    for i in range(len(r)):
        TwoRelayParams(float(r[i]), float(r1[i]), float(r2[i]), p1, p2, float(n[i])).validate()
    a1, a2 = math.sqrt(p1), math.sqrt(p2)
    s = np.zeros((len(r), 5, 5))
    s[:, 0, 0] = 1.0
    s[:, 0, 1] = s[:, 1, 0] = r1 * a1
    s[:, 0, 2] = s[:, 2, 0] = r2 * a2
    s[:, 1, 1], s[:, 2, 2] = p1, p2
    s[:, 1, 2] = s[:, 2, 1] = r * a1 * a2
    col_y = s[:, :3, 1:3].sum(axis=2)
    var_y = s[:, 1:3, 1:3].sum(axis=(1, 2)) + 1.0
    for j in (3, 4):
        s[:, :3, j] = s[:, j, :3] = col_y
    s[:, 3, 3] = s[:, 3, 4] = s[:, 4, 3] = var_y
    s[:, 4, 4] = var_y + n
    return s


def assemble_sigma3(params: ThreeRelaySymParams) -> CovarianceMatrix:
    """Covariance of (U, X1, X2, X3, Y, V) for the symmetric three-relay MAC."""
    params.validate()
    p, r, rc = params.p, params.rho, params.rho_c
    inputs = np.empty((4, 4))
    inputs[0, 0] = 1.0
    inputs[0, 1:] = inputs[1:, 0] = rc * math.sqrt(p)
    inputs[1:, 1:] = r * p
    np.fill_diagonal(inputs[1:, 1:], p)
    return CovarianceMatrix(("U", "X1", "X2", "X3", "Y", "V"), _with_channel(inputs, params.n_aux))


def _range_basis(k: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the numerical range of a PSD matrix."""
    if k.size == 0:
        return np.zeros((0, 0))
    if k.shape[0] == 1:
        # scalar fast path, same threshold as below
        return np.ones((1, 1)) if k[0, 0] > RANK_TOL * max(1.0, abs(k[0, 0])) else np.zeros((1, 0))
    lam, vec = np.linalg.eigh(k)
    scale = max(1.0, float(np.abs(lam).max()))
    return vec[:, lam > RANK_TOL * scale]


def conditional_covariance(cov: CovarianceMatrix, subset, cond=None) -> np.ndarray:
    """Covariance of ``subset`` given ``cond`` (pseudo-inverse Schur complement)."""
    s, c = cov.index(subset), cov.index(cond)
    e = cov.entries
    k_ss = e[s][:, s]
    if not c:
        return k_ss
    k_cc = e[c][:, c]
    k_sc = e[s][:, c]
    q = _range_basis(k_cc)
    if q.shape[1] == 0:
        return k_ss
    # pinv restricted to the range of K_cc
    inner = q @ np.linalg.solve(q.T @ k_cc @ q, q.T)
    k = k_ss - k_sc @ inner @ k_sc.T
    k = 0.5 * (k + k.T)
    return k


def _logdet(m: np.ndarray) -> float:
    if m.size == 0:
        return 0.0
    if m.shape[0] == 1:
        x = float(m[0, 0])
        return math.log(x) if x > RANK_TOL * max(1.0, abs(x)) else -math.inf
    lam = np.linalg.eigvalsh(m)
    scale = max(1.0, float(np.abs(lam).max()))
    if lam[0] <= RANK_TOL * scale:
        return -math.inf
    return float(np.log(lam).sum())


def gaussian_mi(cov: CovarianceMatrix, a, b, cond=None) -> float:
    """I(A;B|C) in bits for jointly Gaussian variables.

    Components of A or B that are deterministic given C carry no
    information and are projected out; if the remaining blocks are still
    linearly dependent the result is ``inf``.
    """
    a, b, c = _labels(a), _labels(b), _labels(cond)
    if not a or not b:
        raise ValueError("gaussian_mi needs nonempty a and b")
    for x, y in ((a, b), (a, c), (b, c)):
        if set(x) & set(y):
            raise ValueError(f"subsets overlap: {x} and {y}")
    # fixed argument order makes I(A;B|C) == I(B;A|C) bit for bit
    if b < a:
        a, b = b, a
    k = conditional_covariance(cov, a + b, c)
    na = len(a)
    qa = _range_basis(k[:na, :na])
    qb = _range_basis(k[na:, na:])
    if qa.shape[1] == 0 or qb.shape[1] == 0:
        return 0.0
    q = np.zeros((len(a) + len(b), qa.shape[1] + qb.shape[1]))
    q[:na, : qa.shape[1]] = qa
    q[na:, qa.shape[1]:] = qb
    m = q.T @ k @ q
    ra = qa.shape[1]
    joint = _logdet(m)
    if joint == -math.inf:
        return math.inf
    val = 0.5 * (_logdet(m[:ra, :ra]) + _logdet(m[ra:, ra:]) - joint) / LOG2
    return val if val > PSD_TOL else 0.0


def gaussian_mi_batch(entries: np.ndarray, names: Sequence[str], a, b, cond=None) -> np.ndarray:
    """:func:`gaussian_mi` over a stack of covariances of shape ``(B, d, d)``.

    Well-conditioned points go through batched Schur complements and
    ``slogdet``; any point with a near-singular block falls back to the
    range-projected scalar path, so the two agree everywhere.
    """
    a, b, c = _labels(a), _labels(b), _labels(cond)
    names = tuple(names)
    entries = np.asarray(entries, dtype=float)
    if b < a:
        a, b = b, a
    ia, ib, ic = ([names.index(x) for x in v] for v in (a, b, c))
    s = ia + ib
    k = entries[:, s][:, :, s]
    if ic:
        k_cc = entries[:, ic][:, :, ic]
        k_sc = entries[:, s][:, :, ic]
        lam_c = np.linalg.eigvalsh(k_cc)
        ok_c = lam_c[:, 0] > 1e-9 * np.maximum(1.0, lam_c[:, -1])
        safe = np.where(ok_c[:, None, None], k_cc, np.eye(len(ic)))
        k = k - k_sc @ np.linalg.solve(safe, np.swapaxes(k_sc, 1, 2))
    else:
        ok_c = np.ones(len(entries), dtype=bool)
    lam = np.linalg.eigvalsh(k)
    ok = ok_c & (lam[:, 0] > 1e-9 * np.maximum(1.0, lam[:, -1]))
    na = len(ia)
    # singular rows produce inf - inf here and are recomputed below
    with np.errstate(invalid="ignore", divide="ignore"):
        la = np.linalg.slogdet(k[:, :na, :na])[1]
        lb = np.linalg.slogdet(k[:, na:, na:])[1]
        lj = np.linalg.slogdet(k)[1]
        out = 0.5 * (la + lb - lj) / LOG2
    out = np.where(out > PSD_TOL, out, 0.0)
    for i in np.flatnonzero(~ok):
        out[i] = gaussian_mi(CovarianceMatrix(names, entries[i]), a, b, c)
    return out


def gaussian_entropy(cov: CovarianceMatrix, subset) -> float:
    """Differential entropy 1/2 log2((2 pi e)^k det Sigma); ``-inf`` if singular."""
    s = _labels(subset)
    if not s:
        raise ValueError("gaussian_entropy needs a nonempty subset")
    ld = _logdet(cov.block(s))
    if ld == -math.inf:
        return -math.inf
    return 0.5 * (len(s) * math.log(2 * math.pi * math.e) + ld) / LOG2


def gaussian_total_correlation(cov: CovarianceMatrix, subset, cond=None) -> float:
    """Gaussian total correlation as a chain of conditional mutual informations.

    Gamma(X_S|C) = sum_{i>=2} I(X_i; X_1..X_{i-1} | C), which equals
    sum_i h(X_i|C) - h(X_S|C) whenever the latter is finite and inherits the
    range-projection rule of :func:`gaussian_mi` otherwise.
    """
    s, c = _labels(subset), _labels(cond)
    if not s:
        raise ValueError("gaussian_total_correlation needs a nonempty subset")
    total = 0.0
    for i in range(1, len(s)):
        total += gaussian_mi(cov, s[i], s[:i], c)
    return total
