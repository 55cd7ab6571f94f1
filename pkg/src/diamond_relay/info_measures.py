"""Discrete information measures computed exactly from joint pmf tensors.

All quantities are in bits.  A :class:`DiscreteJointDist` holds a dense
probability tensor with one axis per named variable; every measure below is
obtained from marginal entropies, so the usual identities (chain rule,
symmetry of mutual information) hold to floating point accuracy.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

MAX_TENSOR_SIZE = 10**7
NORMALIZATION_TOL = 1e-9
CLAMP_TOL = 1e-12


class DistributionError(ValueError):
    """Invalid joint distribution or variable selection."""


def _as_labels(subset: str | Iterable[str] | None) -> tuple[str, ...]:
    if subset is None:
        return ()
    if isinstance(subset, str):
        return (subset,)
    return tuple(subset)


@dataclass(frozen=True)
class DiscreteJointDist:
    """Joint pmf over a finite product alphabet.

    Parameters
    ----------
    variable_names : sequence of str
        One label per tensor axis.
    probs : array_like
        Nonnegative tensor whose shape gives the alphabet sizes.  Total mass
        must be within ``1e-9`` of one; it is renormalized exactly.
    """

    variable_names: tuple[str, ...]
    probs: np.ndarray = field(repr=False)

    def __init__(self, variable_names: Sequence[str], probs) -> None:
        names = tuple(variable_names)
        p = np.array(probs, dtype=float)
        if len(set(names)) != len(names):
            raise DistributionError(f"duplicate variable names: {names}")
        if p.ndim != len(names):
            raise DistributionError(
                f"tensor has {p.ndim} axes but {len(names)} variables were named")
        if p.size > MAX_TENSOR_SIZE:
            raise DistributionError(
                f"tensor of size {p.size} exceeds the {MAX_TENSOR_SIZE} guard")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise DistributionError("probabilities must be finite and nonnegative")
        total = p.sum()
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise DistributionError(f"total mass {total!r} is not 1 within {NORMALIZATION_TOL}")
        p = p / total
        p.setflags(write=False)
        object.__setattr__(self, "variable_names", names)
        object.__setattr__(self, "probs", p)

    @property
    def alphabet_sizes(self) -> tuple[int, ...]:
        return tuple(self.probs.shape)

    def axes(self, subset: str | Iterable[str] | None) -> tuple[int, ...]:
        labels = _as_labels(subset)
        missing = [s for s in labels if s not in self.variable_names]
        if missing:
            raise DistributionError(f"unknown variable(s) {missing}; have {self.variable_names}")
        return tuple(self.variable_names.index(s) for s in labels)

    def marginal(self, subset: str | Iterable[str]) -> np.ndarray:
        """Marginal pmf on ``subset``, axes in the order given."""
        keep = self.axes(subset)
        drop = tuple(i for i in range(self.probs.ndim) if i not in keep)
        m = self.probs.sum(axis=drop) if drop else self.probs
        # sum() leaves kept axes in ascending order; reorder to the request
        order = np.argsort(np.argsort(keep))
        return np.transpose(m, order) if m.ndim > 1 else m

    @classmethod
    def from_json(cls, doc: str | dict) -> "DiscreteJointDist":
        """Build from ``{"vars": [...], "sizes": [...], "probs": nested lists}``."""
        if isinstance(doc, str):
            doc = json.loads(doc)
        probs = np.array(doc["probs"], dtype=float)
        sizes = tuple(doc.get("sizes", probs.shape))
        if probs.shape != sizes:
            raise DistributionError(f"probs shape {probs.shape} does not match sizes {sizes}")
        return cls(doc["vars"], probs)

    def to_json(self) -> dict:
        return {"vars": list(self.variable_names), "sizes": list(self.alphabet_sizes),
                "probs": self.probs.tolist()}


def _entropy_of(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def _check_disjoint(*subsets: tuple[str, ...]) -> None:
    seen: set[str] = set()
    for s in subsets:
        overlap = seen.intersection(s)
        if overlap:
            raise DistributionError(f"subsets overlap on {sorted(overlap)}")
        seen.update(s)


def entropy(dist: DiscreteJointDist, subset) -> float:
    """Shannon entropy of the marginal on ``subset`` (0 log 0 = 0)."""
    labels = _as_labels(subset)
    if not labels:
        raise DistributionError("entropy needs a nonempty subset")
    return _entropy_of(dist.marginal(labels))


def _joint_entropy(dist: DiscreteJointDist, labels: tuple[str, ...]) -> float:
    return _entropy_of(dist.marginal(labels)) if labels else 0.0


def conditional_entropy(dist: DiscreteJointDist, subset_a, subset_b=None) -> float:
    """H(A|B) = H(A,B) - H(B); an empty ``subset_b`` gives H(A)."""
    a, b = _as_labels(subset_a), _as_labels(subset_b)
    if not a:
        raise DistributionError("conditional_entropy needs a nonempty subset_a")
    _check_disjoint(a, b)
    dist.axes(a + b)
    return max(_joint_entropy(dist, a + b) - _joint_entropy(dist, b), 0.0)


def mutual_information(dist: DiscreteJointDist, subset_a, subset_b, subset_cond=None) -> float:
    """I(A;B|C) via entropy differences, clamped at zero."""
    a, b, c = _as_labels(subset_a), _as_labels(subset_b), _as_labels(subset_cond)
    if not a or not b:
        raise DistributionError("mutual_information needs nonempty subset_a and subset_b")
    _check_disjoint(a, b, c)
    dist.axes(a + b + c)
    h = (_joint_entropy(dist, a + c) + _joint_entropy(dist, b + c)
         - _joint_entropy(dist, a + b + c) - _joint_entropy(dist, c))
    return h if h > 0 else 0.0


def total_correlation(dist: DiscreteJointDist, subset, subset_cond=None) -> float:
    """Conditional total correlation sum_w H(w|C) - H(S|C); zero for a singleton."""
    s, c = _as_labels(subset), _as_labels(subset_cond)
    if not s:
        raise DistributionError("total_correlation needs a nonempty subset")
    _check_disjoint(s, c)
    dist.axes(s + c)
    hc = _joint_entropy(dist, c)
    parts = sum(_joint_entropy(dist, (w,) + c) - hc for w in s)
    g = parts - (_joint_entropy(dist, s + c) - hc)
    return g if g > 0 else 0.0


def auxiliary_identity_residual(dist: DiscreteJointDist, x, y, z, u) -> float:
    """|I(X;Y|Z) - [I(X,Y;U|Z) - I(Y;U|X,Z) + I(X;Y|U,Z) - I(X;U|Y,Z)]|.

    The bracket re-expresses I(X;Y|Z) through an arbitrary extra variable U,
    so the residual is zero up to rounding for every joint distribution.
    Raw (unclamped) entropy differences are used so that the check is a
    genuine identity test rather than one masked by clamping.
    """
    x, y, z, u = (_as_labels(v) for v in (x, y, z, u))
    if not (x and y and z and u):
        raise DistributionError("auxiliary_identity_residual needs four nonempty label sets")
    _check_disjoint(x, y, z, u)
    dist.axes(x + y + z + u)

    def h(*parts):
        return _joint_entropy(dist, tuple(l for p in parts for l in p))

    def mi(a, b, c):
        return h(a, c) + h(b, c) - h(a, b, c) - h(c)

    lhs = mi(x, y, z)
    rhs = mi(x + y, u, z) - mi(y, u, x + z) + mi(x, y, u + z) - mi(x, u, y + z)
    return abs(lhs - rhs)


def random_joint(rng: np.random.Generator, names: Sequence[str], sizes: Sequence[int],
                 sparsity: float = 0.0) -> DiscreteJointDist:
    """Dirichlet(1) joint pmf; ``sparsity`` zeroes that fraction of cells."""
    p = rng.dirichlet(np.ones(int(np.prod(sizes)))).reshape(sizes)
    if sparsity > 0:
        mask = rng.random(p.shape) < sparsity
        if mask.all():
            mask.flat[0] = False
        p = np.where(mask, 0.0, p)
        p = p / p.sum()
    return DiscreteJointDist(names, p)
