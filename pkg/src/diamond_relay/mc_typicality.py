"""Seeded Monte Carlo checks of the covering, packing and codebook-size lemmas.

Typicality is robust (relative): a tuple of length-``n`` sequences is
``eps``-typical for the joint pmf ``p`` when every joint symbol ``u`` has
empirical frequency within ``eps * p(u)`` of ``p(u)``; symbols with
``p(u) = 0`` must not occur.

Two sampling engines implement each experiment.

``brute``
    Literal random coding: codebooks are materialized, bins drawn, and every
    candidate tuple checked.  Guarded by ``MAX_CODEBOOK`` words per codebook
    and ``MAX_TUPLE_CHECKS`` candidate tuples per trial.
``type``
    Works on type classes and scales to any ``n`` whose typical joint types
    can be enumerated.  A codeword compared against one fixed sequence only
    matters through their joint type, so the number of matches is sampled
    from its exact binomial law (packing, codebook size).  For covering the
    number of typical tuples in bin 1 is replaced by a Poisson variable with
    the exact conditional mean given the per-type codeword counts; this
    ignores clumping between tuples that share a codeword.

``engine="auto"`` uses ``brute`` when its per-trial work is small and
``type`` otherwise.  Every trial draws from its own PCG64 stream seeded by
``SeedSequence([seed, trial])``, so estimates do not depend on scheduling.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.special import gammaln, logsumexp

from .info_measures import DiscreteJointDist, entropy

MAX_CODEBOOK = 2**20
MAX_TUPLE_CHECKS = 10**8
MAX_TYPES = 2 * 10**6
MAX_SEQUENCE_CELLS = 10**7
# brute engine is chosen by "auto" only below this many symbol comparisons per trial
AUTO_BRUTE_WORK = 2 * 10**5
CHUNK_CELLS = 4 * 10**6
# above this mean, Poisson/binomial draws switch to a normal approximation
NORMAL_SWITCH = 1e15
SEED_MASK = 2**64 - 1
Z95 = 1.96
ENGINES = ("auto", "brute", "type")


class ExperimentTooLarge(RuntimeError):
    """A guard on codebook size, candidate tuples or type enumeration tripped."""


@dataclass(frozen=True)
class TypicalityConfig:
    epsilon: float
    n: int

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"blocklength must be a positive integer, got {self.n}")


@dataclass(frozen=True)
class EmpiricalEstimate:
    mean: float
    half_width_95: float
    trials: int
    engine: str = ""


@dataclass(frozen=True)
class CoveringExperiment:
    """Codebooks for every variable of ``joint``; ``rates`` maps variable to R_w."""

    joint: DiscreteJointDist
    rates: Mapping[str, float]
    bin_rate: float
    config: TypicalityConfig
    trials: int
    seed: int
    engine: str = "auto"


@dataclass(frozen=True)
class PackingExperiment:
    """Wrong codewords for the variables in ``rates``; the rest of ``joint`` is the
    true context (U_{S^c}, Y)."""

    joint: DiscreteJointDist
    rates: Mapping[str, float]
    config: TypicalityConfig
    trials: int
    seed: int
    engine: str = "auto"


@dataclass(frozen=True)
class CodebookSizeExperiment:
    """Codebook of rate ``rate`` for variable ``u`` against V^n drawn from the
    marginal of the remaining variable."""

    joint: DiscreteJointDist
    u: str
    rate: float
    config: TypicalityConfig
    trials: int
    seed: int
    engine: str = "auto"


# ---------------------------------------------------------------------------
# typicality

def typical_count_bounds(p: np.ndarray, n: int, epsilon: float) -> tuple[np.ndarray, np.ndarray]:
    """Inclusive integer count range per joint symbol for robust typicality."""
    p = np.asarray(p, dtype=float)
    slack = 1e-9
    lo = np.ceil(n * p * (1.0 - epsilon) - slack).astype(np.int64)
    hi = np.floor(n * p * (1.0 + epsilon) + slack).astype(np.int64)
    lo = np.where(p > 0, np.maximum(lo, 0), 0)
    hi = np.where(p > 0, hi, 0)
    return lo, hi


def is_typical(sequences: Sequence[Sequence[int]], joint: DiscreteJointDist, epsilon: float) -> bool:
    """Robust joint typicality of one sequence per variable of ``joint``."""
    seqs = [np.asarray(s) for s in sequences]
    if len(seqs) != len(joint.variable_names):
        raise ValueError(f"expected {len(joint.variable_names)} sequences, got {len(seqs)}")
    n = len(seqs[0])
    if n == 0 or any(len(s) != n for s in seqs):
        raise ValueError(f"sequence lengths differ or are zero: {[len(s) for s in seqs]}")
    for name, s, size in zip(joint.variable_names, seqs, joint.alphabet_sizes):
        if s.size and (s.min() < 0 or s.max() >= size or not np.issubdtype(s.dtype, np.integer)):
            raise ValueError(f"sequence for {name} has symbols outside 0..{size - 1}")
    flat = np.ravel_multi_index(tuple(seqs), joint.alphabet_sizes)
    counts = np.bincount(flat, minlength=joint.probs.size)
    lo, hi = typical_count_bounds(joint.probs.ravel(), n, epsilon)
    return bool(np.all((counts >= lo) & (counts <= hi)))


def delta(joint: DiscreteJointDist, epsilon: float, u: str, v: str) -> float:
    """Slack delta(eps) = eps * (H(U) + H(V)) used in the codebook-size contract."""
    return epsilon * (entropy(joint, u) + entropy(joint, v))


def codebook_size(rate: float, n: int) -> int:
    """ceil(2^{nR}) as an exact integer (no float overflow for large nR)."""
    if rate < 0:
        raise ValueError(f"rates must be nonnegative, got {rate}")
    x = n * rate
    if x < 52:
        return int(math.ceil(2.0**x - 1e-9))
    whole = int(math.floor(x))
    return int(math.ceil(2.0 ** (x - whole) * 2**52)) << (whole - 52)


def _log_size(m: int) -> float:
    return math.log(m) if m < 2**1000 else float(m.bit_length() - 1) * math.log(2.0)


def _size_txt(m: int) -> str:
    # big codebook sizes would overflow str() and float formatting
    return str(m) if m < 10**9 else f"2^{_log_size(m) / math.log(2.0):.1f}"


def _rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed & SEED_MASK, trial])))


def _bernoulli_estimate(hits: np.ndarray, engine: str) -> EmpiricalEstimate:
    t = len(hits)
    p = float(np.mean(hits))
    return EmpiricalEstimate(p, Z95 * math.sqrt(p * (1.0 - p) / t), t, engine)


def _mean_estimate(x: np.ndarray, engine: str) -> EmpiricalEstimate:
    t = len(x)
    sd = float(np.std(x, ddof=1)) if t > 1 else 0.0
    return EmpiricalEstimate(float(np.mean(x)), Z95 * sd / math.sqrt(t), t, engine)


def _check_memory(config: TypicalityConfig, joint: DiscreteJointDist) -> None:
    cells = config.n * sum(joint.alphabet_sizes)
    if cells > MAX_SEQUENCE_CELLS:
        raise ExperimentTooLarge(
            f"experiment too large: n * (total alphabet size) = {cells} exceeds {MAX_SEQUENCE_CELLS}")


# ---------------------------------------------------------------------------
# typical joint types

def typical_types(p: np.ndarray, n: int, epsilon: float) -> np.ndarray:
    """All robust-typical joint types as count vectors over ``p.ravel()``."""
    p = np.asarray(p, dtype=float).ravel()
    lo, hi = typical_count_bounds(p, n, epsilon)
    cells = np.flatnonzero(p > 0)
    lo_c, hi_c = lo[cells], hi[cells]
    if np.any(lo_c > hi_c) or lo_c.sum() > n or hi_c.sum() < n:
        return np.zeros((0, p.size), dtype=np.int64)
    # suffix sums bound what the remaining cells can absorb
    suf_lo = np.concatenate([np.cumsum(lo_c[::-1])[::-1], [0]])
    suf_hi = np.concatenate([np.cumsum(hi_c[::-1])[::-1], [0]])
    partial = np.zeros((1, 0), dtype=np.int64)
    used = np.zeros(1, dtype=np.int64)
    k = len(cells)
    for j in range(k - 1):
        vals = np.arange(lo_c[j], hi_c[j] + 1)
        rem = n - used[:, None] - vals[None, :]
        ok = (rem >= suf_lo[j + 1]) & (rem <= suf_hi[j + 1])
        rows, cols = np.nonzero(ok)
        if len(rows) > MAX_TYPES:
            raise ExperimentTooLarge(
                f"experiment too large: more than {MAX_TYPES} typical joint types at n={n}")
        partial = np.concatenate([partial[rows], vals[cols][:, None]], axis=1)
        used = used[rows] + vals[cols]
    last = n - used
    keep = (last >= lo_c[-1]) & (last <= hi_c[-1])
    partial = np.concatenate([partial[keep], last[keep][:, None]], axis=1)
    out = np.zeros((len(partial), p.size), dtype=np.int64)
    out[:, cells] = partial
    return out


def _log_multinomial(counts: np.ndarray) -> np.ndarray:
    counts = np.asarray(counts)
    n = counts.sum(axis=-1)
    return gammaln(n + 1.0) - gammaln(counts + 1.0).sum(axis=-1)


def _xlogp(counts: np.ndarray, p: np.ndarray) -> np.ndarray:
    """sum_u counts(u) log p(u) with 0 log 0 = 0 (counts on p=0 give -inf)."""
    with np.errstate(divide="ignore"):
        lp = np.log(p)
    terms = np.where(counts > 0, counts * lp, 0.0)
    return terms.sum(axis=-1)


# ---------------------------------------------------------------------------
# brute engine helpers

def _tuple_typical(codebooks: Sequence[np.ndarray], index_tuples: np.ndarray,
                   context: Sequence[np.ndarray], joint: DiscreteJointDist,
                   order: Sequence[int], lo: np.ndarray, hi: np.ndarray) -> bool:
    """Is any selected tuple (plus fixed context sequences) jointly typical?

    ``order`` maps the concatenation (codebook variables, context variables)
    onto the axes of ``joint``.
    """
    sizes = joint.alphabet_sizes
    strides = np.array([int(np.prod(sizes[i + 1:])) for i in range(len(sizes))], dtype=np.int64)
    n = codebooks[0].shape[1] if codebooks else context[0].shape[0]
    base = np.zeros(n, dtype=np.int64)
    k = len(codebooks)
    for c, seq in enumerate(context):
        base = base + strides[order[k + c]] * seq
    chunk = max(1, CHUNK_CELLS // n)
    ncell = joint.probs.size
    for start in range(0, len(index_tuples), chunk):
        idx = index_tuples[start:start + chunk]
        flat = np.broadcast_to(base, (len(idx), n)).copy()
        for w in range(k):
            flat += strides[order[w]] * codebooks[w][idx[:, w]]
        offs = (np.arange(len(idx), dtype=np.int64) * ncell)[:, None]
        counts = np.bincount((flat + offs).ravel(), minlength=len(idx) * ncell).reshape(len(idx), ncell)
        if np.any(np.all((counts >= lo) & (counts <= hi), axis=1)):
            return True
    return False


def _all_tuples(sizes: Sequence[int]) -> np.ndarray:
    grids = np.meshgrid(*[np.arange(m) for m in sizes], indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1) if grids else np.zeros((1, 0), dtype=np.int64)


def _draw_codebook(rng, pmf: np.ndarray, m: int, n: int) -> np.ndarray:
    return rng.choice(len(pmf), size=(m, n), p=pmf)


def _pick_engine(requested: str, brute_ok: bool, work: int) -> str:
    if requested not in ENGINES:
        raise ValueError(f"engine must be one of {ENGINES}, got {requested!r}")
    if requested == "auto":
        return "brute" if brute_ok and work <= AUTO_BRUTE_WORK else "type"
    return requested


# ---------------------------------------------------------------------------
# covering

def _covering_sizes(exp: CoveringExperiment):
    names = exp.joint.variable_names
    missing = [v for v in names if v not in exp.rates]
    if missing:
        raise ValueError(f"covering experiment needs a rate for every variable; missing {missing}")
    n = exp.config.n
    sizes = [codebook_size(float(exp.rates[v]), n) for v in names]
    bins = codebook_size(float(exp.bin_rate), n)
    return names, sizes, bins


def sim_covering(exp: CoveringExperiment) -> EmpiricalEstimate:
    """Estimate P(E(1)): bin 1 holds no jointly typical codeword tuple."""
    if exp.trials < 1:
        raise ValueError("trials must be positive")
    _check_memory(exp.config, exp.joint)
    names, sizes, bins = _covering_sizes(exp)
    n = exp.config.n
    total = math.prod(sizes)
    expected_bin = total // bins
    brute_ok = max(sizes) <= MAX_CODEBOOK and expected_bin <= MAX_TUPLE_CHECKS
    engine = _pick_engine(exp.engine, brute_ok, int(expected_bin * n + sum(sizes) * n))
    if engine == "brute":
        if max(sizes) > MAX_CODEBOOK:
            raise ExperimentTooLarge(
                f"experiment too large: codebook sizes {[_size_txt(m) for m in sizes]} "
                f"exceed {MAX_CODEBOOK}; lower n or rates")
        if expected_bin > MAX_TUPLE_CHECKS:
            raise ExperimentTooLarge(
                f"experiment too large: {_size_txt(total)} tuples / {_size_txt(bins)} bins = "
                f"{_size_txt(expected_bin)} "
                f"candidate tuples per trial exceeds {MAX_TUPLE_CHECKS}; lower n or rates")
        hits = np.array([_covering_brute_trial(exp, sizes, bins, t) for t in range(exp.trials)])
    else:
        hits = _covering_type(exp, sizes, bins)
    return _bernoulli_estimate(hits, engine)


def _covering_brute_trial(exp: CoveringExperiment, sizes, bins: int, trial: int) -> bool:
    rng = _rng(exp.seed, trial)
    joint, n = exp.joint, exp.config.n
    books = [_draw_codebook(rng, joint.marginal(v), m, n) for v, m in zip(joint.variable_names, sizes)]
    total = math.prod(sizes)
    if bins == 1:
        flat = np.arange(total, dtype=np.int64)
    else:
        k = int(rng.binomial(total, 1.0 / bins))
        flat = rng.choice(total, size=k, replace=False) if k else np.zeros(0, dtype=np.int64)
        flat = np.sort(flat)
    if len(flat) == 0:
        return True
    idx = np.stack(np.unravel_index(flat, sizes), axis=1)
    lo, hi = typical_count_bounds(joint.probs.ravel(), n, exp.config.epsilon)
    order = list(range(len(sizes)))
    return not _tuple_typical(books, idx, [], joint, order, lo, hi)


def _sample_type_counts(rng, log_m: float, m: int, log_probs: np.ndarray) -> np.ndarray:
    """Log of codeword counts falling in each listed type class."""
    probs = np.exp(log_probs)
    if m < 2**62 and probs.sum() <= 1.0:
        rest = max(0.0, 1.0 - probs.sum())
        c = rng.multinomial(m, np.append(probs, rest))[:-1].astype(float)
        with np.errstate(divide="ignore"):
            return np.log(c)
    lam_log = log_m + log_probs
    out = np.empty_like(lam_log)
    small = lam_log < math.log(NORMAL_SWITCH)
    lam_small = np.exp(lam_log[small])
    c = rng.poisson(lam_small).astype(float)
    with np.errstate(divide="ignore"):
        out[small] = np.log(c)
    z = rng.standard_normal(int((~small).sum()))
    big = lam_log[~small]
    out[~small] = big + np.log1p(np.clip(z * np.exp(-0.5 * big), -0.999999, None))
    return out


def _covering_type(exp: CoveringExperiment, sizes, bins: int) -> np.ndarray:
    joint, n = exp.joint, exp.config.n
    shape = joint.alphabet_sizes
    types = typical_types(joint.probs, n, exp.config.epsilon)
    if len(types) == 0:
        # no typical type: every bin is empty of typical tuples
        return np.ones(exp.trials, dtype=bool)
    tens = types.reshape((len(types),) + shape)
    log_tj = _log_multinomial(types)
    per_var = []
    for w, v in enumerate(joint.variable_names):
        axes = tuple(a + 1 for a in range(len(shape)) if a != w)
        marg = tens.sum(axis=axes)
        uniq, inv = np.unique(marg, axis=0, return_inverse=True)
        inv = np.asarray(inv).ravel()
        log_class = _log_multinomial(uniq)
        log_prob = log_class + _xlogp(uniq, joint.marginal(v))
        per_var.append((inv, log_class, log_prob, _log_size(sizes[w]), sizes[w]))
    base = log_tj - sum(lc[inv] for inv, lc, _, _, _ in per_var) - _log_size(bins)
    hits = np.empty(exp.trials, dtype=bool)
    for t in range(exp.trials):
        rng = _rng(exp.seed, t)
        acc = base.copy()
        for inv, _, lp, lm, m in per_var:
            acc = acc + _sample_type_counts(rng, lm, m, lp)[inv]
        log_lam = float(logsumexp(acc)) if np.any(np.isfinite(acc)) else -math.inf
        p_empty = math.exp(-math.exp(log_lam)) if log_lam < 700 else 0.0
        hits[t] = rng.random() < p_empty
    return hits


# ---------------------------------------------------------------------------
# packing and codebook size share the "codeword vs fixed context" structure

class _ContextTypes:
    """Typical joint types of (S-variables, context) grouped by context type."""

    def __init__(self, joint: DiscreteJointDist, s_vars: Sequence[str], n: int, epsilon: float):
        ctx = [v for v in joint.variable_names if v not in s_vars]
        self.s_vars, self.ctx_vars = list(s_vars), ctx
        order = list(s_vars) + ctx
        p = joint.marginal(order)
        self.s_shape = p.shape[: len(s_vars)]
        self.ctx_shape = p.shape[len(s_vars):]
        a = int(np.prod(self.s_shape))
        b = int(np.prod(self.ctx_shape)) if ctx else 1
        self.p_ctx = p.reshape(a, b).sum(axis=0)
        # codeword tuples have independent components drawn from the S marginals
        ps = np.ones(1)
        for v in s_vars:
            ps = np.multiply.outer(ps, joint.marginal(v)).ravel()
        self.log_ps = ps
        types = typical_types(p.reshape(a * b), n, epsilon).reshape(-1, a, b)
        self.groups: dict[bytes, np.ndarray] = {}
        if len(types):
            ctx_marg = types.sum(axis=1)
            # log P(S-sequence has joint type J | context type K)
            log_w = (gammaln(ctx_marg + 1.0).sum(axis=1) - gammaln(types + 1.0).sum(axis=(1, 2))
                     + _xlogp(types.sum(axis=2), ps))
            uniq, inv = np.unique(ctx_marg, axis=0, return_inverse=True)
            inv = np.asarray(inv).ravel()
            for g in range(len(uniq)):
                self.groups[uniq[g].tobytes()] = log_w[inv == g]
        self.n = n

    def log_q(self, ctx_counts: np.ndarray) -> float:
        w = self.groups.get(np.asarray(ctx_counts, dtype=np.int64).tobytes())
        if w is None:
            return -math.inf
        return float(logsumexp(w))


def _p_any(log_m: float, log_q: float) -> float:
    """1 - (1 - q)^M evaluated stably."""
    if log_q == -math.inf:
        return 0.0
    q = math.exp(log_q)
    lq = log_q if q < 1e-8 else math.log(-math.log1p(-q)) if q < 1.0 else math.inf
    x = log_m + lq
    if x > 700:
        return 1.0
    return -math.expm1(-math.exp(x))


def _draw_count(rng, m: int, log_m: float, log_q: float) -> float:
    if log_q == -math.inf:
        return 0.0
    q = math.exp(log_q)
    if m < 2**62:
        return float(rng.binomial(m, min(q, 1.0)))
    log_lam = log_m + log_q
    if log_lam < math.log(NORMAL_SWITCH):
        return float(rng.poisson(math.exp(log_lam)))
    lam = math.exp(log_lam)
    return max(0.0, lam + math.sqrt(lam * max(0.0, 1.0 - q)) * float(rng.standard_normal()))


def sim_packing(exp: PackingExperiment) -> EmpiricalEstimate:
    """Estimate P(some wrong codeword tuple is jointly typical with the true context)."""
    joint, n = exp.joint, exp.config.n
    if exp.trials < 1:
        raise ValueError("trials must be positive")
    _check_memory(exp.config, joint)
    s_vars = [v for v in joint.variable_names if v in exp.rates]
    if not s_vars or set(exp.rates) - set(joint.variable_names):
        raise ValueError(f"rates must name a nonempty subset of {joint.variable_names}")
    if len(s_vars) == len(joint.variable_names):
        raise ValueError("packing needs at least one context variable")
    sizes = [codebook_size(float(exp.rates[v]), n) for v in s_vars]
    total = math.prod(sizes)
    brute_ok = max(sizes) <= MAX_CODEBOOK and total <= MAX_TUPLE_CHECKS
    engine = _pick_engine(exp.engine, brute_ok, total * n)
    ctx_vars = [v for v in joint.variable_names if v not in s_vars]
    p_ctx = joint.marginal(ctx_vars).ravel()
    if engine == "brute":
        if not brute_ok:
            raise ExperimentTooLarge(
                f"experiment too large: codebooks {[_size_txt(m) for m in sizes]} give "
                f"{_size_txt(total)} candidate tuples "
                f"(limits {MAX_CODEBOOK} per codebook, {MAX_TUPLE_CHECKS} tuples); lower n or rates")
        lo, hi = typical_count_bounds(joint.probs.ravel(), n, exp.config.epsilon)
        order = [joint.variable_names.index(v) for v in s_vars + ctx_vars]
        idx = _all_tuples(sizes)
        hits = np.empty(exp.trials, dtype=bool)
        ctx_shape = joint.marginal(ctx_vars).shape
        for t in range(exp.trials):
            rng = _rng(exp.seed, t)
            flat_ctx = rng.choice(len(p_ctx), size=n, p=p_ctx)
            ctx = list(np.unravel_index(flat_ctx, ctx_shape))
            books = [_draw_codebook(rng, joint.marginal(v), m, n) for v, m in zip(s_vars, sizes)]
            hits[t] = _tuple_typical(books, idx, ctx, joint, order, lo, hi)
        return _bernoulli_estimate(hits, engine)
    ct = _ContextTypes(joint, s_vars, n, exp.config.epsilon)
    log_m = _log_size(total)
    hits = np.empty(exp.trials, dtype=bool)
    for t in range(exp.trials):
        rng = _rng(exp.seed, t)
        k = rng.multinomial(n, p_ctx)
        hits[t] = rng.random() < _p_any(log_m, ct.log_q(k))
    return _bernoulli_estimate(hits, engine)


def sim_codebook_size(exp: CodebookSizeExperiment) -> EmpiricalEstimate:
    """Mean number of codewords jointly typical with an independent V^n."""
    joint, n = exp.joint, exp.config.n
    if exp.trials < 1:
        raise ValueError("trials must be positive")
    if len(joint.variable_names) != 2 or exp.u not in joint.variable_names:
        raise ValueError(f"codebook-size experiment needs a joint over (U, V) naming {exp.u!r}")
    _check_memory(exp.config, joint)
    v = next(x for x in joint.variable_names if x != exp.u)
    m = codebook_size(float(exp.rate), n)
    brute_ok = m <= MAX_CODEBOOK
    engine = _pick_engine(exp.engine, brute_ok, m * n)
    p_v = joint.marginal(v)
    counts = np.empty(exp.trials)
    if engine == "brute":
        if not brute_ok:
            raise ExperimentTooLarge(
                f"experiment too large: codebook size {_size_txt(m)} exceeds {MAX_CODEBOOK}; lower n or rate")
        lo, hi = typical_count_bounds(joint.probs.ravel(), n, exp.config.epsilon)
        order = [joint.variable_names.index(exp.u), joint.variable_names.index(v)]
        for t in range(exp.trials):
            rng = _rng(exp.seed, t)
            vseq = rng.choice(len(p_v), size=n, p=p_v)
            book = _draw_codebook(rng, joint.marginal(exp.u), m, n)
            counts[t] = _count_typical(book, vseq, joint, order, lo, hi)
        return _mean_estimate(counts, engine)
    ct = _ContextTypes(joint, [exp.u], n, exp.config.epsilon)
    log_m = _log_size(m)
    for t in range(exp.trials):
        rng = _rng(exp.seed, t)
        k = rng.multinomial(n, p_v)
        counts[t] = _draw_count(rng, m, log_m, ct.log_q(k))
    return _mean_estimate(counts, engine)


def _count_typical(book, vseq, joint, order, lo, hi) -> int:
    sizes = joint.alphabet_sizes
    strides = [int(np.prod(sizes[i + 1:])) for i in range(len(sizes))]
    flat = strides[order[0]] * book + strides[order[1]] * vseq[None, :]
    ncell = joint.probs.size
    total = 0
    chunk = max(1, CHUNK_CELLS // book.shape[1])
    for s in range(0, len(book), chunk):
        f = flat[s:s + chunk]
        offs = (np.arange(len(f), dtype=np.int64) * ncell)[:, None]
        c = np.bincount((f + offs).ravel(), minlength=len(f) * ncell).reshape(len(f), ncell)
        total += int(np.all((c >= lo) & (c <= hi), axis=1).sum())
    return total


def codebook_size_exponent(est: EmpiricalEstimate, n: int) -> float:
    """(1/n) log2 of the mean count; ``-inf`` when no codeword was ever typical."""
    return math.log2(est.mean) / n if est.mean > 0 else -math.inf


# ---------------------------------------------------------------------------
# scans and JSON

Experiment = CoveringExperiment | PackingExperiment | CodebookSizeExperiment


def run(exp: Experiment) -> EmpiricalEstimate:
    if isinstance(exp, CoveringExperiment):
        return sim_covering(exp)
    if isinstance(exp, PackingExperiment):
        return sim_packing(exp)
    if isinstance(exp, CodebookSizeExperiment):
        return sim_codebook_size(exp)
    raise TypeError(f"not an experiment: {type(exp).__name__}")


def phase_scan(template: Experiment, n_values: Sequence[int]) -> list[tuple[int, int, EmpiricalEstimate]]:
    """Run ``template`` at each blocklength with seed ``template.seed ^ n``.

    Returns ``(n, seed, estimate)`` rows in the order of ``n_values``.
    """
    if len(n_values) == 0:
        raise ValueError("n_values is empty")
    rows = []
    for n in n_values:
        seed = (template.seed ^ int(n)) & SEED_MASK
        exp = replace(template, config=replace(template.config, n=int(n)), seed=seed)
        rows.append((int(n), seed, run(exp)))
    return rows


KINDS = ("cover", "pack", "dict")


def experiment_from_json(doc, kind: str | None = None, **overrides) -> Experiment:
    """Build an experiment from a JSON spec.

    Common keys: ``joint`` ({"vars", "sizes", "probs"}), ``epsilon``, ``n``,
    ``trials``, ``seed``, ``engine``.  ``cover`` adds ``rates`` (every
    variable) and ``bin_rate``; ``pack`` adds ``rates`` for the wrong-codeword
    variables; ``dict`` adds ``u`` and ``rate``.  Keyword ``overrides`` replace
    top-level keys.
    """
    if isinstance(doc, Path) or (isinstance(doc, str) and not doc.lstrip().startswith("{")):
        doc = Path(doc).read_text()
    if isinstance(doc, str):
        doc = json.loads(doc)
    doc = {**doc, **{k: v for k, v in overrides.items() if v is not None}}
    kind = kind or doc.get("kind")
    if kind not in KINDS:
        raise ValueError(f"experiment kind must be one of {KINDS}, got {kind!r}")
    try:
        joint = DiscreteJointDist.from_json(doc["joint"])
        cfg = TypicalityConfig(float(doc.get("epsilon", 0.1)), int(doc.get("n", 64)))
        trials, seed = int(doc.get("trials", 100)), int(doc.get("seed", 0))
        engine = doc.get("engine", "auto")
        if kind == "cover":
            return CoveringExperiment(joint, dict(doc["rates"]), float(doc.get("bin_rate", 0.0)),
                                      cfg, trials, seed, engine)
        if kind == "pack":
            return PackingExperiment(joint, dict(doc["rates"]), cfg, trials, seed, engine)
        return CodebookSizeExperiment(joint, doc["u"], float(doc["rate"]), cfg, trials, seed, engine)
    except KeyError as e:
        raise ValueError(f"{kind} spec is missing key {e}") from None
