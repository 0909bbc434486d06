"""Monte-Carlo boundary machinery: end-convergence sampling, hitting measures
on cylinders, the classical Poisson integral and the finite boundary-identity
checks.

Sampling is delegated to the compiled engine; every sample owns its own
counter-based stream, so results depend only on (seed, sample count), never
on worker or thread scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .qdims import QParam, log_dim_q, log_q_int
from .walk import ProbMeasure
from .words import EPSILON, Word, alternating_word, all_words, involution, split_at


@dataclass(frozen=True)
class Cylinder:
    """The set of infinite words starting with a fixed nonempty prefix."""

    prefix: Word

    def __post_init__(self):
        if len(self.prefix) == 0:
            raise ValueError("a cylinder needs a nonempty prefix")

    def __str__(self) -> str:
        return str(self.prefix)


@dataclass(frozen=True)
class StoppingPolicy:
    """Declare a sample resolved once the watched prefix is unchanged for
    stable_steps consecutive steps; give up at max_steps."""

    stable_steps: int = 50
    max_steps: int = 10_000
    margin: int = 2

    def __post_init__(self):
        if self.stable_steps < 1:
            raise ValueError("stable_steps must be >= 1")


DEFAULT_POLICY = StoppingPolicy()


@dataclass(frozen=True)
class HittingEstimate:
    value: float
    stderr: float
    samples: int
    unresolved: int = 0
    policy: StoppingPolicy = DEFAULT_POLICY


class EstimationError(RuntimeError):
    pass


def _encode(w: Word) -> np.ndarray:
    return np.frombuffer(w.letters.encode(), dtype=np.uint8) - ord("a")


def _decode(arr) -> Word:
    return Word("".join("ab"[int(c)] for c in arr))


def _mu_arrays(mu: ProbMeasure, q: QParam):
    words = mu.support
    flat = []
    off = [0]
    logdim = []
    wts = []
    for w in words:
        flat.extend(int(c) for c in _encode(w))
        off.append(len(flat))
        logdim.append(log_dim_q(w, q.q))
        wts.append(mu.weights[w])
    return (
        np.array(flat, dtype=np.uint8),
        np.array(off, dtype=np.int64),
        np.array(logdim, dtype=np.float64),
        np.array(wts, dtype=np.float64),
    )


def _logqint_table(q: QParam, nmax: int) -> np.ndarray:
    tab = np.empty(nmax + 2, dtype=np.float64)
    tab[0] = 0.0
    for n in range(1, nmax + 2):
        tab[n] = log_q_int(n, q.q)
    return tab


@dataclass
class PrefixSample:
    """A batch of sampled boundary prefixes from a common start word."""

    start: Word
    resolve_len: int
    prefixes: np.ndarray  # (n, resolve_len) uint8; 255 rows are unresolved
    resolved: np.ndarray  # bool mask
    steps: np.ndarray

    @property
    def n_total(self) -> int:
        return int(self.prefixes.shape[0])

    @property
    def n_resolved(self) -> int:
        return int(self.resolved.sum())

    @property
    def n_unresolved(self) -> int:
        return self.n_total - self.n_resolved

    def prefix_word(self, i: int) -> Word | None:
        if not self.resolved[i]:
            return None
        return _decode(self.prefixes[i])

    def cylinder_mask(self, z: Word) -> np.ndarray:
        """Resolved samples whose end lies in the cylinder of z."""
        if len(z) > self.resolve_len:
            raise ValueError("cylinder deeper than the resolved prefix length")
        zl = _encode(z)
        return self.resolved & np.all(self.prefixes[:, : len(z)] == zl, axis=1)


def sample_boundary_prefixes(
    x: Word,
    resolve_len: int,
    n: int,
    mu: ProbMeasure,
    q: QParam,
    policy: StoppingPolicy = DEFAULT_POLICY,
    seed: int = 0,
    workers: int = 1,
    index0: int = 0,
) -> PrefixSample:
    """Sample n boundary prefixes of the walk started at x.

    Sample i draws from the stream keyed (seed, index0 + i); the result is a
    pure function of those keys, independent of the worker count (which only
    sets the compiled engine's thread count).
    """
    if resolve_len < 1:
        raise ValueError("resolve_len must be >= 1")
    from . import _engine
    import numba

    if workers >= 1:
        numba.set_num_threads(min(workers, numba.config.NUMBA_NUM_THREADS))
    mu_flat, mu_off, mu_logdim, mu_w = _mu_arrays(mu, q)
    zmax = mu.max_step_length()
    nmax = len(x) + zmax * (policy.max_steps + 1) + 8
    tab = _logqint_table(q, nmax)
    out_prefix = np.empty((n, resolve_len), dtype=np.uint8)
    out_resolved = np.empty(n, dtype=np.bool_)
    out_steps = np.empty(n, dtype=np.int64)
    _engine.simulate_prefixes(
        _encode(x),
        mu_flat,
        mu_off,
        mu_logdim,
        mu_w,
        tab,
        resolve_len,
        policy.margin,
        policy.stable_steps,
        policy.max_steps,
        np.uint64(seed),
        np.uint64(index0),
        n,
        out_prefix,
        out_resolved,
        out_steps,
    )
    return PrefixSample(x, resolve_len, out_prefix, out_resolved, out_steps)


def sample_boundary_prefix(
    x: Word,
    resolve_len: int,
    mu: ProbMeasure,
    q: QParam,
    policy: StoppingPolicy = DEFAULT_POLICY,
    seed: int = 0,
) -> Word | None:
    """Single-sample convenience wrapper; None signals an unresolved sample."""
    batch = sample_boundary_prefixes(x, resolve_len, 1, mu, q, policy, seed)
    return batch.prefix_word(0)


def _binomial_estimate(hits: int, n_resolved: int, n_unresolved: int,
                       policy: StoppingPolicy) -> HittingEstimate:
    if n_resolved == 0:
        raise EstimationError("all samples unresolved; raise max_steps")
    v = hits / n_resolved
    se = math.sqrt(max(v * (1.0 - v), 0.0) / n_resolved)
    return HittingEstimate(v, se, n_resolved, n_unresolved, policy)


def estimate_hitting(
    x: Word,
    z: Cylinder,
    n: int,
    mu: ProbMeasure,
    q: QParam,
    policy: StoppingPolicy = DEFAULT_POLICY,
    seed: int = 0,
    workers: int = 1,
) -> HittingEstimate:
    """MC estimate of the hitting mass of the cylinder from x."""
    batch = sample_boundary_prefixes(x, len(z.prefix), n, mu, q, policy, seed, workers)
    hits = int(batch.cylinder_mask(z.prefix).sum())
    return _binomial_estimate(hits, batch.n_resolved, batch.n_unresolved, policy)


def estimate_hitting_many(
    x: Word,
    cylinders: list[Cylinder],
    n: int,
    mu: ProbMeasure,
    q: QParam,
    policy: StoppingPolicy = DEFAULT_POLICY,
    seed: int = 0,
    workers: int = 1,
) -> dict[Word, HittingEstimate]:
    """Estimate several cylinders from one shared sample batch."""
    depth = max(len(c.prefix) for c in cylinders)
    batch = sample_boundary_prefixes(x, depth, n, mu, q, policy, seed, workers)
    out = {}
    for c in cylinders:
        hits = int(batch.cylinder_mask(c.prefix).sum())
        out[c.prefix] = _binomial_estimate(hits, batch.n_resolved, batch.n_unresolved, policy)
    return out


def poisson_integral_classical(
    terms: list[tuple[float, Cylinder]],
    x: Word,
    n: int,
    mu: ProbMeasure,
    q: QParam,
    policy: StoppingPolicy = DEFAULT_POLICY,
    seed: int = 0,
    workers: int = 1,
) -> tuple[float, float]:
    """Estimate the integral of a finite cylinder combination against the
    hitting measure from x.  Evaluates the combination per sample, so the
    stderr is that of a single mean (cylinders may overlap arbitrarily)."""
    depth = max(len(c.prefix) for _, c in terms)
    batch = sample_boundary_prefixes(x, depth, n, mu, q, policy, seed, workers)
    if batch.n_resolved == 0:
        raise EstimationError("all samples unresolved; raise max_steps")
    vals = np.zeros(batch.n_total)
    for coef, c in terms:
        vals += coef * batch.cylinder_mask(c.prefix)
    vals = vals[batch.resolved]
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
    return mean, se


@dataclass(frozen=True)
class ConvolutieReport:
    lhs: float
    lhs_stderr: float
    rhs: float
    rhs_stderr: float

    @property
    def combined_stderr(self) -> float:
        return math.hypot(self.lhs_stderr, self.rhs_stderr)

    @property
    def residual(self) -> float:
        return abs(self.lhs - self.rhs)


def convolutie_check(
    x: Word,
    z: Cylinder,
    n: int,
    mu: ProbMeasure,
    q: QParam,
    policy: StoppingPolicy = DEFAULT_POLICY,
    seed: int = 0,
    workers: int = 1,
    extra_resolve: int = 4,
) -> ConvolutieReport:
    """Check the boundary identity expressing a hitting mass from x as an
    integral against the hitting measure from the root.

    lhs is the direct estimate of the cylinder mass from x.  rhs averages,
    over boundary samples from the root, the sum over k of the indicator that
    the sampled end extends the word conj([x]^k)[z]^k, weighted by the
    dimension-ratio density evaluated on the resolved prefix.
    """
    zw = z.prefix
    if len(zw) <= len(x):
        raise ValueError("the identity needs |z| > |x|")
    lhs = estimate_hitting(x, z, n, mu, q, policy, seed, workers)

    k_top = 0
    for k in range(min(len(x), len(zw)) + 1):
        if x.letters[:k] == zw.letters[:k]:
            k_top = k
    # the comparison words conj([x]^k) [z]^k, k = 0..(x|z)
    comps = []
    for k in range(k_top + 1):
        wk = involution(split_at(x, k)[1]) * split_at(zw, k)[1]
        comps.append(wk)
    depth = max(len(zw), max(len(w) for w in comps)) + extra_resolve
    batch = sample_boundary_prefixes(
        EPSILON, depth, n, mu, q, policy, seed + 1, workers
    )
    if batch.n_resolved == 0:
        raise EstimationError("all samples unresolved; raise max_steps")
    qv = q.q
    inv_dim_x = math.exp(-log_dim_q(x, qv))
    vals = np.zeros(batch.n_total)
    for k, wk in enumerate(comps):
        mask = batch.cylinder_mask(wk)
        idx = np.nonzero(mask)[0]
        if len(idx) == 0:
            continue
        ratios = np.empty(len(idx))
        for j, i in enumerate(idx):
            suffix = _decode(batch.prefixes[i, len(wk):])
            # ratio dim_q(z . tail) / dim_q(wk . tail) on the resolved prefix
            ratios[j] = math.exp(
                log_dim_q(zw * suffix, qv) - log_dim_q(wk * suffix, qv)
            )
        vals[idx] += inv_dim_x * ratios
    vals = vals[batch.resolved]
    rhs = float(vals.mean())
    rhs_se = float(vals.std(ddof=1) / math.sqrt(len(vals)))
    return ConvolutieReport(lhs.value, lhs.stderr, rhs, rhs_se)


@dataclass(frozen=True)
class AtomScanReport:
    tail_letter: str
    depths: tuple[int, ...]
    estimates: tuple[HittingEstimate, ...]
    support_ok: bool
    support_min_mass: float


def atom_scan(
    tail_letter: str,
    depths: list[int],
    n: int,
    mu: ProbMeasure,
    q: QParam,
    policy: StoppingPolicy = DEFAULT_POLICY,
    seed: int = 0,
    workers: int = 1,
    support_depth: int = 4,
) -> AtomScanReport:
    """Cylinder masses along the alternating end, plus a full-support scan.

    The masses of the shrinking alternating cylinders must be non-increasing
    and, if the hitting measure has no atom on the alternating end, decay to
    zero; every cylinder of depth <= support_depth must carry positive mass.
    """
    depth_max = max(max(depths), support_depth)
    batch = sample_boundary_prefixes(EPSILON, depth_max, n, mu, q, policy, seed, workers)
    ests = []
    for d in depths:
        w = alternating_word(tail_letter, d)
        hits = int(batch.cylinder_mask(w).sum())
        ests.append(_binomial_estimate(hits, batch.n_resolved, batch.n_unresolved, policy))
    min_mass = 1.0
    ok = True
    for w in all_words(support_depth, min_len=1):
        mass = batch.cylinder_mask(w).sum() / batch.n_resolved
        min_mass = min(min_mass, mass)
        if mass <= 0:
            ok = False
    return AtomScanReport(tail_letter, tuple(depths), tuple(ests), ok, float(min_mass))
