"""Block elements of the truncated product of word-space operator algebras,
the block Markov operator, boundary elements, Dirichlet-decay profiles, the
truncated Poisson integral and the harmonic-state limit check.

A block element stores one matrix per word inside a truncation radius;
applying the Markov operator mixes a block at x with blocks at the fusion
summands of x with the step words.  Channels that would reach outside the
radius are never silently approximated: their exact probability weight is
reported as leakage per block, and consumers only trust blocks with zero
leakage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .qdims import QParam, dim_min, log_dim_q
from .tl import TLContext, weighted_partial_trace
from .walk import ProbMeasure, transition_row
from .words import EPSILON, Word, all_words, fusion_summands, involution

_2NORM = lambda m: float(np.linalg.norm(m, 2)) if m.size else 0.0


@dataclass(frozen=True)
class TruncationPolicy:
    """Keep blocks for words up to the radius; report exact dropped channel
    weight per application of the Markov operator."""

    radius: int = 6

    def words(self) -> list[Word]:
        return list(all_words(self.radius))


@dataclass
class BlockElement:
    """An element of the truncated direct product: word -> matrix on H_word.

    Words absent from blocks are zero; leakage[x] > 0 marks a block whose
    value is contaminated by out-of-radius truncation.
    """

    blocks: dict[Word, np.ndarray]
    leakage: dict[Word, float] = field(default_factory=dict)

    def block(self, w: Word) -> np.ndarray:
        b = self.blocks.get(w)
        if b is None:
            d = dim_min(w)
            return np.zeros((d, d))
        return b

    def leak(self, w: Word) -> float:
        return self.leakage.get(w, 0.0)

    @property
    def support(self) -> list[Word]:
        return sorted(w for w, b in self.blocks.items() if _2NORM(b) > 0)

    def adjoint(self) -> "BlockElement":
        return BlockElement({w: b.conj().T for w, b in self.blocks.items()},
                            dict(self.leakage))

    def scalar_at(self, w: Word, tol: float = 1e-8) -> float:
        """The scalar of a central block; raises if the block is not a scalar
        matrix within tol."""
        b = self.block(w)
        lam = np.trace(b) / b.shape[0]
        if _2NORM(b - lam * np.eye(b.shape[0])) > tol:
            raise ValueError(f"block at {w} is not scalar within {tol}")
        return float(lam.real)

    @classmethod
    def identity(cls, trunc: TruncationPolicy) -> "BlockElement":
        return cls({w: np.eye(dim_min(w)) for w in trunc.words()})

    @classmethod
    def indicator(cls, w: Word) -> "BlockElement":
        return cls({w: np.eye(dim_min(w))})


def comult_cutdown(x: Word, y: Word, z: Word, b: np.ndarray,
                   ctx: TLContext) -> np.ndarray:
    """Cut the comultiplication of an operator on H_z down to the (x, y)
    block: V(x (x) y, z) b V(x (x) y, z)*."""
    v = ctx.fusion_isometry(x, y, z)
    return v @ b @ v.conj().T


def _channel_weight(x: Word, y: Word, z: Word, q: QParam) -> float:
    qv = q.q
    return math.exp(log_dim_q(z, qv) - log_dim_q(x, qv) - log_dim_q(y, qv))


def markov_apply(a: BlockElement, mu: ProbMeasure, ctx: TLContext,
                 trunc: TruncationPolicy = TruncationPolicy(),
                 targets: list[Word] | None = None) -> BlockElement:
    """One application of the block Markov operator.

    The block at x becomes the mu-average over step words y of the weighted
    partial trace over the y-factor of the cut-down comultiplication,
    summed over the fusion channels z of (x, y).  Channels with |z| beyond
    the radius contribute their exact probability weight to leakage[x]
    instead of a value.
    """
    out: dict[Word, np.ndarray] = {}
    leak: dict[Word, float] = {}
    for x in (trunc.words() if targets is None else targets):
        dx = dim_min(x)
        acc = np.zeros((dx, dx))
        dropped = 0.0
        for y, wy in mu.weights.items():
            for z in fusion_summands(x, y):
                if len(z) > trunc.radius:
                    dropped += wy * _channel_weight(x, y, z, ctx.q)
                    continue
                inherited = a.leak(z)
                if inherited > 0:
                    dropped += wy * _channel_weight(x, y, z, ctx.q) * min(inherited, 1.0)
                cut = comult_cutdown(x, y, z, a.block(z), ctx)
                acc = acc + wy * weighted_partial_trace(cut, dx, y, ctx)
        out[x] = acc
        if dropped > 0:
            leak[x] = dropped
    return BlockElement(out, leak)


def boundary_element(x0: Word, a_mat: np.ndarray, radius: int,
                     ctx: TLContext) -> BlockElement:
    """The compatible family extending an operator on H_{x0} along the
    compression maps: block at x0 w is psi_{x0 w, x0}(a) for |x0 w| within
    the radius, zero off the cone."""
    d0 = dim_min(x0)
    if a_mat.shape != (d0, d0):
        raise ValueError(f"operator shape {a_mat.shape} does not match "
                         f"dim_min({x0}) = {d0}")
    blocks: dict[Word, np.ndarray] = {}
    for w in all_words(radius - len(x0)):
        y = x0 * w
        if len(w) == 0:
            blocks[y] = np.array(a_mat, copy=True)
            continue
        v = ctx.fusion_isometry(x0, w, y)
        blocks[y] = v.conj().T @ np.kron(a_mat, np.eye(dim_min(w))) @ v
    return BlockElement(blocks)


@dataclass(frozen=True)
class DirichletProfile:
    x0: Word
    lengths: tuple[int, ...]
    # sup over y in the step set, max over cone words of each length
    values: tuple[float, ...]
    two_form_error: float


def dirichlet_profile(x0: Word, a_mat: np.ndarray, step_words: list[Word],
                      lengths: list[int], ctx: TLContext,
                      check_two_form: bool = True) -> DirichletProfile:
    """Decay profile of the defect sup_y ||(id (x) psi_y) of the cut-down
    comultiplication of the boundary element at x, minus the block at x||.

    Both expansions of the defect's first term are computed when requested:
    the channel sum over z in fuse(x, y) of partial-traced cut-downs, and the
    dual sum over z of channel weights times
    V(z (x) conj(y), x)* (a_z (x) 1) V(z (x) y conj, x); their maximal
    disagreement is reported and must be tiny.
    """
    radius = max(lengths) + max(len(y) for y in step_words)
    a = boundary_element(x0, a_mat, radius, ctx)
    two_err = 0.0
    vals = []
    for length in lengths:
        worst = 0.0
        for w in all_words(length - len(x0), min_len=length - len(x0)):
            x = x0 * w
            dx = dim_min(x)
            for y in step_words:
                acc = np.zeros((dx, dx))
                for z in fusion_summands(x, y):
                    cut = comult_cutdown(x, y, z, a.block(z), ctx)
                    acc = acc + weighted_partial_trace(cut, dx, y, ctx)
                if check_two_form:
                    yb = involution(y)
                    alt = np.zeros((dx, dx))
                    for z in fusion_summands(x, y):
                        wgt = _channel_weight(x, y, z, ctx.q)
                        v = ctx.fusion_isometry(z, yb, x)
                        alt = alt + wgt * (
                            v.conj().T @ np.kron(a.block(z), np.eye(dim_min(yb))) @ v
                        )
                    two_err = max(two_err, _2NORM(acc - alt))
                worst = max(worst, _2NORM(acc - a.block(x)))
        vals.append(worst)
    return DirichletProfile(x0, tuple(lengths), tuple(vals), two_err)


class LeakageError(RuntimeError):
    def __init__(self, needed_radius: int, leak: float):
        super().__init__(
            f"truncation leakage {leak:.3e} above threshold; "
            f"radius of about {needed_radius} required")
        self.needed_radius = needed_radius
        self.leak = leak


@dataclass
class PoissonResult:
    value: BlockElement
    increments: list[float]
    max_leak: float


def poisson_truncated(a: BlockElement, iters: int, mu: ProbMeasure,
                      ctx: TLContext,
                      trunc: TruncationPolicy = TruncationPolicy(),
                      leak_threshold: float | None = None) -> PoissonResult:
    """Iterate the block Markov operator with per-iteration Cauchy increments
    (max block-norm change over zero-leak blocks)."""
    cur = a
    incs = []
    max_leak = 0.0
    for k in range(iters):
        nxt = markov_apply(cur, mu, ctx, trunc)
        inc = 0.0
        for w in trunc.words():
            if nxt.leak(w) == 0.0 and cur.leak(w) == 0.0:
                inc = max(inc, _2NORM(nxt.block(w) - cur.block(w)))
        incs.append(inc)
        max_leak = max(max_leak, max(nxt.leakage.values(), default=0.0))
        if leak_threshold is not None and max_leak > leak_threshold:
            raise LeakageError(trunc.radius + (iters - k) * mu.max_step_length(),
                               max_leak)
        cur = nxt
    return PoissonResult(cur, incs, max_leak)


# --- the harmonic-state limit ---


def cone_mass_sequence(x0: Word, mu: ProbMeasure, q: QParam,
                       lump_radius: int = 12, max_iters: int = 200,
                       increment_tol: float = 1e-4) -> tuple[float, int, float]:
    """The probability that the walk from the root sits in the cone of x0
    after n steps, iterated until the increment drops below tolerance.

    Words longer than lump_radius are lumped into two absorbing states by
    their (already decided) cone membership; the mass that would re-cross the
    cone boundary after such an excursion is exponentially small in the
    radius, far below the tolerance.
    """
    if len(x0) == 0:
        return 1.0, 0, 0.0
    rows: dict[Word, dict] = {}
    dist: dict = {EPSILON: 1.0}
    in_cone = lambda w: w.letters.startswith(x0.letters)
    mass_in, mass_out = 0.0, 0.0
    prev = None
    for n in range(1, max_iters + 1):
        nxt: dict = {}
        for w, p in dist.items():
            row = rows.get(w)
            if row is None:
                row = transition_row(w, mu, q).entries
                rows[w] = row
            for z, pz in row.items():
                if len(z) > lump_radius:
                    if in_cone(z):
                        mass_in += p * pz
                    else:
                        mass_out += p * pz
                else:
                    nxt[z] = nxt.get(z, 0.0) + p * pz
        dist = nxt
        m = mass_in + math.fsum(p for w, p in dist.items() if in_cone(w))
        if prev is not None and abs(m - prev) < increment_tol:
            return m, n, abs(m - prev)
        prev = m
    return prev, max_iters, float("inf")


@dataclass(frozen=True)
class OmegaReport:
    lhs: float
    rhs: float
    psi_value: float
    nu_value: float
    nu_stderr: float
    iterations: int
    increment: float

    @property
    def tolerance(self) -> float:
        return 3.0 * abs(self.psi_value) * self.nu_stderr + 1e-3

    @property
    def residual(self) -> float:
        return abs(self.lhs - self.rhs)


def omega_infinity_check(x0: Word, a_mat: np.ndarray, ctx: TLContext,
                         mu: ProbMeasure, samples: int = 100_000,
                         seed: int = 0, workers: int = 1,
                         lump_radius: int = 12) -> OmegaReport:
    """Compare the limiting root-block state of the iterated Markov operator
    on a boundary element against the product of the word-space state and the
    Monte-Carlo cylinder mass.

    The root block of the n-th iterate equals the state of the n-step
    distribution applied blockwise; on a boundary element the state of every
    cone block collapses to the state of the base operator (the compression
    maps are state-compatible), so the iterate equals that state times the
    n-step cone mass, which is driven to its limit via the lumped kernel.
    """
    from .boundary import Cylinder, estimate_hitting
    from .tl import state_psi

    psi_val = float(state_psi(x0, a_mat, ctx))
    if len(x0) == 0:
        mass, iters, inc = 1.0, 0, 0.0
        nu_val, nu_se = 1.0, 0.0
    else:
        mass, iters, inc = cone_mass_sequence(x0, mu, ctx.q, lump_radius)
        est = estimate_hitting(EPSILON, Cylinder(x0), samples, mu, ctx.q,
                               seed=seed, workers=workers)
        nu_val, nu_se = est.value, est.stderr
    return OmegaReport(psi_val * mass, psi_val * nu_val, psi_val,
                       nu_val, nu_se, iters, inc)
