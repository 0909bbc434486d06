"""Diagrammatic operator layer: cup vectors, Jones-Wenzl projections, word
spaces H_x with their weight operators Q_x, fusion isometries V(x (x) y, z),
compression maps and the approximate-intertwining estimates.

Everything is realized in the single-cup two-dimensional model: each letter
acts on the same 2-dimensional space V, a run of length m carries the
Jones-Wenzl projection f_m on m strands, and H_x is the tensor product of the
run projections' ranges.  Operators are stored in the dim_min coordinates of
those ranges; ambient 2^n vectors appear only transiently while building
embeddings and isometries, so the strand budget bounds vectors, not dense
ambient operators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .qdims import QParam, dim_min, log_dim_q, q_int
from .words import Word, fuse, run_lengths


class StrandBudgetError(RuntimeError):
    """A construction would exceed the configured strand budget."""


class ChannelError(ValueError):
    """The requested word is not a summand of the fusion product."""


class DegeneracyError(RuntimeError):
    """An isometry candidate came out numerically null (construction bug)."""


@dataclass(frozen=True)
class CupPair:
    """The two solutions of the zig-zag identities on V (x) V.

    Both are unit vectors; composing a cap of one kind with a cup of the
    other yields (q + 1/q)^{-1} times the identity.
    """

    t: np.ndarray
    s: np.ndarray
    q: float


def build_cups(q: QParam) -> CupPair:
    """Unit cup vectors with signed weights q^{+1/2}, -q^{-1/2} over the
    mixed basis products, normalized by sqrt(q + 1/q); s = -t closes both
    zig-zag identities with the positive value (q + 1/q)^{-1}."""
    qv = q.q
    delta = qv + 1.0 / qv
    t = np.zeros(4)
    t[1] = math.sqrt(qv / delta)  # e0 (x) e1
    t[2] = -math.sqrt(1.0 / (qv * delta))  # e1 (x) e0
    return CupPair(t, -t, qv)


def _kron_all(mats: list[np.ndarray]) -> np.ndarray:
    return reduce(np.kron, mats, np.ones((1, 1)))


class TLContext:
    """Shared caches for one value of q: Jones-Wenzl isometries, word-space
    embeddings and fusion isometries.

    With random_gauge set, every fusion isometry gets an extra random phase
    (reproducible from gauge_seed) after its canonical one; reported norms
    and projections must not depend on it.
    """

    def __init__(self, q: QParam, strand_budget: int = 14,
                 random_gauge: bool = False, gauge_seed: int = 0):
        self.q = q
        self.strand_budget = strand_budget
        self.cups = build_cups(q)
        self.random_gauge = random_gauge
        self._gauge_rng = np.random.default_rng(gauge_seed)
        self._jw: dict[int, np.ndarray] = {
            0: np.ones((1, 1)),
            1: np.eye(2),
        }
        self._embed: dict[tuple[int, ...], np.ndarray] = {}
        self._iso: dict[tuple[str, str, str], np.ndarray] = {}
        self._space: dict[str, WordSpace] = {}

    # --- Jones-Wenzl level ---

    def jw_isometry(self, n: int) -> np.ndarray:
        """Orthonormal basis of the Jones-Wenzl range on n strands, as a
        2^n x (n+1) isometry.

        Level n+1 is the orthogonal complement, inside range(f_n) (x) V, of
        the image of the cup insertion on the last two strands applied to
        level n-1; the complement is read off a full SVD.
        """
        if n < 0:
            raise ValueError("strand count must be nonnegative")
        if n > self.strand_budget:
            raise StrandBudgetError(
                f"{n} strands exceed the budget of {self.strand_budget}")
        top = max(self._jw)
        t = self.cups.t.reshape(4, 1)
        while top < n:
            m = top
            u = np.kron(self._jw[m], np.eye(2))
            b = np.kron(self._jw[m - 1], t)
            c = u.T @ b  # everything here is real
            left, svals, _ = np.linalg.svd(c, full_matrices=True)
            if svals.min() < 1e-8:
                raise DegeneracyError(f"cup image degenerate at level {m + 1}")
            self._jw[m + 1] = u @ left[:, m:]
            top = m + 1
        return self._jw[n]

    def jones_wenzl(self, n: int) -> np.ndarray:
        """Dense Jones-Wenzl projection f_n on n strands (2^n x 2^n)."""
        w = self.jw_isometry(n)
        return w @ w.T

    def cup_generator(self, n: int, i: int) -> np.ndarray:
        """The adjacent cup-cap generator E_i = (q+1/q) t t* acting on
        strands i, i+1 of n, densely."""
        delta = self.cups.q + 1.0 / self.cups.q
        e = delta * np.outer(self.cups.t, self.cups.t)
        return _kron_all([np.eye(2 ** i), e, np.eye(2 ** (n - i - 2))])

    # --- word spaces ---

    def word_space(self, x: Word) -> "WordSpace":
        ws = self._space.get(x.letters)
        if ws is None:
            ws = WordSpace(x, self)
            self._space[x.letters] = ws
        return ws

    def embedding(self, x: Word) -> np.ndarray:
        """The isometry (C^2)^{(x) dim_min} picture: 2^|x| x dim_min(x) matrix
        whose columns span H_x; depends only on the run lengths."""
        key = run_lengths(x)
        w = self._embed.get(key)
        if w is None:
            if len(x) > self.strand_budget:
                raise StrandBudgetError(
                    f"word of length {len(x)} exceeds the budget of "
                    f"{self.strand_budget}")
            w = _kron_all([self.jw_isometry(m) for m in key])
            self._embed[key] = w
        return w

    # --- fusion isometries ---

    def fusion_isometry(self, x: Word, y: Word, z: Word) -> np.ndarray:
        """The isometry V(x (x) y, z), as a (dmin(x)*dmin(y)) x dmin(z) matrix
        in the word-space coordinates.

        Built by inserting the nested cup vector on the cancelled strands
        between the embedded copy of H_z and projecting into H_x (x) H_y;
        the candidate is checked to be a scalar multiple of an isometry and
        then normalized, with the canonical phase making the
        largest-magnitude coefficient real positive (ties: lowest index).
        """
        key = (x.letters, y.letters, z.letters)
        v = self._iso.get(key)
        if v is None:
            v = self._build_iso(x, y, z)
            self._iso[key] = v
        if self.random_gauge:
            return v * np.exp(2j * np.pi * self._gauge_rng.random())
        return v

    def _build_iso(self, x: Word, y: Word, z: Word) -> np.ndarray:
        term = next((t for t in fuse(x, y) if t.summand == z), None)
        if term is None:
            raise ChannelError(f"{z} is not a summand of {x} (x) {y}")
        if len(x) + len(y) > self.strand_budget:
            raise StrandBudgetError(
                f"{len(x) + len(y)} strands exceed the budget of "
                f"{self.strand_budget}")
        r = len(term.cancelled)
        a = len(x) - r  # strands of the left remainder
        b = len(y) - r
        wx = self.embedding(x)
        wy = self.embedding(y)
        wz = self.embedding(z)
        # nested cup vector on 2r strands, innermost first; the per-pair cup
        # alternates between the two cup kinds, which differ by a sign only,
        # so a single kind is used and the gauge step absorbs the sign
        nu = np.ones(1)
        for _ in range(r):
            nu = np.einsum("ij,m->imj", self.cups.t.reshape(2, 2), nu).reshape(-1)
        # columns of W_z, with the cups inserted between the x0 and y0 blocks
        cols = wz.reshape(2 ** a, 2 ** b, -1)
        full = np.einsum("abk,m->ambk", cols, nu)
        full = full.reshape(2 ** len(x), 2 ** len(y), -1)
        raw = np.einsum("sp,stk,tq->pqk", wx, full, wy)
        raw = raw.reshape(wx.shape[1] * wy.shape[1], -1)
        gram = raw.T.conj() @ raw
        scale = np.trace(gram).real / gram.shape[0]
        if scale < 1e-16:
            raise DegeneracyError(
                f"null fusion candidate for {x} (x) {y} -> {z}")
        if np.abs(gram - scale * np.eye(gram.shape[0])).max() > 1e-10 * scale:
            raise DegeneracyError(
                f"non-scalar overlap for {x} (x) {y} -> {z}")
        v = raw / math.sqrt(scale)
        flat = np.abs(v).reshape(-1)
        pivot = int(np.argmax(flat))
        piv = v.reshape(-1)[pivot]
        v = v * (piv.conjugate() / abs(piv)) if abs(piv) > 0 else v
        if np.iscomplexobj(v) and np.abs(v.imag).max() < 1e-14:
            v = v.real
        return v

    def channel_projection(self, x: Word, y: Word, z: Word) -> np.ndarray:
        """p^{x(x)y}_z = V V* on H_x (x) H_y coordinates; gauge-free."""
        v = self.fusion_isometry(x, y, z)
        return v @ v.T.conj()


class WordSpace:
    """The carrier space H_x of a word with its weight operator Q_x.

    Operators on H_x are dim_min(x)-dimensional matrices in the orthonormal
    coordinates given by the run embedding.
    """

    def __init__(self, word: Word, ctx: TLContext):
        self.word = word
        self.ctx = ctx
        self.dim = dim_min(word)
        self._qop: np.ndarray | None = None

    @property
    def embedding(self) -> np.ndarray:
        return self.ctx.embedding(self.word)

    @property
    def projection(self) -> np.ndarray:
        """Dense ambient projection P_x (2^n square); for small words only."""
        w = self.embedding
        return w @ w.T

    def ambient_qdiag(self) -> np.ndarray:
        """Diagonal of Q^{(x) n} on the ambient strands."""
        qv = self.ctx.q.q
        d = np.ones(1)
        single = np.array([qv, 1.0 / qv])
        for _ in range(len(self.word)):
            d = np.kron(d, single)
        return d

    @property
    def qop(self) -> np.ndarray:
        """Q_x, the compression of Q^{(x) n} to H_x, in coordinates."""
        if self._qop is None:
            w = self.embedding
            self._qop = w.T @ (self.ambient_qdiag()[:, None] * w)
        return self._qop

    @property
    def trace_q(self) -> float:
        """Tr(Q_x); factorizes over runs as the product of q-integers, so it
        is computed without the dense compression."""
        qv = self.ctx.q.q
        return math.exp(log_dim_q(self.word, qv))

    def state(self, a: np.ndarray) -> float | complex:
        """The weighted state Tr(Q_x a)/Tr(Q_x) in coordinates."""
        q = self.qop
        val = np.trace(q @ a) / np.trace(q)
        return val.real if abs(getattr(val, "imag", 0.0)) < 1e-30 else val


def state_psi(x: Word, a: np.ndarray, ctx: TLContext) -> float | complex:
    """The normalized Q-weighted trace on H_x."""
    return ctx.word_space(x).state(a)


def cp_psi_map(x: Word, y: Word, a: np.ndarray, ctx: TLContext) -> np.ndarray:
    """The unital completely positive compression from operators on H_x to
    operators on H_{xy}: V(x (x) y, xy)^* (a (x) 1) V(x (x) y, xy)."""
    v = ctx.fusion_isometry(x, y, x * y)
    dy = dim_min(y)
    return v.T.conj() @ np.kron(a, np.eye(dy)) @ v


def weighted_partial_trace(m: np.ndarray, dx: int, y: Word,
                           ctx: TLContext) -> np.ndarray:
    """(id (x) psi_y) applied to an operator on H_x (x) H_y in coordinates:
    the Q_y-weighted partial trace over the second factor."""
    qy = ctx.word_space(y).qop
    dy = qy.shape[0]
    m4 = m.reshape(dx, dy, dx, dy)
    return np.einsum("ijkl,lj->ik", m4, qy) / np.trace(qy)


# --- norm engine ---


def operator_norm(t: np.ndarray, tol: float = 1e-6, max_iter: int = 10_000,
                  seed: int = 0) -> float:
    """Largest singular value by power iteration on T*T.

    Matrix-free in spirit: only products with T and its adjoint are taken.
    Relative tolerance on the Rayleigh estimate; hard iteration cap.
    """
    n = t.shape[1]
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(max_iter):
        w = t.conj().T @ (t @ v)
        nw = np.linalg.norm(w)
        if nw < 1e-300:
            return 0.0
        new_est = math.sqrt(nw)
        v = w / nw
        if abs(new_est - est) <= tol * max(new_est, 1e-30):
            return new_est
        est = new_est
    return est


def d_circle(v: np.ndarray, w: np.ndarray, grid: int = 64,
             norm_tol: float = 1e-6) -> tuple[float, tuple[float, float]]:
    """inf over unit scalars lam of ||v - lam w||, with the bracketing
    phase interval of the refinement.

    A uniform phase grid locates the basin; golden-section refinement
    follows.  Returns (value, (phase_lo, phase_hi))."""

    def f(theta: float) -> float:
        return operator_norm(v - np.exp(1j * theta) * w, tol=norm_tol)

    thetas = np.linspace(0.0, 2.0 * np.pi, grid, endpoint=False)
    vals = [f(th) for th in thetas]
    k = int(np.argmin(vals))
    lo = thetas[(k - 1) % grid] if k > 0 else thetas[k] - 2 * np.pi / grid
    hi = thetas[k] + 2 * np.pi / grid
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > 1e-10:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return min(fc, fd), (a, b)


# --- the approximate-intertwining estimates ---


@dataclass(frozen=True)
class EstimateReport:
    x: Word
    y: Word
    z: Word
    r: Word
    q: float
    lhs1: float
    lhs2: float
    lhs_variant: float
    variant_bracket: tuple[float, float]

    @property
    def q_pow_y(self) -> float:
        return self.q ** len(self.y)


def approx_estimates(x: Word, y: Word, z: Word, r: Word,
                     ctx: TLContext) -> EstimateReport:
    """The two approximate commutation norms and the phase-distance variant
    for the tuple (x, y, z, r); all three decay like q^|y|.

    lhs1 compares moving V(xr (x) conj(r)y, xy) past the top fusion channel
    of (xy, z); lhs2 does the mirrored comparison with V(yr (x) conj(r)z, yz)
    past the top channel of (x, yz); the variant is the circle distance of the
    two ways of composing down to H_{xyz}.
    """
    from .words import involution

    rb = involution(r)
    strands = len(x) + len(y) + len(z) + 2 * len(r)
    if strands > ctx.strand_budget:
        raise StrandBudgetError(
            f"{strands} strands exceed the budget of {ctx.strand_budget}")

    d = lambda w: dim_min(w)
    # first display
    v1 = ctx.fusion_isometry(x * r, rb * y, x * y)
    p_top = ctx.channel_projection(x * y, z, x * y * z)
    p_right = ctx.channel_projection(rb * y, z, rb * y * z)
    lift = np.kron(v1, np.eye(d(z)))
    t1 = lift @ p_top - np.kron(np.eye(d(x * r)), p_right) @ lift
    lhs1 = operator_norm(t1)

    # second display
    v2 = ctx.fusion_isometry(y * r, rb * z, y * z)
    p_mid = ctx.channel_projection(x, y * z, x * y * z)
    p_left = ctx.channel_projection(x, y * r, x * y * r)
    lift2 = np.kron(np.eye(d(x)), v2)
    t2 = lift2 @ p_mid - np.kron(p_left, np.eye(d(rb * z))) @ lift2
    lhs2 = operator_norm(t2)

    # phase-distance variant
    left = lift2 @ ctx.fusion_isometry(x, y * z, x * y * z)
    right = np.kron(ctx.fusion_isometry(x, y * r, x * y * r), np.eye(d(rb * z))) \
        @ ctx.fusion_isometry(x * y * r, rb * z, x * y * z)
    # the trace-aligned phase gives an upper bound for the circle distance;
    # when it is already below reporting precision the grid search is skipped
    overlap = np.trace(left.conj().T @ right)
    if abs(overlap) > 1e-12:
        lam = overlap / abs(overlap)
        theta = float(np.angle(lam))
        ub = operator_norm(left - lam * right)
        if ub < 1e-11:
            return EstimateReport(x, y, z, r, ctx.q.q, lhs1, lhs2, ub,
                                  (theta, theta))
    lhs_v, bracket = d_circle(left, right)
    return EstimateReport(x, y, z, r, ctx.q.q, lhs1, lhs2, lhs_v, bracket)


def admissible_tuples(strand_budget: int, dedup: bool = True):
    """All (x, y, z, r) with |x|+|y|+|z|+2|r| within the budget, in a fixed
    deterministic order.  With dedup, one representative per global
    letter-swap orbit is produced (the swap is a symmetry of every reported
    quantity)."""
    from .words import all_words

    for a in range(strand_budget + 1):
        for x in all_words(a, a):
            for b in range(strand_budget + 1 - a):
                for y in all_words(b, b):
                    for c in range(strand_budget + 1 - a - b):
                        for z in all_words(c, c):
                            dmax = (strand_budget - a - b - c) // 2
                            for r in all_words(dmax):
                                if dedup:
                                    joined = (x.letters + y.letters
                                              + z.letters + r.letters)
                                    if joined.startswith("b"):
                                        continue
                                yield x, y, z, r


def estimate_scan(strand_budget: int, ctx: TLContext, dedup: bool = True):
    """Evaluate approx_estimates over every admissible tuple in the budget."""
    for x, y, z, r in admissible_tuples(strand_budget, dedup):
        yield approx_estimates(x, y, z, r, ctx)
