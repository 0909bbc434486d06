"""The center-restricted random walk on the fusion monoid: transition rows,
convolution of measures, exact truncated n-step kernels, the transience
constant and reproducible path sampling.

All probabilities are assembled from log-space dimension ratios and checked
for normalization in linear space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .qdims import QParam, Q_TO_ONE, dim_q, log_dim_q
from .words import EPSILON, Word, fuse, fusion_summands, involution

_NORM_TOL = 1e-12


@dataclass(frozen=True)
class ProbMeasure:
    """Finitely supported probability measure on words."""

    weights: dict[Word, float]

    def __post_init__(self):
        if not self.weights:
            raise ValueError("measure needs a nonempty support")
        if any(p <= 0 for p in self.weights.values()):
            raise ValueError("all weights must be positive")
        total = math.fsum(self.weights.values())
        if abs(total - 1.0) > _NORM_TOL:
            raise ValueError(f"weights sum to {total}, not 1")

    @classmethod
    def from_strings(cls, table: dict[str, float], normalize_tol: float = 0.0) -> "ProbMeasure":
        """Build from word strings; optionally renormalize small deviations."""
        total = math.fsum(table.values())
        if normalize_tol and abs(total - 1.0) <= normalize_tol:
            table = {k: v / total for k, v in table.items()}
        return cls({Word.parse(k): float(v) for k, v in table.items()})

    @classmethod
    def point_mass(cls, w: Word) -> "ProbMeasure":
        return cls({w: 1.0})

    @classmethod
    def uniform_letters(cls) -> "ProbMeasure":
        return cls({Word("a"): 0.5, Word("b"): 0.5})

    @property
    def support(self) -> list[Word]:
        return sorted(self.weights)

    def __call__(self, w: Word) -> float:
        return self.weights.get(w, 0.0)

    def max_step_length(self) -> int:
        return max(len(w) for w in self.weights)


@dataclass(frozen=True)
class TransitionRow:
    """The sparse row p(x, .) of the one-step kernel."""

    source: Word
    entries: dict[Word, float]

    def __post_init__(self):
        total = math.fsum(self.entries.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"row at {self.source} sums to {total}")

    def __call__(self, y: Word) -> float:
        return self.entries.get(y, 0.0)


def transition_row(x: Word, mu: ProbMeasure, q: QParam) -> TransitionRow:
    """One-step transition probabilities from x.

    p(x, y) = sum over z in supp(mu) with z a summand of the fusion of
    involution(x) and y, of mu(z) dim_q(y) / (dim_q(x) dim_q(z)).  Candidate
    targets are enumerated through the dual fusion of x with z (Frobenius
    reciprocity), which keeps the row finite.
    """
    qv = q.q
    lx = log_dim_q(x, qv)
    entries: dict[Word, float] = {}
    for z, wz in mu.weights.items():
        lz = log_dim_q(z, qv)
        for y in fusion_summands(x, z):
            p = wz * math.exp(log_dim_q(y, qv) - lx - lz)
            entries[y] = entries.get(y, 0.0) + p
    return TransitionRow(x, entries)


def convolve(mu: ProbMeasure, eta: ProbMeasure, q: QParam) -> ProbMeasure:
    """Convolution of measures through the fusion rules and dimension ratios."""
    qv = q.q
    out: dict[Word, float] = {}
    for x, wx in mu.weights.items():
        lx = log_dim_q(x, qv)
        for y, wy in eta.weights.items():
            ly = log_dim_q(y, qv)
            for z in fusion_summands(x, y):
                p = wx * wy * math.exp(log_dim_q(z, qv) - lx - ly)
                out[z] = out.get(z, 0.0) + p
    total = math.fsum(out.values())
    return ProbMeasure({w: p / total for w, p in out.items()})


def convolution_power(mu: ProbMeasure, n: int, q: QParam) -> ProbMeasure:
    out = ProbMeasure.point_mass(EPSILON)
    for _ in range(n):
        out = convolve(out, mu, q)
    return out


class BudgetExceeded(RuntimeError):
    pass


@dataclass
class TruncatedKernel:
    """Exact k-step probabilities, k <= horizon, on a closed reachable set."""

    start_words: tuple[Word, ...]
    horizon: int
    states: list[Word]
    rows: dict[Word, TransitionRow]
    # steps[k][x] is the distribution of the walk after k steps from x
    steps: list[dict[Word, dict[Word, float]]] = field(repr=False, default_factory=list)

    def p(self, k: int, x: Word, y: Word) -> float:
        return self.steps[k].get(x, {}).get(y, 0.0)


def n_step(
    starts: set[Word] | list[Word],
    n: int,
    mu: ProbMeasure,
    q: QParam,
    max_states: int = 200_000,
) -> TruncatedKernel:
    """Exact k-step kernels for k <= n from the given start set.

    The reachable closure within n steps is computed first so that no
    probability leaks; the state budget guards against blowup.
    """
    starts = sorted(set(starts))
    frontier = list(starts)
    rows: dict[Word, TransitionRow] = {}
    reachable = set(starts)
    for _ in range(n):
        new_frontier = []
        for x in frontier:
            if x in rows:
                continue
            row = transition_row(x, mu, q)
            rows[x] = row
            for y in row.entries:
                if y not in reachable:
                    reachable.add(y)
                    new_frontier.append(y)
            if len(reachable) > max_states:
                raise BudgetExceeded(
                    f"reachable set exceeded {max_states} states at horizon {n}"
                )
        frontier = new_frontier
    # rows for every state reached at the final step are not needed, but the
    # states at depth < n all have rows now
    steps: list[dict[Word, dict[Word, float]]] = [
        {x: {x: 1.0} for x in starts}
    ]
    for _ in range(n):
        prev = steps[-1]
        nxt: dict[Word, dict[Word, float]] = {}
        for x, dist in prev.items():
            acc: dict[Word, float] = {}
            for y, p in dist.items():
                for z, pz in rows[y].entries.items():
                    acc[z] = acc.get(z, 0.0) + p * pz
            nxt[x] = acc
        steps.append(nxt)
    return TruncatedKernel(tuple(starts), n, sorted(reachable), rows, steps)


def rho(mu: ProbMeasure, q: QParam) -> float:
    """The transience constant: sum of mu(y) dim_min(y)/dim_q(y), in (0, 1)."""
    if mu.weights.get(EPSILON, 0.0) >= 1.0 - 1e-15:
        raise ValueError("the point mass at the empty word defines no transient walk")
    return math.fsum(
        w * dim_q(y, Q_TO_ONE).linear / dim_q(y, q).linear
        for y, w in mu.weights.items()
    )


# --- reproducible sampling (SplitMix64 streams) ---

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix64(z: int) -> int:
    z = z & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


class SplitMix64:
    """Counter-based 64-bit generator; streams derive from (seed, stream)."""

    def __init__(self, seed: int, stream: int = 0):
        self.state = _mix64(_mix64(seed & _MASK) ^ _mix64((stream + 1) & _MASK))

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN) & _MASK
        return _mix64(self.state)

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))


def _sample_from_row(row: TransitionRow, u: float) -> Word:
    acc = 0.0
    items = sorted(row.entries.items())
    for y, p in items:
        acc += p
        if u < acc:
            return y
    return items[-1][0]


def sample_path(
    x: Word,
    steps: int,
    mu: ProbMeasure,
    q: QParam,
    seed: int,
    _row_cache: dict[Word, TransitionRow] | None = None,
) -> list[Word]:
    """Sample a trajectory of the walk, reproducible from the seed."""
    rng = SplitMix64(seed)
    cache = _row_cache if _row_cache is not None else {}
    path = [x]
    cur = x
    for _ in range(steps):
        row = cache.get(cur)
        if row is None:
            row = transition_row(cur, mu, q)
            cache[cur] = row
        cur = _sample_from_row(row, rng.uniform())
        path.append(cur)
    return path


def is_generating(mu: ProbMeasure, q: QParam, horizon: int = 20, word_len: int = 2) -> bool:
    """Bounded-horizon reachability check: every pair of words of length at
    most word_len mutually reachable within the horizon."""
    from .words import all_words

    targets = list(all_words(word_len))
    kern = n_step(set(targets), horizon, mu, q)
    for x in targets:
        for y in targets:
            if x == y:
                continue
            if not any(kern.p(k, x, y) > 0 for k in range(1, horizon + 1)):
                return False
    return True
