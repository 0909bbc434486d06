"""q-integers, quantum dimensions and Martin-kernel ratio limits.

Quantum dimensions grow like q^{-|w|}, so every ratio that involves long
words is assembled in log space; the linear value is kept alongside and may
overflow to inf without harming ratio arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .words import Word, conjugate_letter, run_lengths, runs


class _ClassicalLimit:
    """Marker for the q -> 1 evaluation mode (carrier-space dimensions)."""

    def __repr__(self):
        return "Q_TO_ONE"


Q_TO_ONE = _ClassicalLimit()


@dataclass(frozen=True)
class QParam:
    """Deformation parameter, strictly between 0 and 1 (so dim_q(a) > 2)."""

    q: float

    def __post_init__(self):
        if not 0.0 < self.q < 1.0:
            raise ValueError(f"q must lie in the open interval (0, 1), got {self.q}")


@dataclass(frozen=True)
class DimValue:
    """A positive dimension value carried both linearly and in log space."""

    linear: float
    log: float


@lru_cache(maxsize=None)
def log_q_int(n: int, q: float) -> float:
    """log of [n]_q = q^{n-1} + q^{n-3} + ... + q^{1-n}, computed stably."""
    if n < 1:
        raise ValueError(f"q-integer needs n >= 1, got {n}")
    # [n]_q = q^{1-n} (1 - q^{2n}) / (1 - q^2)
    return (1 - n) * math.log(q) + math.log1p(-q ** (2 * n)) - math.log1p(-q * q)


def q_int(n: int, q) -> DimValue:
    """The q-integer [n]_q; at the q -> 1 marker this is plain n."""
    if n < 1:
        raise ValueError(f"q-integer needs n >= 1, got {n}")
    if q is Q_TO_ONE:
        return DimValue(float(n), math.log(n))
    lg = log_q_int(n, q.q)
    return DimValue(math.exp(lg), lg)


def log_dim_q(w: Word, q: float) -> float:
    """log of the quantum dimension: product over runs of [runlength + 1]_q."""
    return sum(log_q_int(m + 1, q) for m in run_lengths(w))


def dim_q(w: Word, q) -> DimValue:
    """Quantum dimension of a word; at q -> 1 this is the carrier dimension."""
    if q is Q_TO_ONE:
        d = dim_min(w)
        return DimValue(float(d), math.log(d) if d > 0 else 0.0)
    lg = log_dim_q(w, q.q)
    return DimValue(math.exp(lg), lg)


def dim_min(w: Word) -> int:
    """Carrier Hilbert space dimension: product over runs of (runlength + 1)."""
    out = 1
    for m in run_lengths(w):
        out *= m + 1
    return out


@dataclass(frozen=True)
class GenericTail:
    """Infinite tail z = head (x) z2: the head is a completed indecomposable
    block, after which the ratio is eventually constant."""

    head: Word

    def __post_init__(self):
        if len(self.head) == 0:
            raise ValueError("generic tail needs a nonempty head word")


@dataclass(frozen=True)
class AlternatingTail:
    """The purely alternating infinite tail starting with the given letter."""

    first_letter: str

    def __post_init__(self):
        if self.first_letter not in ("a", "b"):
            raise ValueError(f"invalid letter: {self.first_letter!r}")


TailSpec = GenericTail | AlternatingTail


def _merge_split(x: Word, tail_letter: str) -> tuple[Word, Word]:
    """Split x = x0 (x) x1 where x1 is the longest alternating suffix whose
    last letter is the conjugate of the tail's first letter (the part that
    merges with the alternating tail); x1 may be empty."""
    rs = runs(x)
    if rs and rs[-1].last == conjugate_letter(tail_letter):
        x1 = rs[-1]
        x0 = Word(x.letters[: len(x) - len(x1)])
        return x0, x1
    return x, Word("")


def martin_ratio_limit(x: Word, y: Word, tail: TailSpec, q: QParam) -> float:
    """Limit of dim_q(x [z]_n) / dim_q(y [z]_n) along the infinite word z.

    For a generic tail the ratio is eventually constant and equals
    dim_q(x z1)/dim_q(y z1) with z1 the stabilizing head.  For the alternating
    tail, the run of each word that merges with the tail contributes
    q^{|y1| - |x1|} against the ratio of the detached parts.
    """
    qv = q.q
    if isinstance(tail, GenericTail):
        z1 = tail.head
        return math.exp(log_dim_q(x * z1, qv) - log_dim_q(y * z1, qv))
    x0, x1 = _merge_split(x, tail.first_letter)
    y0, y1 = _merge_split(y, tail.first_letter)
    return math.exp(
        log_dim_q(x0, qv) - log_dim_q(y0, qv) + (len(y1) - len(x1)) * math.log(qv)
    )


def finite_tail_ratio(x: Word, y: Word, tail: TailSpec, n: int, q: QParam) -> float:
    """The finite-n ratio dim_q(x [z]_n)/dim_q(y [z]_n); oracle for the limit."""
    from .words import alternating_word

    if isinstance(tail, GenericTail):
        z1 = tail.head
        # continue past the head with an alternating stretch glued at the
        # junction letter, so that z = z1 (x) z2 as required
        cont = alternating_word(z1.last, max(0, n - len(z1)))
        zn = Word((z1.letters + cont.letters)[:n])
    else:
        zn = alternating_word(tail.first_letter, n)
    qv = q.q
    return math.exp(log_dim_q(x * zn, qv) - log_dim_q(y * zn, qv))
