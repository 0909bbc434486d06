"""Words of the free monoid on two letters, with involution, prefix calculus,
run factorization and the multiplicity-free fusion product.

Letters are encoded as the characters ``'a'`` and ``'b'``; the empty word is
the empty string.  Words are immutable values with structural equality and a
total order (length first, then lexicographic), so they can be used as keys
in transition kernels and block elements.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import total_ordering
from typing import Iterator

ALPHA = "a"
BETA = "b"
_LETTERS = frozenset((ALPHA, BETA))
_CONJ = {ALPHA: BETA, BETA: ALPHA}


def conjugate_letter(c: str) -> str:
    """Swap the two letters."""
    return _CONJ[c]


@total_ordering
@dataclass(frozen=True)
class Word:
    """A finite word over {a, b}; the empty word is the monoid identity."""

    letters: str = ""

    def __post_init__(self):
        if not set(self.letters) <= _LETTERS:
            raise ValueError(f"invalid letters in word: {self.letters!r}")

    @classmethod
    def parse(cls, text: str) -> "Word":
        """Parse the external syntax: 'a'/'b' sequences, 'e' for the empty word."""
        if text in ("e", ""):
            return cls("")
        return cls(text)

    def __str__(self) -> str:
        return self.letters or "e"

    def __len__(self) -> int:
        return len(self.letters)

    def __iter__(self) -> Iterator[str]:
        return iter(self.letters)

    def __getitem__(self, i):
        return self.letters[i]

    def __lt__(self, other: "Word") -> bool:
        return (len(self.letters), self.letters) < (len(other.letters), other.letters)

    def __mul__(self, other: "Word") -> "Word":
        return Word(self.letters + other.letters)

    @property
    def first(self) -> str:
        if not self.letters:
            raise ValueError("empty word has no first letter")
        return self.letters[0]

    @property
    def last(self) -> str:
        if not self.letters:
            raise ValueError("empty word has no last letter")
        return self.letters[-1]


EPSILON = Word("")


def involution(w: Word) -> Word:
    """Reverse the letter sequence and conjugate each letter.

    Antimultiplicative and involutive; corresponds to the contragredient.
    """
    return Word("".join(_CONJ[c] for c in reversed(w.letters)))


def split_at(w: Word, n: int) -> tuple[Word, Word]:
    """Return (head, tail) with head the first n letters and tail the rest."""
    if not 0 <= n <= len(w):
        raise ValueError(f"split index {n} out of range for word of length {len(w)}")
    return Word(w.letters[:n]), Word(w.letters[n:])


def head(w: Word, n: int) -> Word:
    return split_at(w, n)[0]


def tail(w: Word, n: int) -> Word:
    return split_at(w, n)[1]


def common_prefix(x: Word, y: Word) -> int:
    """Largest n such that the length-n prefixes of x and y agree."""
    n = 0
    for cx, cy in zip(x.letters, y.letters):
        if cx != cy:
            break
        n += 1
    return n


def is_alternating(w: Word) -> bool:
    """True iff no two adjacent letters are equal (the indecomposable words)."""
    return all(w.letters[i] != w.letters[i + 1] for i in range(len(w) - 1))


def runs(w: Word) -> tuple[Word, ...]:
    """Unique factorization into maximal alternating (indecomposable) subwords.

    Consecutive runs share their junction letter: the last letter of one run
    equals the first letter of the next.  Concatenation restores the word.
    """
    if not w.letters:
        return ()
    pieces = []
    start = 0
    for i in range(1, len(w)):
        if w.letters[i] == w.letters[i - 1]:
            pieces.append(Word(w.letters[start:i]))
            start = i
    pieces.append(Word(w.letters[start:]))
    return tuple(pieces)


def run_lengths(w: Word) -> tuple[int, ...]:
    return tuple(len(r) for r in runs(w))


def alternating_word(first_letter: str, n: int) -> Word:
    """The alternating word of length n starting with the given letter."""
    if first_letter not in _LETTERS:
        raise ValueError(f"invalid letter: {first_letter!r}")
    other = _CONJ[first_letter]
    return Word("".join(first_letter if i % 2 == 0 else other for i in range(n)))


@dataclass(frozen=True)
class FusionTerm:
    """One summand of a tensor product: the term x0*y0 obtained by cancelling
    the middle word z (x = x0 z, y = involution(z) y0)."""

    summand: Word
    cancelled: Word


def fuse(x: Word, y: Word) -> list[FusionTerm]:
    """Decompose the tensor product of x and y into its irreducible summands.

    Enumerates every z that is simultaneously a suffix of x and, after
    conjugate-reversal, a prefix of y.  The cancellation chain grows letter by
    letter and stops at the first mismatch, so the decomposition is
    multiplicity-free with all summand lengths distinct.  Terms are ordered by
    increasing length of the cancelled word.
    """
    terms = []
    limit = min(len(x), len(y))
    for m in range(limit + 1):
        if m > 0:
            # letter m of the chain: last m letters of x, conjugated and
            # reversed, must be the length-m prefix of y
            if _CONJ[x.letters[len(x) - m]] != y.letters[m - 1]:
                break
        x0 = x.letters[: len(x) - m]
        y0 = y.letters[m:]
        terms.append(FusionTerm(Word(x0 + y0), Word(x.letters[len(x) - m:])))
    return terms


def fusion_summands(x: Word, y: Word) -> list[Word]:
    return [t.summand for t in fuse(x, y)]


def all_words(max_len: int, min_len: int = 0) -> Iterator[Word]:
    """All words with min_len <= length <= max_len, in length-lex order."""
    from itertools import product

    for n in range(min_len, max_len + 1):
        for tup in product((ALPHA, BETA), repeat=n):
            yield Word("".join(tup))
