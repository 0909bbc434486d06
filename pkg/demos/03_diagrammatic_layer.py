"""The operator model behind the quantum walk.

Each word labels a finite-dimensional space cut out of qubit strands by
highest-weight projections; fusing two words corresponds to explicit
isometries between these spaces.  This demo verifies the defining relations
numerically and evaluates the approximate-commutation estimates that decay
geometrically in the length of the middle word.

Run:  python3 demos/03_diagrammatic_layer.py
"""

import numpy as np

from freewalk.qdims import QParam, dim_q
from freewalk.tl import TLContext, approx_estimates
from freewalk.words import Word, alternating_word, fusion_summands

q = QParam(0.5)
ctx = TLContext(q)

print("== weighted traces reproduce quantum dimensions ==")
for s in ("a", "ab", "aab", "abab"):
    w = Word(s)
    tr = float(np.trace(ctx.word_space(w).qop))
    print(f"  Tr Q_{s:<5} = {tr:.10f}   dim_q = {dim_q(w, q).linear:.10f}")

print("\n== channel projections resolve a tensor product ==")
x, y = Word("ab"), Word("ab")
total = 0
for z in fusion_summands(x, y):
    p = ctx.channel_projection(x, y, z)
    r = int(round(float(np.trace(p))))
    total += r
    print(f"  channel {z!s:>5}: rank {r}")
print(f"  ranks sum to {total} = dim(ab) * dim(ab) = 9")

print("\n== approximate commutation decays in the middle word ==")
for n in (1, 3, 5):
    y = alternating_word("b", n)
    rep = approx_estimates(Word("a"), y, Word("a"), Word("b"), ctx)
    print(f"  |y| = {n}:  lhs1 = {rep.lhs1:.3e}   lhs2 = {rep.lhs2:.3e}"
          f"   (q^|y| = {rep.q_pow_y:.3e})")
print("  each extra pair of letters multiplies the norms by about q^2")
