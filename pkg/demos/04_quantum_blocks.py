"""The block Markov operator and its boundary fixed points.

The quantum version of the walk acts on families of matrices indexed by
words.  On scalar (central) elements it reduces exactly to the classical
kernel; boundary elements — compatible families extending one matrix along
the compression maps — are approximately fixed, with a defect that decays
along the cone.  Finally the iterated operator's limit at the root factors
into a state value times a boundary cylinder mass.

Run:  python3 demos/04_quantum_blocks.py
"""

import numpy as np

from freewalk.blocks import (
    BlockElement,
    TruncationPolicy,
    boundary_element,
    dirichlet_profile,
    markov_apply,
    omega_infinity_check,
)
from freewalk.qdims import QParam
from freewalk.tl import TLContext
from freewalk.walk import ProbMeasure, transition_row
from freewalk.words import Word

q = QParam(0.5)
mu = ProbMeasure.uniform_letters()
ctx = TLContext(q)

print("== central elements: quantum operator == classical kernel ==")
out = markov_apply(BlockElement.indicator(Word("ab")), mu, ctx,
                   TruncationPolicy(radius=5), targets=[Word("a")])
print(f"  block at 'a' of P(1_ab):      {out.scalar_at(Word('a')):.10f}")
print(f"  classical p(a, ab):           {transition_row(Word('a'), mu, q)(Word('ab')):.10f}")

print("\n== boundary elements are asymptotically harmonic ==")
rng = np.random.default_rng(0)
a = rng.standard_normal((2, 2))
a = a + a.T
prof = dirichlet_profile(Word("a"), a, [Word("a"), Word("b")], [2, 4, 6], ctx)
for length, v in zip(prof.lengths, prof.values):
    print(f"  defect at cone depth {length}: {v:.3e}")
print(f"  two-form expansion identity error: {prof.two_form_error:.1e}")

print("\n== the limit at the root factors ==")
rep = omega_infinity_check(Word("a"), a, ctx, mu, samples=100_000, seed=0)
print(f"  iterated-operator limit:  {rep.lhs:+.5f}")
print(f"  state x cylinder mass:    {rep.rhs:+.5f}  "
      f"(+- {rep.tolerance:.5f})")
print(f"  state value psi(a) = {rep.psi_value:+.5f}, "
      f"cylinder mass = {rep.nu_value:.5f}")
