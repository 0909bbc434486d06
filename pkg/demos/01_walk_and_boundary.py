"""A guided tour of the random walk and its boundary.

We walk on the two-letter fusion monoid: states are words in a, b, and a step
fuses the current word with a random letter.  Because the letter can cancel
against the end of the word, the walk can shrink — but it is transient, and
the word's prefix eventually freezes.  The frozen infinite word is the
boundary point; here we estimate where the walk lands.

Run:  python3 demos/01_walk_and_boundary.py
"""

from freewalk import (
    Cylinder,
    ProbMeasure,
    QParam,
    Word,
    EPSILON,
    estimate_hitting_many,
    rho,
    sample_path,
    transition_row,
)
from freewalk.words import all_words

q = QParam(0.5)
mu = ProbMeasure.uniform_letters()

print("== one-step kernel from 'a' ==")
for y, p in sorted(transition_row(Word("a"), mu, q).entries.items()):
    print(f"  a -> {y!s:>4}   p = {p:.4f}")

print(f"\nspectral radius rho = {rho(mu, q):.4f}  (< 1: transient)")

print("\n== a sample trajectory ==")
path = sample_path(EPSILON, 30, mu, q, seed=7)
print("  " + " ".join(str(w) for w in path[:12]) + " ...")
print(f"  length after 30 steps: {len(path[-1])}")

print("\n== where does the walk land?  (100k paths) ==")
cyls = [Cylinder(z) for z in all_words(2, 1)]
ests = estimate_hitting_many(EPSILON, cyls, 100_000, mu, q, seed=1)
for z in sorted(ests):
    e = ests[z]
    print(f"  mass of cylinder {z!s:>3}* : {e.value:.4f} +- {e.stderr:.4f}")
print("  (the two letters are symmetric; deeper cylinders split unevenly,")
print("   weighted by quantum dimensions rather than by counting)")
