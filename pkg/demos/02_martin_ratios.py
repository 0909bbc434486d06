"""Ratio limits along boundary rays.

Take two base words x, y and a fixed infinite tail.  The ratio
dim_q(x . tail_n) / dim_q(y . tail_n) converges as the finite tail grows; the
limit depends on how the last run of each base word interacts with the
beginning of the tail.  The closed form is exact; here we watch the finite
ratios converge to it.

Run:  python3 demos/02_martin_ratios.py
"""

from freewalk import (
    AlternatingTail,
    GenericTail,
    QParam,
    Word,
    finite_tail_ratio,
    martin_ratio_limit,
)

q = QParam(0.5)

print("== alternating tail abab... behind x=ab versus y=b ==")
tail = AlternatingTail("a")
lim = martin_ratio_limit(Word("ab"), Word("b"), tail, q)
for n in (2, 6, 12, 24, 48):
    fin = finite_tail_ratio(Word("ab"), Word("b"), tail, n, q)
    print(f"  depth {n:>2}: ratio = {fin:.12f}")
print(f"  limit     : {lim:.12f}")

print("\n== a repeated letter in the tail makes the limit exact at once ==")
gtail = GenericTail(Word("ba"))
lim = martin_ratio_limit(Word("aa"), Word("b"), gtail, q)
fin = finite_tail_ratio(Word("aa"), Word("b"), gtail, 10, q)
print(f"  finite depth 10: {fin:.12f}")
print(f"  limit          : {lim:.12f}")
print("  (the first repeated letter blocks any interaction with the bases,")
print("   so the ratio is constant from that depth on)")
