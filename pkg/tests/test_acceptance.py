"""Acceptance suite: twelve end-to-end criteria, one test each.

Every test prints a single ``CRITERION nn: PASS/FAIL`` line directly to the
real stdout (bypassing capture) and then asserts, so the full run leaves an
auditable scorecard.  Tolerances are pinned inline; statistical checks use
3-sigma bands from the reported standard errors.

Criterion 8 notes: the exhaustive zero/decay sweep is run in full at strand
budget 8 and by seeded random sampling at budgets 10-12; the complete budget-12
enumeration (hundreds of thousands of tuples at minutes-per-thousand) does not
fit the runtime budget on one core.  The sampling seeds are fixed, so the
covered tuples are reproducible.
"""

import math
import random

import numpy as np
import pytest

from freewalk.blocks import (
    BlockElement,
    TruncationPolicy,
    dirichlet_profile,
    markov_apply,
    omega_infinity_check,
)
from freewalk.boundary import (
    Cylinder,
    convolutie_check,
    estimate_hitting_many,
)
from freewalk.qdims import (
    AlternatingTail,
    QParam,
    dim_min,
    dim_q,
    finite_tail_ratio,
    martin_ratio_limit,
)
from freewalk.tl import TLContext, approx_estimates, estimate_scan
from freewalk.walk import (
    ProbMeasure,
    convolve,
    n_step,
    rho,
    transition_row,
)
from freewalk.words import (
    EPSILON,
    Word,
    all_words,
    alternating_word,
    fusion_summands,
    is_alternating,
)

Q5 = QParam(0.5)
MU = ProbMeasure.uniform_letters()
N_PATHS = 100_000


@pytest.fixture
def report(capsys):
    """Print one scorecard line per criterion outside pytest's capture, then
    assert."""

    def _report(num: int, ok: bool, detail: str) -> None:
        line = f"CRITERION {num:02d}: {'PASS' if ok else 'FAIL'} - {detail}"
        with capsys.disabled():
            print(f"\n{line}", flush=True)
        assert ok, line

    return _report


def test_criterion_01_fusion_dimension_consistency(report):
    worst = 0.0
    for qv in (0.3, 0.5, 0.7):
        q = QParam(qv)
        for x in all_words(6):
            dx = dim_q(x, q).linear
            for y in all_words(6):
                total = math.fsum(dim_q(z, q).linear
                                  for z in fusion_summands(x, y))
                ref = dx * dim_q(y, q).linear
                worst = max(worst, abs(total - ref) / ref)
    ok = worst <= 1e-10
    report(1, ok, f"fusion/dimension identity |x|,|y|<=6, three q values, "
                  f"worst rel err {worst:.2e} (tol 1e-10)")


def test_criterion_02_stochasticity_and_transience(report):
    worst_row = 0.0
    for x in all_words(6):
        s = math.fsum(transition_row(x, MU, Q5).entries.values())
        worst_row = max(worst_row, abs(s - 1.0))
    rows_ok = worst_row <= 1e-12

    r = rho(MU, Q5)
    rho_ok = abs(r - 2.0 / (Q5.q + 1.0 / Q5.q)) <= 1e-12
    kern = n_step([EPSILON], 12, MU, Q5)
    margin = max(kern.p(n, EPSILON, EPSILON) - r ** n for n in range(1, 13))
    trans_ok = margin <= 1e-15
    ok = rows_ok and rho_ok and trans_ok
    report(2, ok, f"rows sum to 1 within {worst_row:.2e} (tol 1e-12); "
                  f"return probability under rho^n for n<=12 "
                  f"(max excess {margin:.2e})")


def test_criterion_03_convolution_law(report):
    eta = ProbMeasure.from_strings({"e": 0.1, "a": 0.3, "ab": 0.4, "ba": 0.2})
    conv = convolve(MU, eta, Q5)
    worst = 0.0
    for x in all_words(3):
        direct = transition_row(x, conv, Q5)
        composed: dict = {}
        for y, p in transition_row(x, MU, Q5).entries.items():
            for z, pz in transition_row(y, eta, Q5).entries.items():
                composed[z] = composed.get(z, 0.0) + p * pz
        for z in set(direct.entries) | set(composed):
            worst = max(worst, abs(direct(z) - composed.get(z, 0.0)))
    ok = worst <= 1e-12
    report(3, ok, f"convolved kernel equals composed kernels, worst entry "
                  f"diff {worst:.2e} (tol 1e-12)")


def test_criterion_04_classical_harmonicity(report):
    cylinders = [Cylinder(z) for z in all_words(2, 1)]
    starts = list(all_words(2))
    needed = set(starts)
    rows = {x: transition_row(x, MU, Q5) for x in starts}
    for row in rows.values():
        needed.update(row.entries)
    est = {}
    max_unresolved_frac = 0.0
    for i, w in enumerate(sorted(needed)):
        est[w] = estimate_hitting_many(w, cylinders, N_PATHS, MU, Q5,
                                       seed=9000 + i)
        any_e = next(iter(est[w].values()))
        frac = any_e.unresolved / (any_e.samples + any_e.unresolved)
        max_unresolved_frac = max(max_unresolved_frac, frac)

    worst_sigma = 0.0
    for x in starts:
        for c in cylinders:
            lhs = est[x][c.prefix]
            rhs, var = 0.0, 0.0
            for y, p in rows[x].entries.items():
                e = est[y][c.prefix]
                rhs += p * e.value
                var += (p * e.stderr) ** 2
            sigma = math.sqrt(lhs.stderr ** 2 + var)
            worst_sigma = max(worst_sigma, abs(lhs.value - rhs) / sigma)
    ok = worst_sigma <= 3.0 and max_unresolved_frac < 0.01
    report(4, ok, f"mean-value property of hitting masses at N={N_PATHS}, "
                  f"worst residual {worst_sigma:.2f} sigma (limit 3); "
                  f"unresolved fraction {max_unresolved_frac:.2%} (< 1%)")


def test_criterion_05_boundary_convolution_identity(report):
    worst = 0.0
    for i, (xs, zs) in enumerate((("a", "ab"), ("b", "ba"))):
        rep = convolutie_check(Word(xs), Cylinder(Word(zs)), N_PATHS, MU, Q5,
                               seed=500 + i)
        worst = max(worst, rep.residual / (3.0 * rep.combined_stderr))
    ok = worst <= 1.0
    report(5, ok, f"hitting mass equals its convolution expansion at "
                  f"N={N_PATHS}; worst residual {worst:.2f} of the 3-sigma "
                  f"band")


def test_criterion_06_martin_ratio_limits(report):
    rng = random.Random(0)
    worst = 0.0
    for case in range(50):
        first = "ab"[case % 2]  # both tail parities, 25 cases each
        q = QParam(rng.choice([0.3, 0.5, 0.7]))
        x = Word("".join(rng.choice("ab") for _ in range(rng.randint(0, 5))))
        y = Word("".join(rng.choice("ab") for _ in range(rng.randint(0, 5))))
        tail = AlternatingTail(first)
        lim = martin_ratio_limit(x, y, tail, q)
        fin = finite_tail_ratio(x, y, tail, 60, q)
        worst = max(worst, abs(fin - lim) / abs(lim))
    ok = worst <= 1e-9
    report(6, ok, f"50 random finite-depth ratio limits at n=60, worst rel "
                  f"err {worst:.2e} (tol 1e-9)")


def test_criterion_07_diagrammatic_layer(report):
    ctx = TLContext(Q5)
    delta = Q5.q + 1.0 / Q5.q
    t, s = ctx.cups.t.reshape(2, 2), ctx.cups.s.reshape(2, 2)
    zz = 0.0
    for cap, cup in ((t, s), (s, t)):
        for i in range(2):
            v = np.zeros(2)
            v[i] = 1.0
            out = np.einsum("pq,pqr->r", cap, np.einsum("p,qr->pqr", v, cup))
            zz = max(zz, float(np.abs(out - v / delta).max()))
    zig_ok = zz <= 1e-12

    jw_err = 0.0
    for n in range(2, 8):
        f = ctx.jones_wenzl(n)
        jw_err = max(jw_err, float(np.abs(f @ f - f).max()))
        for i in range(n - 1):
            jw_err = max(jw_err, float(np.abs(ctx.cup_generator(n, i) @ f).max()))
    jw_ok = jw_err <= 1e-10

    tr_err = 0.0
    for w in all_words(10, 1):
        if w.letters[0] == "b":
            continue  # letter swap maps each word space to an identical copy
        ws = ctx.word_space(w)
        ref = dim_q(w, Q5).linear
        tr_err = max(tr_err, abs(float(np.trace(ws.qop)) - ref) / ref)
    tr_ok = tr_err <= 1e-9

    comp_err = 0.0
    for x in all_words(8):
        for y in all_words(8 - len(x)):
            if (x.letters + y.letters).startswith("b"):
                continue
            total = sum(ctx.channel_projection(x, y, z)
                        for z in fusion_summands(x, y))
            d = dim_min(x) * dim_min(y)
            comp_err = max(comp_err, float(np.abs(total - np.eye(d)).max()))
    comp_ok = comp_err <= 1e-9

    ok = zig_ok and jw_ok and tr_ok and comp_ok
    report(7, ok, f"zigzag {zz:.1e} (1e-12); projections n<=7 {jw_err:.1e} "
                  f"(1e-10); weighted traces |x|<=10 {tr_err:.1e} (1e-9); "
                  f"channel completeness |x|+|y|<=8 {comp_err:.1e} (1e-9)")


def _random_tuple(rng: random.Random, strands: int):
    """A random admissible (x, y, z, r) with the exact strand total and a
    nontrivially decomposing y."""
    while True:
        lr = rng.randint(0, (strands - 2) // 2)
        rest = strands - 2 * lr
        ly = rng.randint(2, rest)
        lx = rng.randint(0, rest - ly)
        lz = rest - ly - lx
        y = Word("".join(rng.choice("ab") for _ in range(ly)))
        if is_alternating(y):
            continue
        x = Word("".join(rng.choice("ab") for _ in range(lx)))
        z = Word("".join(rng.choice("ab") for _ in range(lz)))
        r = Word("".join(rng.choice("ab") for _ in range(lr)))
        return x, y, z, r


def test_criterion_08_intertwining_estimates(report):
    zero_worst = 0.0
    decay_ok = True
    gauge_worst = 0.0
    for qv in (0.3, 0.5):
        q = QParam(qv)
        ctx = TLContext(q)
        # exhaustive sweep at strand budget 8
        for rep in estimate_scan(8, ctx):
            if len(rep.y) >= 2 and not is_alternating(rep.y):
                zero_worst = max(zero_worst, rep.lhs1, rep.lhs2,
                                 rep.lhs_variant)
        # seeded random tuples at the full budget 12 (exhaustive enumeration
        # at 12 exceeds the runtime budget; seeds make the coverage stable)
        rng = random.Random(8000 + int(qv * 10))
        for strands, count in ((10, 30), (11, 15), (12, 10)):
            for _ in range(count):
                x, y, z, r = _random_tuple(rng, strands)
                rep = approx_estimates(x, y, z, r, ctx)
                zero_worst = max(zero_worst, rep.lhs1, rep.lhs2,
                                 rep.lhs_variant)
        # geometric decay along growing alternating middle words
        for xs, zs, rs in (("a", "a", ""), ("a", "b", ""), ("ab", "a", ""),
                           ("a", "a", "b")):
            for first in "ab":
                prev = None
                for ly in (1, 3, 5):
                    rep = approx_estimates(Word(xs), alternating_word(first, ly),
                                           Word(zs), Word(rs), ctx)
                    if prev is not None:
                        for base, new in ((prev.lhs1, rep.lhs1),
                                          (prev.lhs2, rep.lhs2)):
                            if base >= 1e-9:
                                decay_ok = decay_ok and (
                                    new <= base * qv * qv * 1.5)
                    prev = rep
        # gauge invariance on a subsample
        gauged = TLContext(q, random_gauge=True, gauge_seed=17)
        for tup in (("a", "b", "a", "b"), ("a", "bab", "a", ""),
                    ("ab", "ba", "ab", ""), ("a", "abba", "b", "a")):
            w = [Word(sv) for sv in tup]
            r1 = approx_estimates(*w, ctx)
            r2 = approx_estimates(*w, gauged)
            gauge_worst = max(gauge_worst, abs(r1.lhs1 - r2.lhs1),
                              abs(r1.lhs2 - r2.lhs2),
                              abs(r1.lhs_variant - r2.lhs_variant))
    zero_ok = zero_worst <= 1e-10
    gauge_ok = gauge_worst <= 1e-9
    ok = zero_ok and decay_ok and gauge_ok
    report(8, ok, f"vanishing for decomposable middle words: worst "
                  f"{zero_worst:.1e} (1e-10, exhaustive at 8 strands + "
                  f"seeded samples at 10-12); geometric decay with factor "
                  f"1.5*q^2 {'holds' if decay_ok else 'violated'}; gauge "
                  f"dependence {gauge_worst:.1e} (1e-9)")


def test_criterion_09_quantum_classical_agreement(report):
    ctx = TLContext(Q5)
    trunc = TruncationPolicy(radius=6)
    targets = list(all_words(4))
    worst = 0.0
    for w in all_words(5):
        out = markov_apply(BlockElement.indicator(w), MU, ctx, trunc,
                           targets=targets)
        for x in targets:
            assert out.leak(x) == 0.0
            scalar = out.scalar_at(x, tol=1e-8)
            worst = max(worst, abs(scalar - transition_row(x, MU, Q5)(w)))
    ok = worst <= 1e-8
    report(9, ok, f"block Markov operator on central indicators matches the "
                  f"classical kernel for all |x|<=4, worst diff {worst:.1e} "
                  f"(tol 1e-8)")


def test_criterion_10_quantum_dirichlet_trend(report):
    ctx = TLContext(Q5)
    rng = np.random.default_rng(10)
    steps = [Word("a"), Word("b")]
    decreased = True
    two_err = 0.0
    for _ in range(5):
        a = rng.standard_normal((2, 2))
        a = a + a.T
        prof = dirichlet_profile(Word("a"), a, steps, [2, 6], ctx)
        decreased = decreased and prof.values[1] < prof.values[0]
        two_err = max(two_err, prof.two_form_error)
    ok = decreased and two_err <= 1e-8
    report(10, ok, f"defect of 5 random boundary elements strictly smaller "
                   f"at length 6 than at length 2 "
                   f"({'yes' if decreased else 'no'}); two-form expansion "
                   f"identity {two_err:.1e} (tol 1e-8)")


def test_criterion_11_harmonic_state_limit(report):
    ctx = TLContext(Q5)
    rng = np.random.default_rng(11)
    a = rng.standard_normal((2, 2))
    a = a + a.T
    worst = 0.0
    for i, mat in enumerate((np.eye(2), a)):
        rep = omega_infinity_check(Word("a"), mat, ctx, MU, samples=N_PATHS,
                                   seed=1100 + i)
        worst = max(worst, rep.residual / rep.tolerance)
    ok = worst <= 1.0
    report(11, ok, f"iterated-operator limit equals state times cylinder "
                   f"mass for identity and one random operator, worst "
                   f"residual {worst:.2f} of tolerance (3 sigma + 1e-3)")


def test_criterion_12_worker_determinism(tmp_path, report):
    from freewalk.cli import main

    files = {}
    for workers in (1, 4):
        cfg = tmp_path / f"w{workers}.cfg"
        cfg.write_text('q = 0.5\nmu = {"a": 0.5, "b": 0.5}\nseed = 3\n'
                       f'workers = {workers}\n'
                       'budgets = {"samples": 20000}\n')
        out = tmp_path / f"out{workers}"
        rc = 0
        rc |= main(["harmonic-check", "--x", "a", "--z", "ab",
                    "--config", str(cfg), "--out", str(out)])
        rc |= main(["convolutie-check", "--x", "a", "--z", "ab",
                    "--config", str(cfg), "--out", str(out)])
        rc |= main(["omega-check", "--x0", "a", "--config", str(cfg),
                    "--out", str(out)])
        assert rc == 0
        files[workers] = {p.name: p.read_bytes()
                          for p in sorted(out.iterdir())
                          if not p.name.endswith("meta.json")}
    same = files[1] == files[4]
    ok = same and len(files[1]) == 3
    report(12, ok, f"harmonicity, convolution-identity and limit checks "
                   f"rerun with 1 vs 4 workers produce byte-identical data "
                   f"files ({'yes' if same else 'no'})")
