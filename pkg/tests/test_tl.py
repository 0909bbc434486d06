import math

import numpy as np
import pytest

from freewalk.qdims import QParam, dim_min, dim_q
from freewalk.tl import (
    ChannelError,
    StrandBudgetError,
    TLContext,
    approx_estimates,
    admissible_tuples,
    build_cups,
    cp_psi_map,
    d_circle,
    operator_norm,
    state_psi,
    weighted_partial_trace,
)
from freewalk.words import Word, all_words, fusion_summands

Q = QParam(0.5)


@pytest.fixture(scope="module")
def ctx():
    return TLContext(Q)


def _zigzag(cap, cup, delta):
    worst = 0.0
    for i in range(2):
        v = np.zeros(2)
        v[i] = 1.0
        out = np.einsum("pq,pqr->r", cap.reshape(2, 2),
                        np.einsum("p,qr->pqr", v, cup.reshape(2, 2)))
        worst = max(worst, float(np.abs(out - v / delta).max()))
    return worst


def test_cups_zigzag_and_norm():
    for qv in (0.3, 0.5, 0.7):
        cp = build_cups(QParam(qv))
        delta = qv + 1 / qv
        assert np.linalg.norm(cp.t) == pytest.approx(1.0, abs=1e-14)
        assert np.linalg.norm(cp.s) == pytest.approx(1.0, abs=1e-14)
        assert _zigzag(cp.t, cp.s, delta) < 1e-12
        assert _zigzag(cp.s, cp.t, delta) < 1e-12


def test_compression_identity_fixes_q_convention():
    cp = build_cups(Q)
    rng = np.random.default_rng(0)
    qmat = np.diag([Q.q, 1.0 / Q.q])
    for _ in range(5):
        a = rng.standard_normal((2, 2))
        lhs = cp.t @ np.kron(a, np.eye(2)) @ cp.t
        assert lhs == pytest.approx(np.trace(qmat @ a) / np.trace(qmat),
                                    abs=1e-12)


def test_jones_wenzl_defining_properties(ctx):
    assert np.array_equal(ctx.jones_wenzl(1), np.eye(2))
    for n in range(2, 8):
        f = ctx.jones_wenzl(n)
        assert np.abs(f @ f - f).max() < 1e-10
        assert np.abs(f - f.T.conj()).max() < 1e-10
        assert ctx.jw_isometry(n).shape == (2 ** n, n + 1)
        for i in range(n - 1):
            assert np.abs(ctx.cup_generator(n, i) @ f).max() < 1e-10


def test_strand_budget_enforced():
    small = TLContext(Q, strand_budget=4)
    with pytest.raises(StrandBudgetError):
        small.jw_isometry(5)
    with pytest.raises(StrandBudgetError):
        small.fusion_isometry(Word("aaa"), Word("bbb"), Word("aaabbb"))


def test_word_space_invariants(ctx):
    for w in all_words(8, 1):
        ws = ctx.word_space(w)
        emb = ws.embedding
        assert emb.shape == (2 ** len(w), dim_min(w))
        if len(w) <= 6:
            assert np.abs(emb.T @ emb - np.eye(dim_min(w))).max() < 1e-12
            tq = float(np.trace(ws.qop))
            assert tq == pytest.approx(dim_q(w, Q).linear, rel=1e-9)
            assert tq == pytest.approx(ws.trace_q, rel=1e-12)
            tq_inv = float(np.trace(np.linalg.inv(ws.qop)))
            assert tq_inv == pytest.approx(tq, rel=1e-9)


def test_fusion_isometry_cases(ctx):
    # irreducible tensor: plain identity inclusion
    v = ctx.fusion_isometry(Word("a"), Word("a"), Word("aa"))
    assert np.abs(v - np.eye(4)).max() < 1e-12
    # full cancellation: the normalized cup
    v = ctx.fusion_isometry(Word("a"), Word("b"), Word(""))
    assert v.shape == (4, 1)
    assert np.abs(v.T @ v - 1.0).max() < 1e-12
    # self-validating middle channel
    v = ctx.fusion_isometry(Word("ab"), Word("ab"), Word("ab"))
    assert np.abs(v.T.conj() @ v - np.eye(3)).max() < 1e-10
    with pytest.raises(ChannelError):
        ctx.fusion_isometry(Word("a"), Word("a"), Word("ab"))


def test_plain_inclusion_when_no_cancellation(ctx):
    # r empty and repeated junction letter: H_xy sits inside H_x (x) H_y and
    # V is that inclusion in coordinates
    x, y = Word("ab"), Word("ba")
    v = ctx.fusion_isometry(x, y, x * y)
    wxy = ctx.embedding(x * y)
    amb = np.kron(ctx.embedding(x), ctx.embedding(y)) @ v
    assert np.abs(amb - wxy).max() < 1e-10


def test_channel_completeness_and_orthogonality(ctx):
    for xs, ys in (("ab", "ab"), ("aab", "ba"), ("aa", "aa"), ("abab", "ba")):
        x, y = Word(xs), Word(ys)
        d = dim_min(x) * dim_min(y)
        projs = [ctx.channel_projection(x, y, z)
                 for z in fusion_summands(x, y)]
        total = sum(projs)
        assert np.abs(total - np.eye(d)).max() < 1e-9
        for i in range(len(projs)):
            for j in range(i + 1, len(projs)):
                assert np.abs(projs[i] @ projs[j]).max() < 1e-9


def test_gauge_invariance_of_projections():
    plain = TLContext(Q)
    gauged = TLContext(Q, random_gauge=True, gauge_seed=7)
    for xs, ys in (("ab", "ab"), ("aab", "ba")):
        x, y = Word(xs), Word(ys)
        for z in fusion_summands(x, y):
            p1 = plain.channel_projection(x, y, z)
            p2 = gauged.channel_projection(x, y, z)
            assert np.abs(p1 - p2).max() < 1e-12


def test_cp_map_properties(ctx):
    rng = np.random.default_rng(2)
    x, y, z = Word("a"), Word("b"), Word("ab")
    a = rng.standard_normal((2, 2))
    assert np.abs(cp_psi_map(x, y, np.eye(2), ctx)
                  - np.eye(dim_min(x * y))).max() < 1e-12
    c1 = cp_psi_map(x * y, z, cp_psi_map(x, y, a, ctx), ctx)
    c2 = cp_psi_map(x, y * z, a, ctx)
    assert np.abs(c1 - c2).max() < 1e-10
    pos = rng.standard_normal((2, 2))
    pos = pos @ pos.T + 0.1 * np.eye(2)
    ev = np.linalg.eigvalsh(cp_psi_map(x, y, pos, ctx))
    assert ev.min() >= -1e-10


def test_state_examples_and_kms(ctx):
    assert state_psi(Word("ab"), np.eye(3), ctx) == pytest.approx(1.0)
    assert ctx.word_space(Word("a")).trace_q == pytest.approx(2.5)
    rng = np.random.default_rng(3)
    ws = ctx.word_space(Word("aab"))
    a = rng.standard_normal((6, 6))
    b = rng.standard_normal((6, 6))
    qx = ws.qop
    kms = ws.state(b @ qx @ a @ np.linalg.inv(qx))
    assert ws.state(a @ b) == pytest.approx(kms, abs=1e-10)


def test_partial_trace_scalarity(ctx):
    x, y = Word("ab"), Word("a")
    for z in fusion_summands(x, y):
        p = ctx.channel_projection(x, y, z)
        m = weighted_partial_trace(p, dim_min(x), y, ctx)
        lam = np.trace(m) / m.shape[0]
        assert np.abs(m - lam * np.eye(m.shape[0])).max() < 1e-8
        expect = dim_q(z, Q).linear / (dim_q(x, Q).linear * dim_q(y, Q).linear)
        assert lam == pytest.approx(expect, abs=1e-10)


def test_operator_norm_against_dense():
    rng = np.random.default_rng(5)
    for shape in ((6, 4), (16, 16), (40, 8)):
        m = rng.standard_normal(shape)
        assert operator_norm(m) == pytest.approx(
            np.linalg.norm(m, 2), rel=1e-5)
    assert operator_norm(np.zeros((5, 5))) == 0.0


def test_d_circle_bounds():
    rng = np.random.default_rng(6)
    v = rng.standard_normal((6, 3))
    w = rng.standard_normal((6, 3))
    d, bracket = d_circle(v, w)
    assert d <= operator_norm(v - w) + 1e-9
    assert bracket[0] <= bracket[1]
    # exact phase multiple is recovered
    d2, _ = d_circle(v, (0.6 + 0.8j) * v)
    assert d2 < 1e-8


def test_estimates_zero_for_decomposable_y(ctx):
    rep = approx_estimates(Word("a"), Word("aa"), Word("a"), Word(""), ctx)
    assert max(rep.lhs1, rep.lhs2, rep.lhs_variant) < 1e-10
    rep = approx_estimates(Word("ab"), Word("abb"), Word("b"), Word("a"), ctx)
    assert max(rep.lhs1, rep.lhs2, rep.lhs_variant) < 1e-10


def test_estimates_decay_along_alternating_y(ctx):
    r1 = approx_estimates(Word("a"), Word("b"), Word("a"), Word("b"), ctx)
    r3 = approx_estimates(Word("a"), Word("bab"), Word("a"), Word("b"), ctx)
    assert r1.lhs1 > 0.1 and r1.lhs2 > 0.1
    assert r3.lhs1 <= r1.lhs1 * Q.q ** 2 * 1.5
    assert r3.lhs2 <= r1.lhs2 * Q.q ** 2 * 1.5
    assert r1.q_pow_y == pytest.approx(0.5)


def test_variant_positive_with_multiple_paths(ctx):
    rep = approx_estimates(Word("a"), Word("b"), Word("a"), Word("a"), ctx)
    assert rep.lhs_variant > 0.05
    assert rep.lhs_variant <= rep.lhs2 + 1e-6


def test_estimates_gauge_invariance():
    plain = TLContext(Q)
    gauged = TLContext(Q, random_gauge=True, gauge_seed=11)
    for tup in (("a", "b", "a", "b"), ("a", "bab", "a", "b"),
                ("ab", "aa", "b", "a")):
        x, y, z, r = (Word(s) for s in tup)
        r1 = approx_estimates(x, y, z, r, plain)
        r2 = approx_estimates(x, y, z, r, gauged)
        assert abs(r1.lhs1 - r2.lhs1) < 1e-9
        assert abs(r1.lhs2 - r2.lhs2) < 1e-9
        assert abs(r1.lhs_variant - r2.lhs_variant) < 1e-9


def test_admissible_tuples_budget_and_dedup():
    tuples = list(admissible_tuples(4))
    for x, y, z, r in tuples:
        assert len(x) + len(y) + len(z) + 2 * len(r) <= 4
        joined = x.letters + y.letters + z.letters + r.letters
        assert not joined.startswith("b")
    assert len(set(tuples)) == len(tuples)
