import math

import numpy as np
import pytest

from freewalk.boundary import (
    Cylinder,
    EstimationError,
    StoppingPolicy,
    atom_scan,
    convolutie_check,
    estimate_hitting,
    estimate_hitting_many,
    poisson_integral_classical,
    sample_boundary_prefix,
    sample_boundary_prefixes,
)
from freewalk.qdims import QParam
from freewalk.walk import ProbMeasure, convolution_power, transition_row
from freewalk.words import EPSILON, Word, all_words

Q = QParam(0.5)
MU = ProbMeasure.uniform_letters()
N = 20_000


def test_cylinder_needs_prefix():
    with pytest.raises(ValueError):
        Cylinder(EPSILON)


def test_point_mass_walk_resolves_to_alpha_powers():
    da = ProbMeasure.point_mass(Word("a"))
    w = sample_boundary_prefix(EPSILON, 5, da, Q, seed=3)
    assert w == Word("aaaaa")
    est = estimate_hitting(EPSILON, Cylinder(Word("aaa")), 50, da, Q, seed=3)
    assert est.value == 1.0 and est.stderr == 0.0


def test_resolved_prefixes_partition():
    batch = sample_boundary_prefixes(EPSILON, 1, N, MU, Q, seed=5)
    na = batch.cylinder_mask(Word("a")).sum()
    nb = batch.cylinder_mask(Word("b")).sum()
    assert na + nb == batch.n_resolved
    assert batch.n_unresolved < 0.01 * batch.n_total


def test_symmetry_of_hitting_measure():
    est = estimate_hitting(EPSILON, Cylinder(Word("a")), N, MU, Q, seed=1)
    assert abs(est.value - 0.5) <= 3 * est.stderr
    assert est.stderr == pytest.approx(
        math.sqrt(est.value * (1 - est.value) / est.samples))


def test_determinism_and_worker_independence():
    a = sample_boundary_prefixes(EPSILON, 3, 2000, MU, Q, seed=42, workers=1)
    b = sample_boundary_prefixes(EPSILON, 3, 2000, MU, Q, seed=42, workers=4)
    assert np.array_equal(a.prefixes, b.prefixes)
    assert np.array_equal(a.steps, b.steps)
    # splitting the index range reproduces the same per-sample draws
    c1 = sample_boundary_prefixes(EPSILON, 3, 1200, MU, Q, seed=42, index0=0)
    c2 = sample_boundary_prefixes(EPSILON, 3, 800, MU, Q, seed=42, index0=1200)
    assert np.array_equal(a.prefixes, np.vstack([c1.prefixes, c2.prefixes]))


def test_partition_additivity():
    ests = estimate_hitting_many(
        EPSILON,
        [Cylinder(Word("a")), Cylinder(Word("aa")), Cylinder(Word("ab"))],
        N, MU, Q, seed=8)
    top = ests[Word("a")]
    total = ests[Word("aa")].value + ests[Word("ab")].value
    sigma = math.sqrt(sum(e.stderr ** 2 for e in ests.values()))
    assert abs(top.value - total) <= 3 * sigma


def test_harmonicity_of_hitting_probability():
    z = Cylinder(Word("ab"))
    x = Word("a")
    lhs = estimate_hitting(x, z, N, MU, Q, seed=11)
    rhs, var = 0.0, 0.0
    for i, (y, p) in enumerate(sorted(transition_row(x, MU, Q).entries.items())):
        e = estimate_hitting(y, z, N, MU, Q, seed=100 + i)
        rhs += p * e.value
        var += (p * e.stderr) ** 2
    assert abs(lhs.value - rhs) <= 3 * math.sqrt(lhs.stderr ** 2 + var)


def test_root_decomposition_over_two_steps():
    # hitting from the root decomposes through the two-step distribution
    z = Cylinder(Word("a"))
    lhs = estimate_hitting(EPSILON, z, N, MU, Q, seed=21)
    mu2 = convolution_power(MU, 2, Q)
    rhs, var = 0.0, 0.0
    for i, (x, p) in enumerate(sorted(mu2.weights.items())):
        e = estimate_hitting(x, z, N, MU, Q, seed=300 + i)
        rhs += p * e.value
        var += (p * e.stderr) ** 2
    assert abs(lhs.value - rhs) <= 3 * math.sqrt(lhs.stderr ** 2 + var)


def test_poisson_integral_linear_combination():
    val, se = poisson_integral_classical(
        [(1.0, Cylinder(Word("a"))), (1.0, Cylinder(Word("b")))],
        EPSILON, 2000, MU, Q, seed=2)
    assert val == pytest.approx(1.0)
    assert se == pytest.approx(0.0)


def test_convolutie_identity_small():
    rep = convolutie_check(Word("a"), Cylinder(Word("ab")), N, MU, Q, seed=5)
    assert rep.residual <= 3 * rep.combined_stderr
    with pytest.raises(ValueError):
        convolutie_check(Word("ab"), Cylinder(Word("b")), 10, MU, Q)


def test_atom_scan_decay_and_support():
    rep = atom_scan("a", [2, 4, 6, 8], N, MU, Q, seed=8)
    vals = [e.value for e in rep.estimates]
    assert all(a >= b for a, b in zip(vals, vals[1:]))
    assert vals[3] < 0.5 * vals[0]
    assert rep.support_ok and rep.support_min_mass > 0


def test_unresolved_policy_is_reported():
    # a tiny step cap forces unresolved samples instead of silent bias
    policy = StoppingPolicy(stable_steps=50, max_steps=3)
    batch = sample_boundary_prefixes(EPSILON, 4, 50, MU, Q, policy, seed=1)
    assert batch.n_resolved == 0
    with pytest.raises(EstimationError):
        estimate_hitting(EPSILON, Cylinder(Word("a")), 50, MU, Q, policy,
                         seed=1)
