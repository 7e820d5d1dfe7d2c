"""Sampling oracles: membership by definition, feasible sampling, growth
and subregularity estimates, proximal distance, level-set injectivity."""
import math

import numpy as np
import pytest

from sharpcheck.oracles import (
    OracleError,
    Schedule,
    dd_condition_probe,
    growth_constant_estimate,
    membership_by_definition,
    mscq_modulus_estimate,
    proximal_distance_check,
    sample_feasible,
)
from sharpcheck.polyexpr import ProblemInstance, parse_expression
from sharpcheck.sets import Ball, Box, Interval, PointSet, UnionSet


def first_example():
    f = parse_expression("x2^2", 2)
    g = (parse_expression("x1^2 - 2*x1 + x2^2", 2),)
    return ProblemInstance(2, 1, f, g, Interval(-0.75, 0.0),
                           Box([(0.0, 0.5), (0.0, 0.0)]), [0.0, 0.0])


def second_example():
    f = parse_expression("-0.5*x1^2", 1)
    g = (parse_expression("x1^2", 1), parse_expression("x1", 1))
    K = UnionSet([Ball([1.0, 0.0], 1.0), Ball([-1.0, 0.0], 1.0)])
    return ProblemInstance(1, 2, f, g, K, PointSet([0.0]), [0.0])


def square_objective():
    # unconstrained x^2 with the reference set pinned at the origin
    f = parse_expression("x1^2", 1)
    g = (parse_expression("x1", 1),)
    return ProblemInstance(1, 1, f, g, Interval(-math.inf, math.inf),
                           PointSet([0.0]), [0.0])


# -- membership by definition ------------------------------------------


def test_membership_ball_outer2():
    ball = Ball([0.0, 1.0], 1.0)
    y, d = [0.0, 0.0], [1.0, 0.0]   # boundary point, tangent direction
    # outer second-order set is {w : w2 >= |d|^2}
    assert membership_by_definition(ball, y, d, [0.0, 2.0], "outer2") == "confirmed"
    assert membership_by_definition(ball, y, d, [0.0, 0.5], "outer2") == "rejected"


def test_membership_ball_asymp2():
    ball = Ball([0.0, 1.0], 1.0)
    y, d = [0.0, 0.0], [1.0, 0.0]
    assert membership_by_definition(ball, y, d, [0.0, 0.3], "asymp2") == "confirmed"
    assert membership_by_definition(ball, y, d, [0.0, -1.0], "asymp2") == "rejected"


def test_membership_zero_direction_reduces_to_tangent():
    ball = Ball([0.0, 1.0], 1.0)
    out = membership_by_definition(ball, [0.0, 0.0], [0.0, 0.0], [1.0, 0.5], "outer2")
    assert out == "confirmed"
    assert out == membership_by_definition(ball, [0.0, 0.0], None, [1.0, 0.5], "tangent")
    out = membership_by_definition(ball, [0.0, 0.0], None, [0.0, -1.0], "tangent")
    assert out == "rejected"


def test_membership_union_of_disks():
    two = UnionSet([Ball([1.0, 0.0], 1.0), Ball([-1.0, 0.0], 1.0)])
    y, d = [0.0, 0.0], [0.0, 1.0]
    # outer set at the contact point is {w1 >= 1} u {w1 <= -1}
    assert membership_by_definition(two, y, d, [1.5, 0.0], "outer2") == "confirmed"
    assert membership_by_definition(two, y, d, [-1.5, 0.0], "outer2") == "confirmed"
    assert membership_by_definition(two, y, d, [0.0, 0.0], "outer2") == "rejected"
    # the asymptotic set is everything
    assert membership_by_definition(two, y, d, [0.3, -0.7], "asymp2") == "confirmed"


def test_membership_validates_input():
    ball = Ball([0.0, 1.0], 1.0)
    with pytest.raises(OracleError):
        membership_by_definition(ball, [5.0, 5.0], None, [1.0, 0.0], "tangent")
    with pytest.raises(OracleError):
        membership_by_definition(ball, [0.0, 0.0], None, [1.0, 0.0], "nope")


# -- feasible sampling ---------------------------------------------------


def test_sample_feasible_first_example():
    p = first_example()
    pts = sample_feasible(p, 0.1, 400, 42)
    assert len(pts) >= 4
    for x in pts:
        assert np.linalg.norm(x - p.xbar) <= 0.1 + 1e-12
        assert -0.75 - 1e-9 <= p.g_value(x)[0] <= 1e-9


def test_sample_feasible_second_example():
    p = second_example()
    pts = sample_feasible(p, 0.1, 400, 42)
    assert len(pts) >= 4
    assert all(abs(float(x[0])) <= 1.0 + 1e-9 for x in pts)


def test_sample_feasible_rejects_bad_delta():
    with pytest.raises(OracleError):
        sample_feasible(first_example(), 0.0, 10, 42)


def test_sample_feasible_deterministic():
    p = first_example()
    a = sample_feasible(p, 0.1, 200, 7)
    b = sample_feasible(p, 0.1, 200, 7)
    assert len(a) == len(b)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))


# -- growth constant -----------------------------------------------------


def test_growth_first_example():
    est = growth_constant_estimate(first_example(), 0.1, 10_000, 42)
    assert 0.80 <= est.kappa_hat <= 1.05
    assert est.witness is not None and est.sample_count > 100


def test_growth_second_example_negative():
    est = growth_constant_estimate(second_example(), 0.1, 10_000, 42)
    assert -0.55 <= est.kappa_hat <= -0.45


def test_growth_square_objective():
    est = growth_constant_estimate(square_objective(), 0.1, 4000, 42)
    assert est.kappa_hat == pytest.approx(1.0, abs=1e-6)


def test_growth_antitone_in_delta():
    p = first_example()
    wide = growth_constant_estimate(p, 0.25, 6000, 42)
    narrow = growth_constant_estimate(p, 0.05, 6000, 42)
    assert wide.kappa_hat <= narrow.kappa_hat + 0.05


def test_growth_deterministic():
    p = second_example()
    a = growth_constant_estimate(p, 0.1, 2000, 11)
    b = growth_constant_estimate(p, 0.1, 2000, 11)
    assert a.kappa_hat == b.kappa_hat
    assert np.array_equal(a.witness, b.witness)


# -- metric subregularity modulus ----------------------------------------


def identity_halfline():
    f = parse_expression("x1^2", 1)
    g = (parse_expression("x1", 1),)
    return ProblemInstance(1, 1, f, g, Interval(-math.inf, 0.0),
                           PointSet([0.0]), [0.0])


def test_mscq_identity_modulus_near_one():
    est = mscq_modulus_estimate(identity_halfline(), [0.0], [1.0],
                                rho=2.5, delta=0.1, count=2000, seed=42)
    assert not est.diverged
    assert est.kappa_hat == pytest.approx(1.0, abs=1e-6)


def test_mscq_square_diverges():
    # dist(x, {0}) / dist(g(x), {0}) = 1e4 / |x| blows up toward the base;
    # the weak coefficient keeps the blowup visible above the solver floors
    f = parse_expression("x1^2", 1)
    g = (parse_expression("0.0001*x1^2", 1),)
    p = ProblemInstance(1, 1, f, g, Interval(0.0, 0.0), PointSet([0.0]), [0.0])
    est = mscq_modulus_estimate(p, [0.0], [1.0], rho=2.5, delta=0.1,
                                count=2000, seed=42)
    assert est.diverged and est.witness is not None
    assert est.kappa_hat is None


def test_mscq_first_example_finite():
    est = mscq_modulus_estimate(first_example(), [0.0, 0.0], [0.0, 1.0],
                                rho=0.5, delta=0.1, count=1000, seed=42)
    assert not est.diverged
    assert est.kappa_hat is not None and est.kappa_hat < 50.0


def test_mscq_rejects_infeasible_base():
    with pytest.raises(OracleError):
        mscq_modulus_estimate(first_example(), [9.0, 9.0], [1.0, 0.0],
                              rho=0.5, delta=0.1, count=10, seed=42)


# -- proximal distance inequality ----------------------------------------


def test_proximal_distance_on_segment():
    S = Box([(0.0, 0.5), (0.0, 0.0)])
    ok, t = proximal_distance_check(S, [0.0, 0.0], [-1.0, 0.0], 0.0)
    assert ok and t is None
    ok, t = proximal_distance_check(S, [0.25, 0.0], [0.0, 1.0], 0.0)
    assert ok


def test_proximal_distance_requires_proximal_direction():
    S = Box([(0.0, 0.5), (0.0, 0.0)])
    with pytest.raises(OracleError):
        proximal_distance_check(S, [0.0, 0.0], [1.0, 0.0], 0.0)


def test_proximal_distance_with_positive_eps():
    S = Box([(0.0, 0.5), (0.0, 0.0)])
    d = [-0.05, 1.0]  # slightly off the proximal cone at an interior point
    ok, _ = proximal_distance_check(S, [0.25, 0.0], d, 0.1)
    assert ok


# -- level-set injectivity probe -----------------------------------------


def test_dd_probe_identity_holds():
    res = dd_condition_probe(identity_halfline(), 0.5, 500, 42)
    assert res.holds_on_box and res.witness is None


def test_dd_probe_first_example_finds_circle_point():
    p = first_example()
    res = dd_condition_probe(p, 0.25, 800, 42)
    assert not res.holds_on_box
    w = res.witness
    assert np.linalg.norm(p.g_value(w) - p.g_value(p.xbar)) <= 1e-6
    assert np.linalg.norm(w - p.xbar) >= 0.025


def test_dd_probe_square_away_from_fold():
    f = parse_expression("x1^2", 1)
    g = (parse_expression("x1^2", 1),)
    p = ProblemInstance(1, 1, f, g, Interval(0.0, 2.0), PointSet([1.0]), [1.0])
    res = dd_condition_probe(p, 0.5, 500, 42)
    assert res.holds_on_box


def test_schedule_shapes():
    sched = Schedule()
    pairs = list(sched.pairs())
    assert len(pairs) == sched.terms
    ts = [t for t, _ in pairs]
    assert ts == sorted(ts, reverse=True)
    # radius r = t^(2/3) dominates t on the unit scale, shrinking slower
    assert all(r == pytest.approx(t ** (2.0 / 3.0)) for t, r in pairs)
    assert all(r > t for t, r in pairs)
