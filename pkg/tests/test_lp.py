"""Solver trichotomy, duality, and double-description round trips.

The simplex here is the load-bearing primitive for everything else, so it is
cross-checked two independent ways: against scipy's solver on randomized
bounded problems, and against weak/strong duality identities that hold
regardless of implementation.
"""
import numpy as np
import pytest

from sharpcheck.lp import (
    DIM_CAP,
    DimensionCapError,
    cell_from_generators_arrays,
    cell_generators_arrays,
    cone_from_generators,
    dd_cone,
    make_lp,
    maximize,
    solve_lp,
)

try:
    from scipy.optimize import linprog as scipy_linprog

    HAVE_SCIPY = True
except ImportError:  # pragma: no cover
    HAVE_SCIPY = False


def test_bounded_optimum():
    out = maximize([1.0], ineq_mat=[[1.0]], ineq_rhs=[1.0])
    assert out.status == "optimal"
    assert out.value == pytest.approx(1.0, abs=1e-9)
    assert out.point[0] == pytest.approx(1.0, abs=1e-9)


def test_unbounded_with_certificate_ray():
    out = maximize([1.0], ineq_mat=[[-1.0]], ineq_rhs=[0.0])
    assert out.status == "unbounded"
    # the ray must be feasible for the homogeneous system and improve c
    assert out.ray is not None
    assert -out.ray[0] <= 1e-9
    assert out.ray[0] > 1e-9


def test_infeasible():
    out = maximize([0.0], ineq_mat=[[1.0], [-1.0]], ineq_rhs=[-1.0, -1.0])
    assert out.status == "infeasible"


def test_equality_rows():
    # max x1 + x2 s.t. x1 + x2 = 1, x1 <= 0.3
    out = maximize([1.0, 1.0], ineq_mat=[[1.0, 0.0]], ineq_rhs=[0.3],
                   eq_mat=[[1.0, 1.0]], eq_rhs=[1.0])
    assert out.status == "optimal"
    assert out.value == pytest.approx(1.0, abs=1e-9)


def test_no_constraints():
    assert maximize([0.0, 0.0]).value == pytest.approx(0.0)
    out = maximize([2.0, -1.0])
    assert out.status == "unbounded"
    assert out.ray @ np.array([2.0, -1.0]) > 0


def test_degenerate_vertex_no_cycle():
    # many redundant rows through the optimum
    A = [[1.0, 0.0], [1.0, 0.0], [1.0, 1.0], [1.0, -1.0], [0.0, 1.0], [0.0, -1.0]]
    b = [1.0, 1.0, 1.0, 1.0, 0.0, 0.0]
    out = maximize([1.0, 0.0], ineq_mat=A, ineq_rhs=b)
    assert out.status == "optimal"
    assert out.value == pytest.approx(1.0, abs=1e-9)
    assert abs(out.point[1]) <= 1e-9


def test_duality_identity_on_fixed_problem():
    # max 3x1 + 2x2  s.t. x1 + x2 <= 4, x1 <= 2, x2 <= 3, -x1 <= 0, -x2 <= 0
    A = [[1, 1], [1, 0], [0, 1], [-1, 0], [0, -1]]
    b = [4, 2, 3, 0, 0]
    out = maximize([3, 2], ineq_mat=A, ineq_rhs=b)
    assert out.status == "optimal"
    assert out.value == pytest.approx(10.0, abs=1e-9)
    # strong duality: b @ y == value, y >= 0, A^T y == c
    y = out.dual_ineq
    assert np.all(y >= -1e-9)
    assert np.asarray(b) @ y == pytest.approx(out.value, abs=1e-7)
    assert np.asarray(A).T @ y == pytest.approx([3, 2], abs=1e-7)


@pytest.mark.skipif(not HAVE_SCIPY, reason="scipy is a test-only cross-check")
def test_random_cross_check_against_scipy():
    rng = np.random.default_rng(42)
    agreed = 0
    for _ in range(60):
        n = int(rng.integers(2, 5))
        m = int(rng.integers(n, 2 * n + 3))
        A = rng.normal(size=(m, n))
        x0 = rng.normal(size=n)
        b = A @ x0 + rng.uniform(0.1, 1.0, size=m)  # strictly feasible at x0
        # bound the problem with a box so both solvers report optimal
        A = np.vstack([A, np.eye(n), -np.eye(n)])
        b = np.concatenate([b, np.full(2 * n, 10.0 + np.abs(x0).max())])
        c = rng.normal(size=n)
        ours = maximize(c, ineq_mat=A, ineq_rhs=b)
        ref = scipy_linprog(-c, A_ub=A, b_ub=b, bounds=[(None, None)] * n,
                            method="highs")
        assert ours.status == "optimal"
        assert ref.status == 0
        assert ours.value == pytest.approx(-ref.fun, abs=1e-7, rel=1e-7)
        agreed += 1
    assert agreed == 60


@pytest.mark.skipif(not HAVE_SCIPY, reason="scipy is a test-only cross-check")
def test_random_equality_cross_check_against_scipy():
    rng = np.random.default_rng(7)
    for _ in range(30):
        n = int(rng.integers(3, 6))
        A = np.vstack([np.eye(n), -np.eye(n)])
        b = np.full(2 * n, 5.0)
        E = rng.normal(size=(1, n))
        x0 = rng.uniform(-1, 1, size=n)
        f = E @ x0
        c = rng.normal(size=n)
        ours = maximize(c, ineq_mat=A, ineq_rhs=b, eq_mat=E, eq_rhs=f)
        ref = scipy_linprog(-c, A_ub=A, b_ub=b, A_eq=E, b_eq=f,
                            bounds=[(None, None)] * n, method="highs")
        assert ours.status == "optimal" and ref.status == 0
        assert ours.value == pytest.approx(-ref.fun, abs=1e-7, rel=1e-7)


def test_unbounded_detection_matches_recession_analysis():
    rng = np.random.default_rng(3)
    for _ in range(40):
        n = int(rng.integers(2, 5))
        m = int(rng.integers(1, n + 2))
        A = rng.normal(size=(m, n))
        b = rng.uniform(0.5, 2.0, size=m)  # 0 is strictly feasible
        c = rng.normal(size=n)
        out = maximize(c, ineq_mat=A, ineq_rhs=b)
        if out.status == "unbounded":
            r = out.ray
            assert np.all(A @ r <= 1e-7 * max(1.0, np.linalg.norm(r)))
            assert c @ r > 1e-9
            assert np.all(A @ out.point <= b + 1e-7)
        else:
            assert out.status == "optimal"
            # no feasible improving ray may exist: check via scipy on the
            # homogeneous cone if available
            if HAVE_SCIPY:
                ref = scipy_linprog(-c, A_ub=A, b_ub=b,
                                    bounds=[(None, None)] * n, method="highs")
                assert ref.status == 0
                assert out.value == pytest.approx(-ref.fun, abs=1e-7, rel=1e-7)


# ---------------------------------------------------------------------------
# double description
# ---------------------------------------------------------------------------


def _span_equal(got: np.ndarray, want: list[list[float]]) -> bool:
    got = np.asarray(got, dtype=float)
    want_arr = np.array(want, dtype=float).reshape(-1, got.shape[1] if got.size else len(want[0]))
    if got.shape[0] != want_arr.shape[0]:
        return False
    if got.shape[0] == 0:
        return True
    rank = np.linalg.matrix_rank(np.vstack([got, want_arr]), tol=1e-7)
    return rank == np.linalg.matrix_rank(got, tol=1e-7) == np.linalg.matrix_rank(want_arr, tol=1e-7)


def _ray_sets_match(got: np.ndarray, want: list[list[float]]) -> bool:
    want_arr = [np.asarray(w, dtype=float) for w in want]
    want_arr = [w / np.linalg.norm(w) for w in want_arr]
    if got.shape[0] != len(want_arr):
        return False
    used = set()
    for g in got:
        hit = None
        for i, w in enumerate(want_arr):
            if i not in used and np.linalg.norm(g - w) < 1e-7:
                hit = i
                break
        if hit is None:
            return False
        used.add(hit)
    return True


def test_dd_halfplane():
    rays, lines = dd_cone(np.array([[0.0, -1.0]]))  # x2 >= 0
    assert _span_equal(lines, [[1.0, 0.0]])
    assert _ray_sets_match(rays, [[0.0, 1.0]])


def test_dd_orthant():
    rays, lines = dd_cone(-np.eye(3))
    assert lines.shape[0] == 0
    assert _ray_sets_match(rays, [[1, 0, 0], [0, 1, 0], [0, 0, 1]])


def test_dd_equality_then_inequality():
    # {x : x1 + x2 = 0, x1 >= 0} -- a single ray
    rays, lines = dd_cone(np.array([[-1.0, 0.0]]), eq=np.array([[1.0, 1.0]]))
    assert lines.shape[0] == 0
    assert _ray_sets_match(rays, [[1.0, -1.0]])


def test_dd_trivial_cone():
    rays, lines = dd_cone(np.vstack([np.eye(2), -np.eye(2)]))
    assert rays.shape[0] == 0 and lines.shape[0] == 0


def test_dd_full_space():
    rays, lines = dd_cone(np.zeros((0, 3)))
    assert rays.shape[0] == 0
    assert lines.shape[0] == 3


def test_dd_square_pyramid():
    # {x3 >= |x1|, x3 >= |x2|}: four extreme rays
    ineq = np.array([
        [1.0, 0.0, -1.0],
        [-1.0, 0.0, -1.0],
        [0.0, 1.0, -1.0],
        [0.0, -1.0, -1.0],
    ])
    rays, lines = dd_cone(ineq)
    assert lines.shape[0] == 0
    want = [[1, 1, 1], [1, -1, 1], [-1, 1, 1], [-1, -1, 1]]
    assert _ray_sets_match(rays, [list(np.array(w) / np.linalg.norm(w)) for w in want])


def test_dd_membership_round_trip_random():
    # H -> V -> H must describe the same cone: check by sampling memberships
    rng = np.random.default_rng(11)
    for _ in range(25):
        n = int(rng.integers(2, 5))
        m = int(rng.integers(1, 2 * n))
        A = rng.normal(size=(m, n))
        rays, lines = dd_cone(A)
        A2, E2 = cone_from_generators(rays, lines, n)
        for _ in range(40):
            x = rng.normal(size=n)
            in1 = np.all(A @ x <= 1e-7)
            in2 = (np.all(A2 @ x <= 1e-7) if A2.size else True) and \
                  (np.all(np.abs(E2 @ x) <= 1e-7) if E2.size else True)
            if in1 != in2:
                # disagreement is only tolerable within the tolerance band
                margin1 = np.max(A @ x) if A.size else 0.0
                assert abs(margin1) < 1e-6
    # generators themselves must satisfy the original system
        for r in rays:
            assert np.all(A @ r <= 1e-7)
        for ln in lines:
            assert np.all(np.abs(A @ ln) <= 1e-7)


def test_cell_generators_box():
    res = cell_generators_arrays(np.vstack([np.eye(2), -np.eye(2)]),
                                 np.array([1.0, 1.0, 0.0, 0.0]),
                                 np.zeros((0, 2)), np.zeros(0))
    assert res is not None
    verts, rays, lines = res
    assert rays.shape[0] == 0 and lines.shape[0] == 0
    got = sorted(tuple(np.round(v, 9)) for v in verts)
    assert got == [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)]


def test_cell_generators_empty():
    res = cell_generators_arrays(np.array([[1.0], [-1.0]]),
                                 np.array([-1.0, -1.0]),
                                 np.zeros((0, 1)), np.zeros(0))
    assert res is None


def test_cell_generators_unbounded_strip():
    # {0 <= x1 <= 1} in the plane: two vertices, a line along x2
    res = cell_generators_arrays(np.array([[1.0, 0.0], [-1.0, 0.0]]),
                                 np.array([1.0, 0.0]),
                                 np.zeros((0, 2)), np.zeros(0))
    verts, rays, lines = res
    assert verts.shape[0] == 2
    assert rays.shape[0] == 0
    assert _span_equal(lines, [[0.0, 1.0]])


def test_cell_round_trip_simplex():
    A = np.array([[-1.0, 0.0], [0.0, -1.0], [1.0, 1.0]])
    b = np.array([0.0, 0.0, 1.0])
    verts, rays, lines = cell_generators_arrays(A, b, np.zeros((0, 2)), np.zeros(0))
    A2, b2, E2, f2 = cell_from_generators_arrays(verts, rays, lines, 2)
    rng = np.random.default_rng(5)
    for _ in range(200):
        x = rng.uniform(-0.5, 1.5, size=2)
        in1 = np.all(A @ x <= b + 1e-9)
        in2 = np.all(A2 @ x <= b2 + 1e-9) and (not E2.size or np.all(np.abs(E2 @ x - f2) <= 1e-9))
        if in1 != in2:
            assert abs(np.max(A @ x - b)) < 1e-6


def test_empty_cell_marker():
    A, b, E, f = cell_from_generators_arrays(np.zeros((0, 2)), np.zeros((0, 2)),
                                             np.zeros((0, 2)), 2)
    out = maximize([0.0, 0.0], ineq_mat=A, ineq_rhs=b, eq_mat=E, eq_rhs=f)
    assert out.status == "infeasible"


def test_dimension_cap():
    with pytest.raises(DimensionCapError):
        dd_cone(np.zeros((1, DIM_CAP + 1)))


def test_lp_shape_validation():
    from sharpcheck.lp import LpError
    with pytest.raises(LpError):
        make_lp([1.0], ineq_mat=[[1.0]], ineq_rhs=[1.0, 2.0])
