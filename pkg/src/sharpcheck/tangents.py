"""First- and second-order tangent and normal objects for catalog sets.

Every result is a Region.  Exactness strategy, by constructor:

* polyhedral leaves (interval, box, halfspace, polyhedron): active-row
  algebra, exact;
* balls: supporting halfspace at first order, curvature-shifted halfspace
  at second order, exact;
* unions: union rules over the members containing the base point (for
  second-order objects only members to which the direction is tangent
  contribute); limiting and directional normal cones come from stratum
  enumeration, where purely polyhedral strata are certified by margin LPs
  and strata involving spheres are validated by radius-schedule samplers
  with exact projections onto the constraint surfaces;
* products: blockwise combination.  On this catalog every member admits
  membership curves for entire small-parameter ranges, so factor curves can
  share schedules and the product rules hold with equality.

Strata that fail sampler validation are dropped and the result carries a
note, never a silent claim.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

from . import lp as _lp
from .regions import (
    PolyCell,
    Region,
    face_complex,
    limiting_normal_region,
    cone_hull,
    polar_cone,
)
from .sets import (
    Ball,
    BaseSet,
    Box,
    FiniteSet,
    Halfspace,
    Interval,
    PointSet,
    Polyhedron,
    ProductSet,
    UnionSet,
    flatten_union,
)

TOL = 1e-9
MEMBER_TOL = 1e-7


class TangentError(Exception):
    pass


def _vec(x, dim) -> np.ndarray:
    out = np.asarray(x, dtype=float).ravel()
    if out.size != dim:
        raise TangentError(f"dimension mismatch: {out.size} vs {dim}")
    return out


def _require_member(s: BaseSet, y) -> np.ndarray:
    y = _vec(y, s.dim)
    if not s.contains(y, tol=MEMBER_TOL):
        raise TangentError("base point does not belong to the set")
    return y


def _leaf_cell(s: BaseSet) -> PolyCell:
    return s.as_region().cells[0]


def _active_rows(cell: PolyCell, y: np.ndarray, tol: float = 1e-8) -> list[int]:
    return [i for i in range(cell.A.shape[0]) if abs(float(cell.A[i] @ y) - cell.b[i]) <= tol]


def _is_polyhedral_leaf(s: BaseSet) -> bool:
    return isinstance(s, (Interval, Box, Halfspace, Polyhedron))


def _on_sphere(s: Ball, y: np.ndarray) -> bool:
    return abs(float(np.linalg.norm(y - s.center)) - s.radius) <= MEMBER_TOL


def _lift_cell(cell: PolyCell, total: int, lo: int) -> PolyCell:
    hi = lo + cell.dim
    A = np.zeros((cell.A.shape[0], total))
    A[:, lo:hi] = cell.A
    E = np.zeros((cell.E.shape[0], total))
    E[:, lo:hi] = cell.E
    return PolyCell(A, cell.b, E, cell.f, dim=total)


def _product_region(regions: list[Region], dims: list[int], cone: bool) -> Region:
    total = sum(dims)
    notes: tuple[str, ...] = ()
    offsets = np.cumsum([0] + dims)
    cells = [PolyCell.all_space(total)]
    for reg, lo in zip(regions, offsets[:-1]):
        notes += reg.notes
        live = reg.nonempty_cells()
        if not live:
            return Region.empty(total, cone=cone, notes=notes + ("empty factor",))
        cells = [base.intersect(_lift_cell(c, total, int(lo)))
                 for base in cells for c in live]
    return Region(cells, cone=cone, notes=notes, dim=total)


def _tangential_contact_note(members: list[BaseSet], y: np.ndarray) -> tuple[str, ...]:
    """Flag boundary normals shared (up to sign) by distinct members at y;
    touching members can make union formulas overcount."""
    normals: list[tuple[int, np.ndarray]] = []
    for idx, m in enumerate(members):
        if not m.contains(y, tol=MEMBER_TOL):
            continue
        if isinstance(m, Ball):
            if _on_sphere(m, y):
                h = y - m.center
                normals.append((idx, h / np.linalg.norm(h)))
        elif _is_polyhedral_leaf(m):
            cell = _leaf_cell(m)
            for i in _active_rows(cell, y):
                normals.append((idx, cell.A[i]))
            for j in range(cell.E.shape[0]):
                normals.append((idx, cell.E[j]))
    for (i1, n1), (i2, n2) in itertools.combinations(normals, 2):
        if i1 != i2 and abs(abs(float(n1 @ n2)) - 1.0) <= 1e-9:
            return ("tangential member contact at base point; verify by oracle",)
    return ()


# ---------------------------------------------------------------------------
# tangent cone
# ---------------------------------------------------------------------------


def tangent_cone(s: BaseSet, y) -> Region:
    y = _require_member(s, y)
    if _is_polyhedral_leaf(s):
        cell = _leaf_cell(s)
        act = _active_rows(cell, y)
        A = cell.A[act] if act else None
        b = np.zeros(len(act)) if act else None
        t = PolyCell(A, b, cell.E, np.zeros(cell.E.shape[0]), dim=s.dim)
        return Region.from_cell(t, cone=True)
    if isinstance(s, Ball):
        if not _on_sphere(s, y):
            return Region.all_space(s.dim)
        h = y - s.center
        return Region.from_cell(PolyCell(h.reshape(1, -1), [0.0], dim=s.dim), cone=True)
    if isinstance(s, (PointSet, FiniteSet)):
        return Region.origin(s.dim)
    if isinstance(s, UnionSet):
        pieces = [tangent_cone(m, y) for m in s.members if m.contains(y, tol=MEMBER_TOL)]
        out = pieces[0]
        for p in pieces[1:]:
            out = out.union(p)
        return Region(out.cells, cone=True, dim=s.dim,
                      notes=out.notes + _tangential_contact_note(s.members, y))
    if isinstance(s, ProductSet):
        parts = [tangent_cone(f, part) for f, part in zip(s.factors, s.split(y))]
        return _product_region(parts, [f.dim for f in s.factors], cone=True)
    raise TangentError(f"unsupported set kind {s.kind!r}")


# ---------------------------------------------------------------------------
# second-order tangent sets
# ---------------------------------------------------------------------------


def second_tangent(s: BaseSet, y, d, kind: str) -> Region:
    """Outer second-order tangent set or asymptotic second-order tangent
    cone at y in direction d.  A non-tangent d yields the empty Region with
    a diagnostic note rather than an error."""
    if kind not in ("outer", "asymptotic"):
        raise TangentError(f"unknown second-order kind {kind!r}")
    y = _require_member(s, y)
    d = _vec(d, s.dim)
    tcone = tangent_cone(s, y)
    if not tcone.contains(d, tol=MEMBER_TOL):
        return Region.empty(s.dim, cone=(kind == "asymptotic"),
                            notes=("direction not tangent",))
    if float(np.linalg.norm(d)) <= TOL:
        return tcone  # the defining sequences reduce to plain tangency
    out = _second_tangent_inner(s, y, d, kind)
    if kind == "asymptotic":
        return out.with_cone_flag(True)
    flag = bool(out.nonempty_cells()) and all(c.is_homogeneous() for c in out.nonempty_cells())
    return out.with_cone_flag(flag)


def _second_tangent_inner(s: BaseSet, y, d, kind: str) -> Region:
    if _is_polyhedral_leaf(s):
        cell = _leaf_cell(s)
        act = _active_rows(cell, y)
        keep = [i for i in act if abs(float(cell.A[i] @ d)) <= 1e-8]
        A = cell.A[keep] if keep else None
        b = np.zeros(len(keep)) if keep else None
        return Region.from_cell(PolyCell(A, b, cell.E, np.zeros(cell.E.shape[0]),
                                         dim=s.dim), cone=True)
    if isinstance(s, Ball):
        if not _on_sphere(s, y):
            return Region.all_space(s.dim)
        h = y - s.center
        slope = float(h @ d)
        if slope < -1e-8:
            return Region.all_space(s.dim)
        shift = -float(d @ d) if kind == "outer" else 0.0
        return Region.from_cell(PolyCell(h.reshape(1, -1), [shift], dim=s.dim),
                                cone=(kind != "outer"))
    if isinstance(s, (PointSet, FiniteSet)):
        # a nonzero d is never tangent here; the caller filtered that out
        return Region.empty(s.dim, notes=("direction not tangent",))
    if isinstance(s, UnionSet):
        pieces = []
        for m in s.members:
            if not m.contains(y, tol=MEMBER_TOL):
                continue
            if not tangent_cone(m, y).contains(d, tol=MEMBER_TOL):
                continue
            pieces.append(_second_tangent_inner(m, y, d, kind))
        if not pieces:
            return Region.empty(s.dim, notes=("direction not tangent",))
        out = pieces[0]
        for p in pieces[1:]:
            out = out.union(p)
        return Region(out.cells, dim=s.dim,
                      notes=out.notes + _tangential_contact_note(s.members, y))
    if isinstance(s, ProductSet):
        parts = [second_tangent(f, yp, dp, kind)
                 for f, yp, dp in zip(s.factors, s.split(y), s.split(d))]
        return _product_region(parts, [f.dim for f in s.factors], cone=False)
    raise TangentError(f"unsupported set kind {s.kind!r}")


# ---------------------------------------------------------------------------
# proximal normal cone
# ---------------------------------------------------------------------------


def _proximal_cell(s: BaseSet, y: np.ndarray) -> PolyCell:
    """The proximal normal cone at y as one convex cell.

    For a union, y must project back onto itself from y + tv for small t
    simultaneously for every member containing y, so the union's cone is the
    intersection of the member cones.  Members not containing y are farther
    away than O(t) and never interfere."""
    if _is_polyhedral_leaf(s):
        cell = _leaf_cell(s)
        act = _active_rows(cell, y)
        rays = cell.A[act] if act else np.zeros((0, s.dim))
        ineq, eq = _lp.cone_from_generators(rays, cell.E, s.dim)
        return PolyCell(ineq, np.zeros(ineq.shape[0]), eq, np.zeros(eq.shape[0]), dim=s.dim)
    if isinstance(s, Ball):
        if not _on_sphere(s, y):
            ineq, eq = _lp.cone_from_generators(np.zeros((0, s.dim)), np.zeros((0, s.dim)), s.dim)
            return PolyCell(ineq, np.zeros(ineq.shape[0]), eq, np.zeros(eq.shape[0]), dim=s.dim)
        h = (y - s.center).reshape(1, -1)
        ineq, eq = _lp.cone_from_generators(h, np.zeros((0, s.dim)), s.dim)
        return PolyCell(ineq, np.zeros(ineq.shape[0]), eq, np.zeros(eq.shape[0]), dim=s.dim)
    if isinstance(s, (PointSet, FiniteSet)):
        return PolyCell.all_space(s.dim)
    if isinstance(s, UnionSet):
        out = PolyCell.all_space(s.dim)
        for m in s.members:
            if m.contains(y, tol=MEMBER_TOL):
                out = out.intersect(_proximal_cell(m, y))
        return out
    if isinstance(s, ProductSet):
        total = s.dim
        out = PolyCell.all_space(total)
        for f, part, lo in zip(s.factors, s.split(y), s.offsets[:-1]):
            out = out.intersect(_lift_cell(_proximal_cell(f, part), total, int(lo)))
        return out
    raise TangentError(f"unsupported set kind {s.kind!r}")


# ---------------------------------------------------------------------------
# limiting and directional normal cones
# ---------------------------------------------------------------------------


def _short_circuit_interior(members_at: list[BaseSet], y: np.ndarray) -> bool:
    """If some member holds y in its interior, every nearby point of the
    union is a member of it with full-space tangent, so all Frechet cones
    near y collapse to the origin."""
    for m in members_at:
        if isinstance(m, Ball) and not _on_sphere(m, y):
            return True
        if _is_polyhedral_leaf(m):
            cell = _leaf_cell(m)
            if not _active_rows(cell, y) and cell.E.shape[0] == 0:
                return True
        if isinstance(m, ProductSet) and all(
            _short_circuit_interior([f], part) for f, part in zip(m.factors, m.split(y))
        ):
            return True
    return False


def _stratum_piece(specs: dict[int, tuple], members: list[BaseSet], y: np.ndarray,
                   dim: int) -> PolyCell:
    """Limit of the Frechet cones along the stratum: intersection over the
    selected members of the polars of their face tangents."""
    out = PolyCell.all_space(dim)
    for idx, spec in specs.items():
        m = members[idx]
        if spec[0] == "poly":
            cell = _leaf_cell(m)
            rows = cell.A[list(spec[1])] if spec[1] else np.zeros((0, dim))
            ineq, eq = _lp.cone_from_generators(rows, cell.E, dim)
        else:  # sphere
            h = (y - m.center).reshape(1, -1)
            ineq, eq = _lp.cone_from_generators(h, np.zeros((0, dim)), dim)
        out = out.intersect(PolyCell(ineq, np.zeros(ineq.shape[0]),
                                     eq, np.zeros(eq.shape[0]), dim=dim))
    return out


def _surfaces_of(specs: dict[int, tuple], members: list[BaseSet], y: np.ndarray):
    surf = []
    for idx, spec in specs.items():
        m = members[idx]
        if spec[0] == "sphere":
            surf.append(("sphere", m.center, m.radius))
        else:
            cell = _leaf_cell(m)
            rows = list(spec[1])
            if rows or cell.E.shape[0]:
                A = np.vstack([cell.A[rows], cell.E]) if rows else cell.E
                b = np.concatenate([cell.b[rows], cell.f]) if rows else cell.f
                surf.append(("affine", A, b))
    return surf


def _project_surfaces(x: np.ndarray, surfaces) -> np.ndarray:
    for _ in range(80):
        worst = 0.0
        for kind, *data in surfaces:
            if kind == "sphere":
                c, r = data
                gap = np.linalg.norm(x - c)
                if gap <= 1e-14:
                    return x  # cannot project from the center
                x = c + (r / gap) * (x - c)
            else:
                A, b = data
                resid = A @ x - b
                x = x - A.T @ np.linalg.pinv(A @ A.T, rcond=1e-12) @ resid
        for kind, *data in surfaces:
            if kind == "sphere":
                c, r = data
                worst = max(worst, abs(float(np.linalg.norm(x - c)) - r))
            else:
                A, b = data
                if A.shape[0]:
                    worst = max(worst, float(np.max(np.abs(A @ x - b))))
        if worst <= 1e-13:
            break
    return x


def _config_matches(x: np.ndarray, specs, avoid, members, y) -> bool:
    for idx, spec in specs.items():
        m = members[idx]
        if spec[0] == "sphere":
            if abs(float(np.linalg.norm(x - m.center)) - m.radius) > 1e-10:
                return False
        else:
            cell = _leaf_cell(m)
            if not cell.contains(x, tol=1e-9):
                return False
            for i in _active_rows(cell, y):
                resid = float(cell.A[i] @ x) - cell.b[i]
                if i in spec[1]:
                    if abs(resid) > 1e-10:
                        return False
                elif resid > -1e-9:
                    return False  # should be strictly slack on this stratum
    for idx in avoid:
        dist, _ = members[idx].distance(x)
        if dist <= 1e-10:
            return False
    return True


def _null_space(rows: np.ndarray, dim: int) -> np.ndarray:
    if rows.shape[0] == 0:
        return np.eye(dim)
    _, sv, vt = np.linalg.svd(rows, full_matrices=True)
    rank = int(np.sum(sv > 1e-10))
    return vt[rank:]


def _stratum_realizable_sampled(specs, avoid, members, y, u, dim) -> bool:
    """Radius-schedule validation for strata that involve spheres.  Points
    y + t*dir are projected exactly onto the stratum's surfaces; curvature
    slack grows like t^2 and clears the tolerance bands on this schedule."""
    normals = []
    for idx, spec in specs.items():
        m = members[idx]
        if spec[0] == "sphere":
            normals.append((y - m.center) / np.linalg.norm(y - m.center))
        else:
            cell = _leaf_cell(m)
            for i in spec[1]:
                normals.append(cell.A[i])
            for j in range(cell.E.shape[0]):
                normals.append(cell.E[j])
    N = np.array(normals) if normals else np.zeros((0, dim))
    basis = _null_space(N, dim)
    if basis.shape[0] == 0:
        return False  # only y itself sits on all surfaces
    if u is not None:
        if N.shape[0] and np.max(np.abs(N @ u)) > 1e-8:
            return False
        cands = [u / np.linalg.norm(u)]
    else:
        cands = [sgn * b for b in basis for sgn in (1.0, -1.0)]
        cands += [(b1 + s * b2) / np.linalg.norm(b1 + s * b2)
                  for b1, b2 in itertools.combinations(basis, 2) for s in (1.0, -1.0)]
    surfaces = _surfaces_of(specs, members, y)
    schedule = np.logspace(-1, -2.5, 8)
    for cand in cands:
        ok = True
        for t in schedule:
            x = _project_surfaces(y + t * cand, surfaces)
            if np.linalg.norm(x - y) < 0.25 * t or np.linalg.norm(x - y) > 4.0 * t:
                ok = False
                break
            # drift must vanish with t for the sequence directions to converge
            if np.linalg.norm((x - y) / t - cand) > 2.0 * t + 1e-6:
                ok = False
                break
            if not _config_matches(x, specs, avoid, members, y):
                ok = False
                break
        if ok:
            return True
    return False


def _stratum_realizable_poly(specs, avoid, members, y, u, dim) -> bool:
    """Exact margin-LP realizability for purely polyhedral strata.  All
    constraints in play pass through y, so local and conic feasibility
    coincide and the closure of the open stratum cone is its weak form."""
    eq_rows, strict_rows = [], []
    for idx, spec in specs.items():
        cell = _leaf_cell(members[idx])
        act = _active_rows(cell, y)
        for i in act:
            (eq_rows if i in spec[1] else strict_rows).append(cell.A[i])
        for j in range(cell.E.shape[0]):
            eq_rows.append(cell.E[j])
    violation_options = []
    for idx in avoid:
        cell = _leaf_cell(members[idx])
        act = _active_rows(cell, y)
        opts = [cell.A[i] for i in act]
        for j in range(cell.E.shape[0]):
            opts.append(cell.E[j])
            opts.append(-cell.E[j])
        if not opts:
            return False  # the avoided member holds y in its interior
        violation_options.append(opts)
    for choice in itertools.product(*violation_options) if violation_options else [()]:
        rows, rhs = [], []
        for a in strict_rows:
            rows.append(np.concatenate([a, [1.0]]))
            rhs.append(0.0)
        for a in choice:
            rows.append(np.concatenate([-a, [1.0]]))
            rhs.append(0.0)
        rows.append(np.concatenate([np.zeros(dim), [1.0]]))
        rhs.append(1.0)
        eq = [np.concatenate([a, [0.0]]) for a in eq_rows]
        eqr = [0.0] * len(eq_rows)
        obj = np.concatenate([np.zeros(dim), [1.0]])
        out = _lp.maximize(obj, np.array(rows), np.array(rhs),
                           np.array(eq) if eq else None,
                           np.array(eqr) if eqr else None)
        if out.status != "optimal" or out.value <= 1e-7:
            continue
        if u is None:
            return True
        ok = all(abs(float(a @ u)) <= 1e-8 for a in eq_rows)
        ok = ok and all(float(a @ u) <= 1e-8 for a in strict_rows)
        ok = ok and all(float(a @ u) >= -1e-8 for a in choice)
        if ok:
            return True
    return False


def _member_face_options(m: BaseSet, y: np.ndarray):
    """Face specs a nearby stratum can select for this member, or None when
    the member cannot be part of a nontrivial stratum (isolated points)."""
    if isinstance(m, Ball):
        return [("sphere",)] if _on_sphere(m, y) else []
    if _is_polyhedral_leaf(m):
        cell = _leaf_cell(m)
        act = _active_rows(cell, y)
        return [("poly", frozenset(J)) for r in range(len(act) + 1)
                for J in itertools.combinations(act, r)]
    if isinstance(m, (PointSet, FiniteSet)):
        return []
    raise TangentError("strata for nested unions/products are handled upstream")


def _limiting_by_strata(s: UnionSet, y: np.ndarray, u: np.ndarray | None):
    """Limiting (u=None) or directional limiting normal cone of a union
    with curved members, by validated stratum enumeration."""
    members = flatten_union(s)
    for m in members:
        if isinstance(m, (UnionSet,)):
            raise TangentError("flatten left a nested union")
        if isinstance(m, ProductSet):
            raise TangentError("products inside curved unions are out of scope")
    dim = s.dim
    members_at = [i for i, m in enumerate(members) if m.contains(y, tol=MEMBER_TOL)]
    notes: tuple[str, ...] = _tangential_contact_note(members, y)
    if _short_circuit_interior([members[i] for i in members_at], y):
        return [PolyCell.from_point(np.zeros(dim))], notes
    pieces: list[PolyCell] = []
    dropped = 0
    option_lists = {i: _member_face_options(members[i], y) for i in members_at}
    for r in range(1, len(members_at) + 1):
        for T in itertools.combinations(members_at, r):
            if any(not option_lists[i] for i in T):
                continue
            avoid = [i for i in members_at if i not in T]
            for combo in itertools.product(*[option_lists[i] for i in T]):
                specs = dict(zip(T, combo))
                curved = any(spec[0] == "sphere" for spec in combo) or any(
                    isinstance(members[i], Ball) for i in avoid)
                if curved:
                    ok = _stratum_realizable_sampled(specs, avoid, members, y, u, dim)
                else:
                    ok = _stratum_realizable_poly(specs, avoid, members, y, u, dim)
                if ok:
                    pieces.append(_stratum_piece(specs, members, y, dim))
                else:
                    dropped += 1
    if dropped:
        notes += (f"strata dropped without validation: {dropped}",)
    if u is None:
        # the constant sequence x_k = y contributes the Frechet cone itself
        pieces.append(_frechet_cell(s, y))
    if not pieces:
        pieces = [PolyCell.from_point(np.zeros(dim))]
        notes += ("no stratum validated; kept the trivial piece",)
    return pieces, notes


def _frechet_cell(s: BaseSet, y: np.ndarray) -> PolyCell:
    reg = polar_cone(tangent_cone(s, y))
    return reg.cells[0]


def normal_cone(s: BaseSet, y, kind: str) -> Region:
    y = _require_member(s, y)
    if kind == "frechet":
        return polar_cone(tangent_cone(s, y))
    if kind == "proximal":
        return Region.from_cell(_proximal_cell(s, y), cone=True)
    if kind != "limiting":
        raise TangentError(f"unknown normal cone kind {kind!r}")
    if s.is_convex():
        return polar_cone(tangent_cone(s, y))
    if isinstance(s, ProductSet):
        parts = [normal_cone(f, part, "limiting") for f, part in zip(s.factors, s.split(y))]
        return _product_region(parts, [f.dim for f in s.factors], cone=True)
    reg = s.as_region()
    if reg is not None:
        return limiting_normal_region(reg, y)
    if isinstance(s, UnionSet):
        pieces, notes = _limiting_by_strata(s, y, None)
        return Region(pieces, cone=True, notes=notes, dim=s.dim)
    raise TangentError(f"unsupported set kind {s.kind!r}")


def directional_normal(s: BaseSet, y, u, kind: str) -> Region:
    """Directional limiting normal cone, or its Clarke hull."""
    if kind not in ("limiting", "clarke"):
        raise TangentError(f"unknown directional normal kind {kind!r}")
    y = _require_member(s, y)
    u = _vec(u, s.dim)
    if not tangent_cone(s, y).contains(u, tol=MEMBER_TOL):
        return Region.empty(s.dim, cone=True, notes=("direction not tangent",))
    if float(np.linalg.norm(u)) <= TOL:
        lim = normal_cone(s, y, "limiting")
    else:
        lim = _directional_limiting(s, y, u)
    if kind == "limiting":
        return lim
    hull = cone_hull(lim)
    return hull.with_notes(*lim.notes) if lim.notes else hull


def _directional_limiting(s: BaseSet, y: np.ndarray, u: np.ndarray) -> Region:
    if s.is_convex():
        # normals stay normal along tangent directions only inside {u}-perp
        return polar_cone(tangent_cone(s, y)).intersect_orthocomplement(u).with_cone_flag(True)
    if isinstance(s, ProductSet):
        parts = [directional_normal(f, yp, up, "limiting")
                 for f, yp, up in zip(s.factors, s.split(y), s.split(u))]
        return _product_region(parts, [f.dim for f in s.factors], cone=True)
    reg = s.as_region()
    if reg is not None:
        pieces = []
        for face in face_complex(reg):
            if not face.cell.contains(y, tol=1e-8):
                continue
            act = _active_rows(face.cell, y)
            ok = all(float(face.cell.A[i] @ u) <= 1e-8 for i in act)
            ok = ok and all(abs(float(face.cell.E[j] @ u)) <= 1e-8
                            for j in range(face.cell.E.shape[0]))
            if ok:
                pieces.append(face.normal_cell)
        if not pieces:
            return Region.origin(s.dim).with_notes(
                "no face admitted the direction; kept the trivial piece")
        return Region(pieces, cone=True, dim=s.dim)
    if isinstance(s, UnionSet):
        pieces, notes = _limiting_by_strata(s, y, u)
        return Region(pieces, cone=True, notes=notes, dim=s.dim)
    raise TangentError(f"unsupported set kind {s.kind!r}")


def directional_clarke_tangent(s: BaseSet, y, u) -> Region:
    """Polar of the directional Clarke normal cone."""
    y = _require_member(s, y)
    u = _vec(u, s.dim)
    if not tangent_cone(s, y).contains(u, tol=MEMBER_TOL):
        raise TangentError("direction not tangent")
    clarke = directional_normal(s, y, u, "clarke")
    out = polar_cone(clarke)
    return out.with_notes(*clarke.notes) if clarke.notes else out


def region_tangent_cone(region: Region, x) -> Region:
    """Tangent cone of a polyhedral region at one of its points: per cell
    containing x, keep the active inequality rows homogenized together with
    all equalities."""
    x = np.asarray(x, dtype=float).ravel()
    pieces = []
    for cell in region.nonempty_cells():
        if not cell.contains(x, tol=MEMBER_TOL):
            continue
        act = _active_rows(cell, x)
        A = cell.A[act] if act else None
        b = np.zeros(len(act)) if act else None
        pieces.append(PolyCell(A, b, cell.E, np.zeros(cell.E.shape[0]), dim=region.dim))
    if not pieces:
        raise TangentError("base point lies outside the region")
    return Region(pieces, cone=True, dim=region.dim)


# ---------------------------------------------------------------------------
# epsilon-proximal membership
# ---------------------------------------------------------------------------


def eps_proximal_membership(s: BaseSet, x, v, eps: float) -> bool:
    """True iff dist(v, proximal normal cone at x) <= eps * |v|."""
    return len(eps_proximal_filter(s, x, [v], eps)) == 1


def eps_proximal_filter(s: BaseSet, x, vs, eps: float) -> list:
    """The members of vs within relative distance eps of the proximal
    normal cone at x; the cone is built once for the whole batch."""
    if not 0.0 <= eps < 1.0:
        raise TangentError("eps must lie in [0, 1)")
    x = _require_member(s, x)
    cell = _proximal_cell(s, x)
    out = []
    for v in vs:
        v = _vec(v, s.dim)
        nv = float(np.linalg.norm(v))
        if nv <= TOL:
            out.append(v)
        elif eps <= 0.0:
            # distance at most 1e-9 degenerates to membership
            if cell.contains(v, tol=1e-9):
                out.append(v)
        else:
            res = cell.project(v)
            if res is not None and res[0] <= eps * nv + 1e-9:
                out.append(v)
    return out
