"""Polyhedral region algebra: finite unions of closed convex cells.

Every derived first- and second-order variational object in this package is
represented as a Region: a finite union of closed convex polyhedral cells,
each an intersection of linear inequalities and equalities.  This module is
the exact calculus on that representation: membership, inclusion testing,
distance and projection, support functions, Minkowski sums, polarity, the
face complex of a union, Frechet/limiting normal values of the region
itself, and the lower generalized support function evaluated through the
face complex with a perturbation-schedule cross check.

Design constraints worth knowing before reading on:

* all rows are unit-normalized at construction, so one absolute tolerance
  (1e-9 on residuals) means the same thing everywhere;
* a cell detected as structurally infeasible is stored as the canonical
  marker row 0 @ x <= -1;
* inclusion queries are decided by enumerating, per covering cell, which of
  its rows is violated, and maximizing the joint violation margin by LP.  A
  positive margin is a certified non-inclusion witness; if every assignment
  has nonpositive margin the inclusion holds up to the tolerance band.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .extreal import ExtReal
from . import lp as _lp

MEMBER_TOL = 1e-9
MARGIN_TOL = 1e-7
FACE_CAP = 12
ROW_CAP = 18


class RegionError(Exception):
    pass


def _rows(mat, dim):
    if mat is None:
        return np.zeros((0, dim))
    out = np.asarray(mat, dtype=float)
    if out.size == 0:
        return np.zeros((0, dim))
    return out.reshape(-1, dim)


class PolyCell:
    """One closed convex cell {x : A x <= b, E x = f} with normalized rows."""

    __slots__ = ("dim", "A", "b", "E", "f", "_empty", "_gens", "_forced_empty")

    def __init__(self, ineq_mat=None, ineq_rhs=None, eq_mat=None, eq_rhs=None, dim=None):
        if dim is None:
            for m in (ineq_mat, eq_mat):
                if m is not None and np.asarray(m).ndim == 2:
                    dim = np.asarray(m).shape[1]
                    break
            else:
                raise RegionError("cell dimension cannot be inferred")
        self.dim = int(dim)
        A = _rows(ineq_mat, self.dim)
        b = np.asarray(ineq_rhs, dtype=float).ravel() if ineq_rhs is not None else np.zeros(0)
        E = _rows(eq_mat, self.dim)
        f = np.asarray(eq_rhs, dtype=float).ravel() if eq_rhs is not None else np.zeros(0)
        if A.shape[0] != b.size or E.shape[0] != f.size:
            raise RegionError("row/rhs shape mismatch")
        forced_empty = False
        keepA, keepb = [], []
        for a, beta in zip(A, b):
            nr = float(np.linalg.norm(a))
            if nr <= MEMBER_TOL:
                if beta < -MEMBER_TOL:
                    forced_empty = True
                continue  # 0 <= beta: vacuous
            keepA.append(a / nr)
            keepb.append(beta / nr)
        keepE, keepf = [], []
        for e, phi in zip(E, f):
            nr = float(np.linalg.norm(e))
            if nr <= MEMBER_TOL:
                if abs(phi) > MEMBER_TOL:
                    forced_empty = True
                continue
            keepE.append(e / nr)
            keepf.append(phi / nr)
        if forced_empty:
            self.A = np.zeros((1, self.dim))
            self.b = np.array([-1.0])
            self.E = np.zeros((0, self.dim))
            self.f = np.zeros(0)
        else:
            self.A = np.array(keepA) if keepA else np.zeros((0, self.dim))
            self.b = np.array(keepb) if keepb else np.zeros(0)
            self.E = np.array(keepE) if keepE else np.zeros((0, self.dim))
            self.f = np.array(keepf) if keepf else np.zeros(0)
        self._forced_empty = forced_empty
        self._empty = True if forced_empty else None
        self._gens = None

    # -- constructors -------------------------------------------------
    @classmethod
    def all_space(cls, dim: int) -> "PolyCell":
        return cls(dim=dim)

    @classmethod
    def empty_marker(cls, dim: int) -> "PolyCell":
        c = cls(dim=dim)
        c.A = np.zeros((1, dim))
        c.b = np.array([-1.0])
        c._forced_empty = True
        c._empty = True
        return c

    @classmethod
    def from_point(cls, x) -> "PolyCell":
        x = np.asarray(x, dtype=float).ravel()
        return cls(eq_mat=np.eye(x.size), eq_rhs=x, dim=x.size)

    # -- basic queries ------------------------------------------------
    def contains(self, x, tol: float = MEMBER_TOL) -> bool:
        x = np.asarray(x, dtype=float).ravel()
        if x.size != self.dim:
            raise RegionError(f"dimension mismatch: {x.size} vs {self.dim}")
        if self._forced_empty:
            return False
        ok = True
        if self.A.shape[0]:
            ok = ok and bool(np.all(self.A @ x <= self.b + tol))
        if ok and self.E.shape[0]:
            ok = bool(np.all(np.abs(self.E @ x - self.f) <= tol))
        return ok

    def is_empty(self) -> bool:
        if self._empty is None:
            out = _lp.maximize(np.zeros(self.dim), self.A, self.b, self.E, self.f)
            self._empty = out.status == "infeasible"
        return self._empty

    def generators(self):
        """(vertices, rays, lines), or None when the cell is empty."""
        if self._forced_empty:
            return None
        if self._gens is None:
            self._gens = _lp.cell_generators_arrays(self.A, self.b, self.E, self.f)
            if self._gens is None:
                self._empty = True
        return self._gens

    def support(self, lam) -> tuple[ExtReal, np.ndarray | None]:
        lam = np.asarray(lam, dtype=float).ravel()
        out = _lp.maximize(lam, self.A, self.b, self.E, self.f)
        if out.status == "infeasible":
            return ExtReal.minus_inf(), None
        if out.status == "unbounded":
            return ExtReal.plus_inf(), out.ray
        return ExtReal.of(out.value), out.point

    # -- algebra ------------------------------------------------------
    def intersect(self, other: "PolyCell") -> "PolyCell":
        if other.dim != self.dim:
            raise RegionError("dimension mismatch in intersection")
        return PolyCell(np.vstack([self.A, other.A]), np.concatenate([self.b, other.b]),
                        np.vstack([self.E, other.E]), np.concatenate([self.f, other.f]),
                        dim=self.dim)

    def translate(self, v) -> "PolyCell":
        v = np.asarray(v, dtype=float).ravel()
        return PolyCell(self.A, self.b + (self.A @ v if self.A.size else np.zeros(0)),
                        self.E, self.f + (self.E @ v if self.E.size else np.zeros(0)),
                        dim=self.dim)

    def affine_preimage(self, M, c) -> "PolyCell":
        """{w : M w + c in cell}."""
        M = np.asarray(M, dtype=float)
        c = np.asarray(c, dtype=float).ravel()
        if M.shape[0] != self.dim or c.size != self.dim:
            raise RegionError("affine map shape mismatch")
        wdim = M.shape[1]
        if self._forced_empty:
            return PolyCell.empty_marker(wdim)
        A2 = self.A @ M if self.A.size else np.zeros((0, wdim))
        b2 = self.b - (self.A @ c if self.A.size else np.zeros(0))
        E2 = self.E @ M if self.E.size else np.zeros((0, wdim))
        f2 = self.f - (self.E @ c if self.E.size else np.zeros(0))
        return PolyCell(A2, b2, E2, f2, dim=wdim)

    def with_equality(self, a, beta: float) -> "PolyCell":
        a = np.asarray(a, dtype=float).ravel()
        return PolyCell(self.A, self.b,
                        np.vstack([self.E, a.reshape(1, -1)]),
                        np.concatenate([self.f, [beta]]), dim=self.dim)

    def is_homogeneous(self, tol: float = 1e-9) -> bool:
        okb = not self.b.size or np.max(np.abs(self.b)) <= tol
        okf = not self.f.size or np.max(np.abs(self.f)) <= tol
        return okb and okf

    # -- metric -------------------------------------------------------
    def project(self, x) -> tuple[float, np.ndarray] | None:
        """Exact Euclidean projection via active-subset enumeration.

        The projection of x onto the cell coincides with the projection onto
        the affine hull of its active rows, so scanning row subsets of size
        up to dim (plus all equalities) and keeping feasible candidates is
        exhaustive."""
        x = np.asarray(x, dtype=float).ravel()
        if self.is_empty():
            return None
        m = self.A.shape[0]
        if m > ROW_CAP:
            raise RegionError(f"projection row cap exceeded: {m} > {ROW_CAP}")
        # candidate feasibility first at float resolution, so distances stay
        # exact down to ~1e-12, relaxing only for ill-conditioned active sets
        tight = 1e-12 * (1.0 + float(np.linalg.norm(x)))
        for tol in (tight, 1e-7):
            best = None
            for size in range(0, min(m, self.dim) + 1):
                for T in itertools.combinations(range(m), size):
                    W = np.vstack([self.A[list(T)], self.E]) if (T or self.E.size) else np.zeros((0, self.dim))
                    h = np.concatenate([self.b[list(T)], self.f]) if (T or self.f.size) else np.zeros(0)
                    if W.shape[0] == 0:
                        y = x.copy()
                    else:
                        # projection of x onto {W y = h}
                        resid = W @ x - h
                        y = x - W.T @ np.linalg.pinv(W @ W.T, rcond=1e-12) @ resid
                    if not self.contains(y, tol=tol):
                        continue
                    d = float(np.linalg.norm(y - x))
                    if best is None or d < best[0] - 1e-12:
                        best = (d, y)
            if best is not None:
                return best
        raise RegionError("projection enumeration found no feasible candidate")

    def implicit_equalities(self) -> list[int]:
        """Indices of inequality rows that hold with equality on the cell."""
        out = []
        for i in range(self.A.shape[0]):
            low = _lp.maximize(-self.A[i], self.A, self.b, self.E, self.f)
            if low.status == "optimal" and -low.value >= self.b[i] - 1e-9:
                out.append(i)
        return out

    def relint_point(self) -> tuple[np.ndarray, float] | None:
        """A point in the relative interior plus its margin on strict rows."""
        if self.is_empty():
            return None
        impl = set(self.implicit_equalities())
        strict = [i for i in range(self.A.shape[0]) if i not in impl]
        # variables (x, t): maximize t with margin t on strict rows
        n = self.dim
        rows, rhs = [], []
        for i in strict:
            rows.append(np.concatenate([self.A[i], [1.0]]))
            rhs.append(self.b[i])
        rows.append(np.concatenate([np.zeros(n), [1.0]]))
        rhs.append(1.0)
        eq_rows = []
        eq_rhs = []
        for i in impl:
            eq_rows.append(np.concatenate([self.A[i], [0.0]]))
            eq_rhs.append(self.b[i])
        for j in range(self.E.shape[0]):
            eq_rows.append(np.concatenate([self.E[j], [0.0]]))
            eq_rhs.append(self.f[j])
        obj = np.concatenate([np.zeros(n), [1.0]])
        out = _lp.maximize(obj, np.array(rows), np.array(rhs),
                           np.array(eq_rows) if eq_rows else None,
                           np.array(eq_rhs) if eq_rhs else None)
        if out.status != "optimal":
            return None
        return out.point[:n], float(out.value)

    def __repr__(self):
        return f"PolyCell(dim={self.dim}, ineq={self.A.shape[0]}, eq={self.E.shape[0]})"


class Region:
    """Finite union of PolyCells, optionally flagged as a cone."""

    __slots__ = ("dim", "cells", "cone", "notes", "_nonempty")

    def __init__(self, cells, cone: bool = False, notes: tuple[str, ...] = (), dim=None):
        cells = tuple(cells)
        if dim is None:
            if not cells:
                raise RegionError("empty cell list needs an explicit dimension")
            dim = cells[0].dim
        for c in cells:
            if c.dim != dim:
                raise RegionError("mixed cell dimensions in region")
        self.dim = int(dim)
        self.cells = cells
        self.cone = bool(cone)
        self.notes = tuple(notes)
        self._nonempty = None

    # -- constructors -------------------------------------------------
    @classmethod
    def empty(cls, dim: int, cone: bool = False, notes=()) -> "Region":
        return cls((), cone=cone, notes=notes, dim=dim)

    @classmethod
    def all_space(cls, dim: int, cone: bool = True) -> "Region":
        return cls((PolyCell.all_space(dim),), cone=cone, dim=dim)

    @classmethod
    def from_cell(cls, cell: PolyCell, cone: bool = False, notes=()) -> "Region":
        return cls((cell,), cone=cone, notes=notes)

    @classmethod
    def from_point(cls, x) -> "Region":
        x = np.asarray(x, dtype=float).ravel()
        return cls.from_cell(PolyCell.from_point(x),
                             cone=bool(np.linalg.norm(x) <= MEMBER_TOL))

    @classmethod
    def origin(cls, dim: int) -> "Region":
        return cls.from_cell(PolyCell.from_point(np.zeros(dim)), cone=True)

    @classmethod
    def halfspace(cls, normal, offset: float, cone=None) -> "Region":
        normal = np.asarray(normal, dtype=float).ravel()
        cell = PolyCell(normal.reshape(1, -1), [offset], dim=normal.size)
        if cone is None:
            cone = abs(offset) <= MEMBER_TOL
        return cls.from_cell(cell, cone=cone)

    # -- structure ----------------------------------------------------
    def nonempty_cells(self) -> tuple[PolyCell, ...]:
        if self._nonempty is None:
            self._nonempty = tuple(c for c in self.cells if not c.is_empty())
        return self._nonempty

    def is_empty(self) -> bool:
        return len(self.nonempty_cells()) == 0

    def contains(self, x, tol: float = MEMBER_TOL) -> bool:
        return any(c.contains(x, tol=tol) for c in self.cells)

    def with_notes(self, *extra: str) -> "Region":
        return Region(self.cells, cone=self.cone, notes=self.notes + tuple(extra), dim=self.dim)

    def with_cone_flag(self, flag: bool = True) -> "Region":
        return Region(self.cells, cone=flag, notes=self.notes, dim=self.dim)

    def union(self, other: "Region") -> "Region":
        if other.dim != self.dim:
            raise RegionError("dimension mismatch in union")
        return Region(self.cells + other.cells, cone=self.cone and other.cone,
                      notes=self.notes + other.notes, dim=self.dim)

    # -- pointwise ops ------------------------------------------------
    def support(self, lam) -> ExtReal:
        best = ExtReal.minus_inf()
        for c in self.nonempty_cells():
            v, _ = c.support(lam)
            if v > best:
                best = v
            if best.is_plus_inf:
                break
        return best

    def support_with_witness(self, lam) -> tuple[ExtReal, np.ndarray | None]:
        best, wit = ExtReal.minus_inf(), None
        for c in self.nonempty_cells():
            v, w = c.support(lam)
            if v > best:
                best, wit = v, w
            if best.is_plus_inf:
                break
        return best, wit

    def distance(self, x) -> tuple[ExtReal, list[np.ndarray]]:
        """Exact distance plus all projection points found (deduplicated)."""
        best = None
        pts: list[np.ndarray] = []
        for c in self.nonempty_cells():
            res = c.project(x)
            if res is None:
                continue
            d, y = res
            if best is None or d < best - 1e-9:
                best, pts = d, [y]
            elif abs(d - best) <= 1e-9 and not any(np.linalg.norm(y - p) <= 1e-7 for p in pts):
                pts.append(y)
        if best is None:
            return ExtReal.plus_inf(), []
        return ExtReal.of(best), pts

    # -- transforms ---------------------------------------------------
    def translate(self, v) -> "Region":
        return Region([c.translate(v) for c in self.cells], cone=False,
                      notes=self.notes, dim=self.dim)

    def affine_preimage(self, M, c) -> "Region":
        M = np.asarray(M, dtype=float)
        cells = [cell.affine_preimage(M, c) for cell in self.cells]
        cone = self.cone and np.linalg.norm(np.asarray(c, dtype=float)) <= MEMBER_TOL
        return Region(cells, cone=cone, notes=self.notes, dim=M.shape[1])

    def intersect_orthocomplement(self, d) -> "Region":
        d = np.asarray(d, dtype=float).ravel()
        cells = [c.with_equality(d, 0.0) for c in self.cells]
        return Region(cells, cone=self.cone, notes=self.notes, dim=self.dim)

    def intersect(self, other: "Region") -> "Region":
        if other.dim != self.dim:
            raise RegionError("dimension mismatch in intersection")
        cells = [c1.intersect(c2) for c1 in self.cells for c2 in other.cells]
        return Region(cells, cone=self.cone and other.cone,
                      notes=self.notes + other.notes, dim=self.dim)

    def minkowski_sum(self, other: "Region") -> "Region":
        """Cellwise Minkowski sum through generator representations."""
        if other.dim != self.dim:
            raise RegionError("dimension mismatch in Minkowski sum")
        out = []
        for c1 in self.nonempty_cells():
            g1 = c1.generators()
            if g1 is None:
                continue
            for c2 in other.nonempty_cells():
                g2 = c2.generators()
                if g2 is None:
                    continue
                V = np.array([v1 + v2 for v1 in g1[0] for v2 in g2[0]])
                R = np.vstack([g1[1], g2[1]])
                L = np.vstack([g1[2], g2[2]])
                A, b, E, f = _lp.cell_from_generators_arrays(V, R, L, self.dim)
                out.append(PolyCell(A, b, E, f, dim=self.dim))
        return Region(out, cone=self.cone and other.cone, dim=self.dim)

    def __repr__(self):
        tag = ", cone" if self.cone else ""
        return f"Region(dim={self.dim}, cells={len(self.cells)}{tag})"


# ---------------------------------------------------------------------------
# cone operations
# ---------------------------------------------------------------------------


def double_description(cell: PolyCell):
    """Generator representation (vertices, rays, lines) of one cell."""
    return cell.generators()


def polar_cone(region: Region) -> Region:
    """Polar of a cone-flagged region.  The polar of a union is the
    intersection of the member polars, which is a single convex cell."""
    if not region.cone:
        raise RegionError("polar_cone requires a cone-flagged region")
    cells = region.nonempty_cells()
    if not cells:
        return Region.all_space(region.dim)
    ineq_rows, eq_rows = [], []
    for c in cells:
        if not c.is_homogeneous(tol=1e-7):
            raise RegionError("polar_cone given a non-homogeneous cell")
        gens = c.generators()
        if gens is None:
            continue
        _, rays, lines = gens
        for v in gens[0]:
            if np.linalg.norm(v) > 1e-7:  # pragma: no cover - homogeneous cells
                raise RegionError("cone cell has a nonzero vertex")
        if rays.size:
            ineq_rows.append(rays)
        if lines.size:
            eq_rows.append(lines)
    A = np.vstack(ineq_rows) if ineq_rows else np.zeros((0, region.dim))
    E = np.vstack(eq_rows) if eq_rows else np.zeros((0, region.dim))
    cell = PolyCell(A, np.zeros(A.shape[0]), E, np.zeros(E.shape[0]), dim=region.dim)
    return Region.from_cell(cell, cone=True)


def cone_hull(regions) -> Region:
    """Closed convex conic hull of one region or a list of cone regions."""
    if isinstance(regions, Region):
        regions = [regions]
    regions = list(regions)
    if not regions:
        raise RegionError("cone_hull of nothing")
    dim = regions[0].dim
    rays, lines = [], []
    any_nonempty = False
    for r in regions:
        if r.dim != dim:
            raise RegionError("mixed dimensions in cone_hull")
        for c in r.nonempty_cells():
            gens = c.generators()
            if gens is None:
                continue
            any_nonempty = True
            V, R, L = gens
            for v in V:
                if np.linalg.norm(v) > 1e-9:
                    rays.append(v)
            rays.extend(R)
            lines.extend(L)
    if not any_nonempty:
        return Region.empty(dim, cone=True)
    ineq, eq = _lp.cone_from_generators(
        np.array(rays) if rays else np.zeros((0, dim)),
        np.array(lines) if lines else np.zeros((0, dim)), dim)
    cell = PolyCell(ineq, np.zeros(ineq.shape[0]), eq, np.zeros(eq.shape[0]), dim=dim)
    return Region.from_cell(cell, cone=True)


def cone_is_trivial(region: Region) -> bool:
    """True iff the cone region contains no nonzero vector.

    Per cell, 2*dim capped LPs (max +-x_i subject to the cell and x_i <= 1).
    On a cone any nonzero member scales into the cap, so a positive optimum
    is conclusive in both directions.  The empty region counts as trivial."""
    if not region.cone:
        raise RegionError("cone_is_trivial requires a cone-flagged region")
    for c in region.nonempty_cells():
        n = c.dim
        for i in range(n):
            for sgn in (1.0, -1.0):
                obj = np.zeros(n)
                obj[i] = sgn
                A = np.vstack([c.A, obj.reshape(1, -1)])
                b = np.concatenate([c.b, [1.0]])
                out = _lp.maximize(obj, A, b, c.E, c.f)
                if out.status == "optimal" and out.value > 1e-8:
                    return False
    return True


def strict_negativity_on_cone(region: Region, c) -> bool:
    """True iff <c, w> < 0 for every nonzero w in the cone region.

    Equivalent to: each cell intersected with the halfspace {<c, w> >= 0}
    is the trivial cone.  Vectors in the kernel of <c, .> therefore count as
    failures, matching the strict inequality read on the image side."""
    if not region.cone:
        raise RegionError("strict_negativity_on_cone requires a cone-flagged region")
    c = np.asarray(c, dtype=float).ravel()
    half = PolyCell((-c).reshape(1, -1), [0.0], dim=region.dim)
    for cell in region.nonempty_cells():
        probe = Region.from_cell(cell.intersect(half), cone=True)
        if not cone_is_trivial(probe):
            return False
    return True


# ---------------------------------------------------------------------------
# comparison
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CompareResult:
    relation: str  # "equal" | "strict_subset" | "strict_superset" | "incomparable"
    r1_empty: bool
    r2_empty: bool
    only_in_r1: np.ndarray | None = None
    only_in_r2: np.ndarray | None = None


def _cell_inside_cell(cell: PolyCell, other: PolyCell) -> bool:
    """True when every point of cell satisfies all rows of other."""
    for i in range(other.A.shape[0]):
        val, _ = cell.support(other.A[i])
        if val > ExtReal.of(float(other.b[i]) + MARGIN_TOL):
            return False
    for j in range(other.E.shape[0]):
        for sgn in (1.0, -1.0):
            val, _ = cell.support(sgn * other.E[j])
            if val > ExtReal.of(sgn * float(other.f[j]) + MARGIN_TOL):
                return False
    return True


def _cell_subset_of_union(cell: PolyCell, cover: tuple[PolyCell, ...]):
    """None when cell is covered by the union; otherwise a witness point.

    Enumerates one violated row per covering cell (equalities contribute
    their two one-sided violations), maximizing the joint margin by a
    depth-first search that prunes any partial choice already infeasible."""
    if cell.is_empty():
        return None
    relint = cell.relint_point()
    # cheap exits: the relint point escapes every cover, or one cover absorbs
    if relint is not None and all(not D.contains(relint[0], tol=MARGIN_TOL)
                                  for D in cover):
        return relint[0]
    pruned, seen = [], set()
    for D in cover:
        if D.is_empty() or cell.intersect(D).is_empty():
            continue  # nothing of cell to cover; no row needs violating
        key = (D.A.tobytes(), D.b.tobytes(), D.E.tobytes(), D.f.tobytes())
        if key in seen:
            continue
        seen.add(key)
        if _cell_inside_cell(cell, D):
            return None
        pruned.append(D)
    if not pruned:
        return cell.relint_point()[0]
    options = []
    for D in pruned:
        opts = [(D.A[i], D.b[i]) for i in range(D.A.shape[0])]
        for j in range(D.E.shape[0]):
            opts.append((D.E[j], D.f[j]))
            opts.append((-D.E[j], -D.f[j]))
        if not opts:
            return None  # an all-space cell covers everything
        options.append(opts)
    n = cell.dim
    base_rows = [np.concatenate([cell.A[i], [0.0]]) for i in range(cell.A.shape[0])]
    base_rhs = list(cell.b)
    base_rows.append(np.concatenate([np.zeros(n), [1.0]]))
    base_rhs.append(1.0)
    eq = [np.concatenate([cell.E[j], [0.0]]) for j in range(cell.E.shape[0])]
    eqr = list(cell.f)
    obj = np.concatenate([np.zeros(n), [1.0]])

    def best_point(rows, rhs):
        # variables (x, t): maximize t s.t. x in cell, a_j x - b_j >= t per choice
        out = _lp.maximize(obj, np.array(rows), np.array(rhs),
                           np.array(eq) if eq else None,
                           np.array(eqr) if eqr else None)
        if out.status == "optimal" and out.value > MARGIN_TOL:
            return out.point[:n]
        return None

    def search(idx, rows, rhs):
        point = best_point(rows, rhs)
        if point is None:
            return None  # the partial system is already covered; prune
        if idx == len(options):
            return point
        for a, beta in options[idx]:
            hit = search(idx + 1,
                         rows + [np.concatenate([-a, [1.0]])],
                         rhs + [-float(beta)])
            if hit is not None:
                return hit
        return None

    return search(0, base_rows, base_rhs)


def region_subset(r1: Region, r2: Region):
    """(included, witness): witness is a point of r1 outside r2 if any."""
    if r1.dim != r2.dim:
        raise RegionError("dimension mismatch in region comparison")
    cover = r2.nonempty_cells()
    for cell in r1.nonempty_cells():
        w = _cell_subset_of_union(cell, cover)
        if w is not None:
            return False, w
    return True, None


def region_compare(r1: Region, r2: Region) -> CompareResult:
    sub12, w12 = region_subset(r1, r2)
    sub21, w21 = region_subset(r2, r1)
    if sub12 and sub21:
        rel = "equal"
    elif sub12:
        rel = "strict_subset"
    elif sub21:
        rel = "strict_superset"
    else:
        rel = "incomparable"
    return CompareResult(rel, r1.is_empty(), r2.is_empty(),
                         only_in_r1=w12, only_in_r2=w21)


def region_equal(r1: Region, r2: Region) -> bool:
    return region_compare(r1, r2).relation == "equal"


# ---------------------------------------------------------------------------
# face complex and normal values of a polyhedral region
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RegionFace:
    """One closed face of the arrangement refinement of a region, with the
    constant Frechet normal value taken on its relative interior."""
    cell: PolyCell
    normal_cell: PolyCell
    sample: np.ndarray
    signs: tuple[int, ...]


def _hyperplanes_of(region: Region) -> list[tuple[np.ndarray, float]]:
    seen = {}
    for c in region.nonempty_cells():
        for a, beta in itertools.chain(zip(c.A, c.b), zip(c.E, c.f)):
            v = np.concatenate([a, [beta]])
            # canonical orientation: first significant entry positive
            for comp in v:
                if abs(comp) > 1e-12:
                    if comp < 0:
                        v = -v
                    break
            key = tuple(np.round(v, 9))
            seen.setdefault(key, (v[:-1], float(v[-1])))
    return list(seen.values())


def _margin_lp(hyperplanes, signs, dim):
    """Max-margin relative-interior LP for a partial sign assignment."""
    rows, rhs, eq, eqr = [], [], [], []
    for (a, beta), s in zip(hyperplanes, signs):
        if s == 0:
            eq.append(np.concatenate([a, [0.0]]))
            eqr.append(beta)
        elif s < 0:
            rows.append(np.concatenate([a, [1.0]]))
            rhs.append(beta)
        else:
            rows.append(np.concatenate([-a, [1.0]]))
            rhs.append(-beta)
    rows.append(np.concatenate([np.zeros(dim), [1.0]]))
    rhs.append(1.0)
    obj = np.concatenate([np.zeros(dim), [1.0]])
    out = _lp.maximize(obj, np.array(rows), np.array(rhs),
                       np.array(eq) if eq else None,
                       np.array(eqr) if eqr else None)
    if out.status != "optimal":
        return -np.inf, None
    return float(out.value), out.point[:dim]


def _frechet_value_at(region: Region, x: np.ndarray) -> PolyCell:
    """Frechet normal cone of the region at x, as one convex cone cell:
    the intersection over member cells containing x of the polars of their
    tangent cones (polar of a union is the intersection of polars)."""
    dim = region.dim
    ineq_rows, eq_rows = [], []
    hit = False
    for c in region.nonempty_cells():
        if not c.contains(x, tol=1e-8):
            continue
        hit = True
        act = [i for i in range(c.A.shape[0]) if abs(c.A[i] @ x - c.b[i]) <= 1e-8]
        rays = c.A[act] if act else np.zeros((0, dim))
        ineq, eq = _lp.cone_from_generators(rays, c.E, dim)
        if ineq.size:
            ineq_rows.append(ineq)
        if eq.size:
            eq_rows.append(eq)
    if not hit:
        raise RegionError("Frechet value requested at a point outside the region")
    A = np.vstack(ineq_rows) if ineq_rows else np.zeros((0, dim))
    E = np.vstack(eq_rows) if eq_rows else np.zeros((0, dim))
    return PolyCell(A, np.zeros(A.shape[0]), E, np.zeros(E.shape[0]), dim=dim)


def face_complex(region: Region) -> list[RegionFace]:
    """All closed faces of the arrangement refinement that lie inside the
    region, each with its relative-interior sample and Frechet normal value."""
    cells = region.nonempty_cells()
    if not cells:
        return []
    dim = region.dim
    hps = _hyperplanes_of(region)
    if len(hps) > FACE_CAP:
        raise RegionError(f"face complex cap exceeded: {len(hps)} hyperplanes > {FACE_CAP}")
    faces: list[RegionFace] = []

    def rec(signs: list[int]):
        val, x = _margin_lp(hps[: len(signs)], signs, dim)
        if val <= 1e-7:
            return
        if len(signs) == len(hps):
            if not any(c.contains(x, tol=1e-9) for c in cells):
                return
            rows, rhs, eq, eqr = [], [], [], []
            for (a, beta), s in zip(hps, signs):
                if s == 0:
                    eq.append(a)
                    eqr.append(beta)
                elif s < 0:
                    rows.append(a)
                    rhs.append(beta)
                else:
                    rows.append(-a)
                    rhs.append(-beta)
            face = PolyCell(np.array(rows) if rows else None,
                            np.array(rhs) if rhs else None,
                            np.array(eq) if eq else None,
                            np.array(eqr) if eqr else None, dim=dim)
            faces.append(RegionFace(face, _frechet_value_at(region, x), x, tuple(signs)))
            return
        for s in (0, -1, 1):
            signs.append(s)
            rec(signs)
            signs.pop()

    rec([])
    return faces


def limiting_normal_region(region: Region, x) -> Region:
    """Limiting normal cone of a polyhedral-union region at x: the union of
    the Frechet values over all faces whose closure contains x."""
    x = np.asarray(x, dtype=float).ravel()
    if not region.contains(x, tol=1e-8):
        raise RegionError("limiting normal requested at a point outside the region")
    pieces = []
    for face in face_complex(region):
        if face.cell.contains(x, tol=1e-8):
            pieces.append(face.normal_cell)
    return Region(pieces, cone=True, dim=region.dim)


# ---------------------------------------------------------------------------
# lower generalized support function
# ---------------------------------------------------------------------------


def _piece_contribution(face: RegionFace, wcell: PolyCell, lam: np.ndarray):
    """Contribution of one (face, window-cell) piece to the lower limit, or
    None when the piece is empty.  Returns (ExtReal, tilt_direction|None)."""
    P = face.cell.intersect(wcell)
    gens = P.generators()
    if gens is None:
        return None
    V, R, L = gens
    dirs = [r for r in R] + [l for l in L] + [-l for l in L]
    for r in dirs:
        s = float(lam @ r)
        if s < -1e-9:
            return ExtReal.minus_inf(), None
    # tilt analysis: a recession direction with lam @ r == 0 forces the value
    # to -inf whenever lam can move inside the normal value against r
    N = face.normal_cell
    act = [i for i in range(N.A.shape[0]) if abs(N.A[i] @ lam) <= 1e-9]
    for r in dirs:
        if abs(float(lam @ r)) > 1e-9:
            continue
        rows = [np.concatenate([N.A[i], [0.0]]) for i in act]
        rhs = [0.0] * len(act)
        rows.append(np.concatenate([r, [1.0]]))  # r@mu + t <= 0, i.e. t <= -r@mu
        rhs.append(0.0)
        rows.append(np.concatenate([np.zeros(lam.size), [1.0]]))
        rhs.append(1.0)
        eq = [np.concatenate([N.E[j], [0.0]]) for j in range(N.E.shape[0])]
        eqr = [0.0] * N.E.shape[0]
        obj = np.concatenate([np.zeros(lam.size), [1.0]])
        out = _lp.maximize(obj, np.array(rows), np.array(rhs),
                           np.array(eq) if eq else None,
                           np.array(eqr) if eqr else None)
        if out.status == "optimal" and out.value > 1e-8:
            return ExtReal.minus_inf(), out.point[: lam.size]
    vals = [float(lam @ v) for v in V]
    return ExtReal.of(min(vals)), None


def _value_at(faces, window_cells, lam: np.ndarray) -> ExtReal:
    """inf{<lam, u> : lam is a Frechet normal at u, u in window}: the direct
    (no lower limit) evaluation used by the perturbation cross-check."""
    best = None
    for face in faces:
        if not face.normal_cell.contains(lam, tol=1e-9):
            continue
        for w in window_cells:
            P = face.cell.intersect(w)
            out = _lp.maximize(-lam, P.A, P.b, P.E, P.f)
            if out.status == "infeasible":
                continue
            if out.status == "unbounded":
                return ExtReal.minus_inf()
            v = ExtReal.of(-out.value)
            if best is None or v < best:
                best = v
    return best if best is not None else ExtReal.plus_inf()


def lower_gen_support_detail(region: Region, lam, window: Region | None = None):
    """Lower generalized support of a polyhedral region at lam, restricted
    to a window region; returns (value, notes).

    Face-complex evaluation of the lower limit, including the lam-tilt
    effects on unbounded faces, cross-checked by direct evaluation along a
    shrinking perturbation schedule around lam."""
    lam = np.asarray(lam, dtype=float).ravel()
    if lam.size != region.dim:
        raise RegionError("lam dimension mismatch")
    if window is not None and window.dim != region.dim:
        raise RegionError("window dimension mismatch")
    if region.is_empty():
        return ExtReal.minus_inf(), ()
    window_cells = window.nonempty_cells() if window is not None else (PolyCell.all_space(region.dim),)
    if window is not None and not window_cells:
        # empty window: no admissible u at all
        return ExtReal.plus_inf(), ()
    faces = face_complex(region)
    best = None
    tilt_dirs: list[np.ndarray] = []
    for face in faces:
        if not face.normal_cell.contains(lam, tol=1e-9):
            continue
        for w in window_cells:
            res = _piece_contribution(face, w, lam)
            if res is None:
                continue
            v, tilt = res
            if tilt is not None:
                tilt_dirs.append(tilt)
            if best is None or v < best:
                best = v
    value = best if best is not None else ExtReal.plus_inf()

    # Perturbation-schedule cross check.  A -inf reading on any shell is a
    # genuine signal (on polyhedral data it persists as the radius shrinks);
    # finite readings are compared on the smallest shell only, since a shell
    # of radius r may be off by O(r) from the lower limit.
    notes: tuple[str, ...] = ()
    dirs = [np.eye(region.dim)[i] * s for i in range(region.dim) for s in (1.0, -1.0)]
    dirs += [d / np.linalg.norm(d) for d in tilt_dirs if np.linalg.norm(d) > 1e-12]
    center = _value_at(faces, window_cells, lam)
    minus_inf_seen = center.is_minus_inf
    last_shell = ExtReal.plus_inf()
    for k in (4, 5, 6):
        radius = 10.0 ** (-k)
        last_shell = min((_value_at(faces, window_cells, lam + radius * d) for d in dirs),
                         default=ExtReal.plus_inf())
        if last_shell.is_minus_inf:
            minus_inf_seen = True
    est = ExtReal.minus_inf() if minus_inf_seen else min(center, last_shell)
    if value.is_finite and est.is_finite:
        agree = abs(float(value) - float(est)) <= 1e-4 * (1.0 + abs(float(value)))
    else:
        agree = (value.is_plus_inf and est.is_plus_inf) or \
                (value.is_minus_inf and est.is_minus_inf)
    if not agree:
        notes = (f"boundary-inconclusive: face-complex value {value!r} vs "
                 f"perturbation estimate {est!r}",)
    return value, notes


def lower_gen_support(region: Region, lam, window: Region | None = None) -> ExtReal:
    value, _ = lower_gen_support_detail(region, lam, window)
    return value


def region_support(region: Region, lam) -> ExtReal:
    return region.support(lam)
