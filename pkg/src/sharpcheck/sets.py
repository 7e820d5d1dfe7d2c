"""Catalog of closed sets: constructive descriptions with exact distance.

The toolkit restricts K and S to a fixed catalog (intervals, boxes,
halfspaces, polyhedra, balls, points, finite sets, unions, products) so
that every derived tangent/normal object is exactly representable.  Each
constructor knows its own membership test and exact Euclidean projection;
unions take minima over members, products combine coordinatewise.
"""
from __future__ import annotations

import math
from abc import ABC, abstractmethod

import numpy as np

from .regions import PolyCell, Region, RegionError
from . import lp as _lp

TOL = 1e-9


class SetError(Exception):
    pass


def _vec(x, dim=None) -> np.ndarray:
    out = np.asarray(x, dtype=float).ravel()
    if dim is not None and out.size != dim:
        raise SetError(f"dimension mismatch: expected {dim}, got {out.size}")
    return out


def _dedupe_points(pts, tol=1e-7):
    out = []
    for p in pts:
        if not any(np.linalg.norm(p - q) <= tol for q in out):
            out.append(p)
    return out


class BaseSet(ABC):
    """A nonempty closed subset of R^dim from the catalog."""

    dim: int
    kind: str

    @abstractmethod
    def contains(self, y, tol: float = TOL) -> bool: ...

    @abstractmethod
    def distance(self, y) -> tuple[float, list[np.ndarray]]:
        """Exact distance and all projection points found."""

    def is_convex(self) -> bool:
        return True

    def as_region(self) -> Region | None:
        """Polyhedral Region equal to the set, or None if a ball leaf
        prevents an exact polyhedral description."""
        return None

    def to_json(self):
        raise NotImplementedError

    def sample_near(self, x, delta: float, rng, count: int) -> list[np.ndarray]:
        """Members within delta of x, by projecting ambient draws."""
        x = _vec(x, self.dim)
        out = []
        for _ in range(count):
            z = x + rng.uniform(-delta, delta, size=self.dim)
            _, projs = self.distance(z)
            for p in projs:
                if np.linalg.norm(p - x) <= delta + 1e-12:
                    out.append(p)
                    break
        return out

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim})"


class Interval(BaseSet):
    kind = "interval"

    def __init__(self, lo: float, hi: float):
        lo, hi = float(lo), float(hi)
        if math.isnan(lo) or math.isnan(hi) or lo > hi:
            raise SetError(f"bad interval [{lo}, {hi}]")
        if math.isinf(lo) and lo > 0 or math.isinf(hi) and hi < 0:
            raise SetError("interval endpoints out of order")
        self.lo, self.hi = lo, hi
        self.dim = 1

    def contains(self, y, tol=TOL):
        v = float(_vec(y, 1)[0])
        return self.lo - tol <= v <= self.hi + tol

    def distance(self, y):
        v = float(_vec(y, 1)[0])
        p = min(max(v, self.lo), self.hi)
        return abs(v - p), [np.array([p])]

    def as_region(self):
        rows, rhs = [], []
        if not math.isinf(self.hi):
            rows.append([1.0])
            rhs.append(self.hi)
        if not math.isinf(self.lo):
            rows.append([-1.0])
            rhs.append(-self.lo)
        return Region.from_cell(PolyCell(rows or None, rhs or None, dim=1))

    def to_json(self):
        enc = lambda v: ("inf" if v == math.inf else "-inf" if v == -math.inf else v)
        return {"kind": "interval", "lo": enc(self.lo), "hi": enc(self.hi)}


class Box(BaseSet):
    kind = "box"

    def __init__(self, intervals):
        self.intervals = [iv if isinstance(iv, Interval) else Interval(*iv) for iv in intervals]
        if not self.intervals:
            raise SetError("box needs at least one coordinate interval")
        self.dim = len(self.intervals)

    def contains(self, y, tol=TOL):
        y = _vec(y, self.dim)
        return all(iv.contains([v], tol) for iv, v in zip(self.intervals, y))

    def distance(self, y):
        y = _vec(y, self.dim)
        p = np.array([min(max(v, iv.lo), iv.hi) for iv, v in zip(self.intervals, y)])
        return float(np.linalg.norm(y - p)), [p]

    def as_region(self):
        rows, rhs = [], []
        for i, iv in enumerate(self.intervals):
            e = np.zeros(self.dim)
            e[i] = 1.0
            if not math.isinf(iv.hi):
                rows.append(e.copy())
                rhs.append(iv.hi)
            if not math.isinf(iv.lo):
                rows.append(-e)
                rhs.append(-iv.lo)
        return Region.from_cell(PolyCell(np.array(rows) if rows else None,
                                         np.array(rhs) if rhs else None, dim=self.dim))

    def to_json(self):
        return {"kind": "box", "intervals": [iv.to_json() for iv in self.intervals]}


class Halfspace(BaseSet):
    kind = "halfspace"

    def __init__(self, normal, offset: float):
        self.normal = _vec(normal)
        nr = float(np.linalg.norm(self.normal))
        if nr <= TOL:
            raise SetError("halfspace normal must be nonzero")
        self.offset = float(offset)
        self.dim = self.normal.size

    def contains(self, y, tol=TOL):
        y = _vec(y, self.dim)
        return float(self.normal @ y) <= self.offset + tol * np.linalg.norm(self.normal)

    def distance(self, y):
        y = _vec(y, self.dim)
        slack = float(self.normal @ y) - self.offset
        nr2 = float(self.normal @ self.normal)
        if slack <= 0:
            return 0.0, [y.copy()]
        p = y - (slack / nr2) * self.normal
        return slack / math.sqrt(nr2), [p]

    def as_region(self):
        return Region.from_cell(PolyCell(self.normal.reshape(1, -1), [self.offset], dim=self.dim))

    def to_json(self):
        return {"kind": "halfspace", "normal": list(self.normal), "offset": self.offset}


class Polyhedron(BaseSet):
    kind = "polyhedron"

    def __init__(self, rows=None, equalities=None, dim=None):
        rows = list(rows or [])
        equalities = list(equalities or [])
        if dim is None:
            src = rows or equalities
            if not src:
                raise SetError("polyhedron needs rows or an explicit dimension")
            dim = len(_vec(src[0][0]))
        self.dim = int(dim)
        self.cell = PolyCell(
            np.array([_vec(a, self.dim) for a, _ in rows]) if rows else None,
            np.array([float(b) for _, b in rows]) if rows else None,
            np.array([_vec(a, self.dim) for a, _ in equalities]) if equalities else None,
            np.array([float(b) for _, b in equalities]) if equalities else None,
            dim=self.dim)
        if self.cell.is_empty():
            raise SetError("polyhedron is empty; catalog sets must be nonempty")
        self.rows = [( _vec(a, self.dim), float(b)) for a, b in rows]
        self.equalities = [(_vec(a, self.dim), float(b)) for a, b in equalities]

    def contains(self, y, tol=TOL):
        return self.cell.contains(y, tol)

    def distance(self, y):
        d, p = self.cell.project(_vec(y, self.dim))
        return d, [p]

    def as_region(self):
        return Region.from_cell(self.cell)

    def to_json(self):
        return {"kind": "polyhedron",
                "rows": [[list(a), b] for a, b in self.rows],
                "equalities": [[list(a), b] for a, b in self.equalities],
                "dim": self.dim}


class Ball(BaseSet):
    kind = "ball"

    def __init__(self, center, radius: float):
        self.center = _vec(center)
        self.radius = float(radius)
        if self.radius <= 0:
            raise SetError("ball radius must be positive")
        self.dim = self.center.size

    def contains(self, y, tol=TOL):
        return float(np.linalg.norm(_vec(y, self.dim) - self.center)) <= self.radius + tol

    def distance(self, y):
        y = _vec(y, self.dim)
        gap = float(np.linalg.norm(y - self.center))
        if gap <= self.radius:
            return 0.0, [y.copy()]
        p = self.center + (self.radius / gap) * (y - self.center)
        return gap - self.radius, [p]

    def to_json(self):
        return {"kind": "ball", "center": list(self.center), "radius": self.radius}


class PointSet(BaseSet):
    kind = "point"

    def __init__(self, x):
        self.x = _vec(x)
        self.dim = self.x.size

    def contains(self, y, tol=TOL):
        return float(np.linalg.norm(_vec(y, self.dim) - self.x)) <= tol

    def distance(self, y):
        y = _vec(y, self.dim)
        return float(np.linalg.norm(y - self.x)), [self.x.copy()]

    def as_region(self):
        return Region.from_point(self.x)

    def to_json(self):
        return {"kind": "point", "x": list(self.x)}


class FiniteSet(BaseSet):
    kind = "finite"

    def __init__(self, points):
        pts = [_vec(p) for p in points]
        if not pts:
            raise SetError("finite set needs at least one point")
        dim = pts[0].size
        for p in pts:
            if p.size != dim:
                raise SetError("mixed dimensions in finite set")
        self.points = pts
        self.dim = dim

    def contains(self, y, tol=TOL):
        y = _vec(y, self.dim)
        return any(np.linalg.norm(y - p) <= tol for p in self.points)

    def distance(self, y):
        y = _vec(y, self.dim)
        ds = [float(np.linalg.norm(y - p)) for p in self.points]
        best = min(ds)
        projs = [p.copy() for p, d in zip(self.points, ds) if d <= best + TOL]
        return best, _dedupe_points(projs)

    def is_convex(self):
        return len(self.points) == 1

    def as_region(self):
        return Region([PolyCell.from_point(p) for p in self.points], dim=self.dim)

    def to_json(self):
        return {"kind": "finite", "points": [list(p) for p in self.points]}


class UnionSet(BaseSet):
    kind = "union"

    def __init__(self, members):
        members = list(members)
        if not members:
            raise SetError("union needs at least one member")
        dim = members[0].dim
        for s in members:
            if s.dim != dim:
                raise SetError("union members must share a dimension")
        self.members = members
        self.dim = dim

    def contains(self, y, tol=TOL):
        return any(s.contains(y, tol) for s in self.members)

    def distance(self, y):
        y = _vec(y, self.dim)
        results = [s.distance(y) for s in self.members]
        best = min(d for d, _ in results)
        projs = []
        for d, ps in results:
            if d <= best + TOL:  # keep every projection within the tie window
                projs.extend(ps)
        return best, _dedupe_points(projs)

    def is_convex(self):
        return len(self.members) == 1 and self.members[0].is_convex()

    def as_region(self):
        regions = [s.as_region() for s in self.members]
        if any(r is None for r in regions):
            return None
        out = regions[0]
        for r in regions[1:]:
            out = out.union(r)
        return out

    def to_json(self):
        return {"kind": "union", "members": [s.to_json() for s in self.members]}


class ProductSet(BaseSet):
    kind = "product"

    def __init__(self, factors):
        factors = list(factors)
        if not factors:
            raise SetError("product needs at least one factor")
        self.factors = factors
        self.dim = sum(s.dim for s in factors)
        self.offsets = np.cumsum([0] + [s.dim for s in factors])

    def split(self, y) -> list[np.ndarray]:
        y = _vec(y, self.dim)
        return [y[self.offsets[i]:self.offsets[i + 1]] for i in range(len(self.factors))]

    def contains(self, y, tol=TOL):
        return all(s.contains(part, tol) for s, part in zip(self.factors, self.split(y)))

    def distance(self, y):
        parts = self.split(y)
        total2 = 0.0
        lists = []
        for s, part in zip(self.factors, parts):
            d, ps = s.distance(part)
            total2 += d * d
            lists.append(ps)
        combos = [[]]
        for ps in lists:
            combos = [c + [p] for c in combos for p in ps]
            if len(combos) > 16:
                combos = combos[:16]
        projs = [np.concatenate(c) for c in combos]
        return math.sqrt(total2), _dedupe_points(projs)

    def is_convex(self):
        return all(s.is_convex() for s in self.factors)

    def as_region(self):
        regs = [s.as_region() for s in self.factors]
        if any(r is None for r in regs):
            return None
        # cross product of cells with coordinates embedded block-wise
        cells = [PolyCell.all_space(self.dim)]
        for i, r in enumerate(regs):
            lo, hi = self.offsets[i], self.offsets[i + 1]
            lifted = []
            for c in r.nonempty_cells():
                A = np.zeros((c.A.shape[0], self.dim))
                A[:, lo:hi] = c.A
                E = np.zeros((c.E.shape[0], self.dim))
                E[:, lo:hi] = c.E
                lifted.append(PolyCell(A, c.b, E, c.f, dim=self.dim))
            cells = [base.intersect(extra) for base in cells for extra in lifted]
        return Region(cells, dim=self.dim)

    def to_json(self):
        return {"kind": "product", "factors": [s.to_json() for s in self.factors]}


# ---------------------------------------------------------------------------
# helpers and codec
# ---------------------------------------------------------------------------


def flatten_union(s: BaseSet) -> list[BaseSet]:
    """Member list of a set viewed as a finite union (non-unions are
    singleton lists; nested unions are flattened)."""
    if isinstance(s, UnionSet):
        out = []
        for m in s.members:
            out.extend(flatten_union(m))
        return out
    return [s]


def _num(v, what: str) -> float:
    if isinstance(v, str):
        if v == "inf":
            return math.inf
        if v == "-inf":
            return -math.inf
        raise SetError(f"bad numeric literal {v!r} in {what}")
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SetError(f"bad numeric literal {v!r} in {what}")
    return float(v)


def set_from_json(obj) -> BaseSet:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise SetError("set description must be an object with a 'kind'")
    kind = obj["kind"]
    if kind == "interval":
        return Interval(_num(obj["lo"], "interval"), _num(obj["hi"], "interval"))
    if kind == "box":
        return Box([set_from_json(iv) if isinstance(iv, dict) else Interval(_num(iv[0], "box"), _num(iv[1], "box"))
                    for iv in obj["intervals"]])
    if kind == "halfspace":
        return Halfspace(obj["normal"], _num(obj["offset"], "halfspace"))
    if kind == "polyhedron":
        return Polyhedron(rows=[(r[0], _num(r[1], "polyhedron")) for r in obj.get("rows", [])],
                          equalities=[(r[0], _num(r[1], "polyhedron")) for r in obj.get("equalities", [])],
                          dim=obj.get("dim"))
    if kind == "ball":
        return Ball(obj["center"], _num(obj["radius"], "ball"))
    if kind == "point":
        return PointSet(obj["x"])
    if kind == "finite":
        return FiniteSet(obj["points"])
    if kind == "union":
        return UnionSet([set_from_json(m) for m in obj["members"]])
    if kind == "product":
        return ProductSet([set_from_json(m) for m in obj["factors"]])
    raise SetError(f"unknown set kind {kind!r}")
