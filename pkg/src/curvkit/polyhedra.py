"""Exact polyhedral kernel.

Convex polytopes in H-representation over exact rationals, finite unions,
Euler characteristics via nerve inclusion-exclusion, and tangent cones by
active-constraint homogenization. Feasibility decisions use an exact
simplex with cheap fast paths (axis-aligned interval tests, parallel
contradictions, cached vertex witnesses); vertex enumeration solves all
d-subsets of the deduplicated constraint rows.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Optional, Sequence

from .errors import CapExceededError, GeometryError, UnboundedPolytopeError
from .exact import QZERO, dot, primitive_normal, qvec, solve_linear, to_q
from .lp import lp_feasible

DEFAULT_IE_CAP = 8


def ie_cap() -> int:
    """Inclusion-exclusion part cap; CURVKIT_IE_CAP overrides the default."""
    raw = os.environ.get("CURVKIT_IE_CAP")
    if raw is None:
        return DEFAULT_IE_CAP
    try:
        cap = int(raw)
    except ValueError as exc:
        raise GeometryError(f"CURVKIT_IE_CAP must be an integer, got {raw!r}") from exc
    if cap < 1:
        raise GeometryError("CURVKIT_IE_CAP must be >= 1")
    return cap


@dataclass(frozen=True)
class Halfspace:
    """Closed halfspace {x : normal.x <= offset} with rational data."""

    normal: tuple
    offset: object

    def __post_init__(self):
        normal = qvec(self.normal)
        if all(v == 0 for v in normal):
            raise GeometryError("halfspace normal must be nonzero")
        object.__setattr__(self, "normal", normal)
        object.__setattr__(self, "offset", to_q(self.offset))

    @property
    def dimension(self) -> int:
        return len(self.normal)

    def excess(self, x: Sequence):
        """normal.x - offset; nonpositive exactly on the halfspace."""
        return dot(self.normal, x) - self.offset

    def contains(self, x: Sequence) -> bool:
        return self.excess(x) <= 0

    def as_pair(self) -> tuple:
        return (self.normal, self.offset)


def halfspace(normal: Iterable, offset) -> Halfspace:
    return Halfspace(qvec(normal), to_q(offset))


def _canonicalize(rows: Iterable[tuple]) -> tuple[tuple, bool]:
    """Deduplicate parallel rows keeping the tightest offset.

    Rows are (normal, offset) pairs. Returns (canonical rows with primitive
    integer normals, trivially_infeasible flag). Zero-normal rows are folded
    into the flag.
    """
    best = {}
    infeasible = False
    for normal, offset in rows:
        key = primitive_normal(normal)
        if all(k == 0 for k in key):
            if to_q(offset) < 0:
                infeasible = True
            continue
        # scale offset consistently with the primitive normal
        for a, p in zip(normal, key):
            if p != 0:
                lam = to_q(a) / p
                break
        off = to_q(offset) / lam
        if key not in best or off < best[key]:
            best[key] = off
    for key, off in best.items():
        neg = tuple(-k for k in key)
        if neg in best and off + best[neg] < 0:
            infeasible = True
            break
    canon = tuple((qvec(k), off) for k, off in sorted(best.items()))
    return canon, infeasible


def _axis_intervals(rows) -> Optional[list]:
    """Interval bounds per axis when every row is axis-aligned, else None.

    Returns [(lo, hi)] with None for a missing (unbounded) side.
    """
    if not rows:
        return None
    dim = len(rows[0][0])
    lo = [None] * dim
    hi = [None] * dim
    for normal, off in rows:
        axis = None
        for i, v in enumerate(normal):
            if v != 0:
                if axis is not None:
                    return None
                axis = i
        v = normal[axis]
        if v > 0:
            bound = off / v
            if hi[axis] is None or bound < hi[axis]:
                hi[axis] = bound
        else:
            bound = off / v
            if lo[axis] is None or bound > lo[axis]:
                lo[axis] = bound
    return list(zip(lo, hi))


class ConvexPolytope:
    """Intersection of finitely many rational halfspaces.

    The set may be empty or lower-dimensional. Vertex enumeration and most
    other operations require boundedness, which `is_bounded` decides
    exactly; `PolyUnion` enforces it for its parts.
    """

    __slots__ = (
        "dimension",
        "halfspaces",
        "_canonical",
        "_trivially_empty",
        "_feasible",
        "_witness",
        "_bounded",
        "_vertices",
        "_active_sets",
        "_bbox",
        "_intervals",
        "_intervals_done",
    )

    def __init__(self, dimension: int, halfspaces: Iterable):
        self.dimension = int(dimension)
        if self.dimension < 1:
            raise GeometryError("dimension must be >= 1")
        hs = []
        for h in halfspaces:
            if not isinstance(h, Halfspace):
                h = Halfspace(*h)
            if h.dimension != self.dimension:
                raise GeometryError("dimension mismatch among constraints")
            hs.append(h)
        self.halfspaces = tuple(hs)
        self._canonical = None
        self._trivially_empty = None
        self._feasible = None
        self._witness = None
        self._bounded = None
        self._vertices = None
        self._active_sets = None
        self._bbox = None
        self._intervals = None
        self._intervals_done = False

    # -- canonical structure -------------------------------------------------

    def canonical_rows(self) -> tuple:
        if self._canonical is None:
            rows = [(h.normal, h.offset) for h in self.halfspaces]
            self._canonical, self._trivially_empty = _canonicalize(rows)
        return self._canonical

    def _axis_form(self):
        if not self._intervals_done:
            self._intervals = _axis_intervals(self.canonical_rows())
            self._intervals_done = True
        return self._intervals

    # -- predicates ----------------------------------------------------------

    def contains(self, x: Sequence) -> bool:
        x = qvec(x)
        return all(dot(n, x) <= b for n, b in self.canonical_rows())

    def strictly_contains(self, x: Sequence) -> bool:
        x = qvec(x)
        return all(dot(n, x) < b for n, b in self.canonical_rows())

    def is_feasible(self) -> bool:
        if self._feasible is None:
            rows = self.canonical_rows()
            if self._trivially_empty:
                self._feasible = False
            elif not rows:
                self._feasible = True
                self._witness = tuple(QZERO for _ in range(self.dimension))
            else:
                ivs = self._axis_form()
                if ivs is not None:
                    ok = all(lo is None or hi is None or lo <= hi for lo, hi in ivs)
                    self._feasible = ok
                    if ok:
                        self._witness = tuple(
                            lo if lo is not None else (hi if hi is not None else QZERO)
                            for lo, hi in ivs
                        )
                elif self._vertices is not None:
                    # vertex cache is authoritative for bounded sets
                    self._feasible = bool(self._vertices)
                    if self._vertices:
                        self._witness = self._vertices[0]
                else:
                    w = lp_feasible(rows)
                    self._feasible = w is not None
                    self._witness = w
        return self._feasible

    def is_bounded(self) -> bool:
        """True when the recession cone {normal.u <= 0} is trivial."""
        if self._bounded is None:
            ivs = self._axis_form()
            if ivs is not None:
                self._bounded = all(lo is not None and hi is not None for lo, hi in ivs)
            else:
                rows = [(n, QZERO) for n, _ in self.canonical_rows()]
                if not rows:
                    self._bounded = False
                else:
                    dim = self.dimension
                    bounded = True
                    for i in range(dim):
                        axis = [QZERO] * dim
                        axis[i] = to_q(1)
                        for sign in (1, -1):
                            eq = [(tuple(sign * a for a in axis), to_q(1))]
                            if lp_feasible(rows, eq) is not None:
                                bounded = False
                                break
                        if not bounded:
                            break
                    self._bounded = bounded
        return self._bounded

    # -- vertex structure ----------------------------------------------------

    def _enumerate_vertices(self):
        rows = self.canonical_rows()
        dim = self.dimension
        found = {}
        ivs = self._axis_form()
        if ivs is not None:
            if self._trivially_empty or any(
                lo is None or hi is None or lo > hi for lo, hi in ivs
            ):
                self._vertices = tuple()
                self._active_sets = tuple()
                return
            corners = [tuple()]
            for lo, hi in ivs:
                vals = (lo,) if lo == hi else (lo, hi)
                corners = [c + (v,) for c in corners for v in vals]
            for c in corners:
                found[c] = None
        elif not self._trivially_empty and len(rows) >= dim:
            mats = [list(n) for n, _ in rows]
            rhs = [b for _, b in rows]
            for idxs in combinations(range(len(rows)), dim):
                x = solve_linear([mats[i] for i in idxs], [rhs[i] for i in idxs])
                if x is None or x in found:
                    continue
                if all(dot(n, x) <= b for n, b in rows):
                    found[x] = None
        verts = sorted(found.keys())
        actives = []
        for x in verts:
            actives.append(
                frozenset(i for i, (n, b) in enumerate(rows) if dot(n, x) == b)
            )
        self._vertices = tuple(verts)
        self._active_sets = tuple(actives)

    def vertices(self) -> tuple:
        """All vertices, exact. Raises for unbounded nonempty polyhedra."""
        if self._vertices is None:
            if self.is_feasible() and not self.is_bounded():
                raise UnboundedPolytopeError("vertex enumeration needs a bounded polytope")
            self._enumerate_vertices()
        return self._vertices

    def vertex_active_sets(self) -> tuple:
        self.vertices()
        return self._active_sets

    def bbox(self) -> Optional[tuple]:
        """Componentwise (min, max) over vertices; None when empty."""
        if self._bbox is None:
            verts = self.vertices()
            if not verts:
                return None
            dim = self.dimension
            lo = list(verts[0])
            hi = list(verts[0])
            for v in verts[1:]:
                for i in range(dim):
                    if v[i] < lo[i]:
                        lo[i] = v[i]
                    if v[i] > hi[i]:
                        hi[i] = v[i]
            self._bbox = (tuple(lo), tuple(hi))
        return self._bbox

    # -- constructive operations ----------------------------------------------

    def intersect(self, other: "ConvexPolytope | Iterable[Halfspace]") -> "ConvexPolytope":
        if isinstance(other, ConvexPolytope):
            if other.dimension != self.dimension:
                raise GeometryError("dimension mismatch")
            extra = other.halfspaces
        else:
            extra = tuple(other)
        return ConvexPolytope(self.dimension, self.halfspaces + tuple(extra))

    def translate(self, vector: Sequence) -> "ConvexPolytope":
        vector = qvec(vector)
        return ConvexPolytope(
            self.dimension,
            [Halfspace(h.normal, h.offset + dot(h.normal, vector)) for h in self.halfspaces],
        )

    def scale(self, factor) -> "ConvexPolytope":
        factor = to_q(factor)
        if factor <= 0:
            raise GeometryError("scale factor must be positive")
        return ConvexPolytope(
            self.dimension,
            [Halfspace(h.normal, h.offset * factor) for h in self.halfspaces],
        )

    def active_halfspaces(self, x: Sequence) -> tuple:
        x = qvec(x)
        return tuple(h for h in self.halfspaces if h.excess(x) == 0)

    def __repr__(self) -> str:  # pragma: no cover
        return f"ConvexPolytope(d={self.dimension}, rows={len(self.halfspaces)})"


def box(bounds: Sequence[tuple]) -> ConvexPolytope:
    """Axis-aligned box from [(lo, hi)] bounds."""
    dim = len(bounds)
    rows = []
    for i, (lo, hi) in enumerate(bounds):
        e = [0] * dim
        e[i] = 1
        rows.append(Halfspace(tuple(e), to_q(hi)))
        rows.append(Halfspace(tuple(-v for v in e), -to_q(lo)))
    return ConvexPolytope(dim, rows)


def simplex_from_points(points: Sequence[Sequence]) -> ConvexPolytope:
    """H-representation of the simplex spanned by d+1 affinely independent points."""
    pts = [qvec(p) for p in points]
    dim = len(pts[0])
    if len(pts) != dim + 1:
        raise GeometryError("need exactly d+1 points")
    rows = []
    for i in range(dim + 1):
        face = [pts[j] for j in range(dim + 1) if j != i]
        # normal orthogonal to the face's edge vectors, solved exactly
        edges = [tuple(b - a for a, b in zip(face[0], p)) for p in face[1:]]
        normal = _null_direction(edges, dim)
        if normal is None:
            raise GeometryError("points are affinely dependent")
        off = dot(normal, face[0])
        apex = dot(normal, pts[i])
        if apex == off:
            # the apex lies on the face's hyperplane
            raise GeometryError("points are affinely dependent")
        if apex > off:
            normal = tuple(-v for v in normal)
            off = -off
        rows.append(Halfspace(normal, off))
    return ConvexPolytope(dim, rows)


def _null_direction(rows: Sequence[tuple], dim: int) -> Optional[tuple]:
    """A nonzero vector orthogonal to all rows (rank must be dim-1)."""
    m = [list(r) for r in rows]
    pivots = {}
    row = 0
    for col in range(dim):
        piv = None
        for r in range(row, len(m)):
            if m[r][col] != 0:
                piv = r
                break
        if piv is None:
            continue
        m[row], m[piv] = m[piv], m[row]
        inv = 1 / m[row][col]
        m[row] = [inv * x for x in m[row]]
        for r in range(len(m)):
            if r != row and m[r][col] != 0:
                f = m[r][col]
                m[r] = [m[r][j] - f * m[row][j] for j in range(dim)]
        pivots[col] = row
        row += 1
    free = [c for c in range(dim) if c not in pivots]
    if len(free) != 1:
        return None
    fcol = free[0]
    vec = [QZERO] * dim
    vec[fcol] = to_q(1)
    for col, r in pivots.items():
        vec[col] = -m[r][fcol]
    return tuple(vec)


@dataclass(frozen=True)
class PolyCone:
    """Union of convex polyhedral cones with a common apex.

    Each part is a tuple of homogeneous halfspaces (offset 0); an empty
    tuple denotes the whole space. Models a tangent cone of a PolyUnion.
    """

    dimension: int
    apex: tuple
    parts: tuple


class PolyUnion:
    """Finite union of bounded convex polytopes, with cached nerve data.

    Parts may overlap, touch, or be empty; the union is compact. The
    inclusion-exclusion part cap limits nerve sums (override with the
    CURVKIT_IE_CAP environment variable). All caches are idempotent, so
    concurrent readers are safe.
    """

    def __init__(self, parts: Sequence[ConvexPolytope], cap: Optional[int] = None):
        parts = list(parts)
        if not parts:
            raise GeometryError("a union needs at least one part")
        dim = parts[0].dimension
        for p in parts:
            if not isinstance(p, ConvexPolytope):
                raise GeometryError("parts must be ConvexPolytope instances")
            if p.dimension != dim:
                raise GeometryError("dimension mismatch among parts")
        self.dimension = dim
        self.parts = tuple(parts)
        self.cap = cap
        self._check_cap()
        for p in parts:
            if p.is_feasible() and not p.is_bounded():
                raise UnboundedPolytopeError("union parts must be bounded")
        self._subsets = {}
        self._feas = {}
        self._candidates = None

    def _cap(self) -> int:
        return self.cap if self.cap is not None else ie_cap()

    def _check_cap(self):
        if len(self.parts) > self._cap():
            raise CapExceededError(
                f"{len(self.parts)} parts exceed the inclusion-exclusion cap {self._cap()}"
            )

    def subset_polytope(self, idxs: frozenset) -> ConvexPolytope:
        poly = self._subsets.get(idxs)
        if poly is None:
            rows = []
            for i in idxs:
                rows.extend(self.parts[i].halfspaces)
            poly = ConvexPolytope(self.dimension, rows)
            poly._bounded = True  # subsets of bounded parts stay bounded
            self._subsets[idxs] = poly
        return poly

    def _subset_feasible(self, idxs: frozenset) -> bool:
        known = self._feas.get(idxs)
        if known is None:
            if len(idxs) > 1 and any(
                not self._feas.get(idxs - {i}, True) for i in idxs
            ):
                known = False
            else:
                known = self.subset_polytope(idxs).is_feasible()
            self._feas[idxs] = known
        return known

    def _nonempty_subsets(self):
        """Frozensets S (by ascending size) with a nonempty intersection."""
        self._check_cap()
        n = len(self.parts)
        for size in range(1, n + 1):
            for combo in combinations(range(n), size):
                s = frozenset(combo)
                if self._subset_feasible(s):
                    yield s

    def euler(self) -> int:
        """Euler characteristic via nerve inclusion-exclusion."""
        total = 0
        for s in self._nonempty_subsets():
            total += -1 if len(s) % 2 == 0 else 1
        return total

    def euler_with_halfspace(self, h: Halfspace) -> int:
        """chi of the union intersected with one extra halfspace.

        Uses cached subset vertices: a compact nonempty polytope meets
        {n.x <= b} iff the minimum of n.x over its vertices is <= b.
        """
        if h.dimension != self.dimension:
            raise GeometryError("dimension mismatch")
        total = 0
        for s in self._nonempty_subsets():
            verts = self.subset_polytope(s).vertices()
            if min(dot(h.normal, v) for v in verts) <= h.offset:
                total += -1 if len(s) % 2 == 0 else 1
        return total

    def candidate_points(self) -> tuple:
        """Vertices of all nonempty subset intersections, deduplicated.

        These carry the whole zero-dimensional structure of the union: every
        point where a generic sublevel sweep can change topology is here.
        """
        if self._candidates is None:
            seen = {}
            for s in self._nonempty_subsets():
                for v in self.subset_polytope(s).vertices():
                    seen[v] = None
            self._candidates = tuple(sorted(seen.keys()))
        return self._candidates

    def contains(self, x: Sequence) -> bool:
        x = qvec(x)
        return any(p.contains(x) for p in self.parts)

    def on_boundary(self, x: Sequence) -> bool:
        x = qvec(x)
        return self.contains(x) and not any(p.strictly_contains(x) for p in self.parts)

    def tangent_cone(self, x: Sequence) -> PolyCone:
        """Local cone at x: active rows of the parts containing x, homogenized."""
        x = qvec(x)
        cone_parts = []
        for p in self.parts:
            if p.contains(x):
                active = p.active_halfspaces(x)
                cone_parts.append(tuple(Halfspace(h.normal, QZERO) for h in active))
        if not cone_parts:
            raise GeometryError("tangent cone requested at a point outside the union")
        return PolyCone(self.dimension, x, tuple(cone_parts))

    def bbox(self) -> Optional[tuple]:
        boxes = [p.bbox() for p in self.parts if p.is_feasible()]
        boxes = [b for b in boxes if b is not None]
        if not boxes:
            return None
        dim = self.dimension
        lo = [min(b[0][i] for b in boxes) for i in range(dim)]
        hi = [max(b[1][i] for b in boxes) for i in range(dim)]
        return (tuple(lo), tuple(hi))

    def translate(self, vector: Sequence) -> "PolyUnion":
        return PolyUnion([p.translate(vector) for p in self.parts], cap=self.cap)

    def scale(self, factor) -> "PolyUnion":
        return PolyUnion([p.scale(factor) for p in self.parts], cap=self.cap)

    def __repr__(self) -> str:  # pragma: no cover
        return f"PolyUnion(d={self.dimension}, parts={len(self.parts)})"


def intersect_unions(a: PolyUnion, b: PolyUnion) -> PolyUnion:
    """Pairwise-part intersection, dropping empty products to stay under the cap."""
    if a.dimension != b.dimension:
        raise GeometryError("dimension mismatch")
    parts = []
    for p in a.parts:
        for q in b.parts:
            piece = p.intersect(q)
            piece._bounded = True
            if piece.is_feasible():
                parts.append(piece)
    if not parts:
        # keep one (empty) part so the union object stays constructible
        parts = [a.parts[0].intersect(b.parts[0])]
    return PolyUnion(parts, cap=max(a._cap(), b._cap()))


def union_of(a: PolyUnion, b: PolyUnion) -> PolyUnion:
    if a.dimension != b.dimension:
        raise GeometryError("dimension mismatch")
    return PolyUnion(list(a.parts) + list(b.parts), cap=max(a._cap(), b._cap()))


# -- spec-facing functional surface -------------------------------------------


def feasible(p: ConvexPolytope) -> bool:
    return p.is_feasible()


def vertices(p: ConvexPolytope) -> tuple:
    return p.vertices()


def euler(u: PolyUnion) -> int:
    return u.euler()


def euler_with_halfspace(u: PolyUnion, h: Halfspace) -> int:
    return u.euler_with_halfspace(h)


def tangent_cone(u: PolyUnion, x: Sequence) -> PolyCone:
    return u.tangent_cone(x)
