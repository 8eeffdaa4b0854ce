"""Normal-cycle index function over polytope unions.

The index at a boundary query (x, n) is an Euler-characteristic difference
over the tangent cone: chi(C . {n.u >= -1}) - chi(C . {n.u >= +1}). Both
terms come from nerve inclusion-exclusion over the cone's convex parts;
feasibility of unbounded conical pieces is decided by the exact simplex
directly, no bounding box needed. A brute-force variant recomputes the same
difference on the ambient set inside a small box and serves as the
independent cross-check.

The index is invariant under positive scaling of n, so rational direction
vectors are used as-is and never normalized.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Sequence

from .errors import GeometryError
from .exact import QZERO, dot, qvec, to_q
from .lp import lp_feasible, lp_solve
from .polyhedra import (
    Halfspace,
    PolyUnion,
    box,
    halfspace,
    intersect_unions,
    union_of,
)


@dataclass(frozen=True)
class NormalQuery:
    """A spatial point paired with a nonzero direction."""

    point: tuple
    direction: tuple

    def __post_init__(self):
        object.__setattr__(self, "point", qvec(self.point))
        object.__setattr__(self, "direction", qvec(self.direction))
        if len(self.point) != len(self.direction):
            raise GeometryError("point and direction dimensions differ")
        if all(c == 0 for c in self.direction):
            raise GeometryError("direction must be nonzero")


@dataclass(frozen=True)
class IndexValue:
    value: int
    degenerate: bool


def _subset_row_lists(parts_rows: Sequence[tuple]):
    n = len(parts_rows)
    for size in range(1, n + 1):
        for combo in combinations(range(n), size):
            rows = [r for i in combo for r in parts_rows[i]]
            sign = -1 if size % 2 == 0 else 1
            yield rows, sign


def _nerve_euler_with_threshold(parts_rows, n, thr) -> int:
    """chi of (union of cone parts) intersected with {n.u >= thr}."""
    cut = (tuple(-c for c in n), -to_q(thr))
    total = 0
    for rows, sign in _subset_row_lists(parts_rows):
        if lp_feasible(rows + [cut]) is not None:
            total += sign
    return total


def _cone_direction_degenerate(parts_rows, n, dim) -> bool:
    """Is n orthogonal to a nontrivial face of some subset cone?

    Checked as: the supremum of n.u over the subset cone is exactly 0 while
    the cone's slice {n.u = 0} contains a nonzero ray. Perturbing n across
    such a configuration flips the feasibility of {n.u >= 1}.
    """
    for rows, _ in _subset_row_lists(parts_rows):
        res = lp_solve(n, rows)
        if res.status != "optimal":
            continue  # sup is +infinity: stable nonempty
        # over a cone the optimum can only be 0
        eqs = [(n, QZERO)]
        for i in range(dim):
            axis = [QZERO] * dim
            axis[i] = to_q(1)
            for sign in (1, -1):
                if lp_feasible(rows, eqs + [(tuple(axis), to_q(sign))]) is not None:
                    return True
    return False


def index(a: PolyUnion, q: NormalQuery) -> IndexValue:
    """Index function of the normal cycle of a at the query (x, n).

    0 off the set; on the set, an Euler difference over the tangent cone
    that picks out n-exposed local structure. Interior points give 0
    because the cone is all of space.
    """
    if len(q.point) != a.dimension:
        raise GeometryError("dimension mismatch")
    if not a.contains(q.point):
        return IndexValue(0, False)
    cone = a.tangent_cone(q.point)
    parts_rows = [
        tuple((h.normal, QZERO) for h in part) for part in cone.parts
    ]
    lower = _nerve_euler_with_threshold(parts_rows, q.direction, -1)
    upper = _nerve_euler_with_threshold(parts_rows, q.direction, 1)
    degenerate = _cone_direction_degenerate(parts_rows, q.direction, a.dimension)
    return IndexValue(lower - upper, degenerate)


def index_bruteforce(a: PolyUnion, q: NormalQuery, r, delta) -> int:
    """The same Euler difference read off the ambient set near x.

    chi(A . box(x,r) . {(p-x).n >= -delta}) - chi(... >= +delta), with a
    rational box standing in for the ball. No tangent-cone reduction; this
    is the independent route used to validate `index`.
    """
    r = to_q(r)
    delta = to_q(delta)
    if r <= 0 or delta <= 0:
        raise GeometryError("r and delta must be positive")
    x = q.point
    n = q.direction
    window = box([(xi - r, xi + r) for xi in x])
    base = dot(n, x)
    neg_n = tuple(-c for c in n)
    terms = []
    for sgn in (-1, 1):
        # {(p-x).n >= sgn*delta}  <=>  {-n.p <= -(n.x + sgn*delta)}
        cut = Halfspace(neg_n, -(base + sgn * delta))
        parts = [p.intersect(window).intersect([cut]) for p in a.parts]
        for piece in parts:
            piece._bounded = True
        terms.append(PolyUnion(parts, cap=a._cap()).euler())
    return terms[0] - terms[1]


@dataclass(frozen=True)
class SliceReport:
    direction: tuple
    threshold: object
    contributing: tuple  # (point, index) pairs with nonzero index
    total: int
    euler: int
    degenerate: bool


def _tied_minimum(a: PolyUnion, v: tuple) -> bool:
    """True when some nonempty subset intersection has a non-unique v-minimizer."""
    for s in a._nonempty_subsets():
        verts = a.subset_polytope(s).vertices()
        vals = sorted(dot(v, vert) for vert in verts)
        if len(vals) >= 2 and vals[0] == vals[1]:
            return True
    return False


def slice_sum(a: PolyUnion, v: Sequence, t) -> SliceReport:
    """Sum of indices ι(x, -v) over candidate points in {v.x <= t}.

    For generic v this equals chi(A . {v.x <= t}), which is also reported
    (computed independently from cached subset vertices). Degeneracy marks
    tied subset minimizers, exact threshold hits, or degenerate index
    queries; degenerate slices are excluded from exact comparisons.
    """
    v = qvec(v)
    if len(v) != a.dimension or all(c == 0 for c in v):
        raise GeometryError("direction must be a nonzero vector of matching dimension")
    t = to_q(t)
    neg_v = tuple(-c for c in v)
    degenerate = _tied_minimum(a, v)
    contributing = []
    total = 0
    for x in a.candidate_points():
        val = dot(v, x)
        if val == t:
            degenerate = True
        if val > t:
            continue
        iv = index(a, NormalQuery(x, neg_v))
        degenerate = degenerate or iv.degenerate
        if iv.value != 0:
            contributing.append((x, iv.value))
            total += iv.value
    euler = a.euler_with_halfspace(halfspace(v, t))
    return SliceReport(v, t, tuple(contributing), total, euler, degenerate)


@dataclass(frozen=True)
class AdditivityReport:
    index_a: IndexValue
    index_b: IndexValue
    index_intersection: IndexValue
    index_union: IndexValue
    holds: bool

    @property
    def degenerate(self) -> bool:
        return any(
            iv.degenerate
            for iv in (
                self.index_a,
                self.index_b,
                self.index_intersection,
                self.index_union,
            )
        )


def additivity_check(a: PolyUnion, b: PolyUnion, q: NormalQuery) -> AdditivityReport:
    """Evaluate ι_A + ι_B = ι_{A.B} + ι_{A|B} at one query."""
    ia = index(a, q)
    ib = index(b, q)
    ii = index(intersect_unions(a, b), q)
    iu = index(union_of(a, b), q)
    return AdditivityReport(ia, ib, ii, iu, ia.value + ib.value == ii.value + iu.value)


def touching_halfspace(a: PolyUnion, v: Sequence, t) -> bool:
    """Is the hyperplane {v.x = t} tangent to the set from below?

    True iff some candidate point x supports v at exactly t with -v in the
    normal cone of every part containing x (the union-level normal cone).
    The support values form a finite set, so a random threshold touches
    with empirical frequency zero.
    """
    v = qvec(v)
    if len(v) != a.dimension or all(c == 0 for c in v):
        raise GeometryError("direction must be a nonzero vector of matching dimension")
    t = to_q(t)
    neg_v = tuple(-c for c in v)
    for x in a.candidate_points():
        if dot(v, x) != t:
            continue
        supported = True
        for p in a.parts:
            if not p.contains(x):
                continue
            rows = [(h.normal, QZERO) for h in p.active_halfspaces(x)]
            res = lp_solve(neg_v, rows)
            if res.status != "optimal" or res.value != 0:
                supported = False
                break
        if supported:
            return True
    return False
