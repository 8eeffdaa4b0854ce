"""Piecewise-linear d.c. functions with exact Clarke subdifferentials.

A function is stored as a difference g - h of two max-affine convex pieces.
Subdifferentials, weak-regularity certificates, and aura constructions all
run over exact rationals; the only float that ever enters is an optional
norm rationalization for non-square constraint norms in polytope_aura.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Sequence, Union

from .errors import CapExceededError, GeometryError
from .exact import (
    QZERO,
    dot,
    norm_sq,
    qvec,
    rational_sqrt,
    rationalize,
    solve_linear,
    to_q,
    vsub,
)
from .lp import linear_range, lp_feasible, lp_solve
from .polyhedra import ConvexPolytope, PolyUnion

DEFAULT_CELL_CAP = 14


@dataclass(frozen=True)
class MaxAffine:
    """Convex piecewise-linear function x -> max_i (gradient_i . x + offset_i)."""

    pieces: tuple

    def __post_init__(self):
        pieces = tuple(
            (qvec(g), to_q(b)) for g, b in self.pieces
        )
        if not pieces:
            raise GeometryError("a max-affine function needs at least one piece")
        dim = len(pieces[0][0])
        if any(len(g) != dim for g, _ in pieces):
            raise GeometryError("dimension mismatch among pieces")
        object.__setattr__(self, "pieces", pieces)

    @property
    def dimension(self) -> int:
        return len(self.pieces[0][0])

    def value(self, x: Sequence):
        x = qvec(x)
        return max(dot(g, x) + b for g, b in self.pieces)

    def active_pieces(self, x: Sequence) -> tuple:
        x = qvec(x)
        vals = [dot(g, x) + b for g, b in self.pieces]
        top = max(vals)
        return tuple(i for i, v in enumerate(vals) if v == top)

    def shift(self, c) -> "MaxAffine":
        """Subtract the constant c from every piece."""
        c = to_q(c)
        return MaxAffine(tuple((g, b - c) for g, b in self.pieces))

    def merged_with(self, other: "MaxAffine") -> "MaxAffine":
        """Pointwise max of the two functions (piece union)."""
        if other.dimension != self.dimension:
            raise GeometryError("dimension mismatch")
        return MaxAffine(self.pieces + other.pieces)

    def plus(self, other: "MaxAffine") -> "MaxAffine":
        """Pointwise sum; pieces combine pairwise."""
        if other.dimension != self.dimension:
            raise GeometryError("dimension mismatch")
        return MaxAffine(
            tuple(
                (tuple(a + c for a, c in zip(g1, g2)), b1 + b2)
                for g1, b1 in self.pieces
                for g2, b2 in other.pieces
            )
        )


def zero_max_affine(dim: int) -> MaxAffine:
    return MaxAffine((((QZERO,) * dim, QZERO),))


@dataclass(frozen=True)
class DCFunction:
    """Difference of two max-affine functions, f = plus - minus."""

    plus: MaxAffine
    minus: MaxAffine

    def __post_init__(self):
        if self.plus.dimension != self.minus.dimension:
            raise GeometryError("dimension mismatch between convex parts")

    @property
    def dimension(self) -> int:
        return self.plus.dimension

    def value(self, x: Sequence):
        x = qvec(x)
        return self.plus.value(x) - self.minus.value(x)


def evaluate(f: DCFunction, x: Sequence):
    return f.value(x)


@dataclass(frozen=True)
class SubdifferentialHull:
    """Convex hull of finitely many subgradients."""

    generators: tuple

    def __post_init__(self):
        gens = tuple(sorted({qvec(g) for g in self.generators}))
        if not gens:
            raise GeometryError("a subdifferential hull needs a generator")
        object.__setattr__(self, "generators", gens)

    def min_norm_point(self) -> tuple:
        return _min_norm_point(self.generators)

    def distance_sq_to_origin(self):
        return norm_sq(self.min_norm_point())

    def contains_origin(self) -> bool:
        return self.distance_sq_to_origin() == 0


def _min_norm_point(gens: Sequence[tuple]) -> tuple:
    """Exact minimum-norm point of the convex hull of gens.

    Enumerates support subsets of size <= d+1 and solves the equality-
    constrained quadratic optimum on each affine hull; a candidate with
    nonnegative weights satisfying p.v >= p.p for every generator is the
    global optimum (first-order optimality over a convex set).
    """
    gens = [qvec(g) for g in gens]
    dim = len(gens[0])
    for g in gens:
        if all(c == 0 for c in g):
            return tuple(QZERO for _ in range(dim))
    for size in range(1, min(len(gens), dim + 1) + 1):
        for subset in combinations(gens, size):
            lam = _affine_min_norm_weights(subset)
            if lam is None or any(l < 0 for l in lam):
                continue
            p = tuple(
                sum(l * v[i] for l, v in zip(lam, subset)) for i in range(dim)
            )
            pp = norm_sq(p)
            if all(dot(p, v) >= pp for v in gens):
                return p
    # Caratheodory guarantees the optimum has an affinely independent
    # support of size <= d+1, whose subset certifies itself above.
    raise GeometryError("min-norm search failed to certify an optimum")


def _affine_min_norm_weights(subset: Sequence[tuple]) -> Optional[list]:
    """Weights minimizing |sum lam_i v_i| subject to sum lam_i = 1."""
    k = len(subset)
    if k == 1:
        return [to_q(1)]
    # KKT system: Gram(subset) lam = mu * 1, sum lam = 1.
    rows = []
    rhs = []
    for i in range(k):
        rows.append([dot(subset[i], subset[j]) for j in range(k)] + [to_q(-1)])
        rhs.append(QZERO)
    rows.append([to_q(1)] * k + [QZERO])
    rhs.append(to_q(1))
    sol = solve_linear(rows, rhs)
    if sol is None:
        return None
    return list(sol[:k])


# -- linearity cells -----------------------------------------------------------


@dataclass(frozen=True)
class _Cell:
    """Closure of a full-dimensional joint linearity region."""

    gradient: tuple
    offset: object
    rows: tuple  # (normal, bound) pairs describing the closed cell


def _unique_pieces(m: MaxAffine) -> list:
    return list(dict.fromkeys(m.pieces))


def _cell_rows(gpieces, i, hpieces, j) -> Optional[tuple]:
    """Closed-cell rows for the joint maximality of pieces i and j.

    Zero rows (parallel pieces) either mark the pair as dominated (None)
    or drop out as vacuous.
    """
    rows = []
    gi, bi = gpieces[i]
    hj, cj = hpieces[j]
    for pieces, ref_g, ref_b in ((gpieces, gi, bi), (hpieces, hj, cj)):
        for gk, bk in pieces:
            if (gk, bk) == (ref_g, ref_b):
                continue
            normal = vsub(gk, ref_g)
            bound = ref_b - bk
            if all(c == 0 for c in normal):
                if bound < 0:
                    return None  # strictly dominated everywhere
                continue
            rows.append((normal, bound))
    return tuple(rows)


def _has_interior(rows: Sequence[tuple], dim: int) -> bool:
    """True when {a.x < b for all rows} is nonempty (slack LP)."""
    if not rows:
        return True
    slack_rows = [(tuple(a) + (to_q(1),), b) for a, b in rows]
    slack_rows.append(((QZERO,) * dim + (to_q(1),), to_q(1)))
    res = lp_solve((QZERO,) * dim + (to_q(1),), slack_rows)
    return res.status == "optimal" and res.value > 0


def full_dim_cells(f: DCFunction, cap: int = DEFAULT_CELL_CAP) -> tuple:
    """Closures of the full-dimensional cells of the piece arrangement.

    Each cell carries the (constant) gradient of f on it. Cells of dominated
    piece pairs are dropped. Raises when more than cap cells survive.
    """
    dim = f.dimension
    gpieces = _unique_pieces(f.plus)
    hpieces = _unique_pieces(f.minus)
    cells = []
    for i, (gi, bi) in enumerate(gpieces):
        for j, (hj, cj) in enumerate(hpieces):
            rows = _cell_rows(gpieces, i, hpieces, j)
            if rows is None or not _has_interior(rows, dim):
                continue
            cells.append(_Cell(vsub(gi, hj), bi - cj, rows))
    if len(cells) > cap:
        raise CapExceededError(
            f"{len(cells)} linearity cells exceed the configured cap {cap}"
        )
    return tuple(cells)


def clarke_subdifferential(f: DCFunction, x: Sequence) -> SubdifferentialHull:
    """Hull of gradients over full-dimensional cells whose closure contains x."""
    x = qvec(x)
    if len(x) != f.dimension:
        raise GeometryError("dimension mismatch")
    gens = []
    for cell in full_dim_cells(f):
        if all(dot(a, x) <= b for a, b in cell.rows):
            gens.append(cell.gradient)
    if not gens:
        raise GeometryError("point lies in no full-dimensional cell closure")
    return SubdifferentialHull(tuple(gens))


@dataclass(frozen=True)
class RegularityCertificate:
    """Outcome of a weak-regularity check on a value slab (c, c + epsilon)."""

    value: object
    epsilon: object
    witness: Union[str, tuple]
    distance_sq: Optional[object] = None

    @property
    def regular(self) -> bool:
        return self.witness == "regular"


def _slab_meets(rows, gradient, offset, lo_bound, hi_bound, dim) -> bool:
    """Does {a.x <= b} meet {lo < gradient.x + offset < hi}?"""
    if all(c == 0 for c in gradient):
        if rows and lp_feasible(rows) is None:
            return False
        return lo_bound < offset < hi_bound
    status, lo, hi = linear_range(gradient, rows)
    if status == "infeasible":
        return False
    lo_v = None if lo is None else lo + offset
    hi_v = None if hi is None else hi + offset
    return (hi_v is None or hi_v > lo_bound) and (lo_v is None or lo_v < hi_bound)


def _slab_witness(rows, gradient, offset, lo_bound, hi_bound, dim) -> tuple:
    """A point of {a.x <= b} with gradient.x + offset strictly inside the slab."""
    if all(c == 0 for c in gradient):
        w = lp_feasible(rows) if rows else tuple(QZERO for _ in range(dim))
        assert w is not None
        return w
    status, lo, hi = linear_range(gradient, rows)
    assert status == "ok"
    lo_v = lo_bound if lo is None else max(lo + offset, lo_bound)
    hi_v = hi_bound if hi is None else min(hi + offset, hi_bound)
    if lo is not None and hi is not None and lo == hi:
        target = lo + offset
    else:
        target = (lo_v + hi_v) / 2
    w = lp_feasible(rows, eqs=[(gradient, target - offset)])
    assert w is not None
    return w


def is_weakly_regular(
    f: DCFunction, c, epsilon, cap: int = DEFAULT_CELL_CAP
) -> RegularityCertificate:
    """Certify that no subgradient on the slab {c < f < c + epsilon} is short.

    Enumerates intersections of full-dimensional cell closures; on each
    nonempty intersection f restricts to a single affine form, the Clarke
    hull is spanned by the incident cell gradients, and the check reduces to
    a slab-range test plus an exact min-norm computation. Subset families
    are pruned monotonically, so the enumeration stays near the face count.
    """
    c = to_q(c)
    epsilon = to_q(epsilon)
    if epsilon <= 0:
        raise GeometryError("epsilon must be positive")
    dim = f.dimension
    cells = full_dim_cells(f, cap=cap)
    eps_sq = epsilon * epsilon
    lo_bound, hi_bound = c, c + epsilon
    min_dist = None
    infeasible = set()
    for size in range(1, len(cells) + 1):
        for combo in combinations(range(len(cells)), size):
            if size > 1 and any(
                frozenset(sub) in infeasible for sub in combinations(combo, size - 1)
            ):
                infeasible.add(frozenset(combo))
                continue
            rows = [r for i in combo for r in cells[i].rows]
            if size > 1 and lp_feasible(rows) is None:
                infeasible.add(frozenset(combo))
                continue
            # f agrees with every incident affine form on the intersection
            grad = cells[combo[0]].gradient
            off = cells[combo[0]].offset
            if not _slab_meets(rows, grad, off, lo_bound, hi_bound, dim):
                continue
            hull = SubdifferentialHull(tuple(cells[i].gradient for i in combo))
            dist_sq = hull.distance_sq_to_origin()
            if min_dist is None or dist_sq < min_dist:
                min_dist = dist_sq
            if dist_sq < eps_sq:
                witness = _slab_witness(rows, grad, off, lo_bound, hi_bound, dim)
                return RegularityCertificate(c, epsilon, witness, dist_sq)
    return RegularityCertificate(c, epsilon, "regular", min_dist)


# -- aura constructions --------------------------------------------------------


def aura_from_sublevel(f: DCFunction, c) -> DCFunction:
    """max(0, f - c) as a d.c. function: max(g - c, h) - h."""
    c = to_q(c)
    return DCFunction(f.plus.shift(c).merged_with(f.minus), f.minus)


def _row_norm(normal: tuple):
    """|normal| as a rational; exact when the squared norm is a square."""
    ns = norm_sq(normal)
    root = rational_sqrt(ns)
    if root is not None:
        return root
    return rationalize(float(ns) ** 0.5, 10**12)


def polytope_aura(p: ConvexPolytope) -> DCFunction:
    """Convex aura of a nonempty polytope: max of normalized row excesses and 0.

    Row normals are scaled to unit length, so the growth rate away from the
    zero set is bounded below by a Hoffman-type constant. Not the Euclidean
    distance function (a corner point sees the max of facet excesses).
    """
    if not p.is_feasible():
        raise GeometryError("aura of an empty polytope")
    dim = p.dimension
    pieces = [((QZERO,) * dim, QZERO)]
    for normal, offset in p.canonical_rows():
        scale = _row_norm(normal)
        pieces.append((tuple(a / scale for a in normal), -offset / scale))
    return DCFunction(MaxAffine(tuple(pieces)), zero_max_affine(dim))


def halfspace_aura(v: Sequence, t) -> DCFunction:
    """x -> max(v.x - t, 0) for a unit direction v."""
    v = qvec(v)
    if all(c == 0 for c in v):
        raise GeometryError("direction must be nonzero")
    if norm_sq(v) != 1:
        raise GeometryError("direction must have unit length")
    t = to_q(t)
    dim = len(v)
    pieces = ((v, -t), ((QZERO,) * dim, QZERO))
    return DCFunction(MaxAffine(pieces), zero_max_affine(dim))


def combine_auras(f: DCFunction, g: DCFunction) -> DCFunction:
    """Sum of two auras; vanishes exactly on the intersection of zero sets."""
    return DCFunction(f.plus.plus(g.plus), f.minus.plus(g.minus))


# -- touching test -------------------------------------------------------------


def _antipodal_normal_exists(cones_a: list, cones_b: list, dim: int) -> bool:
    """Is there n != 0 in every cone of cones_a with -n in every cone of cones_b?

    Each cone is given by a tuple of generators (active outward normals of
    one part at the candidate point). Membership n in cone(G) is encoded as
    n = G^T lambda with lambda >= 0; the whole system is one feasibility LP
    per coordinate-normalization (a convex cone is nontrivial iff it meets
    some hyperplane n_i = +/-1).
    """
    if any(not g for g in cones_a) or any(not g for g in cones_b):
        return False  # a part sees x in its interior: no nonzero normal
    blocks = [(1, g) for g in cones_a] + [(-1, g) for g in cones_b]
    nvar = dim + sum(len(g) for _, g in blocks)
    ineqs = []
    col = dim
    eqs = []
    for sign, gens in blocks:
        for i in range(dim):
            row = [QZERO] * nvar
            row[i] = to_q(sign)
            for k, g in enumerate(gens):
                row[col + k] = -g[i]
            eqs.append((tuple(row), QZERO))
        for k in range(len(gens)):
            row = [QZERO] * nvar
            row[col + k] = to_q(-1)
            ineqs.append((tuple(row), QZERO))  # lambda_k >= 0
        col += len(gens)
    for i in range(dim):
        for sign in (1, -1):
            fix = [QZERO] * nvar
            fix[i] = to_q(1)
            if lp_feasible(ineqs, eqs + [(tuple(fix), to_q(sign))]) is not None:
                return True
    return False


def touches(a: PolyUnion, b: PolyUnion) -> bool:
    """Do the unions share a boundary point with opposite outward normals?

    Candidates are vertices of pairwise part intersections; at each one the
    union-level normal cones (intersections over containing parts of the
    active-normal cones) are tested for an antipodal nonzero pair. Complete
    for convex parts; a contact confined to the relative interior of a face
    whose endpoints all gain extra incident parts can go undetected, which
    only under-reports and never invents a touching.
    """
    if a.dimension != b.dimension:
        raise GeometryError("dimension mismatch")
    dim = a.dimension
    candidates = {}
    for p in a.parts:
        for q in b.parts:
            piece = p.intersect(q)
            piece._bounded = True
            if not piece.is_feasible():
                continue
            for v in piece.vertices():
                candidates[v] = None
    for x in candidates:
        if any(p.strictly_contains(x) for p in a.parts):
            continue
        if any(q.strictly_contains(x) for q in b.parts):
            continue
        cones_a = [
            tuple(h.normal for h in p.active_halfspaces(x))
            for p in a.parts
            if p.contains(x)
        ]
        cones_b = [
            tuple(h.normal for h in q.active_halfspaces(x))
            for q in b.parts
            if q.contains(x)
        ]
        if _antipodal_normal_exists(cones_a, cones_b, dim):
            return True
    return False
