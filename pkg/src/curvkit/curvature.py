"""Curvature measures of polytope unions.

Computes the curvature totals C_0..C_d of a union (intrinsic-volume
normalization: C_0 of a nonempty convex body is 1, C_d is volume), the
external angles and exact Hausdorff measures of faces that feed them,
localized variants against a convex window, pointwise evaluation of the
degree-k curvature integrand on the normal bundle, and exact affine
pushforward of unions. Convexity enters only per part; unions are handled
by nerve inclusion-exclusion, which additivity of the measures licenses.

External angles are exact rationals whenever the normal cone is an
orthant, a ray, a plane cone at one of the classical rational cosines, or
pure lineality; otherwise they fall back to closed-form spherical formulas
(rank <= 3) or seeded Gaussian Monte Carlo (rank >= 4) with a reported
error. Every result tracks exactness per entry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cmp_to_key, lru_cache
from itertools import combinations
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import GeometryError
from .exact import (
    Q,
    QONE,
    QZERO,
    det,
    dot,
    format_q,
    gram_matrix,
    matrix_inverse,
    matrix_rank,
    norm_sq,
    primitive_normal,
    project_out,
    qvec,
    rational_sqrt,
    solve_linear,
    to_q,
    vsub,
)
from .lp import lp_feasible
from .polyhedra import ConvexPolytope, Halfspace, PolyUnion
from .rng import rng_stream

DEFAULT_ANGLE_SAMPLES = 50_000

__all__ = [
    "SphereConstant",
    "sphere_constant",
    "lk_form_eval",
    "Face",
    "faces",
    "FaceAngle",
    "external_angle",
    "CurvatureVector",
    "curvature_convex",
    "curvature_union",
    "curvature_localized",
    "affine_pushforward",
]


# -- sphere measures -----------------------------------------------------------


@dataclass(frozen=True)
class SphereConstant:
    """Surface measure of the unit sphere S^m in R^{m+1}."""

    m: int
    value: float


@lru_cache(maxsize=None)
def sphere_constant(m: int) -> SphereConstant:
    """O_m, via the two-step recurrence so O_0, O_1, O_2 are exact floats."""
    if m < 0:
        raise GeometryError("sphere dimension must be >= 0")
    if m == 0:
        return SphereConstant(0, 2.0)
    if m == 1:
        return SphereConstant(1, 2.0 * math.pi)
    return SphereConstant(m, 2.0 * math.pi * sphere_constant(m - 2).value / (m - 1))


# -- curvature integrand on the normal bundle ----------------------------------


def _split_bundle_vector(v, d: int) -> tuple:
    """Accept ((spatial), (sphere)) pairs or flat 2d-vectors."""
    v = tuple(v)
    if len(v) == 2 and hasattr(v[0], "__len__"):
        spatial, sphere = qvec(v[0]), qvec(v[1])
    elif len(v) == 2 * d:
        spatial, sphere = qvec(v[:d]), qvec(v[d:])
    else:
        raise GeometryError("normal-bundle tangent vectors live in R^{2d}")
    if len(spatial) != d or len(sphere) != d:
        raise GeometryError("normal-bundle tangent vectors live in R^{2d}")
    return spatial, sphere


def lk_form_eval(k: int, x: Sequence, n: Sequence, a: Sequence) -> float:
    """Degree-k curvature integrand at (x, n) applied to tangents `a`.

    `a` is a list of d-1 tangent vectors to the normal bundle, each split
    into spatial and sphere components. The value sums, over all ways of
    taking d-1-k sphere components and k spatial ones, the determinant of
    those components together with n, normalized by the sphere measure
    O_{d-k-1}. Orientation convention: integrating the degree-0 form over
    the clockwise-traversed normal bundle of a convex polygon gives +1.
    """
    n = qvec(n)
    d = len(n)
    x = qvec(x)
    if len(x) != d:
        raise GeometryError("point and normal must share a dimension")
    if not 0 <= k <= d - 1:
        raise GeometryError("form degree k must satisfy 0 <= k <= d-1")
    vecs = [_split_bundle_vector(v, d) for v in a]
    if len(vecs) != d - 1:
        raise GeometryError(f"expected {d - 1} tangent vectors, got {len(vecs)}")
    sphere_slots = d - 1 - k
    total = QZERO
    for picks in combinations(range(d - 1), sphere_slots):
        chosen = frozenset(picks)
        cols = [vecs[i][1] if i in chosen else vecs[i][0] for i in range(d - 1)]
        cols.append(n)
        total += det([[cols[j][i] for j in range(d)] for i in range(d)])
    return float(total) / sphere_constant(d - 1 - k).value


# -- face lattice ---------------------------------------------------------------


@dataclass(frozen=True)
class Face:
    """One face of a polytope: dimension, vertex ids, coordinates, hull basis.

    Vertex ids index into the owning polytope's sorted vertex tuple; `basis`
    spans the direction space of the affine hull with exact edge vectors.
    """

    k: int
    vertex_ids: frozenset
    vertices: tuple
    basis: tuple


class _Lattice:
    __slots__ = ("verts", "active", "dims", "tri")

    def __init__(self, verts: tuple, active: tuple):
        self.verts = verts
        self.active = active
        self.tri: dict = {}
        full = frozenset(range(len(verts)))
        row_ids = sorted(set().union(*active)) if active else []
        facets = []
        for i in row_ids:
            members = frozenset(v for v in full if i in active[v])
            # rows tight everywhere do not cut; rows tight nowhere do not support
            if members and members != full:
                facets.append(members)
        seen = {full}
        queue = [full]
        while queue:
            cur = queue.pop()
            for f in facets:
                nxt = cur & f
                if nxt and nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
        self.dims = {ids: self._affine_dim(ids) for ids in seen}

    def _affine_dim(self, ids: frozenset) -> int:
        members = sorted(ids)
        base = self.verts[members[0]]
        return matrix_rank([vsub(self.verts[i], base) for i in members[1:]])

    def edge_basis(self, ids: frozenset) -> tuple:
        members = sorted(ids)
        base = self.verts[members[0]]
        basis: list = []
        for i in members[1:]:
            e = vsub(self.verts[i], base)
            if matrix_rank(basis + [e]) > len(basis):
                basis.append(e)
        return tuple(basis)

    def common_active(self, ids: frozenset) -> frozenset:
        it = iter(ids)
        common = set(self.active[next(it)])
        for v in it:
            common &= self.active[v]
        return frozenset(common)


def _lattice_of(p: ConvexPolytope) -> _Lattice:
    return _Lattice(p.vertices(), p.vertex_active_sets())


def faces(p: ConvexPolytope) -> tuple:
    """All faces of a nonempty bounded polytope, the polytope itself included."""
    verts = p.vertices()
    if not verts:
        raise GeometryError("an empty polytope has no faces")
    lat = _lattice_of(p)
    out = [
        Face(
            k=k,
            vertex_ids=ids,
            vertices=tuple(lat.verts[i] for i in sorted(ids)),
            basis=lat.edge_basis(ids),
        )
        for ids, k in lat.dims.items()
    ]
    out.sort(key=lambda f: (f.k, sorted(f.vertex_ids)))
    return tuple(out)


# -- exact face measures ----------------------------------------------------------


def _simplices(lat: _Lattice, ids: frozenset) -> tuple:
    """Fan triangulation into vertex-id simplices, memoized per lattice."""
    cached = lat.tri.get(ids)
    if cached is not None:
        return cached
    k = lat.dims[ids]
    members = sorted(ids)
    if k == 0:
        out = ((members[0],),)
    elif k == 1:
        # a 1-face has exactly its two endpoints as vertices
        out = (tuple(members),)
    else:
        v0 = members[0]
        sims = []
        for sub, kk in lat.dims.items():
            if kk == k - 1 and v0 not in sub and sub < ids:
                for s in _simplices(lat, sub):
                    sims.append((v0,) + s)
        out = tuple(sims)
    lat.tri[ids] = out
    return out


def _face_measure(lat: _Lattice, ids: frozenset) -> tuple:
    """(value, exact) k-dimensional Hausdorff measure of a lattice face.

    Each simplex contributes sqrt(det Gram)/k!; the flag stays True only
    when every radicand is a perfect rational square.
    """
    k = lat.dims[ids]
    if k == 0:
        return QONE, True
    fact = math.factorial(k)
    exact_sum = QZERO
    float_sum = 0.0
    exact = True
    for sim in _simplices(lat, ids):
        base = lat.verts[sim[0]]
        edges = [vsub(lat.verts[i], base) for i in sim[1:]]
        g2 = det(gram_matrix(edges))
        root = rational_sqrt(g2)
        if root is not None:
            exact_sum += root / fact
        else:
            exact = False
            float_sum += math.sqrt(float(g2)) / fact
    if exact:
        return exact_sum, True
    return float(exact_sum) + float_sum, False


# -- normal cone angles ------------------------------------------------------------


def _in_cone(target: Sequence, gens: Sequence) -> bool:
    """Exact membership of `target` in the conical hull of `gens`."""
    if not gens:
        return all(c == 0 for c in target)
    r = len(gens)
    ineqs = [
        (tuple(-QONE if j == i else QZERO for j in range(r)), QZERO) for i in range(r)
    ]
    eqs = [
        (tuple(to_q(g[c]) for g in gens), to_q(target[c]))
        for c in range(len(target))
    ]
    return lp_feasible(ineqs, eqs) is not None


def _kernel_vector(rows: Sequence[Sequence], ncols: int) -> Optional[tuple]:
    """One nonzero kernel vector of a rational matrix, or None if injective."""
    m = [list(map(to_q, r)) for r in rows]
    pivots = {}
    row = 0
    for col in range(ncols):
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
                m[r] = [m[r][j] - f * m[row][j] for j in range(ncols)]
        pivots[col] = row
        row += 1
    free = [c for c in range(ncols) if c not in pivots]
    if not free:
        return None
    fc = free[0]
    vec = [QZERO] * ncols
    vec[fc] = QONE
    for col, r in pivots.items():
        vec[col] = -m[r][fc]
    return tuple(vec)


def _independent_subset(vectors: Sequence, m: int) -> list:
    basis: list = []
    for v in vectors:
        if len(basis) == m:
            break
        if matrix_rank(basis + [v]) > len(basis):
            basis.append(v)
    return basis


def _float_onb(vectors: Sequence) -> list:
    """Gram-Schmidt float orthonormal basis of exactly independent vectors."""
    onb: list = []
    for v in vectors:
        w = [float(c) for c in v]
        for e in onb:
            t = sum(a * b for a, b in zip(w, e))
            w = [a - t * b for a, b in zip(w, e)]
        nrm = math.sqrt(sum(c * c for c in w))
        onb.append([c / nrm for c in w])
    return onb


def _planar_fraction(a: Sequence, b: Sequence) -> tuple:
    """Angle fraction of the plane cone spanned by two extreme rays."""
    dd = dot(a, b)
    prod = norm_sq(a) * norm_sq(b)
    s = dd * dd
    # classical rational cosines stay exact
    if dd == 0:
        return Q(1, 4), True, 0.0
    if 4 * s == prod:
        return (Q(1, 6), True, 0.0) if dd > 0 else (Q(1, 3), True, 0.0)
    if 2 * s == prod:
        return (Q(1, 8), True, 0.0) if dd > 0 else (Q(3, 8), True, 0.0)
    if 4 * s == 3 * prod:
        return (Q(1, 12), True, 0.0) if dd > 0 else (Q(5, 12), True, 0.0)
    cosv = float(dd) / math.sqrt(float(prod))
    cosv = max(-1.0, min(1.0, cosv))
    return math.acos(cosv) / (2.0 * math.pi), False, 1e-11


def _angle_cmp(pa: tuple, pb: tuple) -> int:
    ha = 0 if (pa[1] > 0 or (pa[1] == 0 and pa[0] > 0)) else 1
    hb = 0 if (pb[1] > 0 or (pb[1] == 0 and pb[0] > 0)) else 1
    if ha != hb:
        return ha - hb
    cross = pa[0] * pb[1] - pa[1] * pb[0]
    if cross > 0:
        return -1
    if cross < 0:
        return 1
    return 0


def _ordered_rays(rays: list) -> list:
    """Extreme rays of a pointed rank-3 cone in cyclic boundary order."""
    center = tuple(sum(col) for col in zip(*rays))
    proj = [project_out(r, [center]) for r in rays]
    basis = _independent_subset([p for p in proj if any(c != 0 for c in p)], 2)
    if len(basis) != 2:
        raise GeometryError("degenerate ray projection in solid-angle ordering")
    g = gram_matrix(basis)
    coords = []
    for p in proj:
        c = solve_linear(g, [dot(b, p) for b in basis])
        coords.append((c[0], c[1]))
    order = sorted(
        range(len(rays)), key=cmp_to_key(lambda i, j: _angle_cmp(coords[i], coords[j]))
    )
    return [rays[i] for i in order]


def _triangle_solid_angle(a: list, b: list, c: list) -> float:
    detv = (
        a[0] * (b[1] * c[2] - b[2] * c[1])
        - a[1] * (b[0] * c[2] - b[2] * c[0])
        + a[2] * (b[0] * c[1] - b[1] * c[0])
    )
    den = (
        1.0
        + sum(x * y for x, y in zip(a, b))
        + sum(x * y for x, y in zip(b, c))
        + sum(x * y for x, y in zip(a, c))
    )
    return 2.0 * math.atan2(abs(detv), den)


def _solid_angle_rank3(rays: list) -> tuple:
    ordered = _ordered_rays(rays)
    onb = _float_onb(_independent_subset(ordered, 3))
    units = []
    for r in ordered:
        fs = [float(c) for c in r]
        coords = [sum(a * b for a, b in zip(fs, e)) for e in onb]
        nrm = math.sqrt(sum(c * c for c in coords))
        units.append([c / nrm for c in coords])
    omega = 0.0
    for i in range(1, len(units) - 1):
        omega += _triangle_solid_angle(units[0], units[i], units[i + 1])
    return omega / (4.0 * math.pi), False, 1e-9


def _cone_facet_normals(rays: list, basis: list) -> list:
    """Facet normals of a pointed full-rank-in-span cone, exact, inward >= 0."""
    m = len(basis)
    normals = {}
    for sub in combinations(range(len(rays)), m - 1):
        sel = [rays[i] for i in sub]
        if matrix_rank(sel) != m - 1:
            continue
        coeffs = _kernel_vector([[dot(b, s) for b in basis] for s in sel], m)
        if coeffs is None:
            continue
        h = tuple(
            sum(coeffs[j] * basis[j][i] for j in range(m)) for i in range(len(basis[0]))
        )
        dots = [dot(h, r) for r in rays]
        if all(v >= 0 for v in dots):
            pass
        elif all(v <= 0 for v in dots):
            h = tuple(-c for c in h)
        else:
            continue
        normals[primitive_normal(h)] = None
    return list(normals.keys())


def _mc_angle(rays: list, seed: int, samples: int, label: tuple) -> tuple:
    """Gaussian hit fraction of the cone inside its span; (value, False, stderr)."""
    basis = _independent_subset(rays, matrix_rank(rays))
    m = len(basis)
    normals = _cone_facet_normals(rays, basis)
    if not normals:
        raise GeometryError("pointed cone without facet description")
    onb = np.array(_float_onb(basis))
    hmat = np.array([[float(c) for c in h] for h in normals])
    hmat /= np.linalg.norm(hmat, axis=1, keepdims=True)
    rng = rng_stream(seed, "external-angle", *label)
    z = rng.standard_normal((int(samples), m))
    pts = z @ onb
    hits = int(np.all(pts @ hmat.T >= -1e-9, axis=1).sum())
    p_hat = hits / float(samples)
    stderr = math.sqrt(max(p_hat * (1.0 - p_hat), 1e-12) / float(samples))
    return p_hat, False, stderr


def _cone_angle(gens: Iterable, seed: int, samples: int, label: tuple) -> tuple:
    """Normalized solid-angle fraction of cone(gens) within its linear span.

    Equals the probability that a standard Gaussian on the span lands in
    the cone, so lineality directions integrate out exactly and the empty
    cone of generators has angle 1. Returns (value, exact, error).
    """
    uniq = {}
    for g in gens:
        p = primitive_normal(g)
        if any(c != 0 for c in p):
            uniq[p] = None
    work = list(uniq.keys())
    if not work:
        return QONE, True, 0.0
    if len(work) == 1:
        return Q(1, 2), True, 0.0
    if all(dot(a, b) == 0 for a, b in combinations(work, 2)):
        # mutually orthogonal generators: an orthant of their span
        return Q(1, 2 ** len(work)), True, 0.0
    lin_basis: list = []
    for g in work:
        if _in_cone(tuple(-c for c in g), work):
            if matrix_rank(lin_basis + [g]) > len(lin_basis):
                lin_basis.append(g)
    if lin_basis:
        uniq = {}
        for g in work:
            p = project_out(g, lin_basis)
            p = primitive_normal(p)
            if any(c != 0 for c in p):
                uniq[p] = None
        work = list(uniq.keys())
        if not work:
            return QONE, True, 0.0
    rays = [
        g
        for i, g in enumerate(work)
        if not _in_cone(g, work[:i] + work[i + 1 :])
    ]
    if len(rays) == 1:
        return Q(1, 2), True, 0.0
    if all(dot(a, b) == 0 for a, b in combinations(rays, 2)):
        return Q(1, 2 ** len(rays)), True, 0.0
    m = matrix_rank(rays)
    if m == 2:
        if len(rays) != 2:
            raise GeometryError("pointed plane cone must have two extreme rays")
        return _planar_fraction(rays[0], rays[1])
    if m == 3:
        return _solid_angle_rank3(rays)
    return _mc_angle(rays, seed, samples, label)


# -- external angles of faces --------------------------------------------------------


@dataclass(frozen=True)
class FaceAngle:
    """External angle of one face, with its exact measure alongside.

    `angle` is the normalized measure of the face's normal cone within the
    unit sphere of its span; `error` is 0 for exact values, a conservative
    bound for closed-form floats, and one standard error for Monte Carlo.
    """

    face: Face
    angle: object
    exact: bool
    error: float
    measure: object
    measure_exact: bool

    @property
    def k(self) -> int:
        return self.face.k


def _face_label(lat: _Lattice, ids: frozenset) -> tuple:
    return tuple(
        sorted(tuple(format_q(c) for c in lat.verts[i]) for i in ids)
    )


def _face_angle(
    rows: tuple, lat: _Lattice, ids: frozenset, seed: int, samples: int
) -> tuple:
    gens = [qvec(rows[i][0]) for i in sorted(lat.common_active(ids))]
    return _cone_angle(gens, seed, samples, _face_label(lat, ids))


def external_angle(
    p: ConvexPolytope,
    face,
    *,
    seed: int = 0,
    samples: int = DEFAULT_ANGLE_SAMPLES,
) -> FaceAngle:
    """External angle and measure of one face of a bounded polytope.

    `face` is a Face from faces(p) or a frozenset of vertex ids into
    p.vertices(). The polytope itself (angle 1) is allowed.
    """
    if samples < 1:
        raise GeometryError("samples must be >= 1")
    verts = p.vertices()
    if not verts:
        raise GeometryError("an empty polytope has no faces")
    lat = _lattice_of(p)
    ids = face.vertex_ids if isinstance(face, Face) else frozenset(face)
    if ids not in lat.dims:
        raise GeometryError("not a face of this polytope")
    angle, exact, err = _face_angle(p.canonical_rows(), lat, ids, seed, samples)
    measure, mexact = _face_measure(lat, ids)
    out_face = Face(
        k=lat.dims[ids],
        vertex_ids=ids,
        vertices=tuple(lat.verts[i] for i in sorted(ids)),
        basis=lat.edge_basis(ids),
    )
    return FaceAngle(
        face=out_face,
        angle=angle,
        exact=exact,
        error=err,
        measure=measure,
        measure_exact=mexact,
    )


# -- curvature vectors ----------------------------------------------------------------


@dataclass(frozen=True)
class CurvatureVector:
    """Totals (C_0, ..., C_d) with per-entry exactness and error bounds.

    Exact entries are rationals with error 0; inexact entries are floats
    whose `errors` field accumulates closed-form bounds and Monte Carlo
    standard errors from the contributing faces.
    """

    values: tuple
    exact: tuple
    errors: tuple

    def __post_init__(self):
        if not (len(self.values) == len(self.exact) == len(self.errors)):
            raise GeometryError("curvature vector fields must have equal length")

    @property
    def dimension(self) -> int:
        return len(self.values) - 1

    def as_floats(self) -> tuple:
        return tuple(float(v) for v in self.values)

    def __add__(self, other: "CurvatureVector") -> "CurvatureVector":
        acc = _Accumulator(self.dimension)
        acc.add_vector(self, 1)
        acc.add_vector(other, 1)
        return acc.vector()

    def __sub__(self, other: "CurvatureVector") -> "CurvatureVector":
        acc = _Accumulator(self.dimension)
        acc.add_vector(self, 1)
        acc.add_vector(other, -1)
        return acc.vector()


class _Accumulator:
    __slots__ = ("ex", "fl", "is_ex", "err")

    def __init__(self, d: int):
        self.ex = [QZERO] * (d + 1)
        self.fl = [0.0] * (d + 1)
        self.is_ex = [True] * (d + 1)
        self.err = [0.0] * (d + 1)

    def add_term(self, k: int, value, exact: bool, error: float, sign: int = 1):
        if exact:
            self.ex[k] += sign * value
        else:
            self.is_ex[k] = False
            self.fl[k] += sign * float(value)
            self.err[k] += error

    def add_vector(self, v: "CurvatureVector", sign: int):
        for k in range(len(v.values)):
            self.add_term(k, v.values[k], v.exact[k], v.errors[k], sign)

    def vector(self) -> "CurvatureVector":
        values = tuple(
            self.ex[k] if self.is_ex[k] else float(self.ex[k]) + self.fl[k]
            for k in range(len(self.ex))
        )
        return CurvatureVector(
            values=values,
            exact=tuple(self.is_ex),
            errors=tuple(0.0 if self.is_ex[k] else self.err[k] for k in range(len(self.ex))),
        )


def _zero_vector(d: int) -> CurvatureVector:
    return CurvatureVector(
        values=(QZERO,) * (d + 1), exact=(True,) * (d + 1), errors=(0.0,) * (d + 1)
    )


def _windowed_measure(
    p: ConvexPolytope, lat: _Lattice, ids: frozenset, window: ConvexPolytope
) -> tuple:
    """(value, exact) k-measure of (face intersect window); 0 for thin slices."""
    k = lat.dims[ids]
    coords = [lat.verts[i] for i in sorted(ids)]
    if all(window.contains(v) for v in coords):
        return _face_measure(lat, ids)
    rows = list(p.halfspaces)
    canonical = p.canonical_rows()
    for i in sorted(lat.common_active(ids)):
        n, b = canonical[i]
        rows.append(Halfspace(tuple(-c for c in n), -b))
    rows.extend(window.halfspaces)
    piece = ConvexPolytope(p.dimension, rows)
    piece._bounded = True  # subset of a bounded face
    verts = piece.vertices()
    if not verts:
        return QZERO, True
    sub = _Lattice(verts, piece.vertex_active_sets())
    top = frozenset(range(len(verts)))
    if sub.dims[top] < k:
        return QZERO, True
    return _face_measure(sub, top)


def _convex_vector(
    p: ConvexPolytope,
    window: Optional[ConvexPolytope],
    seed: int,
    samples: int,
) -> CurvatureVector:
    d = p.dimension
    if window is not None and window.dimension != d:
        raise GeometryError("window dimension mismatch")
    verts = p.vertices()
    if not verts:
        return _zero_vector(d)
    lat = _lattice_of(p)
    rows = p.canonical_rows()
    acc = _Accumulator(d)
    for ids, k in lat.dims.items():
        if window is None:
            vol, vexact = _face_measure(lat, ids)
        else:
            vol, vexact = _windowed_measure(p, lat, ids, window)
        if vol == 0:
            continue
        angle, aexact, aerr = _face_angle(rows, lat, ids, seed, samples)
        if aexact and vexact:
            acc.add_term(k, angle * vol, True, 0.0)
        else:
            err = aerr * float(vol) + (0.0 if vexact else 1e-12 * abs(float(vol)))
            acc.add_term(k, float(angle) * float(vol), False, err)
    if window is None and not acc.is_ex[0]:
        # Gauss-Bonnet pins the degree-0 total of a nonempty convex body
        approx = float(acc.ex[0]) + acc.fl[0]
        if abs(approx - 1.0) > 1e-6 + 10.0 * acc.err[0]:
            raise GeometryError("external angles of a convex polytope must sum to 1")
        acc.ex[0] = QONE
        acc.fl[0] = 0.0
        acc.is_ex[0] = True
        acc.err[0] = 0.0
    elif window is None:
        if acc.ex[0] != 1:
            raise GeometryError("external angles of a convex polytope must sum to 1")
    return acc.vector()


def curvature_convex(
    p: ConvexPolytope, *, seed: int = 0, samples: int = DEFAULT_ANGLE_SAMPLES
) -> CurvatureVector:
    """Curvature totals of one bounded convex polytope.

    C_k sums external angle times exact k-measure over the k-faces; C_d is
    the volume and C_0 is exactly 1 for nonempty input (zero vector for
    empty input). Lower-dimensional polytopes are fine: missing face
    dimensions contribute nothing.
    """
    return _convex_vector(p, None, seed, samples)


def curvature_union(
    a: PolyUnion, *, seed: int = 0, samples: int = DEFAULT_ANGLE_SAMPLES
) -> CurvatureVector:
    """Curvature totals of a union by inclusion-exclusion over the nerve.

    Additivity of the measures licenses the alternating sum; C_0 therefore
    lands exactly on the Euler characteristic. Monte Carlo face angles are
    seeded per face geometry, so a face shared between subset intersections
    cancels exactly across signs.
    """
    acc = _Accumulator(a.dimension)
    for s in a._nonempty_subsets():
        sign = -1 if len(s) % 2 == 0 else 1
        acc.add_vector(
            _convex_vector(a.subset_polytope(s), None, seed, samples), sign
        )
    return acc.vector()


def curvature_localized(
    a: PolyUnion,
    window: ConvexPolytope,
    *,
    seed: int = 0,
    samples: int = DEFAULT_ANGLE_SAMPLES,
) -> CurvatureVector:
    """Curvature measure of the window: face contributions restricted to it.

    Each k-face contributes its external angle times the k-measure of its
    intersection with the (closed, possibly unbounded) convex window;
    inclusion-exclusion extends this over the union.
    """
    acc = _Accumulator(a.dimension)
    for s in a._nonempty_subsets():
        sign = -1 if len(s) % 2 == 0 else 1
        acc.add_vector(
            _convex_vector(a.subset_polytope(s), window, seed, samples), sign
        )
    return acc.vector()


# -- affine pushforward -----------------------------------------------------------------


def affine_pushforward(
    a: PolyUnion, matrix: Sequence[Sequence], translation: Optional[Sequence] = None
) -> PolyUnion:
    """Image of a union under x -> Mx + t, exactly, for invertible rational M.

    Halfspace {n.x <= b} maps to {(n M^-1).y <= b + (n M^-1).t}, so the
    H-representation transforms with no vertex enumeration.
    """
    d = a.dimension
    m = [qvec(row) for row in matrix]
    if len(m) != d or any(len(row) != d for row in m):
        raise GeometryError("matrix must be square of the union's dimension")
    t = qvec(translation) if translation is not None else tuple([QZERO] * d)
    if len(t) != d:
        raise GeometryError("translation dimension mismatch")
    minv = matrix_inverse(m)
    if minv is None:
        raise GeometryError("pushforward needs an invertible linear part")
    parts = []
    for p in a.parts:
        hs = []
        for h in p.halfspaces:
            n2 = tuple(
                sum(h.normal[i] * minv[i][j] for i in range(d)) for j in range(d)
            )
            hs.append(Halfspace(n2, h.offset + dot(n2, t)))
        q = ConvexPolytope(d, hs)
        q._bounded = True  # affine images of bounded sets stay bounded
        parts.append(q)
    return PolyUnion(parts, cap=a.cap)
