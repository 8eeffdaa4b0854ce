"""Determinant polarization, mollified Hessian minors, and subgradient mass.

The polarization identity writes det(A - B) as an alternating binomial
combination of det((n-k)A + kB); applied pointwise to Hessian minors of a
mollified difference of convex piecewise-linear functions, it bounds minor
integrals of the difference by those of convex combinations. Mollification
is a discrete convolution with a C^2 polynomial bump sampled on the grid
and renormalized to unit mass, so affine functions are reproduced exactly
and all integrals are midpoint sums over the same lattice, which keeps the
inequality chain exact up to float rounding. The subdifferential mass of a
convex piecewise-linear function is the volume of its gradient image, an
epsilon-independent ceiling for the top-order Hessian determinant integral.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Sequence, Union

import numpy as np
from scipy import signal, spatial

from .dcfun import DCFunction, MaxAffine, zero_max_affine
from .errors import InputError
from .exact import Q, det, dot, qvec, solve_linear, to_q, vsub

DEFAULT_LADDER = (0.2, 0.1, 0.05, 0.025)
_TILING_TOLERANCE = 1e-9


def quadrature_slack(value: float) -> float:
    """Float-rounding allowance for inequalities between midpoint sums.

    The minor inequality holds exactly at quadrature level, so the only
    slack a comparison needs covers accumulated rounding.
    """
    return 1e-9 * (1.0 + abs(value))


# -- determinant polarization ------------------------------------------------------


@dataclass(frozen=True)
class SquareMatrix:
    """A dense square matrix; rational entries enable the exact-mode identity."""

    entries: tuple

    def __post_init__(self):
        rows = tuple(tuple(row) for row in self.entries)
        if not rows or any(len(row) != len(rows) for row in rows):
            raise InputError("entries must form a nonempty square array")
        object.__setattr__(self, "entries", rows)

    @property
    def order(self) -> int:
        return len(self.entries)

    @property
    def is_exact(self) -> bool:
        return not any(
            isinstance(x, float) for row in self.entries for x in row
        )


def _entry_rows(a) -> tuple:
    if isinstance(a, SquareMatrix):
        return a.entries
    return SquareMatrix(tuple(tuple(row) for row in a)).entries


def det_identity_check(a, b) -> tuple:
    """Both sides of the polarization det(A-B) = binomial sum / n!.

    Rational entries on both sides select exact arithmetic and the returned
    pair is exactly equal; any float entry selects numpy determinants.
    """
    ra, rb = _entry_rows(a), _entry_rows(b)
    n = len(ra)
    if len(rb) != n:
        raise InputError("matrices must have the same order")
    exact = SquareMatrix(ra).is_exact and SquareMatrix(rb).is_exact
    if exact:
        qa = [qvec(row) for row in ra]
        qb = [qvec(row) for row in rb]
        lhs = det([vsub(x, y) for x, y in zip(qa, qb)])
        total = Q(0)
        for k in range(n + 1):
            mixed = [
                tuple((n - k) * x + k * y for x, y in zip(rx, ry))
                for rx, ry in zip(qa, qb)
            ]
            sign = -1 if k % 2 else 1
            total += sign * math.comb(n, k) * det(mixed)
        return lhs, total / math.factorial(n)
    fa = np.array(ra, dtype=float)
    fb = np.array(rb, dtype=float)
    lhs = float(np.linalg.det(fa - fb))
    total = 0.0
    for k in range(n + 1):
        sign = -1.0 if k % 2 else 1.0
        total += sign * math.comb(n, k) * float(np.linalg.det((n - k) * fa + k * fb))
    return lhs, total / math.factorial(n)


# -- mollification -----------------------------------------------------------------


def _validated_box(box_k) -> tuple:
    box = tuple((float(lo), float(hi)) for lo, hi in box_k)
    if not box:
        raise InputError("the box needs at least one axis")
    for lo, hi in box:
        if not lo < hi:
            raise InputError("box bounds must satisfy lo < hi on every axis")
    return box


def _as_dc(f: Union[DCFunction, MaxAffine]) -> DCFunction:
    if isinstance(f, MaxAffine):
        return DCFunction(f, zero_max_affine(f.dimension))
    if isinstance(f, DCFunction):
        return f
    raise InputError("expected a DCFunction or a MaxAffine")


def _pl_values(f: DCFunction, pts: np.ndarray) -> np.ndarray:
    def envelope(m: MaxAffine) -> np.ndarray:
        grads = np.array([[float(g) for g in p] for p, _ in m.pieces])
        offs = np.array([float(b) for _, b in m.pieces])
        return np.max(pts @ grads.T + offs, axis=-1)

    return envelope(f.plus) - envelope(f.minus)


@dataclass(frozen=True, eq=False)
class MollifiedField:
    """Grid samples of a mollified piecewise-linear function over a box.

    values covers the box plus a margin of pad grid nodes (pad * spacing
    >= 3 * width); the quadrature block is the interior slice of shape
    `cells`, whose nodes are the midpoints of an exact tiling of the box.
    l1_gap is the midpoint L1(K) distance to the unmollified function.
    """

    source: DCFunction
    box: tuple
    spacing: float
    width: float
    pad: int
    cells: tuple
    values: np.ndarray
    l1_gap: float

    @property
    def dimension(self) -> int:
        return len(self.cells)

    def axis_coordinates(self, axis: int) -> np.ndarray:
        lo = self.box[axis][0]
        n = self.cells[axis]
        return lo + (np.arange(-self.pad, n + self.pad) + 0.5) * self.spacing

    def value_at(self, x: Sequence[float]) -> float:
        """Multilinear interpolation between stored nodes."""
        if len(x) != self.dimension:
            raise InputError("point dimension mismatch")
        idx = []
        frac = []
        for axis, t in enumerate(x):
            coords = self.axis_coordinates(axis)
            rel = (float(t) - coords[0]) / self.spacing
            j = int(math.floor(rel))
            if j < 0 or j + 1 >= len(coords):
                raise InputError("point outside the stored grid")
            idx.append(j)
            frac.append(rel - j)
        total = 0.0
        for corner in np.ndindex(*([2] * self.dimension)):
            w = 1.0
            for axis, c in enumerate(corner):
                w *= frac[axis] if c else 1.0 - frac[axis]
            total += w * float(self.values[tuple(idx[a] + corner[a] for a in range(self.dimension))])
        return total


def _kernel(d: int, eps: float, h: float) -> np.ndarray:
    """Discrete bump (1 - (|u|/eps)^2)^3 on the offset lattice, unit mass."""
    r = int(math.ceil(eps / h - 1e-12))
    axes = [np.arange(-r, r + 1) * h for _ in range(d)]
    grids = np.meshgrid(*axes, indexing="ij")
    rsq = sum(g * g for g in grids) / (eps * eps)
    kern = np.clip(1.0 - rsq, 0.0, None) ** 3
    return kern / kern.sum()


def mollify(
    f: Union[DCFunction, MaxAffine], box_k, eps: float, h: float
) -> MollifiedField:
    """Sample f convolved with the polynomial bump of width eps on a grid.

    The spacing must tile the box exactly (midpoint quadrature stays over
    K itself) and satisfy eps >= 2h so second differences resolve the
    kernel. The discrete kernel is symmetric with unit mass, so affine
    functions mollify to themselves.
    """
    f = _as_dc(f)
    box = _validated_box(box_k)
    d = f.dimension
    if len(box) != d:
        raise InputError("box dimension must match the function")
    eps = float(eps)
    h = float(h)
    if h <= 0 or eps <= 0:
        raise InputError("width and spacing must be positive")
    if eps < 2 * h - 1e-12:
        raise InputError("resolution violation: need eps >= 2 * spacing")
    cells = []
    for lo, hi in box:
        n = round((hi - lo) / h)
        if n < 1 or abs(n * h - (hi - lo)) > _TILING_TOLERANCE * max(1.0, hi - lo):
            raise InputError("grid spacing must tile the box exactly")
        cells.append(n)
    r = int(math.ceil(eps / h - 1e-12))
    pad = int(math.ceil(3 * eps / h - 1e-12))
    ext = pad + r
    axes = [
        lo + (np.arange(-ext, n + ext) + 0.5) * h
        for (lo, _), n in zip(box, cells)
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in mesh], axis=-1)
    raw = _pl_values(f, pts).reshape([n + 2 * ext for n in cells])
    kern = _kernel(d, eps, h)
    moll = signal.convolve(raw, kern, mode="valid")
    core = tuple(slice(pad, pad + n) for n in cells)
    raw_core = raw[tuple(slice(ext, ext + n) for n in cells)]
    gap = float(np.abs(moll[core] - raw_core).sum()) * h**d
    return MollifiedField(
        source=f,
        box=box,
        spacing=h,
        width=eps,
        pad=pad,
        cells=tuple(cells),
        values=moll,
        l1_gap=gap,
    )


def epsilon_ladder(box_k, ladder: Sequence[float] = DEFAULT_LADDER) -> tuple:
    """The default mollifier widths scaled to half the widest box axis."""
    box = _validated_box(box_k)
    scale = max(hi - lo for lo, hi in box) / 2.0
    return tuple(e * scale for e in ladder)


# -- Hessian minors ---------------------------------------------------------------


def _core_block(field: MollifiedField, offset: Sequence[int]) -> tuple:
    return tuple(
        slice(field.pad + o, field.pad + o + n)
        for o, n in zip(offset, field.cells)
    )


def hessian_grid(field: MollifiedField) -> np.ndarray:
    """Centered-second-difference Hessians at every quadrature node.

    Shape cells + (d, d). The one-node stencil stays inside the stored
    margin, so no boundary extrapolation happens.
    """
    d = field.dimension
    v = field.values
    h = field.spacing
    out = np.empty(tuple(field.cells) + (d, d))
    zero = [0] * d
    base = v[_core_block(field, zero)]
    for i in range(d):
        ei = zero.copy()
        ei[i] = 1
        mi = zero.copy()
        mi[i] = -1
        out[..., i, i] = (
            v[_core_block(field, ei)] - 2 * base + v[_core_block(field, mi)]
        ) / (h * h)
        for j in range(i + 1, d):
            pp = zero.copy()
            pp[i] = 1
            pp[j] = 1
            pm = zero.copy()
            pm[i] = 1
            pm[j] = -1
            mp = zero.copy()
            mp[i] = -1
            mp[j] = 1
            mm = zero.copy()
            mm[i] = -1
            mm[j] = -1
            mixed = (
                v[_core_block(field, pp)]
                - v[_core_block(field, pm)]
                - v[_core_block(field, mp)]
                + v[_core_block(field, mm)]
            ) / (4 * h * h)
            out[..., i, j] = mixed
            out[..., j, i] = mixed
    return out


@dataclass(frozen=True)
class MinorIntegralReport:
    """Midpoint integral of |det of one Hessian minor| over the box.

    rows/cols are the selected index sets (equal cardinality, possibly
    empty: the empty minor is the constant 1, integrating to the box
    volume). error_bound estimates the midpoint-rule error from discrete
    second differences of the integrand; it is a reported estimate, not a
    certified constant.
    """

    rows: tuple
    cols: tuple
    value: float
    error_bound: float

    def __post_init__(self):
        if self.value < 0:
            raise InputError("integrals of absolute values are nonnegative")


def _index_set(sel: Sequence[int], d: int) -> tuple:
    out = tuple(sorted(int(i) for i in sel))
    if any(i < 0 or i >= d for i in out) or len(set(out)) != len(out):
        raise InputError("index sets must be distinct axes of the domain")
    return out


def minor_integral(
    field: MollifiedField, rows: Sequence[int], cols: Sequence[int]
) -> MinorIntegralReport:
    """Integral over the box of |det minor(Hessian of the field)|."""
    d = field.dimension
    rows = _index_set(rows, d)
    cols = _index_set(cols, d)
    if len(rows) != len(cols):
        raise InputError("row and column sets must have equal cardinality")
    h = field.spacing
    cell = h**d
    if not rows:
        volume = cell * float(np.prod(field.cells))
        return MinorIntegralReport(rows, cols, volume, 0.0)
    hess = hessian_grid(field)
    sub = hess[..., rows, :][..., :, cols]
    if len(rows) == 1:
        dets = sub[..., 0, 0]
    else:
        dets = np.linalg.det(sub)
    integrand = np.abs(dets)
    value = float(integrand.sum()) * cell
    # midpoint-rule error ~ h^2/24 * integral of the second derivative,
    # estimated from discrete second differences of the integrand
    second_mass = 0.0
    for axis in range(d):
        diff2 = np.abs(np.diff(integrand, n=2, axis=axis))
        second_mass += float(diff2.sum()) * cell / (h * h)
    error = (h * h / 24.0) * second_mass + 1e-12 * (1.0 + value)
    return MinorIntegralReport(rows, cols, value, error)


def _scaled(m: MaxAffine, c: int) -> MaxAffine:
    if c < 0:
        raise InputError("convex combinations need nonnegative coefficients")
    if c == 0:
        return zero_max_affine(m.dimension)
    cq = to_q(c)
    return MaxAffine(
        tuple((tuple(cq * g for g in grad), cq * off) for grad, off in m.pieces)
    )


def minor_difference_bound(
    g: MaxAffine,
    h_fn: MaxAffine,
    box_k,
    m: int,
    eps: float,
    spacing: Optional[float] = None,
) -> tuple:
    """Worst minor integral of the mollified difference and its convex bound.

    lhs maximizes the |det minor| integral of the mollified g - h over all
    index pairs of cardinality m; rhs evaluates, at the maximizing pair,
    the binomial combination of the same integrals for the convex
    combinations (m-l)g + l*h, divided by m!. The polarization identity
    holds pointwise at each quadrature node, so lhs <= rhs up to float
    rounding (see quadrature_slack).
    """
    if not isinstance(g, MaxAffine) or not isinstance(h_fn, MaxAffine):
        raise InputError("both arguments must be MaxAffine (convex PL)")
    if g.dimension != h_fn.dimension:
        raise InputError("dimension mismatch between the two functions")
    d = g.dimension
    m = int(m)
    if not 0 <= m <= d:
        raise InputError("minor order must satisfy 0 <= m <= d")
    if spacing is None:
        spacing = float(eps) / 2.0
    diff = mollify(DCFunction(g, h_fn), box_k, eps, spacing)
    best: Optional[MinorIntegralReport] = None
    for rows in combinations(range(d), m):
        for cols in combinations(range(d), m):
            rep = minor_integral(diff, rows, cols)
            if best is None or rep.value > best.value:
                best = rep
    assert best is not None
    rhs = 0.0
    for l in range(m + 1):
        combo = _scaled(g, m - l).plus(_scaled(h_fn, l))
        field = mollify(combo, box_k, eps, spacing)
        rep = minor_integral(field, best.rows, best.cols)
        rhs += math.comb(m, l) * rep.value
    rhs /= math.factorial(m)
    return best.value, rhs


# -- subdifferential mass ----------------------------------------------------------


@dataclass(frozen=True)
class MongeAmpereMass:
    """Total volume of subdifferential cells at complex vertices inside K.

    vertex_count = 0 flags a box with no vertex of the linearity complex;
    the mass is then 0 because the gradient image of the box is a finite
    union of sets of dimension below d.
    """

    value: float
    vertex_count: int

    @property
    def empty(self) -> bool:
        return self.vertex_count == 0

    def __float__(self) -> float:
        return self.value


def _hull_volume(points: list, d: int) -> float:
    if len(points) <= d:
        return 0.0
    arr = np.array([[float(x) for x in p] for p in points])
    if d == 1:
        return float(arr.max() - arr.min())
    try:
        return float(spatial.ConvexHull(arr).volume)
    except spatial.QhullError:
        return 0.0  # affinely degenerate gradient set


def monge_ampere_mass(g: MaxAffine, box_k) -> MongeAmpereMass:
    """Exact-vertex subdifferential mass of a convex PL function over a box.

    Vertices of the linearity complex are points where d+1 or more pieces
    achieve the maximum; each contributes the volume of the convex hull of
    its active gradients. Cells of positive complex dimension carry
    gradient images of dimension below d and contribute nothing.
    """
    if not isinstance(g, MaxAffine):
        raise InputError("the mass is defined for MaxAffine (convex PL) input")
    d = g.dimension
    box = tuple((to_q(lo), to_q(hi)) for lo, hi in box_k)
    if len(box) != d:
        raise InputError("box dimension must match the function")
    for lo, hi in box:
        if not lo < hi:
            raise InputError("box bounds must satisfy lo < hi on every axis")
    pieces = list(dict.fromkeys(g.pieces))
    n = len(pieces)
    seen = {}
    for subset in combinations(range(n), d + 1):
        base = pieces[subset[0]]
        rows = [vsub(pieces[i][0], base[0]) for i in subset[1:]]
        rhs = [base[1] - pieces[i][1] for i in subset[1:]]
        x = solve_linear(rows, rhs)
        if x is None:
            continue  # the pieces meet in a positive-dimensional set
        value = dot(base[0], x) + base[1]
        if any(dot(grad, x) + off > value for grad, off in pieces):
            continue
        if any(not lo <= c <= hi for c, (lo, hi) in zip(x, box)):
            continue
        if x not in seen:
            active = tuple(
                grad for grad, off in pieces if dot(grad, x) + off == value
            )
            seen[x] = tuple(dict.fromkeys(active))
    total = 0.0
    for gradients in seen.values():
        total += _hull_volume(list(gradients), d)
    return MongeAmpereMass(total, len(seen))
