"""Invariant flat sampling and Monte Carlo checks of Crofton-type identities.

Affine m-flats are drawn from the rotation- and translation-invariant
measure, truncated to a ball large enough to cover the scene, with the
truncation volume carried as an importance weight. Scenes are restricted
to sampled flats by pulling the halfspace data back through an orthonormal
parameterization and rationalizing the coefficients, after which the exact
kernel runs inside the flat. Tangent flats (positive-dependent active
normals meeting the flat's orthogonal complement) are rejected and
resampled; for rational scenes they have measure zero, so the rejection
rate doubles as a degeneracy alarm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .curvature import DEFAULT_ANGLE_SAMPLES, curvature_union
from .errors import GeometryError, InputError, TangencyError
from .exact import QZERO, Q, dot, matrix_rank, qvec, rationalize, to_q
from .lp import lp_feasible
from .polyhedra import ConvexPolytope, Halfspace, PolyUnion
from .rng import rng_stream

DEFAULT_DENOMINATOR_BOUND = 1 << 40
# Retries per sample before a tangency storm is treated as degeneracy.
TANGENCY_RETRIES = 32
_QR_RETRIES = 32


# -- measure constants ---------------------------------------------------------


def beta(d: int, i: int, j: int) -> float:
    """Crofton constant Gamma((i+1)/2)Gamma((j+1)/2)/(Gamma((d+1)/2)Gamma((i+j-d+1)/2)).

    Defined for i + j >= d; at i + j < d the last Gamma argument hits a
    pole or the nonpositive axis, so the input is rejected.
    """
    d, i, j = int(d), int(i), int(j)
    if min(d, i, j) < 0 or i > d or j > d:
        raise InputError("beta(d, i, j) needs 0 <= i, j <= d")
    if i + j < d:
        raise InputError("beta(d, i, j) needs i + j >= d")
    return (
        math.gamma((i + 1) / 2)
        * math.gamma((j + 1) / 2)
        / (math.gamma((d + 1) / 2) * math.gamma((i + j - d + 1) / 2))
    )


def unit_ball_volume(p: int) -> float:
    """Volume of the unit p-ball, pi^(p/2) / Gamma(p/2 + 1)."""
    if p < 0:
        raise InputError("ball dimension must be nonnegative")
    return math.pi ** (p / 2) / math.gamma(p / 2 + 1)


# -- flats ---------------------------------------------------------------------


@dataclass(frozen=True)
class AffineSubspace:
    """An m-flat z + span(basis) with orthonormal basis and offset in span^perp.

    basis holds m rows of length d; offset is the foot of the flat, i.e.
    its point closest to the origin. m = 0 (a single point) and m = d
    (all of R^d) are both allowed.
    """

    dimension: int
    basis: tuple
    offset: tuple

    def __post_init__(self):
        m = self.dimension
        if m != len(self.basis):
            raise InputError("basis must hold exactly `dimension` vectors")
        d = len(self.offset)
        for row in self.basis:
            if len(row) != d:
                raise InputError("basis vectors must match the offset dimension")
        for a in range(m):
            for b in range(a, m):
                g = sum(self.basis[a][t] * self.basis[b][t] for t in range(d))
                if abs(g - (1.0 if a == b else 0.0)) > 1e-12:
                    raise InputError("basis must be orthonormal to 1e-12")
        for row in self.basis:
            if abs(sum(row[t] * self.offset[t] for t in range(d))) > 1e-12:
                raise InputError("offset must be orthogonal to the basis")

    @property
    def ambient_dimension(self) -> int:
        return len(self.offset)

    def point(self, u: Sequence[float]) -> tuple:
        """Ambient coordinates of flat coordinates u."""
        if len(u) != self.dimension:
            raise InputError("flat coordinates must have length `dimension`")
        d = len(self.offset)
        return tuple(
            self.offset[t] + sum(u[a] * self.basis[a][t] for a in range(self.dimension))
            for t in range(d)
        )


def sample_grassmann(d: int, m: int, rng: np.random.Generator) -> tuple:
    """Uniform random m-frame in R^d: orthonormalized Gaussian columns.

    Returns m orthonormal d-vectors spanning a linear subspace distributed
    by the rotation-invariant probability measure. Degenerate draws are
    redrawn a bounded number of times.
    """
    d, m = int(d), int(m)
    if not 1 <= m <= d - 1:
        raise InputError("sample_grassmann needs 1 <= m <= d - 1")
    for _ in range(_QR_RETRIES):
        g = rng.standard_normal((d, m))
        q, r = np.linalg.qr(g)
        diag = np.diagonal(r)
        if np.min(np.abs(diag)) <= 1e-12:
            continue
        q = q * np.sign(diag)
        return tuple(tuple(float(x) for x in q[:, a]) for a in range(m))
    raise GeometryError("repeated degenerate Gaussian draws")


def _ball_point(
    d: int, radius: float, rng: np.random.Generator, basis: tuple
) -> tuple:
    """Uniform point in the radius-R ball of span(basis)^perp inside R^d."""
    p = d - len(basis)
    if p == 0:
        return tuple([0.0] * d)
    for _ in range(_QR_RETRIES):
        g = rng.standard_normal(d)
        # two projection passes: rescaling to a large radius must not
        # amplify one-pass Gram-Schmidt residue past the flat invariant
        for _ in range(2):
            for row in basis:
                g = g - np.dot(row, g) * np.asarray(row)
        norm = float(np.linalg.norm(g))
        if norm <= 1e-12:
            continue
        scale = radius * float(rng.uniform()) ** (1.0 / p) / norm
        return tuple(float(x) * scale for x in g)
    raise GeometryError("repeated degenerate Gaussian draws")


def sample_affine_hitting(
    d: int, m: int, radius: float, rng: np.random.Generator
) -> tuple:
    """One m-flat from the invariant measure truncated to offsets in a ball.

    The direction is uniform on the Grassmannian and the offset uniform in
    the radius-R ball of its orthogonal complement; the returned weight is
    that ball's volume, so weight times the empirical mean of an integrand
    supported inside the ball estimates the invariant-measure integral.
    """
    d, m = int(d), int(m)
    if not 0 <= m <= d:
        raise InputError("flat dimension must satisfy 0 <= m <= d")
    if radius <= 0:
        raise InputError("window radius must be positive")
    if m == d:
        basis = tuple(
            tuple(1.0 if a == t else 0.0 for t in range(d)) for a in range(d)
        )
        return AffineSubspace(d, basis, tuple([0.0] * d)), 1.0
    basis = sample_grassmann(d, m, rng) if m >= 1 else ()
    z = _ball_point(d, float(radius), rng, basis)
    weight = unit_ball_volume(d - m) * float(radius) ** (d - m)
    return AffineSubspace(m, basis, z), weight


# -- restriction to a flat -------------------------------------------------------


def _pullback_rows(
    part: ConvexPolytope, e: AffineSubspace, bound: int
) -> tuple:
    """Rationalized pullback of one part's constraints to flat coordinates.

    Returns (rows, contained_facet, empty, err): rows are triples
    (coeffs, offset, ambient_normal) with nonzero coeffs; contained_facet
    marks a constraint hyperplane containing E exactly (a tangency when
    the slice is nonempty); empty marks a constraint violated everywhere
    on E; err is the worst relative rationalization perturbation.
    """
    m = e.dimension
    rows = []
    contained_facet = False
    empty = False
    err = 0.0
    for normal, offset in part.canonical_rows():
        nf = [float(x) for x in normal]
        cf = [
            sum(nf[t] * e.basis[a][t] for t in range(len(nf))) for a in range(m)
        ]
        of = float(offset) - sum(nf[t] * e.offset[t] for t in range(len(nf)))
        c = tuple(rationalize(x, bound) for x in cf)
        o = rationalize(of, bound)
        for exactv, floatv in zip(list(c) + [o], cf + [of]):
            # the float itself is exact binary data; the perturbation is the
            # exact gap between it and the committed bounded-denominator value
            gap = abs(float(exactv - Q(floatv)))
            err = max(err, gap / max(1.0, abs(floatv)))
        if all(x == 0 for x in c):
            # constraint parallel to E: vacuous, violated, or containing it
            if o < 0:
                empty = True
            elif o == 0:
                contained_facet = True
            continue
        rows.append((c, o, normal))
    return rows, contained_facet, empty, err


def _empty_part(m: int) -> ConvexPolytope:
    rows = [QZERO] * m
    a = tuple([to_q(1)] + rows[1:])
    p = ConvexPolytope(m, [Halfspace(a, to_q(-1)), Halfspace(_neg(a), QZERO)])
    p._bounded = True
    return p


def _neg(v: Sequence) -> tuple:
    return tuple(-x for x in v)


def _slice_data(a: PolyUnion, e: AffineSubspace, bound: int) -> tuple:
    """Pullback of a union onto a flat, plus per-part row provenance.

    Guard rows |u_j| <= G with G beyond the scene's reach keep every part
    structurally bounded even if rationalization tilts a pair of rows; the
    true slice never touches them.
    """
    d = a.dimension
    m = e.dimension
    if e.ambient_dimension != d:
        raise InputError("flat and scene must share the ambient dimension")
    if m < 1:
        raise InputError("restriction needs a flat of dimension >= 1")
    reach = _scene_radius(a) + math.sqrt(
        sum(x * x for x in e.offset)
    )
    guard = to_q(int(math.ceil(reach)) + 1)
    guards = []
    for j in range(m):
        axis = tuple(to_q(1 if t == j else 0) for t in range(m))
        guards.append(Halfspace(axis, guard))
        guards.append(Halfspace(_neg(axis), guard))
    pulls = []
    parts = []
    err = 0.0
    for part in a.parts:
        rows, contained, empty, rerr = _pullback_rows(part, e, bound)
        err = max(err, rerr)
        pulls.append((rows, contained, empty))
        if empty:
            parts.append(_empty_part(m))
            continue
        poly = ConvexPolytope(
            m, [Halfspace(c, o) for c, o, _ in rows] + guards
        )
        poly._bounded = True
        parts.append(poly)
    return PolyUnion(parts, cap=a.cap), pulls, err


def _dependent_with_ambient_normal(active: list, m: int, d: int) -> bool:
    """Whether some nonneg combination of active rows dies in the flat only.

    active holds (pullback_coeffs, ambient_normal) pairs. Searched: lambda
    >= 0 with sum lambda * coeffs = 0 and sum lambda * normal != 0; the
    nonzero ambient coordinate is pinned to +-1 to keep it linear.
    """
    n = len(active)
    ineqs = []
    for i in range(n):
        row = tuple(to_q(-1 if t == i else 0) for t in range(n))
        ineqs.append((row, QZERO))
    base = [
        (tuple(c[j] for c, _ in active), QZERO) for j in range(m)
    ]
    for j in range(d):
        col = tuple(normal[j] for _, normal in active)
        if all(x == 0 for x in col):
            continue
        for sign in (1, -1):
            eqs = base + [(tuple(sign * x for x in col), to_q(1))]
            if lp_feasible(ineqs, eqs) is not None:
                return True
    return False


def _transversal_from_slice(union: PolyUnion, pulls: list) -> bool:
    """Tangency test on precomputed pullback data.

    Tangent iff some constraint hyperplane of a nonempty slice contains
    the flat outright, or some vertex of a nonempty intersection carries
    active rows whose ambient normals admit a nonnegative dependency that
    cancels inside the flat but not in the ambient space.
    """
    m = union.dimension
    for idx, (rows, contained, empty) in enumerate(pulls):
        if contained and not empty and union.parts[idx].is_feasible():
            return False
    for s in union._nonempty_subsets():
        poly = union.subset_polytope(s)
        rows = [row for i in s for row in pulls[i][0]]
        if not rows:
            continue
        d = len(rows[0][2])
        for v in poly.vertices():
            active = [(c, nrm) for c, o, nrm in rows if dot(c, v) == o]
            if not active:
                continue
            coeffs = [c for c, _ in active]
            if matrix_rank(coeffs) == len(coeffs):
                continue  # independent rows only cancel with lambda = 0
            if _dependent_with_ambient_normal(active, m, d):
                return False
    return True


def is_transversal(
    a: PolyUnion,
    e: AffineSubspace,
    *,
    denominator_bound: int = DEFAULT_DENOMINATOR_BOUND,
) -> bool:
    """True unless the flat is tangent to the union.

    Tangency means some point of A on E carries an outer normal orthogonal
    to E, after rationalization of the pullback data; such flats form a
    null set for rational scenes but would break restriction topology.
    """
    if e.dimension == 0:
        x = qvec([rationalize(t, denominator_bound) for t in e.offset])
        return not a.on_boundary(x)
    if e.dimension >= a.dimension:
        return True
    union, pulls, _ = _slice_data(a, e, denominator_bound)
    return _transversal_from_slice(union, pulls)


def restrict(
    a: PolyUnion,
    e: AffineSubspace,
    *,
    check_transversal: bool = True,
    denominator_bound: int = DEFAULT_DENOMINATOR_BOUND,
) -> PolyUnion:
    """The union sliced by a flat, as a union in the flat's coordinates.

    Constraints pull back through u -> z + u . basis and are rationalized
    with the configured denominator bound, so all downstream computation
    in the flat is exact. Tangent flats are rejected (TangencyError)
    unless the check is disabled.
    """
    union, pulls, _ = _slice_data(a, e, denominator_bound)
    if check_transversal and not _transversal_from_slice(union, pulls):
        raise TangencyError(
            "the flat is tangent to the scene; resample or disable the check"
        )
    return union


def _scene_radius(a: PolyUnion) -> float:
    """Upper bound for max |x| over the union, from part bounding boxes."""
    bb = a.bbox()
    if bb is None:
        return 0.0
    lo, hi = bb
    return math.sqrt(
        sum(max(float(l) ** 2, float(h) ** 2) for l, h in zip(lo, hi))
    )


def _scene_ball(a: PolyUnion) -> tuple:
    """Float center and covering radius of the union, for miss prescreens."""
    bb = a.bbox()
    if bb is None:
        return None, -1.0
    lo, hi = bb
    center = np.array([(float(l) + float(h)) / 2 for l, h in zip(lo, hi)])
    radius = math.sqrt(sum(((float(h) - float(l)) / 2) ** 2 for l, h in zip(lo, hi)))
    return center, radius


def _misses_ball(e: AffineSubspace, center, radius: float) -> bool:
    """Quick reject: the flat stays farther from `center` than `radius`."""
    if center is None:
        return True
    rel = center - np.asarray(e.offset)
    for row in e.basis:
        rel = rel - np.dot(rel, row) * np.asarray(row)
    return float(np.linalg.norm(rel)) > radius + 1e-9


# -- the Crofton validator -------------------------------------------------------


@dataclass(frozen=True)
class CroftonEstimate:
    """Monte Carlo estimate of a flat-integral of curvature against its target.

    mean estimates the integral of C_k(A cap E) over m-flats E; reference
    is beta(d, d+k-m, m) * C_{d+k-m}(A), which the integral should equal.
    stderr is the sample standard deviation over sqrt(samples); rejections
    counts resampled tangent flats; max_rationalization_error is the worst
    relative perturbation introduced by pulling constraints back.
    """

    k: int
    m: int
    mean: float
    stderr: float
    samples: int
    radius: float
    reference: float
    rejections: int
    max_rationalization_error: float

    def __post_init__(self):
        if self.samples < 2:
            raise InputError("an estimate needs at least two samples")


def crofton_estimate(
    a: PolyUnion,
    k: int,
    m: int,
    n_samples: int,
    radius: Optional[float] = None,
    *,
    seed: int = 0,
    denominator_bound: int = DEFAULT_DENOMINATOR_BOUND,
    angle_samples: int = DEFAULT_ANGLE_SAMPLES,
) -> CroftonEstimate:
    """Estimate the m-flat integral of C_k over a union and its closed form.

    Each sample restricts the scene to an invariantly drawn m-flat and
    evaluates C_k there; the weighted mean targets beta(d, d+k-m, m) times
    C_{d+k-m}(A). Sample i depends only on (seed, i), so runs parallelize
    and reproduce bit-identically. Tangent flats are resampled; more than
    1% of them aborts, since for rational scenes they have measure zero.
    """
    d = a.dimension
    k, m, n_samples = int(k), int(m), int(n_samples)
    if not 0 <= k <= m <= d:
        raise InputError("indices must satisfy 0 <= k <= m <= d")
    if n_samples < 100:
        raise InputError("need at least 100 samples")
    if radius is None:
        radius = 1.1 * max(_scene_radius(a), 1e-9)
    radius = float(radius)
    if radius <= 0:
        raise InputError("window radius must be positive")
    reference = beta(d, d + k - m, m) * float(
        curvature_union(a, seed=seed, samples=angle_samples).values[d + k - m]
    )
    if m == d:
        # the only d-flat is R^d itself: the integral is a single exact term
        exact = float(curvature_union(a, seed=seed, samples=angle_samples).values[k])
        return CroftonEstimate(
            k, m, exact, 0.0, n_samples, radius, reference, 0, 0.0
        )
    center, ball = _scene_ball(a)
    values = np.zeros(n_samples)
    rejections = 0
    max_err = 0.0
    for i in range(n_samples):
        for attempt in range(TANGENCY_RETRIES + 1):
            label = (
                ("crofton", i) if attempt == 0 else ("crofton", i, "retry", attempt)
            )
            rng = rng_stream(seed, *label)
            e, weight = sample_affine_hitting(d, m, radius, rng)
            if _misses_ball(e, center, ball):
                break  # integrand vanishes off the scene
            if m == 0:
                x = qvec([rationalize(t, denominator_bound) for t in e.offset])
                if a.on_boundary(x):
                    rejections += 1
                    continue
                values[i] = weight * (1.0 if a.contains(x) else 0.0)
                break
            union, pulls, err = _slice_data(a, e, denominator_bound)
            if not _transversal_from_slice(union, pulls):
                rejections += 1
                continue
            max_err = max(max_err, err)
            ck = curvature_union(union, seed=seed, samples=angle_samples)
            values[i] = weight * float(ck.values[k])
            break
        else:
            raise GeometryError(
                "a single sample kept drawing tangent flats; "
                "the scene looks degenerate for this flat dimension"
            )
    draws = n_samples + rejections
    if rejections > 0.01 * draws:
        raise GeometryError(
            f"{rejections} tangency rejections in {draws} draws; "
            "the scene looks degenerate for this flat dimension"
        )
    mean = float(np.mean(values))
    stderr = float(np.std(values, ddof=1) / math.sqrt(n_samples))
    return CroftonEstimate(
        k, m, mean, stderr, n_samples, radius, reference, rejections, max_err
    )


# -- two-stage decomposition check -------------------------------------------------


@dataclass(frozen=True)
class DecompositionReport:
    """Two-sample comparison of a direct and a factored flat sampler."""

    mean_direct: float
    stderr_direct: float
    mean_staged: float
    stderr_staged: float
    zscore: float
    pvalue: float
    samples: int

    def __float__(self) -> float:
        return self.zscore


def _hits_cube(e: AffineSubspace, center: Sequence[float], half) -> bool:
    """Exact test: does the flat meet the axis cube center + [-half, half]^d?

    Pullback coefficients are rationalized first, so both samplers in the
    decomposition check face the identical integrand.
    """
    d = e.ambient_dimension
    m = e.dimension
    rel = [rationalize(float(e.offset[t]) - float(center[t])) for t in range(d)]
    if m == 0:
        return all(abs(x) <= half for x in rel)
    rows = []
    for t in range(d):
        c = tuple(rationalize(e.basis[a][t]) for a in range(m))
        if all(x == 0 for x in c):
            if abs(rel[t]) > half:
                return False
            continue
        rows.append(Halfspace(c, half - rel[t]))
        rows.append(Halfspace(_neg(c), half + rel[t]))
    if not rows:
        return True
    return ConvexPolytope(m, rows).is_feasible()


def _staged_flat(
    d: int, m: int, i: int, outer_radius: float, rng: np.random.Generator
) -> tuple:
    """Sample E from the m-flat measure, then an i-flat inside E.

    The inner stage reuses the invariant sampler in E's coordinates; its
    window must cover the scene as seen from E, so it doubles the outer
    radius. Returns the ambient i-flat and the product of both weights.
    """
    e, w1 = sample_affine_hitting(d, m, outer_radius, rng)
    inner_radius = 2.0 * outer_radius
    if i == m:
        return e, w1
    frame = sample_grassmann(m, i, rng) if i >= 1 else ()
    z_in = _ball_point(m, inner_radius, rng, frame)
    w2 = unit_ball_volume(m - i) * inner_radius ** (m - i)
    basis = tuple(
        tuple(
            sum(frame[a][s] * e.basis[s][t] for s in range(m))
            for t in range(d)
        )
        for a in range(i)
    )
    shift = tuple(
        sum(z_in[s] * e.basis[s][t] for s in range(m)) for t in range(d)
    )
    offset = tuple(e.offset[t] + shift[t] for t in range(d))
    # re-foot the offset: subtract its component along the new basis
    # (twice, so cancellation on large offsets stays below the invariant)
    for _ in range(2):
        for row in basis:
            c = sum(row[t] * offset[t] for t in range(d))
            offset = tuple(offset[t] - c * row[t] for t in range(d))
    return AffineSubspace(i, basis, offset), w1 * w2


def decomposition_check(
    d: int,
    m: int,
    i: int,
    n_samples: int,
    *,
    seed: int = 0,
    cube_center: Optional[Sequence[float]] = None,
) -> DecompositionReport:
    """Compare direct i-flat sampling against sampling through m-flats.

    The invariant i-flat measure factors through the m-flat measure: first
    draw E from the m-flat measure, then an i-flat inside E, multiplying
    the stage weights. Both samplers estimate the measure of i-flats
    hitting a fixed unit cube; the report carries the two-sample z score.
    """
    d, m, i, n_samples = int(d), int(m), int(i), int(n_samples)
    if d < 3:
        raise InputError("the decomposition needs ambient dimension >= 3")
    if not 0 <= i <= m <= d - 1 or m < 1:
        raise InputError("indices must satisfy 0 <= i <= m <= d - 1")
    if n_samples < 100:
        raise InputError("need at least 100 samples")
    center = tuple(float(x) for x in (cube_center or [0.0] * d))
    if len(center) != d:
        raise InputError("cube center must have length d")
    half = Q(1, 2)
    radius = 1.1 * (math.sqrt(sum(x * x for x in center)) + math.sqrt(d) / 2)
    direct = np.zeros(n_samples)
    staged = np.zeros(n_samples)
    for s in range(n_samples):
        rng = rng_stream(seed, "flat-direct", s)
        f, w = sample_affine_hitting(d, i, radius, rng)
        if _hits_cube(f, center, half):
            direct[s] = w
        rng = rng_stream(seed, "flat-staged", s)
        f, w = _staged_flat(d, m, i, radius, rng)
        if _hits_cube(f, center, half):
            staged[s] = w
    mean_d = float(np.mean(direct))
    mean_s = float(np.mean(staged))
    se_d = float(np.std(direct, ddof=1) / math.sqrt(n_samples))
    se_s = float(np.std(staged, ddof=1) / math.sqrt(n_samples))
    pooled = math.hypot(se_d, se_s)
    if pooled == 0.0:
        z = 0.0 if mean_d == mean_s else math.inf
    else:
        z = (mean_d - mean_s) / pooled
    p = math.erfc(abs(z) / math.sqrt(2)) if math.isfinite(z) else 0.0
    return DecompositionReport(mean_d, se_d, mean_s, se_s, z, p, n_samples)
