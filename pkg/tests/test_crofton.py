"""Flat samplers, restriction, and the Monte Carlo Crofton validator.

Oracles: the beta-constant table (hand-reduced Gamma quotients), circle
uniformity and rotation invariance for the Grassmannian sampler, Cauchy's
mean-width formulas for hitting measures (perimeter/pi for lines against a
square, surface/4 for lines against a cube), and exact Euler cross-checks
of restriction against ambient hyperplane slicing.
"""

import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from curvkit.crofton import (
    AffineSubspace,
    CroftonEstimate,
    beta,
    crofton_estimate,
    decomposition_check,
    is_transversal,
    restrict,
    sample_affine_hitting,
    sample_grassmann,
    unit_ball_volume,
)
from curvkit.curvature import affine_pushforward, curvature_union
from curvkit.errors import GeometryError, InputError, TangencyError
from curvkit.exact import Q
from curvkit.polyhedra import ConvexPolytope, Halfspace, PolyUnion, box
from curvkit.rng import rng_stream


def _union(*parts) -> PolyUnion:
    return PolyUnion(list(parts))


def _centered_square() -> PolyUnion:
    return _union(box([(F(-1, 2), F(1, 2))] * 2))


def _centered_cube() -> PolyUnion:
    return _union(box([(F(-1, 2), F(1, 2))] * 3))


SQRT2 = math.sqrt(0.5)


def _line(direction, point) -> AffineSubspace:
    """1-flat through `point` along `direction` (unit), offset re-footed."""
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    p = np.asarray(point, dtype=float)
    z = p - np.dot(p, d) * d
    return AffineSubspace(1, (tuple(d),), tuple(z))


# -- beta constants ------------------------------------------------------------


def test_beta_hand_values():
    assert beta(2, 1, 1) == pytest.approx(2 / math.pi, rel=1e-12)
    assert beta(3, 2, 2) == pytest.approx(math.pi / 4, rel=1e-12)
    # Gamma((i+1)/2) pairs cancel against the denominator when i = d
    for d in range(1, 11):
        for m in range(d + 1):
            assert beta(d, d, m) == pytest.approx(1.0, abs=1e-12)


def test_beta_symmetric_in_ij():
    for d, i, j in [(3, 2, 1), (4, 3, 2), (5, 4, 3), (6, 5, 2)]:
        if i + j >= d:
            assert beta(d, i, j) == pytest.approx(beta(d, j, i), rel=1e-12)


def test_beta_rejects_pole():
    with pytest.raises(InputError):
        beta(3, 1, 1)  # i + j < d
    with pytest.raises(InputError):
        beta(2, 0, 1)
    with pytest.raises(InputError):
        beta(3, 4, 1)  # i > d
    with pytest.raises(InputError):
        beta(3, -1, 3)


def test_unit_ball_volumes():
    assert unit_ball_volume(0) == pytest.approx(1.0)
    assert unit_ball_volume(1) == pytest.approx(2.0)
    assert unit_ball_volume(2) == pytest.approx(math.pi, rel=1e-14)
    assert unit_ball_volume(3) == pytest.approx(4 * math.pi / 3, rel=1e-14)
    with pytest.raises(InputError):
        unit_ball_volume(-1)


# -- Grassmannian sampler --------------------------------------------------------


def test_grassmann_frames_orthonormal():
    rng = rng_stream(7, "frames")
    for d, m in [(2, 1), (3, 1), (3, 2), (5, 3), (6, 5)]:
        for _ in range(50):
            frame = sample_grassmann(d, m, rng)
            g = np.array(frame)
            assert np.abs(g @ g.T - np.eye(m)).max() <= 1e-12


def test_grassmann_rejects_bad_range():
    rng = rng_stream(0, "bad")
    with pytest.raises(InputError):
        sample_grassmann(3, 0, rng)
    with pytest.raises(InputError):
        sample_grassmann(3, 3, rng)


def test_grassmann_circle_uniform():
    # d=2 lines: the doubled direction angle must be uniform on the circle
    rng = rng_stream(11, "uniform")
    n = 100_000
    bins = 24
    counts = np.zeros(bins, dtype=int)
    for _ in range(n):
        (v,) = sample_grassmann(2, 1, rng)
        angle = math.atan2(v[1], v[0]) % math.pi  # lines, not rays
        counts[min(int(bins * angle / math.pi), bins - 1)] += 1
    _, p = stats.chisquare(counts)
    assert p > 0.01


def test_grassmann_rotation_invariance():
    # rotating the Gaussian input rotates the frame, so angle statistics
    # from a rotated batch must match a fresh batch in distribution
    theta = 0.81
    rot = np.array(
        [[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]]
    )
    rng = rng_stream(13, "rot")
    n = 4000
    plain = np.empty(n)
    rotated = np.empty(n)
    for t in range(n):
        (v,) = sample_grassmann(2, 1, rng)
        plain[t] = math.atan2(v[1], v[0]) % math.pi
        (w,) = sample_grassmann(2, 1, rng)
        rv = rot @ np.asarray(w)
        rotated[t] = math.atan2(rv[1], rv[0]) % math.pi
    _, p = stats.ks_2samp(plain, rotated)
    assert p > 0.01


# -- hitting sampler --------------------------------------------------------------


def test_affine_hitting_shapes_and_weight():
    rng = rng_stream(3, "hit")
    for d, m in [(2, 1), (3, 1), (3, 2), (4, 2), (3, 0), (3, 3)]:
        flat, weight = sample_affine_hitting(d, m, 2.0, rng)
        assert flat.dimension == m
        assert flat.ambient_dimension == d
        assert weight == pytest.approx(unit_ball_volume(d - m) * 2.0 ** (d - m))
        # offsets stay inside the sampling ball
        assert math.sqrt(sum(x * x for x in flat.offset)) <= 2.0 + 1e-9


def test_affine_hitting_rejects_bad_input():
    rng = rng_stream(3, "hit")
    with pytest.raises(InputError):
        sample_affine_hitting(3, 1, 0.0, rng)
    with pytest.raises(InputError):
        sample_affine_hitting(3, 1, -2.0, rng)
    with pytest.raises(InputError):
        sample_affine_hitting(3, 4, 1.0, rng)


def test_line_measure_of_square_is_perimeter_over_pi():
    # Cauchy: the invariant measure of lines meeting a convex body is its
    # mean width, perimeter/pi for the unit square; R=2 oversamples it
    square = _centered_square()
    n = 4000
    values = np.zeros(n)
    for i in range(n):
        rng = rng_stream(17, "cauchy", i)
        flat, weight = sample_affine_hitting(2, 1, 2.0, rng)
        if restrict(square, flat, check_transversal=False).euler() != 0:
            values[i] = weight
    mean = float(np.mean(values))
    se = float(np.std(values, ddof=1) / math.sqrt(n))
    assert abs(mean - 4 / math.pi) <= 4 * se


def test_flat_point_mapping():
    e = _line((1, 0), (0.0, 0.25))
    assert e.point([0.75]) == pytest.approx((0.75, 0.25))
    with pytest.raises(InputError):
        e.point([0.0, 1.0])


def test_affine_subspace_validation():
    with pytest.raises(InputError):
        AffineSubspace(1, ((1.0, 1.0),), (0.0, 0.0))  # not unit
    with pytest.raises(InputError):
        AffineSubspace(2, ((1.0, 0.0), (1.0, 0.0)), (0.0, 0.0))  # not orthogonal
    with pytest.raises(InputError):
        AffineSubspace(1, ((1.0, 0.0),), (0.5, 0.0))  # offset not orthogonal
    with pytest.raises(InputError):
        AffineSubspace(2, ((1.0, 0.0),), (0.0, 0.0))  # arity
    point = AffineSubspace(0, (), (0.25, -0.5))
    assert point.ambient_dimension == 2


# -- restriction -------------------------------------------------------------------


def test_restrict_square_horizontal_line():
    square = _union(box([(0, 1), (0, 1)]))
    e = _line((1, 0), (0.0, 0.5))
    sliced = restrict(square, e)
    assert sliced.dimension == 1
    assert sliced.euler() == 1
    verts = sorted(v[0] for v in sliced.parts[0].vertices())
    assert verts == [0, 1]


def test_restrict_cube_central_diagonal_plane_is_hexagon():
    cube = _centered_cube()
    n = np.array([1.0, 1.0, 1.0]) / math.sqrt(3)
    b1 = np.array([1.0, -1.0, 0.0]) / math.sqrt(2)
    b2 = np.cross(n, b1)
    e = AffineSubspace(2, (tuple(b1), tuple(b2)), (0.0, 0.0, 0.0))
    sliced = restrict(cube, e)
    assert sliced.euler() == 1
    assert len(sliced.parts[0].vertices()) == 6


def test_restrict_cube_generic_planes_give_small_polygons():
    cube = _centered_cube()
    for i in range(12):
        rng = rng_stream(23, "plane", i)
        e, _ = sample_affine_hitting(3, 2, 0.96, rng)
        sliced = restrict(cube, e, check_transversal=False)
        chi = sliced.euler()
        assert chi in (0, 1)
        if chi == 1:
            assert 3 <= len(sliced.parts[0].vertices()) <= 6


def test_restrict_disjoint_is_empty():
    square = _union(box([(0, 1), (0, 1)]))
    e = _line((1, 0), (0.0, 5.0))
    sliced = restrict(square, e)
    assert sliced.euler() == 0
    assert not sliced.parts[0].is_feasible()


def test_restrict_rejects_facet_containment():
    square = _union(box([(0, 1), (0, 1)]))
    e = _line((1, 0), (0.0, 0.0))  # contains the bottom facet
    assert not is_transversal(square, e)
    with pytest.raises(TangencyError):
        restrict(square, e)
    # with the check off the slice itself is still the bottom edge
    assert restrict(square, e, check_transversal=False).euler() == 1


def test_transversality_at_a_touching_corner():
    square = _union(box([(0, 1), (0, 1)]))
    graze = _line((SQRT2, -SQRT2), (0.0, 0.0))  # only meets the corner
    enter = _line((SQRT2, SQRT2), (0.0, 0.0))  # passes through the interior
    assert not is_transversal(square, graze)
    assert is_transversal(square, enter)
    assert restrict(square, enter).euler() == 1


def test_transversality_trivial_cases():
    square = _union(box([(0, 1), (0, 1)]))
    assert is_transversal(square, _line((1, 0), (0.0, 5.0)))  # disjoint
    assert is_transversal(square, _line((1, 0), (0.0, 0.5)))  # generic
    # a point flat is tangent exactly on the boundary
    assert not is_transversal(square, AffineSubspace(0, (), (0.5, 0.0)))
    assert is_transversal(square, AffineSubspace(0, (), (0.5, 0.5)))
    assert is_transversal(square, AffineSubspace(0, (), (3.0, 3.0)))


def _ambient_slice_euler(a: PolyUnion, normal, offset) -> int:
    """chi of A cap {normal . x = offset} computed without leaving R^d."""
    n = tuple(Q(x) for x in normal)
    b = Q(offset)
    cut = [Halfspace(n, b), Halfspace(tuple(-x for x in n), -b)]
    parts = []
    for p in a.parts:
        parts.append(ConvexPolytope(a.dimension, list(p.halfspaces) + cut))
    for p in parts:
        p._bounded = True
    return PolyUnion(parts, cap=a.cap).euler()


def _hyperplane_flat(normal, offset, basis_rows) -> AffineSubspace:
    n = np.asarray([float(x) for x in normal])
    scale = float(offset) / float(np.dot(n, n))
    z = tuple(scale * x for x in n)
    return AffineSubspace(len(basis_rows), tuple(basis_rows), z)


def test_restrict_euler_matches_ambient_slicing():
    # 100 hyperplane slices whose orthonormal bases have small rational
    # entries, so rationalized pullbacks reproduce the geometry exactly
    lshape = _union(box([(0, 2), (0, 1)]), box([(0, 1), (0, 2)]))
    twocubes = _union(
        box([(0, 1)] * 3), box([(F(1, 2), F(3, 2)), (F(1, 2), F(3, 2)), (0, 1)])
    )
    rng = rng_stream(29, "hyperplanes")
    planes2 = [
        ((1, 0), ((0.0, 1.0),)),
        ((0, 1), ((1.0, 0.0),)),
        ((F(3, 5), F(4, 5)), ((-0.8, 0.6),)),
        ((F(4, 5), F(-3, 5)), ((0.6, 0.8),)),
    ]
    planes3 = [
        ((1, 0, 0), ((0.0, 1.0, 0.0), (0.0, 0.0, 1.0))),
        ((0, 0, 1), ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0))),
        (
            (F(1, 3), F(2, 3), F(2, 3)),
            ((2 / 3, 1 / 3, -2 / 3), (2 / 3, -2 / 3, 1 / 3)),
        ),
    ]
    checked = 0
    for scene, planes, span in [(lshape, planes2, 2.2), (twocubes, planes3, 1.8)]:
        for _ in range(50):
            normal, basis = planes[int(rng.integers(len(planes)))]
            t = F(int(rng.integers(-64, int(64 * span))), 64)
            flat = _hyperplane_flat(normal, t, basis)
            direct = _ambient_slice_euler(scene, normal, t)
            sliced = restrict(scene, flat, check_transversal=False)
            assert sliced.euler() == direct
            checked += 1
    assert checked == 100


def test_restrict_rationalization_error_is_tiny():
    est = crofton_estimate(_centered_cube(), 1, 2, 120, seed=5)
    assert 0.0 < est.max_rationalization_error <= 1e-10


# -- the validator -----------------------------------------------------------------


def test_crofton_square_lines():
    est = crofton_estimate(_centered_square(), 0, 1, 600, seed=2)
    assert est.reference == pytest.approx(4 / math.pi, rel=1e-12)
    assert est.rejections == 0
    assert est.stderr > 0
    assert abs(est.mean - est.reference) <= 3.5 * est.stderr
    again = crofton_estimate(_centered_square(), 0, 1, 600, seed=2)
    assert again.mean == est.mean  # bit-reproducible for a fixed seed
    other = crofton_estimate(_centered_square(), 0, 1, 600, seed=3)
    assert other.mean != est.mean


def test_crofton_cube_planes_mean_curvature():
    est = crofton_estimate(_centered_cube(), 1, 2, 200, seed=4)
    assert est.reference == pytest.approx(3 * math.pi / 4, rel=1e-12)
    assert abs(est.mean - est.reference) <= 4 * est.stderr
    assert est.rejections == 0


def test_crofton_cube_planes_hitting_measure():
    # k=0 against planes: the hitting measure is the mean width, 3/2
    est = crofton_estimate(_centered_cube(), 0, 2, 300, seed=6)
    assert est.reference == pytest.approx(1.5, rel=1e-12)
    assert abs(est.mean - est.reference) <= 4 * est.stderr


def test_crofton_point_flats_give_volume():
    est = crofton_estimate(_centered_square(), 0, 0, 500, seed=7)
    assert est.reference == pytest.approx(1.0, rel=1e-12)
    assert abs(est.mean - est.reference) <= 4 * est.stderr


def test_crofton_full_flat_is_exact():
    est = crofton_estimate(_centered_square(), 1, 2, 100, seed=0)
    assert est.mean == est.reference
    assert est.stderr == 0.0
    assert est.samples == 100


def test_crofton_rigid_motion_invariance():
    square = _centered_square()
    rot = [[F(3, 5), F(-4, 5)], [F(4, 5), F(3, 5)]]
    moved = affine_pushforward(square, rot, [F(1, 7), F(2, 9)])
    a = crofton_estimate(square, 0, 1, 500, seed=8)
    b = crofton_estimate(moved, 0, 1, 500, seed=8, radius=a.radius + 0.5)
    assert b.reference == pytest.approx(a.reference, rel=1e-12)
    assert abs(a.mean - b.mean) <= 4 * math.hypot(a.stderr, b.stderr)


def test_crofton_rejects_bad_indices():
    square = _centered_square()
    with pytest.raises(InputError):
        crofton_estimate(square, 2, 1, 200)
    with pytest.raises(InputError):
        crofton_estimate(square, 0, 3, 200)
    with pytest.raises(InputError):
        crofton_estimate(square, 0, 1, 99)
    with pytest.raises(InputError):
        crofton_estimate(square, 0, 1, 200, radius=-1.0)


def test_crofton_estimate_validates_samples():
    with pytest.raises(InputError):
        CroftonEstimate(0, 1, 0.0, 0.0, 1, 1.0, 0.0, 0, 0.0)


def test_crofton_union_scene():
    # two touching squares: C_1 = half the outer perimeter = 3
    scene = _union(
        box([(F(-1, 1), F(0, 1)), (F(-1, 2), F(1, 2))]),
        box([(F(0, 1), F(1, 1)), (F(-1, 2), F(1, 2))]),
    )
    est = crofton_estimate(scene, 0, 1, 500, seed=9)
    assert est.reference == pytest.approx(6 / math.pi, rel=1e-12)
    assert abs(est.mean - est.reference) <= 4 * est.stderr
    assert est.rejections == 0


# -- the decomposition check --------------------------------------------------------


def test_decomposition_3_2_1_agrees():
    rep = decomposition_check(3, 2, 1, 2500, seed=10)
    assert rep.pvalue > 0.01
    assert abs(rep.zscore) <= 3.0
    # Cauchy: lines hitting the unit cube carry measure surface/4 = 3/2
    assert abs(rep.mean_direct - 1.5) <= 4 * rep.stderr_direct
    assert abs(rep.mean_staged - 1.5) <= 4 * rep.stderr_staged
    assert float(rep) == rep.zscore


def test_decomposition_equal_dims_degenerates_gracefully():
    rep = decomposition_check(3, 2, 2, 200, seed=11)
    assert rep.pvalue > 0.001


def test_decomposition_far_cube_is_identically_zero():
    rep = decomposition_check(3, 2, 1, 150, seed=12, cube_center=(400, 400, 400))
    assert rep.mean_direct == 0.0
    assert rep.mean_staged == 0.0
    assert rep.zscore == 0.0


def test_decomposition_rejects_vacuous_ranges():
    with pytest.raises(InputError):
        decomposition_check(2, 1, 1, 200)
    with pytest.raises(InputError):
        decomposition_check(3, 3, 1, 200)
    with pytest.raises(InputError):
        decomposition_check(3, 2, 1, 50)
    with pytest.raises(InputError):
        decomposition_check(4, 2, 3, 200)


@settings(max_examples=25, deadline=None)
@given(
    st.integers(min_value=-8, max_value=8),
    st.integers(min_value=-8, max_value=8),
    st.sampled_from([(1, 0), (0, 1), (3, 4), (4, -3)]),
)
def test_slice_euler_is_translation_invariant(dx, dy, direction):
    # translating scene and line together must not change slice topology
    scene = _union(box([(0, 2), (0, 1)]), box([(1, 3), (0, 2)]))
    base = _line(direction, (0.3, 0.45))
    chi = restrict(scene, base, check_transversal=False).euler()
    shift = (F(dx, 4), F(dy, 4))
    moved_scene = scene.translate(shift)
    p = (0.3 + dx / 4, 0.45 + dy / 4)
    moved_line = _line(direction, p)
    assert restrict(moved_scene, moved_line, check_transversal=False).euler() == chi
