"""Kernel tests: vertex enumeration, Euler characteristics, tangent cones.

Frozen expected vertex sets below were computed independently with the
double-description oracle in tests/oracles.py before being pinned here.
"""

from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curvkit.errors import CapExceededError, GeometryError, UnboundedPolytopeError
from curvkit.exact import Q
from curvkit.polyhedra import (
    ConvexPolytope,
    PolyUnion,
    box,
    euler,
    euler_with_halfspace,
    halfspace,
    simplex_from_points,
    tangent_cone,
    vertices,
)

from .oracles import dd_vertices, euler_ie

F = Fraction


def unit_square() -> ConvexPolytope:
    return box([(0, 1), (0, 1)])


def l_shape() -> PolyUnion:
    return PolyUnion([box([(0, 2), (0, 1)]), box([(0, 1), (0, 2)])])


def test_box_vertices():
    got = vertices(box([(0, 1), (0, 1), (0, 1)]))
    assert len(got) == 8
    assert sorted(got) == dd_vertices(
        [row.as_pair() for row in box([(0, 1)] * 3).halfspaces], 3
    )


def test_cut_cube_vertices_frozen():
    cut = box([(0, 1)] * 3).intersect([halfspace((1, 1, 1), F(3, 2))])
    got = set(vertices(cut))
    h = F(1, 2)
    expected = {
        (0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1),
        (1, h, 0), (1, 0, h), (h, 1, 0), (0, 1, h), (h, 0, 1), (0, h, 1),
    }
    assert got == {tuple(map(F, v)) for v in expected}
    oracle = dd_vertices([row.as_pair() for row in cut.halfspaces], 3)
    assert got == set(oracle)


def test_simplex_from_points():
    tri = simplex_from_points([(0, 0), (2, 0), (0, 2)])
    assert set(vertices(tri)) == {(0, 0), (2, 0), (0, 2)}
    assert tri.contains((F(1, 2), F(1, 2)))
    assert not tri.contains((2, 2))


def test_simplex_rejects_affinely_dependent_points():
    with pytest.raises(GeometryError):
        simplex_from_points([(0, 0), (1, 1), (2, 2)])  # collinear
    with pytest.raises(GeometryError):
        simplex_from_points(
            [(F(-1, 2), F(-3, 4)), (F(11, 4), F(5, 2)), (F(3, 2), F(5, 4))]
        )
    with pytest.raises(GeometryError):
        simplex_from_points([(0, 0, 0), (1, 0, 0), (0, 1, 0), (1, 1, 0)])  # coplanar
    with pytest.raises(GeometryError):
        simplex_from_points([(0, 0), (0, 0), (1, 0)])  # repeated point


def test_unbounded_rejected():
    ray = ConvexPolytope(2, [halfspace((-1, 0), 0), halfspace((0, -1), 0)])
    assert ray.is_feasible()
    assert not ray.is_bounded()
    with pytest.raises(UnboundedPolytopeError):
        vertices(ray)
    with pytest.raises(UnboundedPolytopeError):
        PolyUnion([ray])


def test_empty_part_is_allowed():
    empty = box([(0, 1), (0, 1)]).intersect([halfspace((1, 0), -1)])
    assert not empty.is_feasible()
    u = PolyUnion([unit_square(), empty])
    assert euler(u) == 1


def test_euler_values():
    assert euler(PolyUnion([unit_square()])) == 1
    assert euler(l_shape()) == 1
    two = PolyUnion([box([(0, 1), (0, 1)]), box([(3, 4), (0, 1)])])
    assert euler(two) == 2
    # Annulus-like ring made of four overlapping slabs: chi = 0.
    ring = PolyUnion(
        [
            box([(0, 3), (0, 1)]),
            box([(0, 3), (2, 3)]),
            box([(0, 1), (0, 3)]),
            box([(2, 3), (0, 3)]),
        ]
    )
    assert euler(ring) == 0


def test_euler_with_halfspace_window():
    u = PolyUnion([unit_square()])
    assert euler_with_halfspace(u, halfspace((1, 0), F(1, 2))) == 1
    assert euler_with_halfspace(u, halfspace((1, 0), -1)) == 0
    ring = PolyUnion(
        [
            box([(0, 3), (0, 1)]),
            box([(0, 3), (2, 3)]),
            box([(0, 1), (0, 3)]),
            box([(2, 3), (0, 3)]),
        ]
    )
    # Cutting the ring in half leaves a connected C shape.
    assert euler_with_halfspace(ring, halfspace((1, 0), F(3, 2))) == 1


def _random_box_union(rng: random.Random, dim: int) -> PolyUnion:
    parts = []
    for _ in range(rng.randint(1, 3)):
        bounds = []
        for _ in range(dim):
            lo = rng.randint(-2, 2)
            bounds.append((lo, lo + rng.randint(1, 3)))
        parts.append(box(bounds))
    return PolyUnion(parts)


def test_euler_matches_inclusion_exclusion_oracle():
    rng = random.Random(1105)
    for _ in range(25):
        dim = rng.choice([2, 3])
        u = _random_box_union(rng, dim)
        rows = [[row.as_pair() for row in p.halfspaces] for p in u.parts]
        assert euler(u) == euler_ie(rows, dim)
        a = [rng.randint(-2, 2) for _ in range(dim)]
        if all(v == 0 for v in a):
            a[0] = 1
        b = F(rng.randint(-4, 8), 2)
        h = halfspace(tuple(a), b)
        assert euler_with_halfspace(u, h) == euler_ie(rows, dim, extra=[h.as_pair()])


def test_tangent_cone_structure():
    sq = PolyUnion([unit_square()])
    interior = tangent_cone(sq, (F(1, 2), F(1, 2)))
    assert interior.parts == ((),)
    corner = tangent_cone(sq, (0, 0))
    assert len(corner.parts) == 1
    normals = {tuple(h.normal) for h in corner.parts[0]}
    assert normals == {(-1, 0), (0, -1)}
    assert all(h.offset == 0 for h in corner.parts[0])
    with pytest.raises(ValueError):
        tangent_cone(sq, (5, 5))
    # Reentrant corner of the L keeps both parts.
    cone = tangent_cone(l_shape(), (1, 1))
    assert len(cone.parts) == 2


def test_cap_enforced(monkeypatch):
    parts = [box([(2 * i, 2 * i + 1), (0, 1)]) for i in range(9)]
    with pytest.raises(CapExceededError):
        PolyUnion(parts)
    monkeypatch.setenv("CURVKIT_IE_CAP", "9")
    u = PolyUnion(parts)
    assert euler(u) == 9
    monkeypatch.setenv("CURVKIT_IE_CAP", "0")
    with pytest.raises(ValueError):
        PolyUnion(parts[:1])


@settings(max_examples=40, deadline=None)
@given(st.permutations(range(3)), st.integers(0, 2))
def test_euler_invariant_under_part_permutation_and_duplication(perm, dup):
    parts = [
        box([(0, 2), (0, 1)]),
        box([(0, 1), (0, 2)]),
        box([(1, 3), (1, 2)]),
    ]
    base = euler(PolyUnion(list(parts)))
    shuffled = [parts[i] for i in perm] + [parts[dup]]
    assert euler(PolyUnion(shuffled)) == base


def test_translate_scale():
    u = l_shape().translate((1, -1))
    assert euler(u) == 1
    assert u.contains((F(3, 2), F(-1, 2)))
    s = l_shape().scale(F(1, 2))
    assert s.contains((F(1, 2), F(1, 4)))
    assert not s.contains((F(3, 2), F(1, 2)))


def test_contains_and_boundary():
    u = l_shape()
    assert u.contains((2, 1))
    assert not u.contains((2, F(3, 2)))
    assert u.on_boundary((2, 1))
    assert not u.on_boundary((F(1, 2), F(1, 2)))
    # Interior point of the union covered by both parts.
    assert not u.on_boundary((F(1, 2), F(1, 2)))
