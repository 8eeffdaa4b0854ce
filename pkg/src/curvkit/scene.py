"""Scene files: JSON descriptions of polytope unions and d.c. functions.

Rational values travel as JSON integers or strings "p/q", never floats,
so a scene survives a round trip through JSON without precision loss.
Structural problems raise InputError; geometric preconditions (unbounded
parts, part-count caps) surface from the polyhedra layer as GeometryError.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .dcfun import DCFunction, MaxAffine
from .errors import GeometryError, InputError
from .exact import format_q, to_q
from .polyhedra import ConvexPolytope, Halfspace, PolyUnion


def parse_rational(value):
    """One exact scalar from a JSON value (int or "p/q" string)."""
    if isinstance(value, bool):
        raise InputError(f"not a rational value: {value!r}")
    if isinstance(value, int):
        return to_q(value)
    if isinstance(value, str):
        try:
            return to_q(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InputError(f"cannot parse rational {value!r}") from exc
    raise InputError(
        f"rationals must be integers or 'p/q' strings, got {type(value).__name__}"
    )


def parse_rational_vector(values, dimension: int, what: str) -> tuple:
    if not isinstance(values, (list, tuple)):
        raise InputError(f"{what} must be a list of rationals")
    vec = tuple(parse_rational(v) for v in values)
    if len(vec) != dimension:
        raise InputError(f"{what} must have {dimension} components, got {len(vec)}")
    return vec


def _halfspace_from_dict(data, dimension: int) -> Halfspace:
    if not isinstance(data, dict):
        raise InputError("each halfspace must be an object with normal and offset")
    try:
        normal = data["normal"]
        offset = data["offset"]
    except KeyError as exc:
        raise InputError(f"halfspace is missing {exc.args[0]!r}") from exc
    vec = parse_rational_vector(normal, dimension, "halfspace normal")
    if all(c == 0 for c in vec):
        raise InputError("halfspace normal must be nonzero")
    return Halfspace(vec, parse_rational(offset))


def halfspaces_from_list(data, dimension: int) -> tuple:
    if not isinstance(data, (list, tuple)):
        raise InputError("expected a list of halfspaces")
    return tuple(_halfspace_from_dict(h, dimension) for h in data)


def _pieces_from_list(data, dimension: int) -> MaxAffine:
    if not isinstance(data, (list, tuple)) or not data:
        raise InputError("each convex part needs a nonempty list of pieces")
    pieces = []
    for piece in data:
        if not isinstance(piece, dict):
            raise InputError("each piece must be an object with gradient and offset")
        try:
            gradient = piece["gradient"]
            offset = piece["offset"]
        except KeyError as exc:
            raise InputError(f"piece is missing {exc.args[0]!r}") from exc
        pieces.append(
            (
                parse_rational_vector(gradient, dimension, "piece gradient"),
                parse_rational(offset),
            )
        )
    return MaxAffine(tuple(pieces))


def _dc_from_dict(data, dimension: int) -> DCFunction:
    if not isinstance(data, dict):
        raise InputError("each d.c. function must be an object with plus and minus")
    try:
        plus = data["plus"]
        minus = data["minus"]
    except KeyError as exc:
        raise InputError(f"d.c. function is missing {exc.args[0]!r}") from exc
    return DCFunction(_pieces_from_list(plus, dimension), _pieces_from_list(minus, dimension))


@dataclass(frozen=True)
class Scene:
    """A parsed scene: the polytope union plus optional d.c. functions."""

    dimension: int
    union: PolyUnion
    dc_functions: tuple = ()
    metadata: dict = field(default_factory=dict)


def scene_from_dict(data, cap: Optional[int] = None) -> Scene:
    """Validate and parse one scene object.

    Structural issues (missing keys, float rationals, dimension clashes,
    zero normals, empty polytope list) raise InputError. Unbounded parts
    and cap violations propagate from PolyUnion as GeometryError.
    """
    if not isinstance(data, dict):
        raise InputError("a scene must be a JSON object")
    dimension = data.get("dimension")
    if isinstance(dimension, bool) or not isinstance(dimension, int) or dimension < 1:
        raise InputError("scene dimension must be an integer >= 1")
    polytopes = data.get("polytopes")
    if not isinstance(polytopes, list) or not polytopes:
        raise InputError("a scene needs a nonempty list of polytopes")
    parts = []
    for entry in polytopes:
        if not isinstance(entry, dict) or "halfspaces" not in entry:
            raise InputError("each polytope must be an object with a halfspaces list")
        parts.append(
            ConvexPolytope(dimension, halfspaces_from_list(entry["halfspaces"], dimension))
        )
    union = PolyUnion(parts, cap=cap)
    raw_dc = data.get("dc_functions", [])
    if not isinstance(raw_dc, list):
        raise InputError("dc_functions must be a list")
    dc_functions = tuple(_dc_from_dict(f, dimension) for f in raw_dc)
    metadata = data.get("metadata", {})
    if not isinstance(metadata, dict):
        raise InputError("metadata must be an object")
    return Scene(dimension, union, dc_functions, metadata)


def _halfspace_to_dict(h: Halfspace) -> dict:
    return {
        "normal": [format_q(c) for c in h.normal],
        "offset": format_q(h.offset),
    }


def _max_affine_to_list(m: MaxAffine) -> list:
    return [
        {"gradient": [format_q(c) for c in g], "offset": format_q(b)}
        for g, b in m.pieces
    ]


def scene_to_dict(scene: Scene) -> dict:
    """The lossless JSON form; scene_from_dict inverts it exactly."""
    return {
        "dimension": scene.dimension,
        "polytopes": [
            {"halfspaces": [_halfspace_to_dict(h) for h in part.halfspaces]}
            for part in scene.union.parts
        ],
        "dc_functions": [
            {
                "plus": _max_affine_to_list(f.plus),
                "minus": _max_affine_to_list(f.minus),
            }
            for f in scene.dc_functions
        ],
        "metadata": scene.metadata,
    }


def read_json(path) -> dict:
    """Load a JSON document from disk; any failure is an InputError."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read scene file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"scene file {path} is not valid JSON: {exc}") from exc


def load_scene(path, cap: Optional[int] = None) -> Scene:
    return scene_from_dict(read_json(path), cap=cap)
