"""Built-in geometries: the unit-square parametrizations, NURBS disks and a
non-star-shaped curved-ray domain.

The published control tables list the radial direction from the boundary to
the center; :func:`from_boundary_to_center` converts them to the internal
center-to-boundary ordering.
"""
from __future__ import annotations

import numpy as np

from .errors import StructureError
from .geometry import GeometryMap, build_sb_map, refine, set_interior_points
from .splines import CurveGeometry, KnotVector

SQUARE_CIRC_KNOTS = [0, 0, 0, 0.25, 0.25, 0.5, 0.5, 0.75, 0.75, 1, 1, 1]
SQUARE_BOUNDARY = [
    (0, 0), (0.5, 0), (1, 0), (1, 0.5), (1, 1), (0.5, 1), (0, 1), (0, 0.5), (0, 0),
]

# Center-scaled square, rows j = 1..3 from boundary to center, columns i = 1..9.
TABLE_CENTER_SCALED = [
    [(0, 0), (0.5, 0), (1, 0), (1, 0.5), (1, 1), (0.5, 1), (0, 1), (0, 0.5), (0, 0)],
    [(0.25, 0.25), (0.5, 0.25), (0.75, 0.25), (0.75, 0.5), (0.75, 0.75), (0.5, 0.75),
     (0.25, 0.75), (0.25, 0.5), (0.25, 0.25)],
    [(0.5, 0.5)] * 9,
]

SMOOTH_CIRC_KNOTS = [0, 0, 0, 0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 1, 1, 1]
TABLE_INTERNALLY_SMOOTH = [
    [(0, 0), (0, 0), (1, 0), (1, 0), (1, 1), (1, 1), (0, 1), (0, 1), (0, 0), (0, 0)],
    [(0.25, 0.25), (0.375, 0.125), (0.625, 0.125), (0.875, 0.375), (0.875, 0.625),
     (0.625, 0.875), (0.375, 0.875), (0.125, 0.625), (0.125, 0.375), (0.25, 0.25)],
    [(0.5, 0.5)] * 10,
]

OFF_CENTER_DEFAULT = (0.25, 0.25)

SQUARE_TAGS = ("rectangular", "center-scaled", "off-center-scaled", "internally-smooth")
BUILTIN_TAGS = SQUARE_TAGS + ("disk", "off-center-disk", "curved-ray")


def from_boundary_to_center(rows) -> np.ndarray:
    """Reverse the radial ordering of a boundary-first table; returns ``(m, n, 2)``."""
    return np.asarray(rows, dtype=float)[::-1].copy()


def square_boundary() -> CurveGeometry:
    return CurveGeometry(KnotVector(SQUARE_CIRC_KNOTS, 2), SQUARE_BOUNDARY)


def rectangular_square(degree: int = 2) -> GeometryMap:
    """Identity map of the unit square with a single Bezier element."""
    kv = KnotVector(np.r_[np.zeros(degree + 1), np.ones(degree + 1)], degree)
    g = kv.greville()
    net = np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1)
    return GeometryMap(kv, kv, net)


def center_scaled_square() -> GeometryMap:
    """Tabulated 3 x 9 net, converted to center-to-boundary ordering."""
    net = from_boundary_to_center(TABLE_CENTER_SCALED)
    return GeometryMap(
        KnotVector([0, 0, 0, 1, 1, 1], 2),
        KnotVector(SQUARE_CIRC_KNOTS, 2),
        net,
        is_scaled_boundary=True,
        has_straight_rays=True,
        scaling_center=(0.5, 0.5),
    )


def off_center_square(center=OFF_CENTER_DEFAULT) -> GeometryMap:
    """Square boundary scaled from an off-center point (the center is a free choice)."""
    return refine(build_sb_map(square_boundary(), center), radial_degree=2)


def internally_smooth_square() -> GeometryMap:
    """Tabulated 3 x 10 net: curved interior ring, only the seam ray is C0."""
    net = from_boundary_to_center(TABLE_INTERNALLY_SMOOTH)
    return GeometryMap(
        KnotVector([0, 0, 0, 1, 1, 1], 2),
        KnotVector(SMOOTH_CIRC_KNOTS, 2),
        net,
        is_scaled_boundary=True,
        has_straight_rays=False,
        scaling_center=(0.5, 0.5),
    )


def nurbs_circle(radius: float = 1.0, center=(0.0, 0.0)) -> CurveGeometry:
    """Standard 9-point quadratic rational circle, counterclockwise from ``(r, 0)``."""
    s = np.sqrt(0.5)
    pts = np.array([(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0)], dtype=float)
    w = np.array([1, s, 1, s, 1, s, 1, s, 1], dtype=float)
    return CurveGeometry(KnotVector(SQUARE_CIRC_KNOTS, 2), radius * pts + np.asarray(center, dtype=float), w)


def quarter_arc(radius: float = 1.0) -> CurveGeometry:
    """Quadratic NURBS arc from ``(r, 0)`` to ``(0, r)``."""
    pts = radius * np.array([(1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])
    return CurveGeometry(KnotVector([0, 0, 0, 1, 1, 1], 2), pts, [1.0, np.sqrt(0.5), 1.0])


def disk(radius: float = 1.0, center=(0.0, 0.0)) -> GeometryMap:
    """Scaled-boundary unit disk with a quadratic radial direction."""
    return refine(build_sb_map(nurbs_circle(radius), center), radial_degree=2)


def curved_ray_domain(twist: float = 1.0, n_spans: int = 32, radial_spans: int = 4) -> GeometryMap:
    """Spiral-armed domain that is not star-shaped from its scaling center.

    A star-shaped, four-lobed domain is parametrized with straight rays and
    then every control point is turned about the origin by an angle growing
    with ``|d|^2`` (a swirl). Boundary and interior points move together, so
    the result is a valid tensor-product map whose rays are curved; the swirl
    makes the straight-ray construction from the same center fold over.
    """
    kv = KnotVector.uniform(n_spans, 2)
    t = kv.greville()
    theta = 2 * np.pi * t
    r = 1.0 + 0.3 * np.cos(4 * theta)
    pts = np.stack([r * np.cos(theta), r * np.sin(theta)], axis=-1)
    pts[-1] = pts[0]
    base = build_sb_map(CurveGeometry(kv, pts), (0.0, 0.0))
    base = refine(base, radial_knots=np.arange(1, radial_spans) / radial_spans, radial_degree=2)

    net = base.control_net
    ang = twist * np.sum(net**2, axis=-1)
    c, s = np.cos(ang), np.sin(ang)
    swirled = np.stack([c * net[..., 0] - s * net[..., 1], s * net[..., 0] + c * net[..., 1]], axis=-1)
    boundary = CurveGeometry(kv, swirled[-1])
    sb = build_sb_map(boundary, (0.0, 0.0), orient=False)
    sb = refine(sb, radial_knots=np.arange(1, radial_spans) / radial_spans, radial_degree=2)
    m, n = sb.m, sb.n
    edits = [(i, j, swirled[i, j]) for i in range(1, m - 1) for j in range(n)]
    return set_interior_points(sb, edits)


def builtin(tag: str, **options) -> GeometryMap:
    """Geometry for a built-in tag (see ``BUILTIN_TAGS``)."""
    if tag == "rectangular":
        return rectangular_square(options.get("degree", 2))
    if tag == "center-scaled":
        return center_scaled_square()
    if tag == "off-center-scaled":
        return off_center_square(options.get("center") or OFF_CENTER_DEFAULT)
    if tag == "internally-smooth":
        return internally_smooth_square()
    if tag == "disk":
        return disk(center=options.get("center") or (0.0, 0.0))
    if tag == "off-center-disk":
        center = options.get("center") or (0.3, 0.2)
        return refine(build_sb_map(nurbs_circle(), center), radial_degree=2)
    if tag == "curved-ray":
        return curved_ray_domain()
    raise StructureError(f"unknown geometry tag {tag!r}; choose from {', '.join(BUILTIN_TAGS)}")
