"""Scaled-boundary geometry maps on the unit square.

A :class:`GeometryMap` is a tensor-product (possibly rational) spline map
``F(xi, eta)``. The first parameter ``xi`` runs from the scaling center
(``xi = 0``) to the boundary (``xi = 1``); the second parameter ``eta`` runs
along the boundary curve. Maps that are not scaled-boundary use the same
container with the two directions simply labelled radial/circumferential.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ConstraintError, StructureError
from .splines import (
    CurveGeometry,
    KnotVector,
    basis_table,
    elevate_degree,
    eval_curve,
    insert_knot,
)

RAY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class GeometryMap:
    radial_kv: KnotVector
    circ_kv: KnotVector
    control_net: np.ndarray
    weights: np.ndarray | None = None
    is_scaled_boundary: bool = False
    has_straight_rays: bool = False
    scaling_center: np.ndarray | None = None

    def __post_init__(self) -> None:
        net = np.array(self.control_net, dtype=float)
        m, n = self.radial_kv.n, self.circ_kv.n
        if net.shape != (m, n, 2):
            raise StructureError(f"control net shape {net.shape} does not match basis counts ({m}, {n}, 2)")
        if self.radial_kv.degree < 1 or self.circ_kv.degree < 1:
            raise StructureError("geometry maps need degree >= 1 in both directions")
        w = None
        if self.weights is not None:
            w = np.array(self.weights, dtype=float)
            if w.shape != (m, n):
                raise StructureError(f"weights shape {w.shape} does not match ({m}, {n})")
            if np.any(w <= 0):
                raise StructureError("weights must be positive")
            w.setflags(write=False)
        center = None
        if self.scaling_center is not None:
            center = np.array(self.scaling_center, dtype=float).reshape(2)
            center.setflags(write=False)
        if self.is_scaled_boundary:
            if center is None:
                raise StructureError("scaled-boundary map needs a scaling center")
            scale = max(1.0, float(np.abs(net).max()))
            if np.abs(net[0] - center).max() > RAY_TOL * scale:
                raise StructureError("first radial row must collapse to the scaling center")
        if self.has_straight_rays:
            if not self.is_scaled_boundary:
                raise StructureError("straight rays are only defined for scaled-boundary maps")
            if not _rays_are_linear(self.radial_kv, net, w, center):
                raise StructureError("interior control points are not on the linear rays x0 + xi (c_j - x0)")
        net.setflags(write=False)
        object.__setattr__(self, "control_net", net)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "scaling_center", center)

    # -- basic properties -------------------------------------------------
    @property
    def m(self) -> int:
        return self.radial_kv.n

    @property
    def n(self) -> int:
        return self.circ_kv.n

    @property
    def degrees(self) -> tuple[int, int]:
        return self.radial_kv.degree, self.circ_kv.degree

    @property
    def is_rational(self) -> bool:
        return self.weights is not None

    @property
    def weight_array(self) -> np.ndarray:
        return np.ones((self.m, self.n)) if self.weights is None else self.weights

    @property
    def is_closed(self) -> bool:
        """True when the ``eta = 0`` and ``eta = 1`` edges coincide."""
        w = self.weight_array
        return bool(
            np.array_equal(self.control_net[:, 0], self.control_net[:, -1])
            and np.array_equal(w[:, 0], w[:, -1])
        )

    def boundary_curve(self) -> CurveGeometry:
        w = None if self.weights is None else self.weights[-1]
        return CurveGeometry(self.circ_kv, self.control_net[-1], w)

    def replace(self, **changes) -> "GeometryMap":
        return dataclasses.replace(self, **changes)

    # -- evaluation ---------------------------------------------------------
    def local_basis(self, xi, eta) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Rational tensor basis at scattered points.

        Returns ``R, dR/dxi, dR/deta`` of shape ``(N, p+1, q+1)`` and the first
        global radial/circumferential indices ``(N,)`` of the local blocks.
        """
        xi = np.atleast_1d(np.asarray(xi, dtype=float)).ravel()
        eta = np.atleast_1d(np.asarray(eta, dtype=float)).ravel()
        xi, eta = np.broadcast_arrays(xi, eta)
        p, q = self.degrees
        sr, Dr = basis_table(self.radial_kv, xi, 1)
        sc, Dc = basis_table(self.circ_kv, eta, 1)
        i0 = sr - p
        j0 = sc - q
        ii = i0[:, None, None] + np.arange(p + 1)[None, :, None]
        jj = j0[:, None, None] + np.arange(q + 1)[None, None, :]
        w = self.weight_array[ii, jj]
        B = Dr[:, 0, :, None] * Dc[:, 0, None, :] * w
        Bx = Dr[:, 1, :, None] * Dc[:, 0, None, :] * w
        By = Dr[:, 0, :, None] * Dc[:, 1, None, :] * w
        W = B.sum(axis=(1, 2))[:, None, None]
        Wx = Bx.sum(axis=(1, 2))[:, None, None]
        Wy = By.sum(axis=(1, 2))[:, None, None]
        R = B / W
        return R, (Bx - R * Wx) / W, (By - R * Wy) / W, i0, j0

    def combine(self, coeffs: np.ndarray, xi, eta, derivatives: bool = False):
        """Evaluate ``sum R_ij(xi, eta) coeffs[i, j]`` (coeffs shape ``(m, n, ...)``)."""
        R, Rx, Ry, i0, j0 = self.local_basis(xi, eta)
        p, q = self.degrees
        ii = i0[:, None, None] + np.arange(p + 1)[None, :, None]
        jj = j0[:, None, None] + np.arange(q + 1)[None, None, :]
        c = np.asarray(coeffs)[ii, jj]
        val = np.einsum("nab,nab...->n...", R, c)
        if not derivatives:
            return val
        return val, np.einsum("nab,nab...->n...", Rx, c), np.einsum("nab,nab...->n...", Ry, c)

    def evaluate(self, xi, eta) -> np.ndarray:
        """Physical points, shape ``(N, 2)``."""
        return self.combine(self.control_net, xi, eta)

    def jacobian(self, xi, eta) -> tuple[np.ndarray, np.ndarray]:
        """Points ``(N, 2)`` and Jacobians ``(N, 2, 2)`` with columns ``dF/dxi, dF/deta``."""
        x, dx, dy = self.combine(self.control_net, xi, eta, derivatives=True)
        return x, np.stack([dx, dy], axis=-1)

    def __call__(self, xi, eta) -> np.ndarray:
        return self.evaluate(xi, eta)


def _rays_are_linear(radial_kv: KnotVector, net: np.ndarray, w: np.ndarray | None, center: np.ndarray) -> bool:
    """Interior rows equal ``x0 + g_i (c_j - x0)`` with radial Greville abscissae ``g_i``.

    This is exactly the representation of ``x0 + xi (gamma(eta) - x0)`` in the
    tensor basis; together with weights that are constant along each ray it
    gives the multiplicative Jacobian ``det DF = xi J(eta)``.
    """
    g = radial_kv.greville()
    expected = center[None, None, :] + g[:, None, None] * (net[-1][None, :, :] - center[None, None, :])
    scale = max(1.0, float(np.abs(net).max()))
    if np.abs(net - expected).max() > RAY_TOL * scale:
        return False
    if w is not None and np.abs(w - w[-1][None, :]).max() > RAY_TOL * float(w.max()):
        return False
    return True


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------

def signed_area(points: np.ndarray) -> float:
    x, y = points[:, 0], points[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _orient(curve: CurveGeometry, center: np.ndarray, samples: int = 512) -> CurveGeometry:
    pts = eval_curve(curve, np.linspace(0.0, 1.0, samples))[:, 0]
    poly = pts if curve.closed else np.vstack([center, pts])
    return curve.reversed() if signed_area(poly) < 0 else curve


def build_sb_map(boundary: CurveGeometry, center: Sequence[float], orient: bool = True) -> GeometryMap:
    """Linear scaled-boundary map ``F = (1 - xi) x0 + xi gamma(eta)``.

    Two radial rows: the collapsed center row and the boundary control
    points. A clockwise boundary is reversed first so that ``J(eta) > 0``.
    Rational boundaries keep their weights on every row.
    """
    x0 = np.asarray(center, dtype=float).reshape(2)
    curve = _orient(boundary, x0) if orient else boundary
    n = curve.knot_vector.n
    net = np.empty((2, n, 2))
    net[0] = x0
    net[1] = curve.control_points
    weights = None if curve.weights is None else np.tile(curve.weights, (2, 1))
    return GeometryMap(
        KnotVector([0.0, 0.0, 1.0, 1.0], 1),
        curve.knot_vector,
        net,
        weights,
        is_scaled_boundary=True,
        has_straight_rays=True,
        scaling_center=x0,
    )


def build_wedge(segment: CurveGeometry, center: Sequence[float], orient: bool = True) -> GeometryMap:
    """Triangle-like wedge between the center and an open boundary segment."""
    if segment.closed or np.array_equal(segment.control_points[0], segment.control_points[-1]):
        raise StructureError("a wedge needs an open boundary segment")
    return build_sb_map(segment, center, orient=orient)


def _refine_axis(kv: KnotVector, hom: np.ndarray, axis: int, knots: Iterable[float], degree: int | None):
    net = np.moveaxis(hom, axis, 0)
    if degree is not None:
        if degree < kv.degree:
            raise StructureError("degree reduction is not supported")
        while kv.degree < degree:
            kv, net = elevate_degree(kv, net)
    for t in knots:
        kv, net = insert_knot(kv, net, float(t))
    return kv, np.moveaxis(net, 0, axis)


def refine(
    gmap: GeometryMap,
    radial_knots: Iterable[float] = (),
    circ_knots: Iterable[float] = (),
    radial_degree: int | None = None,
    circ_degree: int | None = None,
) -> GeometryMap:
    """Degree elevation followed by knot insertion in either direction.

    The map is unchanged pointwise. Structure flags carry over; the collapsed
    center row is reset to the exact center afterwards.
    """
    w = gmap.weight_array
    hom = np.concatenate([gmap.control_net * w[..., None], w[..., None]], axis=-1)
    rkv, hom = _refine_axis(gmap.radial_kv, hom, 0, radial_knots, radial_degree)
    ckv, hom = _refine_axis(gmap.circ_kv, hom, 1, circ_knots, circ_degree)
    wn = hom[..., 2]
    net = hom[..., :2] / wn[..., None]
    if gmap.weights is None:
        wn = None
        net = hom[..., :2]
    if gmap.is_scaled_boundary:
        net[0] = gmap.scaling_center
    if gmap.is_closed:
        # keep the seam bit-identical so periodic identification stays exact
        net[:, -1] = net[:, 0]
        if wn is not None:
            wn[:, -1] = wn[:, 0]
    return GeometryMap(
        rkv,
        ckv,
        net,
        wn,
        is_scaled_boundary=gmap.is_scaled_boundary,
        has_straight_rays=gmap.has_straight_rays,
        scaling_center=gmap.scaling_center,
    )


def refine_radial(gmap: GeometryMap, new_knots: Iterable[float] = (), target_degree: int | None = None) -> GeometryMap:
    if not gmap.is_scaled_boundary:
        raise StructureError("radial refinement is defined for scaled-boundary maps")
    return refine(gmap, radial_knots=new_knots, radial_degree=target_degree)


def refine_uniform(gmap: GeometryMap, levels: int = 1) -> GeometryMap:
    """Dyadic h-refinement: insert every span midpoint in both directions."""
    for _ in range(levels):
        gmap = refine(gmap, gmap.radial_kv.midpoints(), gmap.circ_kv.midpoints())
    return gmap


def set_interior_points(gmap: GeometryMap, overrides: Iterable[tuple[int, int, Sequence[float]]]) -> GeometryMap:
    """Move interior control points (curved rays).

    Row 0 (center) and row ``m-1`` (boundary) are locked. On a closed map an
    edit of column 0 or ``n-1`` is mirrored to the other seam column. The
    straight-ray flag is cleared on any edit.
    """
    net = np.array(gmap.control_net)
    m, n = gmap.m, gmap.n
    closed = gmap.is_closed
    for i, j, point in overrides:
        if not 0 < i < m - 1:
            raise ConstraintError(f"row {i} is locked (only rows 1..{m - 2} may be edited)")
        if not 0 <= j < n:
            raise ConstraintError(f"column {j} outside 0..{n - 1}")
        net[i, j] = np.asarray(point, dtype=float)
        if closed and j in (0, n - 1):
            net[i, n - 1 - j] = net[i, j]
    return gmap.replace(control_net=net, has_straight_rays=False)


# ---------------------------------------------------------------------------
# Metric data
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MetricSample:
    point: np.ndarray
    jacobian: np.ndarray
    det: float
    metric: np.ndarray
    b1: np.ndarray | None = None
    b2: np.ndarray | None = None
    J: float | None = None


def ray_factors(gmap: GeometryMap, eta) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``b1(eta)``, ``b2(eta)`` (each ``(N, 2)``) and ``J(eta)`` ``(N,)`` of a straight-ray map.

    With ``gamma`` the boundary curve and ``x0`` the center:
    ``b1 = (gamma_2', -gamma_1')``, ``b2 = (x0_2 - gamma_2, gamma_1 - x0_1)`` and
    ``J = (gamma - x0) x gamma'`` so that ``det DF = xi J``.
    """
    if not (gmap.is_scaled_boundary and gmap.has_straight_rays):
        raise StructureError("b1, b2 and J need a scaled-boundary map with straight rays")
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    g = eval_curve(gmap.boundary_curve(), eta, 1)
    gam, dgam = g[:, 0], g[:, 1]
    x0 = gmap.scaling_center
    b1 = np.stack([dgam[:, 1], -dgam[:, 0]], axis=-1)
    b2 = np.stack([x0[1] - gam[:, 1], gam[:, 0] - x0[0]], axis=-1)
    J = (gam[:, 0] - x0[0]) * dgam[:, 1] - dgam[:, 0] * (gam[:, 1] - x0[1])
    return b1, b2, J


def metric(gmap: GeometryMap, xi: float, eta: float, with_rays: bool | None = None) -> MetricSample:
    """Jacobian, determinant and metric tensor at one parametric point.

    ``b1``, ``b2`` and ``J`` are filled for straight-ray scaled-boundary maps;
    asking for them (``with_rays=True``) on any other map raises.
    """
    x, DF = gmap.jacobian([xi], [eta])
    x, DF = x[0], DF[0]
    det = float(DF[0, 0] * DF[1, 1] - DF[0, 1] * DF[1, 0])
    g = DF.T @ DF
    straight = gmap.is_scaled_boundary and gmap.has_straight_rays
    if with_rays and not straight:
        raise StructureError("b1, b2 and J need a scaled-boundary map with straight rays")
    if straight and with_rays is not False:
        b1, b2, J = ray_factors(gmap, [eta])
        return MetricSample(x, DF, det, g, b1[0], b2[0], float(J[0]))
    return MetricSample(x, DF, det, g)


# ---------------------------------------------------------------------------
# Regularity diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RegularityReport:
    min_J: float
    sign_changes: int
    c0_rays: list[float]
    injective_sampling_ok: bool
    grid: int

    @property
    def ok(self) -> bool:
        return self.min_J > 0 and self.sign_changes == 0 and self.injective_sampling_ok

    def as_dict(self) -> dict:
        return {
            "min_J": self.min_J,
            "sign_changes": self.sign_changes,
            "c0_rays": list(self.c0_rays),
            "injective_sampling_ok": self.injective_sampling_ok,
            "grid": self.grid,
            "ok": self.ok,
        }


def jacobian_samples(gmap: GeometryMap, grid: int = 64) -> np.ndarray:
    """``det DF / xi`` for scaled-boundary maps (``det DF`` otherwise) on a ``grid x grid`` sample.

    Rows follow ``xi`` (cell midpoints, so ``xi = 0`` is never sampled), columns
    follow ``eta`` including both ends.
    """
    xi = (np.arange(grid) + 0.5) / grid
    eta = np.linspace(0.0, 1.0, grid)
    X, E = np.meshgrid(xi, eta, indexing="ij")
    _, DF = gmap.jacobian(X.ravel(), E.ravel())
    det = (DF[:, 0, 0] * DF[:, 1, 1] - DF[:, 0, 1] * DF[:, 1, 0]).reshape(grid, grid)
    if gmap.is_scaled_boundary:
        det = det / X
    return det


def _count_sign_changes(values: np.ndarray) -> int:
    pos = values > 0
    return int(np.count_nonzero(pos[..., 1:] != pos[..., :-1]))


def _segments_intersect(P: np.ndarray, closed: bool) -> bool:
    """Brute-force self-intersection test of a sampled polyline."""
    A = P[:-1]
    B = P[1:]
    k = A.shape[0]

    def cross(o, a, b):
        return (a[..., 0] - o[..., 0]) * (b[..., 1] - o[..., 1]) - (a[..., 1] - o[..., 1]) * (b[..., 0] - o[..., 0])

    a1, b1 = A[:, None], B[:, None]
    a2, b2 = A[None, :], B[None, :]
    d1 = cross(a2, b2, a1)
    d2 = cross(a2, b2, b1)
    d3 = cross(a1, b1, a2)
    d4 = cross(a1, b1, b2)
    hit = (d1 * d2 < 0) & (d3 * d4 < 0)
    idx = np.arange(k)
    near = np.abs(idx[:, None] - idx[None, :]) <= 1
    if closed:
        near |= np.abs(idx[:, None] - idx[None, :]) == k - 1
    return bool(np.any(hit & ~near))


def validate_regularity(gmap: GeometryMap, grid: int = 64) -> RegularityReport:
    """Sampling-based regularity report.

    ``min_J`` is the minimum of ``J(eta)`` (straight rays) or ``det DF / xi``
    over the sample grid; ``c0_rays`` are the ``eta`` values of circumferential
    knots with multiplicity >= q, plus the seam of a closed map.
    """
    if gmap.is_scaled_boundary and gmap.has_straight_rays:
        _, _, J = ray_factors(gmap, np.linspace(0.0, 1.0, grid))
        vals = J[None, :]
    else:
        vals = jacobian_samples(gmap, grid)
    min_J = float(vals.min())
    changes = _count_sign_changes(vals)

    q = gmap.circ_kv.degree
    values, counts = gmap.circ_kv.interior_knots()
    rays = [float(v) for v, c in zip(values, counts) if c >= q]
    if gmap.is_closed:
        rays = [0.0] + rays

    bnd = eval_curve(gmap.boundary_curve(), np.linspace(0.0, 1.0, 4 * grid + 1))[:, 0]
    closed = gmap.is_closed
    injective = min_J > 0 and not _segments_intersect(bnd, closed)
    return RegularityReport(min_J, changes, rays, injective, grid)


def is_star_shaped_from(boundary: CurveGeometry, center: Sequence[float], grid: int = 64) -> bool:
    """Sampling check: the straight-ray map from ``center`` has ``J > 0`` everywhere."""
    rep = validate_regularity(build_sb_map(boundary, center, orient=True), grid)
    return rep.min_J > 0 and rep.sign_changes == 0
