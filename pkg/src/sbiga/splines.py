"""Univariate B-spline and NURBS machinery.

Knot vectors are open and normalized to [0, 1]. Control "nets" passed to the
refinement routines may carry any trailing shape: ``net[i]`` is the
coefficient attached to basis function ``i``. Rational data is refined in
homogeneous form by the caller (see :func:`to_homogeneous`).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels
from .errors import (
    DegenerateRequestError,
    DomainError,
    KnotVectorError,
    RefinementError,
)

ArrayLike = Sequence[float] | np.ndarray


@dataclass(frozen=True, eq=False)
class KnotVector:
    """Open, non-decreasing knot vector on [0, 1] together with its degree."""

    knots: np.ndarray
    degree: int

    def __post_init__(self) -> None:
        knots = np.array(self.knots, dtype=float).ravel()
        p = int(self.degree)
        if p < 0:
            raise KnotVectorError(f"degree must be non-negative, got {p}")
        if knots.size < 2 * p + 2:
            raise KnotVectorError(f"need at least {2 * p + 2} knots for degree {p}, got {knots.size}")
        if np.any(np.diff(knots) < 0):
            k = int(np.argmax(np.diff(knots) < 0))
            raise KnotVectorError(f"knots must be non-decreasing (knots[{k}] > knots[{k + 1}])")
        if knots[0] != 0.0 or knots[-1] != 1.0:
            raise KnotVectorError("knot vector must start at 0 and end at 1")
        if _mult(knots, 0.0) != p + 1 or _mult(knots, 1.0) != p + 1:
            raise KnotVectorError(f"end knots must be repeated exactly {p + 1} times")
        values, counts = np.unique(knots, return_counts=True)
        if np.any(counts > p + 1):
            bad = values[np.argmax(counts > p + 1)]
            raise KnotVectorError(f"knot {bad} exceeds multiplicity {p + 1}")
        knots.setflags(write=False)
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "degree", p)

    @classmethod
    def from_knots(cls, knots: ArrayLike, degree: int, normalize: bool = True) -> "KnotVector":
        """Build from arbitrary-range knots, affinely rescaling to [0, 1]."""
        knots = np.asarray(knots, dtype=float)
        if normalize:
            a, b = knots[0], knots[-1]
            if not b > a:
                raise KnotVectorError("knot vector has an empty parameter range")
            knots = (knots - a) / (b - a)
            knots[0 : degree + 1] = 0.0
            knots[-(degree + 1) :] = 1.0
        return cls(knots, degree)

    @classmethod
    def uniform(cls, n_spans: int, degree: int, continuity: int | None = None) -> "KnotVector":
        """Uniform open knot vector; interior knots get multiplicity ``degree - continuity``."""
        if continuity is None:
            continuity = degree - 1
        mult = degree - continuity
        interior = np.repeat(np.arange(1, n_spans) / n_spans, mult)
        return cls(np.r_[np.zeros(degree + 1), interior, np.ones(degree + 1)], degree)

    def __repr__(self) -> str:
        return f"KnotVector(degree={self.degree}, knots={self.knots.tolist()})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, KnotVector):
            return NotImplemented
        return self.degree == other.degree and np.array_equal(self.knots, other.knots)

    @property
    def n(self) -> int:
        """Number of basis functions."""
        return self.knots.size - self.degree - 1

    @property
    def breaks(self) -> np.ndarray:
        return np.unique(self.knots)

    @property
    def spans(self) -> np.ndarray:
        """Indices ``i`` of the non-empty spans ``[knots[i], knots[i+1])``."""
        k = self.knots
        idx = np.nonzero(k[1:] > k[:-1])[0]
        return idx

    def multiplicity(self, t: float) -> int:
        return _mult(self.knots, t)

    def interior_knots(self) -> tuple[np.ndarray, np.ndarray]:
        """Distinct interior knot values and their multiplicities."""
        values, counts = np.unique(self.knots, return_counts=True)
        return values[1:-1], counts[1:-1]

    def greville(self) -> np.ndarray:
        p = self.degree
        if p == 0:
            return 0.5 * (self.knots[:-1] + self.knots[1:])
        k = self.knots
        return np.array([k[i + 1 : i + p + 1].mean() for i in range(self.n)])

    def midpoints(self) -> np.ndarray:
        """Midpoints of the non-empty spans (uniform h-refinement candidates)."""
        b = self.breaks
        return 0.5 * (b[:-1] + b[1:])

    def reversed(self) -> "KnotVector":
        return KnotVector(1.0 - self.knots[::-1], self.degree)


def _mult(knots: np.ndarray, t: float) -> int:
    return int(np.count_nonzero(knots == t))


@dataclass(frozen=True, eq=False)
class BasisEval:
    """Nonzero basis functions at one parameter.

    ``values[k]`` belongs to global basis function ``span - degree + k``;
    ``derivatives[d - 1]`` holds the d-th derivatives.
    """

    span: int
    values: np.ndarray
    derivatives: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))

    @property
    def first(self) -> int:
        return self.span - (self.values.size - 1)


def _check_param(t: np.ndarray) -> None:
    if np.any(~np.isfinite(t)) or np.any(t < 0.0) or np.any(t > 1.0):
        bad = np.asarray(t).ravel()[(~np.isfinite(np.ravel(t))) | (np.ravel(t) < 0) | (np.ravel(t) > 1)][0]
        raise DomainError(f"parameter {bad!r} outside [0, 1]")


def find_span(kv: KnotVector, t: float) -> int:
    """Index ``i`` with ``knots[i] <= t < knots[i+1]``; ``t = 1`` maps to the last non-empty span."""
    return int(find_spans(kv, np.array([t], dtype=float))[0])


def find_spans(kv: KnotVector, t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    _check_param(t)
    idx = np.searchsorted(kv.knots, t, side="right") - 1
    return np.minimum(idx, kv.n - 1).astype(np.int64)


def basis_table(kv: KnotVector, t: np.ndarray, nderiv: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized evaluation: spans ``(N,)`` and values ``(N, nderiv + 1, p + 1)``."""
    if nderiv > kv.degree:
        raise DegenerateRequestError(f"{nderiv} derivatives requested for degree {kv.degree}")
    t = np.atleast_1d(np.asarray(t, dtype=float))
    spans = find_spans(kv, t)
    return spans, _kernels.ders_basis(kv.knots, kv.degree, spans, t, nderiv)


def eval_basis(kv: KnotVector, t: float, nderiv: int = 0) -> BasisEval:
    spans, ders = basis_table(kv, np.array([t]), nderiv)
    return BasisEval(int(spans[0]), ders[0, 0].copy(), ders[0, 1:].copy())


def basis_matrix(kv: KnotVector, t: ArrayLike, nderiv: int = 0) -> np.ndarray:
    """Dense ``(len(t), n)`` matrix of the ``nderiv``-th derivatives of all basis functions."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    spans, ders = basis_table(kv, t, nderiv)
    out = np.zeros((t.size, kv.n))
    cols = spans[:, None] - kv.degree + np.arange(kv.degree + 1)[None, :]
    np.put_along_axis(out, cols, ders[:, nderiv, :], axis=1)
    return out


def rational_basis_matrix(kv: KnotVector, weights: np.ndarray, t: ArrayLike, nderiv: int = 0) -> np.ndarray:
    """Dense NURBS basis ``R_j = N_j w_j / sum_i N_i w_i`` and derivatives, shape ``(nderiv+1, len(t), n)``."""
    if nderiv > 2:
        raise DegenerateRequestError("rational derivatives are supported up to order 2")
    w = np.asarray(weights, dtype=float)
    Ns = [basis_matrix(kv, t, d) * w[None, :] if d <= kv.degree else np.zeros((np.size(t), kv.n)) for d in range(nderiv + 1)]
    W = [A.sum(axis=1, keepdims=True) for A in Ns]
    R0 = Ns[0] / W[0]
    out = [R0]
    if nderiv >= 1:
        R1 = (Ns[1] - R0 * W[1]) / W[0]
        out.append(R1)
    if nderiv >= 2:
        out.append((Ns[2] - 2.0 * R1 * W[1] - R0 * W[2]) / W[0])
    return np.stack(out)


# ---------------------------------------------------------------------------
# Curves
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CurveGeometry:
    """Planar (optionally rational) spline curve on [0, 1]."""

    knot_vector: KnotVector
    control_points: np.ndarray
    weights: np.ndarray | None = None
    closed: bool | None = None

    def __post_init__(self) -> None:
        pts = np.array(self.control_points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError(f"control points must have shape (n, 2), got {pts.shape}")
        if pts.shape[0] != self.knot_vector.n:
            raise ValueError(
                f"{pts.shape[0]} control points for {self.knot_vector.n} basis functions"
            )
        w = None
        if self.weights is not None:
            w = np.array(self.weights, dtype=float).ravel()
            if w.shape != (pts.shape[0],):
                raise ValueError("weights must match the number of control points")
            if np.any(w <= 0):
                raise ValueError("weights must be positive")
            w.setflags(write=False)
        ends_match = bool(np.array_equal(pts[0], pts[-1]) and (w is None or w[0] == w[-1]))
        closed = ends_match if self.closed is None else bool(self.closed)
        if closed and not ends_match:
            raise ValueError("closed curve needs coincident first/last control points (and weights)")
        pts.setflags(write=False)
        object.__setattr__(self, "control_points", pts)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "closed", closed)

    @property
    def is_rational(self) -> bool:
        return self.weights is not None

    def reversed(self) -> "CurveGeometry":
        w = None if self.weights is None else self.weights[::-1]
        return CurveGeometry(self.knot_vector.reversed(), self.control_points[::-1], w, self.closed)

    def __call__(self, t, nderiv: int = 0) -> np.ndarray:
        return eval_curve(self, t, nderiv)


def eval_curve(c: CurveGeometry, t, nderiv: int = 0) -> np.ndarray:
    """Point and derivatives of a curve.

    Returns shape ``(nderiv + 1, 2)`` for scalar ``t`` and ``(N, nderiv + 1, 2)``
    for an array of parameters.
    """
    scalar = np.ndim(t) == 0
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    _check_param(ts)
    if c.weights is None:
        if nderiv > c.knot_vector.degree:
            raise DegenerateRequestError(f"{nderiv} derivatives requested for degree {c.knot_vector.degree}")
        ders = np.stack([basis_matrix(c.knot_vector, ts, d) for d in range(nderiv + 1)])
    else:
        ders = rational_basis_matrix(c.knot_vector, c.weights, ts, nderiv)
    out = np.einsum("dnj,jk->ndk", ders, c.control_points)
    return out[0] if scalar else out


def to_homogeneous(points: np.ndarray, weights: np.ndarray | None) -> np.ndarray:
    """Append weights as a last coordinate after scaling points by them."""
    pts = np.asarray(points, dtype=float)
    if weights is None:
        return pts.copy()
    w = np.asarray(weights, dtype=float)[..., None]
    return np.concatenate([pts * w, w], axis=-1)


def from_homogeneous(hom: np.ndarray, rational: bool) -> tuple[np.ndarray, np.ndarray | None]:
    if not rational:
        return hom, None
    w = hom[..., -1]
    return hom[..., :-1] / w[..., None], w


# ---------------------------------------------------------------------------
# Refinement
# ---------------------------------------------------------------------------

def insert_knot(kv: KnotVector, net: np.ndarray, t: float) -> tuple[KnotVector, np.ndarray]:
    """Boehm knot insertion of a single knot ``t``; geometry preserving."""
    p = kv.degree
    net = np.asarray(net, dtype=float)
    if net.shape[0] != kv.n:
        raise ValueError(f"net has {net.shape[0]} entries for {kv.n} basis functions")
    if not 0.0 < t < 1.0:
        raise RefinementError(f"cannot insert knot {t} at or beyond the parameter ends")
    s = kv.multiplicity(t)
    if s + 1 > p:
        raise RefinementError(f"inserting {t} would raise its multiplicity to {s + 1} > degree {p}")
    k = find_span(kv, t)
    u = kv.knots
    new = np.empty((net.shape[0] + 1,) + net.shape[1:])
    new[: k - p + 1] = net[: k - p + 1]
    new[k - s + 1 :] = net[k - s :]
    for i in range(k - p + 1, k - s + 1):
        alpha = (t - u[i]) / (u[i + p] - u[i])
        new[i] = alpha * net[i] + (1.0 - alpha) * net[i - 1]
    knots = np.insert(u, k + 1, t)
    return KnotVector(knots, p), new


def refine_knots(kv: KnotVector, net: np.ndarray, ts: ArrayLike) -> tuple[KnotVector, np.ndarray]:
    """Insert a sequence of knots one after another."""
    for t in np.atleast_1d(np.asarray(ts, dtype=float)):
        kv, net = insert_knot(kv, net, float(t))
    return kv, np.asarray(net, dtype=float)


def insertion_matrix(coarse: KnotVector, fine: KnotVector) -> np.ndarray:
    """Matrix ``T`` with ``fine_coeffs = T @ coarse_coeffs`` for nested knot vectors."""
    if coarse.degree != fine.degree:
        raise ValueError("knot vectors must share the degree")
    extra = _multiset_difference(fine.knots, coarse.knots)
    kv, T = refine_knots(coarse, np.eye(coarse.n), extra)
    if kv != fine:
        raise RefinementError("fine knot vector does not contain the coarse one")
    return T


def _multiset_difference(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    va, ca = np.unique(a, return_counts=True)
    cb = {float(v): int(c) for v, c in zip(*np.unique(b, return_counts=True))}
    out = []
    for v, c in zip(va, ca):
        d = int(c) - cb.get(float(v), 0)
        if d < 0:
            raise RefinementError("knot vectors are not nested")
        out.extend([float(v)] * d)
    return np.array(out)


def elevate_degree(kv: KnotVector, net: np.ndarray) -> tuple[KnotVector, np.ndarray]:
    """Raise the degree by one, keeping the curve (every knot's multiplicity +1).

    The curve is split into Bezier segments, each segment is elevated with the
    Bezier formula, and the result is expressed on the target knot vector.
    Without interior knots the last step is skipped, so the new coefficients are
    plain convex combinations of the old ones.
    """
    p = kv.degree
    net = np.asarray(net, dtype=float)
    values, counts = kv.interior_knots()
    if p > 0 and np.any(counts > p):
        raise RefinementError("degree elevation of discontinuous splines is not supported")

    bez_kv, bez = kv, net
    for v, c in zip(values, counts):
        for _ in range(max(p - int(c), 0)):
            bez_kv, bez = insert_knot(bez_kv, bez, float(v))
    nseg = values.size + 1

    seg_pts = []
    for s in range(nseg):
        P = bez[s * p : s * p + p + 1] if p > 0 else bez[s : s + 1]
        Q = np.empty((p + 2,) + net.shape[1:])
        Q[0] = P[0]
        Q[p + 1] = P[p]
        for i in range(1, p + 1):
            a = i / (p + 1)
            Q[i] = a * P[i - 1] + (1.0 - a) * P[i]
        seg_pts.append(Q)

    target = np.r_[
        np.zeros(p + 2),
        np.repeat(values, counts + 1),
        np.ones(p + 2),
    ]
    target_kv = KnotVector(target, p + 1)

    if p == 0:
        # piecewise constants: segments are independent, each contributes its value twice
        stacked = np.concatenate(seg_pts)
        return target_kv, stacked

    elevated = [seg_pts[0]] + [Q[1:] for Q in seg_pts[1:]]
    elevated = np.concatenate(elevated)
    bez_target = KnotVector(
        np.r_[np.zeros(p + 2), np.repeat(values, p + 1), np.ones(p + 2)], p + 1
    )
    if bez_target == target_kv:
        return target_kv, elevated
    T = insertion_matrix(target_kv, bez_target)
    flat = elevated.reshape(elevated.shape[0], -1)
    coeffs, *_ = np.linalg.lstsq(T, flat, rcond=None)
    return target_kv, coeffs.reshape((target_kv.n,) + net.shape[1:])


def interpolate(kv: KnotVector, values: np.ndarray, weights: np.ndarray | None = None) -> np.ndarray:
    """Coefficients interpolating ``values`` at the Greville abscissae."""
    tau = kv.greville()
    if weights is None:
        A = basis_matrix(kv, tau)
    else:
        A = rational_basis_matrix(kv, weights, tau)[0]
    return np.linalg.solve(A, np.asarray(values, dtype=float))
