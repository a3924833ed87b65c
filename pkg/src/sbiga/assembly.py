"""Galerkin assembly of the pulled-back Poisson problem on [0, 1]^2.

Two routes produce the same stiffness matrix on straight-ray scaled-boundary
maps:

* :func:`assemble_standard` integrates ``grad(psi_a) g^-1 grad(psi_b)^T |det g|^(1/2)``
  with tensor Gauss quadrature per element;
* :func:`assemble_separated` writes every entry as a sum of four products of
  one-dimensional radial and circumferential integrals, using
  ``det DF = xi J(eta)``.

Constraints (Dirichlet rows, periodic seam, merged center) are handled by a
:class:`DofMap`; the reduced system is ``P^T A P q = P^T (r - A u_D)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .errors import AssemblyError, RegularityError, StructureError
from .geometry import GeometryMap, ray_factors
from .quadrature import QuadratureRule, span_rule
from .splines import KnotVector, basis_table, eval_curve, interpolate

INTERIOR, FIXED, PERIODIC, MERGED = 0, 1, 2, 3
KIND_NAMES = {INTERIOR: "interior", FIXED: "boundary-fixed", PERIODIC: "periodic-secondary", MERGED: "center-merged"}
SIDES = ("xi0", "xi1", "eta0", "eta1")


@dataclass(frozen=True, eq=False)
class SourceField:
    """Right-hand side ``f(x, y)`` in physical coordinates (vectorized)."""

    func: Callable[[np.ndarray, np.ndarray], np.ndarray]
    tag: str = ""

    def __call__(self, x, y):
        return np.broadcast_to(np.asarray(self.func(x, y), dtype=float), np.shape(x))


ZERO_SOURCE = SourceField(lambda x, y: np.zeros_like(x), "zero")


# ---------------------------------------------------------------------------
# Degrees of freedom
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DofMap:
    """Tensor index ``(i, j)`` -> unknown id (``-1`` for prescribed coefficients)."""

    index: np.ndarray
    kind: np.ndarray
    n_unknowns: int
    periodic: bool
    merge_center: bool
    dirichlet: frozenset

    @property
    def shape(self) -> tuple[int, int]:
        return self.index.shape

    @property
    def fixed(self) -> np.ndarray:
        return self.kind == FIXED

    def prolongation(self) -> sp.csr_matrix:
        """Sparse ``(m*n, K)`` matrix mapping unknowns to tensor coefficients."""
        idx = self.index.ravel()
        rows = np.nonzero(idx >= 0)[0]
        return sp.csr_matrix(
            (np.ones(rows.size), (rows, idx[rows])), shape=(idx.size, self.n_unknowns)
        )

    def expand(self, q: np.ndarray, prescribed: np.ndarray | None = None) -> np.ndarray:
        """Full ``(m, n)`` coefficient array from the unknown vector."""
        out = np.zeros(self.index.shape) if prescribed is None else np.array(prescribed, dtype=float)
        free = self.index >= 0
        out[free] = np.asarray(q)[self.index[free]]
        return out


def default_dirichlet_sides(gmap: GeometryMap) -> frozenset:
    """Every edge that is neither collapsed nor identified with another edge."""
    sides = {"xi1"}
    if not gmap.is_scaled_boundary:
        sides.add("xi0")
    if not gmap.is_closed:
        sides.update({"eta0", "eta1"})
    return frozenset(sides)


def build_dofmap(
    gmap: GeometryMap,
    periodic: bool | None = None,
    merge_center: bool = False,
    dirichlet: Iterable[str] | None = None,
) -> DofMap:
    """Number the coefficients after identification and elimination.

    ``periodic`` identifies column ``n-1`` with column 0 (default: when the
    map is closed); ``merge_center`` makes the collapsed row one unknown;
    ``dirichlet`` lists the sides (``xi0``, ``xi1``, ``eta0``, ``eta1``) whose
    coefficients are prescribed.
    """
    m, n = gmap.m, gmap.n
    if periodic is None:
        periodic = gmap.is_closed
    if periodic and not gmap.is_closed:
        raise StructureError("periodic identification needs a closed boundary curve")
    if merge_center and not gmap.is_scaled_boundary:
        raise StructureError("center merge needs a scaled-boundary map")
    sides = default_dirichlet_sides(gmap) if dirichlet is None else frozenset(dirichlet)
    unknown = sides - set(SIDES)
    if unknown:
        raise ValueError(f"unknown boundary sides {sorted(unknown)}")

    kind = np.full((m, n), INTERIOR, dtype=np.int8)
    if "xi0" in sides:
        kind[0] = FIXED
    if "xi1" in sides:
        kind[-1] = FIXED
    if "eta0" in sides:
        kind[:, 0] = FIXED
    if "eta1" in sides:
        kind[:, -1] = FIXED

    # representative of each coefficient
    rep_i, rep_j = np.meshgrid(np.arange(m), np.arange(n), indexing="ij")
    if periodic:
        rep_j[:, -1] = 0
        kind[:, -1] = np.where(kind[:, -1] == FIXED, FIXED, PERIODIC)
    if merge_center and kind[0, 0] != FIXED:
        rep_i[0, :] = 0
        rep_j[0, :] = 0
        kind[0, 1:] = np.where(kind[0, 1:] == FIXED, FIXED, MERGED)

    index = np.full((m, n), -1, dtype=np.int64)
    count = 0
    for i in range(m):
        for j in range(n):
            if kind[i, j] == INTERIOR:
                index[i, j] = count
                count += 1
    for i in range(m):
        for j in range(n):
            if kind[i, j] in (PERIODIC, MERGED):
                index[i, j] = index[rep_i[i, j], rep_j[i, j]]
    return DofMap(index, kind, count, bool(periodic), bool(merge_center), sides)


def apply_dirichlet(
    gmap: GeometryMap,
    g: Callable[[np.ndarray, np.ndarray], np.ndarray] | None,
    sides: Iterable[str] | None = None,
) -> np.ndarray:
    """Boundary coefficients interpolating ``g`` at the Greville points of each side.

    Returns an ``(m, n)`` array; entries off the listed sides are zero.
    """
    m, n = gmap.m, gmap.n
    out = np.zeros((m, n))
    if g is None:
        return out
    sides = default_dirichlet_sides(gmap) if sides is None else frozenset(sides)
    w = gmap.weight_array
    plan = {
        "xi0": (gmap.circ_kv, gmap.control_net[0], w[0], (0, slice(None))),
        "xi1": (gmap.circ_kv, gmap.control_net[-1], w[-1], (-1, slice(None))),
        "eta0": (gmap.radial_kv, gmap.control_net[:, 0], w[:, 0], (slice(None), 0)),
        "eta1": (gmap.radial_kv, gmap.control_net[:, -1], w[:, -1], (slice(None), -1)),
    }
    for side in ("eta0", "eta1", "xi0", "xi1"):
        if side not in sides:
            continue
        kv, pts, ww, where = plan[side]
        if side == "xi0" and gmap.is_scaled_boundary:
            raise StructureError("the collapsed center edge cannot carry Dirichlet data")
        weights = None if gmap.weights is None else ww
        from .splines import CurveGeometry

        curve = CurveGeometry(kv, pts, weights, closed=False)
        xy = eval_curve(curve, kv.greville())[:, 0]
        vals = np.asarray(g(xy[:, 0], xy[:, 1]), dtype=float) * np.ones(xy.shape[0])
        out[where] = interpolate(kv, vals, weights)
    return out


# ---------------------------------------------------------------------------
# Linear systems
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class LinearSystem:
    """Reduced system ``A q = r`` plus the data needed to expand ``q``."""

    A: sp.csr_matrix
    r: np.ndarray
    prescribed: np.ndarray
    dofmap: DofMap
    gmap: GeometryMap
    full_matrix: sp.csr_matrix
    full_rhs: np.ndarray
    stats: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return self.A.shape[0]


@dataclass(frozen=True, eq=False)
class _Direction:
    rule: QuadratureRule
    table: np.ndarray  # (E, G, 2, p+1): values and first derivatives
    offsets: np.ndarray  # first global basis index per element


def _direction(kv: KnotVector, order: int) -> _Direction:
    rule = span_rule(kv, order)
    E, G = rule.nodes.shape
    spans, ders = basis_table(kv, rule.points, 1)
    table = ders.reshape(E, G, 2, kv.degree + 1)
    return _Direction(rule, table, rule.spans - kv.degree)


def _orders(gmap: GeometryMap, order) -> tuple[int, int]:
    if order is None:
        o = max(gmap.degrees) + 1
        return o, o
    if np.ndim(order) == 0:
        return int(order), int(order)
    return int(order[0]), int(order[1])


def _element_dofs(gmap: GeometryMap, dr: _Direction, dc: _Direction) -> np.ndarray:
    p, q = gmap.degrees
    ii = dr.offsets[:, None] + np.arange(p + 1)[None, :]
    jj = dc.offsets[:, None] + np.arange(q + 1)[None, :]
    dofs = ii[:, None, :, None] * gmap.n + jj[None, :, None, :]
    return dofs.reshape(ii.shape[0] * jj.shape[0], (p + 1) * (q + 1))


def _scatter(local: np.ndarray, dofs: np.ndarray, size: int) -> sp.csr_matrix:
    nloc = dofs.shape[1]
    rows = np.repeat(dofs, nloc, axis=1).ravel()
    cols = np.tile(dofs, (1, nloc)).ravel()
    A = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(size, size)).tocsr()
    A.sum_duplicates()
    return A


def _load_vector(gmap: GeometryMap, dr: _Direction, dc: _Direction, f) -> tuple[np.ndarray, int]:
    size = gmap.m * gmap.n
    if f is None:
        return np.zeros(size), 0
    R, _, _, x, DF = _kernels.tabulate_numpy(
        dr.table, dc.table, dr.offsets, dc.offsets, gmap.control_net, gmap.weight_array
    )
    det = DF[..., 0, 0] * DF[..., 1, 1] - DF[..., 0, 1] * DF[..., 1, 0]
    fx = np.asarray(f(x[..., 0], x[..., 1]), dtype=float) * np.ones(det.shape)
    wq = dr.rule.weights[:, None, :, None] * dc.rule.weights[None, :, None, :] * np.abs(det)
    Er, Ec, Gr, Gc = det.shape
    nloc = R.shape[-1] * R.shape[-2]
    loc = np.einsum("rcgh,rcghk->rck", wq * fx, R.reshape(Er, Ec, Gr, Gc, nloc)).reshape(Er * Ec, nloc)
    if not np.all(np.isfinite(loc)):
        raise AssemblyError("non-finite source sample")
    dofs = _element_dofs(gmap, dr, dc)
    r = np.bincount(dofs.ravel(), weights=loc.ravel(), minlength=size)
    return r, Er * Ec * Gr * Gc * nloc


def _reduce(
    gmap: GeometryMap,
    dofmap: DofMap,
    A_full: sp.csr_matrix,
    r_full: np.ndarray,
    dirichlet_values: np.ndarray | None,
    stats: dict,
) -> LinearSystem:
    if dofmap.shape != (gmap.m, gmap.n):
        raise StructureError("dof map does not match the geometry")
    uD = np.zeros((gmap.m, gmap.n))
    if dirichlet_values is not None:
        uD[dofmap.fixed] = np.asarray(dirichlet_values)[dofmap.fixed]
    P = dofmap.prolongation()
    A = (P.T @ A_full @ P).tocsr()
    A.sort_indices()
    r = P.T @ (r_full - A_full @ uD.ravel())
    return LinearSystem(A, np.asarray(r).ravel(), uD, dofmap, gmap, A_full, r_full, stats)


def assemble_standard(
    gmap: GeometryMap,
    dofmap: DofMap,
    f=None,
    order=None,
    dirichlet_values: np.ndarray | None = None,
) -> LinearSystem:
    """Element-by-element tensor Gauss assembly of stiffness and load."""
    o_r, o_c = _orders(gmap, order)
    dr = _direction(gmap.radial_kv, o_r)
    dc = _direction(gmap.circ_kv, o_c)
    Kloc, det = _kernels.element_stiffness(
        dr.table, dc.table, dr.offsets, dc.offsets, gmap.control_net, gmap.weight_array,
        dr.rule.weights, dc.rule.weights,
    )
    if not np.all(np.isfinite(det)):
        raise AssemblyError("non-finite Jacobian at a quadrature node")
    if np.any(det <= 0):
        k = np.unravel_index(int(np.argmin(det)), det.shape)
        raise RegularityError(f"det DF = {det[k]:.3e} <= 0 at element {k[:2]}, node {k[2:]}")
    if not np.all(np.isfinite(Kloc)):
        raise AssemblyError("non-finite stiffness contribution")
    dofs = _element_dofs(gmap, dr, dc)
    A_full = _scatter(Kloc, dofs, gmap.m * gmap.n)
    r_full, n_load = _load_vector(gmap, dr, dc, f)
    nloc = dofs.shape[1]
    stats = {
        "route": "standard",
        "stiffness_2d": int(det.size * nloc * nloc),
        "stiffness_1d": 0,
        "load_2d": n_load,
    }
    return _reduce(gmap, dofmap, A_full, r_full, dirichlet_values, stats)


def radial_integrals(kv: KnotVector, order: int) -> tuple[list[sp.csr_matrix], int]:
    """The four radial matrices ``[int xi M'M', int M'M, int M M', int M M / xi]``.

    Entry ``[l, j]`` pairs test function ``l`` with trial function ``j``.
    """
    d = _direction(kv, order)
    xi = d.rule.nodes  # (E, G)
    w = d.rule.weights
    M, dM = d.table[:, :, 0, :], d.table[:, :, 1, :]
    locs = [
        np.einsum("eg,ega,egb->eab", w * xi, dM, dM),
        np.einsum("eg,ega,egb->eab", w, dM, M),
        np.einsum("eg,ega,egb->eab", w, M, dM),
        np.einsum("eg,ega,egb->eab", w / xi, M, M),
    ]
    dofs = d.offsets[:, None] + np.arange(kv.degree + 1)[None, :]
    mats = [_scatter(L, dofs, kv.n) for L in locs]
    E, G = xi.shape
    return mats, 4 * E * G * (kv.degree + 1) ** 2


def circumferential_integrals(gmap: GeometryMap, order: int) -> tuple[list[sp.csr_matrix], int]:
    """The four circumferential matrices of a straight-ray map.

    ``[int R R b1.b1/J, int R R' b1.b2/J, int R' R b1.b2/J, int R' R' b2.b2/J]``,
    entry ``[k, i]`` pairing test ``k`` with trial ``i``.
    """
    kv = gmap.circ_kv
    d = _direction(kv, order)
    eta = d.rule.nodes
    E, G = eta.shape
    b1, b2, J = ray_factors(gmap, eta.ravel())
    if np.any(J <= 0):
        raise RegularityError(f"J(eta) = {J.min():.3e} <= 0 at a quadrature node")
    b11 = np.einsum("nk,nk->n", b1, b1).reshape(E, G) / J.reshape(E, G)
    b12 = np.einsum("nk,nk->n", b1, b2).reshape(E, G) / J.reshape(E, G)
    b22 = np.einsum("nk,nk->n", b2, b2).reshape(E, G) / J.reshape(E, G)

    # rational circumferential basis (weights are constant along rays)
    q = kv.degree
    dofs = d.offsets[:, None] + np.arange(q + 1)[None, :]
    w = gmap.weight_array[-1][dofs][:, None, :]
    B = d.table[:, :, 0, :] * w
    dB = d.table[:, :, 1, :] * w
    W = B.sum(axis=-1, keepdims=True)
    dW = dB.sum(axis=-1, keepdims=True)
    R = B / W
    dR = (dB - R * dW) / W

    ww = d.rule.weights
    locs = [
        np.einsum("eg,ega,egb->eab", ww * b11, R, R),
        np.einsum("eg,ega,egb->eab", ww * b12, R, dR),
        np.einsum("eg,ega,egb->eab", ww * b12, dR, R),
        np.einsum("eg,ega,egb->eab", ww * b22, dR, dR),
    ]
    if not all(np.all(np.isfinite(L)) for L in locs):
        raise AssemblyError("non-finite circumferential kernel")
    mats = [_scatter(L, dofs, kv.n) for L in locs]
    return mats, 4 * E * G * (q + 1) ** 2


def assemble_separated(
    gmap: GeometryMap,
    dofmap: DofMap,
    f=None,
    radial_order: int | None = None,
    circ_order: int | None = None,
    dirichlet_values: np.ndarray | None = None,
) -> LinearSystem:
    """Stiffness as ``sum_t kron(radial_t, circ_t)``; load by 2D quadrature."""
    if not (gmap.is_scaled_boundary and gmap.has_straight_rays):
        raise StructureError("separated assembly needs a scaled-boundary map with straight rays")
    o_r, o_c = _orders(gmap, None)
    o_r = o_r if radial_order is None else int(radial_order)
    o_c = o_c if circ_order is None else int(circ_order)
    rad, n_r = radial_integrals(gmap.radial_kv, o_r)
    circ, n_c = circumferential_integrals(gmap, o_c)
    A_full = sp.csr_matrix((gmap.m * gmap.n, gmap.m * gmap.n))
    for Rt, Ct in zip(rad, circ):
        A_full = A_full + sp.kron(Rt, Ct, format="csr")
    A_full = A_full.tocsr()
    A_full.sort_indices()
    r_full, n_load = 0, 0
    if f is not None:
        dr = _direction(gmap.radial_kv, o_r)
        dc = _direction(gmap.circ_kv, o_c)
        r_full, n_load = _load_vector(gmap, dr, dc, f)
    else:
        r_full = np.zeros(gmap.m * gmap.n)
    stats = {"route": "separated", "stiffness_2d": 0, "stiffness_1d": n_r + n_c, "load_2d": n_load}
    return _reduce(gmap, dofmap, A_full, r_full, dirichlet_values, stats)


def assemble(gmap: GeometryMap, dofmap: DofMap, f=None, route: str = "standard", order=None,
             dirichlet_values: np.ndarray | None = None) -> LinearSystem:
    if route == "standard":
        return assemble_standard(gmap, dofmap, f, order, dirichlet_values)
    if route == "separated":
        o_r, o_c = _orders(gmap, order)
        return assemble_separated(gmap, dofmap, f, o_r, o_c, dirichlet_values)
    raise ValueError(f"unknown assembly route {route!r}")
