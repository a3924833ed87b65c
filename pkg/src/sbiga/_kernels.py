"""Numeric kernels with a numba path and a vectorized numpy path.

Both paths compute the same quantities; which one runs is decided per call by
:mod:`sbiga._accel`. Tests cross-check the two.
"""
from __future__ import annotations

import numpy as np

from . import _accel
from ._accel import njit, prange


# ---------------------------------------------------------------------------
# B-spline basis functions and derivatives (Piegl & Tiller, A2.3)
# ---------------------------------------------------------------------------

def _sdiv(num, den):
    """Elementwise num/den with 0/0-style fractions (den == 0) set to zero."""
    out = np.zeros(np.broadcast(num, den).shape)
    nz = den != 0.0
    np.divide(num, den, out=out, where=nz)
    return out


def _ders_basis_numpy(knots, p, spans, t, nd):
    npts = t.shape[0]
    ndu = np.zeros((p + 1, p + 1, npts))
    ndu[0, 0] = 1.0
    left = np.zeros((p + 1, npts))
    right = np.zeros((p + 1, npts))
    for j in range(1, p + 1):
        left[j] = t - knots[spans + 1 - j]
        right[j] = knots[spans + j] - t
        saved = np.zeros(npts)
        for r in range(j):
            ndu[j, r] = right[r + 1] + left[j - r]
            temp = _sdiv(ndu[r, j - 1], ndu[j, r])
            ndu[r, j] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        ndu[j, j] = saved

    ders = np.zeros((npts, nd + 1, p + 1))
    ders[:, 0, :] = ndu[:, p, :].T
    a = np.zeros((2, p + 1, npts))
    for r in range(p + 1):
        s1, s2 = 0, 1
        a[:] = 0.0
        a[0, 0] = 1.0
        for k in range(1, nd + 1):
            d = np.zeros(npts)
            rk = r - k
            pk = p - k
            if r >= k:
                a[s2, 0] = _sdiv(a[s1, 0], ndu[pk + 1, rk])
                d = a[s2, 0] * ndu[rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = k - 1 if r - 1 <= pk else p - r
            for j in range(j1, j2 + 1):
                a[s2, j] = _sdiv(a[s1, j] - a[s1, j - 1], ndu[pk + 1, rk + j])
                d = d + a[s2, j] * ndu[rk + j, pk]
            if r <= pk:
                a[s2, k] = _sdiv(-a[s1, k - 1], ndu[pk + 1, r])
                d = d + a[s2, k] * ndu[r, pk]
            ders[:, k, r] = d
            s1, s2 = s2, s1
    fac = float(p)
    for k in range(1, nd + 1):
        ders[:, k, :] *= fac
        fac *= p - k
    return ders


@njit(cache=True)
def _ders_basis_numba(knots, p, spans, t, nd):
    npts = t.shape[0]
    ders = np.zeros((npts, nd + 1, p + 1))
    ndu = np.zeros((p + 1, p + 1))
    left = np.zeros(p + 1)
    right = np.zeros(p + 1)
    a = np.zeros((2, p + 1))
    for q in range(npts):
        span = spans[q]
        u = t[q]
        ndu[0, 0] = 1.0
        for j in range(1, p + 1):
            left[j] = u - knots[span + 1 - j]
            right[j] = knots[span + j] - u
            saved = 0.0
            for r in range(j):
                ndu[j, r] = right[r + 1] + left[j - r]
                temp = ndu[r, j - 1] / ndu[j, r] if ndu[j, r] != 0.0 else 0.0
                ndu[r, j] = saved + right[r + 1] * temp
                saved = left[j - r] * temp
            ndu[j, j] = saved
        for j in range(p + 1):
            ders[q, 0, j] = ndu[j, p]
        for r in range(p + 1):
            s1 = 0
            s2 = 1
            for i in range(p + 1):
                a[0, i] = 0.0
                a[1, i] = 0.0
            a[0, 0] = 1.0
            for k in range(1, nd + 1):
                d = 0.0
                rk = r - k
                pk = p - k
                if r >= k:
                    den = ndu[pk + 1, rk]
                    a[s2, 0] = a[s1, 0] / den if den != 0.0 else 0.0
                    d = a[s2, 0] * ndu[rk, pk]
                j1 = 1 if rk >= -1 else -rk
                j2 = k - 1 if r - 1 <= pk else p - r
                for j in range(j1, j2 + 1):
                    den = ndu[pk + 1, rk + j]
                    a[s2, j] = (a[s1, j] - a[s1, j - 1]) / den if den != 0.0 else 0.0
                    d += a[s2, j] * ndu[rk + j, pk]
                if r <= pk:
                    den = ndu[pk + 1, r]
                    a[s2, k] = -a[s1, k - 1] / den if den != 0.0 else 0.0
                    d += a[s2, k] * ndu[r, pk]
                ders[q, k, r] = d
                tmp = s1
                s1 = s2
                s2 = tmp
        fac = float(p)
        for k in range(1, nd + 1):
            for j in range(p + 1):
                ders[q, k, j] *= fac
            fac *= p - k
    return ders


def ders_basis(knots: np.ndarray, p: int, spans: np.ndarray, t: np.ndarray, nd: int) -> np.ndarray:
    """Nonzero basis functions and derivatives, shape ``(len(t), nd + 1, p + 1)``."""
    knots = np.ascontiguousarray(knots, dtype=float)
    spans = np.ascontiguousarray(spans, dtype=np.int64)
    t = np.ascontiguousarray(t, dtype=float)
    if _accel.use_numba():
        return _ders_basis_numba(knots, p, spans, t, nd)
    return _ders_basis_numpy(knots, p, spans, t, nd)


# ---------------------------------------------------------------------------
# Element tabulation: rational tensor basis, geometry, Jacobians
# ---------------------------------------------------------------------------

def tabulate_numpy(Br, Bc, off_r, off_c, net, weights):
    """Rational tensor basis and geometry at all element quadrature points.

    ``Br`` has shape ``(Er, Gr, 2, p+1)`` (values, first derivatives), ``Bc``
    likewise in the second direction. Returns ``R, dRxi, dReta`` with shape
    ``(Er, Ec, Gr, Gc, p+1, q+1)``, points ``x`` ``(Er, Ec, Gr, Gc, 2)`` and the
    Jacobian ``DF`` ``(Er, Ec, Gr, Gc, 2, 2)``.
    """
    p1 = Br.shape[3]
    q1 = Bc.shape[3]
    ir = off_r[:, None] + np.arange(p1)[None, :]  # (Er, p+1)
    jc = off_c[:, None] + np.arange(q1)[None, :]  # (Ec, q+1)
    w = weights[ir[:, None, :, None], jc[None, :, None, :]]  # (Er, Ec, p+1, q+1)
    d = net[ir[:, None, :, None], jc[None, :, None, :]]  # (Er, Ec, p+1, q+1, 2)

    M, dM = Br[:, :, 0, :], Br[:, :, 1, :]
    N, dN = Bc[:, :, 0, :], Bc[:, :, 1, :]
    # homogeneous tensor products (Er, Ec, Gr, Gc, a, b)
    B = np.einsum("rga,chb,rcab->rcghab", M, N, w)
    Bx = np.einsum("rga,chb,rcab->rcghab", dM, N, w)
    By = np.einsum("rga,chb,rcab->rcghab", M, dN, w)
    W = B.sum(axis=(-2, -1))[..., None, None]
    Wx = Bx.sum(axis=(-2, -1))[..., None, None]
    Wy = By.sum(axis=(-2, -1))[..., None, None]
    R = B / W
    dRx = (Bx - R * Wx) / W
    dRy = (By - R * Wy) / W

    x = np.einsum("rcghab,rcabk->rcghk", R, d)
    DF = np.empty(x.shape + (2,))
    DF[..., 0] = np.einsum("rcghab,rcabk->rcghk", dRx, d)
    DF[..., 1] = np.einsum("rcghab,rcabk->rcghk", dRy, d)
    return R, dRx, dRy, x, DF


def _stiffness_numpy(Br, Bc, off_r, off_c, net, weights, wr, wc):
    R, dRx, dRy, x, DF = tabulate_numpy(Br, Bc, off_r, off_c, net, weights)
    det = DF[..., 0, 0] * DF[..., 1, 1] - DF[..., 0, 1] * DF[..., 1, 0]
    Er, Ec, Gr, Gc = det.shape
    nloc = Br.shape[3] * Bc.shape[3]
    dRx = dRx.reshape(Er, Ec, Gr, Gc, nloc)
    dRy = dRy.reshape(Er, Ec, Gr, Gc, nloc)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv00 = DF[..., 1, 1] / det
        inv01 = -DF[..., 0, 1] / det
        inv10 = -DF[..., 1, 0] / det
        inv11 = DF[..., 0, 0] / det
    gx = dRx * inv00[..., None] + dRy * inv10[..., None]
    gy = dRx * inv01[..., None] + dRy * inv11[..., None]
    wq = wr[:, None, :, None] * wc[None, :, None, :] * det
    Kloc = np.einsum("rcgh,rcgha,rcghb->rcab", wq, gx, gx) + np.einsum("rcgh,rcgha,rcghb->rcab", wq, gy, gy)
    return Kloc.reshape(Er * Ec, nloc, nloc), det


@njit(cache=True, error_model="numpy")
def _stiffness_numba(Br, Bc, off_r, off_c, net, weights, wr, wc):
    Er, Gr, _, p1 = Br.shape
    Ec, Gc, _, q1 = Bc.shape
    nloc = p1 * q1
    Kloc = np.zeros((Er * Ec, nloc, nloc))
    det_out = np.zeros((Er, Ec, Gr, Gc))
    B = np.zeros(nloc)
    Bx = np.zeros(nloc)
    By = np.zeros(nloc)
    gx = np.zeros(nloc)
    gy = np.zeros(nloc)
    for er in range(Er):
        i0 = off_r[er]
        for ec in range(Ec):
            j0 = off_c[ec]
            e = er * Ec + ec
            for g in range(Gr):
                for h in range(Gc):
                    W = 0.0
                    Wx = 0.0
                    Wy = 0.0
                    for a in range(p1):
                        for b in range(q1):
                            w = weights[i0 + a, j0 + b]
                            k = a * q1 + b
                            B[k] = Br[er, g, 0, a] * Bc[ec, h, 0, b] * w
                            Bx[k] = Br[er, g, 1, a] * Bc[ec, h, 0, b] * w
                            By[k] = Br[er, g, 0, a] * Bc[ec, h, 1, b] * w
                            W += B[k]
                            Wx += Bx[k]
                            Wy += By[k]
                    j00 = 0.0
                    j01 = 0.0
                    j10 = 0.0
                    j11 = 0.0
                    for a in range(p1):
                        for b in range(q1):
                            k = a * q1 + b
                            r = B[k] / W
                            rx = (Bx[k] - r * Wx) / W
                            ry = (By[k] - r * Wy) / W
                            Bx[k] = rx
                            By[k] = ry
                            dx = net[i0 + a, j0 + b, 0]
                            dy = net[i0 + a, j0 + b, 1]
                            j00 += rx * dx
                            j01 += ry * dx
                            j10 += rx * dy
                            j11 += ry * dy
                    det = j00 * j11 - j01 * j10
                    det_out[er, ec, g, h] = det
                    inv00 = j11 / det
                    inv01 = -j01 / det
                    inv10 = -j10 / det
                    inv11 = j00 / det
                    for k in range(nloc):
                        gx[k] = Bx[k] * inv00 + By[k] * inv10
                        gy[k] = Bx[k] * inv01 + By[k] * inv11
                    wq = wr[er, g] * wc[ec, h] * det
                    for k in range(nloc):
                        for l in range(nloc):
                            Kloc[e, k, l] += wq * (gx[k] * gx[l] + gy[k] * gy[l])
    return Kloc, det_out


@njit(cache=True, error_model="numpy", parallel=True)
def _stiffness_numba_parallel(Br, Bc, off_r, off_c, net, weights, wr, wc):
    # one output slot per element, so the result does not depend on scheduling
    Er = Br.shape[0]
    Ec = Bc.shape[0]
    p1 = Br.shape[3]
    q1 = Bc.shape[3]
    Kloc = np.zeros((Er * Ec, p1 * q1, p1 * q1))
    det_out = np.zeros((Er, Ec, Br.shape[1], Bc.shape[1]))
    for e in prange(Er * Ec):
        er = e // Ec
        ec = e - er * Ec
        k, d = _stiffness_numba(
            Br[er:er + 1], Bc[ec:ec + 1], off_r[er:er + 1], off_c[ec:ec + 1], net, weights,
            wr[er:er + 1], wc[ec:ec + 1],
        )
        Kloc[e] = k[0]
        det_out[er, ec] = d[0, 0]
    return Kloc, det_out


def element_stiffness(Br, Bc, off_r, off_c, net, weights, wr, wc):
    """Element stiffness matrices of the Laplacian pulled back to parameter space.

    Returns ``(Kloc, det)`` with ``Kloc`` of shape ``(Er*Ec, nloc, nloc)`` in
    element-major order (radial element outer) and the Jacobian determinant at
    every quadrature point.
    """
    args = (
        np.ascontiguousarray(Br, dtype=float),
        np.ascontiguousarray(Bc, dtype=float),
        np.ascontiguousarray(off_r, dtype=np.int64),
        np.ascontiguousarray(off_c, dtype=np.int64),
        np.ascontiguousarray(net, dtype=float),
        np.ascontiguousarray(weights, dtype=float),
        np.ascontiguousarray(wr, dtype=float),
        np.ascontiguousarray(wc, dtype=float),
    )
    if _accel.use_numba():
        if _accel.threads() > 1:
            return _stiffness_numba_parallel(*args)
        return _stiffness_numba(*args)
    return _stiffness_numpy(*args)
