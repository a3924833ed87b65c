"""Semi-analytical route: circumferential projection to a radial ODE.

Writing ``u(xi, eta) = sum_k N_k(eta) U_k(xi)`` on a closed straight-ray map
turns the Laplace problem into

    xi^2 M U'' + xi (M + C^T - C) U' - K U + xi S(xi) = 0,

with ``M = int N N^T b1.b1 / J``, ``K = int N' N'^T b2.b2 / J`` and
``C[i, k] = int N'_i N_k b1.b2 / J``. With ``W = xi M U' + C^T U`` the state
``X = (U, W)`` obeys ``xi X' = -H X`` where ``H`` is Hamiltonian. Modes are
``xi^lam phi`` with ``H phi = -lam phi``; the admissible (bounded) ones have
``Re lam >= 0``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .assembly import build_dofmap, circumferential_integrals
from .errors import ConditioningError, DefectError, RegularityError, StructureError
from .geometry import GeometryMap, ray_factors, refine
from .quadrature import span_rule
from .splines import rational_basis_matrix

PAIR_TOL = 1e-8
ZERO_TOL = 1e-6
COND_LIMIT = 1e12
IMAG_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class RadialODE:
    M: np.ndarray
    C: np.ndarray
    K: np.ndarray
    gmap: GeometryMap
    periodic: np.ndarray  # (n_full, n) identification matrix

    @property
    def n(self) -> int:
        return self.M.shape[0]

    def expand(self, U: np.ndarray) -> np.ndarray:
        """Reduced coefficients ``(..., n)`` -> full circumferential row ``(..., n_full)``."""
        return np.asarray(U) @ self.periodic.T

    def reduce(self, U_full: np.ndarray) -> np.ndarray:
        """Drop the duplicated seam coefficient."""
        return np.asarray(U_full)[..., : self.n]


def _periodic_matrix(n_full: int) -> np.ndarray:
    P = np.zeros((n_full, n_full - 1))
    P[np.arange(n_full - 1), np.arange(n_full - 1)] = 1.0
    P[-1, 0] = 1.0
    return P


def _check_map(gmap: GeometryMap) -> None:
    if not (gmap.is_scaled_boundary and gmap.has_straight_rays):
        raise StructureError("the radial ODE needs a scaled-boundary map with straight rays")
    if not gmap.is_closed:
        raise StructureError("the radial ODE is only set up for closed boundary curves")


def assemble_radial_matrices(gmap: GeometryMap, order: int | None = None) -> RadialODE:
    """``M``, ``C``, ``K`` by 1D circumferential Gauss quadrature, seam identified."""
    _check_map(gmap)
    order = gmap.circ_kv.degree + 1 if order is None else int(order)
    (C11, _C12, C21, C22), _ = circumferential_integrals(gmap, order)
    P = _periodic_matrix(gmap.n)
    Ps = sp.csr_matrix(P)

    def red(A):
        return np.asarray((Ps.T @ A @ Ps).todense())

    M, C, K = red(C11), red(C21), red(C22)
    M = 0.5 * (M + M.T)
    K = 0.5 * (K + K.T)
    return RadialODE(M, C, K, gmap, P)


def radial_load(gmap: GeometryMap, f, xi: float, order: int | None = None) -> np.ndarray:
    """``S(xi) = xi int f(F(xi, eta)) N(eta) J(eta) d eta`` on the reduced circumferential space."""
    _check_map(gmap)
    kv = gmap.circ_kv
    order = kv.degree + 1 if order is None else int(order)
    rule = span_rule(kv, order)
    eta = rule.points
    wq = rule.weights.ravel()
    _, _, J = ray_factors(gmap, eta)
    if np.any(J <= 0):
        raise RegularityError("J(eta) <= 0 at a quadrature node")
    x = gmap.evaluate(np.full_like(eta, xi), eta)

    N = rational_basis_matrix(kv, gmap.weight_array[-1], eta, 0)[0]
    fx = np.asarray(f(x[:, 0], x[:, 1]), dtype=float) * np.ones(eta.size)
    S = xi * (N.T @ (wq * fx * J))
    return _periodic_matrix(gmap.n).T @ S


def skew_form(n: int) -> np.ndarray:
    I = np.eye(n)
    Z = np.zeros((n, n))
    return np.block([[Z, I], [-I, Z]])


def build_hamiltonian(ode: RadialODE) -> np.ndarray:
    """``H = [[M^-1 C^T, -M^-1], [-K + C M^-1 C^T, -C M^-1]]``."""
    M, C, K = ode.M, ode.C, ode.K
    try:
        cho = sla.cho_factor(M)
    except np.linalg.LinAlgError as exc:
        raise StructureError(f"M is not positive definite: {exc}") from None
    if np.linalg.cond(M) > 1e14:
        raise StructureError("M is numerically singular")
    MiCt = sla.cho_solve(cho, C.T)
    Mi = sla.cho_solve(cho, np.eye(M.shape[0]))
    Mi = 0.5 * (Mi + Mi.T)
    return np.block([[MiCt, -Mi], [-K + C @ MiCt, -MiCt.T]])


@dataclass(frozen=True, eq=False)
class HamiltonianSpectrum:
    """Exponents ``lam`` (``-eig(H)``) and eigenvectors; ``stable`` indexes the admissible modes."""

    exponents: np.ndarray
    vectors: np.ndarray
    stable: np.ndarray
    zero_mode: int
    n: int

    @property
    def stable_exponents(self) -> np.ndarray:
        return self.exponents[self.stable]

    @property
    def stable_vectors(self) -> np.ndarray:
        return self.vectors[:, self.stable]

    def sorted_exponents(self) -> np.ndarray:
        lam = self.exponents
        return lam[np.lexsort((lam.imag, lam.real))]


def _check_defect(lam: np.ndarray, vecs: np.ndarray, idx: np.ndarray, scale: float) -> None:
    """Clusters of (numerically) equal eigenvalues must carry independent eigenvectors."""
    done = np.zeros(idx.size, dtype=bool)
    for a in range(idx.size):
        if done[a]:
            continue
        near = np.abs(lam[idx] - lam[idx[a]]) <= 1e-6 * scale
        done |= near
        if near.sum() < 2:
            continue
        V = vecs[:, idx[near]]
        V = V / np.linalg.norm(V, axis=0)
        s = np.linalg.svd(V, compute_uv=False)
        if s[-1] < 1e-6:
            raise DefectError(
                f"defective eigenvalue {lam[idx[a]]:.6g} (multiplicity {near.sum()}, "
                f"smallest eigenvector singular value {s[-1]:.2e})"
            )


def eigen_split(H: np.ndarray) -> HamiltonianSpectrum:
    """Eigen-decomposition of ``H`` with the admissible modes selected.

    The constant field gives a double zero exponent (with a ``log xi``
    partner); exactly one zero mode, ``U = 1, W = 0``, is kept. Every other
    exponent must pair with its negation within ``1e-8``; the ``n - 1``
    exponents with positive real part are kept.
    """
    two_n = H.shape[0]
    n = two_n // 2
    mu, vecs = sla.eig(H)
    lam = -mu
    scale = max(1.0, float(np.abs(lam).max()))

    zero = np.abs(lam) <= ZERO_TOL * scale
    if zero.sum() != 2:
        raise DefectError(f"expected a double zero exponent, found {int(zero.sum())} near zero")
    nonzero = np.nonzero(~zero)[0]

    # pair lam with -lam by nearest negation
    unmatched = set(nonzero.tolist())
    for i in nonzero:
        if i not in unmatched:
            continue
        unmatched.discard(i)
        cands = list(unmatched)
        if not cands:
            raise DefectError(f"exponent {lam[i]:.6g} has no partner")
        d = np.abs(lam[cands] + lam[i])
        k = int(np.argmin(d))
        if d[k] > PAIR_TOL * max(1.0, abs(lam[i])):
            raise DefectError(f"exponent {lam[i]:.10g} has no partner within {PAIR_TOL:g} (closest gap {d[k]:.2e})")
        unmatched.discard(cands[k])

    pos = nonzero[lam[nonzero].real > 0]
    if pos.size != n - 1:
        raise DefectError(f"{pos.size} exponents with positive real part, expected {n - 1}")
    _check_defect(lam, vecs, nonzero, scale)

    # explicit constant mode replaces the numerically split zero pair
    const = np.zeros(two_n, dtype=complex)
    const[:n] = 1.0 / np.sqrt(n)
    lam = lam.copy()
    vecs = vecs.astype(complex, copy=True)
    z = np.nonzero(zero)[0]
    # the pair is a Jordan block that eig splits into roughly +-sqrt(eps)
    lam[z] = 0.0
    vecs[:, z[0]] = const
    stable = np.concatenate([[z[0]], pos[np.argsort(lam[pos].real, kind="stable")]])
    return HamiltonianSpectrum(lam, vecs, stable, int(z[0]), n)


@dataclass(frozen=True, eq=False)
class RadialSolution:
    """``U(xi) = sum_i c_i xi^lam_i phi_i^U`` (reduced circumferential coefficients)."""

    exponents: np.ndarray
    modes: np.ndarray  # (n, n) U-blocks of stable eigenvectors
    coefficients: np.ndarray
    ode: RadialODE

    def __call__(self, xi) -> np.ndarray:
        """Reduced coefficients, shape ``(len(xi), n)``."""
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        if np.any(xi < 0) or np.any(xi > 1):
            raise ValueError("xi must lie in [0, 1]")
        with np.errstate(divide="ignore", invalid="ignore"):
            pw = np.where(
                self.exponents[None, :] == 0,
                1.0 + 0j,
                np.power(xi[:, None].astype(complex), self.exponents[None, :]),
            )
        pw = np.where(np.isfinite(pw), pw, 0.0)
        U = (pw * self.coefficients[None, :]) @ self.modes.T
        imag = float(np.abs(U.imag).max()) if U.size else 0.0
        if imag > IMAG_TOL * max(1.0, float(np.abs(U.real).max())):
            warnings.warn(f"radial solution has imaginary part {imag:.2e}", RuntimeWarning, stacklevel=2)
        return U.real

    def full(self, xi) -> np.ndarray:
        return self.ode.expand(self(xi))

    def field(self, xi, eta) -> np.ndarray:
        """``u(xi, eta)`` at scattered parametric points."""
        xi = np.atleast_1d(np.asarray(xi, dtype=float)).ravel()
        eta = np.atleast_1d(np.asarray(eta, dtype=float)).ravel()
        xi, eta = np.broadcast_arrays(xi, eta)
        N = rational_basis_matrix(self.ode.gmap.circ_kv, self.ode.gmap.weight_array[-1], eta, 0)[0]
        return np.einsum("pk,pk->p", N, self.full(xi))


def solve_laplace_modal(spectrum: HamiltonianSpectrum, boundary: np.ndarray, ode: RadialODE) -> RadialSolution:
    """Match the stable modes to the boundary coefficients ``U(1)``.

    ``boundary`` may be reduced (length ``n``) or the full row (seam repeated).
    """
    U1 = np.asarray(boundary, dtype=float).ravel()
    n = spectrum.n
    if U1.size == n + 1:
        U1 = U1[:n]
    if U1.size != n:
        raise ValueError(f"boundary vector of length {U1.size}, expected {n}")
    Phi = spectrum.stable_vectors[:n]
    cond = np.linalg.cond(Phi)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise ConditioningError(f"mode-matching matrix condition number {cond:.3e} exceeds {COND_LIMIT:g}")
    c = np.linalg.solve(Phi, U1.astype(complex))
    return RadialSolution(spectrum.stable_exponents, Phi, c, ode)


def modal_pipeline(gmap: GeometryMap, boundary: np.ndarray) -> tuple[RadialODE, HamiltonianSpectrum, RadialSolution]:
    ode = assemble_radial_matrices(gmap)
    spectrum = eigen_split(build_hamiltonian(ode))
    return ode, spectrum, solve_laplace_modal(spectrum, boundary, ode)


def greville_boundary(gmap: GeometryMap, g) -> np.ndarray:
    """Reduced boundary coefficients ``g(s_k)`` at the circumferential Greville points."""
    s = gmap.circ_kv.greville()[: gmap.n - 1]
    return np.asarray(g(s), dtype=float) * np.ones(s.size)


def galerkin_reference(gmap: GeometryMap, boundary: np.ndarray, radial_spans: int = 16):
    """2D Galerkin solution with the same circumferential space and ``radial_spans`` radial elements.

    Returns ``(solution, refined_map)``.
    """
    from .assembly import assemble_standard
    from .solver import solve

    new = [k / radial_spans for k in range(1, radial_spans)]
    have = set(np.round(gmap.radial_kv.knots, 14).tolist())
    fine = refine(gmap, radial_knots=[t for t in new if round(t, 14) not in have])
    dm = build_dofmap(fine)
    uD = np.zeros((fine.m, fine.n))
    U1 = np.asarray(boundary, dtype=float).ravel()
    uD[-1, : fine.n - 1] = U1[: fine.n - 1]
    uD[-1, -1] = U1[0]
    return solve(assemble_standard(fine, dm, None, dirichlet_values=uD)), fine


def field_difference(gmap: GeometryMap, f1, f2, order: int | None = None) -> float:
    """L2 norm of ``f1 - f2`` (callables of ``(xi, eta)``) over the mapped domain."""
    from .solver import parametric_l2

    return parametric_l2(gmap, lambda xi, eta, x: f1(xi, eta) - f2(xi, eta), order)
