"""Acceptance suite: one test per criterion, each logging a PASS/FAIL line."""
import time
from pathlib import Path

import numpy as np
import pytest
import scipy.linalg as sla

from sbiga import assembly, domains, io, radial, solver
from sbiga.geometry import jacobian_samples, ray_factors, refine, refine_uniform
from sbiga.quadrature import singular_element_check
from sbiga.splines import basis_matrix, rational_basis_matrix

from .conftest import ALL_BUILTINS, SB_STRAIGHT

DATA = Path(__file__).resolve().parents[1] / "data"

# Squares with the level range that ends at the first level past 1000 unknowns.
SQUARE_LEVELS = {"rectangular": 6, "center-scaled": 5, "off-center-scaled": 5, "internally-smooth": 5}


@pytest.fixture(scope="module")
def square_studies():
    start = time.perf_counter()
    prob = solver.square_cos()
    rows = {tag: solver.convergence_study(prob, tag, n) for tag, n in SQUARE_LEVELS.items()}
    return rows, time.perf_counter() - start


def test_criterion_01_rates(acceptance, square_studies):
    with acceptance.criterion(1, "third-order L2 convergence on the four squares") as log:
        studies, seconds = square_studies
        for tag, rows in studies.items():
            last = [r.rate for r in rows[-2:]]
            log.append(f"{tag} {last[0]:.3f},{last[1]:.3f} @ {rows[-1].dofs} dofs")
            assert rows[-1].dofs >= 1000
            assert all(2.7 <= r <= 3.3 for r in last), (tag, last)
        log.append(f"{seconds:.1f}s")
        assert seconds < 120


def test_criterion_02_ordering(acceptance, square_studies):
    with acceptance.criterion(2, "error ordering at 1000 unknowns") as log:
        studies, _ = square_studies
        err = {tag: solver.error_at_dofs(rows, 1000) for tag, rows in studies.items()}
        log.extend(f"{tag} {e:.3e}" for tag, e in err.items())
        assert err["rectangular"] == min(err.values())
        sb = ("center-scaled", "off-center-scaled", "internally-smooth")
        assert err["center-scaled"] == min(err[t] for t in sb)


def test_criterion_03_assembly_equivalence(acceptance):
    with acceptance.criterion(3, "separated and standard assembly agree") as log:
        prob = solver.square_cos()
        worst = 0.0
        for tag in ("center-scaled", "disk"):
            for L in range(3):
                g = refine_uniform(domains.builtin(tag), L)
                dm = assembly.build_dofmap(g)
                uD = assembly.apply_dirichlet(g, prob.boundary, dm.dirichlet)
                a = assembly.assemble(g, dm, prob.source, route="standard", dirichlet_values=uD)
                b = assembly.assemble(g, dm, prob.source, route="separated", dirichlet_values=uD)
                for X, Y in ((a.full_matrix, b.full_matrix), (a.A, b.A)):
                    rel = abs(X - Y).max() / abs(X).max()
                    worst = max(worst, rel)
                    assert rel <= 1e-10, (tag, L, rel)
                assert np.abs(a.r - b.r).max() <= 1e-10 * np.abs(a.r).max()
                assert b.stats["stiffness_2d"] < a.stats["stiffness_2d"]
                assert b.stats["stiffness_2d"] + b.stats["stiffness_1d"] < a.stats["stiffness_2d"]
        log.append(f"max relative entry gap {worst:.1e}")


def test_criterion_04_jacobian_factorization(acceptance, rng):
    with acceptance.criterion(4, "det DF = xi J(eta) and DF against finite differences") as log:
        h = 1e-6
        worst_det = worst_fd = 0.0
        for tag in SB_STRAIGHT:
            g = refine_uniform(domains.builtin(tag), 1)
            xi = rng.uniform(h, 1 - h, 1000)
            eta = rng.uniform(h, 1 - h, 1000)
            _, DF = g.jacobian(xi, eta)
            det = np.linalg.det(DF)
            _, _, J = ray_factors(g, eta)
            gap = np.abs(det - xi * J) / (1 + np.abs(det))
            worst_det = max(worst_det, gap.max())
            assert gap.max() <= 1e-10, tag
            fd = np.stack(
                [
                    (g.evaluate(xi + h, eta) - g.evaluate(xi - h, eta)) / (2 * h),
                    (g.evaluate(xi, eta + h) - g.evaluate(xi, eta - h)) / (2 * h),
                ],
                axis=-1,
            )
            worst_fd = max(worst_fd, np.abs(fd - DF).max())
            assert np.abs(fd - DF).max() <= 1e-5, tag
        log.append(f"det gap {worst_det:.1e}, fd gap {worst_fd:.1e}")


def test_criterion_05_center_quadrature(acceptance):
    with acceptance.criterion(5, "one-point rule gives 1/2 and SB stiffness is SPD") as log:
        for h in (1.0, 0.5, 0.01):
            assert singular_element_check(h) == 0.5
        count = 0
        for tag in SB_STRAIGHT:
            g = domains.builtin(tag)
            for L in range(4):
                for merge in (False, True):
                    dm = assembly.build_dofmap(g, merge_center=merge)
                    A = assembly.assemble_standard(g, dm).A.toarray()
                    sla.cholesky(A)
                    count += 1
                g = refine_uniform(g, 1)
        log.append(f"{count} factorizations")


def _exact_norm(g, exact):
    return solver.parametric_l2(g, lambda xi, eta, x: exact(x[:, 0], x[:, 1]))


def test_criterion_06_center_merge(acceptance):
    with acceptance.criterion(6, "merged and unmerged center agree below the error") as log:
        cases = (("off-center-scaled", solver.square_cos()),
                 ("off-center-disk", solver.harmonic(3)))
        for tag, prob in cases:
            g = refine_uniform(domains.builtin(tag), 3)
            free = solver.solve_problem(g, prob)
            merged = solver.solve_problem(g, prob, merge_center=True)
            scale = _exact_norm(g, prob.exact)
            diff = solver.l2_difference(free, merged) / scale
            err = min(solver.l2_error(free, prob.exact), solver.l2_error(merged, prob.exact)) / scale
            log.append(f"{tag} diff {diff:.1e} vs error {err:.1e}")
            assert diff < err


def test_criterion_07_hamiltonian(acceptance):
    with acceptance.criterion(7, "Hamiltonian symmetry, pairing and disk exponents") as log:
        for tag in ("disk", "center-scaled"):
            for L in range(3):
                H = radial.build_hamiltonian(radial.assemble_radial_matrices(refine_uniform(domains.builtin(tag), L)))
                n = H.shape[0] // 2
                JH = radial.skew_form(n) @ H
                assert np.abs(JH - JH.T).max() <= 1e-10 * np.abs(JH).max()
                lam = radial.eigen_split(H).exponents
                for z in lam:
                    assert np.min(np.abs(lam + z)) <= 1e-8 * max(1.0, abs(z))
        errs = []
        for L in range(4):
            H = radial.build_hamiltonian(radial.assemble_radial_matrices(refine_uniform(domains.disk(), L)))
            lam = np.sort(radial.eigen_split(H).stable_exponents.real)[:5]
            errs.append(np.abs(lam - [0, 1, 1, 2, 2]).max())
        log.append("exponent errors " + ", ".join(f"{e:.1e}" for e in errs))
        assert all(a > b for a, b in zip(errs, errs[1:]))


def _harmonic_extension(g, U1, kmax=1000, spans=512, points=40):
    """Fourier-series harmonic extension of the spline boundary trace of a centered unit disk."""
    x, wg = np.polynomial.legendre.leggauss(points)
    br = np.linspace(0.0, 1.0, spans + 1)
    a, b = br[:-1, None], br[1:, None]
    eta = (0.5 * (a + b) + 0.5 * (b - a) * x).ravel()
    w = (0.5 * (b - a) * wg).ravel()
    trace = rational_basis_matrix(g.circ_kv, g.weight_array[-1], eta, 0)[0] @ np.append(U1, U1[0])
    pts, DF = g.jacobian(np.ones_like(eta), eta)
    theta = np.arctan2(pts[:, 1], pts[:, 0])
    dtheta = (pts[:, 0] * DF[:, 1, 1] - pts[:, 1] * DF[:, 0, 1]) / np.sum(pts**2, axis=1)
    k = np.arange(kmax + 1)
    c = (w * trace * dtheta) @ np.exp(-1j * np.outer(theta, k)) / (2 * np.pi)

    def u(px, py):
        r, t = np.hypot(px, py), np.arctan2(py, px)
        z = r[:, None] ** k[1:] * np.exp(1j * np.outer(t, k[1:]))
        return c[0].real + 2 * np.real(z @ c[1:])

    return u


def test_criterion_08_modal_vs_galerkin(acceptance):
    with acceptance.criterion(8, "modal solution within twice the 2D error") as log:
        for L in (2, 3):
            g = refine_uniform(domains.disk(), L)
            U1 = radial.greville_boundary(g, lambda s: np.cos(2 * np.pi * s))
            _, _, modal = radial.modal_pipeline(g, U1)
            ref, fine = radial.galerkin_reference(g, U1, radial_spans=2**L)
            exact = _harmonic_extension(g, U1)
            err2d = solver.l2_error(ref, exact, order=8)
            gap = radial.field_difference(fine, modal.field, ref, order=8)
            log.append(f"L{L} gap {gap:.2e} vs 2D error {err2d:.2e}")
            assert gap <= 2 * err2d


# Tabulated control points, rows from the boundary to the center.
CENTER_SCALED_TABLE = [
    [(0, 0), (0.5, 0), (1, 0), (1, 0.5), (1, 1), (0.5, 1), (0, 1), (0, 0.5), (0, 0)],
    [(0.25, 0.25), (0.5, 0.25), (0.75, 0.25), (0.75, 0.5), (0.75, 0.75), (0.5, 0.75), (0.25, 0.75), (0.25, 0.5), (0.25, 0.25)],
    [(0.5, 0.5)] * 9,
]
SMOOTH_TABLE = [
    [(0, 0), (0, 0), (1, 0), (1, 0), (1, 1), (1, 1), (0, 1), (0, 1), (0, 0), (0, 0)],
    [(0.25, 0.25), (0.375, 0.125), (0.625, 0.125), (0.875, 0.375), (0.875, 0.625),
     (0.625, 0.875), (0.375, 0.875), (0.125, 0.625), (0.125, 0.375), (0.25, 0.25)],
    [(0.5, 0.5)] * 10,
]


def test_criterion_09_tabulated_geometry(acceptance):
    with acceptance.criterion(9, "tabulated control points reproduced exactly") as log:
        cases = (
            (domains.center_scaled_square(), CENTER_SCALED_TABLE, "center_scaled_square.json",
             [0, 0, 0, 0.25, 0.25, 0.5, 0.5, 0.75, 0.75, 1, 1, 1]),
            (domains.internally_smooth_square(), SMOOTH_TABLE, "internally_smooth_square.json",
             [0, 0, 0, 0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 1, 1, 1]),
        )
        for g, table, fname, circ in cases:
            want = np.array(table[::-1], dtype=float)
            assert np.array_equal(g.control_net, want)
            assert g.weights is None
            assert list(g.circ_kv.knots) == circ
            assert list(g.radial_kv.knots) == [0, 0, 0, 1, 1, 1]
            loaded = io.read_geometry(DATA / fname)
            assert np.array_equal(loaded.control_net, want)
            doc = io.geometry_document(g, orientation="boundary-to-center")
            assert np.array_equal(np.array(doc["control_points"], dtype=float), np.array(table, dtype=float))
            log.append(f"{fname} {want.shape[0] * want.shape[1]} points")


def test_criterion_10_property_suites(acceptance, rng):
    with acceptance.criterion(10, "property suites on every built-in and the curved-ray map") as log:
        for tag in ALL_BUILTINS:
            g = domains.builtin(tag)
            xi, eta = rng.uniform(0, 1, 200), rng.uniform(0, 1, 200)
            # partition of unity, spline factors and the rational tensor basis
            Nr = basis_matrix(g.radial_kv, xi)
            Nc = basis_matrix(g.circ_kv, eta)
            R, Rx, Ry, _, _ = g.local_basis(xi, eta)
            assert np.abs(Nr.sum(1) - 1).max() <= 1e-12 and np.abs(Nc.sum(1) - 1).max() <= 1e-12
            assert np.abs(R.sum(axis=(1, 2)) - 1).max() <= 1e-12
            assert np.abs(Rx.sum(axis=(1, 2))).max() <= 1e-10 and np.abs(Ry.sum(axis=(1, 2))).max() <= 1e-10
            # geometry preserved by knot insertion and degree elevation
            x0 = g.evaluate(xi, eta)
            for h in (refine_uniform(g, 2), refine(g, radial_degree=3, circ_degree=3)):
                assert np.abs(h.evaluate(xi, eta) - x0).max() <= 1e-12
            # constants in the kernel of the stiffness matrix
            g1 = refine_uniform(g, 1)
            dm = assembly.build_dofmap(g1, dirichlet=())
            K = assembly.assemble_standard(g1, dm).full_matrix
            assert np.abs(K @ np.ones(K.shape[0])).max() <= 1e-10
            # patch test
            prob = solver.affine(0.7, -1.3, 2.1)
            sol = solver.solve_problem(g1, prob, order=12 if g1.is_rational else None)
            assert solver.l2_error(sol, prob.exact) <= 1e-10
            assert jacobian_samples(g, 16).min() > 0
        log.append(f"{len(ALL_BUILTINS)} geometries")
        rows = solver.convergence_study(solver.harmonic(3), "curved-ray", 5)
        last = [r.rate for r in rows[-2:]]
        log.append(f"curved-ray rates {last[0]:.3f},{last[1]:.3f} @ {rows[-1].dofs} dofs")
        assert rows[-1].dofs >= 1000
        assert all(2.7 <= r <= 3.3 for r in last)
