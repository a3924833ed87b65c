import warnings

import numpy as np
import pytest
import scipy.linalg as sla

from sbiga import domains, radial
from sbiga.errors import ConditioningError, DefectError, StructureError
from sbiga.geometry import build_wedge, refine, refine_uniform
from sbiga.quadrature import span_rule
from sbiga.splines import rational_basis_matrix

CLOSED_STRAIGHT = ("center-scaled", "off-center-scaled", "disk", "off-center-disk")


@pytest.mark.parametrize("tag", CLOSED_STRAIGHT)
@pytest.mark.parametrize("level", [0, 2])
def test_matrix_properties(tag, level):
    ode = radial.assemble_radial_matrices(refine_uniform(domains.builtin(tag), level))
    assert np.abs(ode.K @ np.ones(ode.n)).max() <= 1e-10
    sla.cholesky(ode.M)
    assert np.abs(ode.M - ode.M.T).max() <= 1e-14 * np.abs(ode.M).max()
    assert np.linalg.eigvalsh(ode.K).min() >= -1e-10 * np.abs(ode.K).max()
    # the constant state has zero flux: C^T 1 = 0
    assert np.abs(ode.C.T @ np.ones(ode.n)).max() <= 1e-10


@pytest.mark.parametrize("tag", CLOSED_STRAIGHT)
def test_matrices_match_metric_path(tag):
    """Rebuild M, C, K from the 2D Jacobian at a fixed xi (no b1/b2/J used)."""
    g = refine_uniform(domains.builtin(tag), 1)
    ode = radial.assemble_radial_matrices(g)
    xi0 = 0.37
    rule = span_rule(g.circ_kv, g.circ_kv.degree + 1)
    eta, w = rule.points, rule.weights.ravel()
    _, DF = g.jacobian(np.full_like(eta, xi0), eta)
    det = np.linalg.det(DF)
    inv = np.linalg.inv(DF)
    G = det[:, None, None] * inv @ np.transpose(inv, (0, 2, 1))
    R = rational_basis_matrix(g.circ_kv, g.weight_array[-1], eta, 1)
    N, dN = R[0], R[1]
    P = ode.periodic
    M = P.T @ (N.T @ ((w * G[:, 0, 0] / xi0)[:, None] * N)) @ P
    C = P.T @ (dN.T @ ((w * G[:, 0, 1])[:, None] * N)) @ P
    K = P.T @ (dN.T @ ((w * G[:, 1, 1] * xi0)[:, None] * dN)) @ P
    for mine, ref in ((ode.M, M), (ode.C, C), (ode.K, K)):
        np.testing.assert_allclose(mine, ref, atol=1e-10 * max(1.0, np.abs(ref).max()))


def test_scalar_hamiltonian():
    m, c, k = 2.0, 0.7, 3.0
    ode = radial.RadialODE(np.array([[m]]), np.array([[c]]), np.array([[k]]), None, np.eye(1))
    H = radial.build_hamiltonian(ode)
    np.testing.assert_allclose(H, [[c / m, -1 / m], [-k + c * c / m, -c / m]], atol=1e-15)
    # characteristic polynomial mu^2 - tr(H) mu + det(H) with tr = 0, det = -k/m
    coeffs = np.poly(H)
    np.testing.assert_allclose(coeffs, [1.0, 0.0, -k / m], atol=1e-14)
    np.testing.assert_allclose(np.sort(np.linalg.eigvals(H).real), [-np.sqrt(k / m), np.sqrt(k / m)], atol=1e-14)


@pytest.mark.parametrize("tag", CLOSED_STRAIGHT)
def test_hamiltonian_structure(tag):
    g = refine_uniform(domains.builtin(tag), 1)
    H = radial.build_hamiltonian(radial.assemble_radial_matrices(g))
    n = H.shape[0] // 2
    JH = radial.skew_form(n) @ H
    assert np.abs(JH - JH.T).max() <= 1e-10 * np.abs(JH).max()
    spectrum = radial.eigen_split(H)
    lam = spectrum.exponents
    for z in lam:
        assert np.min(np.abs(lam + z)) <= 1e-8 * max(1.0, abs(z))
    assert spectrum.stable.size == n
    assert np.all(spectrum.stable_exponents.real >= 0)


def test_singular_mass_is_rejected():
    ode = radial.RadialODE(np.zeros((2, 2)), np.zeros((2, 2)), np.zeros((2, 2)), None, np.eye(2))
    with pytest.raises(StructureError):
        radial.build_hamiltonian(ode)


def test_disk_exponents_are_fourier_orders():
    errs = []
    for L in range(3):
        spectrum = radial.eigen_split(radial.build_hamiltonian(radial.assemble_radial_matrices(refine_uniform(domains.disk(), L))))
        lam = np.sort(spectrum.stable_exponents.real)[:5]
        errs.append(np.abs(lam - [0, 1, 1, 2, 2]).max())
    assert errs[-1] < 1e-3
    assert errs[0] > errs[1] > errs[2]


def test_constant_boundary_gives_constant():
    g = domains.center_scaled_square()
    ode, spectrum, sol = radial.modal_pipeline(g, np.full(g.n - 1, 3.5))
    np.testing.assert_allclose(sol(np.linspace(0, 1, 9)), 3.5, atol=1e-12)


def test_disk_maximum_principle():
    g = refine_uniform(domains.disk(), 2)
    U1 = radial.greville_boundary(g, lambda s: np.cos(2 * np.pi * s))
    _, _, sol = radial.modal_pipeline(g, U1)
    U = sol(np.linspace(1e-6, 1, 200))
    assert np.abs(U).max() <= np.abs(U1).max() * 1.05
    np.testing.assert_allclose(sol(1.0)[0], U1, atol=1e-10)


@pytest.mark.parametrize("tag", ["disk", "center-scaled"])
def test_modal_solution_is_limit_of_radial_refinement(tag):
    g = refine_uniform(domains.builtin(tag), 2)
    s = g.circ_kv.greville()[:-1]
    U1 = np.cos(2 * np.pi * s) + 0.3 * np.sin(6 * np.pi * s)
    _, _, sol = radial.modal_pipeline(g, U1)
    diffs = []
    for spans in (4, 16, 64):
        ref, fine = radial.galerkin_reference(g, U1, spans)
        diffs.append(radial.field_difference(fine, sol.field, ref))
    assert diffs[0] > diffs[1] > diffs[2]
    assert diffs[2] < 1e-6


def test_radial_load_integrates_area():
    g = domains.disk()
    S = radial.radial_load(g, lambda x, y: np.ones_like(x), 0.5, order=8)
    np.testing.assert_allclose(S.sum(), 0.5 * 2 * np.pi, rtol=1e-6)


def test_structure_requirements():
    with pytest.raises(StructureError):
        radial.assemble_radial_matrices(domains.internally_smooth_square())
    with pytest.raises(StructureError):
        radial.assemble_radial_matrices(refine(build_wedge(domains.quarter_arc(), (0, 0)), radial_degree=2))


def _jordan(block):
    return np.array([[block, 1.0], [0.0, block]])


def test_defective_spectrum_raises():
    H = sla.block_diag(_jordan(0.0), _jordan(1.0), _jordan(-1.0))
    with pytest.raises(DefectError):
        radial.eigen_split(H)


def test_unpaired_spectrum_raises():
    with pytest.raises(DefectError):
        radial.eigen_split(np.diag([0.0, 0.0, 1.0, 2.0]))


def test_ill_conditioned_matching_raises():
    spectrum = radial.HamiltonianSpectrum(
        np.array([0.0, 1.0, -1.0, 0.0], dtype=complex),
        np.array([[1, 1, 0, 0], [1, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]], dtype=complex),
        np.array([0, 1]),
        0,
        2,
    )
    with pytest.raises(ConditioningError):
        radial.solve_laplace_modal(spectrum, np.ones(2), None)


def test_complex_residue_warns():
    sol = radial.RadialSolution(np.array([1 + 1j, 2.0]), np.eye(2, dtype=complex), np.array([1.0, 1.0], dtype=complex), None)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        sol(0.5)
    assert any("imaginary" in str(w.message) for w in caught)


def test_conjugate_pairs_combine_to_real():
    lam = np.array([1 + 1j, 1 - 1j])
    phi = np.array([[1, 1], [1j, -1j]], dtype=complex)
    sol = radial.RadialSolution(lam, phi, np.array([0.5, 0.5], dtype=complex), None)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        U = sol([0.25, 1.0])
    np.testing.assert_allclose(U[1], [1.0, 0.0], atol=1e-15)
