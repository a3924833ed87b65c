import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given
from hypothesis import strategies as st

from sbiga import _accel, domains
from sbiga.assembly import (
    FIXED,
    MERGED,
    PERIODIC,
    SourceField,
    apply_dirichlet,
    assemble_separated,
    assemble_standard,
    build_dofmap,
    radial_integrals,
)
from sbiga.errors import RegularityError, StructureError
from sbiga.geometry import build_sb_map, ray_factors, refine, refine_uniform
from sbiga.quadrature import span_rule
from sbiga.splines import KnotVector

from .conftest import ALL_BUILTINS, SB_STRAIGHT


def _rel(A, B):
    return abs(A - B).max() / abs(A).max()


# -- dof maps ---------------------------------------------------------------

def test_dof_counts_on_tabulated_square():
    g = domains.center_scaled_square()
    dm = build_dofmap(g, periodic=True, merge_center=False)
    assert dm.n_unknowns == 16
    assert np.array_equal(dm.index[:, -1], dm.index[:, 0])
    assert np.all(dm.kind[-1] == FIXED)
    assert np.all(dm.kind[:-1, -1] == PERIODIC)
    merged = build_dofmap(g, periodic=True, merge_center=True)
    assert merged.n_unknowns == 9
    assert len(set(merged.index[0].tolist())) == 1
    assert np.all(merged.kind[0, 1:] == MERGED)


def test_dof_count_without_constraints():
    g = domains.rectangular_square(2)
    dm = build_dofmap(g, periodic=False, dirichlet=())
    assert dm.n_unknowns == g.m * g.n


def test_dofmap_errors():
    with pytest.raises(StructureError):
        build_dofmap(domains.rectangular_square(), periodic=True)
    with pytest.raises(StructureError):
        build_dofmap(domains.rectangular_square(), merge_center=True)
    with pytest.raises(ValueError):
        build_dofmap(domains.disk(), dirichlet={"north"})


def test_prolongation_roundtrip():
    g = domains.disk()
    dm = build_dofmap(g, merge_center=True)
    q = np.arange(dm.n_unknowns, dtype=float) + 1
    full = dm.expand(q)
    np.testing.assert_array_equal((dm.prolongation() @ q).reshape(g.m, g.n), full)


# -- dirichlet values ---------------------------------------------------------

def test_zero_boundary_data():
    assert not np.any(apply_dirichlet(domains.disk(), lambda x, y: 0 * x))


def test_paraboloid_on_circle_is_constant():
    a = 1.7
    vals = apply_dirichlet(domains.disk(), lambda x, y: a * a - x * x - y * y, {"xi1"})
    np.testing.assert_allclose(vals[-1], a * a - 1, atol=1e-13)


def test_linear_data_reproduced_at_greville():
    g = domains.center_scaled_square()
    vals = apply_dirichlet(g, lambda x, y: 2 * x - y + 0.3)
    t = g.circ_kv.greville()
    pts = g.evaluate(np.ones_like(t), t)
    uh = g.combine(vals, np.ones_like(t), t)
    np.testing.assert_allclose(uh, 2 * pts[:, 0] - pts[:, 1] + 0.3, atol=1e-12)


# -- stiffness ----------------------------------------------------------------

def test_bilinear_element():
    g = domains.rectangular_square(1)
    A = assemble_standard(g, build_dofmap(g, dirichlet=())).full_matrix.toarray()
    expected = np.array([[4, -1, -1, -2], [-1, 4, -2, -1], [-1, -2, 4, -1], [-2, -1, -1, 4]]) / 6
    np.testing.assert_allclose(A, expected, atol=1e-14)
    np.testing.assert_allclose(np.diag(A), 2 / 3)
    np.testing.assert_allclose(A.sum(axis=1), 0, atol=1e-14)


def test_disk_matches_polar_kernel():
    g = refine_uniform(domains.disk(), 1)
    A = assemble_standard(g, build_dofmap(g, periodic=False, dirichlet=())).full_matrix.toarray()
    # direct quadrature of  xi |g'| u_xi v_xi + u_eta v_eta / (xi |g'|)
    p, q = g.degrees
    rr, rc = span_rule(g.radial_kv, p + 1), span_rule(g.circ_kv, q + 1)
    X, E = np.meshgrid(rr.points, rc.points, indexing="ij")
    W = np.outer(rr.weights.ravel(), rc.weights.ravel()).ravel()
    xi, eta = X.ravel(), E.ravel()
    b1, _, J = ray_factors(g, eta)
    speed = np.linalg.norm(b1, axis=1)
    np.testing.assert_allclose(J, speed, rtol=1e-12)
    R, Rx, Ry, i0, j0 = g.local_basis(xi, eta)
    ref = np.zeros((g.m * g.n, g.m * g.n))
    for k in range(xi.size):
        idx = ((i0[k] + np.arange(p + 1))[:, None] * g.n + (j0[k] + np.arange(q + 1))[None, :]).ravel()
        gx, gy = Rx[k].ravel(), Ry[k].ravel()
        ref[np.ix_(idx, idx)] += W[k] * (xi[k] * speed[k] * np.outer(gx, gx) + np.outer(gy, gy) / (xi[k] * speed[k]))
    np.testing.assert_allclose(A, ref, atol=1e-12 * abs(ref).max())


@pytest.mark.parametrize("tag", ALL_BUILTINS)
def test_symmetry_and_constant_kernel(tag):
    g = refine_uniform(domains.builtin(tag), 1)
    dm = build_dofmap(g)
    sys_ = assemble_standard(g, dm, SourceField(lambda x, y: 1 + x * y))
    A = sys_.full_matrix
    assert abs(A - A.T).max() <= 1e-12 * abs(A).max()
    assert np.abs(A @ np.ones(A.shape[0])).max() <= 1e-10 * abs(A).max()
    sla.cholesky(sys_.A.toarray())  # SPD after constraints


@pytest.mark.parametrize("tag", SB_STRAIGHT)
@pytest.mark.parametrize("level", [0, 1, 2])
def test_separated_equals_standard(tag, level):
    g = refine_uniform(domains.builtin(tag), level)
    dm = build_dofmap(g)
    f = SourceField(lambda x, y: np.exp(x) * np.cos(y))
    uD = apply_dirichlet(g, lambda x, y: x - y)
    a = assemble_standard(g, dm, f, dirichlet_values=uD)
    b = assemble_separated(g, dm, f, dirichlet_values=uD)
    assert _rel(a.full_matrix, b.full_matrix) <= 1e-10
    assert _rel(a.A, b.A) <= 1e-10
    np.testing.assert_allclose(b.r, a.r, atol=1e-10 * np.abs(a.r).max())
    assert b.stats["stiffness_2d"] == 0 < a.stats["stiffness_2d"]
    assert b.stats["stiffness_1d"] < a.stats["stiffness_2d"]


def test_separated_needs_straight_rays():
    for g in (domains.internally_smooth_square(), domains.rectangular_square(), domains.curved_ray_domain()):
        with pytest.raises(StructureError):
            assemble_separated(g, build_dofmap(g))


def test_radial_integral_single_linear_element():
    mats, _ = radial_integrals(KnotVector([0, 0, 1, 1], 1), 2)
    # int_0^1 xi * (M_1')^2 with M_1 = xi
    np.testing.assert_allclose(mats[0].toarray()[1, 1], 0.5, atol=1e-15)
    # one-point rule on (1/xi) M_0 M_0 gives the finite value 1/2
    one_point, _ = radial_integrals(KnotVector([0, 0, 1, 1], 1), 1)
    np.testing.assert_allclose(one_point[3].toarray()[0, 0], 0.5, atol=1e-15)


def test_inverted_map_raises_regularity_error():
    g = refine(build_sb_map(domains.square_boundary(), (2.0, 2.0)), radial_degree=2)
    with pytest.raises(RegularityError):
        assemble_standard(g, build_dofmap(g))
    with pytest.raises(RegularityError):
        assemble_separated(g, build_dofmap(g))


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2))
def test_load_is_linear_in_source(a, b, c):
    g = domains.center_scaled_square()
    dm = build_dofmap(g)
    r1 = assemble_standard(g, dm, SourceField(lambda x, y: x)).r
    r2 = assemble_standard(g, dm, SourceField(lambda x, y: y + 0 * x)).r
    r = assemble_standard(g, dm, SourceField(lambda x, y: a * x + b * y + c * 0 * x)).r
    np.testing.assert_allclose(r, a * r1 + b * r2, atol=1e-12 * (1 + abs(a) + abs(b)))


def test_backends_give_same_matrix():
    g = refine_uniform(domains.internally_smooth_square(), 2)
    dm = build_dofmap(g)
    previous = _accel.backend()
    try:
        _accel.set_backend("numpy")
        a = assemble_standard(g, dm).full_matrix
        _accel.set_backend("numba")
        b = assemble_standard(g, dm).full_matrix
    finally:
        _accel.set_backend(previous)
    assert _rel(a, b) <= 1e-13


def test_parallel_kernel_is_bit_identical():
    g = refine_uniform(domains.disk(), 2)
    dm = build_dofmap(g)
    previous = _accel.backend()
    _accel.set_backend("numba")
    try:
        serial = assemble_standard(g, dm).full_matrix
        _accel.set_threads(4)
        parallel = assemble_standard(g, dm).full_matrix
    finally:
        _accel.set_threads(1)
        _accel.set_backend(previous)
    assert (serial != parallel).nnz == 0


def test_repeated_assembly_is_bit_identical():
    g = refine_uniform(domains.off_center_square(), 2)
    dm = build_dofmap(g)
    f = SourceField(lambda x, y: np.sin(3 * x) * y)
    a, b = assemble_standard(g, dm, f), assemble_standard(g, dm, f)
    assert (a.A != b.A).nnz == 0 and np.array_equal(a.r, b.r)
