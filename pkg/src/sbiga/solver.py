"""Linear solve, L2 errors, manufactured problems and convergence studies."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse.linalg as spla

from . import domains
from .assembly import DofMap, LinearSystem, SourceField, apply_dirichlet, assemble, build_dofmap
from .errors import SolverError
from .geometry import GeometryMap, refine_uniform
from .quadrature import span_rule

DIRECT_LIMIT = 20_000
RESIDUAL_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class DiscreteSolution:
    q: np.ndarray
    system: LinearSystem
    residual: float

    @property
    def gmap(self) -> GeometryMap:
        return self.system.gmap

    @property
    def dofmap(self) -> DofMap:
        return self.system.dofmap

    @property
    def coefficients(self) -> np.ndarray:
        """Full ``(m, n)`` coefficient array including prescribed values."""
        return self.dofmap.expand(self.q, self.system.prescribed)

    def __call__(self, xi, eta) -> np.ndarray:
        return self.gmap.combine(self.coefficients, xi, eta)


def solve(system: LinearSystem) -> DiscreteSolution:
    """Solve ``A q = r`` with ``||A q - r|| <= 1e-10 ||r||``.

    Direct factorization below ``DIRECT_LIMIT`` unknowns, conjugate gradients
    above (or when the factorization misbehaves).
    """
    A, r = system.A, system.r
    K = A.shape[0]
    rnorm = float(np.linalg.norm(r))
    if K == 0:
        return DiscreteSolution(np.zeros(0), system, 0.0)
    if rnorm == 0.0:
        return DiscreteSolution(np.zeros(K), system, 0.0)
    q = None
    if K < DIRECT_LIMIT:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", spla.MatrixRankWarning)
            q = spla.spsolve(A.tocsc(), r)
        if not np.all(np.isfinite(q)):
            q = None
    res = math.inf if q is None else float(np.linalg.norm(A @ q - r))
    if not res <= RESIDUAL_TOL * rnorm:
        x0 = q if q is not None else None
        with np.errstate(all="ignore"):
            q, _ = spla.cg(A, r, x0=x0, rtol=RESIDUAL_TOL * 0.5, atol=0.0, maxiter=20 * K + 1000)
            res = float(np.linalg.norm(A @ q - r))
        # NaN residuals fail this test as well
        if not res <= RESIDUAL_TOL * rnorm:
            raise SolverError(f"no convergence: residual {res:.3e} vs |r| {rnorm:.3e}", residual=res)
    return DiscreteSolution(np.asarray(q, dtype=float), system, res)


# ---------------------------------------------------------------------------
# Manufactured problems
# ---------------------------------------------------------------------------

Field = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class ManufacturedProblem:
    tag: str
    exact: Field
    source: SourceField

    def boundary(self, x, y):
        return self.exact(x, y)


def square_cos() -> ManufacturedProblem:
    def u(x, y):
        return np.cos(np.pi * (x - 0.5)) * np.cos(np.pi * (y - 0.5))

    return ManufacturedProblem("square-cos", u, SourceField(lambda x, y: 2 * np.pi**2 * u(x, y), "square-cos"))


def paraboloid(a: float = 1.0) -> ManufacturedProblem:
    return ManufacturedProblem(
        f"paraboloid-{a:g}",
        lambda x, y: a * a - x * x - y * y,
        SourceField(lambda x, y: np.full_like(np.asarray(x, dtype=float), 4.0), "paraboloid"),
    )


def zero_problem() -> ManufacturedProblem:
    return ManufacturedProblem("zero", lambda x, y: np.zeros_like(np.asarray(x, dtype=float)), SourceField(lambda x, y: np.zeros_like(x), "zero"))


def harmonic(k: int = 2, center=(0.0, 0.0)) -> ManufacturedProblem:
    """``Re((z - z0)^k)``: harmonic, so ``f = 0``."""
    cx, cy = center

    def u(x, y):
        return np.real((np.asarray(x) - cx + 1j * (np.asarray(y) - cy)) ** k)

    return ManufacturedProblem(f"harmonic-{k}", u, SourceField(lambda x, y: np.zeros_like(x), "zero"))


def affine(a: float = 1.0, b: float = -2.0, c: float = 0.5) -> ManufacturedProblem:
    return ManufacturedProblem("affine", lambda x, y: a + b * np.asarray(x) + c * np.asarray(y),
                               SourceField(lambda x, y: np.zeros_like(x), "zero"))


PROBLEM_TAGS = ("square-cos", "paraboloid-a", "zero", "harmonic-k")


def problem(tag: str) -> ManufacturedProblem:
    """Problem from a tag: ``square-cos``, ``zero``, ``paraboloid-<a>``, ``harmonic-<k>``."""
    if tag == "square-cos":
        return square_cos()
    if tag == "zero":
        return zero_problem()
    if tag.startswith("paraboloid"):
        rest = tag[len("paraboloid"):].lstrip("-")
        return paraboloid(1.0 if rest in ("", "a") else float(rest))
    if tag.startswith("harmonic"):
        rest = tag[len("harmonic"):].lstrip("-")
        return harmonic(2 if rest in ("", "k") else int(rest))
    raise ValueError(f"unknown problem {tag!r}; choose from {', '.join(PROBLEM_TAGS)}")


# ---------------------------------------------------------------------------
# Errors and sampling
# ---------------------------------------------------------------------------

def parametric_l2(gmap: GeometryMap, integrand: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray],
                  order: int | None = None) -> float:
    """``sqrt(int int integrand(xi, eta, x)^2 |det DF|)`` by tensor Gauss quadrature."""
    if order is None:
        order = max(gmap.degrees) + 3
    rr = span_rule(gmap.radial_kv, order)
    rc = span_rule(gmap.circ_kv, order)
    xi, wx = rr.points, rr.weights.ravel()
    eta, we = rc.points, rc.weights.ravel()
    X, E = np.meshgrid(xi, eta, indexing="ij")
    W = np.outer(wx, we).ravel()
    x, DF = gmap.jacobian(X.ravel(), E.ravel())
    det = np.abs(DF[:, 0, 0] * DF[:, 1, 1] - DF[:, 0, 1] * DF[:, 1, 0])
    vals = integrand(X.ravel(), E.ravel(), x)
    return float(np.sqrt(np.sum(W * det * vals**2)))


def l2_error(sol: DiscreteSolution, exact: Field, order: int | None = None) -> float:
    coeffs = sol.coefficients
    gmap = sol.gmap

    def diff(xi, eta, x):
        return gmap.combine(coeffs, xi, eta) - exact(x[:, 0], x[:, 1])

    return parametric_l2(gmap, diff, order)


def l2_difference(a: DiscreteSolution, b: DiscreteSolution, order: int | None = None) -> float:
    """L2 distance between two solutions on the same map."""
    ca, cb = a.coefficients, b.coefficients
    return parametric_l2(a.gmap, lambda xi, eta, x: a.gmap.combine(ca - cb, xi, eta), order)


def sample_field(sol: DiscreteSolution, grid: int = 21, exact: Field | None = None) -> np.ndarray:
    """Rows ``(x, y, u_h, u_exact, |error|)`` on a uniform parametric ``grid x grid``.

    Without ``exact`` the last two columns are NaN.
    """
    t = np.linspace(0.0, 1.0, grid)
    X, E = np.meshgrid(t, t, indexing="ij")
    pts = sol.gmap.evaluate(X.ravel(), E.ravel())
    uh = sol(X.ravel(), E.ravel())
    if exact is None:
        ue = np.full_like(uh, np.nan)
    else:
        ue = np.asarray(exact(pts[:, 0], pts[:, 1]), dtype=float) * np.ones_like(uh)
    return np.column_stack([pts, uh, ue, np.abs(uh - ue)])


# ---------------------------------------------------------------------------
# Drivers
# ---------------------------------------------------------------------------

def solve_problem(
    gmap: GeometryMap,
    prob: ManufacturedProblem,
    route: str = "standard",
    merge_center: bool = False,
    order=None,
    dofmap: DofMap | None = None,
) -> DiscreteSolution:
    dm = dofmap or build_dofmap(gmap, merge_center=merge_center)
    uD = apply_dirichlet(gmap, prob.boundary, dm.dirichlet)
    system = assemble(gmap, dm, prob.source, route=route, order=order, dirichlet_values=uD)
    return solve(system)


@dataclass(frozen=True)
class ConvergenceRow:
    level: int
    dofs: int
    l2_error: float
    rate: float | None
    rate_dof: float | None


def _rates(rows: list[tuple[int, int, float]]) -> list[ConvergenceRow]:
    out = []
    for k, (lev, K, e) in enumerate(rows):
        rate = rate_dof = None
        if k > 0:
            _, K0, e0 = rows[k - 1]
            if e > 0 and e0 > 0:
                rate = math.log2(e0 / e)
                rate_dof = 2 * math.log(e0 / e) / math.log(K / K0) if K != K0 else None
        out.append(ConvergenceRow(lev, K, e, rate, rate_dof))
    return out


def convergence_study(
    prob: ManufacturedProblem,
    geometry: str | GeometryMap,
    levels: int,
    route: str = "standard",
    merge_center: bool = False,
    order=None,
    start: int = 0,
) -> list[ConvergenceRow]:
    """Uniform dyadic refinement, levels ``start .. start + levels - 1``."""
    if levels < 2:
        raise ValueError("a convergence study needs at least two levels")
    gmap = domains.builtin(geometry) if isinstance(geometry, str) else geometry
    gmap = refine_uniform(gmap, start)
    raw = []
    for k in range(levels):
        if k:
            gmap = refine_uniform(gmap, 1)
        sol = solve_problem(gmap, prob, route=route, merge_center=merge_center, order=order)
        raw.append((start + k, sol.dofmap.n_unknowns, l2_error(sol, prob.exact)))
    return _rates(raw)


def error_at_dofs(rows: list[ConvergenceRow], target: float) -> float:
    """Log-log interpolation of the error curve at ``target`` unknowns."""
    K = np.log([r.dofs for r in rows])
    e = np.log([r.l2_error for r in rows])
    return float(np.exp(np.interp(np.log(target), K, e)))
