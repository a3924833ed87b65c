"""Gauss-Legendre rules mapped onto knot spans.

Gauss nodes never touch the span ends, so integrands with a ``1/xi`` factor at
the collapsed edge of a scaled-boundary map are only sampled where they are
finite.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError
from .splines import KnotVector

MAX_ORDER = 16


@lru_cache(maxsize=None)
def _leggauss(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [-1, 1]; exact for polynomials of degree ``2*order - 1``."""
    if not 1 <= order <= MAX_ORDER:
        raise DomainError(f"Gauss order must be in [1, {MAX_ORDER}], got {order}")
    return _leggauss(int(order))


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Per-span Gauss rule on one parametric axis.

    ``nodes`` and ``weights`` have shape ``(n_spans, order)``; ``spans`` holds the
    knot index of each span's left end and ``bounds`` its ``(a, b)`` interval.
    """

    nodes: np.ndarray
    weights: np.ndarray
    spans: np.ndarray
    bounds: np.ndarray
    order: int

    @property
    def n_spans(self) -> int:
        return self.nodes.shape[0]

    @property
    def points(self) -> np.ndarray:
        return self.nodes.ravel()


def span_rule(kv: KnotVector, order: int) -> QuadratureRule:
    """Affinely mapped Gauss rule on every non-empty span of ``kv``."""
    x, w = gauss_rule(order)
    spans = kv.spans
    a = kv.knots[spans]
    b = kv.knots[spans + 1]
    half = 0.5 * (b - a)
    nodes = 0.5 * (a + b)[:, None] + half[:, None] * x[None, :]
    weights = half[:, None] * w[None, :]
    return QuadratureRule(nodes, weights, spans.astype(np.int64), np.stack([a, b], axis=1), int(order))


def default_order(kv: KnotVector) -> int:
    return kv.degree + 1


def singular_element_check(h: float, order: int = 1) -> float:
    """Gauss rule applied to the first-element kernel ``1/xi - 2/h + xi/h**2`` on ``[0, h]``.

    This is the ``(1/xi) M_1 M_1`` radial integrand for linear splines on the
    element touching the scaling center. The exact integral diverges; the
    one-point (midpoint) rule returns 1/2 for every ``h``.
    """
    if not h > 0:
        raise DomainError("element size must be positive")
    x, w = gauss_rule(order)
    xi = 0.5 * h * (1.0 + x)
    vals = 1.0 / xi - 2.0 / h + xi / h**2
    return float(0.5 * h * np.dot(w, vals))
