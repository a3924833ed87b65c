import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sbiga.errors import DomainError
from sbiga.quadrature import default_order, gauss_rule, singular_element_check, span_rule
from sbiga.splines import KnotVector


def test_two_spans_with_order_nodes():
    rule = span_rule(KnotVector([0, 0, 0, 0.5, 1, 1, 1], 2), 3)
    assert rule.nodes.shape == (2, 3)
    assert rule.n_spans == 2


def test_nodes_are_interior():
    kv = KnotVector([0, 0, 0, 0.1, 0.1, 0.5, 1, 1, 1], 2)
    for order in range(1, 8):
        rule = span_rule(kv, order)
        a, b = rule.bounds[:, 0:1], rule.bounds[:, 1:2]
        assert np.all(rule.nodes > a) and np.all(rule.nodes < b)
        assert np.all(rule.points > 0.0)


def test_span_weights_sum_to_length():
    kv = KnotVector([0, 0, 0, 0.2, 0.7, 1, 1, 1], 2)
    rule = span_rule(kv, 4)
    np.testing.assert_allclose(rule.weights.sum(axis=1), np.diff(rule.bounds, axis=1).ravel(), atol=1e-14)


@given(st.integers(1, 10), st.data())
def test_polynomial_exactness(order, data):
    k = data.draw(st.integers(0, 2 * order - 1))
    a = data.draw(st.floats(0.0, 0.5))
    b = data.draw(st.floats(0.6, 1.0))
    kv = KnotVector([0, 0, a, b, 1, 1], 1) if 0 < a < b < 1 else KnotVector([0, 0, 1, 1], 1)
    rule = span_rule(kv, order)
    approx = np.sum(rule.weights * rule.nodes**k)
    assert abs(approx - 1.0 / (k + 1)) <= 1e-12


@pytest.mark.parametrize("h", [1.0, 0.5, 0.01])
def test_one_point_rule_on_singular_element(h):
    assert singular_element_check(h) == 0.5


def test_singular_element_higher_orders_finite():
    for order in range(1, 12):
        assert np.isfinite(singular_element_check(0.3, order))


def test_order_limits():
    with pytest.raises(DomainError):
        gauss_rule(0)
    with pytest.raises(DomainError):
        singular_element_check(0.0)
    assert default_order(KnotVector([0, 0, 0, 1, 1, 1], 2)) == 3
