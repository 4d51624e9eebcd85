"""Jets of analytic potential families: frozen values, symmetry, errors."""

import math

import numpy as np
import pytest

from hessianlab.errors import (
    HessianNotPositiveDefinite,
    InvalidParams,
    OrderUnsupported,
    PointOutsideDomain,
)
from hessianlab.potential import (
    AffineDomain,
    Exp1DPotential,
    PolynomialPotential,
    ProductPotential,
    QuadraticPotential,
    SumPotential,
    WeightData,
    XLogX1DPotential,
    builtin_family,
    evaluate_jet,
    moment_coordinates,
    sample_box_points,
)


def central_diff(f, x, h=1e-5):
    """Plain 3-point first derivative, used as an independent cross-check."""
    return (f(x + h) - f(x - h)) / (2 * h)


# ---------------------------------------------------------------------------
# frozen jet values
# ---------------------------------------------------------------------------


def test_exp1d_jet_at_origin():
    u = Exp1DPotential(v=1.0, scale=1.0)
    jet = evaluate_jet(u, [0.0], order=3)
    assert jet.value == pytest.approx(1.0, abs=1e-15)
    assert jet.grad[0] == pytest.approx(-1.0, abs=1e-15)
    assert jet.hess[0, 0] == pytest.approx(1.0, abs=1e-15)
    assert jet.third[0, 0, 0] == pytest.approx(-1.0, abs=1e-15)
    assert jet.inverse_hess[0, 0] == pytest.approx(1.0, abs=1e-15)
    assert jet.log_det == pytest.approx(0.0, abs=1e-15)
    assert jet.fourth is None and jet.fifth is None


def test_exp1d_derivatives_match_difference_quotients():
    u = Exp1DPotential(v=1.0, scale=1.0)

    def val(x):
        return float(u.derivative_tensor(np.array([x]), 0))

    jet = evaluate_jet(u, [0.3], order=2)
    assert central_diff(val, 0.3) == pytest.approx(jet.grad[0], abs=1e-9)
    d2 = (val(0.3 + 1e-4) - 2 * val(0.3) + val(0.3 - 1e-4)) / 1e-8
    assert d2 == pytest.approx(jet.hess[0, 0], abs=1e-6)


def test_exp1d_general_parameters():
    # u = s e^{-vx}: k-th derivative s(-v)^k e^{-vx}
    u = Exp1DPotential(v=2.0, scale=0.5)
    jet = evaluate_jet(u, [0.25], order=5)
    e = 0.5 * math.exp(-0.5)
    for k, tensor in enumerate([jet.grad, jet.hess, jet.third, jet.fourth, jet.fifth], start=1):
        assert tensor.flat[0] == pytest.approx((-2.0) ** k * e, rel=1e-14)
    # certified gauge constant: log(v^2 scale) = log 2
    assert u.certified_weights.c == pytest.approx(math.log(2.0))


def test_xlogx1d_jet_values():
    u = XLogX1DPotential(K=1.0)
    jet = evaluate_jet(u, [0.0], order=5)
    assert jet.value == pytest.approx(0.0, abs=1e-15)
    assert jet.grad[0] == pytest.approx(0.0, abs=1e-15)
    assert jet.hess[0, 0] == pytest.approx(1.0, abs=1e-15)
    assert jet.third[0, 0, 0] == pytest.approx(-1.0, abs=1e-15)
    assert jet.fourth[0, 0, 0, 0] == pytest.approx(2.0, abs=1e-15)
    assert jet.fifth[(0,) * 5] == pytest.approx(-6.0, abs=1e-15)
    # off-center: u''(x) = 1/(x+K)
    jet2 = evaluate_jet(u, [1.5], order=2)
    assert jet2.hess[0, 0] == pytest.approx(0.4)
    assert jet2.log_det == pytest.approx(math.log(0.4))


def test_quadratic_jet_and_weights():
    A = np.array([[2.0, 0.5], [0.5, 1.0]])
    b = np.array([1.0, -3.0])
    u = QuadraticPotential(A, b)
    x = np.array([0.7, -0.2])
    jet = evaluate_jet(u, x, order=4)
    assert jet.value == pytest.approx(0.5 * x @ A @ x + b @ x)
    np.testing.assert_allclose(jet.grad, A @ x + b, atol=1e-15)
    np.testing.assert_allclose(jet.hess, A, atol=1e-15)
    assert np.all(jet.third == 0) and np.all(jet.fourth == 0)
    assert jet.log_det == pytest.approx(math.log(1.75))
    w = u.certified_weights
    assert np.all(w.v == 0) and np.all(w.xi == 0)
    assert w.c == pytest.approx(math.log(1.75))
    np.testing.assert_allclose(jet.inverse_hess @ A, np.eye(2), atol=1e-14)


def test_product_jets_are_block_diagonal():
    u = ProductPotential([Exp1DPotential(), XLogX1DPotential(K=1.0)])
    jet = evaluate_jet(u, [0.0, 0.0], order=3)
    np.testing.assert_allclose(jet.hess, np.diag([1.0, 1.0]), atol=1e-15)
    expected_third = np.zeros((2, 2, 2))
    expected_third[0, 0, 0] = -1.0
    expected_third[1, 1, 1] = -1.0
    np.testing.assert_allclose(jet.third, expected_third, atol=1e-15)
    # weights concatenate, constants add
    w = u.certified_weights
    np.testing.assert_allclose(w.v, [1.0, 0.0])
    np.testing.assert_allclose(w.xi, [0.0, -1.0])
    assert w.c == pytest.approx(0.0)


def test_sum_potential_adds_jets():
    base = Exp1DPotential()
    bump = PolynomialPotential({(3,): 0.1}, n=1, domain=AffineDomain.box([(-1.0, 1.0)]))
    u = SumPotential([base, bump])
    jet = evaluate_jet(u, [0.5], order=3)
    ref = evaluate_jet(base, [0.5], order=3)
    assert jet.value == pytest.approx(ref.value + 0.1 * 0.125)
    assert jet.third[0, 0, 0] == pytest.approx(ref.third[0, 0, 0] + 0.6)
    assert u.certified_weights is None
    assert u.domain.bounds.tolist() == [[-1.0, 1.0]]


# ---------------------------------------------------------------------------
# properties
# ---------------------------------------------------------------------------


def test_polynomial_tensors_symmetric_under_permutations():
    rng = np.random.default_rng(7)
    terms = {}
    for _ in range(12):
        expo = tuple(rng.integers(0, 3, size=3))
        terms[expo] = terms.get(expo, 0.0) + rng.normal()
    # add a heavy quadratic to keep the Hessian positive definite
    for j in range(3):
        terms[tuple(2 if i == j else 0 for i in range(3))] = 30.0
    u = PolynomialPotential(terms, n=3)
    x = rng.uniform(-0.4, 0.4, size=3)
    jet = evaluate_jet(u, x, order=5)
    for tensor in (jet.third, jet.fourth, jet.fifth):
        k = tensor.ndim
        for _ in range(20):
            idx = tuple(rng.integers(0, 3, size=k))
            perm = tuple(rng.permutation(idx))
            assert tensor[idx] == tensor[perm]


def test_inverse_hessian_contract():
    rng = np.random.default_rng(3)
    u = builtin_family("product", {
        "factors": [
            {"name": "exp1d", "params": {"v": 1.0}},
            {"name": "xlogx1d", "params": {"K": 2.0}},
            {"name": "quadratic", "params": {"A": [1.5]}},
        ]
    })
    for _ in range(20):
        x = rng.uniform(-0.8, 0.8, size=3)
        jet = evaluate_jet(u, x, order=2)
        np.testing.assert_allclose(jet.inverse_hess @ jet.hess, np.eye(3), atol=1e-10)
        sign, logdet = np.linalg.slogdet(jet.hess)
        assert sign > 0
        assert jet.log_det == pytest.approx(logdet, abs=1e-12)


def test_moment_coordinates_is_gradient_map():
    u = QuadraticPotential([[2.0, 0.0], [0.0, 4.0]], [0.5, 0.0])
    y = moment_coordinates(u, [1.0, 1.0])
    np.testing.assert_allclose(y, [2.5, 4.0], atol=1e-15)
    e = Exp1DPotential()
    assert moment_coordinates(e, [0.0])[0] == pytest.approx(-1.0)


# ---------------------------------------------------------------------------
# domains, errors, constructors
# ---------------------------------------------------------------------------


def test_domain_membership_is_strict():
    box = AffineDomain.box([(0.0, 1.0), (-1.0, 1.0)])
    assert box.contains([0.5, 0.0])
    assert not box.contains([0.0, 0.0])  # boundary excluded
    assert not box.contains([0.5, 1.0])
    ball = AffineDomain.ball([0.0, 0.0], 2.0)
    assert ball.contains([1.9, 0.0])
    assert not ball.contains([2.0, 0.0])
    assert ball.boundary_distance([1.0, 0.0]) == pytest.approx(1.0)


def test_domain_construction_rejects_bad_input():
    with pytest.raises(InvalidParams):
        AffineDomain.box([(1.0, 1.0)])
    with pytest.raises(InvalidParams):
        AffineDomain.ball([0.0], 0.0)


def test_point_outside_domain_raises():
    u = XLogX1DPotential(K=1.0)
    with pytest.raises(PointOutsideDomain):
        evaluate_jet(u, [-1.0], order=2)
    with pytest.raises(PointOutsideDomain):
        evaluate_jet(u, [-2.0], order=2)


def test_unsupported_order_raises():
    u = Exp1DPotential()
    with pytest.raises(OrderUnsupported):
        evaluate_jet(u, [0.0], order=6)


def test_degenerate_hessian_raises():
    u = PolynomialPotential({(4,): 1.0}, n=1)  # u = x^4, u''(0) = 0
    with pytest.raises(HessianNotPositiveDefinite):
        evaluate_jet(u, [0.0], order=2)
    with pytest.raises(InvalidParams):
        QuadraticPotential([[1.0, 0.0], [0.0, -0.5]])


def test_builtin_family_rejects_unknown():
    with pytest.raises(InvalidParams):
        builtin_family("cubic", {})
    with pytest.raises(InvalidParams):
        builtin_family("product", {"factors": [{"name": "quadratic", "params": {"A": [[1, 0], [0, 1]]}}]})


def test_weight_data_validation_and_comparison():
    w = WeightData(v=[1.0], xi=[0.0], c=0.0)
    assert w.close_to(WeightData(v=[1.0], xi=[0.0], c=0.0))
    assert not w.close_to(WeightData(v=[2.0], xi=[0.0], c=0.0))
    assert not w.close_to(None)
    with pytest.raises(InvalidParams):
        WeightData(v=[1.0, 2.0], xi=[0.0], c=0.0)
    cat = WeightData.concatenate([w, WeightData(v=[0.0], xi=[-1.0], c=0.5)])
    assert cat.n == 2 and cat.c == pytest.approx(0.5)


def test_sampling_is_seed_deterministic():
    bounds = [(-1.0, 1.0), (0.0, 2.0)]
    a = sample_box_points(bounds, 5, np.random.default_rng(0))
    b = sample_box_points(bounds, 5, np.random.default_rng(0))
    np.testing.assert_array_equal(a, b)
    assert np.all(a[:, 0] > -1) and np.all(a[:, 1] < 2)
    with pytest.raises(InvalidParams):
        sample_box_points([(-math.inf, 0.0)], 3, np.random.default_rng(0))
