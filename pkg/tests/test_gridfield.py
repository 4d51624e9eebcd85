"""Finite-difference stencils and grid-sampled potentials."""

import numpy as np
import pytest

from hessianlab.errors import InsufficientMargin, InvalidParams, OrderUnsupported, PointOutsideDomain
from hessianlab.gridfield import (
    GridPotential,
    fd_weights,
    read_grid_file,
    sample_to_grid,
    stencil_margin,
    stencil_width,
    write_grid_file,
)
from hessianlab.potential import Exp1DPotential, ProductPotential, XLogX1DPotential


# textbook central-difference coefficients, for cross-checking fd_weights
CLASSICAL = {
    (1, 2): [-0.5, 0.0, 0.5],
    (2, 2): [1.0, -2.0, 1.0],
    (3, 2): [-0.5, 1.0, 0.0, -1.0, 0.5],
    (4, 2): [1.0, -4.0, 6.0, -4.0, 1.0],
    (1, 4): [1 / 12, -2 / 3, 0.0, 2 / 3, -1 / 12],
    (2, 4): [-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12],
}


@pytest.mark.parametrize("deriv,acc", sorted(CLASSICAL))
def test_fd_weights_reproduce_classical_stencils(deriv, acc):
    half = stencil_width(deriv, acc) // 2
    pts = np.arange(-half, half + 1, dtype=float)
    w = fd_weights(pts, 0.0, deriv)
    np.testing.assert_allclose(w, CLASSICAL[(deriv, acc)], atol=1e-12)


def test_fd_weights_are_exact_on_polynomials():
    # weights of derivative d on m points must be exact for degree < m
    pts = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
    for d in range(4):
        w = fd_weights(pts, 0.3, d)
        for deg in range(5):
            exact = 0.0
            if deg >= d:
                c = 1.0
                for r in range(d):
                    c *= deg - r
                exact = c * 0.3 ** (deg - d)
            assert np.dot(w, pts**deg) == pytest.approx(exact, abs=1e-10)


def test_stencil_margins():
    assert stencil_margin(2, 2) == 1
    assert stencil_margin(3, 2) == 2
    assert stencil_margin(4, 2) == 2
    assert stencil_margin(5, 4) == 4


def grid_exp(h, halfcount, stencil_order=2, center=0.0):
    xs = center + h * np.arange(-halfcount, halfcount + 1)
    return GridPotential([xs[0]], [h], np.exp(-xs), stencil_order)


@pytest.mark.parametrize("stencil_order,orders,hs", [
    (2, (1, 2, 3, 4), (0.05, 0.025, 0.0125)),
    (4, (1, 2, 3, 4, 5), (0.2, 0.1, 0.05)),
])
def test_grid_jets_converge_at_stencil_order(stencil_order, orders, hs):
    """Sampling e^{-x} and re-differentiating shows O(h^p) errors."""
    exact = {k: (-1.0) ** k for k in orders}
    for k in orders:
        errs = []
        for h in hs:
            g = grid_exp(h, 8, stencil_order)
            jet = g.jet([0.0], order=max(orders))
            got = [None, jet.grad[0], jet.hess[0, 0], jet.third[(0,) * 3] if jet.third is not None else None,
                   jet.fourth[(0,) * 4] if jet.fourth is not None else None,
                   jet.fifth[(0,) * 5] if jet.fifth is not None else None][k]
            errs.append(abs(got - exact[k]))
        rate = np.polyfit(np.log(hs), np.log(errs), 1)[0]
        assert rate == pytest.approx(stencil_order, abs=0.3), f"derivative {k}"


def test_grid_jet_reproduces_product_family_at_node():
    u = ProductPotential([Exp1DPotential(), XLogX1DPotential(K=1.0)])
    h = 0.01
    g = sample_to_grid(u, origin=[-0.1, -0.1], spacing=[h, h], shape=(21, 21))
    assert g.certified_weights is not None
    jet = g.jet([0.0, 0.0], order=3)
    ref = u.jet([0.0, 0.0], order=3)
    assert not jet.exact and ref.exact
    np.testing.assert_allclose(jet.hess, ref.hess, atol=20 * h**2)
    np.testing.assert_allclose(jet.third, ref.third, atol=50 * h**2)
    assert jet.log_det == pytest.approx(ref.log_det, abs=20 * h**2)


def test_grid_jet_between_nodes():
    g = grid_exp(0.005, 40)
    x = 0.00125  # quarter-way between nodes
    jet = g.jet([x], order=2)
    assert jet.value == pytest.approx(np.exp(-x), abs=1e-8)
    assert jet.grad[0] == pytest.approx(-np.exp(-x), abs=1e-5)
    # off-node, the top derivative of the jet loses one order: O(h) here
    assert jet.hess[0, 0] == pytest.approx(np.exp(-x), abs=3e-3)


def test_grid_margin_and_order_errors():
    g = grid_exp(0.1, 4)  # nine nodes
    with pytest.raises(OrderUnsupported):
        g.jet([0.0], order=5)  # needs stencil_order=4
    with pytest.raises(InsufficientMargin):
        g.jet([-0.35], order=3)  # node 1 of 9, margin 2 required
    # InsufficientMargin is a domain error as far as callers are concerned
    assert issubclass(InsufficientMargin, PointOutsideDomain)
    with pytest.raises(PointOutsideDomain):
        g.jet([0.5], order=2)  # outside the open grid box
    with pytest.raises(InvalidParams):
        GridPotential([0.0], [0.1], np.zeros((5,)), stencil_order=3)


def test_grid_file_roundtrip(tmp_path):
    u = Exp1DPotential()
    g = sample_to_grid(u, origin=[-0.5], spacing=[0.05], shape=(21,), stencil_order=4)
    path = tmp_path / "field.grid"
    write_grid_file(path, g)
    back = read_grid_file(path)
    np.testing.assert_array_equal(back.values, g.values)
    np.testing.assert_array_equal(back.origin, g.origin)
    np.testing.assert_array_equal(back.spacing, g.spacing)
    assert back.stencil_order == 4
    # header is a single JSON line followed by raw little-endian float64
    with open(path, "rb") as fh:
        header = fh.readline()
        payload = fh.read()
    assert b'"shape": [21]' in header
    assert len(payload) == 21 * 8
    np.testing.assert_array_equal(np.frombuffer(payload, dtype="<f8"), g.values)


def test_grid_file_rejects_corrupt_data(tmp_path):
    path = tmp_path / "bad.grid"
    with open(path, "wb") as fh:
        fh.write(b'{"shape": [4]}\n')
        fh.write(b"\x00" * 16)  # half the bytes missing
    with pytest.raises(InvalidParams):
        read_grid_file(path, origin=[0.0], spacing=[0.1])
