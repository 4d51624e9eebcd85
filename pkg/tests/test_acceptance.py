"""Headline acceptance checks, one test per guarantee.

Each test enforces the package's advertised tolerances end to end on the
certified potential families and prints one line with the measured numbers
(visible with ``pytest -v -s``).  These checks are deliberately redundant
with the per-module unit tests: they run the user-facing claims in one
place, at the promised accuracy, with runtime ceilings where speed is part
of the claim.
"""

import time

import numpy as np
import pytest

from hessianlab.curvature import (
    curvature_bundle,
    curvature_oracle,
    metric_grid_from_field,
    scalar,
    scalar_refined,
)
from hessianlab.gridfield import sample_to_grid
from hessianlab.masolver import MAProblem, max_nodal_error, solve_dirichlet
from hessianlab.potential import (
    Exp1DPotential,
    PolynomialPotential,
    ProductPotential,
    QuadraticPotential,
    SumPotential,
    WeightData,
    XLogX1DPotential,
    sample_box_points,
)
from hessianlab.rigidity import (
    feasible_radius,
    liouville_scan,
    mean_curvature_bound_check,
    quadratic_rigidity_deviation,
    radial_scan,
)
from hessianlab.soliton import (
    bakry_emery,
    bochner_check,
    differential_identity_residual,
    sigma,
)
from hessianlab.toric import assemble_sample, darboux_check, flat_model_check

# Certified families with interior sampling boxes (the xlogx axes stay away
# from the metric-degenerate wall at x = -K).
FAMILIES = {
    "quadratic2": (
        QuadraticPotential([[2.0, 0.5], [0.5, 1.0]], [0.1, -0.2]),
        [[-1.0, 1.0], [-1.0, 1.0]],
    ),
    "exp1d": (Exp1DPotential(1.0), [[-1.0, 1.0]]),
    "xlogx1d": (XLogX1DPotential(1.0), [[-0.8, 1.0]]),
    "product2": (
        ProductPotential([Exp1DPotential(1.0), XLogX1DPotential(1.0)]),
        [[-1.0, 1.0], [-0.8, 1.0]],
    ),
    "product3": (
        ProductPotential(
            [Exp1DPotential(1.0), XLogX1DPotential(1.0), Exp1DPotential(2.0, 0.5)]
        ),
        [[-1.0, 1.0], [-0.8, 1.0], [-0.5, 0.5]],
    ),
}

NONQUADRATIC = ("exp1d", "xlogx1d", "product2", "product3")


def convex_quartic_2d():
    return PolynomialPotential(
        {(2, 0): 0.5, (0, 2): 0.5, (4, 0): 0.05, (0, 4): 0.05, (2, 2): 0.125},
        n=2,
    )


def test_01_bakry_emery_positivity_identity():
    """Ric + Hess_g(phi) equals the manifestly PSD quartic form, eigenvalues
    stay nonnegative: 100 seeded points per family, identity to 1e-8,
    eigenvalue floor -1e-8, under 10 seconds."""
    t0 = time.monotonic()
    rng = np.random.default_rng(11)
    worst_gap, worst_eig = 0.0, np.inf
    for name, (field, box) in FAMILIES.items():
        weights = field.certified_weights
        for p in sample_box_points(box, 100, rng):
            ric_phi, rhs = bakry_emery(field.jet(p, 3), weights)
            gap = float(np.max(np.abs(ric_phi - rhs)))
            eig = float(np.linalg.eigvalsh(ric_phi)[0])
            assert gap < 1e-8, f"{name} at {p}: identity gap {gap}"
            assert eig >= -1e-8, f"{name} at {p}: Ric_phi eigenvalue {eig}"
            worst_gap = max(worst_gap, gap)
            worst_eig = min(worst_eig, eig)
    elapsed = time.monotonic() - t0
    assert elapsed < 10.0, f"took {elapsed:.1f}s, promised < 10s"
    print(
        f"PASS 1 Bakry-Emery identity: worst gap {worst_gap:.2e}, "
        f"min eigenvalue {worst_eig:.2e}, {elapsed:.2f}s"
    )


def test_02_curvature_closed_forms_match_oracle():
    """Closed-form curvature of a grid-sampled non-product quartic matches
    the generic finite-difference Levi-Civita oracle to 10*h^2 at
    h in {1/32, 1/64}, converging at second order, under 30 seconds."""
    t0 = time.monotonic()
    u = convex_quartic_2d()
    pts = [np.array(p) for p in
           [(0.25, -0.125), (-0.375, 0.25), (0.5, 0.125), (0.0, -0.5)]]
    errs = []
    for h in (1 / 32, 1 / 64):
        shape = (int(1.5 / h) + 1, int(1.5 / h) + 1)
        origin, spacing = [-0.75, -0.75], [h, h]
        grid = sample_to_grid(u, origin, spacing, shape)
        metric = metric_grid_from_field(u, origin, spacing, shape)
        worst = 0.0
        for x in pts:
            ref = curvature_bundle(grid.jet(x, 3))
            got = curvature_oracle(metric, x)
            worst = max(
                worst,
                float(np.max(np.abs(ref.christoffel - got.christoffel))),
                float(np.max(np.abs(ref.riemann - got.riemann))),
                float(np.max(np.abs(ref.ricci - got.ricci))),
                abs(ref.scalar - got.scalar),
            )
        assert worst <= 10 * h**2, f"h={h}: error {worst} > 10h^2"
        errs.append(worst)
    order = float(np.log2(errs[0] / errs[1]))
    assert order == pytest.approx(2.0, abs=0.3), f"observed order {order}"
    elapsed = time.monotonic() - t0
    assert elapsed < 30.0, f"took {elapsed:.1f}s, promised < 30s"
    print(
        f"PASS 2 curvature vs oracle: errors {errs[0]:.2e}/{errs[1]:.2e}, "
        f"order {order:.2f}, {elapsed:.2f}s"
    )


def test_03_differential_identity_and_refined_scalar():
    """The contracted-third-derivative identity and the refined scalar
    curvature hold to 1e-9 on every certified family (100 points each), and
    both residuals scale linearly in an off-equation perturbation."""
    rng = np.random.default_rng(12)
    worst_id, worst_sc = 0.0, 0.0
    for name, (field, box) in FAMILIES.items():
        weights = field.certified_weights
        for p in sample_box_points(box, 100, rng):
            jet = field.jet(p, 3)
            rid = float(np.max(np.abs(differential_identity_residual(jet, weights))))
            rsc = abs(scalar(jet) - scalar_refined(jet, weights))
            assert rid < 1e-9, f"{name} at {p}: identity residual {rid}"
            assert rsc < 1e-9, f"{name} at {p}: refined scalar residual {rsc}"
            worst_id = max(worst_id, rid)
            worst_sc = max(worst_sc, rsc)

    # linear response: adding eps * gentle quartic must scale residuals by
    # 10x between eps = 1e-3 and 1e-2 (ratio 10 +- 2)
    probes = [
        (Exp1DPotential(1.0), {(4,): 0.05}, [[-1.0, 1.0]]),
        (
            QuadraticPotential([[2.0, 0.5], [0.5, 1.0]], [0.1, -0.2]),
            {(4, 0): 0.05, (0, 4): 0.05},
            [[-1.0, 1.0], [-1.0, 1.0]],
        ),
    ]
    ratios = []
    for base, bump, box in probes:
        weights = base.certified_weights
        pts = sample_box_points(box, 20, np.random.default_rng(13))
        res = {}
        for eps in (1e-3, 1e-2):
            terms = {k: eps * c for k, c in bump.items()}
            pert = SumPotential([base, PolynomialPotential(terms, n=base.n)])
            res[eps] = max(
                float(np.max(np.abs(differential_identity_residual(pert.jet(p, 3), weights))))
                for p in pts
            )
        assert res[1e-3] > 1e-6, "perturbation residual should be clearly nonzero"
        ratio = res[1e-2] / res[1e-3]
        assert ratio == pytest.approx(10.0, abs=2.0), f"scaling ratio {ratio}"
        ratios.append(ratio)
    print(
        f"PASS 3 differential identity: residuals {worst_id:.2e}/{worst_sc:.2e}, "
        f"perturbation ratios {ratios[0]:.2f}, {ratios[1]:.2f}"
    )


def test_04_bochner_inequality_slack():
    """Delta_phi sigma - sigma^2/(2n) is nonnegative (floor -1e-7) at 100
    points per certified family; for the 1D exponential family at x = 0 the
    slack is exactly 1/2 (to 1e-9)."""
    rng = np.random.default_rng(14)
    worst = np.inf
    for name, (field, box) in FAMILIES.items():
        weights = field.certified_weights
        for p in sample_box_points(box, 100, rng):
            slack = bochner_check(field.jet(p, 5), weights).slack
            assert slack >= -1e-7, f"{name} at {p}: Bochner slack {slack}"
            worst = min(worst, slack)
    exp = Exp1DPotential(1.0)
    slack0 = bochner_check(exp.jet([0.0], 5), exp.certified_weights).slack
    assert abs(slack0 - 0.5) <= 1e-9, f"slack at 0 is {slack0}, expected 1/2"
    print(f"PASS 4 Bochner inequality: min slack {worst:.3e}, exp1d@0 {slack0!r}")


def test_05_solver_second_order_convergence():
    """The damped-Newton Dirichlet solver recovers the 1D exponential and a
    2D product solution with sup error <= 1.0 * h^2, empirical order 2 +- 0.3
    over h in {1/16, 1/32, 1/64, 1/128}, <= 25 Newton steps, under 60 s."""
    t0 = time.monotonic()
    hs = [1 / 16, 1 / 32, 1 / 64, 1 / 128]
    cases = {
        "exp 1D": (Exp1DPotential(1.0), [[0.0, 1.0]]),
        "product 2D": (
            ProductPotential([Exp1DPotential(1.0), XLogX1DPotential(1.0)]),
            [[0.0, 1.0], [0.0, 1.0]],
        ),
    }
    summary = []
    for label, (field, bounds) in cases.items():
        errs = []
        for h in hs:
            problem = MAProblem(bounds, h, field.certified_weights, field)
            sol = solve_dirichlet(problem)
            assert sol.converged
            assert sol.iterations <= 25, f"{label} h={h}: {sol.iterations} steps"
            err = max_nodal_error(sol, field)
            assert err <= 1.0 * h**2, f"{label} h={h}: error {err} > h^2"
            errs.append(err)
        order = float(np.polyfit(np.log(hs), np.log(errs), 1)[0])
        assert order == pytest.approx(2.0, abs=0.3), f"{label}: order {order}"
        summary.append(f"{label} err(1/128)={errs[-1]:.2e} order={order:.2f}")
    elapsed = time.monotonic() - t0
    assert elapsed < 60.0, f"took {elapsed:.1f}s, promised < 60s"
    print(f"PASS 5 solver convergence: {'; '.join(summary)}, {elapsed:.2f}s")


def test_06_weighted_mean_curvature_comparison():
    """Along 8 seeded geodesic rays per family the weighted mean curvature
    is non-increasing (slack 10*step^2) and obeys the (n + 4C - 1)/r upper
    bound; in the flat 2D case the mean curvature equals 1/r to 1e-6 on
    r in [0.1, 1]."""
    step = 1e-3
    rng = np.random.default_rng(2026)
    bases = {
        "quadratic2": [0.3, -0.2],
        "exp1d": [0.0],
        "xlogx1d": [0.0],
        "product2": [0.0, 0.0],
    }
    worst_viol, worst_ratio = 0.0, -np.inf
    for name, base in bases.items():
        field = FAMILIES[name][0]
        for _ in range(8):
            direction = rng.standard_normal(len(base))
            report = radial_scan(
                field, base, direction, target_radius=0.8, step=step
            )
            assert report.is_monotone(10 * step**2), (
                f"{name} ray {direction}: m_phi increases by "
                f"{report.max_monotonicity_violation()}"
            )
            bound = mean_curvature_bound_check(report)
            assert bound.holds, f"{name} ray {direction}: bound ratio {bound.max_ratio}"
            worst_viol = max(worst_viol, report.max_monotonicity_violation())
            worst_ratio = max(worst_ratio, bound.max_ratio)

    flat = QuadraticPotential([[2.0, 0.5], [0.5, 1.0]])
    report = radial_scan(
        flat, [0.0, 0.0], [0.3, 1.0], target_radius=1.0, step=step, record_every=10
    )
    errs = [
        abs(s.mean_curvature - 1.0 / s.r)
        for s in report.samples
        if 0.1 <= s.r <= 1.0
    ]
    assert len(errs) > 50
    assert max(errs) <= 1e-6, f"flat m vs 1/r deviates by {max(errs)}"
    print(
        f"PASS 6 mean curvature comparison: worst increase {worst_viol:.1e}, "
        f"worst bound ratio {worst_ratio:.4f}, flat |m - 1/r| {max(errs):.1e}"
    )


def test_07_rigidity_dichotomy_scans():
    """Quadratic potentials are exactly rigid (sigma = 0, quadratic fit
    deviation <= 1e-12); every non-quadratic certified family shows finite
    arc-length truncation in some direction and sigma(p0)*R products that do
    not grow (last <= 2x first); the 1D exponential ray toward +inf has
    finite total arc length 2, recovered to 1e-3."""
    # (a) rigid side of the dichotomy
    field, box = FAMILIES["quadratic2"]
    rng = np.random.default_rng(17)
    pts = sample_box_points(box, 100, rng)
    sig = max(sigma(field.jet(p, 3)) for p in pts)
    assert sig == 0.0, f"quadratic sigma should vanish exactly, got {sig}"
    fit = quadratic_rigidity_deviation(field, pts)
    assert fit.deviation <= 1e-12, f"quadratic fit deviation {fit.deviation}"

    # (b) non-rigid side: incompleteness and scale-test products
    liouville_bases = {
        "exp1d": [0.0],
        "xlogx1d": [0.0],
        "product2": [0.1, 0.4],
        "product3": [0.1, 0.4, 0.0],
    }
    for name in NONQUADRATIC:
        fam = FAMILIES[name][0]
        base = liouville_bases[name]
        n = len(base)
        truncations = []
        for axis in range(n):
            for sign in (1.0, -1.0):
                d = np.zeros(n)
                d[axis] = sign
                rep = radial_scan(
                    fam, base, d, target_radius=3.0, step=1e-3, record_every=10**9
                )
                truncations.append(rep.truncated)
        assert any(truncations), f"{name}: no incomplete direction found"
        lio = liouville_scan(fam, base, [1.2, 1.5, 1.8], step=1e-3)
        prods = [e.product for e in lio.entries]
        assert prods[-1] <= 2.0 * prods[0], f"{name}: products grow {prods}"

    # (c) the exponential ray dies at arc length exactly 2
    reach = feasible_radius(Exp1DPotential(1.0), [0.0], 3.0, step=5e-4)
    assert abs(reach - 2.0) <= 1e-3, f"exp1d reach {reach}, expected 2"
    print(
        f"PASS 7 rigidity dichotomy: quadratic deviation {fit.deviation:.1e}, "
        f"truncation found for all non-quadratic families, exp1d reach {reach:.4f}"
    )


def test_08_toric_reconstruction_checks():
    """Reassembled Kahler structure satisfies J^2 = -1 to 1e-12 with a
    positive definite metric and soliton residual < 1e-10 on certified
    families; deliberately shifting the linear weight v by delta moves the
    residual by exactly delta (unit coefficient, no truncation error)."""
    rng = np.random.default_rng(15)
    worst_j, worst_res = 0.0, 0.0
    for name, (field, box) in FAMILIES.items():
        weights = field.certified_weights
        for p in sample_box_points(box, 50, rng):
            samp = assemble_sample(field.jet(p, 3), weights=weights)
            rep = darboux_check(samp, tol=1e-12)
            assert rep.passed, f"{name} at {p}: {rep}"
            assert rep.metric_min_eigenvalue > 0.0
            res = float(np.max(np.abs(samp.soliton_residual)))
            assert res < 1e-10, f"{name} at {p}: soliton residual {res}"
            worst_j = max(worst_j, rep.j_squared_deviation)
            worst_res = max(worst_res, res)

    # negative control: wrong v shows up as exactly delta * dx at x = 0
    exp = Exp1DPotential(1.0)
    jet0 = exp.jet([0.0], 3)
    res0 = differential_identity_residual(jet0, exp.certified_weights)
    for delta in (1.0, 0.5, -0.25):
        wrong = WeightData(
            v=(1.0 + delta,), xi=(0.0,), c=exp.certified_weights.c
        )
        res1 = differential_identity_residual(jet0, wrong)
        coeff = float((res1 - res0)[0]) / delta
        assert coeff == 1.0, f"wrong-v coefficient {coeff!r} for delta={delta}"
    print(
        f"PASS 8 toric reconstruction: worst J^2 deviation {worst_j:.1e}, "
        f"worst residual {worst_res:.1e}, wrong-v coefficient exactly 1"
    )


def test_09_flat_model_classification():
    """Quadratic potentials classify as the flat model with zero
    third-derivative energy, both analytically and through the solver:
    a solved quadratic Dirichlet problem still classifies flat within
    10*h^2."""
    rng = np.random.default_rng(19)
    quads = [
        QuadraticPotential([[2.0, 0.5], [0.5, 1.0]], [0.1, -0.2]),
        QuadraticPotential([[1.5]]),
        QuadraticPotential(np.diag([1.0, 2.0, 3.0])),
    ]
    for q in quads:
        pts = sample_box_points([[-1.0, 1.0]] * q.n, 25, rng)
        rep = flat_model_check(q, pts)
        assert rep.verdict == "flat (C*)^n model"
        assert rep.variation == 0.0

    h = 1 / 16
    quad = quads[0]
    problem = MAProblem(
        [[0.0, 1.0], [0.0, 1.0]], h, quad.certified_weights, quad
    )
    sol = solve_dirichlet(problem)
    assert sol.converged
    grid = sol.grid_potential()
    nodes = [grid.node_point((i, j)) for i in (3, 6, 9, 13) for j in (4, 8, 12)]
    rep = flat_model_check(grid, nodes, tol=10 * h**2)
    assert rep.is_flat_model, f"solved quadratic variation {rep.variation}"
    assert rep.verdict == "flat (C*)^n model"
    print(
        f"PASS 9 flat model: analytic variation 0, "
        f"solver variation {rep.variation:.2e} <= {10 * h ** 2:.2e}"
    )
