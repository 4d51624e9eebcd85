"""Curvature of Hessian metrics g_ij = u_{,ij}, in closed form and via a
generic finite-difference oracle.

For a Hessian metric the Levi-Civita data collapses to algebra in the
derivative tensors of u (indices raised with g^{ij} = inverse Hessian):

    Γᵏᵢⱼ   = ½ gᵏˡ u_{,ijl}
    Rmᵢⱼₖₗ = ¼ gᵖq ( u_{,ilp} u_{,jkq} − u_{,jlp} u_{,ikq} )
    Ricᵢₖ  = gʲˡ Rmᵢⱼₖₗ
    s      = ¼ ( |u_{,ijk}|²_g − |gᵐⁿ u_{,imn}|²_g )

with the curvature sign fixed by Rm(e₁,e₂,e₁,e₂) > 0 on the round sphere.
When the potential solves the weighted Monge-Ampere equation with weights
(v, xi, c), the contracted third derivatives obey
gᵖq u_{,pqi} = u_{,iq} xi^q − v_i, giving refined forms of the same
quantities; on certified analytic jets the two routes are compared and a
disagreement raises RefinedFormMismatch.

The oracle (`curvature_oracle`) never uses the Hessian structure: it applies
textbook Levi-Civita formulas to a sampled metric field with second-order
central differences, and exists to cross-check the closed forms.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import (
    InsufficientMargin,
    InvalidParams,
    RefinedFormMismatch,
    UncertifiedWeights,
)
from .potential import (
    AnalyticPotential,
    JetEvaluation,
    PotentialField,
    ScalarJet,
    WeightData,
    _readonly,
)

#: agreement demanded between refined and general forms on exact certified jets
REFINED_AGREEMENT_TOL = 1e-9


@dataclass(frozen=True)
class CurvatureBundle:
    """Christoffel symbols (indexed [k, i, j] = Γᵏᵢⱼ), lowered curvature
    tensor Rm_{ijkl}, Ricci tensor and scalar curvature at one point."""

    point: np.ndarray
    christoffel: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: float

    def to_json(self) -> str:
        payload = {
            "point": self.point.tolist(),
            "christoffel": self.christoffel.tolist(),
            "riemann": self.riemann.tolist(),
            "ricci": self.ricci.tolist(),
            "scalar": self.scalar,
        }
        return json.dumps(payload, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "CurvatureBundle":
        d = json.loads(text)
        return CurvatureBundle(
            point=np.asarray(d["point"], dtype=float),
            christoffel=np.asarray(d["christoffel"], dtype=float),
            riemann=np.asarray(d["riemann"], dtype=float),
            ricci=np.asarray(d["ricci"], dtype=float),
            scalar=float(d["scalar"]),
        )


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------


def christoffel(jet: JetEvaluation) -> np.ndarray:
    """Γᵏᵢⱼ = ½ gᵏˡ u_{,ijl}, returned with the upper index first."""
    jet.require(3)
    return 0.5 * np.einsum("lk,ijl->kij", jet.inverse_hess, jet.third)


def riemann(jet: JetEvaluation) -> np.ndarray:
    """Lowered curvature tensor of the Hessian metric."""
    jet.require(3)
    A, T = jet.inverse_hess, jet.third
    first = np.einsum("pq,ilp,jkq->ijkl", A, T, T)
    second = np.einsum("pq,jlp,ikq->ijkl", A, T, T)
    return 0.25 * (first - second)


def contracted_third(jet: JetEvaluation) -> np.ndarray:
    """w_i = gᵖq u_{,pqi}, the metric trace of the third derivatives."""
    jet.require(3)
    return np.einsum("pq,pqi->i", jet.inverse_hess, jet.third)


def sigma_invariant(jet: JetEvaluation) -> float:
    """σ = |u_{,ijk}|²_g with all three indices raised by g^{-1}."""
    jet.require(3)
    A, T = jet.inverse_hess, jet.third
    return float(np.einsum("ip,jq,kr,ijk,pqr->", A, A, A, T, T))


def ricci(jet: JetEvaluation) -> np.ndarray:
    """Ricci tensor Ricᵢₖ = gʲˡ Rmᵢⱼₖₗ.

    On exact jets of certified fields the refined (equation-reduced) form is
    evaluated as well and must agree to REFINED_AGREEMENT_TOL.
    """
    ric = np.einsum("jl,ijkl->ik", jet.inverse_hess, riemann(jet))
    if jet.exact and jet.certified_weights is not None:
        ref = ricci_refined(jet, jet.certified_weights)
        err = float(np.max(np.abs(ric - ref), initial=0.0))
        if err > REFINED_AGREEMENT_TOL * max(1.0, float(np.max(np.abs(ric), initial=0.0))):
            raise RefinedFormMismatch(
                f"refined Ricci deviates from the general form by {err:.3e}; "
                "the field's weight certification looks wrong"
            )
    return ric


def ricci_refined(jet: JetEvaluation, weights: WeightData) -> np.ndarray:
    """Ricci tensor using the Monge-Ampere relation to eliminate traces:

    Ricᵢⱼ = ¼ gᵖq gᵐⁿ u_{,ipm} u_{,jqn} − ¼ ( u_{,ijp} xi^p − gᵖq u_{,ijq} v_p ).
    """
    _require_certified(jet, weights)
    A, T = jet.inverse_hess, jet.third
    quart = 0.25 * np.einsum("pq,mn,ipm,jqn->ij", A, A, T, T)
    drift = 0.25 * (np.einsum("ijp,p->ij", T, weights.xi)
                    - np.einsum("pq,ijq,p->ij", A, T, weights.v))
    return quart - drift


def scalar(jet: JetEvaluation) -> float:
    """Scalar curvature s = ¼ (σ − |w|²_g), w_i = gᵐⁿ u_{,imn}.

    Agrees with the metric trace of the Ricci tensor; on certified exact
    jets the refined form is cross-checked.
    """
    A = jet.inverse_hess
    w = contracted_third(jet)
    s = 0.25 * (sigma_invariant(jet) - float(np.einsum("ij,i,j->", A, w, w)))
    if jet.exact and jet.certified_weights is not None:
        ref = scalar_refined(jet, jet.certified_weights)
        if abs(s - ref) > REFINED_AGREEMENT_TOL * max(1.0, abs(s)):
            raise RefinedFormMismatch(
                f"refined scalar curvature {ref!r} deviates from general form {s!r}"
            )
    return s


def scalar_refined(jet: JetEvaluation, weights: WeightData) -> float:
    """s = ¼ (σ − |u_{,ij} xi^j − v_i|²_g), valid on equation solutions."""
    _require_certified(jet, weights)
    m = jet.hess @ weights.xi - weights.v
    return 0.25 * (sigma_invariant(jet)
                   - float(np.einsum("ij,i,j->", jet.inverse_hess, m, m)))


def christoffel_trace_refined(jet: JetEvaluation, weights: WeightData) -> np.ndarray:
    """Γₖᵢᵏ = ½ (u_{,ij} xi^j − v_i) on equation solutions."""
    _require_certified(jet, weights)
    return 0.5 * (jet.hess @ weights.xi - weights.v)


def curvature_bundle(jet: JetEvaluation) -> CurvatureBundle:
    return CurvatureBundle(
        point=_readonly(jet.point),
        christoffel=_readonly(christoffel(jet)),
        riemann=_readonly(riemann(jet)),
        ricci=_readonly(ricci(jet)),
        scalar=scalar(jet),
    )


def _require_certified(jet: JetEvaluation, weights: WeightData) -> None:
    if jet.certified_weights is None:
        raise UncertifiedWeights(
            "refined curvature forms need a field with certified weights"
        )
    if not weights.close_to(jet.certified_weights, tol=0.0):
        raise UncertifiedWeights(
            "supplied weights differ from the field's certified weights"
        )


# ---------------------------------------------------------------------------
# covariant Hessian and weighted Laplacian of auxiliary scalars
# ---------------------------------------------------------------------------


def hessian_of(jet_u: JetEvaluation, f: ScalarJet) -> np.ndarray:
    """Covariant Hessian (∇²f)ᵢⱼ = f_{,ij} − Γᵏᵢⱼ f_{,k}."""
    return f.hess - np.einsum("kij,k->ij", christoffel(jet_u), f.grad)


def laplace(jet_u: JetEvaluation, f: ScalarJet) -> float:
    """Laplace-Beltrami Δf = gⁱʲ (∇²f)ᵢⱼ."""
    return float(np.einsum("ij,ij->", jet_u.inverse_hess, hessian_of(jet_u, f)))


def weight_gradient(jet: JetEvaluation, weights: WeightData) -> np.ndarray:
    """Coordinate gradient of the weight function φ = ½(u_{,p} xi^p + v_q x^q)."""
    jet.require(2)
    return 0.5 * (jet.hess @ weights.xi + weights.v)


def laplace_weighted(
    jet_u: JetEvaluation, f: ScalarJet, weights: WeightData
) -> float:
    """Weighted (drift) Laplacian Δ_φ f = Δf − ⟨∇φ, ∇f⟩_g.

    Computed along the general route (covariant Hessian trace).  On exact
    jets of fields certified for `weights`, the refined trace route

        Δf = gᵖq f_{,pq} − ½ xi^p f_{,p} + ½ gᵖq v_p f_{,q}

    is evaluated as a cross-check.
    """
    inner = float(np.einsum("pq,p,q->", jet_u.inverse_hess,
                            weight_gradient(jet_u, weights), f.grad))
    general = laplace(jet_u, f) - inner
    if jet_u.exact and jet_u.certified_weights is not None \
            and weights.close_to(jet_u.certified_weights, tol=0.0):
        refined = laplace_weighted_refined(jet_u, f, weights)
        if abs(general - refined) > REFINED_AGREEMENT_TOL * max(1.0, abs(general)):
            raise RefinedFormMismatch(
                f"weighted Laplacian routes disagree: {general!r} vs {refined!r}"
            )
    return general


def laplace_weighted_refined(
    jet_u: JetEvaluation, f: ScalarJet, weights: WeightData
) -> float:
    """Δ_φ f via the equation-reduced trace form (certified fields only)."""
    _require_certified(jet_u, weights)
    A = jet_u.inverse_hess
    lap = (float(np.einsum("pq,pq->", A, f.hess))
           - 0.5 * float(weights.xi @ f.grad)
           + 0.5 * float(np.einsum("pq,p,q->", A, weights.v, f.grad)))
    inner = float(np.einsum("pq,p,q->", A, weight_gradient(jet_u, weights), f.grad))
    return lap - inner


# ---------------------------------------------------------------------------
# generic finite-difference oracle
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MetricGrid:
    """Samples of a Riemannian metric on a uniform grid: values has shape
    (m_1, ..., m_n, n, n) with symmetric positive matrices."""

    origin: np.ndarray
    spacing: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        origin = np.asarray(self.origin, dtype=float).reshape(-1)
        spacing = np.asarray(self.spacing, dtype=float).reshape(-1)
        values = np.asarray(self.values, dtype=float)
        n = origin.shape[0]
        if values.ndim != n + 2 or values.shape[-2:] != (n, n):
            raise InvalidParams("metric grid values must have shape grid + (n, n)")
        if spacing.shape != (n,) or not np.all(spacing > 0):
            raise InvalidParams("bad metric grid spacing")
        object.__setattr__(self, "origin", _readonly(origin))
        object.__setattr__(self, "spacing", _readonly(spacing))
        object.__setattr__(self, "values", _readonly(values))

    @property
    def n(self) -> int:
        return self.origin.shape[0]

    @property
    def shape(self) -> tuple:
        return self.values.shape[:-2]

    def node_index(self, point) -> tuple:
        x = np.asarray(point, dtype=float).reshape(-1)
        rel = (x - self.origin) / self.spacing
        idx = np.rint(rel)
        if np.max(np.abs(rel - idx)) > 1e-8:
            raise InvalidParams("oracle evaluation point must be a grid node")
        return tuple(int(i) for i in idx)


def metric_grid_from_field(
    field: PotentialField, origin, spacing, shape
) -> MetricGrid:
    """Sample the Hessian metric of a potential on a uniform grid."""
    origin = np.asarray(origin, dtype=float)
    spacing = np.asarray(spacing, dtype=float)
    shape = tuple(int(m) for m in shape)
    n = origin.shape[0]
    vals = np.empty(shape + (n, n))
    analytic = isinstance(field, AnalyticPotential)
    for idx in np.ndindex(*shape):
        x = origin + spacing * np.array(idx, dtype=float)
        vals[idx] = field.derivative_tensor(x, 2) if analytic else field.jet(x, 2).hess
    return MetricGrid(origin=origin, spacing=spacing, values=vals)


def _christoffel_at_node(metric: MetricGrid, idx: tuple) -> np.ndarray:
    """Levi-Civita Γᵏᵢⱼ from central differences of the metric samples."""
    n = metric.n
    g = metric.values[idx]
    ginv = np.linalg.inv(g)
    dg = np.empty((n, n, n))  # dg[a, i, j] = ∂_a g_ij
    for a in range(n):
        up = list(idx); up[a] += 1
        dn = list(idx); dn[a] -= 1
        dg[a] = (metric.values[tuple(up)] - metric.values[tuple(dn)]) / (2 * metric.spacing[a])
    # Γᵏᵢⱼ = ½ gᵏˡ (∂_i g_jl + ∂_j g_il − ∂_l g_ij); dg[a] holds ∂_a g
    term = dg + dg.transpose(1, 0, 2) - dg.transpose(1, 2, 0)
    return 0.5 * np.einsum("kl,ijl->kij", ginv, term)


def curvature_oracle(metric: MetricGrid, point) -> CurvatureBundle:
    """Curvature from metric samples alone (no Hessian structure).

    Uses second-order central differences of the sampled metric for Γ, then
    of Γ for the curvature tensor

        Rᵖ_σμν = ∂_μ Γᵖ_νσ − ∂_ν Γᵖ_μσ + Γᵖ_μλ Γˡ... (standard formula)

    lowering the first index with the metric at the point.  The evaluation
    point must be a grid node with two nodes of margin on every axis.
    """
    idx = metric.node_index(point)
    n = metric.n
    for a, (i, m) in enumerate(zip(idx, metric.shape)):
        if i - 2 < 0 or i + 2 > m - 1:
            raise InsufficientMargin(
                f"curvature oracle needs 2 nodes of margin on axis {a}"
            )
    gamma_c = _christoffel_at_node(metric, idx)
    dgamma = np.empty((n, n, n, n))  # dgamma[m, k, i, j] = ∂_m Γᵏᵢⱼ
    for a in range(n):
        up = list(idx); up[a] += 1
        dn = list(idx); dn[a] -= 1
        dgamma[a] = (_christoffel_at_node(metric, tuple(up))
                     - _christoffel_at_node(metric, tuple(dn))) / (2 * metric.spacing[a])
    # Rᵖ_σμν = ∂_μ Γᵖ_νσ − ∂_ν Γᵖ_μσ + Γᵖ_μλ Γˡ_νσ − Γᵖ_νλ Γˡ_μσ
    riem_up = (np.einsum("mpns->psmn", dgamma)
               - np.einsum("npms->psmn", dgamma)
               + np.einsum("pml,lns->psmn", gamma_c, gamma_c)
               - np.einsum("pnl,lms->psmn", gamma_c, gamma_c))
    g = metric.values[idx]
    rm = np.einsum("ip,pjkl->ijkl", g, riem_up)
    ginv = np.linalg.inv(g)
    ric = np.einsum("jl,ijkl->ik", ginv, rm)
    s = float(np.einsum("ik,ik->", ginv, ric))
    x = metric.origin + metric.spacing * np.array(idx, dtype=float)
    return CurvatureBundle(point=_readonly(x), christoffel=_readonly(gamma_c),
                           riemann=_readonly(rm), ricci=_readonly(ric), scalar=s)
