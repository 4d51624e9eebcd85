"""Diagnostics for the weighted Monge-Ampere structure of a potential.

Central objects, for a potential u with weights (v, xi, c):

* equation residual      log det u_{,ij} + v_p x^p − u_{,q} xi^q − c
* identity residual      gᵖq u_{,pqi} + v_i − u_{,iq} xi^q   (gradient of the
  equation residual; vanishes identically on solutions)
* weight function        φ = ½ (u_{,p} xi^p + v_q x^q)
* Bakry-Emery tensor     Ric_φ = Ric + ∇²φ, which on solutions collapses to
  the manifestly positive semidefinite quartic
  ¼ gᵖq gᵏˡ u_{,ipk} u_{,jql}
* σ = |u_{,ijk}|²_g and the Bochner inequality Δ_φ σ ≥ σ²/(2n).

σ is an algebraic function of g⁻¹ and D³u, so its coordinate derivatives are
closed-form contractions of derivatives of u up to order five; that is what
`sigma_scalar_jet` computes, feeding the Bochner check through the same
weighted-Laplacian machinery (general route with the refined trace form as a
cross-check) used everywhere else.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .curvature import (
    hessian_of,
    laplace_weighted,
    ricci,
    sigma_invariant,
    weight_gradient,
)
from .errors import UncertifiedWeights
from .potential import JetEvaluation, ScalarJet, WeightData, _readonly


def ma_residual(jet: JetEvaluation, weights: WeightData) -> float:
    """Pointwise residual of log det u_{,ij} = −v·x + ∇u·xi + c."""
    jet.require(2)
    return float(
        jet.log_det + weights.v @ jet.point - jet.grad @ weights.xi - weights.c
    )


def differential_identity_residual(
    jet: JetEvaluation, weights: WeightData
) -> np.ndarray:
    """r_i = gᵖq u_{,pqi} + v_i − u_{,iq} xi^q (the equation's gradient)."""
    jet.require(3)
    w = np.einsum("pq,pqi->i", jet.inverse_hess, jet.third)
    return w + weights.v - jet.hess @ weights.xi


def weight_function(jet: JetEvaluation, weights: WeightData) -> ScalarJet:
    """φ = ½(u_{,p} xi^p + v_q x^q) with its coordinate gradient and Hessian."""
    jet.require(3)
    value = 0.5 * float(jet.grad @ weights.xi + weights.v @ jet.point)
    grad = weight_gradient(jet, weights)
    hess = 0.5 * np.einsum("ijp,p->ij", jet.third, weights.xi)
    return ScalarJet(value=value, grad=grad, hess=hess)


def bakry_emery(jet: JetEvaluation, weights: WeightData):
    """Return (Ric_φ, quartic right-hand side).

    Ric_φ = Ric + ∇²φ is assembled from the general curvature formulas; the
    right-hand side ¼ gᵖq gᵏˡ u_{,ipk} u_{,jql} is what it must equal on
    solutions of the weighted equation, and is positive semidefinite by
    construction.
    """
    phi = weight_function(jet, weights)
    ric_phi = ricci(jet) + hessian_of(jet, phi)
    A, T = jet.inverse_hess, jet.third
    rhs = 0.25 * np.einsum("pq,kl,ipk,jql->ij", A, A, T, T)
    return ric_phi, rhs


def sigma(jet: JetEvaluation) -> float:
    """σ = |u_{,ijk}|²_g, the squared g-norm of the third derivatives."""
    return sigma_invariant(jet)


def sigma_scalar_jet(jet: JetEvaluation) -> ScalarJet:
    """Coordinate value/gradient/Hessian of x ↦ σ(x).

    Differentiates σ = g^{ip} g^{jq} g^{kr} u_{,ijk} u_{,pqr} through both the
    inverse metric (∂_a g^{ip} = −g^{im} u_{,mna} g^{np}) and the third
    derivatives; needs jets of order five.
    """
    jet.require(5)
    A, T, F, V = jet.inverse_hess, jet.third, jet.fourth, jet.fifth
    # B[i, p, a] = ∂_a g^{ip}
    B = -np.einsum("im,mna,np->ipa", A, T, A)
    # DB[i, p, a, b] = ∂_b ∂_a g^{ip}
    DB = -(
        np.einsum("imb,mna,np->ipab", B, T, A)
        + np.einsum("im,mnab,np->ipab", A, F, A)
        + np.einsum("im,mna,npb->ipab", A, T, B)
    )
    value = sigma_invariant(jet)
    grad = (
        3.0 * np.einsum("ipa,jq,kr,ijk,pqr->a", B, A, A, T, T)
        + 2.0 * np.einsum("ip,jq,kr,ijka,pqr->a", A, A, A, F, T)
    )
    hess = (
        3.0 * np.einsum("ipab,jq,kr,ijk,pqr->ab", DB, A, A, T, T)
        + 6.0 * np.einsum("ipa,jqb,kr,ijk,pqr->ab", B, B, A, T, T)
        + 6.0 * np.einsum("ipa,jq,kr,ijkb,pqr->ab", B, A, A, F, T)
        + 2.0 * np.einsum("ip,jq,kr,ijkab,pqr->ab", A, A, A, V, T)
        + 2.0 * np.einsum("ip,jq,kr,ijka,pqrb->ab", A, A, A, F, F)
        + 6.0 * np.einsum("ipb,jq,kr,ijka,pqr->ab", B, A, A, F, T)
    )
    return ScalarJet(value=value, grad=grad, hess=0.5 * (hess + hess.T))


@dataclass(frozen=True)
class BochnerReport:
    """Outcome of the Bochner inequality check at one point."""

    sigma: float
    laplacian: float  # Δ_φ σ
    lower_bound: float  # σ² / (2n)
    slack: float  # laplacian − lower_bound; nonnegative on solutions

    @property
    def holds(self) -> bool:
        return self.slack >= 0.0


def bochner_check(jet: JetEvaluation, weights: WeightData) -> BochnerReport:
    """Evaluate Δ_φσ − σ²/(2n) at a point of a certified field.

    Requires order-5 jets (σ's Hessian needs fifth derivatives of u) and a
    field whose certification matches `weights`; on anything else the check
    would be meaningless and raises UncertifiedWeights.
    """
    jet.require(5)
    if jet.certified_weights is None or not weights.close_to(jet.certified_weights):
        raise UncertifiedWeights(
            "Bochner check applies to fields certified for the given weights"
        )
    sig = sigma_scalar_jet(jet)
    lap = laplace_weighted(jet, sig, weights)
    bound = sig.value**2 / (2.0 * jet.n)
    return BochnerReport(
        sigma=sig.value, laplacian=lap, lower_bound=bound, slack=lap - bound
    )


@dataclass(frozen=True)
class SolitonDiagnostics:
    """All pointwise soliton diagnostics bundled for reporting."""

    point: np.ndarray
    ma_residual: float
    identity_residual: np.ndarray
    phi: float
    sigma: float
    min_eig_ric_phi: float
    bakry_emery_gap: float  # ‖Ric_φ − quartic rhs‖_∞
    bochner_slack: Optional[float] = None

    CSV_FIELDS = ("ma_residual", "sigma", "min_eig_ric_phi", "bochner_slack")

    def row(self) -> list:
        """Point coordinates followed by the scalar diagnostics."""
        return list(self.point) + [
            self.ma_residual,
            self.sigma,
            self.min_eig_ric_phi,
            self.bochner_slack,
        ]


def diagnose(jet: JetEvaluation, weights: WeightData) -> SolitonDiagnostics:
    """Assemble SolitonDiagnostics at one point.

    The Bochner slack is only filled for order-5 jets of fields certified for
    `weights`; other diagnostics work for any weights.
    """
    jet.require(3)
    ric_phi, rhs = bakry_emery(jet, weights)
    slack = None
    if (
        jet.order >= 5
        and jet.certified_weights is not None
        and weights.close_to(jet.certified_weights)
    ):
        slack = bochner_check(jet, weights).slack
    return SolitonDiagnostics(
        point=_readonly(jet.point),
        ma_residual=ma_residual(jet, weights),
        identity_residual=_readonly(differential_identity_residual(jet, weights)),
        phi=weight_function(jet, weights).value,
        sigma=sigma_invariant(jet),
        min_eig_ric_phi=float(np.linalg.eigvalsh(ric_phi)[0]),
        bakry_emery_gap=float(np.max(np.abs(ric_phi - rhs))),
        bochner_slack=slack,
    )
