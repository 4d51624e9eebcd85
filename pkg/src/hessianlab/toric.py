"""Torus-invariant Kahler structure rebuilt from a convex potential.

A convex potential u on a domain of momentum-type coordinates x determines a
Kahler metric on domain x T^n in angle coordinates theta: the metric is block
diagonal with blocks D²u and (D²u)^{-1}, the symplectic form is the standard
dx ∧ dtheta, and the complex structure shuffles the two blocks.  This module
assembles those tensors pointwise, checks the compatibility identities, and
exposes the structure-level residual of the soliton equation together with a
flat-model classifier.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .curvature import contracted_third
from .errors import InvalidParams, UncertifiedWeights
from .potential import JetEvaluation, PotentialField, ScalarJet, WeightData
from .soliton import differential_identity_residual, sigma


@dataclass(frozen=True)
class ToricKahlerSample:
    """Pointwise Kahler package in (x, theta) coordinates.

    ``metric`` , ``complex_structure`` and ``symplectic`` are 2n x 2n matrices
    in the coordinate frame (∂x¹..∂xⁿ, ∂θ¹..∂θⁿ); everything depends on the
    base point only, so the same matrices serve the whole torus fiber.
    """

    x: np.ndarray
    theta: np.ndarray
    metric_base: np.ndarray
    metric_base_inv: np.ndarray
    metric: np.ndarray
    complex_structure: np.ndarray
    symplectic: np.ndarray
    moment: np.ndarray
    holomorphy_potential: Optional[float]
    soliton_residual: Optional[np.ndarray]

    @property
    def n(self) -> int:
        return self.x.shape[0]


def assemble_sample(
    jet: JetEvaluation,
    weights: Optional[WeightData] = None,
    theta=None,
) -> ToricKahlerSample:
    """Build the Kahler tensors at one point of the torus fibration.

    ``weights`` defaults to the jet's certification; without either, the
    metric data is still assembled but the soliton residual and the
    holomorphy potential are left as None.  The residual needs third
    derivatives.
    """
    jet.require(2)
    n = jet.point.shape[0]
    theta = np.zeros(n) if theta is None else np.asarray(theta, dtype=float)
    if theta.shape != (n,):
        raise InvalidParams("theta must have one angle per base coordinate")
    G = jet.hess
    Ginv = jet.inverse_hess
    metric = np.zeros((2 * n, 2 * n))
    metric[:n, :n] = G
    metric[n:, n:] = Ginv
    jmat = np.zeros((2 * n, 2 * n))
    jmat[:n, n:] = -Ginv
    jmat[n:, :n] = G
    omega = np.zeros((2 * n, 2 * n))
    omega[:n, n:] = np.eye(n)
    omega[n:, :n] = -np.eye(n)
    if weights is None:
        weights = jet.certified_weights
    potential = None
    residual = None
    if weights is not None:
        if weights.n != n:
            raise InvalidParams("weight dimension does not match the jet")
        potential = float(weights.v @ jet.point + weights.c)
        if jet.order >= 3:
            residual = differential_identity_residual(jet, weights)
    return ToricKahlerSample(
        x=jet.point,
        theta=theta,
        metric_base=G,
        metric_base_inv=Ginv,
        metric=metric,
        complex_structure=jmat,
        symplectic=omega,
        moment=jet.grad.copy(),
        holomorphy_potential=potential,
        soliton_residual=residual,
    )


def structure_residual(jet: JetEvaluation, weights: WeightData) -> np.ndarray:
    """Soliton equation residual seen at the structure level.

    The derivative of the log-determinant of the base metric plus the linear
    weight, minus the metric applied to the symmetry direction.  Identical to
    the pointwise differential identity residual of the potential.
    """
    return differential_identity_residual(jet, weights)


def ricci_potential_jet(jet: JetEvaluation) -> ScalarJet:
    """Jet of log det D²u; the Ricci form of the fibration is -1/2 ddᶜ of it.

    Needs a fourth-order jet for the Hessian entry.
    """
    jet.require(4)
    A, T, F = jet.inverse_hess, jet.third, jet.fourth
    grad = contracted_third(jet)
    hess = np.einsum("pq,pqab->ab", A, F) - np.einsum(
        "pm,mnb,nq,pqa->ab", A, T, A, T
    )
    return ScalarJet(value=jet.log_det, grad=grad, hess=0.5 * (hess + hess.T))


@dataclass(frozen=True)
class DarbouxReport:
    """Deviations of a sample from the model Kahler identities."""

    j_squared_deviation: float
    compatibility_deviation: float
    symplectic_skew_deviation: float
    off_block_deviation: float
    metric_min_eigenvalue: float
    tol: float

    @property
    def passed(self) -> bool:
        return (
            self.j_squared_deviation <= self.tol
            and self.compatibility_deviation <= self.tol
            and self.symplectic_skew_deviation <= self.tol
            and self.off_block_deviation <= self.tol
            and self.metric_min_eigenvalue > 0.0
        )


def darboux_check(sample: ToricKahlerSample, tol: float = 1e-12) -> DarbouxReport:
    """Recompute the compatibility identities from the stored matrices.

    Checks J² = -1, g = Ω J, skewness of Ω, vanishing of the base/fiber
    off-diagonal metric block, and positive definiteness of the full metric.
    The check uses only the sample's own matrices, so a corrupted sample is
    caught no matter how it was produced.
    """
    n = sample.n
    J, g, om = sample.complex_structure, sample.metric, sample.symplectic
    dev_j = float(np.max(np.abs(J @ J + np.eye(2 * n))))
    dev_com = float(np.max(np.abs(om @ J - g)))
    dev_skew = float(np.max(np.abs(om + om.T)))
    dev_block = float(max(np.max(np.abs(g[:n, n:])), np.max(np.abs(g[n:, :n]))))
    min_eig = float(np.min(np.linalg.eigvalsh(0.5 * (g + g.T))))
    return DarbouxReport(
        j_squared_deviation=dev_j,
        compatibility_deviation=dev_com,
        symplectic_skew_deviation=dev_skew,
        off_block_deviation=dev_block,
        metric_min_eigenvalue=min_eig,
        tol=tol,
    )


@dataclass(frozen=True)
class FlatModelReport:
    """Outcome of testing a certified potential against the flat model."""

    variation: float
    tol: float
    worst_point: np.ndarray

    @property
    def is_flat_model(self) -> bool:
        return self.variation <= self.tol

    @property
    def verdict(self) -> str:
        if self.is_flat_model:
            return "flat (C*)^n model"
        return (
            "non-quadratic potential"
            f" (third-derivative energy up to {self.variation:.6g})"
        )


def flat_model_check(
    field: PotentialField,
    points: Sequence,
    tol: float = 1e-10,
) -> FlatModelReport:
    """Classify a certified potential by its third-derivative energy.

    The structure is the standard flat one on (C*)^n exactly when the
    potential is quadratic, i.e. when the invariant |D³u|²_g vanishes at
    every point.  ``variation`` reports the largest value over the probe
    points.  Uncertified fields are refused: the verdict is a statement
    about a soliton structure, not about a bare metric.
    """
    pts = [np.asarray(p, dtype=float).reshape(-1) for p in points]
    if not pts:
        raise InvalidParams("flat_model_check needs at least one probe point")
    worst = -1.0
    worst_point = pts[0]
    for p in pts:
        jet = field.jet(p, 3)
        if jet.certified_weights is None:
            raise UncertifiedWeights(
                "flat-model verdicts need a certified potential"
            )
        s = sigma(jet)
        if s > worst:
            worst, worst_point = s, p
    return FlatModelReport(variation=worst, tol=tol, worst_point=worst_point)
