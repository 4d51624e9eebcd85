"""Numerical laboratory for Hessian metrics of convex potentials.

The package studies convex potentials u whose Hessian D²u serves as a
Riemannian metric, the weighted Monge-Ampere equation

    log det D²u = -v·x + ξ·∇u + c

tying u to linear weight data (v, ξ, c), and the torus-invariant Kahler
geometry the pair generates.  The pieces:

``potential``   analytic potential families, jets, weight data, domains
``gridfield``   sampled potentials with finite-difference jets
``curvature``   closed-form curvature of the Hessian metric
``soliton``     equation residuals, weighted Ricci positivity, Bochner slack
``masolver``    damped Newton solver for the Dirichlet problem
``toric``       Kahler structure assembly and flat-model classification
``rigidity``    geodesic scans, mean-curvature bounds, rigidity probes
``cli``         config-driven command line runner
"""

from .curvature import (
    CurvatureBundle,
    christoffel,
    curvature_bundle,
    curvature_oracle,
    ricci,
    riemann,
    scalar,
)
from .errors import HessianLabError
from .gridfield import GridPotential, read_grid_file, sample_to_grid, write_grid_file
from .masolver import MAProblem, MASolution, discrete_jet, max_nodal_error, solve_dirichlet
from .potential import (
    AffineDomain,
    Exp1DPotential,
    JetEvaluation,
    PolynomialPotential,
    PotentialField,
    ProductPotential,
    QuadraticPotential,
    SumPotential,
    WeightData,
    XLogX1DPotential,
    builtin_family,
    evaluate_jet,
    sample_box_points,
)
from .rigidity import (
    cutoff_profile,
    feasible_radius,
    liouville_scan,
    mean_curvature_bound_check,
    quadratic_rigidity_deviation,
    radial_scan,
)
from .soliton import (
    bakry_emery,
    bochner_check,
    diagnose,
    differential_identity_residual,
    ma_residual,
    sigma,
    weight_function,
)
from .toric import assemble_sample, darboux_check, flat_model_check, ricci_potential_jet

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "AffineDomain",
    "CurvatureBundle",
    "Exp1DPotential",
    "GridPotential",
    "HessianLabError",
    "JetEvaluation",
    "MAProblem",
    "MASolution",
    "PolynomialPotential",
    "PotentialField",
    "ProductPotential",
    "QuadraticPotential",
    "SumPotential",
    "WeightData",
    "XLogX1DPotential",
    "assemble_sample",
    "bakry_emery",
    "bochner_check",
    "builtin_family",
    "christoffel",
    "curvature_bundle",
    "curvature_oracle",
    "cutoff_profile",
    "darboux_check",
    "diagnose",
    "differential_identity_residual",
    "discrete_jet",
    "evaluate_jet",
    "feasible_radius",
    "flat_model_check",
    "liouville_scan",
    "ma_residual",
    "max_nodal_error",
    "mean_curvature_bound_check",
    "quadratic_rigidity_deviation",
    "radial_scan",
    "read_grid_file",
    "ricci",
    "ricci_potential_jet",
    "riemann",
    "sample_box_points",
    "sample_to_grid",
    "scalar",
    "sigma",
    "solve_dirichlet",
    "weight_function",
    "write_grid_file",
]
