"""Convex potentials, their derivative jets and soliton weight data.

A potential is a smooth strictly convex function u on an open affine domain
in R^n.  Everything downstream (curvature, soliton diagnostics, scans) is
driven by pointwise *jets* of u: the derivative tensors

    u, u_{,i}, u_{,ij}, u_{,ijk}, u_{,ijkl}, u_{,ijklm}

together with the inverse Hessian g^{ij} = (u_{,ij})^{-1} and log det u_{,ij}.
The Hessian doubles as the Riemannian metric g_ij = u_{,ij}.

Weight data (v, xi, c) couples a potential to the weighted Monge-Ampere
equation

    log det(u_{,ij}) = -v_p x^p + u_{,q} xi^q + c .

Built-in families carry *certified* weights: weights for which the equation
holds identically on the family's domain.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import (
    HessianNotPositiveDefinite,
    InvalidParams,
    OrderUnsupported,
    PointOutsideDomain,
)

#: Smallest admissible Hessian eigenvalue; below this the metric is treated
#: as degenerate and jet evaluation fails.
PD_TOLERANCE = 1e-10

#: Highest derivative order any representation is asked for.
MAX_JET_ORDER = 5


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


# ---------------------------------------------------------------------------
# domains
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AffineDomain:
    """Open axis-aligned box or open ball in R^n.

    Boxes store per-axis open intervals (lo, hi); infinite endpoints are
    allowed.  Membership is strict: boundary points do not belong to the
    domain.
    """

    kind: str  # "box" | "ball"
    bounds: Optional[np.ndarray] = None  # (n, 2) for boxes
    center: Optional[np.ndarray] = None  # (n,) for balls
    radius: float = 0.0

    def __post_init__(self) -> None:
        if self.kind == "box":
            b = np.asarray(self.bounds, dtype=float)
            if b.ndim != 2 or b.shape[1] != 2:
                raise InvalidParams("box bounds must have shape (n, 2)")
            if not np.all(b[:, 0] < b[:, 1]):
                raise InvalidParams("box intervals must be nonempty")
            object.__setattr__(self, "bounds", _readonly(b))
        elif self.kind == "ball":
            c = np.asarray(self.center, dtype=float)
            if c.ndim != 1:
                raise InvalidParams("ball center must be a vector")
            if not (self.radius > 0.0):
                raise InvalidParams("ball radius must be positive")
            object.__setattr__(self, "center", _readonly(c))
        else:
            raise InvalidParams(f"unknown domain kind {self.kind!r}")

    @staticmethod
    def box(bounds: Sequence[Sequence[float]]) -> "AffineDomain":
        return AffineDomain(kind="box", bounds=np.asarray(bounds, dtype=float))

    @staticmethod
    def ball(center: Sequence[float], radius: float) -> "AffineDomain":
        return AffineDomain(kind="ball", center=np.asarray(center, dtype=float),
                            radius=float(radius))

    @staticmethod
    def full(n: int) -> "AffineDomain":
        """All of R^n as an open box."""
        return AffineDomain.box([(-math.inf, math.inf)] * n)

    @property
    def n(self) -> int:
        if self.kind == "box":
            return self.bounds.shape[0]
        return self.center.shape[0]

    def contains(self, point: np.ndarray) -> bool:
        x = np.asarray(point, dtype=float)
        if x.shape != (self.n,) or not np.all(np.isfinite(x)):
            return False
        if self.kind == "box":
            return bool(np.all(x > self.bounds[:, 0]) and np.all(x < self.bounds[:, 1]))
        return bool(np.linalg.norm(x - self.center) < self.radius)

    def boundary_distance(self, point: np.ndarray) -> float:
        """Distance (Euclidean/per-axis) from an interior point to the boundary."""
        x = np.asarray(point, dtype=float)
        if self.kind == "box":
            lo = np.min(x - self.bounds[:, 0])
            hi = np.min(self.bounds[:, 1] - x)
            return float(min(lo, hi))
        return float(self.radius - np.linalg.norm(x - self.center))

    def intersect(self, other: "AffineDomain") -> "AffineDomain":
        if self.kind != "box" or other.kind != "box":
            raise InvalidParams("domain intersection implemented for boxes only")
        if self.n != other.n:
            raise InvalidParams("dimension mismatch in domain intersection")
        lo = np.maximum(self.bounds[:, 0], other.bounds[:, 0])
        hi = np.minimum(self.bounds[:, 1], other.bounds[:, 1])
        if not np.all(lo < hi):
            raise InvalidParams("domain intersection is empty")
        return AffineDomain.box(np.stack([lo, hi], axis=1))


# ---------------------------------------------------------------------------
# weights and jets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeightData:
    """Weights (v, xi, c) of the weighted Monge-Ampere equation.

    v is a covector (components v_i), xi a vector (components xi^i) and c a
    scalar gauge constant.
    """

    v: np.ndarray
    xi: np.ndarray
    c: float

    def __post_init__(self) -> None:
        v = np.asarray(self.v, dtype=float)
        xi = np.asarray(self.xi, dtype=float)
        if v.ndim != 1 or xi.shape != v.shape:
            raise InvalidParams("weight components v and xi must be vectors of equal length")
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(xi)) and math.isfinite(self.c)):
            raise InvalidParams("weight data must be finite")
        object.__setattr__(self, "v", _readonly(v))
        object.__setattr__(self, "xi", _readonly(xi))
        object.__setattr__(self, "c", float(self.c))

    @property
    def n(self) -> int:
        return self.v.shape[0]

    def close_to(self, other: "WeightData", tol: float = 0.0) -> bool:
        if other is None or self.n != other.n:
            return False
        return (
            float(np.max(np.abs(self.v - other.v), initial=0.0)) <= tol
            and float(np.max(np.abs(self.xi - other.xi), initial=0.0)) <= tol
            and abs(self.c - other.c) <= tol
        )

    @staticmethod
    def concatenate(parts: Sequence["WeightData"]) -> "WeightData":
        v = np.concatenate([p.v for p in parts])
        xi = np.concatenate([p.xi for p in parts])
        c = float(sum(p.c for p in parts))
        return WeightData(v=v, xi=xi, c=c)


@dataclass(frozen=True)
class ScalarJet:
    """Coordinate derivatives of an auxiliary scalar field at a point:
    value, gradient f_{,i} and Hessian f_{,ij} (plain partial derivatives,
    not covariant ones)."""

    value: float
    grad: np.ndarray
    hess: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "grad", _readonly(self.grad))
        object.__setattr__(self, "hess", _readonly(self.hess))


@dataclass(frozen=True)
class JetEvaluation:
    """Derivative data of a potential at one point.

    Tensors above ``order`` are None.  For order >= 2 the Hessian has been
    checked to be symmetric positive definite (smallest eigenvalue above
    PD_TOLERANCE) and ``inverse_hess``/``log_det`` are filled in.

    ``exact`` records whether the derivatives are closed-form (analytic
    family) or stencil approximations (grid field); downstream consistency
    assertions only apply to exact jets.
    """

    point: np.ndarray
    order: int
    value: float
    grad: Optional[np.ndarray] = None
    hess: Optional[np.ndarray] = None
    third: Optional[np.ndarray] = None
    fourth: Optional[np.ndarray] = None
    fifth: Optional[np.ndarray] = None
    inverse_hess: Optional[np.ndarray] = None
    log_det: Optional[float] = None
    certified_weights: Optional[WeightData] = None
    exact: bool = True

    @property
    def n(self) -> int:
        return self.point.shape[0]

    def require(self, order: int) -> None:
        if self.order < order:
            from .errors import InsufficientJetOrder

            raise InsufficientJetOrder(
                f"operation needs a jet of order {order}, got {self.order}"
            )


def _finish_jet(
    point: np.ndarray,
    order: int,
    tensors: list,
    certified: Optional[WeightData],
    exact: bool,
) -> JetEvaluation:
    """Assemble a JetEvaluation from derivative tensors, enforcing the
    positive-definiteness contract on the Hessian."""
    value = float(tensors[0])
    grad = _readonly(tensors[1]) if order >= 1 else None
    hess = inverse = None
    log_det = None
    if order >= 2:
        hess = np.asarray(tensors[2], dtype=float)
        eigs = np.linalg.eigvalsh(hess)
        if eigs[0] <= PD_TOLERANCE:
            raise HessianNotPositiveDefinite(
                f"Hessian at {point.tolist()} has smallest eigenvalue {eigs[0]:.3e}"
                f" <= {PD_TOLERANCE:.0e}"
            )
        inverse = np.linalg.inv(hess)
        inverse = _readonly(0.5 * (inverse + inverse.T))
        log_det = float(np.sum(np.log(eigs)))
        hess = _readonly(hess)
    third = _readonly(tensors[3]) if order >= 3 else None
    fourth = _readonly(tensors[4]) if order >= 4 else None
    fifth = _readonly(tensors[5]) if order >= 5 else None
    return JetEvaluation(
        point=_readonly(point),
        order=order,
        value=value,
        grad=grad,
        hess=hess,
        third=third,
        fourth=fourth,
        fifth=fifth,
        inverse_hess=inverse,
        log_det=log_det,
        certified_weights=certified,
        exact=exact,
    )


# ---------------------------------------------------------------------------
# potential fields
# ---------------------------------------------------------------------------


class PotentialField:
    """Common interface of analytic and grid potentials."""

    domain: AffineDomain
    certified_weights: Optional[WeightData]

    @property
    def n(self) -> int:
        return self.domain.n

    @property
    def max_order(self) -> int:
        return MAX_JET_ORDER

    def jet(self, point, order: int = 2) -> JetEvaluation:
        raise NotImplementedError

    def _check_point_and_order(self, point, order: int) -> np.ndarray:
        x = np.asarray(point, dtype=float).reshape(-1)
        if x.shape != (self.n,):
            raise InvalidParams(f"point has dimension {x.shape[0]}, field expects {self.n}")
        if not self.domain.contains(x):
            raise PointOutsideDomain(f"point {x.tolist()} is outside the open domain")
        if not (0 <= order <= self.max_order):
            raise OrderUnsupported(
                f"jet order {order} unsupported (this field provides 0..{self.max_order})"
            )
        return x


class AnalyticPotential(PotentialField):
    """Potential with closed-form derivative tensors up to order 5."""

    certified_weights: Optional[WeightData] = None

    def derivative_tensor(self, x: np.ndarray, k: int) -> np.ndarray:
        """Return the (symmetric) k-th derivative tensor at x, shape (n,)*k."""
        raise NotImplementedError

    def jet(self, point, order: int = 2) -> JetEvaluation:
        x = self._check_point_and_order(point, order)
        tensors = [self.derivative_tensor(x, k) if k <= order else None
                   for k in range(MAX_JET_ORDER + 1)]
        return _finish_jet(x, order, tensors, self.certified_weights, exact=True)


class QuadraticPotential(AnalyticPotential):
    """u(x) = x.A.x/2 + b.x with A symmetric positive definite.

    Certified weights: v = 0, xi = 0, c = log det A (the metric is the
    constant matrix A, so the Monge-Ampere relation is exact).
    """

    def __init__(self, A, b=None, domain: Optional[AffineDomain] = None):
        A = np.asarray(A, dtype=float)
        if A.ndim == 1:
            A = np.diag(A)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise InvalidParams("quadratic coefficient A must be a square matrix")
        if np.max(np.abs(A - A.T)) > 0:
            A = 0.5 * (A + A.T)
        eigs = np.linalg.eigvalsh(A)
        if eigs[0] <= PD_TOLERANCE:
            raise InvalidParams("quadratic coefficient A must be positive definite")
        n = A.shape[0]
        b = np.zeros(n) if b is None else np.asarray(b, dtype=float)
        if b.shape != (n,):
            raise InvalidParams("linear coefficient b has wrong shape")
        self.A = _readonly(A)
        self.b = _readonly(b)
        self.domain = domain if domain is not None else AffineDomain.full(n)
        if self.domain.n != n:
            raise InvalidParams("domain dimension does not match A")
        self.certified_weights = WeightData(
            v=np.zeros(n), xi=np.zeros(n), c=float(np.sum(np.log(eigs)))
        )

    def derivative_tensor(self, x: np.ndarray, k: int) -> np.ndarray:
        n = self.n
        if k == 0:
            return np.array(0.5 * x @ self.A @ x + self.b @ x)
        if k == 1:
            return self.A @ x + self.b
        if k == 2:
            return self.A.copy()
        return np.zeros((n,) * k)


class _Family1D(AnalyticPotential):
    """Base for one-dimensional certified families defined by a scalar
    derivative ladder u^(k)(x)."""

    def deriv1d(self, x: float, k: int) -> float:
        raise NotImplementedError

    def derivative_tensor(self, x: np.ndarray, k: int) -> np.ndarray:
        val = self.deriv1d(float(x[0]), k)
        return np.array(val) if k == 0 else np.full((1,) * k, val)


class Exp1DPotential(_Family1D):
    """u(x) = scale * exp(-v x) on R (v != 0, scale > 0).

    All derivatives stay proportional to u, so u is strictly convex with
    Hessian scale*v^2*exp(-v x).  Certified weights: (v, xi=0,
    c = log(v^2 * scale)).
    """

    def __init__(self, v: float = 1.0, scale: float = 1.0):
        if v == 0.0 or not math.isfinite(v):
            raise InvalidParams("exp1d rate v must be finite and nonzero")
        if not (scale > 0.0 and math.isfinite(scale)):
            raise InvalidParams("exp1d scale must be positive")
        self.v = float(v)
        self.scale = float(scale)
        self.domain = AffineDomain.full(1)
        self.certified_weights = WeightData(
            v=np.array([self.v]), xi=np.zeros(1), c=math.log(self.v**2 * self.scale)
        )

    def deriv1d(self, x: float, k: int) -> float:
        return self.scale * (-self.v) ** k * math.exp(-self.v * x)


class XLogX1DPotential(_Family1D):
    """u(x) = (x+K) log(x+K) - x on the half line x > -K.

    Hessian is 1/(x+K) > 0.  Certified weights: (v=0, xi=-1, c=0), since
    log u'' = -log(x+K) = u' * (-1).
    """

    def __init__(self, K: float = 1.0):
        if not math.isfinite(K):
            raise InvalidParams("xlogx1d shift K must be finite")
        self.K = float(K)
        self.domain = AffineDomain.box([(-self.K, math.inf)])
        self.certified_weights = WeightData(
            v=np.zeros(1), xi=np.array([-1.0]), c=0.0
        )

    def deriv1d(self, x: float, k: int) -> float:
        t = x + self.K
        if k == 0:
            return t * math.log(t) - x
        if k == 1:
            return math.log(t)
        # u^(k) = (-1)^k (k-2)! t^(1-k) for k >= 2
        return (-1.0) ** k * math.factorial(k - 2) * t ** (1 - k)


class ProductPotential(AnalyticPotential):
    """Separable sum u(x) = sum_j u_j(x_j) of one-dimensional certified
    factors.  Weights concatenate and gauge constants add; the metric is
    diagonal with blocks from the factors."""

    def __init__(self, factors: Sequence[AnalyticPotential]):
        if not factors:
            raise InvalidParams("product needs at least one factor")
        for f in factors:
            if f.n != 1:
                raise InvalidParams("product factors must be one-dimensional")
            if f.certified_weights is None:
                raise InvalidParams("product factors must carry certified weights")
        self.factors = tuple(factors)
        bounds = np.concatenate([f.domain.bounds for f in self.factors], axis=0)
        self.domain = AffineDomain.box(bounds)
        self.certified_weights = WeightData.concatenate(
            [f.certified_weights for f in self.factors]
        )

    def derivative_tensor(self, x: np.ndarray, k: int) -> np.ndarray:
        n = self.n
        if k == 0:
            return np.array(sum(float(f.derivative_tensor(x[j:j + 1], 0))
                                for j, f in enumerate(self.factors)))
        out = np.zeros((n,) * k)
        for j, f in enumerate(self.factors):
            out[(j,) * k] = float(f.derivative_tensor(x[j:j + 1], k).reshape(()))
        return out


class PolynomialPotential(AnalyticPotential):
    """Polynomial potential given by monomial terms {exponents: coefficient}.

    Not certified; used for perturbations, oracle targets and fits.  Convexity
    is not checked at construction - jet evaluation enforces positive
    definiteness pointwise.
    """

    def __init__(self, terms: dict, n: int, domain: Optional[AffineDomain] = None):
        self.n_dim = int(n)
        clean = {}
        for expo, coeff in terms.items():
            e = tuple(int(t) for t in expo)
            if len(e) != self.n_dim or any(t < 0 for t in e):
                raise InvalidParams(f"bad exponent tuple {expo!r}")
            if coeff != 0.0:
                clean[e] = clean.get(e, 0.0) + float(coeff)
        self.terms = clean
        self.domain = domain if domain is not None else AffineDomain.full(self.n_dim)
        if self.domain.n != self.n_dim:
            raise InvalidParams("domain dimension mismatch")
        self.certified_weights = None

    def _partial(self, x: np.ndarray, alpha: Sequence[int]) -> float:
        total = 0.0
        for expo, coeff in self.terms.items():
            term = coeff
            for e, a, xv in zip(expo, alpha, x):
                if a > e:
                    term = 0.0
                    break
                # falling factorial e*(e-1)*...*(e-a+1), then x^(e-a)
                for r in range(a):
                    term *= e - r
                term *= xv ** (e - a)
            total += term
        return total

    def derivative_tensor(self, x: np.ndarray, k: int) -> np.ndarray:
        n = self.n_dim
        if k == 0:
            return np.array(self._partial(x, (0,) * n))
        out = np.zeros((n,) * k)
        for combo in itertools.combinations_with_replacement(range(n), k):
            alpha = [0] * n
            for j in combo:
                alpha[j] += 1
            val = self._partial(x, alpha)
            for perm in set(itertools.permutations(combo)):
                out[perm] = val
        return out


class SumPotential(AnalyticPotential):
    """Pointwise sum of analytic potentials on the intersection of their
    domains.  Used to perturb certified families; the sum itself carries no
    certification."""

    def __init__(self, fields: Sequence[AnalyticPotential]):
        if len(fields) < 2:
            raise InvalidParams("sum needs at least two fields")
        n = fields[0].n
        if any(f.n != n for f in fields):
            raise InvalidParams("summands must share a dimension")
        dom = fields[0].domain
        for f in fields[1:]:
            dom = dom.intersect(f.domain)
        self.fields = tuple(fields)
        self.domain = dom
        self.certified_weights = None

    def derivative_tensor(self, x: np.ndarray, k: int) -> np.ndarray:
        out = self.fields[0].derivative_tensor(x, k)
        for f in self.fields[1:]:
            out = out + f.derivative_tensor(x, k)
        return out


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def evaluate_jet(potential: PotentialField, point, order: int = 2) -> JetEvaluation:
    """Evaluate the derivative jet of a potential at an interior point."""
    return potential.jet(point, order)


def moment_coordinates(potential: PotentialField, point) -> np.ndarray:
    """Gradient map y = grad u(x): the Legendre/moment coordinates of x."""
    return potential.jet(point, order=1).grad


_FAMILIES = ("quadratic", "exp1d", "xlogx1d", "product")


def builtin_family(name: str, params: Optional[dict] = None) -> AnalyticPotential:
    """Construct a certified built-in family by name.

    quadratic: {"A": matrix or diagonal list, "b": optional vector}
    exp1d:     {"v": rate, "scale": optional scale}
    xlogx1d:   {"K": shift}
    product:   {"factors": [{"name": ..., "params": {...}}, ...]}
    """
    params = dict(params or {})
    try:
        if name == "quadratic":
            return QuadraticPotential(params["A"], params.get("b"))
        if name == "exp1d":
            return Exp1DPotential(params.get("v", 1.0), params.get("scale", 1.0))
        if name == "xlogx1d":
            return XLogX1DPotential(params.get("K", 1.0))
        if name == "product":
            factors = [builtin_family(f["name"], f.get("params")) for f in params["factors"]]
            return ProductPotential(factors)
    except KeyError as exc:
        raise InvalidParams(f"family {name!r} missing parameter {exc}") from exc
    raise InvalidParams(f"unknown family {name!r}; available: {', '.join(_FAMILIES)}")


def sample_box_points(
    bounds, count: int, rng: np.random.Generator, margin: float = 0.0
) -> np.ndarray:
    """Draw `count` uniform points from a finite box, inset by `margin`."""
    b = np.asarray(bounds, dtype=float)
    lo, hi = b[:, 0] + margin, b[:, 1] - margin
    if not np.all(np.isfinite(lo)) or not np.all(np.isfinite(hi)) or not np.all(lo < hi):
        raise InvalidParams("sampling box must be finite and nonempty after margin")
    return rng.uniform(lo, hi, size=(count, b.shape[0]))
