"""Grid-sampled potentials and central finite-difference stencils.

A GridPotential stores values of a potential on a uniform rectangular grid
and reconstructs derivative jets with tensor-product central differences of
configurable accuracy order (2 by default, 4 optionally).  Fifth derivatives
are only available with the order-4 stencil; analytic families should be used
when exact high-order jets matter.

The per-axis weights come from Fornberg's interpolation recursion, which at a
grid node reproduces the classical central-difference coefficients exactly
and remains usable for points between nodes (at one order of accuracy less
for the highest derivatives).
"""

from __future__ import annotations

import itertools
import json
from functools import lru_cache
from typing import Optional

import numpy as np

from .errors import InsufficientMargin, InvalidParams
from .potential import (
    AffineDomain,
    AnalyticPotential,
    JetEvaluation,
    PotentialField,
    WeightData,
    _finish_jet,
    _readonly,
)


def fd_weights(points: np.ndarray, x0: float, order: int) -> np.ndarray:
    """Finite-difference weights for the `order`-th derivative at x0 from
    samples at `points` (Fornberg's recursion)."""
    x = np.asarray(points, dtype=float)
    npts = x.shape[0]
    if order >= npts:
        raise InvalidParams("not enough points for the requested derivative")
    C = np.zeros((npts, order + 1))
    C[0, 0] = 1.0
    c1 = 1.0
    c4 = x[0] - x0
    for i in range(1, npts):
        mn = min(i, order)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - x0
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    C[i, k] = c1 * (k * C[i - 1, k - 1] - c5 * C[i - 1, k]) / c2
                C[i, 0] = -c1 * c5 * C[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                C[j, k] = (c4 * C[j, k] - k * C[j, k - 1]) / c3
            C[j, 0] = c4 * C[j, 0] / c3
        c1 = c2
    return C[:, order]


def stencil_width(deriv: int, accuracy: int) -> int:
    """Number of points in the classical central stencil for the given
    derivative and accuracy order (both-side symmetric, odd width)."""
    if deriv == 0:
        return accuracy + 1
    return 2 * ((deriv + 1) // 2) - 1 + accuracy


def stencil_margin(order: int, accuracy: int) -> int:
    """Nodes needed on each side of the center for jets up to `order`."""
    return max(stencil_width(d, accuracy) for d in range(order + 1)) // 2


@lru_cache(maxsize=None)
def _centered_weights(deriv: int, accuracy: int) -> np.ndarray:
    """Unit-spacing central weights for a node-centered evaluation."""
    half = stencil_width(deriv, accuracy) // 2
    return fd_weights(np.arange(-half, half + 1, dtype=float), 0.0, deriv)


class GridPotential(PotentialField):
    """Potential represented by samples on a uniform rectangular grid.

    Parameters
    ----------
    origin, spacing : per-axis grid origin and positive step sizes.
    values : ndarray of shape (m_1, ..., m_n) with the sampled u values.
    stencil_order : finite-difference accuracy order, 2 or 4.
    certified_weights : attach weight data certified for these samples
        (e.g. by the Monge-Ampere solver); optional.
    """

    def __init__(
        self,
        origin,
        spacing,
        values: np.ndarray,
        stencil_order: int = 2,
        certified_weights: Optional[WeightData] = None,
    ):
        origin = np.asarray(origin, dtype=float).reshape(-1)
        spacing = np.asarray(spacing, dtype=float).reshape(-1)
        values = np.asarray(values, dtype=float)
        n = origin.shape[0]
        if spacing.shape != (n,) or values.ndim != n:
            raise InvalidParams("origin, spacing and values ranks disagree")
        if not np.all(spacing > 0):
            raise InvalidParams("grid spacing must be positive")
        if any(m < 2 for m in values.shape):
            raise InvalidParams("grid needs at least two nodes per axis")
        if stencil_order not in (2, 4):
            raise InvalidParams("stencil_order must be 2 or 4")
        self.origin = _readonly(origin)
        self.spacing = _readonly(spacing)
        self.values = _readonly(values)
        self.stencil_order = int(stencil_order)
        self.certified_weights = certified_weights
        hi = origin + spacing * (np.array(values.shape) - 1)
        self.domain = AffineDomain.box(np.stack([origin, hi], axis=1))

    @property
    def shape(self) -> tuple:
        return self.values.shape

    @property
    def max_order(self) -> int:
        # Fifth derivatives need the wide order-4 stencil.
        return 4 if self.stencil_order == 2 else 5

    def node_index(self, point) -> tuple:
        """Index of the grid node nearest to `point`."""
        x = np.asarray(point, dtype=float).reshape(-1)
        idx = np.rint((x - self.origin) / self.spacing).astype(int)
        return tuple(int(i) for i in np.clip(idx, 0, np.array(self.shape) - 1))

    def node_point(self, idx) -> np.ndarray:
        return self.origin + self.spacing * np.asarray(idx, dtype=float)

    def jet(self, point, order: int = 2) -> JetEvaluation:
        x = self._check_point_and_order(point, order)
        p = self.stencil_order
        idx = self.node_index(x)
        half = stencil_margin(order, p)
        for a, (i, m) in enumerate(zip(idx, self.shape)):
            if i - half < 0 or i + half > m - 1:
                raise InsufficientMargin(
                    f"jet of order {order} needs {half} nodes of margin on axis {a}"
                )
        # Local cube of samples around the center node.
        cube = self.values[tuple(slice(i - half, i + half + 1) for i in idx)]
        offsets = np.arange(-half, half + 1, dtype=float)
        # Per-axis, per-derivative weight vectors at the requested point.
        t = (x - self.node_point(idx)) / self.spacing  # unit-spacing offsets
        on_node = np.all(np.abs(t) <= 1e-12)
        wtab = []
        for a in range(self.n):
            row = []
            for d in range(order + 1):
                s = stencil_width(d, p) // 2
                if on_node:
                    w = _centered_weights(d, p)
                else:
                    w = fd_weights(offsets[half - s: half + s + 1], float(t[a]), d)
                wpad = np.zeros(2 * half + 1)
                wpad[half - s: half + s + 1] = w
                row.append(wpad / self.spacing[a] ** d)
            wtab.append(row)

        def entry(alpha) -> float:
            acc = cube
            for a in range(self.n):
                acc = np.tensordot(wtab[a][alpha[a]], acc, axes=(0, 0))
            return float(acc)

        tensors = []
        for k in range(order + 1):
            if k == 0:
                tensors.append(np.array(entry((0,) * self.n)))
                continue
            tk = np.zeros((self.n,) * k)
            for combo in itertools.combinations_with_replacement(range(self.n), k):
                alpha = [0] * self.n
                for a in combo:
                    alpha[a] += 1
                val = entry(tuple(alpha))
                for perm in set(itertools.permutations(combo)):
                    tk[perm] = val
            tensors.append(tk)
        tensors += [None] * (5 - order)
        return _finish_jet(x, order, tensors, self.certified_weights, exact=False)


def sample_to_grid(
    field: PotentialField,
    origin,
    spacing,
    shape,
    stencil_order: int = 2,
    keep_certification: bool = True,
) -> GridPotential:
    """Sample a potential's values on a uniform grid.

    The returned grid keeps the source field's certified weights by default:
    the samples inherit the Monge-Ampere relation up to discretization error.
    """
    origin = np.asarray(origin, dtype=float)
    spacing = np.asarray(spacing, dtype=float)
    shape = tuple(int(m) for m in shape)
    n = origin.shape[0]
    vals = np.empty(shape)
    analytic = isinstance(field, AnalyticPotential)
    for idx in np.ndindex(*shape):
        x = origin + spacing * np.array(idx, dtype=float)
        if analytic:
            vals[idx] = float(field.derivative_tensor(x, 0))
        else:
            vals[idx] = field.jet(x, 0).value
    certified = field.certified_weights if keep_certification else None
    return GridPotential(origin, spacing, vals, stencil_order, certified)


# ---------------------------------------------------------------------------
# file format: one JSON header line, then raw little-endian float64 C-order
# ---------------------------------------------------------------------------


def write_grid_file(path: str, grid: GridPotential) -> None:
    header = {
        "shape": list(grid.shape),
        "origin": [float(v) for v in grid.origin],
        "spacing": [float(v) for v in grid.spacing],
        "stencil_order": grid.stencil_order,
    }
    if grid.certified_weights is not None:
        w = grid.certified_weights
        header["weights"] = {
            "v": [float(t) for t in w.v],
            "xi": [float(t) for t in w.xi],
            "c": float(w.c),
        }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        fh.write(np.ascontiguousarray(grid.values, dtype="<f8").tobytes())


def read_grid_file(
    path: str,
    origin=None,
    spacing=None,
    stencil_order: Optional[int] = None,
    certified_weights: Optional[WeightData] = None,
) -> GridPotential:
    """Read a grid potential file; explicit origin/spacing override the header."""
    with open(path, "rb") as fh:
        line = fh.readline()
        try:
            header = json.loads(line.decode("utf-8"))
            shape = tuple(int(m) for m in header["shape"])
        except (ValueError, KeyError) as exc:
            raise InvalidParams(f"bad grid file header in {path}: {exc}") from exc
        raw = fh.read()
    count = int(np.prod(shape))
    if len(raw) != 8 * count:
        raise InvalidParams(
            f"grid file {path}: expected {8 * count} data bytes, found {len(raw)}"
        )
    values = np.frombuffer(raw, dtype="<f8").reshape(shape)
    origin = header.get("origin") if origin is None else origin
    spacing = header.get("spacing") if spacing is None else spacing
    if origin is None or spacing is None:
        raise InvalidParams(f"grid file {path} lacks origin/spacing")
    order = stencil_order if stencil_order is not None else header.get("stencil_order", 2)
    if certified_weights is None and "weights" in header:
        try:
            w = header["weights"]
            certified_weights = WeightData(v=w["v"], xi=w["xi"], c=float(w["c"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidParams(f"bad weights block in {path}: {exc}") from exc
    return GridPotential(origin, spacing, values, order, certified_weights)
