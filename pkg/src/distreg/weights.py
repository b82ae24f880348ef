"""Local probability weight schemes and their consistency diagnostics.

A weight scheme turns a covariate sample and a query point into nonnegative
weights summing to one.  By construction the weights never see the response
values, only the covariates (the X-property), so any scheme built here is a
valid local-averaging scheme.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ._rng import stream

_STONE_TAG = 83


@dataclass(frozen=True)
class WeightVector:
    """Probability weights produced by a scheme at a query point."""

    values: np.ndarray
    x: np.ndarray
    scheme: str

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if np.any(values < 0):
            raise ValueError("weights must be nonnegative")
        total = values.sum()
        if total <= 0:
            raise ValueError("weights must have positive total")
        values = values / total
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class KernelScheme:
    """Bandwidth-h kernel weights; default kernel is the closed unit ball.

    A custom kernel must be boxed: sandwiched between m1 * 1{||x|| <= r1}
    and m2 * 1{||x|| <= r2} with m2 >= m1 > 0 and r2 >= r1 > 0.  The box
    constants are declared, not verified pointwise.
    """

    bandwidth: float
    kind: str = "uniform"
    kernel: Callable[[np.ndarray], np.ndarray] | None = None
    box_constants: tuple[float, float, float, float] | None = None  # m1, m2, r1, r2

    def __post_init__(self):
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        if self.kind == "uniform":
            return
        if self.kind != "boxed":
            raise ValueError(f"unknown kernel kind: {self.kind!r}")
        if self.kernel is None or self.box_constants is None:
            raise ValueError("boxed kernels need a callable and box constants")
        m1, m2, r1, r2 = self.box_constants
        if not (m2 >= m1 > 0 and r2 >= r1 > 0):
            raise ValueError("box constants must satisfy m2 >= m1 > 0, r2 >= r1 > 0")

    def describe(self) -> str:
        return f"kernel({self.kind}, h={self.bandwidth:g})"


@dataclass(frozen=True)
class KnnScheme:
    """Uniform weights over the kappa nearest covariates.

    Distance ties are broken by smallest sample index, which keeps every
    experiment bit-reproducible.
    """

    kappa: int

    def __post_init__(self):
        if self.kappa < 1:
            raise ValueError("kappa must be >= 1")

    def describe(self) -> str:
        return f"knn(kappa={self.kappa})"


def _as_matrix(covariates) -> np.ndarray:
    arr = np.asarray(covariates, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ValueError("covariates must be a nonempty (n, k) array")
    return arr


def _as_point(x, k: int) -> np.ndarray:
    pt = np.atleast_1d(np.asarray(x, dtype=float))
    if pt.shape != (k,):
        raise ValueError(f"query point must have dimension {k}, got shape {pt.shape}")
    return pt


def kernel_weights(scheme: KernelScheme, covariates, x) -> WeightVector:
    """Kernel weights K((x - X_i)/h) normalized by their sum.

    When every kernel value vanishes the weights fall back to the uniform
    1/n vector, so the output is always a probability vector.
    """
    xs = _as_matrix(covariates)
    pt = _as_point(x, xs.shape[1])
    scaled = (pt[None, :] - xs) / scheme.bandwidth
    if scheme.kind == "uniform":
        vals = (np.linalg.norm(scaled, axis=1) <= 1.0).astype(float)
    else:
        vals = np.asarray(scheme.kernel(scaled), dtype=float).reshape(-1)
        if np.any(vals < 0):
            raise ValueError("kernel returned negative values")
    total = vals.sum()
    n = xs.shape[0]
    if total > 0:
        values = vals / total
    else:
        values = np.full(n, 1.0 / n)
    return WeightVector(values=values, x=pt, scheme=scheme.describe())


def knn_weights(scheme: KnnScheme, covariates, x) -> WeightVector:
    """Weight 1/kappa on each of the kappa nearest covariates, 0 elsewhere."""
    xs = _as_matrix(covariates)
    pt = _as_point(x, xs.shape[1])
    n = xs.shape[0]
    if scheme.kappa > n:
        raise ValueError(f"kappa = {scheme.kappa} exceeds sample size {n}")
    dists = np.linalg.norm(xs - pt[None, :], axis=1)
    # Stable sort realizes the smallest-index tie rule.
    order = np.argsort(dists, kind="stable")[: scheme.kappa]
    values = np.zeros(n)
    values[order] = 1.0 / scheme.kappa
    return WeightVector(values=values, x=pt, scheme=scheme.describe())


def evaluate_weights(scheme, covariates, x) -> WeightVector:
    if isinstance(scheme, KernelScheme):
        return kernel_weights(scheme, covariates, x)
    if isinstance(scheme, KnnScheme):
        return knn_weights(scheme, covariates, x)
    raise TypeError(f"unsupported scheme type: {type(scheme).__name__}")


@dataclass(frozen=True)
class DiagnosticsRow:
    n: int
    max_weight: float
    max_weight_se: float
    far_weight: float
    far_weight_se: float


def stone_diagnostics(
    scheme_for_n,
    model,
    n_grid,
    eps: float,
    replications: int,
    seed: int,
    test_points: int = 4,
) -> list[DiagnosticsRow]:
    """Monte-Carlo estimates of the two checkable weight-consistency limits.

    For each sample size the table reports E[max_i W_i(X)] and the expected
    weight mass E[sum_i W_i(X) 1{||X_i - X|| > eps}] placed outside the
    eps-ball, with standard errors over replications.  Both must vanish
    along valid schedules for the local-averaging estimator to be
    universally consistent; the remaining (bounded-operator) condition is
    not estimable from samples and is not diagnosed.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    n_grid = [int(n) for n in n_grid]
    if not n_grid:
        raise ValueError("n_grid must be nonempty")
    if replications < 2:
        raise ValueError("need at least 2 replications for standard errors")
    schemer = scheme_for_n if callable(scheme_for_n) else (lambda _n: scheme_for_n)
    rows = []
    for n_idx, n in enumerate(n_grid):
        scheme = schemer(n)
        max_vals = np.empty(replications)
        far_vals = np.empty(replications)
        for rep in range(replications):
            ds = model.sample(n, seed=(seed, _STONE_TAG, n_idx, rep, 0))
            rng = stream(seed, _STONE_TAG, n_idx, rep, 1)
            queries = rng.random((test_points, model.k))
            maxes = np.empty(test_points)
            fars = np.empty(test_points)
            for t, q in enumerate(queries):
                wv = evaluate_weights(scheme, ds.covariates, q)
                maxes[t] = wv.values.max()
                far = np.linalg.norm(ds.covariates - q[None, :], axis=1) > eps
                fars[t] = float(wv.values[far].sum())
            max_vals[rep] = maxes.mean()
            far_vals[rep] = fars.mean()
        rows.append(
            DiagnosticsRow(
                n=n,
                max_weight=float(max_vals.mean()),
                max_weight_se=float(max_vals.std(ddof=1) / np.sqrt(replications)),
                far_weight=float(far_vals.mean()),
                far_weight_se=float(far_vals.std(ddof=1) / np.sqrt(replications)),
            )
        )
    return rows
