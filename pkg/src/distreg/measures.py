"""Finitely supported probability measures and one-dimensional analytic laws.

Discrete measures carry their atoms and probability weights explicitly; in
one dimension they additionally maintain a sorted view with cumulative
weights, which makes CDF evaluation, generalized-inverse quantiles and the
dispersion integral exact piecewise computations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad

# Construction tolerances.  Tiny negative weights are rounding noise and get
# clamped; anything below NEG_TOL is treated as caller error.
NEG_TOL = -1e-15
SUM_TOL = 1e-9
WEIGHT_SUM_TOL = 1e-12

DISPERSION_QUAD_TOL = 1e-8


@dataclass(frozen=True)
class DiscreteDistribution:
    """Finitely supported probability measure on R^d.

    ``atoms`` has shape (m, d) and ``weights`` shape (m,).  Instances are
    immutable; build them through :func:`make_discrete`, which normalizes
    weights, drops zero-weight atoms and, for d = 1, sorts the support and
    merges duplicate atoms.
    """

    atoms: np.ndarray
    weights: np.ndarray
    cum_weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        atoms = np.atleast_2d(np.asarray(self.atoms, dtype=float))
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if atoms.shape[0] != weights.shape[0]:
            raise ValueError(
                f"atom/weight length mismatch: {atoms.shape[0]} vs {weights.shape[0]}"
            )
        if atoms.shape[0] == 0:
            raise ValueError("a distribution needs at least one atom")
        if np.any(weights < 0):
            raise ValueError("weights must be nonnegative")
        if abs(weights.sum() - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError("weights must sum to 1; use make_discrete to normalize")
        if atoms.shape[1] == 1:
            xs = atoms[:, 0]
            if np.any(np.diff(xs) <= 0):
                raise ValueError(
                    "1-d support must be strictly increasing; use make_discrete"
                )
        cum = np.cumsum(weights)
        cum[-1] = 1.0
        atoms.setflags(write=False)
        weights.setflags(write=False)
        cum.setflags(write=False)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "cum_weights", cum)

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]

    @property
    def support_size(self) -> int:
        return self.atoms.shape[0]

    @property
    def xs(self) -> np.ndarray:
        """Sorted 1-d support (requires dim == 1)."""
        _require_dim1(self)
        return self.atoms[:, 0]

    def mean(self) -> np.ndarray:
        return self.weights @ self.atoms


@dataclass(frozen=True)
class AnalyticDistribution1D:
    """Law on R given by its CDF and generalized-inverse quantile function.

    ``support`` may have infinite endpoints; ``quad_support`` then supplies a
    finite window outside which the tails are numerically negligible, so
    quadrature domains stay explicit.  ``integrated_cdf`` is the exact
    antiderivative z -> E[(z - Y)+] = int_{-inf}^z F(t) dt when one is
    available; it makes CDF-difference integrals closed-form.
    """

    cdf: Callable[[np.ndarray], np.ndarray]
    quantile: Callable[[np.ndarray], np.ndarray]
    support: tuple[float, float]
    mean: float
    moment: Callable[[float], float] | None = None
    quad_support: tuple[float, float] | None = None
    integrated_cdf: Callable[[np.ndarray], np.ndarray] | None = None

    def quad_bounds(self) -> tuple[float, float]:
        """Finite integration window for this law."""
        lo, hi = self.support
        if np.isfinite(lo) and np.isfinite(hi):
            return float(lo), float(hi)
        if self.quad_support is None:
            raise ValueError(
                "unbounded support with no finite quadrature window declared"
            )
        qlo, qhi = self.quad_support
        lo = qlo if not np.isfinite(lo) else lo
        hi = qhi if not np.isfinite(hi) else hi
        return float(lo), float(hi)


def make_discrete(atoms, weights) -> DiscreteDistribution:
    """Validated constructor for :class:`DiscreteDistribution`.

    Weights within SUM_TOL of a unit total are renormalized exactly,
    zero-weight atoms are removed, and for d = 1 bitwise-equal atoms are
    merged by summing their weights.
    """
    pts = np.asarray(atoms, dtype=float)
    if pts.ndim == 0:
        pts = pts.reshape(1, 1)
    elif pts.ndim == 1:
        pts = pts[:, None]
    elif pts.ndim != 2:
        raise ValueError("atoms must be scalars, a vector, or an (m, d) array")
    w = np.asarray(weights, dtype=float).reshape(-1)
    if pts.shape[0] != w.shape[0]:
        raise ValueError(
            f"atom/weight length mismatch: {pts.shape[0]} vs {w.shape[0]}"
        )
    if np.any(w < NEG_TOL):
        raise ValueError(f"materially negative weight: min = {w.min():.3e}")
    w = np.where(w < 0.0, 0.0, w)
    total = w.sum()
    if abs(total - 1.0) > SUM_TOL:
        raise ValueError(f"weights sum to {total!r}, outside tolerance {SUM_TOL}")
    # skip the division when the total is already 1 to rounding: construction
    # stays idempotent, so written measures read back bit-identical
    if abs(total - 1.0) > 1e-13:
        w = w / total
    keep = w > 0.0
    if not np.any(keep):
        raise ValueError("empty support after dropping zero-weight atoms")
    pts, w = pts[keep], w[keep]
    if pts.shape[1] == 1:
        xs = pts[:, 0]
        uniq, inverse = np.unique(xs, return_inverse=True)
        if uniq.shape[0] < xs.shape[0]:
            w = np.bincount(inverse, weights=w, minlength=uniq.shape[0])
        else:
            order = np.argsort(xs, kind="stable")
            uniq, w = xs[order], w[order]
        pts = uniq[:, None]
    return DiscreteDistribution(pts, w)


def dirac(point) -> DiscreteDistribution:
    """Unit mass at a single point."""
    return make_discrete([point], [1.0])


def _require_dim1(dist: DiscreteDistribution) -> None:
    if dist.dim != 1:
        raise ValueError(f"operation requires dim = 1, got dim = {dist.dim}")


def cdf_eval(dist: DiscreteDistribution, z):
    """Right-continuous step CDF: total weight of atoms <= z."""
    _require_dim1(dist)
    z = np.asarray(z, dtype=float)
    idx = np.searchsorted(dist.xs, z, side="right")
    padded = np.concatenate(([0.0], dist.cum_weights))
    out = padded[idx]
    return float(out) if out.ndim == 0 else out


def quantile_eval(dist: DiscreteDistribution, u):
    """Generalized inverse inf{z : F(z) >= u} for u in (0, 1)."""
    _require_dim1(dist)
    u_arr = np.asarray(u, dtype=float)
    if np.any(u_arr <= 0.0) or np.any(u_arr >= 1.0):
        raise ValueError("quantile level must lie strictly inside (0, 1)")
    idx = np.searchsorted(dist.cum_weights, u_arr, side="left")
    out = dist.xs[idx]
    return float(out) if out.ndim == 0 else out


def moment(dist: DiscreteDistribution, p: float) -> float:
    """Moment of order p >= 1: (sum_i w_i ||y_i||^p)^(1/p)."""
    if p < 1:
        raise ValueError("moment order must be >= 1")
    norms = np.linalg.norm(dist.atoms, axis=1)
    return float((dist.weights @ norms**p) ** (1.0 / p))


def dispersion(dist) -> float:
    """The integral of sqrt(F(z)(1 - F(z))) over the real line.

    For a discrete measure this is the exact piecewise sum over support gaps;
    zero iff the measure is a Dirac.  For an analytic law it is computed by
    adaptive quadrature over the declared window to absolute tolerance 1e-8.
    """
    if isinstance(dist, DiscreteDistribution):
        _require_dim1(dist)
        xs, cum = dist.xs, dist.cum_weights
        if xs.shape[0] == 1:
            return 0.0
        c = np.clip(cum[:-1], 0.0, 1.0)
        return float(np.sum(np.diff(xs) * np.sqrt(c * (1.0 - c))))
    if isinstance(dist, AnalyticDistribution1D):
        lo, hi = dist.quad_bounds()
        f = dist.cdf

        def integrand(z):
            fz = float(f(z))
            return np.sqrt(max(fz * (1.0 - fz), 0.0))

        val, _ = quad(integrand, lo, hi, epsabs=DISPERSION_QUAD_TOL, limit=400)
        return float(val)
    raise TypeError(f"unsupported distribution type: {type(dist).__name__}")


# ---------------------------------------------------------------------------
# Analytic law factories


def gaussian_law(mu: float, sigma: float) -> AnalyticDistribution1D:
    """Normal law with closed-form CDF antiderivative; tails cut at 8 sigma."""
    from scipy.special import ndtr, ndtri

    if sigma <= 0:
        raise ValueError("sigma must be positive")
    mu, sigma = float(mu), float(sigma)

    def cdf(z):
        return ndtr((np.asarray(z, dtype=float) - mu) / sigma)

    def quantile(u):
        return mu + sigma * ndtri(np.asarray(u, dtype=float))

    def integrated_cdf(z):
        s = (np.asarray(z, dtype=float) - mu) / sigma
        phi = np.exp(-0.5 * s * s) / np.sqrt(2.0 * np.pi)
        return (np.asarray(z) - mu) * ndtr(s) + sigma * phi

    def moment_p(p):
        val, _ = quad(
            lambda z: abs(z) ** p * np.exp(-0.5 * ((z - mu) / sigma) ** 2)
            / (sigma * np.sqrt(2 * np.pi)),
            mu - 8 * sigma,
            mu + 8 * sigma,
            limit=200,
        )
        return val ** (1.0 / p)

    return AnalyticDistribution1D(
        cdf=cdf,
        quantile=quantile,
        support=(-np.inf, np.inf),
        mean=mu,
        moment=moment_p,
        quad_support=(mu - 8.0 * sigma, mu + 8.0 * sigma),
        integrated_cdf=integrated_cdf,
    )


def uniform_law(lo: float, hi: float) -> AnalyticDistribution1D:
    """Uniform law on [lo, hi]."""
    if not hi > lo:
        raise ValueError("need hi > lo")
    lo, hi = float(lo), float(hi)
    width = hi - lo

    def cdf(z):
        return np.clip((np.asarray(z, dtype=float) - lo) / width, 0.0, 1.0)

    def quantile(u):
        return lo + width * np.asarray(u, dtype=float)

    def integrated_cdf(z):
        z = np.asarray(z, dtype=float)
        inside = np.clip(z, lo, hi)
        ramp = (inside - lo) ** 2 / (2.0 * width)
        return ramp + np.maximum(z - hi, 0.0)

    def moment_p(p):
        val, _ = quad(lambda z: abs(z) ** p / width, lo, hi, limit=200)
        return val ** (1.0 / p)

    return AnalyticDistribution1D(
        cdf=cdf,
        quantile=quantile,
        support=(lo, hi),
        mean=0.5 * (lo + hi),
        moment=moment_p,
        integrated_cdf=integrated_cdf,
    )
