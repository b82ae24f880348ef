"""Synthetic regression models with analytically known conditional laws.

Covariates are uniform on the unit cube; the conditional response law is
either a two-point (binary) law, a Gaussian or uniform location family, or
an independent Gaussian pair.  Parameter maps are built from affine or
radial-power profiles so every smoothness constant is available in closed
form, and each model exposes its exact pairwise W1 distance, making risk
evaluation free of discretization error.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Callable

import numpy as np
from scipy.integrate import quad

from ._rng import stream
from .bounds import ClassParams
from .measures import (
    AnalyticDistribution1D,
    DiscreteDistribution,
    gaussian_law,
    make_discrete,
    uniform_law,
)
from .regressor import Dataset


@dataclass(frozen=True)
class AffineMap:
    """x -> intercept + coefs . x, the canonical Lipschitz profile."""

    intercept: float
    coefs: tuple[float, ...]

    def __call__(self, xs: np.ndarray) -> np.ndarray:
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        return self.intercept + xs @ np.asarray(self.coefs)

    @property
    def holder_scale(self) -> float:
        """Smallest L with |f(x) - f(x')| <= L ||x - x'||."""
        return float(np.linalg.norm(self.coefs))


@dataclass(frozen=True)
class RadialPowerMap:
    """x -> offset + scale * ||x - center||^exponent.

    For exponent H in (0, 1] this is H-Hoelder with constant |scale|, since
    t -> t^H is subadditive.
    """

    offset: float
    scale: float
    center: tuple[float, ...]
    exponent: float

    def __post_init__(self):
        if not 0.0 < self.exponent <= 1.0:
            raise ValueError("exponent must lie in (0, 1]")

    def __call__(self, xs: np.ndarray) -> np.ndarray:
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        r = np.linalg.norm(xs - np.asarray(self.center)[None, :], axis=1)
        return self.offset + self.scale * r**self.exponent

    @property
    def holder_scale(self) -> float:
        return abs(self.scale)


@lru_cache(maxsize=1)
def _std_gaussian_dispersion() -> float:
    """int sqrt(Phi (1 - Phi)) dz for the standard normal, tails cut at 8."""
    from scipy.special import ndtr

    val, _ = quad(
        lambda z: np.sqrt(max(ndtr(z) * (1.0 - ndtr(z)), 0.0)),
        -8.0,
        8.0,
        epsabs=1e-12,
        limit=400,
    )
    return float(val)


def _check_cube(x, k: int) -> np.ndarray:
    pt = np.atleast_1d(np.asarray(x, dtype=float))
    if pt.shape != (k,):
        raise ValueError(f"query point must have dimension {k}")
    if np.any(pt < 0.0) or np.any(pt > 1.0):
        raise ValueError(f"query point {pt} lies outside the unit cube")
    return pt


class _ModelBase:
    """Shared sampling plumbing; concrete models define the response draw."""

    def _covariates(self, n: int, seed) -> tuple[np.ndarray, np.random.Generator]:
        if n < 1:
            raise ValueError("sample size must be >= 1")
        rng = stream(seed)
        return rng.random((n, self.k)), rng

    def exact_w1_to(self, x, x_other) -> float:
        a = self.param_profile(_check_cube(x, self.k)[None, :])
        b = self.param_profile(_check_cube(x_other, self.k)[None, :])
        return float(self.w1_gap(a, b)[0])

    def w1_many_to(self, xs, x) -> np.ndarray:
        """Vectorized W1(F_{x_i}, F_x) over rows of xs."""
        prof = self.param_profile(np.atleast_2d(np.asarray(xs, dtype=float)))
        ref = self.param_profile(_check_cube(x, self.k)[None, :])
        return self.w1_gap(prof, ref)

    def dispersion_at(self, x) -> float:
        return float(self.dispersion_profile(_check_cube(x, self.k)[None, :])[0])


@dataclass(frozen=True)
class BinaryModel(_ModelBase):
    """Two-point responses in {0, high_value} with covariate-dependent odds."""

    name: str
    high_value: float
    prob: Callable[[np.ndarray], np.ndarray]
    params: ClassParams
    kind: str = "binary"

    def __post_init__(self):
        if self.high_value <= 0:
            raise ValueError("high_value must be positive")
        if self.high_value > 4.0 * self.params.dispersion:
            raise ValueError(
                "high_value must not exceed 4x the declared dispersion ceiling"
            )

    @property
    def k(self) -> int:
        return self.params.dim

    @property
    def d(self) -> int:
        return 1

    def param_profile(self, xs: np.ndarray) -> np.ndarray:
        p = np.asarray(self.prob(xs), dtype=float)
        if np.any(p < 0.0) or np.any(p > 1.0):
            raise ValueError("success probability left [0, 1]")
        return p

    def w1_gap(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return self.high_value * np.abs(a - b)

    def dispersion_profile(self, xs: np.ndarray) -> np.ndarray:
        p = self.param_profile(xs)
        return self.high_value * np.sqrt(p * (1.0 - p))

    def sample(self, n: int, seed) -> Dataset:
        xs, rng = self._covariates(n, seed)
        p = self.param_profile(xs)
        ys = np.where(rng.random(n) < p, self.high_value, 0.0)
        return Dataset(xs, ys)

    def conditional_law(self, x) -> DiscreteDistribution:
        p = float(self.param_profile(_check_cube(x, self.k)[None, :])[0])
        return make_discrete([[0.0], [self.high_value]], [1.0 - p, p])


@dataclass(frozen=True)
class GaussianLocationModel(_ModelBase):
    """Y = mean(x) + sigma * Z with standard normal Z."""

    name: str
    mean: Callable[[np.ndarray], np.ndarray]
    sigma: float
    params: ClassParams
    kind: str = "gaussian_location"

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")

    @property
    def k(self) -> int:
        return self.params.dim

    @property
    def d(self) -> int:
        return 1

    def param_profile(self, xs: np.ndarray) -> np.ndarray:
        return np.asarray(self.mean(xs), dtype=float)

    def w1_gap(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        # W1 of a pure location shift is the shift size.
        return np.abs(a - b)

    def dispersion_profile(self, xs: np.ndarray) -> np.ndarray:
        xs = np.atleast_2d(xs)
        return np.full(xs.shape[0], self.sigma * _std_gaussian_dispersion())

    def sample(self, n: int, seed) -> Dataset:
        xs, rng = self._covariates(n, seed)
        ys = self.param_profile(xs) + self.sigma * rng.standard_normal(n)
        return Dataset(xs, ys)

    def conditional_law(self, x) -> AnalyticDistribution1D:
        m = float(self.param_profile(_check_cube(x, self.k)[None, :])[0])
        return gaussian_law(m, self.sigma)


@dataclass(frozen=True)
class UniformLocationModel(_ModelBase):
    """Y uniform on [mean(x) - width/2, mean(x) + width/2]."""

    name: str
    mean: Callable[[np.ndarray], np.ndarray]
    width: float
    params: ClassParams
    kind: str = "uniform_location"

    def __post_init__(self):
        if self.width <= 0:
            raise ValueError("width must be positive")

    @property
    def k(self) -> int:
        return self.params.dim

    @property
    def d(self) -> int:
        return 1

    def param_profile(self, xs: np.ndarray) -> np.ndarray:
        return np.asarray(self.mean(xs), dtype=float)

    def w1_gap(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return np.abs(a - b)

    def dispersion_profile(self, xs: np.ndarray) -> np.ndarray:
        xs = np.atleast_2d(xs)
        return np.full(xs.shape[0], np.pi / 8.0 * self.width)

    def sample(self, n: int, seed) -> Dataset:
        xs, rng = self._covariates(n, seed)
        ys = self.param_profile(xs) + self.width * (rng.random(n) - 0.5)
        return Dataset(xs, ys)

    def conditional_law(self, x) -> AnalyticDistribution1D:
        m = float(self.param_profile(_check_cube(x, self.k)[None, :])[0])
        return uniform_law(m - self.width / 2.0, m + self.width / 2.0)


@dataclass(frozen=True)
class IndependentGaussianPair(_ModelBase):
    """Two conditionally independent Gaussian components sharing a covariate.

    The conditional covariance between the components is identically zero,
    which gives a free oracle for the covariance plug-in.
    """

    name: str
    mean_first: Callable[[np.ndarray], np.ndarray]
    mean_second: Callable[[np.ndarray], np.ndarray]
    sigma: float
    dim_x: int
    kind: str = "gaussian_pair"
    params: ClassParams | None = None

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")

    @property
    def k(self) -> int:
        return self.dim_x

    @property
    def d(self) -> int:
        return 2

    def sample(self, n: int, seed) -> Dataset:
        xs, rng = self._covariates(n, seed)
        noise = rng.standard_normal((n, 2))
        ys = np.column_stack(
            (
                np.asarray(self.mean_first(xs)) + self.sigma * noise[:, 0],
                np.asarray(self.mean_second(xs)) + self.sigma * noise[:, 1],
            )
        )
        return Dataset(xs, ys)

    def conditional_law(self, x):
        raise ValueError("paired responses have no scalar conditional law")

    def exact_w1_to(self, x, x_other):
        raise ValueError("exact W1 is not available for paired responses")

    def true_functional(self, spec, x) -> float:
        if spec.kind == "cov":
            return 0.0
        raise ValueError(f"no closed-form value for {spec.kind!r} on paired responses")


# ---------------------------------------------------------------------------
# Certification against the declared smoothness class


@dataclass(frozen=True)
class CertificationReport:
    model: str
    resolution: int
    max_ratio: float
    max_dispersion: float
    declared: ClassParams
    passes: bool

    @property
    def ratio_margin(self) -> float:
        return 1.0 - self.max_ratio

    @property
    def dispersion_margin(self) -> float:
        return 1.0 - self.max_dispersion / self.declared.dispersion


def certify_class(model, resolution: int = 64, chunk: int = 256) -> CertificationReport:
    """Grid check of the declared smoothness class.

    Evaluates W1(F_x, F_x') / (L ||x - x'||^H) over all grid pairs at the
    given per-axis resolution and the dispersion at every grid point, and
    reports the observed maxima.  A failed certification is a report with
    ``passes`` False, not an error.
    """
    params = model.params
    if params is None:
        raise ValueError("model declares no smoothness class")
    axis = np.linspace(0.0, 1.0, resolution + 1)
    grid = np.array(list(product(axis, repeat=params.dim)))
    if grid.shape[0] > 500_000:
        raise ValueError("certification grid too large; lower the resolution")
    prof = model.param_profile(grid)
    max_ratio = 0.0
    for start in range(0, grid.shape[0], chunk):
        stop = min(start + chunk, grid.shape[0])
        gaps = model.w1_gap(prof[start:stop, None], prof[None, :])
        dists = np.linalg.norm(grid[start:stop, None, :] - grid[None, :, :], axis=2)
        mask = dists > 0
        ratios = gaps[mask] / (params.lipschitz * dists[mask] ** params.holder)
        if ratios.size:
            max_ratio = max(max_ratio, float(ratios.max()))
    max_disp = float(model.dispersion_profile(grid).max())
    passes = max_ratio <= 1.0 and max_disp <= params.dispersion
    return CertificationReport(
        model=model.name,
        resolution=resolution,
        max_ratio=max_ratio,
        max_dispersion=max_disp,
        declared=params,
        passes=passes,
    )


# ---------------------------------------------------------------------------
# Shipped presets


def _binary_k1() -> BinaryModel:
    params = ClassParams(holder=1.0, lipschitz=1.0, dispersion=1.1, dim=1)
    # p(x) = 1/2 + (L / (2 B)) x1 keeps the W1 ratio at one half of L.
    return BinaryModel(
        name="binary-k1",
        high_value=2.0,
        prob=AffineMap(0.5, (0.25,)),
        params=params,
    )


def _binary_k2() -> BinaryModel:
    params = ClassParams(holder=1.0, lipschitz=1.0, dispersion=1.1, dim=2)
    return BinaryModel(
        name="binary-k2",
        high_value=2.0,
        prob=AffineMap(0.5, (0.125, 0.125)),
        params=params,
    )


def _gaussian_k1() -> GaussianLocationModel:
    params = ClassParams(holder=1.0, lipschitz=1.0, dispersion=0.45, dim=1)
    return GaussianLocationModel(
        name="gaussian-k1",
        mean=AffineMap(0.0, (0.9,)),
        sigma=0.25,
        params=params,
    )


def _uniform_k1() -> UniformLocationModel:
    params = ClassParams(holder=1.0, lipschitz=1.0, dispersion=0.45, dim=1)
    return UniformLocationModel(
        name="uniform-k1",
        mean=AffineMap(0.0, (0.9,)),
        width=1.0,
        params=params,
    )


def _gaussian_pair_k1() -> IndependentGaussianPair:
    return IndependentGaussianPair(
        name="gaussian-pair-k1",
        mean_first=AffineMap(0.1, (0.8,)),
        mean_second=AffineMap(0.9, (-0.8,)),
        sigma=0.3,
        dim_x=1,
    )


PRESETS: dict[str, Callable[[], object]] = {
    "binary-k1": _binary_k1,
    "binary-k2": _binary_k2,
    "gaussian-k1": _gaussian_k1,
    "uniform-k1": _uniform_k1,
    "gaussian-pair-k1": _gaussian_pair_k1,
}


def make_preset(name: str):
    try:
        return PRESETS[name]()
    except KeyError:
        raise ValueError(
            f"unknown model preset {name!r}; available: {sorted(PRESETS)}"
        ) from None
