"""Plug-in summary statistics of (estimated) conditional distributions.

Each functional is evaluated exactly on discrete measures through the
quantile representation, and numerically on analytic laws.  The probability
weighted moment relies on a regularized incomplete beta function evaluated
by continued fractions.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import exp, lgamma, log, log1p

import numpy as np
from scipy.integrate import quad

from .measures import AnalyticDistribution1D, DiscreteDistribution, quantile_eval
from .ot import ConvergenceError
from .regressor import FittedRegressor, predict_distribution

BETA_TOL = 1e-10
BETA_MAX_ITER = 300


@dataclass(frozen=True)
class FunctionalSpec:
    """A named conditional summary statistic with its parameters.

    kinds: ``quantile`` (level alpha), ``cte`` (tail expectation above
    alpha), ``pwm`` (probability weighted moment of orders p, q > 0) and
    ``cov`` (covariance between the two response components, d = 2 only).
    """

    kind: str
    alpha: float | None = None
    p: float | None = None
    q: float | None = None

    def __post_init__(self):
        if self.kind in ("quantile", "cte"):
            if self.alpha is None or not 0.0 < self.alpha < 1.0:
                raise ValueError(f"{self.kind} needs alpha in (0, 1)")
        elif self.kind == "pwm":
            if self.p is None or self.q is None or self.p <= 0 or self.q <= 0:
                raise ValueError("pwm needs orders p > 0 and q > 0")
        elif self.kind != "cov":
            raise ValueError(f"unknown functional kind: {self.kind!r}")

    @classmethod
    def parse(cls, text: str) -> "FunctionalSpec":
        """Parse CLI notation: quantile:0.5, cte:0.9, pwm:1:2, cov."""
        parts = text.strip().split(":")
        kind = parts[0]
        try:
            if kind in ("quantile", "cte"):
                return cls(kind=kind, alpha=float(parts[1]))
            if kind == "pwm":
                return cls(kind=kind, p=float(parts[1]), q=float(parts[2]))
            if kind == "cov":
                return cls(kind="cov")
        except (IndexError, ValueError) as exc:
            raise ValueError(f"cannot parse functional spec {text!r}: {exc}") from exc
        raise ValueError(f"unknown functional kind in {text!r}")

    def label(self) -> str:
        if self.kind in ("quantile", "cte"):
            return f"{self.kind}:{self.alpha:g}"
        if self.kind == "pwm":
            return f"pwm:{self.p:g}:{self.q:g}"
        return "cov"


# ---------------------------------------------------------------------------
# Incomplete beta via continued fractions


def _beta_continued_fraction(a, b, x, tol, max_iter):
    # Modified Lentz evaluation of the standard continued fraction.
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        coef = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + coef * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + coef / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        coef = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + coef * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + coef / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < tol:
            return h
    raise ConvergenceError(
        f"incomplete beta continued fraction did not converge for a={a}, b={b}, x={x}"
    )


def regularized_incomplete_beta(
    a: float, b: float, x: float, tol: float = BETA_TOL, max_iter: int = BETA_MAX_ITER
) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1].

    Uses the continued fraction directly when x is below the symmetry point
    (a + 1)/(a + b + 2) and the reflection I_x(a, b) = 1 - I_{1-x}(b, a)
    otherwise, which keeps the fraction well conditioned.
    """
    if a <= 0 or b <= 0:
        raise ValueError("incomplete beta needs a, b > 0")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        a * log(x) + b * log1p(-x) - (lgamma(a) + lgamma(b) - lgamma(a + b))
    )
    if x < (a + 1.0) / (a + b + 2.0):
        return exp(ln_front) * _beta_continued_fraction(a, b, x, tol, max_iter) / a
    return 1.0 - exp(ln_front) * _beta_continued_fraction(b, a, 1.0 - x, tol, max_iter) / b


def beta_function(a: float, b: float) -> float:
    return exp(lgamma(a) + lgamma(b) - lgamma(a + b))


# ---------------------------------------------------------------------------
# Functionals on discrete measures


def quantile_functional(dist: DiscreteDistribution, alpha: float) -> float:
    """Generalized-inverse quantile at level alpha."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    return float(quantile_eval(dist, alpha))


def tail_expectation(dist: DiscreteDistribution, alpha: float) -> float:
    """Average of the quantile function over (alpha, 1), i.e. the mean of the
    upper tail beyond the alpha-quantile.

    Exact on discrete measures: each cumulative-weight segment contributes
    its atom times the part of the segment above alpha.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if dist.dim != 1:
        raise ValueError("tail expectation requires dim = 1")
    cum = dist.cum_weights
    lo = np.maximum(np.concatenate(([0.0], cum[:-1])), alpha)
    lengths = np.maximum(cum - lo, 0.0)
    return float(np.sum(dist.xs * lengths) / (1.0 - alpha))


def pwm(dist: DiscreteDistribution, p: float, q: float) -> float:
    """Probability weighted moment int_0^1 Q(u) u^p (1-u)^q du.

    Exact per segment: the quantile function is constant on each cumulative
    weight segment, and the u-integral over a segment is an incomplete beta
    difference.  Zero orders are allowed here (p = q = 0 recovers the mean);
    the CLI-facing FunctionalSpec keeps the strict p, q > 0 contract.
    """
    if p < 0 or q < 0:
        raise ValueError("pwm needs orders p >= 0 and q >= 0")
    if dist.dim != 1:
        raise ValueError("pwm requires dim = 1")
    full = beta_function(p + 1.0, q + 1.0)
    reg = np.array(
        [regularized_incomplete_beta(p + 1.0, q + 1.0, c) for c in dist.cum_weights]
    )
    upper = full * reg
    lower = np.concatenate(([0.0], upper[:-1]))
    return float(np.sum(dist.xs * (upper - lower)))


def covariance_functional(dist: DiscreteDistribution) -> float:
    """Covariance between the two components of a 2-d discrete measure."""
    if dist.dim != 2:
        raise ValueError(f"covariance requires dim = 2, got {dist.dim}")
    w = dist.weights
    y1, y2 = dist.atoms[:, 0], dist.atoms[:, 1]
    return float(w @ (y1 * y2) - (w @ y1) * (w @ y2))


# ---------------------------------------------------------------------------
# Dispatch over discrete measures and analytic laws


def evaluate_functional(dist, spec: FunctionalSpec) -> float:
    if isinstance(dist, DiscreteDistribution):
        if spec.kind == "quantile":
            return quantile_functional(dist, spec.alpha)
        if spec.kind == "cte":
            return tail_expectation(dist, spec.alpha)
        if spec.kind == "pwm":
            return pwm(dist, spec.p, spec.q)
        return covariance_functional(dist)
    if isinstance(dist, AnalyticDistribution1D):
        return _evaluate_on_law(dist, spec)
    raise TypeError(f"unsupported distribution type: {type(dist).__name__}")


def _evaluate_on_law(law: AnalyticDistribution1D, spec: FunctionalSpec) -> float:
    if spec.kind == "quantile":
        return float(law.quantile(spec.alpha))
    if spec.kind == "cte":
        val, _ = quad(
            lambda u: float(law.quantile(u)), spec.alpha, 1.0, epsabs=1e-10, limit=400
        )
        return val / (1.0 - spec.alpha)
    if spec.kind == "pwm":
        val, _ = quad(
            lambda u: float(law.quantile(u)) * u**spec.p * (1.0 - u) ** spec.q,
            0.0,
            1.0,
            epsabs=1e-10,
            limit=400,
        )
        return val
    raise ValueError("covariance is undefined for a scalar law")


def conditional_functional(model: FittedRegressor, spec: FunctionalSpec, x) -> float:
    """Plug-in estimate: the functional applied to the predicted distribution."""
    return evaluate_functional(predict_distribution(model, x), spec)
