"""Multiple-testing rules that threshold the posterior shrinkage weight.

All three rules reject ``H0: theta_i = 0`` when the posterior mean of
``1 - kappa_i`` exceeds a threshold (1/2 by default); they differ in how the
global scale ``tau`` is handled:

* fixed ``tau`` supplied by the caller,
* empirical Bayes, plugging in a thresholded-count estimate of ``tau``,
* full Bayes, averaging over a prior on ``[1/n, alpha_n]``.

For fixed ``tau`` the weight is non-decreasing in ``|x|``, so the rule is a
hard threshold at the root of ``E(1 - kappa | x, tau) = threshold``.  The
root is found once per ``tau`` and entries within a small band around it are
settled by evaluating the weight directly, which keeps the strict ``>``
exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Union

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq
from scipy.special import logsumexp

from ._errors import DomainError, NumericError, UsageError
from .kernels import PriorKernel
from .shrinkage import (
    DEFAULT_QUADRATURE,
    QuadratureConfig,
    ShrinkageQuery,
    expected_one_minus_kappa,
    shrinkage_grid,
)


@dataclass(frozen=True)
class DecisionVector:
    psi: np.ndarray
    rule_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        psi = np.asarray(self.psi)
        if psi.size and not np.all((psi == 0) | (psi == 1)):
            raise DomainError("decision entries must be 0 or 1")
        object.__setattr__(self, "psi", psi.astype(np.int8))

    def __len__(self):
        return self.psi.size

    @property
    def rejections(self) -> int:
        return int(self.psi.sum())


def _check_tau(tau):
    if not 0.0 < tau < 1.0:
        raise DomainError(f"tau must lie in (0, 1), got {tau}")


def _check_threshold(threshold):
    if not 0.0 < threshold < 1.0:
        raise DomainError(f"threshold must lie in (0, 1), got {threshold}")


@lru_cache(maxsize=4096)
def rejection_boundary(
    kernel: PriorKernel,
    tau: float,
    threshold: float = 0.5,
    config: QuadratureConfig = DEFAULT_QUADRATURE,
) -> float:
    """Smallest ``|x|`` at which ``E(1 - kappa | x, tau)`` reaches ``threshold``.

    Returns ``-inf`` when the weight already exceeds the threshold at 0.
    """
    def gap(r):
        return expected_one_minus_kappa(ShrinkageQuery(r, tau, kernel), config) - threshold

    if gap(0.0) > 0.0:
        return -math.inf
    hi = 1.0
    while gap(hi) <= 0.0:
        hi *= 2.0
        if hi > 1e6:
            raise NumericError(f"no rejection boundary below |x|=1e6 for tau={tau}")
    return brentq(gap, 0.0, hi, xtol=1e-13, rtol=8.9e-16)


def decide_fixed_tau(
    data,
    kernel: PriorKernel,
    tau: float,
    threshold: float = 0.5,
    config: QuadratureConfig = DEFAULT_QUADRATURE,
) -> DecisionVector:
    """Reject where ``E(1 - kappa_i | X_i, tau) > threshold``."""
    _check_tau(tau)
    _check_threshold(threshold)
    x = np.abs(np.asarray(data, dtype=float))
    if x.size == 0:
        return DecisionVector(np.zeros(0, dtype=np.int8), {"tau": tau})
    if not np.all(np.isfinite(x)):
        raise DomainError("data must be finite")
    boundary = rejection_boundary(kernel, float(tau), float(threshold), config)
    psi = (x > boundary).astype(np.int8)
    if math.isfinite(boundary):
        band = 1e-7 * (1.0 + boundary)
        for i in np.flatnonzero(np.abs(x - boundary) <= band):
            weight = expected_one_minus_kappa(ShrinkageQuery(float(x[i]), tau, kernel), config)
            psi[i] = weight > threshold
    return DecisionVector(psi, {"tau": float(tau), "boundary": boundary})


def estimate_tau_eb(data, c1: float = 2.0, c2: float = 1.0) -> float:
    """Thresholded-count estimate of ``tau``, floored at ``1/n``."""
    x = np.asarray(data, dtype=float)
    n = x.size
    if n < 2:
        raise UsageError(f"empirical Bayes needs n >= 2, got {n}")
    if c1 < 2 or c2 < 1:
        raise UsageError(f"need c1 >= 2 and c2 >= 1, got ({c1}, {c2})")
    count = int(np.count_nonzero(np.abs(x) > math.sqrt(c1 * math.log(n))))
    return max(1.0 / n, count / (c2 * n))


def decide_eb(
    data,
    kernel: PriorKernel,
    c1: float = 2.0,
    c2: float = 1.0,
    threshold: float = 0.5,
    config: QuadratureConfig = DEFAULT_QUADRATURE,
) -> DecisionVector:
    tau_hat = estimate_tau_eb(data, c1, c2)
    # tau_hat = 1 only when every entry is counted and c2 = 1
    tau_used = min(tau_hat, math.nextafter(1.0, 0.0))
    out = decide_fixed_tau(data, kernel, tau_used, threshold, config)
    return DecisionVector(out.psi, {**out.rule_meta, "tau_hat": tau_hat})


# ---------------------------------------------------------------------------
# full Bayes


def uniform_tau_prior(lower: float, upper: float) -> Callable:
    width = upper - lower

    def density(tau):
        tau = np.asarray(tau, dtype=float)
        return np.where((tau >= lower) & (tau <= upper), 1.0 / width, 0.0)

    return density


def default_alpha_n(n: int, delta3: float = 0.3) -> float:
    return math.log(n) ** delta3 / n


def tau_grid(lower: float, upper: float, grid_size: int) -> np.ndarray:
    if grid_size < 16:
        raise UsageError(f"tau grid needs at least 16 points, got {grid_size}")
    if not 0.0 < lower < upper < 1.0:
        raise UsageError(f"need 0 < lower < upper < 1, got [{lower}, {upper}]")
    grid = np.geomspace(lower, upper, grid_size)
    grid[0], grid[-1] = lower, upper
    return grid


def _trapezoid_coefficients(grid):
    d = np.diff(grid)
    c = np.zeros_like(grid)
    c[:-1] += 0.5 * d
    c[1:] += 0.5 * d
    return c


class _ShrinkageTable:
    """Cubic-spline tables of ``E(1 - kappa | x, tau)`` and ``log I_den`` on ``[0, x_max]``.

    One vector-valued spline per quantity covers every ``tau`` on the grid, so
    a lookup for all data costs a single interval search.
    """

    step = 0.02

    def __init__(self, kernel, grid, x_max):
        xs = np.linspace(0.0, x_max, int(round(x_max / self.step)) + 1)
        e = np.empty((xs.size, len(grid)))
        log_den = np.empty_like(e)
        for g, tau in enumerate(grid):
            e[:, g], log_den[:, g] = shrinkage_grid(xs, tau, kernel)
        # both functions are even in x, hence zero slope at the origin
        bc = ((1, np.zeros(len(grid))), "not-a-knot")
        self.e = CubicSpline(xs, e, bc_type=bc)
        self.log_den = CubicSpline(xs, log_den, bc_type=bc)

    def __call__(self, abs_x):
        return self.e(abs_x).T, self.log_den(abs_x).T


@lru_cache(maxsize=64)
def _table(kernel, grid, x_max):
    return _ShrinkageTable(kernel, grid, x_max)


def _table_values(data, kernel, grid):
    """Arrays of shape ``(len(grid), n)`` with the weights and log marginals.

    The table range is a multiple of 8 fixed by the data alone, so the
    interpolant never depends on what was evaluated before.
    """
    abs_x = np.abs(np.asarray(data, dtype=float))
    top = float(abs_x.max()) if abs_x.size else 0.0
    x_max = 8.0 * max(1, math.ceil(top / 8.0))
    return _table(kernel, tuple(float(t) for t in grid), x_max)(abs_x)


def _weights_from_log_den(log_den_sums, grid, tau_prior):
    prior = np.asarray(tau_prior(grid), dtype=float)
    with np.errstate(divide="ignore"):
        log_w = np.log(prior) + np.log(_trapezoid_coefficients(grid)) + log_den_sums
    if not np.any(np.isfinite(log_w)):
        raise UsageError("tau prior puts no mass on the grid")
    w = np.exp(log_w - logsumexp(log_w))
    return w / w.sum()


def tau_posterior_weights(
    data,
    kernel: PriorKernel,
    tau_prior: Callable | None,
    lower: float,
    upper: float,
    grid_size: int = 64,
) -> tuple[np.ndarray, np.ndarray]:
    """Discretized posterior of ``tau`` on a log-spaced grid over ``[lower, upper]``.

    Returns ``(grid, weights)``.  Weights are the prior density times the
    trapezoid cell width times the product of marginal likelihoods, normalized
    with log-sum-exp.
    """
    grid = tau_grid(lower, upper, grid_size)
    tau_prior = tau_prior or uniform_tau_prior(lower, upper)
    _, log_den = _table_values(data, kernel, grid)
    return grid, _weights_from_log_den(log_den.sum(axis=1), grid, tau_prior)


def fb_posterior_mean(data, kernel, grid, weights) -> np.ndarray:
    """``E(1 - kappa_i | X)`` as the weighted average of fixed-``tau`` weights."""
    e, _ = _table_values(data, kernel, grid)
    return weights @ e


# ---------------------------------------------------------------------------
# rule specifications


@dataclass(frozen=True)
class FixedTau:
    tau: float

    def __post_init__(self):
        _check_tau(self.tau)


@dataclass(frozen=True)
class EmpiricalBayes:
    c1: float = 2.0
    c2: float = 1.0

    def __post_init__(self):
        if self.c1 < 2 or self.c2 < 1:
            raise UsageError(f"need c1 >= 2 and c2 >= 1, got ({self.c1}, {self.c2})")


@dataclass(frozen=True)
class FullBayes:
    """Prior on ``tau`` supported on ``[lower, alpha_n]``.

    ``lower`` defaults to ``1/n`` and ``alpha_n`` to ``(log n)^delta3 / n``,
    both resolved against the data length.  ``tau_prior`` defaults to the
    uniform density.  ``lower == alpha_n`` is a point mass.
    """

    delta3: float = 0.3
    grid_size: int = 64
    alpha_n: float | None = None
    lower: float | None = None
    tau_prior: Callable | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.grid_size < 16:
            raise UsageError(f"grid_size must be at least 16, got {self.grid_size}")
        if not 0.0 < self.delta3:
            raise UsageError(f"delta3 must be positive, got {self.delta3}")

    def support(self, n: int) -> tuple[float, float]:
        lower = 1.0 / n if self.lower is None else self.lower
        upper = default_alpha_n(n, self.delta3) if self.alpha_n is None else self.alpha_n
        return lower, upper


Variant = Union[FixedTau, EmpiricalBayes, FullBayes]


@dataclass(frozen=True)
class DecisionRuleSpec:
    variant: Variant
    kernel: PriorKernel
    threshold: float = 0.5
    label: str | None = None

    def __post_init__(self):
        _check_threshold(self.threshold)

    @property
    def rule_id(self) -> str:
        if self.label:
            return self.label
        v = self.variant
        if isinstance(v, FixedTau):
            return f"fixed:{v.tau:g}"
        if isinstance(v, EmpiricalBayes):
            return f"eb:{v.c1:g}:{v.c2:g}"
        return f"fb:{v.delta3:g}:{v.grid_size}"

    def decide(self, data, q_n=None) -> DecisionVector:
        v = self.variant
        if isinstance(v, FixedTau):
            return decide_fixed_tau(data, self.kernel, v.tau, self.threshold)
        if isinstance(v, EmpiricalBayes):
            return decide_eb(data, self.kernel, v.c1, v.c2, self.threshold)
        return decide_fb(data, self)


def decide_fb(data, spec: DecisionRuleSpec) -> DecisionVector:
    """Reject where the full-Bayes posterior mean of ``1 - kappa_i`` exceeds the threshold."""
    v = spec.variant
    if not isinstance(v, FullBayes):
        raise UsageError("decide_fb needs a FullBayes rule specification")
    x = np.asarray(data, dtype=float)
    n = x.size
    if n == 0:
        return DecisionVector(np.zeros(0, dtype=np.int8), {})
    lower, upper = v.support(n)
    if lower == upper:
        out = decide_fixed_tau(x, spec.kernel, lower, spec.threshold)
        return DecisionVector(out.psi, {**out.rule_meta, "tau_posterior_mean": lower})
    if not 1.0 / n <= lower < upper < 1.0:
        raise UsageError(f"tau support [{lower}, {upper}] must satisfy 1/n <= lower < upper < 1")
    grid = tau_grid(lower, upper, v.grid_size)
    tau_prior = v.tau_prior or uniform_tau_prior(lower, upper)
    e, log_den = _table_values(x, spec.kernel, grid)
    weights = _weights_from_log_den(log_den.sum(axis=1), grid, tau_prior)
    means = weights @ e
    psi = (means > spec.threshold).astype(np.int8)
    meta = {
        "tau_posterior_mean": float(weights @ grid),
        "tau_lower": lower,
        "tau_upper": upper,
    }
    return DecisionVector(psi, meta)
