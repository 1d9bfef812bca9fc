"""Comparison procedures: oracle thresholding, BH, and the l-value rule."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import expit, ndtr

from ._errors import DomainError, UsageError
from .rules import DecisionVector

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class TwoGroupsModel:
    """Spike at zero mixed with a quasi-Cauchy slab, non-null weight ``p``."""

    p: float
    n: int

    def __post_init__(self):
        if not 1.0 / self.n <= self.p <= 1.0:
            raise DomainError(f"p must lie in [1/n, 1], got {self.p}")

    def ell_values(self, data) -> np.ndarray:
        return ell_values(data, self.p)


def log_quasi_cauchy_density(x):
    x = np.asarray(x, dtype=float)
    u = 0.5 * x * x
    with np.errstate(divide="ignore", invalid="ignore"):
        # (1 - e^-u)/u -> 1 as u -> 0, which yields f(0) = 1 / (2 sqrt(2 pi))
        ratio = np.where(u > 0.0, -np.expm1(-u) / np.where(u > 0.0, u, 1.0), 1.0)
    return np.log(0.5 * ratio) - _LOG_SQRT_2PI


def quasi_cauchy_density(x):
    """Convolution of the quasi-Cauchy slab with the standard normal."""
    out = np.exp(log_quasi_cauchy_density(x))
    return float(out) if np.ndim(out) == 0 else out


def _log_likelihood_ratio(x):
    """``log(f(x) / phi(x))`` for the slab convolution ``f``."""
    x = np.asarray(x, dtype=float)
    return log_quasi_cauchy_density(x) + 0.5 * x * x + _LOG_SQRT_2PI


def ell_values(data, p: float) -> np.ndarray:
    """Posterior probability that each mean is zero under the two-groups model."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must lie in [0, 1], got {p}")
    lr = _log_likelihood_ratio(data)
    if p == 0.0:
        return np.ones_like(lr)
    if p == 1.0:
        return np.zeros_like(lr)
    return expit(-(math.log(p) - math.log1p(-p) + lr))


def _score(p, s):
    """Derivative of the mixture log-likelihood in ``p``; ``s = f/phi - 1``."""
    with np.errstate(over="ignore", invalid="ignore"):
        terms = np.where(np.isinf(s), 1.0 / p, s / (1.0 + p * s))
    return float(np.sum(terms))


def mmle_p(data) -> float:
    """Marginal maximum likelihood estimate of the non-null proportion on ``[1/n, 1]``.

    The log-likelihood is concave in ``p``, so its maximizer is the root of
    the score or the endpoint where the score keeps its sign.
    """
    x = np.asarray(data, dtype=float)
    n = x.size
    if n < 2:
        raise UsageError(f"MMLE needs n >= 2, got {n}")
    with np.errstate(over="ignore"):
        s = np.expm1(_log_likelihood_ratio(x))
    lo = 1.0 / n
    if _score(lo, s) <= 0.0:
        return lo
    if _score(1.0, s) >= 0.0:
        return 1.0
    return brentq(_score, lo, 1.0, args=(s,), xtol=1e-12)


def mixture_log_likelihood(data, p: float) -> float:
    """Two-groups log-likelihood up to the ``sum log phi(X_i)`` constant."""
    lr = _log_likelihood_ratio(data)
    if p >= 1.0:
        return float(np.sum(lr))
    return float(np.sum(np.logaddexp(math.log1p(-p), math.log(p) + lr)))


def decide_ell(data, t: float = 0.5) -> DecisionVector:
    """Reject where the l-value at the MMLE of ``p`` is below ``t``."""
    if not 0.0 < t < 1.0:
        raise DomainError(f"t must lie in (0, 1), got {t}")
    x = np.asarray(data, dtype=float)
    p_hat = mmle_p(x)
    return DecisionVector((ell_values(x, p_hat) < t).astype(np.int8), {"p_hat": p_hat})


def two_sided_p_values(data) -> np.ndarray:
    x = np.abs(np.asarray(data, dtype=float))
    return 2.0 * ndtr(-x)


def bh_reject(p_values, alpha: float) -> np.ndarray:
    """Benjamini-Hochberg step-up on raw p-values; returns a 0/1 vector."""
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    p = np.asarray(p_values, dtype=float)
    n = p.size
    psi = np.zeros(n, dtype=np.int8)
    if n == 0:
        return psi
    ordered = np.sort(p)
    below = np.flatnonzero(ordered <= alpha * np.arange(1, n + 1) / n)
    if below.size:
        psi[p <= ordered[below[-1]]] = 1
    return psi


def bh_procedure(data, alpha: float) -> DecisionVector:
    """Two-sided BH step-up at level ``alpha``."""
    psi = bh_reject(two_sided_p_values(data), alpha)
    return DecisionVector(psi, {"alpha": alpha})


def universal_threshold(n: int, q_n: int) -> float:
    return math.sqrt(2.0 * math.log(n / q_n))


def oracle_threshold(data, q_n: int) -> DecisionVector:
    """Hard threshold at ``sqrt(2 log(n / q_n))`` with the sparsity known."""
    x = np.asarray(data, dtype=float)
    n = x.size
    if not 1 <= q_n < n:
        raise UsageError(f"need 1 <= q_n < n, got q_n={q_n}, n={n}")
    cut = universal_threshold(n, q_n)
    return DecisionVector((np.abs(x) >= cut).astype(np.int8), {"threshold": cut})


def default_bh_alpha(n: int) -> float:
    return 1.0 / math.log(n)


@dataclass(frozen=True)
class BaselineRule:
    """A baseline procedure with its parameter, in the same shape as rule specs.

    ``kind`` is ``"bh"``, ``"ell"`` or ``"oracle"``.  For BH, ``param=None``
    means ``alpha_n = 1/log n``.
    """

    kind: str
    param: float | None = None
    label: str | None = None

    def __post_init__(self):
        if self.kind not in ("bh", "ell", "oracle"):
            raise UsageError(f"unknown baseline {self.kind!r}")

    @property
    def rule_id(self) -> str:
        if self.label:
            return self.label
        if self.kind == "oracle":
            return "oracle"
        if self.kind == "bh" and self.param is None:
            return "bh:auto"
        return f"{self.kind}:{self.param:g}"

    def decide(self, data, q_n=None) -> DecisionVector:
        if self.kind == "oracle":
            if q_n is None:
                raise UsageError("oracle thresholding needs q_n")
            return oracle_threshold(data, q_n)
        if self.kind == "bh":
            alpha = default_bh_alpha(len(data)) if self.param is None else self.param
            return bh_procedure(data, alpha)
        return decide_ell(data, 0.5 if self.param is None else self.param)
