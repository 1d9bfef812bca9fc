"""Posterior shrinkage weights under a global-local prior.

For ``X | theta ~ N(theta, 1)``, ``theta | lambda, tau ~ N(0, lambda^2 tau^2)``
and a prior kernel on ``lambda^2``, the shrinkage coefficient is
``kappa = 1 / (1 + lambda^2 tau^2)``.  Substituting ``t = lambda^2`` gives

    E(1 - kappa | x, tau) = tau^2 * I_num / I_den

    I_num = int (1 + t tau^2)^(-3/2) t^(-a)   L(t) exp(-x^2 / (2 (1 + t tau^2))) dt
    I_den = int (1 + t tau^2)^(-1/2) t^(-a-1) L(t) exp(-x^2 / (2 (1 + t tau^2))) dt

where the common factor ``exp(x^2/2)`` has already been divided out, so
every integrand value is bounded for any finite ``x``.

Two evaluators live here.  :func:`expected_one_minus_kappa` is the accurate
scalar path (adaptive Gauss-Kronrod on pieces split at 1, 1/tau^2, 1/tau^4).
:func:`shrinkage_grid` is a vectorized trapezoid rule in ``log t`` used for
bulk work; the integrands are analytic in a strip around the real ``log t``
axis, so the rule converges geometrically in the step size.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import logsumexp

from ._errors import DomainError, NumericError, UnsupportedKernelError, UsageError
from .kernels import PriorKernel, eval_L
from .seeding import generator


@dataclass(frozen=True)
class ShrinkageQuery:
    x: float
    tau: float
    kernel: PriorKernel

    def __post_init__(self):
        if not 0.0 < self.tau < 1.0:
            raise DomainError(f"tau must lie in (0, 1), got {self.tau}")
        if not math.isfinite(self.x):
            raise DomainError(f"x must be finite, got {self.x}")


@dataclass(frozen=True)
class QuadratureConfig:
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_subdivisions: int = 200

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise UsageError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise UsageError("max_subdivisions must be at least 1")

    @staticmethod
    def split_points(tau: float) -> tuple[float, float, float]:
        return 1.0, tau**-2, tau**-4


DEFAULT_QUADRATURE = QuadratureConfig()


def _log_integrands(t, x2, tau, kernel):
    """Log of the numerator and denominator integrands at ``t``."""
    tt = t * tau * tau
    log_t = np.log(t)
    common = kernel.log_slowly_varying(t) - 0.5 * x2 / (1.0 + tt)
    log_onep = np.log1p(tt)
    log_num = 2.0 * math.log(tau) - 1.5 * log_onep - kernel.a * log_t + common
    log_den = -0.5 * log_onep - (kernel.a + 1.0) * log_t + common
    return log_num, log_den


def log_posterior_kappa_density_unnorm(query: ShrinkageQuery, kappa: float) -> float:
    """Unnormalized log posterior density of the shrinkage coefficient."""
    if not 0.0 < kappa < 1.0:
        raise DomainError(f"kappa must lie in (0, 1), got {kappa}")
    a = query.kernel.a
    t = (1.0 / kappa - 1.0) / query.tau**2
    return float(
        (a - 0.5) * math.log(kappa)
        - (a + 1.0) * math.log1p(-kappa)
        + math.log(eval_L(query.kernel, t))
        + 0.5 * (1.0 - kappa) * query.x**2
    )


def _peak_shift(x2, tau, kernel):
    """Rough maximum of the log integrands, used to keep values near 1."""
    s = np.linspace(-30.0, math.log((1.0 + x2) / tau**2) + 10.0, 241)
    log_num, log_den = _log_integrands(np.exp(s), x2, tau, kernel)
    # integrand in log t carries an extra factor t
    return float(max(np.max(log_num + s), np.max(log_den + s)))


def _quad(f, lo, hi, config, points=None):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        out = integrate.quad(
            f,
            lo,
            hi,
            epsabs=config.abs_tol,
            epsrel=config.rel_tol,
            limit=config.max_subdivisions,
            points=points,
            full_output=1,
        )
    value, err = out[0], out[1]
    ier = out[3] if len(out) > 3 else 0
    return value, err, ier


def shrinkage_integrals(query: ShrinkageQuery, config: QuadratureConfig = DEFAULT_QUADRATURE):
    """Return ``(num, den, log_shift)`` for a query.

    ``num`` already includes the ``tau^2`` factor, so the shrinkage weight is
    ``num / den``.  Both integrals are scaled by ``exp(-log_shift)``.
    """
    x2 = query.x * query.x
    tau = query.tau
    kernel = query.kernel
    shift = _peak_shift(x2, tau, kernel)
    s1, s2, s3 = config.split_points(tau)
    log_s2, log_s3 = math.log(s2), math.log(s3)

    def by_t(which):
        def f(t):
            if t <= 0.0:
                return 0.0
            return math.exp(_log_integrands(t, x2, tau, kernel)[which] - shift)
        return f

    def by_log_t(which):
        def f(s):
            return math.exp(_log_integrands(math.exp(s), x2, tau, kernel)[which] + s - shift)
        return f

    def by_inverse_t(which):
        def f(u):
            if u <= 0.0:
                return 0.0
            return math.exp(_log_integrands(1.0 / u, x2, tau, kernel)[which] - 2.0 * math.log(u) - shift)
        return f

    tail_points = None
    if x2 > 0.0:
        u_peak = tau * tau / x2
        if 0.0 < u_peak < 1.0 / s3:
            tail_points = [u_peak]

    totals = []
    for which in (0, 1):
        pieces = [
            _quad(by_t(which), 0.0, s1, config),
            _quad(by_log_t(which), 0.0, log_s2, config),
            _quad(by_log_t(which), log_s2, log_s3, config),
            _quad(by_inverse_t(which), 0.0, 1.0 / s3, config, points=tail_points),
        ]
        value = math.fsum(p[0] for p in pieces)
        err = math.fsum(p[1] for p in pieces)
        failed = any(p[2] != 0 for p in pieces)
        totals.append((value, err, failed))

    (num, num_err, num_fail), (den, den_err, den_fail) = totals
    budget = 1e3 * max(config.abs_tol, config.rel_tol * abs(num))
    budget_den = 1e3 * max(config.abs_tol, config.rel_tol * abs(den))
    if (num_fail and num_err > budget) or (den_fail and den_err > budget_den) or not den > 0:
        raise NumericError(
            f"quadrature did not converge for x={query.x}, tau={tau} "
            f"(num err {num_err:.3g}, den err {den_err:.3g})",
            numerator=num,
            denominator=den,
        )
    return num, den, shift


def expected_one_minus_kappa(query: ShrinkageQuery, config: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """Posterior mean of ``1 - kappa`` given one observation and ``tau``."""
    num, den, _ = shrinkage_integrals(query, config)
    return num / den


def expected_kappa(query: ShrinkageQuery, config: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    num, den, _ = shrinkage_integrals(query, config)
    return 1.0 - num / den


def log_marginal_unnorm(query: ShrinkageQuery, config: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """``log m(x | tau)`` up to an additive constant independent of ``x`` and ``tau``.

    Equals ``log I_den``; the dropped constant is ``log(K / sqrt(2 pi))``.
    """
    _, den, shift = shrinkage_integrals(query, config)
    return math.log(den) + shift


# ---------------------------------------------------------------------------
# bulk evaluator


def _s_range(x2_max, tau, kernel, h):
    lo = -40.0
    hi = math.log((1.0 + x2_max) / tau**2) + 40.0
    probe_x2 = np.array([0.0, x2_max])
    for _ in range(40):
        s = np.array([lo, hi])
        ln, ld = _log_integrands(np.exp(s)[None, :], probe_x2[:, None], tau, kernel)
        mid = np.linspace(lo, hi, 64)
        pn, pd = _log_integrands(np.exp(mid)[None, :], probe_x2[:, None], tau, kernel)
        peak = np.maximum((pn + mid).max(axis=1), (pd + mid).max(axis=1))
        ends = np.maximum(ln + s, ld + s)
        grow_lo = np.any(ends[:, 0] > peak - 50.0)
        grow_hi = np.any(ends[:, 1] > peak - 50.0)
        if not (grow_lo or grow_hi):
            break
        lo -= 40.0 if grow_lo else 0.0
        hi += 40.0 if grow_hi else 0.0
    n = int(math.ceil((hi - lo) / h)) + 1
    return np.linspace(lo, lo + (n - 1) * h, n)


def shrinkage_grid(x, tau: float, kernel: PriorKernel, step: float = 0.1, chunk: int = 512):
    """Vectorized ``(E(1 - kappa | x, tau), log I_den)`` for an array of ``x``.

    ``log I_den`` is on the same scale as :func:`log_marginal_unnorm`.
    """
    if not 0.0 < tau < 1.0:
        raise DomainError(f"tau must lie in (0, 1), got {tau}")
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    x2 = flat * flat
    if flat.size == 0:
        return np.empty_like(x), np.empty_like(x)
    s = _s_range(float(x2.max()), tau, kernel, step)
    t = np.exp(s)
    e_out = np.empty_like(flat)
    ld_out = np.empty_like(flat)
    log_h = math.log(step)
    for start in range(0, flat.size, chunk):
        block = x2[start:start + chunk, None]
        ln, ld = _log_integrands(t[None, :], block, tau, kernel)
        lnum = logsumexp(ln + s, axis=1)
        lden = logsumexp(ld + s, axis=1)
        e_out[start:start + chunk] = np.exp(lnum - lden)
        ld_out[start:start + chunk] = lden + log_h
    return e_out.reshape(x.shape), ld_out.reshape(x.shape)


# ---------------------------------------------------------------------------
# stochastic oracle and analytic rates


def importance_oracle(query: ShrinkageQuery, n_draws: int, seed: int, groups: int = 100):
    """Self-normalized importance-sampling estimate of ``E(1 - kappa | x, tau)``.

    Squared local scales are drawn from the prior and weighted by the
    marginal likelihood ``N(x; 0, 1 + tau^2 lambda^2)``.  The draws are split
    into ``groups`` blocks, each with its own generator keyed by
    ``(seed, block)``; the standard error is the delete-a-block jackknife.
    """
    if n_draws < 10_000:
        raise UsageError(f"importance oracle needs at least 10^4 draws, got {n_draws}")
    sampler = query.kernel.sampler
    if sampler is None:
        raise UnsupportedKernelError(f"kernel {query.kernel.name!r} has no direct sampler")
    tau2 = query.tau**2
    x2 = query.x**2
    sizes = np.full(groups, n_draws // groups)
    sizes[: n_draws % groups] += 1

    log_scale = np.empty(groups)
    num = np.empty(groups)
    den = np.empty(groups)
    for g in range(groups):
        rng = generator(seed, "importance", g)
        lam2 = sampler(rng, int(sizes[g]))
        v = 1.0 + tau2 * lam2
        log_w = -0.5 * np.log(v) - 0.5 * x2 / v
        m = log_w.max()
        w = np.exp(log_w - m)
        log_scale[g] = m
        num[g] = np.sum(w * (tau2 * lam2 / v))
        den[g] = np.sum(w)

    rescale = np.exp(log_scale - log_scale.max())
    num *= rescale
    den *= rescale
    total_num = math.fsum(num)
    total_den = math.fsum(den)
    estimate = total_num / total_den
    loo = (total_num - num) / (total_den - den)
    se = math.sqrt((groups - 1) / groups * float(np.sum((loo - loo.mean()) ** 2)))
    return estimate, se


def type1_bound_rate(kernel: PriorKernel, tau: float) -> float:
    """Shape of the type I error bound for horseshoe-type kernels (no constant)."""
    if not 0.0 < tau < math.exp(-1.0):
        raise DomainError(f"tau must lie in (0, 1/e), got {tau}")
    return tau * eval_L(kernel, tau**-2) / math.sqrt(math.log(tau**-2))


def large_a_upper_rate(kernel: PriorKernel, x: float, tau: float) -> float:
    """Log of the upper-bound rate on ``E(1 - kappa | x, tau)`` when ``a > 1/2``."""
    if not kernel.a > 0.5:
        raise UsageError(f"rate applies only to a > 1/2, got a={kernel.a}")
    if not 0.0 < tau < math.exp(-1.0):
        raise DomainError(f"tau must lie in (0, 1/e), got {tau}")
    if kernel.a < 1.0:
        return 0.5 * x * x + 2.0 * kernel.a * math.log(tau)
    return 0.5 * x * x + 2.0 * math.log(tau) + math.log(math.log(1.0 / tau))
