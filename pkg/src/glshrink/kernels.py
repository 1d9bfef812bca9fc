"""Prior kernels for the local scale of a global-local shrinkage prior.

A kernel describes the density of the squared local scale,

    pi(lambda^2) = K * (lambda^2)^(-a-1) * L(lambda^2),

through the exponent ``a`` and the slowly varying part ``L``.  The normalizer
``K`` is never needed: every posterior functional built on a kernel is a
ratio of integrals in which it cancels.

Two families are shipped:

* three parameter beta normal, TPBN(alpha, beta).  The squared local scale is
  beta-prime(beta, alpha) distributed, which gives ``a = alpha`` and
  ``L(t) = (t / (1 + t))^(alpha + beta)``.  The horseshoe is TPBN(1/2, 1/2)
  and the Strawderman-Berger prior is TPBN(1/2, 1).
* inverse-gamma with shape ``a`` and unit scale, ``L(t) = exp(-1/t)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._errors import DomainError, UsageError

DEFAULT_GRID = np.logspace(-8, 8, 400)


@dataclass(frozen=True)
class PriorKernel:
    """Exponent ``a`` and slowly varying part ``L`` of a local-scale prior.

    ``M``, ``c0`` and ``t0`` are the declared bounds ``sup L <= M`` and
    ``L(t) >= c0`` for ``t >= t0``.  ``sampler(rng, size)`` draws the squared
    local scale from the normalized prior, when available.
    """

    a: float
    L: Callable = field(compare=False, repr=False)
    name: str = "custom"
    family_params: tuple = ()
    log_L: Callable | None = field(default=None, compare=False, repr=False)
    sampler: Callable | None = field(default=None, compare=False, repr=False)
    M: float = 1.0
    c0: float = 0.0
    t0: float = 1.0

    def __post_init__(self):
        if not self.a > 0:
            raise DomainError(f"kernel exponent a must be positive, got {self.a}")

    @property
    def is_horseshoe_type(self) -> bool:
        return self.a == 0.5

    def log_slowly_varying(self, t):
        """``log L(t)`` evaluated elementwise (no domain checks)."""
        if self.log_L is not None:
            return self.log_L(t)
        with np.errstate(divide="ignore"):
            return np.log(self.L(t))


@dataclass(frozen=True)
class KernelValidationReport:
    sup_L_on_grid: float
    min_L_tail_on_grid: float
    declared_M: float
    declared_c0: float
    declared_t0: float
    passed: bool


def eval_L(kernel: PriorKernel, t):
    """Evaluate the slowly varying part of ``kernel`` at ``t > 0``.

    Accepts a scalar or an array; a scalar in gives a float out.
    """
    arr = np.asarray(t, dtype=float)
    if np.any(~(arr > 0)) or np.any(~np.isfinite(arr)):
        raise DomainError(f"L is defined for finite t > 0, got {t!r}")
    out = kernel.L(arr)
    return float(out) if np.ndim(out) == 0 else out


def _standard_gamma(rng, shape, size):
    if shape == 0.5:
        z = rng.standard_normal(size)
        return 0.5 * z * z
    if shape == 1.0:
        return rng.standard_exponential(size)
    return rng.standard_gamma(shape, size)


def tpbn_kernel(alpha: float, beta: float, name: str | None = None) -> PriorKernel:
    """Three parameter beta normal kernel with ``a = alpha``."""
    if not (alpha > 0 and beta > 0):
        raise DomainError(f"TPBN parameters must be positive, got ({alpha}, {beta})")
    alpha = float(alpha)
    beta = float(beta)
    power = alpha + beta

    def L(t):
        return np.power(t / (1.0 + t), power)

    def log_L(t):
        return -power * np.log1p(1.0 / t)

    def sampler(rng, size):
        # beta-prime(beta, alpha) as a ratio of gammas
        return _standard_gamma(rng, beta, size) / _standard_gamma(rng, alpha, size)

    return PriorKernel(
        a=alpha,
        L=L,
        name=name or f"tpbn:{alpha:g}:{beta:g}",
        family_params=(alpha, beta),
        log_L=log_L,
        sampler=sampler,
        M=1.0,
        c0=0.5**power,
        t0=1.0,
    )


def inverse_gamma_kernel(shape: float) -> PriorKernel:
    """Inverse-gamma(shape, 1) prior on the squared local scale."""
    if not shape > 0:
        raise DomainError(f"inverse-gamma shape must be positive, got {shape}")
    shape = float(shape)

    def L(t):
        return np.exp(-1.0 / t)

    def log_L(t):
        return -1.0 / t

    def sampler(rng, size):
        return 1.0 / _standard_gamma(rng, shape, size)

    return PriorKernel(
        a=shape,
        L=L,
        name=f"inv-gamma:{shape:g}",
        family_params=(shape,),
        log_L=log_L,
        sampler=sampler,
        M=1.0,
        c0=float(np.exp(-1.0)),
        t0=1.0,
    )


def horseshoe() -> PriorKernel:
    return tpbn_kernel(0.5, 0.5, name="horseshoe")


def strawderman_berger() -> PriorKernel:
    return tpbn_kernel(0.5, 1.0, name="strawderman-berger")


def kernel_from_name(spec: str) -> PriorKernel:
    """Build a kernel from its CLI name.

    Accepted forms are ``horseshoe``, ``strawderman-berger``,
    ``tpbn:ALPHA:BETA`` and ``inv-gamma:A``.
    """
    token = spec.strip().lower()
    if token == "horseshoe":
        return horseshoe()
    if token == "strawderman-berger":
        return strawderman_berger()
    parts = token.split(":")
    try:
        if parts[0] == "tpbn" and len(parts) == 3:
            return tpbn_kernel(float(parts[1]), float(parts[2]))
        if parts[0] == "inv-gamma" and len(parts) == 2:
            return inverse_gamma_kernel(float(parts[1]))
    except ValueError as exc:
        raise UsageError(f"bad kernel parameters in {spec!r}: {exc}") from exc
    raise UsageError(f"unknown kernel {spec!r}")


def validate_kernel(
    kernel: PriorKernel,
    grid=None,
    M: float | None = None,
    c0: float | None = None,
    t0: float | None = None,
) -> KernelValidationReport:
    """Check the boundedness conditions on ``L`` over a finite grid.

    Bounds left as ``None`` fall back to the values declared on the kernel.
    """
    grid = DEFAULT_GRID if grid is None else np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise UsageError("validation grid is empty")
    if np.any(np.diff(grid) < 0):
        raise UsageError("validation grid must be sorted ascending")
    M = kernel.M if M is None else float(M)
    c0 = kernel.c0 if c0 is None else float(c0)
    t0 = kernel.t0 if t0 is None else float(t0)

    values = np.atleast_1d(eval_L(kernel, grid))
    tail = values[grid >= t0]
    if tail.size == 0:
        raise UsageError(f"no grid point at or above t0={t0}")
    sup_L = float(values.max())
    min_tail = float(tail.min())
    return KernelValidationReport(
        sup_L_on_grid=sup_L,
        min_L_tail_on_grid=min_tail,
        declared_M=M,
        declared_c0=c0,
        declared_t0=t0,
        passed=bool(sup_L <= M and min_tail >= c0),
    )
