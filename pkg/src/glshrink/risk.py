"""Monte Carlo risk estimation on sparse mean vectors.

Signals sit exactly on the boundary of the beta-min set, magnitude
``sqrt(2 log(n/q_n)) + b``, or at caller-supplied magnitudes.  Each
replicate redraws positions, signs and noise from streams keyed by
``(seed, replicate)``, so an estimate depends only on its inputs and never on
how replicates are scheduled across threads.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.special import ndtr

from ._errors import DomainError, UsageError
from .baselines import universal_threshold
from .rules import DecisionVector
from .seeding import generator, standard_normals


@dataclass(frozen=True)
class BetaMin:
    b: float


@dataclass(frozen=True)
class Varying:
    magnitudes: tuple

    def __post_init__(self):
        object.__setattr__(self, "magnitudes", tuple(float(m) for m in self.magnitudes))
        if not all(m > 0 for m in self.magnitudes):
            raise DomainError("signal magnitudes must be positive")


SignalMode = Union[BetaMin, Varying]


@dataclass(frozen=True)
class ThetaSpec:
    """Configuration of a sparse mean vector.

    ``sign_mode`` is ``"random"`` or ``"positive"``; ``placement`` is
    ``"random"`` or ``"prefix"``.
    """

    n: int
    q_n: int
    signal: SignalMode
    sign_mode: str = "random"
    placement: str = "random"

    def __post_init__(self):
        if not 1 <= self.q_n < self.n:
            raise UsageError(f"need 1 <= q_n < n, got q_n={self.q_n}, n={self.n}")
        if self.sign_mode not in ("random", "positive"):
            raise UsageError(f"unknown sign mode {self.sign_mode!r}")
        if self.placement not in ("random", "prefix"):
            raise UsageError(f"unknown placement {self.placement!r}")
        if isinstance(self.signal, Varying) and len(self.signal.magnitudes) != self.q_n:
            raise UsageError(
                f"expected {self.q_n} signal magnitudes, got {len(self.signal.magnitudes)}"
            )

    @property
    def universal_threshold(self) -> float:
        return universal_threshold(self.n, self.q_n)

    def magnitudes(self) -> np.ndarray:
        if isinstance(self.signal, BetaMin):
            a_b = self.universal_threshold + self.signal.b
            if not a_b > 0:
                raise DomainError(f"signal magnitude sqrt(2 log(n/q_n)) + b = {a_b} is not positive")
            return np.full(self.q_n, a_b)
        return np.asarray(self.signal.magnitudes)


def default_q_n(n: int, delta2: float = 1.5) -> int:
    return max(1, int(round(math.log(n) ** delta2)))


def generate_theta(spec: ThetaSpec, seed: int, replicate: int = 0) -> np.ndarray:
    """Sparse mean vector with exactly ``q_n`` non-zero entries."""
    magnitudes = spec.magnitudes()
    rng = generator(seed, "theta", replicate)
    if spec.placement == "prefix":
        positions = np.arange(spec.q_n)
    else:
        positions = np.sort(rng.choice(spec.n, size=spec.q_n, replace=False))
    if spec.sign_mode == "random":
        signs = np.where(rng.random(spec.q_n) < 0.5, -1.0, 1.0)
    else:
        signs = np.ones(spec.q_n)
    theta = np.zeros(spec.n)
    theta[positions] = signs * magnitudes
    return theta


def sample_data(theta, seed: int, replicate: int = 0) -> np.ndarray:
    """``X_i = theta_i + Z_i`` with ``Z_i`` keyed by ``(seed, replicate, i)``."""
    theta = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(theta)):
        raise DomainError("theta must be finite")
    return theta + standard_normals(theta.size, seed, "noise", replicate)


def _as_psi(psi):
    return psi.psi if isinstance(psi, DecisionVector) else np.asarray(psi)


def fdp_fnp(theta, psi) -> tuple[float, float]:
    """False discovery and false non-discovery proportions with max(., 1) denominators."""
    theta = np.asarray(theta)
    psi = _as_psi(psi)
    if theta.shape != psi.shape:
        raise UsageError(f"length mismatch: theta {theta.shape}, psi {psi.shape}")
    null = theta == 0
    rejected = psi == 1
    fdp = np.count_nonzero(null & rejected) / max(np.count_nonzero(rejected), 1)
    fnp = np.count_nonzero(~null & ~rejected) / max(np.count_nonzero(~null), 1)
    return float(fdp), float(fnp)


def hamming_loss(theta, psi) -> int:
    theta = np.asarray(theta)
    psi = _as_psi(psi)
    if theta.shape != psi.shape:
        raise UsageError(f"length mismatch: theta {theta.shape}, psi {psi.shape}")
    return int(np.count_nonzero((theta == 0) != (psi == 0)))


@dataclass(frozen=True)
class TheoryTargets:
    minimax: float
    lambda_n: float


def theory_targets(spec: ThetaSpec) -> TheoryTargets:
    """Asymptotic minimax risk for the configuration.

    On the beta-min set this is ``1 - Phi(b)``; for varying magnitudes it is
    the average of ``1 - Phi(a_j - sqrt(2 log(n/q_n)))``.
    """
    if isinstance(spec.signal, BetaMin):
        value = float(ndtr(-spec.signal.b))
        return TheoryTargets(value, value)
    shifts = spec.magnitudes() - spec.universal_threshold
    value = math.fsum(ndtr(-shifts)) / spec.q_n
    return TheoryTargets(value, value)


@dataclass(frozen=True)
class RiskEstimate:
    rule_id: str
    fdr: float
    fnr: float
    risk: float
    hamming_normalized: float
    se_fdr: float
    se_fnr: float
    se_risk: float
    se_hamming: float
    replicates: int
    target: float
    replicate_meta: tuple = field(default=(), repr=False, compare=False)

    def meta_values(self, key) -> np.ndarray:
        return np.array([m[key] for m in self.replicate_meta])


@dataclass(frozen=True)
class ReplicateOutcome:
    fdp: float
    fnp: float
    hamming: int
    rejections: int
    meta: dict


def run_replicate(rule, spec: ThetaSpec, seed: int, replicate: int) -> ReplicateOutcome:
    theta = generate_theta(spec, seed, replicate)
    data = sample_data(theta, seed, replicate)
    decision = rule.decide(data, spec.q_n)
    fdp, fnp = fdp_fnp(theta, decision)
    return ReplicateOutcome(fdp, fnp, hamming_loss(theta, decision), decision.rejections, decision.rule_meta)


def resolve_threads(threads) -> int:
    """``None`` falls back to ``GLSHRINK_THREADS``; ``"auto"`` means one per CPU."""
    if threads is None:
        threads = os.environ.get("GLSHRINK_THREADS", 1)
    if threads == "auto":
        return os.cpu_count() or 1
    threads = int(threads)
    if threads < 1:
        raise UsageError(f"threads must be positive, got {threads}")
    return threads


def _mean_se(values):
    values = np.asarray(values, dtype=float)
    mean = math.fsum(values) / values.size
    sd = math.sqrt(math.fsum((values - mean) ** 2) / (values.size - 1))
    return mean, sd / math.sqrt(values.size)


def estimate_risk(rule, spec: ThetaSpec, replicates: int, seed: int, threads=1) -> RiskEstimate:
    """Monte Carlo FDR, FNR, their sum and the q_n-normalized Hamming risk.

    ``rule`` is anything with a ``rule_id`` and a ``decide(data, q_n)`` method,
    such as :class:`~glshrink.rules.DecisionRuleSpec` or
    :class:`~glshrink.baselines.BaselineRule`.
    """
    if replicates < 100:
        raise UsageError(f"need at least 100 replicates, got {replicates}")
    workers = resolve_threads(threads)

    def one(r):
        return run_replicate(rule, spec, seed, r)

    if workers == 1:
        outcomes = [one(r) for r in range(replicates)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(one, range(replicates)))

    fdp = np.array([o.fdp for o in outcomes])
    fnp = np.array([o.fnp for o in outcomes])
    ham = np.array([o.hamming for o in outcomes], dtype=float) / spec.q_n
    fdr, se_fdr = _mean_se(fdp)
    fnr, se_fnr = _mean_se(fnp)
    _, se_risk = _mean_se(fdp + fnp)
    hamming, se_hamming = _mean_se(ham)
    return RiskEstimate(
        rule_id=rule.rule_id,
        fdr=fdr,
        fnr=fnr,
        risk=fdr + fnr,
        hamming_normalized=hamming,
        se_fdr=se_fdr,
        se_fnr=se_fnr,
        se_risk=se_risk,
        se_hamming=se_hamming,
        replicates=replicates,
        target=theory_targets(spec).minimax,
        replicate_meta=tuple(o.meta for o in outcomes),
    )
