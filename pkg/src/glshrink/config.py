"""Experiment configuration and rule-descriptor parsing."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields

from ._errors import UsageError
from .baselines import BaselineRule
from .kernels import PriorKernel, kernel_from_name
from .risk import default_q_n
from .rules import DecisionRuleSpec, EmpiricalBayes, FixedTau, FullBayes


class ConfigError(UsageError):
    """Invalid configuration; ``token`` names the offending value when known."""

    def __init__(self, message, token=None):
        super().__init__(message)
        self.token = token


@dataclass
class ExperimentConfig:
    n: int
    b_list: list
    rules: list
    replicates: int = 1000
    seed: int = 0
    q_n: int | None = None
    delta2: float = 1.5
    output_path: str = "results.csv"
    threads: int | str | None = None
    kernel: str = "horseshoe"
    # nτ/q_n -> C; "fixed:auto" uses tau = C q_n / n
    tau_constant: float = 1.0
    sign_mode: str = "random"
    placement: str = "random"
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 2:
            raise ConfigError(f"n must be an integer >= 2, got {self.n!r}", "n")
        if not self.rules:
            raise ConfigError("rules must be non-empty", "rules")
        if not self.b_list:
            raise ConfigError("b_list must be non-empty", "b_list")
        if self.replicates < 100:
            raise ConfigError(f"replicates must be >= 100, got {self.replicates}", "replicates")
        if not 1 <= self.resolved_q_n < self.n:
            raise ConfigError(f"q_n must lie in [1, n), got {self.resolved_q_n}", "q_n")
        if self.threads not in (None, "auto") and not (isinstance(self.threads, int) and self.threads >= 1):
            raise ConfigError(f"threads must be a positive integer or 'auto', got {self.threads!r}", "threads")
        if not self.tau_constant > 0:
            raise ConfigError("tau_constant must be positive", "tau_constant")

    @property
    def resolved_q_n(self) -> int:
        return self.q_n if self.q_n is not None else default_q_n(self.n, self.delta2)

    def kernel_object(self) -> PriorKernel:
        try:
            return kernel_from_name(self.kernel)
        except UsageError as exc:
            raise ConfigError(str(exc), self.kernel) from exc

    def to_dict(self) -> dict:
        out = asdict(self)
        extra = out.pop("extra")
        out.update(extra)
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)} - {"extra"}
        missing = [k for k in ("n", "b_list", "rules") if k not in raw]
        if missing:
            raise ConfigError(f"config is missing {', '.join(missing)}", missing[0])
        kwargs = {k: v for k, v in raw.items() if k in known}
        kwargs["extra"] = {k: v for k, v in raw.items() if k not in known}
        kwargs["b_list"] = [float(b) for b in kwargs["b_list"]]
        kwargs["rules"] = [str(r) for r in kwargs["rules"]]
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(raw)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _floats(token, parts, count):
    if len(parts) != count:
        raise ConfigError(f"wrong number of parameters in rule {token!r}", token)
    try:
        values = [float(p) for p in parts]
    except ValueError as exc:
        raise ConfigError(f"non-numeric parameter in rule {token!r}", token) from exc
    if not all(math.isfinite(v) for v in values):
        raise ConfigError(f"non-finite parameter in rule {token!r}", token)
    return values


def parse_rule(token: str, kernel: PriorKernel, n: int, q_n: int, tau_constant: float = 1.0):
    """Turn a rule descriptor such as ``"fixed:auto"`` or ``"bh:0.05"`` into a rule.

    Recognized: ``fixed:TAU|auto``, ``eb[:C1:C2]``, ``fb[:DELTA3:GRID]``,
    ``bh[:ALPHA|auto]``, ``ell[:T]`` and ``oracle``.
    """
    head, *parts = token.strip().split(":")
    try:
        if head == "fixed":
            if parts == ["auto"]:
                tau = tau_constant * q_n / n
            else:
                (tau,) = _floats(token, parts, 1)
            return DecisionRuleSpec(FixedTau(tau), kernel, label=token)
        if head == "eb":
            c1, c2 = _floats(token, parts, 2) if parts else (2.0, 1.0)
            return DecisionRuleSpec(EmpiricalBayes(c1, c2), kernel, label=token)
        if head == "fb":
            if parts:
                delta3, grid = _floats(token, parts, 2)
                if grid != int(grid):
                    raise ConfigError(f"grid size must be an integer in {token!r}", token)
                variant = FullBayes(delta3=delta3, grid_size=int(grid))
            else:
                variant = FullBayes()
            return DecisionRuleSpec(variant, kernel, label=token)
        if head == "bh":
            if not parts or parts == ["auto"]:
                return BaselineRule("bh", None, label=token)
            (alpha,) = _floats(token, parts, 1)
            if not 0 < alpha < 1:
                raise ConfigError(f"BH level must lie in (0, 1) in {token!r}", token)
            return BaselineRule("bh", alpha, label=token)
        if head == "ell":
            (t,) = _floats(token, parts, 1) if parts else (0.5,)
            if not 0 < t < 1:
                raise ConfigError(f"l-value threshold must lie in (0, 1) in {token!r}", token)
            return BaselineRule("ell", t, label=token)
        if head == "oracle" and not parts:
            return BaselineRule("oracle", label=token)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"invalid rule {token!r}: {exc}", token) from exc
    raise ConfigError(f"unknown rule descriptor {token!r}", token)
