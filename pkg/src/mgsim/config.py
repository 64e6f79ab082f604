"""Run configuration for the micro-grid simulator.

A :class:`SystemConfig` bundles the physical circuit, the communication
network, the demand-side policy and the run length.  Defaults reproduce the
baseline parameter set (V = 1 V, R_V = 2 ohm, R_0 = 200 ohm,
lambda_min = 0.0005, p_err = 0.01, Watts-Strogatz graph).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Any, Union

__all__ = [
    "Ring",
    "WattsStrogatz",
    "Baseline",
    "GlobalSignal",
    "Pricing",
    "SystemConfig",
    "ValidationResult",
    "ConfigError",
    "validate_config",
    "config_to_dict",
    "config_from_dict",
]


class ConfigError(ValueError):
    """Raised when a configuration violates its invariants."""

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class Ring:
    name = "ring"


@dataclass(frozen=True)
class WattsStrogatz:
    k: int = 4
    beta: float = 0.1
    name = "watts_strogatz"


@dataclass(frozen=True)
class Baseline:
    name = "baseline"


@dataclass(frozen=True)
class GlobalSignal:
    name = "signal"


@dataclass(frozen=True)
class Pricing:
    alpha: float = 0.2
    omega_center: float = 2.05
    omega_halfwidth: float = 0.05
    p1: float = 0.2
    p2: float = 5.0
    gain_eps: float = 1e-9
    name = "pricing"


Topology = Union[Ring, WattsStrogatz]
Policy = Union[Baseline, GlobalSignal, Pricing]

TOPOLOGIES = {"ring": Ring, "watts_strogatz": WattsStrogatz}
POLICIES = {"baseline": Baseline, "signal": GlobalSignal, "pricing": Pricing}


@dataclass(frozen=True)
class SystemConfig:
    """All parameters of one simulation run.

    ``R_0`` is the per-size load resistance; each physical resistor is
    ``R = N * R_0``, which keeps the optimal mean load per agent
    (``R_0 / R_V``) independent of ``N``.
    """

    N: int = 100
    V: float = 1.0
    R_V: float = 2.0
    R_0: float = 200.0
    lambda_min: float = 0.0005
    p_err: float = 0.01
    topology: Topology = field(default_factory=WattsStrogatz)
    policy: Policy = field(default_factory=Baseline)
    scale_voltage_with_sqrt_N: bool = False
    T: int = 5000
    burn_in: int = 1000
    seed: int = 0
    # price settles on the post-decision load n[t]; set True to use n[t-1]
    price_uses_previous_n: bool = False

    def replace(self, **changes) -> "SystemConfig":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class ValidationResult:
    errors: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.errors

    def __bool__(self) -> bool:
        return self.ok

    def raise_if_invalid(self) -> None:
        if self.errors:
            raise ConfigError(self.errors)


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def validate_config(config: SystemConfig) -> ValidationResult:
    """Check every invariant and collect all violations (not just the first)."""
    errs = []
    if not _is_int(config.N) or config.N < 2:
        errs.append(f"N must be an integer >= 2, got {config.N!r}")
    for key in ("V", "R_V", "R_0"):
        value = getattr(config, key)
        if not value > 0:
            errs.append(f"{key} must be > 0, got {value!r}")
    if not 0.0 <= config.p_err <= 1.0:
        errs.append(f"p_err out of [0,1]: {config.p_err!r}")
    if not _is_int(config.T) or config.T < 0:
        errs.append(f"T must be a non-negative integer, got {config.T!r}")
    if not _is_int(config.burn_in) or config.burn_in < 0:
        errs.append(f"burn_in must be a non-negative integer, got {config.burn_in!r}")
    elif _is_int(config.T) and config.T > 0 and config.burn_in >= config.T:
        errs.append(f"burn_in ({config.burn_in}) must be < T ({config.T})")
    elif config.T == 0 and config.burn_in != 0:
        errs.append("burn_in must be 0 when T = 0")
    if not _is_int(config.seed) or not 0 <= config.seed < 2**64:
        errs.append(f"seed must be an unsigned 64-bit integer, got {config.seed!r}")

    topo = config.topology
    if isinstance(topo, WattsStrogatz):
        if not _is_int(topo.k) or topo.k <= 0 or topo.k % 2:
            errs.append(f"Watts-Strogatz k must be an even positive integer, got {topo.k!r}")
        elif _is_int(config.N) and topo.k >= config.N:
            errs.append(f"Watts-Strogatz k ({topo.k}) must be < N ({config.N})")
        if not 0.0 <= topo.beta <= 1.0:
            errs.append(f"beta out of [0,1]: {topo.beta!r}")
    elif not isinstance(topo, Ring):
        errs.append(f"unknown topology {topo!r}")

    pol = config.policy
    if isinstance(pol, Pricing):
        if not pol.alpha > 0:
            errs.append(f"alpha must be > 0, got {pol.alpha!r}")
        if not pol.p1 >= 0:
            errs.append(f"p1 must be >= 0, got {pol.p1!r}")
        if not pol.p2 > pol.p1:
            errs.append(f"p2 ({pol.p2!r}) must be > p1 ({pol.p1!r})")
        if not pol.omega_halfwidth >= 0:
            errs.append(f"omega_halfwidth must be >= 0, got {pol.omega_halfwidth!r}")
        if not pol.gain_eps > 0:
            errs.append(f"gain_eps must be > 0, got {pol.gain_eps!r}")
    elif not isinstance(pol, (Baseline, GlobalSignal)):
        errs.append(f"unknown policy {pol!r}")
    return ValidationResult(tuple(errs))


def config_to_dict(config: SystemConfig) -> dict[str, Any]:
    """Flatten into plain JSON-friendly data (``topology``/``policy`` become tables)."""
    out: dict[str, Any] = {}
    for f in dataclasses.fields(config):
        value = getattr(config, f.name)
        if f.name in ("topology", "policy"):
            out[f.name] = {"kind": value.name, **dataclasses.asdict(value)}
        else:
            out[f.name] = value
    return out


def make_topology(kind: str, **params) -> Topology:
    try:
        cls = TOPOLOGIES[kind]
    except KeyError:
        raise ConfigError(f"unknown topology kind {kind!r} (expected one of {sorted(TOPOLOGIES)})")
    try:
        return cls(**params)
    except TypeError as exc:
        raise ConfigError(f"topology {kind!r}: {exc}") from None


def make_policy(kind: str, **params) -> Policy:
    try:
        cls = POLICIES[kind]
    except KeyError:
        raise ConfigError(f"unknown policy kind {kind!r} (expected one of {sorted(POLICIES)})")
    try:
        return cls(**params)
    except TypeError as exc:
        raise ConfigError(f"policy {kind!r}: {exc}") from None


def config_from_dict(data: dict[str, Any]) -> SystemConfig:
    """Inverse of :func:`config_to_dict`; unknown keys raise :class:`ConfigError`."""
    data = dict(data)
    kwargs: dict[str, Any] = {}
    if "topology" in data:
        t = dict(data.pop("topology"))
        kwargs["topology"] = make_topology(t.pop("kind", "watts_strogatz"), **t)
    if "policy" in data:
        p = dict(data.pop("policy"))
        kwargs["policy"] = make_policy(p.pop("kind", "baseline"), **p)
    known = {f.name for f in dataclasses.fields(SystemConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError([f"unknown key {k!r}" for k in unknown])
    kwargs.update(data)
    return SystemConfig(**kwargs)
