"""DC circuit layer: one source (V, R_V) feeding n equal resistors in parallel.

Every resistor has value R = N * R_0.  With n of them in parallel the source
current is V / (R_V + R/n), so resistor-level power is V^2 R / (n R_V + R)^2
and an agent owning a_i resistors draws a_i times that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import SystemConfig

__all__ = [
    "DomainError",
    "CircuitParams",
    "agent_power_exact",
    "agent_powers",
    "total_power_exact",
    "power_eq1",
    "optimal_resistors",
    "relative_gain",
    "approx_gain",
]


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class CircuitParams:
    V_eff: float
    R_V: float
    R: float
    N: int

    @classmethod
    def from_config(cls, config: SystemConfig) -> "CircuitParams":
        return cls.build(config.N, config.V, config.R_V, config.R_0, config.scale_voltage_with_sqrt_N)

    @classmethod
    def build(cls, N: int, V: float, R_V: float, R_0: float, scale_voltage: bool = False) -> "CircuitParams":
        V_eff = V * math.sqrt(N) if scale_voltage else V
        return cls(V_eff=V_eff, R_V=R_V, R=N * R_0, N=N)

    @property
    def R_0(self) -> float:
        return self.R / self.N

    @property
    def mu0(self) -> float:
        """Optimal mean number of resistors per agent, R_0 / R_V."""
        return self.R_0 / self.R_V

    @property
    def P_typ(self) -> float:
        return self.V_eff**2 / self.R_V

    @property
    def n_opt(self) -> float:
        return self.R / self.R_V


def _resistor_power(n, cp: CircuitParams):
    return cp.V_eff**2 * cp.R / (n * cp.R_V + cp.R) ** 2


def agent_power_exact(a_i: int, n: int, cp: CircuitParams) -> float:
    """Power in watts delivered to an agent owning ``a_i`` of the ``n`` active resistors."""
    if a_i < 1 or a_i > n:
        raise DomainError(f"need 1 <= a_i <= n, got a_i={a_i}, n={n}")
    return a_i * _resistor_power(n, cp)


def agent_powers(a: np.ndarray, n: int, cp: CircuitParams) -> np.ndarray:
    """Vectorised :func:`agent_power_exact` for a whole load vector."""
    return a * _resistor_power(n, cp)


def total_power_exact(n: int, cp: CircuitParams) -> float:
    if n < 1:
        raise DomainError(f"need n >= 1, got {n}")
    return n * _resistor_power(n, cp)


def power_eq1(a_i: float, a_avg: float, cp: CircuitParams) -> float:
    """Normalised per-agent power P_typ * a_i * mu0 / (a_avg + mu0)^2.

    Equal to ``N * agent_power_exact`` for the same state.  Only the exact
    form is used by the simulation; this one exists for cross-checks.
    """
    if a_i <= 0 or a_avg <= 0:
        raise DomainError(f"need positive a_i and a_avg, got {a_i}, {a_avg}")
    mu = cp.mu0
    return cp.P_typ * a_i * mu / (a_avg + mu) ** 2


def optimal_resistors(cp: CircuitParams) -> float:
    """Real-valued load count n_opt = R / R_V that maximises total power."""
    return cp.n_opt


def relative_gain(obj_now: float, obj_prev: float) -> float:
    if obj_prev == 0:
        raise DomainError("relative gain undefined for obj_prev = 0")
    return (obj_now - obj_prev) / obj_prev


def approx_gain(delta_a: int, a_i: int, delta_r: int, a_avg: float, cp: CircuitParams) -> float:
    """First-order gain: delta_a/a_i - (2/N) (delta_r + delta_a) / (a_avg + mu0)."""
    if a_i < 1:
        raise DomainError(f"need a_i >= 1, got {a_i}")
    return delta_a / a_i - (2.0 / cp.N) * (delta_r + delta_a) / (a_avg + cp.mu0)
