"""Aggregates over a trace.

Time averages run over rows t in [burn_in, T): the trace's final row is
excluded so that a window of T - burn_in rounds matches the 1/T sum over
t = 0..T-1 of the power-utilisation definition.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .physics import CircuitParams, DomainError
from .state import Trace

__all__ = [
    "SummaryStats",
    "cooperation_average",
    "power_utilization",
    "fairness_jain",
    "oscillation_stats",
    "per_agent_average_power",
    "summarize",
]


@dataclass(frozen=True)
class SummaryStats:
    c_avg: float
    P_util: float
    fairness_jain: float
    n_mean: float
    n_std: float
    n_cv: float
    P_i_avg: np.ndarray = field(repr=False)

    def as_row(self) -> dict:
        return {
            "c_avg": self.c_avg,
            "P_util": self.P_util,
            "fairness": self.fairness_jain,
            "n_mean": self.n_mean,
            "n_std": self.n_std,
            "n_cv": self.n_cv,
        }


def _window(trace: Trace, burn_in: int) -> slice:
    if burn_in < 0 or burn_in >= trace.T:
        raise DomainError(f"empty averaging window: burn_in={burn_in}, T={trace.T}")
    return slice(burn_in, trace.T)


def cooperation_average(trace: Trace, burn_in: int) -> float:
    """Mean fraction of agents in the cooperate state."""
    w = _window(trace, burn_in)
    return float(np.mean(trace.S[w] == -1))


def per_agent_average_power(trace: Trace, burn_in: int) -> np.ndarray:
    return trace.P[_window(trace, burn_in)].mean(axis=0)


def power_utilization(trace: Trace, burn_in: int) -> float:
    """Delivered power as a fraction of the maximum P_typ / 4."""
    cp = CircuitParams.from_config(trace.config)
    return float(4.0 / cp.P_typ * per_agent_average_power(trace, burn_in).sum())


def fairness_jain(x) -> float:
    """Jain's index (sum x)^2 / (N sum x^2); 1 for equal shares, 1/N for a monopoly."""
    x = np.asarray(x, dtype=float)
    if x.size == 0 or not np.any(x > 0):
        raise DomainError("fairness needs at least one strictly positive entry")
    x = x / x.max()  # keeps the squares clear of underflow and overflow
    return float(x.sum() ** 2 / (x.size * np.square(x).sum()))


def oscillation_stats(trace: Trace, burn_in: int) -> tuple:
    """Mean, population std and coefficient of variation of n over the window."""
    n = trace.n[_window(trace, burn_in)].astype(float)
    mean = float(n.mean())
    std = float(n.std())
    return mean, std, std / mean


def summarize(trace: Trace, burn_in: int | None = None) -> SummaryStats:
    if burn_in is None:
        burn_in = trace.config.burn_in
    P_avg = per_agent_average_power(trace, burn_in)
    n_mean, n_std, n_cv = oscillation_stats(trace, burn_in)
    return SummaryStats(
        c_avg=cooperation_average(trace, burn_in),
        P_util=power_utilization(trace, burn_in),
        fairness_jain=fairness_jain(P_avg),
        n_mean=n_mean,
        n_std=n_std,
        n_cv=n_cv,
        P_i_avg=P_avg,
    )
