"""Agent decision rule and policy objectives.

States: -1 cooperate (remove a resistor), 0 ignore, +1 defect (add one).

Each round an agent whose last gain reached ``lambda_min`` repeats its
previous state.  Otherwise it cooperates if the aggregator signal is on, or
if the received neighbour states sum below zero.  Failing both, it draws
u1 and cooperates when u1 >= s_i; if not, it draws u2 and defects when
u2 < s_i, else ignores.  Higher selfishness s_i is more selfish in both draws.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import Pricing
from .physics import DomainError

__all__ = [
    "COOPERATE",
    "IGNORE",
    "DEFECT",
    "DecisionInputs",
    "decide",
    "decide_batch",
    "apply_action",
    "apply_actions",
    "utility",
    "utilities",
    "price",
    "cost",
    "benefit",
    "benefit_gain",
    "objective",
    "objectives",
]

COOPERATE, IGNORE, DEFECT = -1, 0, 1


@dataclass(frozen=True)
class DecisionInputs:
    lambda_prev: float
    neighbor_sum: int
    signal_active: bool
    s_i: float
    S_prev: int


def _explore(s_i: float, rng) -> int:
    if rng.random() >= s_i:
        return COOPERATE
    return DEFECT if rng.random() < s_i else IGNORE


def decide(inputs: DecisionInputs, lambda_min: float, rng) -> int:
    """New state of one agent; consumes zero, one or two uniforms from ``rng``."""
    if inputs.lambda_prev >= lambda_min:
        return inputs.S_prev
    if inputs.signal_active or inputs.neighbor_sum < 0:
        return COOPERATE
    return _explore(inputs.s_i, rng)


def decide_batch(gain, neighbor_sum, signal_active: bool, s, S_prev, lambda_min: float, rng) -> np.ndarray:
    """Apply :func:`decide` to every agent at once.

    Draw order: one u1 for each agent that reaches the selfishness branch,
    in ascending index order; then one u2 for each of those that did not
    cooperate, again ascending.
    """
    S_prev = np.asarray(S_prev)
    out = S_prev.astype(np.int8, copy=True)
    explore = np.asarray(gain) < lambda_min
    if signal_active:
        out[explore] = COOPERATE
        return out
    follow = explore & (np.asarray(neighbor_sum) < 0)
    out[follow] = COOPERATE
    idx = np.flatnonzero(explore & ~follow)
    if idx.size:
        u1 = rng.random(idx.size)
        coop = u1 >= s[idx]
        out[idx[coop]] = COOPERATE
        rest = idx[~coop]
        if rest.size:
            u2 = rng.random(rest.size)
            out[rest] = np.where(u2 < s[rest], DEFECT, IGNORE)
    return out


def apply_action(a_i: int, S: int) -> int:
    if S == DEFECT:
        return a_i + 1
    if S == COOPERATE:
        return max(a_i - 1, 1)
    return a_i


def apply_actions(a: np.ndarray, S: np.ndarray) -> np.ndarray:
    return a + (S == DEFECT) - ((S == COOPERATE) & (a > 1))


def utility(P: float, omega: float, alpha: float) -> float:
    """Quadratic utility that saturates at omega^2 / (2 alpha) once P >= omega / alpha."""
    if P < 0:
        raise DomainError(f"power must be non-negative, got {P}")
    if P < omega / alpha:
        return omega * P - 0.5 * alpha * P * P
    return omega * omega / (2.0 * alpha)


def utilities(P: np.ndarray, omega: np.ndarray, alpha: float) -> np.ndarray:
    return np.where(P < omega / alpha, omega * P - 0.5 * alpha * P * P, omega * omega / (2.0 * alpha))


def price(n: int, n_opt: float, p1: float, p2: float) -> float:
    return p1 if n <= n_opt else p2


def cost(p: float, P: float) -> float:
    return p * P


def benefit(U: float, c: float) -> float:
    return U - c


def benefit_gain(b_now, b_prev, eps: float):
    """Relative benefit change with denominator max(|b_prev|, eps).

    The absolute value keeps "better" positive when benefits are negative.
    Works elementwise on arrays.
    """
    return (b_now - b_prev) / np.maximum(np.abs(b_prev), eps)


def objective(policy, P_i: float, omega_i: float, p_now: float) -> float:
    """What an agent maximises: its power, or under pricing utility minus cost."""
    if isinstance(policy, Pricing):
        return benefit(utility(P_i, omega_i, policy.alpha), cost(p_now, P_i))
    return P_i


def objectives(policy, P: np.ndarray, omega: np.ndarray, p_now: float) -> np.ndarray:
    if isinstance(policy, Pricing):
        return utilities(P, omega, policy.alpha) - p_now * P
    return P
