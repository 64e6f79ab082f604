"""Synchronous round loop.

One round, in order:

1. the aggregator signal is raised iff the policy is GlobalSignal and the
   previous load n[t-1] exceeds n_opt;
2. every directed link carries its sender's state from round t-1 through the
   noisy channel (all links, receivers then senders ascending);
3. every agent decides on round t-1 information (see ``decide_batch`` for the
   order of the selfishness draws);
4. all load changes are applied at once, then n, price, powers, objectives
   and gains are recomputed.

A run uses two streams derived from ``config.seed``: one builds the topology,
the other drives initialisation and all per-round draws.
"""

from __future__ import annotations

import numpy as np

from .config import GlobalSignal, Pricing, SystemConfig, validate_config
from .decision import apply_actions, benefit_gain, decide_batch, objectives
from .network import Topology, build_topology, neighbor_sums
from .physics import CircuitParams, agent_powers
from .rng import DYNAMICS_STREAM, TOPOLOGY_STREAM, derive_seed, make_stream
from .state import SimState, StepRecord, Trace, current_price, init_state

__all__ = ["step", "run", "initial_record", "topology_for"]


def _gains(policy, obj_now: np.ndarray, obj_prev: np.ndarray) -> np.ndarray:
    if isinstance(policy, Pricing):
        return benefit_gain(obj_now, obj_prev, policy.gain_eps)
    return (obj_now - obj_prev) / obj_prev


def step(sim: SimState, config: SystemConfig, topology: Topology, rng, cp: CircuitParams | None = None):
    """Advance one round; returns the new state and its record."""
    if cp is None:
        cp = CircuitParams.from_config(config)
    signal = isinstance(config.policy, GlobalSignal) and sim.n > cp.n_opt
    sums = neighbor_sums(topology, sim.S, config.p_err, rng)
    S = decide_batch(sim.gain, sums, signal, sim.s, sim.S, config.lambda_min, rng)
    a = apply_actions(sim.a, S)
    n = int(a.sum())
    P = agent_powers(a, n, cp)
    p_now = current_price(config, sim.n if config.price_uses_previous_n else n, cp)
    obj = objectives(config.policy, P, sim.omega, p_now)
    gain = _gains(config.policy, obj, sim.obj_prev)
    new = SimState(
        t=sim.t + 1, a=a, S=S, s=sim.s, omega=sim.omega, obj_prev=obj, gain=gain,
        n=n, signal_active=signal, price_now=p_now,
    )
    return new, StepRecord(new.t, S, a, n, P, signal, p_now)


def initial_record(sim: SimState, cp: CircuitParams) -> StepRecord:
    return StepRecord(sim.t, sim.S, sim.a, sim.n, agent_powers(sim.a, sim.n, cp), sim.signal_active, sim.price_now)


def topology_for(config: SystemConfig) -> Topology:
    """The topology a run with this config uses (pure function of config)."""
    return build_topology(config, make_stream(derive_seed(config.seed, TOPOLOGY_STREAM)))


def run(config: SystemConfig, topology: Topology | None = None) -> Trace:
    validate_config(config).raise_if_invalid()
    if topology is None:
        topology = topology_for(config)
    rng = make_stream(derive_seed(config.seed, DYNAMICS_STREAM))
    cp = CircuitParams.from_config(config)
    sim = init_state(config, rng)
    trace = Trace.allocate(config, config.T + 1)
    trace.put(initial_record(sim, cp))
    for _ in range(config.T):
        sim, rec = step(sim, config, topology, rng, cp)
        trace.put(rec)
    return trace
