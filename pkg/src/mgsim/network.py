"""Peer-to-peer communication layer.

Agents are indexed 0..N-1.  A :class:`Topology` is an immutable, symmetric
neighbour structure; the channel functions corrupt transmitted states
{-1, 0, +1} independently per directed link.

Channel draw contract: each transmission consumes exactly one uniform u.
u < p_err/2 shifts the state by one step (cyclically -1 -> 0 -> +1 -> -1),
p_err/2 <= u < p_err shifts it by two, anything else delivers it intact.
Each wrong state therefore has probability p_err/2.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .config import Ring, SystemConfig, WattsStrogatz

__all__ = [
    "Topology",
    "TopologyError",
    "build_ring",
    "build_watts_strogatz",
    "build_topology",
    "transmit",
    "transmit_many",
    "gather_neighbor_states",
    "neighbor_sums",
    "write_edge_list",
    "read_edge_list",
]

MAX_ATTEMPTS = 100


class TopologyError(ValueError):
    pass


@dataclass(frozen=True)
class Topology:
    neighbor_lists: tuple  # tuple of sorted tuples

    @classmethod
    def from_adjacency(cls, adj) -> "Topology":
        return cls(tuple(tuple(sorted(nbrs)) for nbrs in adj))

    @property
    def N(self) -> int:
        return len(self.neighbor_lists)

    def neighbors(self, i: int) -> tuple:
        return self.neighbor_lists[i]

    def degree(self, i: int) -> int:
        return len(self.neighbor_lists[i])

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.array([len(x) for x in self.neighbor_lists], dtype=np.int64)

    @cached_property
    def receivers(self) -> np.ndarray:
        """Receiving agent of every directed link, links ordered (receiver, sender) ascending."""
        return np.repeat(np.arange(self.N), self.degrees)

    @cached_property
    def senders(self) -> np.ndarray:
        if not self.N or not self.degrees.sum():
            return np.zeros(0, dtype=np.int64)
        return np.concatenate([np.asarray(x, dtype=np.int64) for x in self.neighbor_lists])

    def edges(self) -> list:
        """Undirected edges as (i, j) with i < j, sorted."""
        return [(i, j) for i, nbrs in enumerate(self.neighbor_lists) for j in nbrs if i < j]

    def is_connected(self) -> bool:
        return _connected(self.neighbor_lists)


def _connected(adj) -> bool:
    n = len(adj)
    if n == 0:
        return True
    seen = [False] * n
    seen[0] = True
    queue = deque([0])
    count = 1
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                count += 1
                queue.append(v)
    return count == n


def build_ring(N: int) -> Topology:
    """Ring in which agent i talks to i-1 and i+1 (agents 0 and N-1 are neighbours).

    For N = 2 the two ring links coincide, leaving a single edge.
    """
    if N < 2:
        raise TopologyError(f"ring needs N >= 2, got {N}")
    return Topology.from_adjacency({(i - 1) % N, (i + 1) % N} for i in range(N))


def _lattice(N: int, k: int) -> list:
    adj = [set() for _ in range(N)]
    for u in range(N):
        for j in range(1, k // 2 + 1):
            v = (u + j) % N
            adj[u].add(v)
            adj[v].add(u)
    return adj


def _rewire(adj: list, N: int, k: int, beta: float, rng: np.random.Generator) -> None:
    for j in range(1, k // 2 + 1):
        for u in range(N):
            v = (u + j) % N
            if rng.random() >= beta:
                continue
            if len(adj[u]) >= N - 1 or v not in adj[u]:
                continue
            w = int(rng.random() * N)
            while w == u or w in adj[u]:
                w = int(rng.random() * N)
            adj[u].discard(v)
            adj[v].discard(u)
            adj[u].add(w)
            adj[w].add(u)


def build_watts_strogatz(N: int, k: int, beta: float, rng: np.random.Generator) -> Topology:
    """Connected Watts-Strogatz small-world graph.

    Starts from a ring lattice with k/2 neighbours per side, then for each
    lattice edge (u, u+j), j = 1..k/2 in the outer loop, moves the far end to a
    uniformly chosen node with probability ``beta``, never creating self-loops
    or duplicate edges.  Disconnected results are redrawn from the same
    stream, up to ``MAX_ATTEMPTS`` times.
    """
    if k % 2 or k <= 0:
        raise TopologyError(f"k must be even and positive, got {k}")
    if k >= N:
        raise TopologyError(f"k must be < N, got k={k}, N={N}")
    if not 0.0 <= beta <= 1.0:
        raise TopologyError(f"beta out of [0,1]: {beta}")
    for _ in range(MAX_ATTEMPTS):
        adj = _lattice(N, k)
        if beta > 0:
            _rewire(adj, N, k, beta, rng)
        if _connected(adj):
            return Topology.from_adjacency(adj)
    raise TopologyError(f"no connected Watts-Strogatz graph after {MAX_ATTEMPTS} attempts (N={N}, k={k}, beta={beta})")


def build_topology(config: SystemConfig, rng: np.random.Generator) -> Topology:
    topo = config.topology
    if isinstance(topo, Ring):
        return build_ring(config.N)
    if isinstance(topo, WattsStrogatz):
        return build_watts_strogatz(config.N, topo.k, topo.beta, rng)
    raise TopologyError(f"unknown topology {topo!r}")


def _corrupt(states, u, p_err):
    shift = np.where(u < p_err / 2, 1, 2)
    wrong = (states + 1 + shift) % 3 - 1
    return np.where(u < p_err, wrong, states)


def transmit(state: int, p_err: float, rng: np.random.Generator) -> int:
    u = rng.random()
    if u >= p_err:
        return state
    shift = 1 if u < p_err / 2 else 2
    return (state + 1 + shift) % 3 - 1


def transmit_many(states: np.ndarray, p_err: float, rng: np.random.Generator) -> np.ndarray:
    """Send each entry of ``states`` over its own link, in array order."""
    states = np.asarray(states, dtype=np.int64)
    u = rng.random(states.shape)
    return _corrupt(states, u, p_err)


def gather_neighbor_states(i: int, topology: Topology, prev_states, p_err: float, rng) -> list:
    """States of agent i's neighbours as received over noisy links, ascending neighbour order."""
    return [transmit(int(prev_states[j]), p_err, rng) for j in topology.neighbors(i)]


def neighbor_sums(topology: Topology, prev_states: np.ndarray, p_err: float, rng) -> np.ndarray:
    """Sum of received neighbour states for every agent.

    Consumes the stream exactly like calling :func:`gather_neighbor_states`
    for agents 0, 1, ..., N-1 in turn.
    """
    received = transmit_many(np.asarray(prev_states)[topology.senders], p_err, rng)
    return np.bincount(topology.receivers, weights=received, minlength=topology.N).astype(np.int64)


def write_edge_list(topology: Topology, path) -> None:
    lines = [f"{i} {j}\n" for i, j in topology.edges()]
    Path(path).write_text("".join(lines))


def read_edge_list(path, N: int) -> Topology:
    adj = [set() for _ in range(N)]
    for line in Path(path).read_text().splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        i, j = map(int, line.split())
        adj[i].add(j)
        adj[j].add(i)
    return Topology.from_adjacency(adj)
