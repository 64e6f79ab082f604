"""Agent/system state and the per-step trace."""

from __future__ import annotations

import json
import zipfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .config import Pricing, SystemConfig, config_from_dict, config_to_dict, validate_config
from .decision import objectives, price
from .physics import CircuitParams, agent_powers

__all__ = ["AgentState", "SimState", "StepRecord", "Trace", "init_state", "current_price"]

_DEFAULT_PRICING = Pricing()


@dataclass(frozen=True)
class AgentState:
    a_i: int
    S_i: int
    s_i: float
    omega_i: float
    obj_prev: float
    gain: float


@dataclass
class SimState:
    """Whole-system state after round ``t``; per-agent fields are arrays."""

    t: int
    a: np.ndarray
    S: np.ndarray
    s: np.ndarray
    omega: np.ndarray
    obj_prev: np.ndarray
    gain: np.ndarray
    n: int
    signal_active: bool
    price_now: float

    @property
    def N(self) -> int:
        return self.a.shape[0]

    @property
    def agents(self) -> list:
        return [
            AgentState(int(a), int(S), float(s), float(w), float(o), float(g))
            for a, S, s, w, o, g in zip(self.a, self.S, self.s, self.omega, self.obj_prev, self.gain)
        ]

    def equals(self, other: "SimState") -> bool:
        """Bitwise equality of every field."""
        arrays = ("a", "S", "s", "omega", "obj_prev", "gain")
        return (
            (self.t, self.n, self.signal_active, self.price_now)
            == (other.t, other.n, other.signal_active, other.price_now)
            and all(getattr(self, k).tobytes() == getattr(other, k).tobytes() for k in arrays)
        )


def current_price(config: SystemConfig, n: int, cp: CircuitParams) -> float:
    pol = config.policy
    if not isinstance(pol, Pricing):
        return 0.0
    return price(n, cp.n_opt, pol.p1, pol.p2)


def init_state(config: SystemConfig, rng: np.random.Generator) -> SimState:
    """Initial state: one resistor each, random genes, valuations and states.

    Three uniforms per agent in index order: selfishness, valuation, initial
    state.  Valuations are drawn under every policy so that changing the
    policy leaves the other draws untouched.
    """
    validate_config(config).raise_if_invalid()
    N = config.N
    pol = config.policy if isinstance(config.policy, Pricing) else _DEFAULT_PRICING
    u = rng.random((N, 3))
    s = u[:, 0].copy()
    omega = pol.omega_center + pol.omega_halfwidth * (2.0 * u[:, 1] - 1.0)
    S = (np.floor(3.0 * u[:, 2]).astype(np.int8) - 1).astype(np.int8)
    a = np.ones(N, dtype=np.int64)
    n = N
    cp = CircuitParams.from_config(config)
    p_now = current_price(config, n, cp)
    obj = objectives(config.policy, agent_powers(a, n, cp), omega, p_now)
    return SimState(
        t=0, a=a, S=S, s=s, omega=omega, obj_prev=np.asarray(obj, dtype=float),
        gain=np.zeros(N), n=n, signal_active=False, price_now=p_now,
    )


@dataclass(frozen=True)
class StepRecord:
    t: int
    S: np.ndarray
    a: np.ndarray
    n: int
    P: np.ndarray
    signal: bool
    price: float


@dataclass
class Trace:
    """Records for t = 0 (initial state) through t = T.

    Row t of each array belongs to round t; per-agent arrays have shape
    (T + 1, N).  ``P`` holds exact circuit powers in watts.
    """

    config: SystemConfig
    S: np.ndarray
    a: np.ndarray
    n: np.ndarray
    P: np.ndarray
    signal: np.ndarray
    price: np.ndarray

    @property
    def seed(self) -> int:
        return self.config.seed

    @property
    def T(self) -> int:
        return self.n.shape[0] - 1

    @property
    def N(self) -> int:
        return self.S.shape[1]

    def __len__(self) -> int:
        return self.n.shape[0]

    @property
    def P_all(self) -> np.ndarray:
        return self.P.sum(axis=1)

    def record(self, t: int) -> StepRecord:
        return StepRecord(t, self.S[t], self.a[t], int(self.n[t]), self.P[t], bool(self.signal[t]), float(self.price[t]))

    def records(self):
        for t in range(len(self)):
            yield self.record(t)

    @classmethod
    def allocate(cls, config: SystemConfig, rows: int) -> "Trace":
        N = config.N
        return cls(
            config=config,
            S=np.zeros((rows, N), dtype=np.int8),
            a=np.zeros((rows, N), dtype=np.int32),
            n=np.zeros(rows, dtype=np.int64),
            P=np.zeros((rows, N), dtype=np.float64),
            signal=np.zeros(rows, dtype=bool),
            price=np.zeros(rows, dtype=np.float64),
        )

    def put(self, rec: StepRecord) -> None:
        t = rec.t
        self.S[t] = rec.S
        self.a[t] = rec.a
        self.n[t] = rec.n
        self.P[t] = rec.P
        self.signal[t] = rec.signal
        self.price[t] = rec.price

    def fingerprint(self) -> bytes:
        """Concatenated raw bytes of every array, for bitwise comparisons."""
        return b"".join(x.tobytes() for x in (self.S, self.a, self.n, self.P, self.signal, self.price))

    def save(self, path) -> None:
        """Compressed ``.npz``; entries carry a fixed timestamp so equal traces give equal bytes."""
        meta = {"config": config_to_dict(self.config), "seed": self.seed, "version": __version__}
        arrays = {
            "S": self.S, "a": self.a, "n": self.n, "P": self.P, "signal": self.signal, "price": self.price,
            "meta": np.array(json.dumps(meta, sort_keys=True)),
        }
        with zipfile.ZipFile(path, "w") as zf:
            for name, arr in arrays.items():
                info = zipfile.ZipInfo(name + ".npy", date_time=(1980, 1, 1, 0, 0, 0))
                info.compress_type = zipfile.ZIP_DEFLATED
                with zf.open(info, "w") as fh:
                    np.lib.format.write_array(fh, arr, allow_pickle=False)

    @classmethod
    def load(cls, path) -> "Trace":
        with np.load(Path(path)) as data:
            meta = json.loads(str(data["meta"]))
            return cls(
                config=config_from_dict(meta["config"]),
                S=data["S"], a=data["a"], n=data["n"], P=data["P"], signal=data["signal"], price=data["price"],
            )
