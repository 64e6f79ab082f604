"""Acceptance criteria C1-C10, one test each.

Every test prints a single ``PASS``/``FAIL`` line (also collected in the
terminal summary).  Ensemble criteria share a cache of 20-seed runs with
T = 5000 and burn-in 1000; the whole module takes several minutes.

    pytest tests/test_acceptance.py -s
"""

import functools
import time

import numpy as np
import pytest
from scipy import stats

from conftest import synthetic_trace
from mgsim.config import Baseline, GlobalSignal, Pricing, Ring, SystemConfig, WattsStrogatz
from mgsim.engine import run
from mgsim.experiments import parse_config_text, run_sweep
from mgsim.metrics import power_utilization, summarize
from mgsim.network import transmit_many
from mgsim.physics import (
    CircuitParams,
    agent_power_exact,
    approx_gain,
    power_eq1,
    relative_gain,
    total_power_exact,
)
from mgsim.rng import derive_seed, make_stream

ENSEMBLE_SEED = 2017
REPLICATES = 20
SIZES = (10, 100, 1000)
TOPOLOGIES = {"ring": Ring(), "ws": WattsStrogatz()}
POLICIES = {"baseline": Baseline(), "signal": GlobalSignal(), "pricing": Pricing()}


@functools.cache
def ensemble(topology: str, policy: str, lambda_min: float, N: int) -> dict:
    """Mean of each summary metric over the replicate seeds."""
    base = SystemConfig(
        N=N, topology=TOPOLOGIES[topology], policy=POLICIES[policy], lambda_min=lambda_min,
        p_err=0.01, T=5000, burn_in=1000,
    )
    rows = [summarize(run(base.replace(seed=derive_seed(ENSEMBLE_SEED, r)))).as_row() for r in range(REPLICATES)]
    return {k: float(np.mean([r[k] for r in rows])) for k in rows[0]}


def fmt(values):
    return "[" + ", ".join(f"{v:.4f}" for v in values) + "]"


def test_c1_max_power_transfer(report):
    start = time.perf_counter()
    ok, notes = True, []
    for N in (1, 10, 100):
        cp = CircuitParams.build(N, V=1.0, R_V=2.0, R_0=200.0)
        ns = np.arange(1, 4 * N * 100 + 1)
        p = np.array([total_power_exact(int(n), cp) for n in ns])
        k = int(np.argmax(p))
        ok &= ns[k] == N * cp.R_0 / cp.R_V
        ok &= abs(p[k] / (cp.P_typ / 4) - 1) <= 1e-12
        notes.append(f"N={N} argmax={ns[k]}")
    cfg = SystemConfig(N=4, topology=Ring(), T=10, burn_in=0)
    share = int(CircuitParams.from_config(cfg).n_opt) // 4
    util = power_utilization(synthetic_trace(cfg, [[share] * 4] * 11), 0)
    ok &= abs(util - 1) <= 1e-12
    elapsed = time.perf_counter() - start
    ok &= elapsed < 1.0
    assert report("C1 max-power-transfer oracle", ok, f"{', '.join(notes)}, pinned P_util={util!r}, {elapsed:.2f}s")


def test_c2_normalised_power_consistency(report):
    start = time.perf_counter()
    rng = np.random.default_rng(1)
    worst_power = worst_gain = 0.0
    for _ in range(10_000):
        N = int(rng.integers(2, 2000))
        cp = CircuitParams.build(N, V=float(rng.uniform(0.5, 5)), R_V=float(rng.uniform(0.5, 5)),
                                 R_0=float(rng.uniform(10, 500)), scale_voltage=bool(rng.integers(2)))
        a = int(rng.integers(1, 300))
        n = a + (N - 1) + int(rng.integers(0, 50 * N))
        exact = agent_power_exact(a, n, cp)
        normed = power_eq1(a, n / N, cp)
        worst_power = max(worst_power, abs(normed / (N * exact) - 1))
        a2, n2 = max(a + int(rng.integers(-1, 2)), 1), n + int(rng.integers(-N, N + 1))
        n2 = max(n2, a2 + N - 1)
        g_exact = relative_gain(agent_power_exact(a2, n2, cp), exact)
        g_normed = relative_gain(power_eq1(a2, n2 / N, cp), normed)
        worst_gain = max(worst_gain, abs(g_exact - g_normed))
    elapsed = time.perf_counter() - start
    ok = worst_power <= 1e-12 and worst_gain <= 1e-12 and elapsed < 1.0
    assert report("C2 normalised-power consistency", ok,
                  f"max rel power dev={worst_power:.2e}, max gain dev={worst_gain:.2e}, {elapsed:.2f}s")


def test_c3_first_order_gain(report):
    start = time.perf_counter()
    rng = np.random.default_rng(2)
    shares = {}
    for N in (100, 1000):
        cp = CircuitParams.build(N, V=1.0, R_V=2.0, R_0=200.0)
        mu0 = cp.mu0
        a_prev = rng.integers(int(0.6 * mu0), int(1.4 * mu0), size=10_000)
        r_prev = np.rint(N * mu0 * (1 + rng.uniform(-0.05, 0.05, 10_000))).astype(np.int64) - a_prev
        da = rng.choice([-1, 1], size=10_000)
        # every other agent moves by at most one unit in the same round
        dr = (rng.integers(-1, 2, size=(10_000, N - 1))).sum(axis=1)
        a, r = a_prev + da, r_prev + dr
        hits = 0
        for i in range(10_000):
            exact = agent_power_exact(int(a[i]), int(a[i] + r[i]), cp) / agent_power_exact(
                int(a_prev[i]), int(a_prev[i] + r_prev[i]), cp) - 1
            approx = approx_gain(int(da[i]), int(a[i]), int(dr[i]), (a[i] + r[i]) / N, cp)
            hits += abs(approx - exact) < 0.05 * abs(exact)
        shares[N] = hits / 10_000
    elapsed = time.perf_counter() - start
    ok = all(v >= 0.95 for v in shares.values()) and elapsed < 5.0
    assert report("C3 first-order gain approximation", ok,
                  f"within 5%: {', '.join(f'N={k}: {v:.4f}' for k, v in shares.items())}, {elapsed:.2f}s")


def test_c4_channel_statistics(report):
    start = time.perf_counter()
    ok, notes = True, []
    trials = 10**6
    sent = np.tile(np.array([-1, 0, 1]), trials // 3 + 1)[:trials]
    for p in (0.01, 0.1):
        got = transmit_many(sent, p, make_stream(int(p * 1000)))
        err = got != sent
        rate = err.mean()
        sigma = np.sqrt(p * (1 - p) / trials)
        within = abs(rate - p) <= 3 * sigma
        # (sent, received) counts among corrupted transmissions; each wrong state should take half
        obs, exp = [], []
        for s in (-1, 0, 1):
            wrong = got[err & (sent == s)]
            counts = [int(np.sum(wrong == w)) for w in (-1, 0, 1) if w != s]
            obs += counts
            exp += [sum(counts) / 2] * 2
        pval = stats.chisquare(obs, exp, ddof=2).pvalue
        ok &= bool(within) and pval > 0.01
        notes.append(f"p={p}: rate={rate:.5f} ({(rate - p) / sigma:+.2f} sigma), chi2 p={pval:.3f}")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 5.0
    assert report("C4 channel statistics", ok, f"{'; '.join(notes)}, {elapsed:.2f}s")


@pytest.mark.ensemble
def test_c5_cooperation_grows_with_size(report):
    c = [ensemble("ws", "baseline", 0.0005, N)["c_avg"] for N in SIZES]
    ok = c[0] < c[1] < c[2]
    assert report("C5 baseline c_avg increasing in N (WS)", ok, f"c_avg N=10/100/1000 = {fmt(c)}")


@pytest.mark.ensemble
def test_c6_small_ring_closest_to_optimum(report):
    e = {N: ensemble("ring", "baseline", 0.005, N) for N in SIZES}
    util_ok = e[10]["P_util"] > e[100]["P_util"]
    cv_ok = e[100]["n_cv"] > e[1000]["n_cv"]
    detail = (f"P_util N=10/100 = {fmt([e[10]['P_util'], e[100]['P_util']])}, "
              f"n_cv N=100/1000 = {fmt([e[100]['n_cv'], e[1000]['n_cv']])}")
    assert report("C6 ring baseline size trend", util_ok and cv_ok, detail)


@pytest.mark.ensemble
def test_c7_global_signal(report):
    ok, parts = True, []
    for topo in ("ring", "ws"):
        sig = [ensemble(topo, "signal", 0.0005, N)["P_util"] for N in SIZES]
        base = [ensemble(topo, "baseline", 0.0005, N)["P_util"] for N in SIZES]
        ok &= all(s >= 0.95 for s in sig) and all(s > b for s, b in zip(sig, base))
        parts.append(f"{topo}: signal {fmt(sig)} vs baseline {fmt(base)}")
    assert report("C7 global signal reaches optimum", ok, "; ".join(parts))


@pytest.mark.ensemble
def test_c8_pricing(report):
    beats = {t: (ensemble(t, "pricing", 0.0005, 100)["P_util"], ensemble(t, "baseline", 0.0005, 100)["P_util"])
             for t in ("ring", "ws")}
    gap = {N: abs(ensemble("ring", "pricing", 0.0005, N)["P_util"] - ensemble("ws", "pricing", 0.0005, N)["P_util"])
           for N in (10, 1000)}
    ok = all(p > b for p, b in beats.values()) and gap[10] > gap[1000]
    detail = (", ".join(f"{t} N=100 pricing/baseline = {fmt(v)}" for t, v in beats.items())
              + f"; ring-vs-ws gap N=10 {gap[10]:.4f} vs N=1000 {gap[1000]:.4f}")
    assert report("C8 pricing improves utilisation", ok, detail)


def test_c9_determinism(report, tmp_path):
    start = time.perf_counter()
    ok = True
    for i, cfg in enumerate((
        SystemConfig(N=100, T=1000, burn_in=200, seed=123),
        SystemConfig(N=50, T=1000, burn_in=200, topology=Ring(), policy=GlobalSignal(), seed=2**64 - 1),
        SystemConfig(N=80, T=1000, burn_in=200, policy=Pricing(), p_err=0.1, seed=0),
    )):
        first, second = run(cfg), run(cfg)
        first.save(tmp_path / f"a{i}.npz")
        second.save(tmp_path / f"b{i}.npz")
        ok &= (tmp_path / f"a{i}.npz").read_bytes() == (tmp_path / f"b{i}.npz").read_bytes()
        ok &= summarize(first).as_row() == summarize(second).as_row()
    text = 'N = 30\nT = 400\nburn_in = 100\nreplicates = 3\nbase_seed = 5\n[axes]\npolicy = ["baseline", "pricing"]\n'
    outputs = []
    for workers in (1, 2):
        out = tmp_path / f"w{workers}"
        run_sweep(parse_config_text(f'out = "{out}"\n' + text), workers=workers)
        outputs.append((out / "summary.csv").read_bytes() + (out / "aggregate.csv").read_bytes())
    ok &= outputs[0] == outputs[1]
    elapsed = time.perf_counter() - start
    ok &= elapsed < 60.0
    assert report("C9 determinism", ok, f"traces, summaries and 1- vs 2-worker sweeps identical, {elapsed:.1f}s")


def test_c10_performance(report):
    cfg = SystemConfig(N=1000, T=10_000, burn_in=1000, seed=1)
    start = time.perf_counter()
    tr = run(cfg)
    elapsed = time.perf_counter() - start
    ok = elapsed < 60.0 and len(tr) == 10_001
    assert report("C10 performance N=1000 T=10000", ok, f"{elapsed:.1f}s")
