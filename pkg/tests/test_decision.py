import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mgsim.config import Baseline, GlobalSignal, Pricing
from mgsim.decision import (
    COOPERATE,
    DEFECT,
    IGNORE,
    DecisionInputs,
    apply_action,
    apply_actions,
    benefit,
    benefit_gain,
    cost,
    decide,
    decide_batch,
    objective,
    objectives,
    price,
    utilities,
    utility,
)
from mgsim.physics import DomainError
from mgsim.rng import make_stream


class ScriptedRng:
    """Stand-in stream that hands out a fixed list of uniforms and counts them."""

    def __init__(self, values):
        self.values = list(values)
        self.used = 0

    def random(self, size=None):
        if size is None:
            v = self.values[self.used]
            self.used += 1
            return v
        out = np.array(self.values[self.used : self.used + size])
        self.used += size
        return out


def inputs(lam=0.0, nsum=0, signal=False, s=0.5, prev=IGNORE):
    return DecisionInputs(lambda_prev=lam, neighbor_sum=nsum, signal_active=signal, s_i=s, S_prev=prev)


LMIN = 0.005


def test_successful_strategy_is_kept_without_draws():
    rng = ScriptedRng([])
    for prev in (COOPERATE, IGNORE, DEFECT):
        assert decide(inputs(lam=2 * LMIN, nsum=-5, signal=True, prev=prev), LMIN, rng) == prev
    assert rng.used == 0


def test_equal_to_threshold_counts_as_success():
    assert decide(inputs(lam=LMIN, prev=DEFECT), LMIN, ScriptedRng([])) == DEFECT


def test_cooperating_neighbourhood():
    rng = ScriptedRng([])
    assert decide(inputs(nsum=-2, s=1.0, prev=DEFECT), LMIN, rng) == COOPERATE
    assert rng.used == 0


def test_signal_forces_cooperation():
    rng = ScriptedRng([])
    assert decide(inputs(nsum=+2, signal=True, s=1.0, prev=DEFECT), LMIN, rng) == COOPERATE
    assert rng.used == 0


def test_zero_selfishness_always_cooperates():
    rng = make_stream(3)
    assert all(decide(inputs(nsum=0, s=0.0), LMIN, rng) == COOPERATE for _ in range(1000))


def test_full_selfishness_always_defects():
    rng = make_stream(4)
    outcomes = [decide(inputs(nsum=0, s=1.0), LMIN, rng) for _ in range(5000)]
    assert np.mean(np.array(outcomes) == DEFECT) == 1.0


def test_selfishness_branch_draw_counts():
    rng = ScriptedRng([0.7])
    assert decide(inputs(s=0.6), LMIN, rng) == COOPERATE and rng.used == 1
    rng = ScriptedRng([0.1, 0.2])
    assert decide(inputs(s=0.6), LMIN, rng) == DEFECT and rng.used == 2
    rng = ScriptedRng([0.1, 0.9])
    assert decide(inputs(s=0.6), LMIN, rng) == IGNORE and rng.used == 2


def test_selfishness_branch_frequencies():
    """P(coop) = 1 - s, P(defect) = s^2, P(ignore) = s(1 - s)."""
    s, trials = 0.3, 60_000
    rng = make_stream(5)
    out = np.array([decide(inputs(s=s), LMIN, rng) for _ in range(trials)])
    for state, p in ((COOPERATE, 1 - s), (DEFECT, s * s), (IGNORE, s * (1 - s))):
        assert abs(np.mean(out == state) - p) < 4 * np.sqrt(p * (1 - p) / trials)


@settings(max_examples=300, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 0.999999), st.floats(0, 0.999999))
def test_more_selfish_never_turns_defect_into_cooperate(s_lo, s_hi, u1, u2):
    s_lo, s_hi = sorted((s_lo, s_hi))
    lo = decide(inputs(s=s_lo), LMIN, ScriptedRng([u1, u2]))
    hi = decide(inputs(s=s_hi), LMIN, ScriptedRng([u1, u2]))
    assert not (lo == DEFECT and hi == COOPERATE)
    assert hi >= lo  # ordering cooperate < ignore < defect is monotone in s


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 60), st.integers(0, 2**32), st.booleans())
def test_batch_matches_scalar_with_documented_draw_order(N, seed, signal):
    gen = make_stream(seed)
    gain = gen.uniform(-0.01, 0.01, N)
    nsum = gen.integers(-2, 3, N)
    s = gen.random(N)
    prev = gen.integers(-1, 2, N).astype(np.int8)
    batch = decide_batch(gain, nsum, signal, s, prev, 0.0, make_stream(seed + 1))

    # replay: u1 block for agents reaching the selfishness branch, then u2 block
    explore = (gain < 0.0) & ~signal & ~(nsum < 0)
    idx = np.flatnonzero(explore)
    replay = make_stream(seed + 1)
    u1 = replay.random(idx.size)
    needs_u2 = idx[u1 < s[idx]]
    u2 = replay.random(needs_u2.size)
    draws = {i: [u1[k]] for k, i in enumerate(idx)}
    for k, i in enumerate(needs_u2):
        draws[i].append(u2[k])
    expected = [
        decide(DecisionInputs(gain[i], int(nsum[i]), signal, s[i], int(prev[i])), 0.0, ScriptedRng(draws.get(i, [])))
        for i in range(N)
    ]
    assert batch.tolist() == expected


def test_apply_action_examples():
    assert apply_action(1, COOPERATE) == 1
    assert apply_action(5, DEFECT) == 6
    assert apply_action(5, IGNORE) == 5
    assert apply_action(5, COOPERATE) == 4


def test_apply_actions_vectorised():
    a = np.array([1, 1, 1, 5, 5, 5])
    S = np.array([-1, 0, 1, -1, 0, 1])
    assert apply_actions(a, S).tolist() == [1, 1, 2, 4, 5, 6]


def test_utility_examples():
    assert utility(0.0, 2.0, 0.2) == 0.0
    knee = 2.0 / 0.2
    assert utility(knee, 2.0, 0.2) == pytest.approx(10.0)
    assert 2.0 * knee - 0.1 * knee**2 == pytest.approx(10.0)  # quadratic branch meets the plateau
    assert utility(5.0, 2.0, 0.2) == pytest.approx(7.5)
    with pytest.raises(DomainError):
        utility(-1.0, 2.0, 0.2)


def test_utility_shape_on_grid():
    P = np.linspace(0, 30, 3001)
    U = utilities(P, np.full_like(P, 2.0), 0.2)
    assert np.all(np.diff(U) >= -1e-12)
    assert np.all(U[P >= 10.0] == pytest.approx(10.0))
    assert np.max(np.abs(np.diff(U))) < 2.0 * (P[1] - P[0]) + 1e-12  # no jumps
    assert [utility(p, 2.0, 0.2) for p in P[::100]] == pytest.approx(U[::100].tolist())


def test_price_step():
    assert price(1000, 1000.0, 0.2, 5.0) == 0.2
    assert price(1001, 1000.0, 0.2, 5.0) == 5.0
    assert price(10, 1000.0, 0.2, 5.0) == 0.2
    assert {price(n, 50.0, 1.0, 1.0) for n in range(1, 200)} == {1.0}


def test_cost_and_benefit():
    assert cost(0.2, 0.1) == pytest.approx(0.02)
    assert cost(3.0, 0.0) == 0.0 and cost(0.0, 3.0) == 0.0
    assert benefit(7.5, 0.02) == pytest.approx(7.48)
    assert benefit(4.2, 4.2) == 0.0 and benefit(0.0, 0.0) == 0.0


def test_benefit_gain():
    assert benefit_gain(1.1, 1.0, 1e-9) == pytest.approx(0.1)
    assert benefit_gain(-0.9, -1.0, 1e-9) == pytest.approx(0.1)
    assert benefit_gain(-1.1, -1.0, 1e-9) == pytest.approx(-0.1)
    g = benefit_gain(0.5, 0.0, 1e-9)
    assert np.isfinite(g) and g == pytest.approx(0.5e9)


def test_objective_examples():
    assert objective(Baseline(), 0.125, 2.0, 0.0) == 0.125
    assert objective(GlobalSignal(), 0.125, 2.0, 0.0) == 0.125
    pol = Pricing(alpha=0.2)
    assert objective(pol, 5.0, 2.0, 0.2) == pytest.approx(6.5)
    assert objective(pol, 5.0, 2.0, 5.0) == pytest.approx(-17.5)


def test_objectives_vectorised_matches_scalar():
    pol = Pricing()
    P = np.array([0.0, 0.01, 5.0, 12.0])
    omega = np.array([2.0, 2.1, 2.0, 2.05])
    got = objectives(pol, P, omega, 5.0)
    assert got.tolist() == pytest.approx([objective(pol, p, w, 5.0) for p, w in zip(P, omega)])
    assert objectives(Baseline(), P, omega, 0.0) is P
