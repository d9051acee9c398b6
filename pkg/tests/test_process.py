import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rsslab.intervals import IntervalSet
from rsslab.oracle import all_subset_sums, boundary_distance, brute_force_approximable
from rsslab.process import (
    ProcessParams,
    ProcessState,
    clipped_next_volume,
    eps_covered,
    init,
    next_volumes,
    run,
    step,
    stopping_times,
    two_eps_covered,
    volume,
)


def state_with(pairs, eps=0.1):
    s = ProcessState(eps)
    s.approx_set = IntervalSet.from_pairs(pairs)
    return s


def volume_oracle(samples, eps, cells=400_000):
    """Half the fraction of midpoint-grid cells of [-1, 1] within eps of a subset sum."""
    zs = -1 + (np.arange(cells) + 0.5) * (2.0 / cells)
    return brute_force_approximable(samples, zs, eps).mean()


# -- init ---------------------------------------------------------------------


def test_init_examples():
    s = init(ProcessParams(0.1, 5))
    assert s.t == 0
    assert s.approx_set.pairs() == [(-0.1, 0.1)]
    assert volume(s) == pytest.approx(0.1, abs=1e-15)
    assert init(0.25).volume == 0.25


@pytest.mark.parametrize("eps", [0.5, 1 / 3, 0.0, -0.1])
def test_init_rejects_epsilon_out_of_range(eps):
    with pytest.raises(ValueError):
        init(eps)
    with pytest.raises(ValueError):
        ProcessParams(eps, 3)


# -- step / volume --------------------------------------------------------------


def test_step_disjoint_copy():
    s = step(init(0.1), 0.5)
    assert s.approx_set.allclose(IntervalSet.from_pairs([(-0.1, 0.1), (0.4, 0.6)]))
    assert s.volume == pytest.approx(0.2)
    assert s.t == 1 and s.samples == [0.5]


def test_step_zero_is_identity():
    s = step(init(0.1), 0.0)
    assert s.approx_set.pairs() == [(-0.1, 0.1)]
    assert s.volume == pytest.approx(0.1)


def test_two_steps_match_enumeration():
    s = init(0.25)
    step(s, 0.6)
    step(s, -0.3)
    assert s.approx_set.allclose(IntervalSet.from_pairs([(-0.55, 0.85)]), atol=1e-12)
    # the set is the union of balls around {0, 0.6, -0.3, 0.3}
    assert s.volume == pytest.approx(0.7, abs=1e-12)
    assert volume_oracle([0.6, -0.3], 0.25) == pytest.approx(0.7, abs=1e-5)
    assert len(s.snapshots) == 3 and s.snapshots[-1] is s.approx_set


def test_step_rejects_non_finite():
    with pytest.raises(ValueError):
        step(init(0.1), math.inf)


def test_step_accepts_support_endpoints():
    s = init(0.1)
    step(s, 1.0)
    step(s, -1.0)
    assert s.volume == pytest.approx(0.2)


def test_volume_examples():
    assert volume(state_with([(-0.1, 0.1)])) == pytest.approx(0.1)
    assert volume(state_with([(-2, 2)])) == 1
    assert volume(state_with([(-0.55, 0.85)])) == pytest.approx(0.7)


# -- clipped next volume -----------------------------------------------------------


def test_clipped_copy_leaving_target():
    s = state_with([(0.7, 0.9)])
    assert clipped_next_volume(s, 0.4) == pytest.approx(0.1)


def test_clipped_copy_partially_inside():
    s = state_with([(-0.1, 0.1)])
    assert clipped_next_volume(s, 0.95) == pytest.approx(0.175)


def test_clipped_ignores_mass_from_outside():
    # mass at (1.2, 1.4) lands on (0.7, 0.9) under x = -0.5 in a real step only
    s = state_with([(-0.1, 0.1), (1.2, 1.4)])
    assert s.next_volume(-0.5) == pytest.approx(0.3)
    assert clipped_next_volume(s, -0.5) == pytest.approx(0.2)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=0, max_size=10), st.floats(-1, 1), st.sampled_from([0.02, 0.1, 0.25]))
def test_clipped_volume_caps(samples, x, eps):
    s = init(eps)
    for y in samples:
        s.step(y)
    v_tilde = s.clipped_next_volume(x)
    assert v_tilde <= 2 * s.volume + 1e-12
    assert v_tilde <= s.next_volume(x) + 1e-12
    assert v_tilde >= s.volume - 1e-12


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=0, max_size=10), st.integers(0, 2**32 - 1))
def test_vectorised_next_volumes_match_single_steps(samples, seed):
    s = init(0.05)
    for y in samples:
        s.step(y)
    xs = np.random.default_rng(seed).uniform(-1, 1, 200)
    np.testing.assert_allclose(next_volumes(s.approx_set, xs), [s.next_volume(x) for x in xs], atol=1e-12)
    np.testing.assert_allclose(
        next_volumes(s.approx_set, xs, clipped=True), [s.clipped_next_volume(x) for x in xs], atol=1e-12
    )


# -- run and stopping times ------------------------------------------------------


def test_run_hand_example():
    trace, times, state = run(ProcessParams(0.25, 2), [0.6, -0.3])
    np.testing.assert_allclose(trace, [0.25, 0.5, 0.7], atol=1e-12)
    # v_1 = 0.5 does not count: the first passage needs v > 1/2
    assert times.tau1 == 2
    # 1 - 0.7 = 0.3 > eps/2
    assert times.tau2 is None and times.tau is None and times.censored
    assert state.t == 2


def test_run_horizon_zero():
    trace, times, _ = run(ProcessParams(0.1, 0), [])
    np.testing.assert_array_equal(trace, [0.1])
    assert times.tau1 is None and times.censored


def test_run_exhausted_source():
    with pytest.raises(ValueError, match="exhausted"):
        run(ProcessParams(0.1, 3), [0.1])


def test_stopping_time_definitions():
    eps = 0.1
    t = stopping_times([0.1, 0.5, 0.51, 0.94, 0.96, 0.99], eps)
    assert (t.tau1, t.tau2, t.tau, t.censored) == (2, 2, 4, False)
    # tau2 may be zero when the first passage already lands past 1 - eps/2
    t = stopping_times([0.1, 0.97], eps)
    assert (t.tau1, t.tau2, t.tau) == (1, 0, 1)
    assert stopping_times([0.1, 0.2], eps).censored


def test_low_memory_mode():
    s = init(0.1, keep_snapshots=False)
    s.step(0.3)
    assert s.snapshots is None


# -- coverage -------------------------------------------------------------------------


def test_coverage_examples():
    full = state_with([(-2, 2)])
    assert eps_covered(full) and two_eps_covered(full)
    gap = state_with([(-1, 0.5), (0.6, 1)], eps=0.04)
    assert not eps_covered(gap)
    assert not two_eps_covered(gap)
    gap6 = state_with([(-1, 0.5), (0.6, 1)], eps=0.06)
    assert two_eps_covered(gap6)


# -- properties -----------------------------------------------------------------------

sample_lists = st.lists(st.floats(-1, 1, allow_nan=False), min_size=1, max_size=12)


@settings(max_examples=60, deadline=None)
@given(sample_lists, st.sampled_from([0.05, 0.1, 0.25]))
def test_monotone_growth_and_state_invariants(samples, eps):
    trace, _, s = run(ProcessParams(eps, len(samples)), samples)
    assert trace[0] == pytest.approx(eps)
    assert np.all(np.diff(trace) >= -1e-15)
    assert np.all((trace >= 0) & (trace <= 1))
    assert s.approx_set.contains(0.0)
    t = s.t
    assert s.approx_set.lo[0] > -t - eps - 1e-12 and s.approx_set.hi[-1] < t + eps + 1e-12
    for before, after in zip(s.snapshots, s.snapshots[1:]):
        mids = (before.lo + before.hi) / 2
        assert after.contains_many(mids).all()
        assert after.measure() >= before.measure() - 1e-12
    # every interval is at least 2 eps long, so the count is bounded by the support
    span = s.approx_set.hi[-1] - s.approx_set.lo[0]
    assert len(s.approx_set) <= span / (2 * eps) + 1


@settings(max_examples=60, deadline=None)
@given(sample_lists, st.sampled_from([0.05, 0.1, 0.25]))
def test_mirror_symmetry(samples, eps):
    tr, _, s = run(ProcessParams(eps, len(samples)), samples)
    tm, _, m = run(ProcessParams(eps, len(samples)), [-x for x in samples])
    np.testing.assert_allclose(tr, tm, atol=1e-12)
    np.testing.assert_allclose(m.approx_set.lo, -s.approx_set.hi[::-1], atol=1e-12)


@settings(max_examples=80, deadline=None)
@given(sample_lists, st.sampled_from([0.05, 0.1, 0.25]), st.integers(0, 2**32 - 1))
def test_membership_equals_subset_enumeration(samples, eps, seed):
    _, _, s = run(ProcessParams(eps, len(samples)), samples)
    rng = np.random.default_rng(seed)
    zs = rng.uniform(-len(samples) - 1, len(samples) + 1, 2000)
    zs = zs[boundary_distance(samples, zs, eps) > 2e-9]
    sums = all_subset_sums(samples)
    want = np.min(np.abs(zs[:, None] - sums[None, :]), axis=1) < eps
    np.testing.assert_array_equal(s.approx_set.contains_many(zs), want)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-1, 1, allow_nan=False), min_size=0, max_size=40), st.sampled_from([0.02, 0.05, 0.1]))
def test_volume_threshold_implies_two_eps_coverage(samples, eps):
    trace, _, s = run(ProcessParams(eps, len(samples)), samples)
    if trace[-1] >= 1 - eps / 2:
        assert s.two_eps_covered()
    if s.eps_covered():
        assert s.two_eps_covered()


def test_conditional_growth_for_fixed_state():
    rng = np.random.default_rng(11)
    s = init(0.03)
    while s.volume < 0.2:
        s.step(rng.uniform(-1, 1))
    v = s.volume
    assert v < 0.5
    nxt = next_volumes(s.approx_set, rng.uniform(-1, 1, 20_000))
    stderr = nxt.std(ddof=1) / math.sqrt(nxt.size)
    assert nxt.mean() > v * (1 + (1 - v) / 4) - 3 * stderr
