import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rsslab import bounds
from rsslab.bounds import (
    C_PRIME,
    KAPPA,
    BoundInapplicable,
    BoundParams,
    i_star,
    i_star_direct,
    p_beta,
    tau1_tail_bound,
    tau2_positive_from,
    tau2_tail_bound,
    tau_combined_bound,
    tau_combined_threshold,
    tau_split_bound,
    wilson_interval,
)


def test_p_beta_at_one_sixteenth():
    assert p_beta(1 / 16) == pytest.approx(1 / 15, rel=1e-14)


def test_p_beta_limit_and_range():
    assert p_beta(1e-12) == pytest.approx(1 / 8, abs=1e-11)
    for beta in np.linspace(1e-6, 0.125 - 1e-6, 50):
        assert 0 < p_beta(beta) < 1 / 8


@pytest.mark.parametrize("beta", [0.0, 1 / 8, 0.2, -0.01])
def test_p_beta_rejects_boundary(beta):
    with pytest.raises(ValueError):
        p_beta(beta)


def test_i_star_direct_search_value():
    # 0.05 * (17/16)**37 < 0.5 <= 0.05 * (17/16)**38
    level, i = 0.05, 0
    while level < 0.5:
        level *= 17 / 16
        i += 1
    assert i == 38
    assert i_star(0.05, 1 / 16) == 38


def test_i_star_near_half():
    assert i_star(0.4999, 0.1) == 1
    assert i_star(0.49, 1 / 16) == 1


@pytest.mark.parametrize("eps,beta", [(0.0, 0.05), (0.5, 0.05), (0.1, 0.125)])
def test_i_star_rejects(eps, beta):
    with pytest.raises(ValueError):
        i_star(eps, beta)


def test_i_star_agrees_with_direct_search_on_random_inputs():
    rng = np.random.default_rng(0)
    for eps, beta in zip(rng.uniform(1e-4, 0.4999, 10_000), rng.uniform(1e-3, 0.125 - 1e-9, 10_000)):
        assert i_star(eps, beta) == i_star_direct(eps, beta)


def test_tau1_bound_hand_evaluation():
    eps, beta = 0.05, 1 / 16
    start = 38 * 15  # i* / p_beta
    t = 1200
    want = 1 - math.exp(-2 * (1 / 15) ** 2 / t * (t - start) ** 2)
    assert tau1_tail_bound(t, eps, beta) == pytest.approx(want, rel=1e-12)
    assert tau1_tail_bound(start, eps, beta) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(BoundInapplicable):
        tau1_tail_bound(start - 1, eps, beta)


def test_tau2_bound_hand_evaluation():
    power = 1.0
    for _ in range(40):
        power *= 7 / 8
    assert power == pytest.approx(math.exp(40 * math.log(7 / 8)), rel=1e-13)
    assert tau2_tail_bound(40, 0.1) == pytest.approx(1 - 10 * power, rel=1e-13)


def test_tau2_bound_sign_change_and_limit():
    eps = 0.1
    t0 = tau2_positive_from(eps)
    assert tau2_tail_bound(math.floor(t0), eps) < 0 <= tau2_tail_bound(math.ceil(t0), eps)
    assert tau2_tail_bound(10_000, eps) == pytest.approx(1.0)
    with pytest.raises(BoundInapplicable):
        tau2_tail_bound(0, eps)


def test_constants():
    assert KAPPA == 225
    assert C_PRIME == pytest.approx(60 / math.log(17 / 16))
    bp = BoundParams.for_epsilon(0.1)
    assert (bp.beta, bp.kappa, bp.c_prime) == (1 / 16, KAPPA, C_PRIME)
    assert bp.p_beta == pytest.approx(1 / 15)
    assert bp.i_star == 27


def test_combined_bound_threshold_and_value():
    eps = 0.1
    start = tau_combined_threshold(eps)
    # C' log(1/eps) dominates the doubled tau1 entry point 2 * 15 * 27 = 810
    assert start == pytest.approx(C_PRIME * math.log(10))
    with pytest.raises(BoundInapplicable):
        tau_combined_bound(start - 1, eps)
    t = 20_000
    want = 1 - 2 * math.exp(-((t - C_PRIME * math.log(10)) ** 2) / (225 * t))
    assert tau_combined_bound(t, eps) == pytest.approx(want, rel=1e-12)
    with pytest.raises(ValueError):
        tau_combined_bound(t, 0.4)


@settings(max_examples=200)
@given(st.floats(1e-6, 0.333), st.floats(1.0, 50.0))
def test_combined_bound_relaxes_split_bound(eps, scale):
    t = tau_combined_threshold(eps) * scale
    assert tau_split_bound(t, eps) >= tau_combined_bound(t, eps) - 1e-12


def test_wilson_interval():
    lo, hi = wilson_interval(50, 100, 0.95)
    assert lo == pytest.approx(0.4038, abs=1e-4) and hi == pytest.approx(0.5962, abs=1e-4)
    lo, hi = wilson_interval(0, 20)
    assert lo == 0 and 0 < hi < 0.3
    lo, hi = wilson_interval(20, 20)
    assert hi == 1 and lo > 0.7


@given(st.integers(1, 500).flatmap(lambda n: st.tuples(st.integers(0, n), st.just(n))))
def test_wilson_covers_point(sn):
    s, n = sn
    lo, hi = wilson_interval(s, n)
    assert lo <= s / n <= hi


def test_module_exports_default_beta():
    assert bounds.DEFAULT_BETA == 1 / 16
