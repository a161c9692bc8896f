import itertools
import math

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from aotkit import aloha
from aotkit.aloha import AlohaConfig, ClosedFormError

FIG5 = AlohaConfig(K=30, rho=0.5, m=15, m_t=5, beta=1.5)

# 20 configurations for the optimizer and simulator agreement checks
GRID = [
    (K, rho, m, beta)
    for K, rho, m, beta in itertools.product((10, 30), (0.3, 0.7), (8, 15, 25), (1.2, 2.0))
][:20]


def test_success_probability():
    assert aloha.success_probability(FIG5) == pytest.approx(0.18706, abs=1e-5)
    assert aloha.success_probability(AlohaConfig(1, 0.4, 5, 1, 1.5)) == 0.4


def test_verification_probability():
    assert aloha.verification_probability(FIG5) == pytest.approx(0.06235, abs=1e-5)
    assert aloha.verification_probability(FIG5.with_mt(15)) == aloha.success_probability(FIG5)
    assert aloha.verification_probability(FIG5.with_mt(0)) == 0


def test_average_aot_forms():
    assert aloha.average_aot_paper(FIG5) == pytest.approx(8.019, abs=1e-3)
    assert aloha.average_aot_exact(FIG5) == pytest.approx(15.04, abs=5e-3)
    half = AlohaConfig(1, 0.5, 1, 1, 1.5)      # P_t = 0.5
    assert aloha.average_aot_paper(half) == 1.0 and aloha.average_aot_exact(half) == 1.0
    sure = AlohaConfig(1, 1.0, 1, 1, 1.5)      # P_t = 1
    assert aloha.average_aot_paper(sure) == 0.5 and aloha.average_aot_exact(sure) == 0.0
    for f in (aloha.average_aot_paper, aloha.average_aot_exact):
        with pytest.raises(ValueError, match="AoT unbounded"):
            f(FIG5.with_mt(0))


def test_throughput():
    assert aloha.throughput(FIG5) == pytest.approx(0.3207, abs=5e-5)
    plain = FIG5.with_mt(0)
    assert aloha.throughput(plain) == pytest.approx(30 * aloha.success_probability(plain) / 15)
    near = AlohaConfig(30, 0.5, 15, 9, 1 + 1e-12)
    assert aloha.throughput(near) == pytest.approx(30 * aloha.success_probability(near) / 15, rel=1e-9)


def test_frame_duration():
    assert FIG5.frame_duration == 5 * 1.5 + 10


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 60), st.floats(0.05, 1.0), st.integers(1, 60), st.data(), st.floats(1.01, 4), st.floats(0, 0.1))
def test_h_identity(K, rho, m, data, beta, alpha):
    mt = data.draw(st.integers(1, m))
    cfg = AlohaConfig(K, rho, m, mt, beta)
    assume(aloha.success_probability(cfg) > 0)
    h = aloha.weighted_objective_h(cfg, alpha)
    assert h == pytest.approx(aloha.throughput(cfg) - alpha * aloha.average_aot_paper(cfg), rel=1e-12, abs=1e-12)
    a = aloha.analyze(cfg, alpha)
    assert a.p_t <= a.p_s


def test_h_when_nothing_succeeds():
    cfg = AlohaConfig(2, 1.0, 1, 1, 1.5)
    assert aloha.success_probability(cfg) == 0
    assert aloha.weighted_objective_h(cfg, 0.01) == -math.inf
    assert aloha.weighted_objective_h(cfg, 0.0) == 0.0
    assert aloha.analyze(cfg).avg_aot_exact == math.inf
    best = aloha.optimal_frame(2, 1.0, 1.5, 0.01, range(1, 6))
    assert best.m > 1 and best.h > -math.inf


def test_h_needs_trusted_slot():
    with pytest.raises(ValueError):
        aloha.weighted_objective_h(FIG5.with_mt(0), 0.01)


@pytest.mark.parametrize("kw", [dict(K=0), dict(rho=0.0), dict(rho=1.5), dict(m=0), dict(m_t=16), dict(m_t=-1),
                                dict(beta=1.0), dict(T_s=0.0)])
def test_config_validation(kw):
    base = dict(K=30, rho=0.5, m=15, m_t=5, beta=1.5)
    with pytest.raises(ValueError):
        AlohaConfig(**{**base, **kw})


def test_closed_form_example():
    x = aloha.closed_form_mt(30, 0.5, 15, 1.5, 0.01)
    assert x == pytest.approx(6.99, abs=0.01)
    assert aloha.optimal_mt(30, 0.5, 15, 1.5, 0.01) in (6, 7)
    assert aloha.scan_mt(30, 0.5, 15, 1.5, 0.01) == aloha.optimal_mt(30, 0.5, 15, 1.5, 0.01)


def test_closed_form_failure():
    with pytest.raises(ClosedFormError, match="fall back"):
        aloha.closed_form_mt(30, 0.5, 15, 1.5, 50.0)
    mt, closed = aloha.best_mt_for_m(30, 0.5, 15, 1.5, 50.0)
    assert not closed and mt == aloha.scan_mt(30, 0.5, 15, 1.5, 50.0)


def _is_unimodal(vals):
    k = max(range(len(vals)), key=vals.__getitem__)
    return all(a <= b for a, b in zip(vals[:k], vals[1:k + 1])) and all(a >= b for a, b in zip(vals[k:], vals[k + 1:]))


@pytest.mark.parametrize("alpha", [0.005, 0.01, 0.02, 0.04])
def test_h_unimodal_in_mt_fig5(alpha):
    vals = [aloha.weighted_objective_h(FIG5.with_mt(mt), alpha) for mt in range(1, 16)]
    assert _is_unimodal(vals)
    if alpha == 0.01:
        k = max(range(15), key=vals.__getitem__)
        assert 0 < k < 14   # interior maximum


@pytest.mark.parametrize("K, rho, m, beta", GRID)
def test_closed_form_agrees_with_scan(K, rho, m, beta):
    for alpha in (0.005, 0.01, 0.02, 0.04):
        try:
            x = aloha.closed_form_mt(K, rho, m, beta, alpha)
        except ClosedFormError:
            continue
        pair = {min(max(c, 1), m) for c in (math.floor(x), math.ceil(x))}
        assert aloha.scan_mt(K, rho, m, beta, alpha) in pair
        vals = [aloha.weighted_objective_h(AlohaConfig(K, rho, m, mt, beta), alpha) for mt in range(1, m + 1)]
        assert _is_unimodal(vals)


def test_optimal_mt_nondecreasing_in_alpha():
    mts = [aloha.optimal_mt(30, 0.5, 15, 1.5, a) for a in (0.005, 0.01, 0.02, 0.04)]
    assert mts == sorted(mts)
    assert mts == [5, 7, 11, 15]


def test_interior_optimal_frame():
    scan = aloha.frame_scan(30, 0.5, 1.5, 0.01, range(1, 101))
    best = aloha.optimal_frame(30, 0.5, 1.5, 0.01, range(1, 101))
    assert 1 < best.m < 100
    assert best.h == max(o.h for o in scan)
    with pytest.raises(ValueError):
        aloha.optimal_frame(30, 0.5, 1.5, 0.01, [])


def test_optimal_m_grows_with_K():
    ms = [aloha.optimal_frame(K, 0.5, 1.5, 0.01, range(1, 101)).m for K in (10, 20, 30, 40)]
    assert all(a < b for a, b in zip(ms, ms[1:]))


def test_frontier_aot_nonincreasing_in_alpha():
    pts = aloha.aloha_frontier(30, 0.5, 1.5, [0.002, 0.005, 0.01, 0.02, 0.04], range(1, 101))
    aot = [p.avg_aot_paper for p in pts]
    assert all(a >= b for a, b in zip(aot, aot[1:]))


def test_throughput_decreases_with_mt():
    etas = [aloha.throughput(FIG5.with_mt(mt)) for mt in range(16)]
    assert all(a > b for a, b in zip(etas, etas[1:]))


def test_higher_beta_lowers_frontier_throughput():
    alphas = [0.002, 0.005, 0.01, 0.02, 0.04]
    for K in (20, 30, 40):
        curves = [aloha.aloha_frontier(K, 0.5, b, alphas, range(1, 101)) for b in (1.2, 1.5, 2.0)]
        for lo, hi in zip(curves, curves[1:]):
            assert all(b.eta < a.eta for a, b in zip(lo, hi))


def test_sim_all_verified():
    r = aloha.simulate_frames(AlohaConfig(1, 1.0, 3, 3, 1.5), 1000, 0)
    assert r.p_t == 1.0 and r.avg_age == 0.0


def test_sim_matches_analytics_fig5():
    r = aloha.simulate_frames(FIG5, 1_000_000, 7)
    assert abs(r.p_s - aloha.success_probability(FIG5)) <= 3 * r.p_s_stderr
    assert abs(r.p_t - aloha.verification_probability(FIG5)) <= 3 * r.p_t_stderr
    assert r.avg_age == pytest.approx(aloha.average_aot_exact(FIG5), rel=0.01)


@pytest.mark.parametrize("idx", range(20))
def test_sim_matches_analytics_grid(idx):
    K, rho, m, beta = GRID[idx]
    cfg = AlohaConfig(K, rho, m, max(1, m // 3), beta)
    r = aloha.simulate_frames(cfg, 100_000, 1000 + idx)
    assert abs(r.p_s - aloha.success_probability(cfg)) <= 3 * r.p_s_stderr
    assert abs(r.p_t - aloha.verification_probability(cfg)) <= 3 * r.p_t_stderr


def test_random_layout_statistically_equal():
    a = aloha.simulate_frames(FIG5, 300_000, 3, layout="prefix")
    b = aloha.simulate_frames(FIG5, 300_000, 4, layout="random")
    for x, y, sx, sy in ((a.p_t, b.p_t, a.p_t_stderr, b.p_t_stderr), (a.p_s, b.p_s, a.p_s_stderr, b.p_s_stderr),
                         (a.avg_age, b.avg_age, a.avg_age_stderr, b.avg_age_stderr)):
        assert abs(x - y) <= 4 * math.hypot(sx, sy)


def test_sim_deterministic_and_chunk_invariant():
    a = aloha.simulate_frames(FIG5, 20_000, 5)
    b = aloha.simulate_frames(FIG5, 20_000, 5)
    assert a == b
    with pytest.raises(ValueError):
        aloha.simulate_frames(FIG5, 0, 5)
    with pytest.raises(ValueError):
        aloha.simulate_frames(FIG5, 10, 5, layout="diagonal")


@pytest.mark.parametrize("beta", [1.2, 1.5, 2.0])
def test_frontier_nearly_invariant_in_K(beta):
    import numpy as np

    alphas = [0.002, 0.005, 0.01, 0.02, 0.04]
    ref = aloha.aloha_frontier(30, 0.5, beta, alphas, range(1, 101))
    order = sorted(ref, key=lambda p: p.avg_aot_paper)
    xs = [p.avg_aot_paper for p in order]
    ys = [p.eta for p in order]
    for K in (20, 40):
        for p in aloha.aloha_frontier(K, 0.5, beta, alphas, range(1, 101)):
            if xs[0] <= p.avg_aot_paper <= xs[-1]:
                assert p.eta == pytest.approx(float(np.interp(p.avg_aot_paper, xs, ys)), rel=0.03)
