import dataclasses

import numpy as np
import pytest

from risfd import ao
from risfd.channel import draw_channels
from risfd.params import Geometry, SystemParams
from risfd.signal_model import sum_secrecy_rate
from risfd.subproblems import ScaSettings

P = SystemParams()
G = Geometry()


@pytest.fixture(scope="module")
def default_run():
    ch = draw_channels(P, G, 0)
    return ch, ao.run(ch, P, seed=0)


def test_initial_state_feasible_and_deterministic():
    ch = draw_channels(P, G, 1)
    s = ao.initialize(ch, P, 1)
    assert np.vdot(s.w, s.w).real + np.trace(s.V).real == pytest.approx(P.p_max, abs=1e-9)
    assert np.vdot(s.w, s.w).real == pytest.approx(P.p_max / 2, abs=1e-9)
    assert np.linalg.norm(s.w_r) == pytest.approx(1.0, abs=1e-9)
    assert np.all((s.theta >= 0) & (s.theta < 2 * np.pi))
    s.check(P.p_max)
    t = ao.initialize(ch, P, 1)
    for a, b in zip((s.w, s.V, s.w_r, s.theta), (t.w, t.V, t.w_r, t.theta)):
        np.testing.assert_array_equal(a, b)


def test_initial_transmit_avoids_self_interference():
    ch = draw_channels(P, G, 2)
    s = ao.initialize(ch, P, 2)
    g = ch.H_IB @ (np.exp(1j * s.theta) * ch.h_UI) + ch.h_UB
    h_si = ch.H_BB.conj().T @ (g / np.linalg.norm(g))
    assert abs(np.vdot(h_si, s.w)) <= 1e-12 * np.linalg.norm(h_si) * np.linalg.norm(s.w)
    assert np.vdot(h_si, s.V @ h_si).real <= 1e-12 * np.trace(s.V).real * np.linalg.norm(h_si) ** 2


@pytest.mark.parametrize("blocks,w_pow,v_pow", [("w", 1.0, 0.0), ("v", 0.0, 1.0)])
def test_initial_state_single_block(blocks, w_pow, v_pow):
    ch = draw_channels(P, G, 3)
    s = ao.initialize(ch, P, 3, blocks)
    assert np.vdot(s.w, s.w).real == pytest.approx(w_pow * P.p_max, abs=1e-9)
    assert np.trace(s.V).real == pytest.approx(v_pow * P.p_max, abs=1e-9)


def test_initial_state_degenerate_antennas():
    # one transmit antenna: no null space, the plain matched filter and white AN are used
    p = P.with_(n_tx=1, m_ris=6)
    ch = draw_channels(p, G, 4)
    s = ao.initialize(ch, p, 4)
    assert np.vdot(s.w, s.w).real == pytest.approx(p.p_max / 2)
    assert np.trace(s.V).real == pytest.approx(p.p_max / 2)
    s.check(p.p_max)


def test_single_iteration_cap():
    p = P.with_(k_max=1, m_ris=10)
    _, tr = ao.run(draw_channels(p, G, 5), p, seed=5)
    assert tr.iterations == 1


def test_zero_channels_give_zero_ssr():
    ch = draw_channels(P.with_(m_ris=6), G, 6)
    zero = type(ch)(**{f.name: np.zeros_like(getattr(ch, f.name)) for f in dataclasses.fields(ch)})
    _, tr = ao.run(zero, P.with_(m_ris=6), seed=6)
    assert tr.initial_ssr == 0.0
    assert tr.ssr == [0.0]
    assert tr.converged


def test_default_run_regression(default_run):
    ch, (s, tr) = default_run
    assert tr.converged and tr.iterations <= P.k_max
    assert np.all(np.diff([tr.initial_ssr] + tr.ssr) >= -ao.MONOTONE_TOL)
    assert tr.final_ssr_clamped == pytest.approx(7.796415757365933, rel=1e-6)
    s.check(P.p_max)
    assert tr.final_ssr_clamped == pytest.approx(sum_secrecy_rate(ch, s, P, clamp=True))


def test_records_are_ordered_within_iterations(default_run):
    _, (_, tr) = default_run
    prev = tr.initial_ssr
    for r in tr.records:
        assert r.ssr_phase >= prev - 1e-12
        assert r.ssr_tx >= r.ssr_phase
        assert r.ssr_rx >= r.ssr_tx - 1e-9
        prev = r.ssr_rx


def test_deterministic(default_run):
    ch, (s, tr) = default_run
    s2, tr2 = ao.run(ch, P, seed=0)
    assert tr2.ssr == tr.ssr
    np.testing.assert_array_equal(s2.theta, s.theta)


def test_monotonicity_violation_raises(monkeypatch):
    p = P.with_(m_ris=6)
    ch = draw_channels(p, G, 7)
    calls = iter(range(1000))

    def shrinking_ssr(*args, **kwargs):
        # every evaluation is worse than the previous one
        return -float(next(calls))

    monkeypatch.setattr(ao, "sum_secrecy_rate", shrinking_ssr)
    with pytest.raises(ao.InternalConsistencyError):
        ao.run(ch, p, ScaSettings(), seed=7)
