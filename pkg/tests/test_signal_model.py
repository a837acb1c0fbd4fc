import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_channels, random_psd, random_state, unit_params
from oracles import oracle_sinrs, oracle_ssr
from risfd.channel import ChannelSet, draw_channels
from risfd.params import Geometry, SystemParams
from risfd.signal_model import (
    BeamformingState,
    NumericalConsistencyError,
    all_sinrs,
    build_effective,
    eval_F,
    eval_G,
    lift_phases,
    phases_from_q,
    real_trace,
    secrecy_from_sinrs,
    sinr_dl,
    sinr_ul,
    sum_secrecy_rate,
)


def scalar_channels(**kw):
    base = dict(H_BI=np.zeros((1, 1), complex), H_IB=np.zeros((1, 1), complex),
                h_ID=np.zeros(1, complex), h_IE=np.zeros(1, complex), h_BE=np.zeros(1, complex),
                h_BD=np.zeros(1, complex), h_UE=0j, h_UD=0j, h_UB=np.zeros(1, complex),
                h_UI=np.zeros(1, complex), H_BB=np.zeros((1, 1), complex))
    base.update({k: np.atleast_1d(np.asarray(v, complex)) if k not in ("h_UE", "h_UD") else complex(v)
                 for k, v in kw.items()})
    base["H_BB"] = base["H_BB"].reshape(1, 1)
    base["H_BI"] = base["H_BI"].reshape(1, 1)
    base["H_IB"] = base["H_IB"].reshape(1, 1)
    return ChannelSet(**base)


def scalar_params(**kw):
    return unit_params(1, 1, 1, **{"p_ul": 1.0, "sigma2_b": 1.0, "sigma2_d": 1.0, "sigma2_e": 1.0, **kw})


def state(w, V, w_r, theta):
    return BeamformingState(np.atleast_1d(np.asarray(w, complex)), np.atleast_2d(np.asarray(V, complex)),
                            np.atleast_1d(np.asarray(w_r, complex)), np.atleast_1d(np.asarray(theta, float)))


def test_sinr_ul_scalar():
    ch = scalar_channels(h_UB=1.0)
    assert sinr_ul(ch, state(0, 0, 1, 0), scalar_params(p_ul=2.0)) == pytest.approx(2.0)


def test_sinr_ul_orthogonal_receiver():
    rng = np.random.default_rng(0)
    ch = random_channels(rng, si=0.0)
    p = unit_params()
    s = random_state(rng, p)
    g = ch.H_IB @ (np.exp(1j * s.theta) * ch.h_UI) + ch.h_UB
    u = np.array([-np.conj(g[1]), np.conj(g[0])])  # u^H g = 0
    s.w_r = u / np.linalg.norm(u)
    assert sinr_ul(ch, s, p) == pytest.approx(0.0, abs=1e-12)


def test_sinr_dl_zero_when_orthogonal():
    rng = np.random.default_rng(1)
    ch = random_channels(rng)
    p = unit_params()
    s = random_state(rng, p)
    row = np.exp(1j * s.theta) * ch.h_ID.conj() @ ch.H_BI + ch.h_BD.conj()
    w = np.array([-row[1], row[0]])  # row @ w = 0
    s.w, s.V = w / np.linalg.norm(w) * 0.5, np.zeros((2, 2), complex)
    assert sinr_dl(ch, s, p) == pytest.approx(0.0, abs=1e-12)


def test_sinr_dl_direct_scalar():
    # |h_BD^H w|^2 = 4, no UL interference, unit noise
    ch = scalar_channels(h_BD=2.0)
    assert sinr_dl(ch, state(1, 0, 1, 0), scalar_params()) == pytest.approx(4.0)


@pytest.mark.parametrize("seed", range(5))
def test_sinrs_match_direct_evaluation(seed):
    rng = np.random.default_rng(seed)
    ch = random_channels(rng)
    p = unit_params()
    s = random_state(rng, p)
    ours = all_sinrs(ch, s, p)
    ref = oracle_sinrs(ch, s.w, s.V, s.w_r, s.theta, p.p_ul, p.sigma2_b, p.sigma2_d, p.sigma2_e)
    np.testing.assert_allclose(ours, ref, rtol=1e-12)


def test_secrecy_arithmetic():
    assert secrecy_from_sinrs(3, 1, 7, 3) == pytest.approx(2.0)
    assert secrecy_from_sinrs(2.5, 2.5, 0.3, 0.3) == 0.0
    # UL term negative: clamped away
    assert secrecy_from_sinrs(1, 3, 7, 3, clamp=True) == pytest.approx(1.0)
    assert secrecy_from_sinrs(1, 3, 7, 3) == pytest.approx(0.0)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_sinrs_nonnegative_and_phase_invariant(seed):
    rng = np.random.default_rng(seed)
    ch = random_channels(rng, 3, 2, 4)
    p = unit_params(3, 2, 4)
    s = random_state(rng, p)
    assert min(all_sinrs(ch, s, p)) >= 0
    rot = s.copy()
    rot.w_r = rot.w_r * np.exp(1j * rng.uniform(0, 2 * np.pi))
    assert sinr_ul(ch, rot, p) == pytest.approx(sinr_ul(ch, s, p), rel=1e-12)


def test_phase_lift_round_trip():
    theta = np.random.default_rng(2).uniform(0, 2 * np.pi, 9)
    q = lift_phases(theta)
    assert q[-1] == 1
    np.testing.assert_allclose(np.abs(q), 1)
    np.testing.assert_allclose(phases_from_q(q * np.exp(0.7j)), theta, atol=1e-12)


def test_effective_channels_without_ris():
    rng = np.random.default_rng(3)
    ch = random_channels(rng, m=3).without_ris()
    w_r = np.array([0.6, 0.8j])
    eff = build_effective(ch, w_r)
    np.testing.assert_allclose(eff.h1[:3], 0)
    assert eff.h1[-1] == pytest.approx(np.vdot(w_r, ch.h_UB))
    for k in ("1", "4", "6"):
        h = getattr(eff, "h" + k)
        np.testing.assert_allclose(getattr(eff, "H" + k), np.outer(h, h.conj()))
    with pytest.raises(ValueError):
        build_effective(ch, np.ones(3))


def test_effective_channels_hand_expansion_m1():
    # N_T = 2, N_R = 1, M = 1 with integer-valued channels
    ch = ChannelSet(
        H_BI=np.array([[1, 2j]]), H_IB=np.array([[3]]), h_ID=np.array([1j]), h_IE=np.array([2]),
        h_BE=np.array([1, -1]), h_BD=np.array([1j, 1]), h_UE=1 + 1j, h_UD=2j,
        h_UB=np.array([4]), h_UI=np.array([1 - 1j]), H_BB=np.array([[1, 1j]]),
    )
    eff = build_effective(ch, np.array([1j]))
    # h1 = [conj(w_r) H_IB h_UI ; conj(w_r) h_UB] = [-j*3*(1-j) ; -4j]
    np.testing.assert_allclose(eff.h1, [-3j * (1 - 1j), -4j])
    np.testing.assert_allclose(eff.h2, [1j, 1])                    # H_BB^H w_r = [1, -j] * j
    np.testing.assert_allclose(eff.h3, [[-1j, 2], [-1j, 1]])      # [conj(h_ID) H_BI ; h_BD^H]
    np.testing.assert_allclose(eff.h4, [-1j * (1 - 1j), 2j])
    np.testing.assert_allclose(eff.h5, [[2, 4j], [1, -1]])
    np.testing.assert_allclose(eff.h6, [2 * (1 - 1j), 1 + 1j])


@pytest.mark.parametrize("seed", range(10))
def test_lifting_identity(seed):
    p = SystemParams(m_ris=10)
    ch = draw_channels(p, Geometry(), seed)
    rng = np.random.default_rng(seed)
    s = random_state(rng, p)
    eff = build_effective(ch, s.w_r)
    lifted = eval_F(eff, s.W, s.V, s.Q, p) - eval_G(eff, s.W, s.V, s.Q, p)
    assert lifted == pytest.approx(oracle_ssr(ch, s.w, s.V, s.w_r, s.theta, p), abs=1e-9)
    assert lifted == pytest.approx(sum_secrecy_rate(ch, s, p), abs=1e-9)


def test_F_at_zero_power():
    rng = np.random.default_rng(4)
    ch = random_channels(rng, m=3)
    p = unit_params(m=3, p_ul=0.7)
    eff = build_effective(ch, np.array([1.0, 0.0]))
    Z = np.zeros((2, 2), complex)
    Q = np.eye(4)
    t = lambda H: np.trace(H).real
    expected = (np.log2(p.p_ul * t(eff.H1) + p.sigma2_b) + np.log2(p.p_ul * t(eff.H4) + p.sigma2_d)
                + np.log2(p.p_ul * t(eff.H6) + p.sigma2_e) + np.log2(p.sigma2_e))
    assert eval_F(eff, Z, Z, Q, p) == pytest.approx(expected, abs=1e-12)
    # doubling Eve's noise adds one bit to the last term
    p2 = p.with_(sigma2_e=2 * p.sigma2_e)
    third = np.log2(p.p_ul * t(eff.H6) + p2.sigma2_e) - np.log2(p.p_ul * t(eff.H6) + p.sigma2_e)
    assert eval_F(eff, Z, Z, Q, p2) - eval_F(eff, Z, Z, Q, p) - third == pytest.approx(1.0, abs=1e-12)


def test_midpoint_concavity():
    rng = np.random.default_rng(5)
    p = unit_params(2, 2, 3)
    worst = np.inf
    for _ in range(1000):
        ch = random_channels(rng, 2, 2, 3)
        s = random_state(rng, p)
        eff = build_effective(ch, s.w_r)
        W1, V1, W2, V2 = (random_psd(rng, 2, rng.uniform(0, 0.5)) for _ in range(4))
        Q1, Q2 = random_psd(rng, 4, 4.0), random_psd(rng, 4, 4.0)
        for f in (eval_F, eval_G):
            mid = f(eff, (W1 + W2) / 2, (V1 + V2) / 2, s.Q, p)
            worst = min(worst, mid - (f(eff, W1, V1, s.Q, p) + f(eff, W2, V2, s.Q, p)) / 2)
            mid = f(eff, s.W, s.V, (Q1 + Q2) / 2, p)
            worst = min(worst, mid - (f(eff, s.W, s.V, Q1, p) + f(eff, s.W, s.V, Q2, p)) / 2)
    assert worst >= -1e-9


def test_trace_guard_and_floor_guard():
    A = np.array([[1, 1j], [1j, 1]])  # not Hermitian
    with pytest.raises(NumericalConsistencyError):
        real_trace(A, np.eye(2) + np.array([[0, 1], [0, 0]]))
    rng = np.random.default_rng(6)
    ch = random_channels(rng)
    p = unit_params()
    eff = build_effective(ch, np.array([1.0, 0.0]))
    with pytest.raises(NumericalConsistencyError):
        eval_F(eff, -100 * np.eye(2), np.zeros((2, 2)), np.eye(3), p)


def test_state_check():
    p = unit_params()
    s = random_state(np.random.default_rng(7), p)
    s.check(p.p_max)
    bad = s.copy()
    bad.w = bad.w * 10
    with pytest.raises(ValueError):
        bad.check(p.p_max)
    bad = s.copy()
    bad.w_r = bad.w_r * 2
    with pytest.raises(ValueError):
        bad.check(p.p_max)
