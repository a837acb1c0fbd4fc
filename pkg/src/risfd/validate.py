"""Self-check suite behind the ``validate`` command.

Each check draws small random instances and returns ``(name, ok, detail)``.
The checks are quick versions of the properties exercised by the test suite.
"""

from __future__ import annotations

import numpy as np

from . import convex
from .channel import crandn, draw_channels
from .params import Geometry, SystemParams
from .signal_model import (
    BeamformingState,
    build_effective,
    eval_F,
    eval_G,
    herm,
    sinr_ul,
    sum_secrecy_rate,
)
from .subproblems import phase_dc_parts, rx_closed_form, surrogate, tx_dc_parts


def random_hermitian(rng: np.random.Generator, n: int) -> np.ndarray:
    return herm(crandn(rng, (n, n)))


def random_psd(rng: np.random.Generator, n: int, trace: float = 1.0) -> np.ndarray:
    A = crandn(rng, (n, n))
    X = A @ A.conj().T
    return herm(X * (trace / np.trace(X).real))


def random_state(rng: np.random.Generator, p: SystemParams) -> BeamformingState:
    """Feasible state with a random power split and random phases."""
    split = rng.uniform(0.05, 0.95)
    w = crandn(rng, p.n_tx)
    w *= np.sqrt(split * p.p_max) / np.linalg.norm(w)
    V = random_psd(rng, p.n_tx, (1 - split) * p.p_max * rng.uniform(0.2, 1.0))
    w_r = crandn(rng, p.n_rx)
    w_r /= np.linalg.norm(w_r)
    theta = rng.uniform(0, 2 * np.pi, p.m_ris)
    return BeamformingState(w, V, w_r, theta)


def _instance(seed: int, m_ris: int = 8):
    p = SystemParams(m_ris=m_ris)
    return p, draw_channels(p, Geometry(), seed)


def check_projections(rng) -> tuple[bool, str]:
    worst = 0.0
    for _ in range(20):
        X = random_hermitian(rng, 4)
        P1 = convex.project_psd(X)
        worst = max(worst, np.abs(convex.project_psd(P1) - P1).max())
        pair = convex.project_power_cap((X, random_hermitian(rng, 4)), 1.0)
        again = convex.project_power_cap(pair, 1.0)
        worst = max(worst, max(np.abs(a - b).max() for a, b in zip(pair, again)))
        C = convex.project_correlation(random_hermitian(rng, 5))
        worst = max(worst, np.abs(convex.project_correlation(C) - C).max())
    return worst <= 1e-10, f"max idempotence error {worst:.2e}"


def check_lifting(rng) -> tuple[bool, str]:
    worst = 0.0
    for k in range(20):
        p, ch = _instance(k)
        s = random_state(rng, p)
        eff = build_effective(ch, s.w_r)
        diff = eval_F(eff, s.W, s.V, s.Q, p) - eval_G(eff, s.W, s.V, s.Q, p) - sum_secrecy_rate(ch, s, p)
        worst = max(worst, abs(diff))
    return worst <= 1e-9, f"max |F - G - SSR| {worst:.2e}"


def _fd_check(obj, x, rng, h=1e-6) -> float:
    grad = obj.gradient(x)
    worst = 0.0
    for _ in range(5):
        E = tuple(random_hermitian(rng, X.shape[0]) for X in x)
        E = tuple(D / np.linalg.norm(D) for D in E)
        num = (obj.value(convex.axpy(h, E, x)) - obj.value(convex.axpy(-h, E, x))) / (2 * h)
        ana = convex.inner(grad, E)
        worst = max(worst, abs(num - ana) / max(abs(num), abs(ana), 1e-12))
    return worst


def check_gradients(rng) -> tuple[bool, str]:
    worst = 0.0
    for k in range(5):
        p, ch = _instance(100 + k)
        s = random_state(rng, p)
        eff = build_effective(ch, s.w_r)
        # scale the variables so that the finite-difference step is meaningful
        for obj in tx_dc_parts(eff, s.Q, p):
            worst = max(worst, _fd_check(_Scaled(obj, p.p_max), (s.W / p.p_max, s.V / p.p_max), rng))
        for obj in phase_dc_parts(eff, s.W, s.V, p):
            worst = max(worst, _fd_check(obj, (s.Q,), rng))
    return worst <= 1e-5, f"max relative gradient error {worst:.2e}"


class _Scaled:
    """``x -> f(c x)`` with the matching gradient."""

    def __init__(self, f, c):
        self.f, self.c = f, c

    def value(self, x):
        return self.f.value(tuple(self.c * X for X in x))

    def gradient(self, x):
        return tuple(self.c * g for g in self.f.gradient(tuple(self.c * X for X in x)))


def check_rx_optimality(rng) -> tuple[bool, str]:
    worst = np.inf
    for k in range(5):
        p, ch = _instance(200 + k)
        s = random_state(rng, p)
        s.w_r = rx_closed_form(ch, s.W, s.V, s.theta, p)
        best = sinr_ul(ch, s, p)
        U = crandn(rng, (10_000, p.n_rx))
        U /= np.linalg.norm(U, axis=1, keepdims=True)
        for u in U:
            s_u = BeamformingState(s.w, s.V, u, s.theta)
            worst = min(worst, (best - sinr_ul(ch, s_u, p)) / best)
    return worst >= -1e-9, f"min relative margin {worst:.2e}"


def check_surrogate(rng) -> tuple[bool, str]:
    worst_gap, worst_touch = np.inf, 0.0
    for k in range(5):
        p, ch = _instance(300 + k)
        s = random_state(rng, p)
        eff = build_effective(ch, s.w_r)
        F, G = tx_dc_parts(eff, s.Q, p)
        x0 = (s.W, s.V)
        sur = surrogate(F, G, x0)
        worst_touch = max(worst_touch, abs(sur.value(x0) - (F.value(x0) - G.value(x0))))
        for _ in range(50):
            t = random_state(rng, p)
            x = (t.W, t.V)
            worst_gap = min(worst_gap, (F.value(x) - G.value(x)) - sur.value(x))
    return worst_gap >= -1e-9 and worst_touch <= 1e-9, f"min gap {worst_gap:.2e}, touch error {worst_touch:.2e}"


CHECKS = {
    "projections": check_projections,
    "lifting identity": check_lifting,
    "gradients": check_gradients,
    "receive beamformer optimality": check_rx_optimality,
    "surrogate bounds": check_surrogate,
}


def run_checks(seed: int = 0) -> list:
    rng = np.random.default_rng(seed)
    out = []
    for name, fn in CHECKS.items():
        try:
            ok, detail = fn(rng)
        except Exception as exc:  # report, do not abort the suite
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append((name, bool(ok), detail))
    return out
