"""Independent reference implementations used as test oracles.

These are written directly from the model formulas with explicit matrices
(``diag(phi)``, dense products) and share no code with the package beyond the
channel container.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import eigh
from scipy.optimize import minimize


def theta_matrix(theta):
    return np.diag(np.exp(1j * np.asarray(theta)))


def hermitian_row(v):
    """Row vector v^H."""
    return np.conj(v)[None, :]


def oracle_sinrs(ch, w, V, w_r, theta, p_ul, s_b, s_d, s_e):
    """(gamma_U, gamma_U^E, gamma_D, gamma_D^E) by direct matrix evaluation."""
    T = theta_matrix(theta)
    wr_h = hermitian_row(w_r)
    g = ch.H_IB @ T @ ch.h_UI + ch.h_UB
    hd = hermitian_row(ch.h_ID) @ T @ ch.H_BI + hermitian_row(ch.h_BD)  # row
    he = hermitian_row(ch.h_IE) @ T @ ch.H_BI + hermitian_row(ch.h_BE)
    hud = (hermitian_row(ch.h_ID) @ T @ ch.h_UI).item() + ch.h_UD
    hue = (hermitian_row(ch.h_IE) @ T @ ch.h_UI).item() + ch.h_UE

    sig_u = p_ul * abs((wr_h @ g).item()) ** 2
    den_u = (abs((wr_h @ ch.H_BB @ w).item()) ** 2
             + (wr_h @ ch.H_BB @ V @ ch.H_BB.conj().T @ w_r).item().real
             + s_b * np.linalg.norm(w_r) ** 2)
    g_u = sig_u / den_u

    d_sig = abs((hd @ w).item()) ** 2
    d_an = (hd @ V @ hd.conj().T).item().real
    g_d = d_sig / (p_ul * abs(hud) ** 2 + d_an + s_d)

    e_sig = abs((he @ w).item()) ** 2
    e_an = (he @ V @ he.conj().T).item().real
    g_de = e_sig / (p_ul * abs(hue) ** 2 + e_an + s_e)
    g_ue = p_ul * abs(hue) ** 2 / (e_sig + e_an + s_e)
    return g_u, g_ue, g_d, g_de


def oracle_ssr(ch, w, V, w_r, theta, p):
    g_u, g_ue, g_d, g_de = oracle_sinrs(ch, w, V, w_r, theta, p.p_ul, p.sigma2_b, p.sigma2_d, p.sigma2_e)
    return np.log2(1 + g_u) - np.log2(1 + g_ue) + np.log2(1 + g_d) - np.log2(1 + g_de)


def capped_simplex_bisection(lam, cap, iters=200):
    """argmin ||x - lam|| s.t. x >= 0, sum x <= cap, via bisection on the shift."""
    lam = np.asarray(lam, dtype=float)
    x = np.clip(lam, 0, None)
    if x.sum() <= cap:
        return x
    lo, hi = 0.0, float(lam.max())
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if np.clip(lam - mid, 0, None).sum() > cap:
            lo = mid
        else:
            hi = mid
    return np.clip(lam - hi, 0, None)


def psd_projection_search(X, starts=20, seed=0):
    """Closest 2x2 PSD matrix by minimizing ||X - L L^H||_F over Cholesky factors."""
    rng = np.random.default_rng(seed)

    def build(z):
        L = np.array([[z[0], 0], [z[2] + 1j * z[3], z[1]]])
        return L @ L.conj().T

    def cost(z):
        return np.linalg.norm(X - build(z)) ** 2

    best = None
    for _ in range(starts):
        r = minimize(cost, rng.standard_normal(4), method="BFGS", options={"gtol": 1e-12})
        if best is None or r.fun < best.fun:
            best = r
    return build(best.x)


def gev_receive(ch, W, V, theta, s_b):
    """Top generalized eigenvector of (g g^H, H_BB (W+V) H_BB^H + s_b I), unit norm."""
    g = ch.H_IB @ theta_matrix(theta) @ ch.h_UI + ch.h_UB
    K = ch.H_BB @ (W + V) @ ch.H_BB.conj().T + s_b * np.eye(ch.n_rx)
    _, vecs = eigh(np.outer(g, g.conj()), K)
    x = vecs[:, -1]
    return x / np.linalg.norm(x)
