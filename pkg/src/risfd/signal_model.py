"""SINRs, secrecy rates and the lifted DC representation of the SSR.

The lifted objective uses ``W = w w^H`` and ``Q = q q^H`` with
``q = conj([phi_1, ..., phi_M, 1])`` and ``phi_m = exp(j theta_m)``. With
those lifts, ``F(W, V, Q) - G(W, V, Q)`` equals the unclamped sum secrecy
rate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet
from .params import SystemParams

LN2 = np.log(2.0)


class NumericalConsistencyError(ArithmeticError):
    """A quantity that is real/positive by construction came out otherwise."""


def herm(X: np.ndarray) -> np.ndarray:
    return 0.5 * (X + X.conj().T)


def real_trace(A: np.ndarray, B: np.ndarray) -> float:
    """Tr(A @ B) for Hermitian A, B, asserting the imaginary residue is negligible."""
    t = np.vdot(A.conj().T, B)
    if abs(t.imag) > 1e-9 * (1.0 + abs(t.real)):
        raise NumericalConsistencyError(f"trace has imaginary part {t.imag:.3e}")
    return float(t.real)


@dataclass
class BeamformingState:
    w: np.ndarray
    V: np.ndarray
    w_r: np.ndarray
    theta: np.ndarray

    @property
    def W(self) -> np.ndarray:
        return np.outer(self.w, self.w.conj())

    @property
    def phi(self) -> np.ndarray:
        return np.exp(1j * self.theta)

    @property
    def q(self) -> np.ndarray:
        return lift_phases(self.theta)

    @property
    def Q(self) -> np.ndarray:
        q = self.q
        return np.outer(q, q.conj())

    def copy(self) -> "BeamformingState":
        return BeamformingState(self.w.copy(), self.V.copy(), self.w_r.copy(), self.theta.copy())

    def check(self, p_max: float) -> None:
        """Raise ``ValueError`` if any constraint of the SSR problem is violated."""
        if abs(np.linalg.norm(self.w_r) - 1.0) > 1e-9:
            raise ValueError("receive beamformer is not unit norm")
        if np.max(np.abs(self.V - self.V.conj().T), initial=0.0) > 1e-10 * max(1.0, np.abs(self.V).max(initial=0.0)):
            raise ValueError("AN covariance is not Hermitian")
        if np.linalg.eigvalsh(herm(self.V)).min(initial=0.0) < -1e-9:
            raise ValueError("AN covariance is not PSD")
        power = np.vdot(self.w, self.w).real + np.trace(self.V).real
        if power > p_max + 1e-7:
            raise ValueError(f"transmit power {power} exceeds budget {p_max}")


def lift_phases(theta: np.ndarray) -> np.ndarray:
    """q = conj([exp(j theta), 1])."""
    return np.concatenate([np.exp(-1j * np.asarray(theta, dtype=float)), [1.0 + 0j]])


def phases_from_q(q: np.ndarray) -> np.ndarray:
    """theta_m = -arg(q_m / q_{M+1}) wrapped to [0, 2 pi)."""
    q = np.asarray(q)
    return np.mod(-np.angle(q[:-1] / q[-1]), 2 * np.pi)


# ---------------------------------------------------------------- composite channels

def ul_channel(ch: ChannelSet, theta: np.ndarray) -> np.ndarray:
    """H_IB diag(phi) h_UI + h_UB."""
    return ch.H_IB @ (np.exp(1j * theta) * ch.h_UI) + ch.h_UB


def bs_row_to(ch: ChannelSet, theta: np.ndarray, target: str) -> np.ndarray:
    """Row channel h_I?^H diag(phi) H_BI + h_B?^H for target 'dl' or 'eve'."""
    h_ri, h_b = (ch.h_ID, ch.h_BD) if target == "dl" else (ch.h_IE, ch.h_BE)
    return (h_ri.conj() * np.exp(1j * theta)) @ ch.H_BI + h_b.conj()


def user_scalar_to(ch: ChannelSet, theta: np.ndarray, target: str) -> complex:
    """UL user -> target scalar h_I?^H diag(phi) h_UI + h_U?."""
    h_ri, h_u = (ch.h_ID, ch.h_UD) if target == "dl" else (ch.h_IE, ch.h_UE)
    return complex(np.sum(h_ri.conj() * np.exp(1j * theta) * ch.h_UI) + h_u)


def _quad(row: np.ndarray, X: np.ndarray) -> float:
    return float(np.real(row @ X @ row.conj()))


# ---------------------------------------------------------------- SINRs

def sinr_ul(ch: ChannelSet, s: BeamformingState, p: SystemParams) -> float:
    g = ul_channel(ch, s.theta)
    num = p.p_ul * abs(np.vdot(s.w_r, g)) ** 2
    si = ch.H_BB.conj().T @ s.w_r  # h2
    den = abs(np.vdot(si, s.w)) ** 2 + _quad(si.conj(), s.V) + p.sigma2_b * np.vdot(s.w_r, s.w_r).real
    return float(num / den)


def sinr_dl(ch: ChannelSet, s: BeamformingState, p: SystemParams) -> float:
    row = bs_row_to(ch, s.theta, "dl")
    num = abs(row @ s.w) ** 2
    den = p.p_ul * abs(user_scalar_to(ch, s.theta, "dl")) ** 2 + _quad(row, s.V) + p.sigma2_d
    return float(num / den)


def sinr_eve_dl(ch: ChannelSet, s: BeamformingState, p: SystemParams) -> float:
    row = bs_row_to(ch, s.theta, "eve")
    num = abs(row @ s.w) ** 2
    den = p.p_ul * abs(user_scalar_to(ch, s.theta, "eve")) ** 2 + _quad(row, s.V) + p.sigma2_e
    return float(num / den)


def sinr_eve_ul(ch: ChannelSet, s: BeamformingState, p: SystemParams) -> float:
    row = bs_row_to(ch, s.theta, "eve")
    num = p.p_ul * abs(user_scalar_to(ch, s.theta, "eve")) ** 2
    den = abs(row @ s.w) ** 2 + _quad(row, s.V) + p.sigma2_e
    return float(num / den)


def all_sinrs(ch: ChannelSet, s: BeamformingState, p: SystemParams) -> tuple[float, float, float, float]:
    """(gamma_U, gamma_U^E, gamma_D, gamma_D^E)."""
    return sinr_ul(ch, s, p), sinr_eve_ul(ch, s, p), sinr_dl(ch, s, p), sinr_eve_dl(ch, s, p)


def secrecy_from_sinrs(g_u, g_ue, g_d, g_de, clamp: bool = False) -> float:
    r_u = np.log2(1.0 + g_u) - np.log2(1.0 + g_ue)
    r_d = np.log2(1.0 + g_d) - np.log2(1.0 + g_de)
    if clamp:
        r_u, r_d = max(r_u, 0.0), max(r_d, 0.0)
    return float(r_u + r_d)


def link_secrecy_rates(ch: ChannelSet, s: BeamformingState, p: SystemParams) -> tuple[float, float]:
    """Unclamped (R_U, R_D)."""
    g_u, g_ue, g_d, g_de = all_sinrs(ch, s, p)
    return float(np.log2(1 + g_u) - np.log2(1 + g_ue)), float(np.log2(1 + g_d) - np.log2(1 + g_de))


def sum_secrecy_rate(ch: ChannelSet, s: BeamformingState, p: SystemParams, clamp: bool = False) -> float:
    return secrecy_from_sinrs(*all_sinrs(ch, s, p), clamp=clamp)


# ---------------------------------------------------------------- lifted form

@dataclass(frozen=True)
class EffectiveChannels:
    h1: np.ndarray  # (M+1,)
    h2: np.ndarray  # (N_T,)
    h3: np.ndarray  # (M+1, N_T)
    h4: np.ndarray  # (M+1,)
    h5: np.ndarray  # (M+1, N_T)
    h6: np.ndarray  # (M+1,)
    H1: np.ndarray
    H2: np.ndarray
    H4: np.ndarray
    H6: np.ndarray


def build_effective(ch: ChannelSet, w_r: np.ndarray) -> EffectiveChannels:
    w_r = np.asarray(w_r, dtype=complex)
    if w_r.shape != (ch.n_rx,):
        raise ValueError(f"receive beamformer has shape {w_r.shape}, expected {(ch.n_rx,)}")
    h1 = np.concatenate([(w_r.conj() @ ch.H_IB) * ch.h_UI, [np.vdot(w_r, ch.h_UB)]])
    h2 = ch.H_BB.conj().T @ w_r
    h3 = np.vstack([ch.h_ID.conj()[:, None] * ch.H_BI, ch.h_BD.conj()[None, :]])
    h4 = np.concatenate([ch.h_ID.conj() * ch.h_UI, [ch.h_UD]])
    h5 = np.vstack([ch.h_IE.conj()[:, None] * ch.H_BI, ch.h_BE.conj()[None, :]])
    h6 = np.concatenate([ch.h_IE.conj() * ch.h_UI, [ch.h_UE]])

    def outer(h):
        return herm(np.outer(h, h.conj()))

    return EffectiveChannels(h1, h2, h3, h4, h5, h6, outer(h1), outer(h2), outer(h4), outer(h6))


def _log2_arg(x: float, floor: float) -> float:
    # floor is the noise term; a PSD trace sum cannot fall below it
    if x < floor * (1.0 - 1e-9) - 1e-300:
        raise NumericalConsistencyError(f"log argument {x:.6e} below noise floor {floor:.6e}")
    return np.log2(max(x, floor))


def _f_g_args(eff: EffectiveChannels, W, V, Q, p: SystemParams):
    WV = W + V
    t_q1 = real_trace(Q, eff.H1)
    t_q4 = real_trace(Q, eff.H4)
    t_q6 = real_trace(Q, eff.H6)
    t_si = real_trace(eff.H2, WV)
    A3 = herm(eff.h3.conj().T @ Q @ eff.h3)
    A5 = herm(eff.h5.conj().T @ Q @ eff.h5)
    return dict(
        q1=t_q1, q4=t_q4, q6=t_q6, si=t_si,
        d_wv=real_trace(A3, WV), d_v=real_trace(A3, V),
        e_wv=real_trace(A5, WV), e_v=real_trace(A5, V),
    )


def eval_F(eff: EffectiveChannels, W, V, Q, p: SystemParams) -> float:
    a = _f_g_args(eff, W, V, Q, p)
    pu = p.p_ul
    return float(
        _log2_arg(pu * a["q1"] + a["si"] + p.sigma2_b, p.sigma2_b)
        + _log2_arg(pu * a["q4"] + a["d_wv"] + p.sigma2_d, p.sigma2_d)
        + _log2_arg(pu * a["q6"] + a["e_v"] + p.sigma2_e, p.sigma2_e)
        + _log2_arg(a["e_wv"] + p.sigma2_e, p.sigma2_e)
    )


def eval_G(eff: EffectiveChannels, W, V, Q, p: SystemParams) -> float:
    a = _f_g_args(eff, W, V, Q, p)
    pu = p.p_ul
    return float(
        _log2_arg(a["si"] + p.sigma2_b, p.sigma2_b)
        + _log2_arg(pu * a["q4"] + a["d_v"] + p.sigma2_d, p.sigma2_d)
        + 2.0 * _log2_arg(pu * a["q6"] + a["e_wv"] + p.sigma2_e, p.sigma2_e)
    )


# ---------------------------------------------------------------- log-affine decompositions
#
# Each of F and G is a weighted sum of log2(const + <affine in the variable>).
# For fixed Q the affine part is Tr(A_W W) + Tr(A_V V); for fixed (W, V) it is
# Tr(A_Q Q). These decompositions drive the gradients used by the SCA loops.

@dataclass(frozen=True)
class LogTerm:
    weight: float
    const: float
    mats: tuple  # one Hermitian coefficient matrix per variable block (None = absent)


def tx_terms(eff: EffectiveChannels, Q: np.ndarray, p: SystemParams) -> tuple[list, list]:
    """F and G as log-affine sums in the blocks (W, V) for fixed Q."""
    pu = p.p_ul
    A3 = herm(eff.h3.conj().T @ Q @ eff.h3)
    A5 = herm(eff.h5.conj().T @ Q @ eff.h5)
    c1 = pu * real_trace(Q, eff.H1)
    c4 = pu * real_trace(Q, eff.H4)
    c6 = pu * real_trace(Q, eff.H6)
    F = [
        LogTerm(1.0, c1 + p.sigma2_b, (eff.H2, eff.H2)),
        LogTerm(1.0, c4 + p.sigma2_d, (A3, A3)),
        LogTerm(1.0, c6 + p.sigma2_e, (None, A5)),
        LogTerm(1.0, p.sigma2_e, (A5, A5)),
    ]
    G = [
        LogTerm(1.0, p.sigma2_b, (eff.H2, eff.H2)),
        LogTerm(1.0, c4 + p.sigma2_d, (None, A3)),
        LogTerm(2.0, c6 + p.sigma2_e, (A5, A5)),
    ]
    return F, G


def phase_terms(eff: EffectiveChannels, W: np.ndarray, V: np.ndarray, p: SystemParams) -> tuple[list, list]:
    """F and G as log-affine sums in Q for fixed (W, V)."""
    pu = p.p_ul
    WV = W + V
    B3_wv = herm(eff.h3 @ WV @ eff.h3.conj().T)
    B3_v = herm(eff.h3 @ V @ eff.h3.conj().T)
    B5_wv = herm(eff.h5 @ WV @ eff.h5.conj().T)
    B5_v = herm(eff.h5 @ V @ eff.h5.conj().T)
    si = real_trace(eff.H2, WV)
    F = [
        LogTerm(1.0, si + p.sigma2_b, (pu * eff.H1,)),
        LogTerm(1.0, p.sigma2_d, (pu * eff.H4 + B3_wv,)),
        LogTerm(1.0, p.sigma2_e, (pu * eff.H6 + B5_v,)),
        LogTerm(1.0, p.sigma2_e, (B5_wv,)),
    ]
    G = [
        LogTerm(1.0, si + p.sigma2_b, (None,)),
        LogTerm(1.0, p.sigma2_d, (pu * eff.H4 + B3_v,)),
        LogTerm(2.0, p.sigma2_e, (pu * eff.H6 + B5_wv,)),
    ]
    return F, G
