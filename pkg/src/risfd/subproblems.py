"""Block updates of the alternating optimization.

* :func:`rx_closed_form` -- MMSE-type receive beamformer maximizing the UL SINR.
* :func:`solve_tx_an` -- SCA over the lifted transmit covariance ``W`` and the
  AN covariance ``V`` followed by rank-one recovery of ``w``.
* :func:`solve_phase` -- SCA over the relaxed phase matrix ``Q``, Gaussian
  randomization, and the keep-if-better rule for the RIS phases.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import convex
from .channel import ChannelSet
from .convex import ConcaveProgram, CorrelationSet, LogAffine, PowerCap
from .params import SystemParams
from .signal_model import (
    BeamformingState,
    EffectiveChannels,
    LogTerm,
    build_effective,
    herm,
    lift_phases,
    phase_terms,
    phases_from_q,
    sum_secrecy_rate,
    tx_terms,
    ul_channel,
)

log = logging.getLogger(__name__)

# which of (W, V) the transmit block optimizes; the others are pinned to zero
TX_BLOCKS = {"wv": (0, 1), "w": (0,), "v": (1,)}


@dataclass(frozen=True)
class ScaSettings:
    max_outer: int = 20
    tol: float = 1e-4
    n_randomizations: int = 100
    rank_one_ratio: float = 1e-3
    inner_tol: float = 1e-8
    inner_max_iter: int = 5000
    # "factored" (Q = R R^H ascent) or "projected" (projected gradient + Dykstra)
    phase_backend: str = "factored"

    def __post_init__(self):
        if self.max_outer < 1 or self.n_randomizations < 1 or self.inner_max_iter < 1:
            raise ValueError("iteration counts must be positive")
        if not (self.tol > 0 and self.inner_tol > 0):
            raise ValueError("tolerances must be positive")
        if not 0 < self.rank_one_ratio < 1:
            raise ValueError("rank_one_ratio must lie in (0, 1)")
        if self.phase_backend not in ("factored", "projected"):
            raise ValueError(f"unknown phase backend {self.phase_backend!r}")


def _rel_gain(new: float, old: float) -> float:
    return (new - old) / max(abs(old), 1.0)


# ---------------------------------------------------------------- receive beamforming

def rx_closed_form(ch: ChannelSet, W: np.ndarray, V: np.ndarray, theta: np.ndarray,
                   p: SystemParams) -> np.ndarray:
    """Unit-norm maximizer of the UL SINR for fixed (W, V, theta)."""
    if not p.sigma2_b > 0:
        raise ValueError("sigma2_b must be positive")
    g = ul_channel(ch, theta)
    K = ch.H_BB @ (W + V) @ ch.H_BB.conj().T + p.sigma2_b * np.eye(ch.n_rx)
    x = np.linalg.solve(herm(K), g)
    nrm = np.linalg.norm(x)
    if nrm == 0.0:
        # no UL signal at all: any unit vector is optimal
        e = np.zeros(ch.n_rx, dtype=complex)
        e[0] = 1.0
        return e
    return x / nrm


# ---------------------------------------------------------------- transmit beamforming + AN

@dataclass
class TxReport:
    objective: list = field(default_factory=list)  # true F - G per SCA iterate
    inner_iterations: list = field(default_factory=list)
    inner_reasons: list = field(default_factory=list)
    rank_ratio: float = 0.0
    rank_fallback: bool = False

    @property
    def outer_iterations(self) -> int:
        return len(self.objective) - 1


def _restrict(terms, keep):
    return [LogTerm(t.weight, t.const, tuple(t.mats[j] for j in keep)) for t in terms]


def tx_dc_parts(eff: EffectiveChannels, Q: np.ndarray, p: SystemParams, blocks: str = "wv"):
    """(F, G) log-affine sums over the free transmit blocks."""
    keep = TX_BLOCKS[blocks]
    F, G = tx_terms(eff, Q, p)
    return LogAffine(_restrict(F, keep)), LogAffine(_restrict(G, keep))


def surrogate(F: LogAffine, G: LogAffine, x0) -> LogAffine:
    """``F(x) - [G(x0) + <grad G(x0), x - x0>]``: a concave lower bound of F - G, tight at x0."""
    g0 = G.value(x0)
    grad = G.gradient(x0)
    return LogAffine(F.terms, linear=grad, offset=-g0 + convex.inner(grad, x0))


def recover_beamformer(W: np.ndarray) -> tuple[np.ndarray, float]:
    """Principal component ``sqrt(lam1) u1`` of W and the ratio lam2 / lam1."""
    lam, U = np.linalg.eigh(herm(W))
    lam1 = max(lam[-1], 0.0)
    if lam1 <= 0.0:
        return np.zeros(W.shape[0], dtype=complex), 0.0
    lam2 = max(lam[-2], 0.0) if lam.size > 1 else 0.0
    return np.sqrt(lam1) * U[:, -1], lam2 / lam1


def _randomized_beamformer(W, score, rng, n):
    """Best of ``n`` Gaussian draws from W (plus its principal component), with
    each draw scaled to power Tr(W)."""
    lam, U = np.linalg.eigh(herm(W))
    lam = np.clip(lam, 0.0, None)
    power = lam.sum()
    best_w, _ = recover_beamformer(W)
    best = score(best_w)
    if power <= 0:
        return best_w
    root = U * np.sqrt(lam)
    for _ in range(n):
        r = (rng.standard_normal(lam.size) + 1j * rng.standard_normal(lam.size)) / np.sqrt(2)
        cand = root @ r
        nrm2 = np.vdot(cand, cand).real
        if nrm2 <= 0:
            continue
        cand *= np.sqrt(power / nrm2)
        val = score(cand)
        if val > best:
            best, best_w = val, cand
    return best_w


def solve_tx_an(eff: EffectiveChannels, Q: np.ndarray, p: SystemParams, prev: tuple,
                cfg: ScaSettings = ScaSettings(), blocks: str = "wv",
                rng: np.random.Generator | None = None, p_max: float | None = None):
    """SCA on the DC program in (W, V) for fixed Q, then rank-one recovery.

    ``prev`` is the feasible start ``(W, V)``; pinned blocks are ignored and
    returned as zero. Returns ``(W, V, w, report)``.
    """
    p_max = p.p_max if p_max is None else p_max
    n_t = eff.h2.size
    keep = TX_BLOCKS[blocks]
    zero = np.zeros((n_t, n_t), dtype=complex)
    report = TxReport()
    if p_max <= 0:
        F, G = tx_dc_parts(eff, Q, p, blocks)
        x = tuple(zero for _ in keep)
        report.objective.append(F.value(x) - G.value(x))
        return zero, zero.copy(), np.zeros(n_t, dtype=complex), report

    F, G = tx_dc_parts(eff, Q, p, blocks)
    x = tuple(herm(np.asarray(prev[j], dtype=complex)) for j in keep)
    feasible = PowerCap(p_max)
    if feasible.violation(x) > 1e-9 * max(1.0, p_max):
        x = feasible.project(x)
    true_val = F.value(x) - G.value(x)
    report.objective.append(true_val)
    for _ in range(cfg.max_outer):
        sur = surrogate(F, G, x)
        res = convex.maximize(ConcaveProgram(sur.value, sur.gradient, feasible, x),
                              tol=cfg.inner_tol, max_iter=cfg.inner_max_iter)
        report.inner_iterations.append(res.iterations)
        report.inner_reasons.append(res.reason)
        new_val = F.value(res.x) - G.value(res.x)
        if new_val < true_val:
            # cannot happen beyond rounding: the surrogate is a tight lower bound
            log.debug("tx SCA step lowered the objective by %.3e", true_val - new_val)
            break
        gain = _rel_gain(new_val, true_val)
        x, true_val = res.x, new_val
        report.objective.append(true_val)
        if gain < cfg.tol:
            break

    blocks_out = {j: xj for j, xj in zip(keep, x)}
    W = blocks_out.get(0, zero)
    V = blocks_out.get(1, zero.copy())
    w, ratio = recover_beamformer(W)
    report.rank_ratio = ratio
    if 0 in keep and ratio > cfg.rank_one_ratio:
        report.rank_fallback = True
        rng = rng if rng is not None else np.random.default_rng(0)

        def score(wc):
            xc = tuple(np.outer(wc, wc.conj()) if j == 0 else V for j in keep)
            return F.value(xc) - G.value(xc)

        w = _randomized_beamformer(W, score, rng, cfg.n_randomizations)
    return W, V, w, report


# ---------------------------------------------------------------- RIS phases

@dataclass
class PhaseReport:
    objective: list = field(default_factory=list)  # true F(Q) - G(Q) per SCA iterate
    inner_iterations: list = field(default_factory=list)
    prev_ssr: float = float("nan")
    best_ssr: float = float("nan")
    n_candidates: int = 0
    accepted: bool = False
    relaxed_rank_ratio: float = 0.0

    @property
    def outer_iterations(self) -> int:
        return len(self.objective) - 1


def phase_dc_parts(eff: EffectiveChannels, W: np.ndarray, V: np.ndarray, p: SystemParams):
    F, G = phase_terms(eff, W, V, p)
    return LogAffine(F), LogAffine(G)


def unit_modulus(v: np.ndarray) -> np.ndarray:
    """Element-wise v / |v|; entries with |v| < 1e-12 map to phase 0."""
    mag = np.abs(v)
    out = np.ones_like(v, dtype=complex)
    ok = mag >= 1e-12
    out[ok] = v[ok] / mag[ok]
    return out


def randomization_candidates(Q: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """Phase vectors from the principal eigenvector of Q and ``n`` Gaussian draws.

    Row 0 is the principal-eigenvector candidate.
    """
    lam, U = np.linalg.eigh(herm(Q))
    lam = np.clip(lam, 0.0, None)
    dim = lam.size
    r = (rng.standard_normal((dim, n)) + 1j * rng.standard_normal((dim, n))) / np.sqrt(2)
    cands = (U * np.sqrt(lam)) @ r
    qs = np.column_stack([U[:, -1], cands]).T
    qs = np.apply_along_axis(unit_modulus, 1, qs)
    return np.array([phases_from_q(q) for q in qs])


def _phase_sca(F: LogAffine, G: LogAffine, q0: np.ndarray, cfg: ScaSettings,
               rng: np.random.Generator, report: PhaseReport) -> np.ndarray:
    Q = np.outer(q0, q0.conj())
    dim = q0.size
    true_val = F.value((Q,)) - G.value((Q,))
    report.objective.append(true_val)
    R = np.zeros((dim, dim), dtype=complex)
    R[:, 0] = q0
    for _ in range(cfg.max_outer):
        sur = surrogate(F, G, (Q,))
        if cfg.phase_backend == "factored":
            # a rank-one factor is a critical point of the factored problem;
            # a small perturbation lets the ascent leave it
            jitter = 1e-3 * (rng.standard_normal(R.shape) + 1j * rng.standard_normal(R.shape))
            res, R_new = convex.maximize_factored(sur.value, sur.gradient, R + jitter,
                                                  tol=cfg.inner_tol, max_iter=cfg.inner_max_iter)
            if res.value < sur.value((Q,)):
                report.inner_iterations.append(res.iterations)
                break
        else:
            res = convex.maximize(ConcaveProgram(sur.value, sur.gradient, CorrelationSet(dim), (Q,)),
                                  tol=cfg.inner_tol, max_iter=cfg.inner_max_iter)
            R_new = R
        report.inner_iterations.append(res.iterations)
        Q_new = res.x[0]
        new_val = F.value((Q_new,)) - G.value((Q_new,))
        if new_val < true_val:
            break
        gain = _rel_gain(new_val, true_val)
        Q, R, true_val = Q_new, R_new, new_val
        report.objective.append(true_val)
        if gain < cfg.tol:
            break
    return Q


def solve_phase(ch: ChannelSet, w: np.ndarray, V: np.ndarray, w_r: np.ndarray, p: SystemParams,
                prev_theta: np.ndarray, cfg: ScaSettings = ScaSettings(),
                rng: np.random.Generator | None = None,
                score: Callable[[np.ndarray], float] | None = None):
    """Update the RIS phases; keep ``prev_theta`` unless a candidate strictly improves.

    ``score`` maps a phase vector to the value being maximized; it defaults to
    the unclamped SSR at the current ``(w, V, w_r)``. Returns
    ``(theta, accepted, report)``.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    prev_theta = np.asarray(prev_theta, dtype=float)
    if score is None:
        def score(theta):
            return sum_secrecy_rate(ch, BeamformingState(w, V, w_r, theta), p)

    W = np.outer(w, w.conj())
    eff = build_effective(ch, w_r)
    F, G = phase_dc_parts(eff, W, V, p)
    report = PhaseReport()
    Q = _phase_sca(F, G, lift_phases(prev_theta), cfg, rng, report)
    lam = np.linalg.eigvalsh(Q)
    report.relaxed_rank_ratio = float(max(lam[-2], 0.0) / lam[-1]) if lam.size > 1 else 0.0

    cands = randomization_candidates(Q, cfg.n_randomizations, rng)
    vals = np.array([score(th) for th in cands])
    best = int(np.argmax(vals))
    report.n_candidates = len(cands)
    report.prev_ssr = float(score(prev_theta))
    report.best_ssr = float(vals[best])
    if vals[best] > report.prev_ssr:
        report.accepted = True
        return cands[best], True, report
    return prev_theta.copy(), False, report
