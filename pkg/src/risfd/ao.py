"""Alternating optimization over RIS phases, (w, V) and the receive beamformer."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelSet
from .params import SystemParams
from .signal_model import (
    BeamformingState,
    bs_row_to,
    build_effective,
    herm,
    sum_secrecy_rate,
    ul_channel,
)
from .subproblems import ScaSettings, rx_closed_form, solve_phase, solve_tx_an

log = logging.getLogger(__name__)

MONOTONE_TOL = 1e-6


class InternalConsistencyError(RuntimeError):
    pass


@dataclass
class IterationRecord:
    k: int
    ssr_phase: float
    ssr_tx: float
    ssr_rx: float
    phase_accepted: bool
    rank_ratio: float
    tx_outer: int = 0
    phase_outer: int = 0
    tx_objective: list = field(default_factory=list)
    phase_objective: list = field(default_factory=list)


@dataclass
class AOTrace:
    initial_ssr: float
    records: list = field(default_factory=list)
    reason: str = ""
    final_ssr_clamped: float = float("nan")

    @property
    def ssr(self) -> list:
        """End-of-iteration unclamped SSR values."""
        return [r.ssr_rx for r in self.records]

    @property
    def iterations(self) -> int:
        return len(self.records)

    @property
    def converged(self) -> bool:
        return self.reason == "converged"


def stream(seed: int, *keys: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=keys)))


def _null_projector(vectors, n: int) -> np.ndarray:
    """Orthogonal projector onto the complement of span(vectors) in C^n."""
    B = np.column_stack([v for v in vectors if np.linalg.norm(v) > 0] or [np.zeros(n)])
    U, sv, _ = np.linalg.svd(B, full_matrices=True)
    rank = int(np.sum(sv > 1e-12 * max(sv.max(initial=0.0), 1e-300)))
    N = U[:, rank:]
    return N @ N.conj().T


def initialize(ch: ChannelSet, p: SystemParams, seed: int, blocks: str = "wv") -> BeamformingState:
    """Feasible starting point.

    The phases are uniform random. The receive direction used for shaping the
    transmit start is the MRC combiner ``g / |g|`` of the UL channel ``g``; the
    SI it would see from a transmit vector ``x`` is ``h_si^H x`` with
    ``h_si = H_BB^H g / |g|``.

    * ``w`` is the DL matched filter projected onto the null space of
      ``h_si`` (plain matched filter when that leaves nothing), power
      ``P_max / 2``.
    * ``V`` spreads ``P_max / 2`` evenly over the directions orthogonal to both
      ``h_si`` and the DL channel (white when there are none).
    * ``w_r`` is the closed-form receive beamformer for that ``(w, V)``.

    With ``blocks="w"`` (no AN) ``w`` takes the whole budget; with
    ``blocks="v"`` (no DL data) ``V`` does.
    """
    rng = stream(seed, 0)
    theta = rng.uniform(0.0, 2 * np.pi, ch.m_ris)
    n_t = ch.n_tx
    g = ul_channel(ch, theta)
    h_si = ch.H_BB.conj().T @ (g / np.linalg.norm(g)) if np.linalg.norm(g) > 0 else np.zeros(n_t)
    dl = bs_row_to(ch, theta, "dl").conj()

    w_power = {"wv": p.p_max / 2, "w": p.p_max, "v": 0.0}[blocks]
    v_power = {"wv": p.p_max / 2, "w": 0.0, "v": p.p_max}[blocks]

    w = _null_projector([h_si], n_t) @ dl
    if np.linalg.norm(w) <= 1e-9 * np.linalg.norm(dl):
        w = dl
    nrm = np.linalg.norm(w)
    w = np.sqrt(w_power) * w / nrm if nrm > 0 else np.zeros(n_t, dtype=complex)

    P = _null_projector([h_si, dl] if blocks == "wv" else [h_si], n_t)
    dim = np.trace(P).real
    if dim < 0.5:
        P, dim = np.eye(n_t), float(n_t)
    V = v_power / dim * P.astype(complex)

    w_r = rx_closed_form(ch, np.outer(w, w.conj()), V, theta, p)
    return BeamformingState(w.astype(complex), herm(V), w_r, theta)


def run(ch: ChannelSet, p: SystemParams, cfg: ScaSettings = ScaSettings(), seed: int = 0,
        blocks: str = "wv", optimize_phases: bool = True, state: BeamformingState | None = None):
    """Run the AO loop; returns ``(state, trace)``.

    ``blocks`` selects which of (w, V) the transmit update may use (``"wv"``,
    ``"w"`` for no AN, ``"v"`` for AN only). ``optimize_phases=False`` skips
    the phase block.
    """
    s = initialize(ch, p, seed, blocks) if state is None else state.copy()
    rand = stream(seed, 1)
    prev = sum_secrecy_rate(ch, s, p)
    trace = AOTrace(initial_ssr=prev)
    trace.reason = "iteration cap"
    for k in range(1, p.k_max + 1):
        accepted = False
        phase_obj = []
        if optimize_phases:
            theta, accepted, prep = solve_phase(ch, s.w, s.V, s.w_r, p, s.theta, cfg, rand)
            s.theta = theta
            phase_obj = prep.objective
        ssr_phase = sum_secrecy_rate(ch, s, p)

        eff = build_effective(ch, s.w_r)
        W, V, w, trep = solve_tx_an(eff, s.Q, p, (s.W, s.V), cfg, blocks=blocks, rng=rand)
        cand = BeamformingState(w, V, s.w_r, s.theta)
        ssr_tx = sum_secrecy_rate(ch, cand, p)
        if ssr_tx >= ssr_phase:
            s = cand
        else:
            # rank-one extraction lost more than the SCA gained; keep the old pair
            log.debug("tx update rejected at k=%d (%.3e < %.3e)", k, ssr_tx, ssr_phase)
            ssr_tx = ssr_phase

        s.w_r = rx_closed_form(ch, s.W, s.V, s.theta, p)
        ssr_rx = sum_secrecy_rate(ch, s, p)
        trace.records.append(IterationRecord(
            k, ssr_phase, ssr_tx, ssr_rx, accepted, trep.rank_ratio,
            trep.outer_iterations, len(phase_obj) - 1 if phase_obj else 0,
            trep.objective, phase_obj,
        ))
        if ssr_rx < prev - MONOTONE_TOL:
            raise InternalConsistencyError(f"SSR decreased at iteration {k}: {prev} -> {ssr_rx}")
        frac = (ssr_rx - prev) / max(prev, 1e-12)
        prev = ssr_rx
        if frac < p.epsilon:
            trace.reason = "converged"
            break
    trace.final_ssr_clamped = sum_secrecy_rate(ch, s, p, clamp=True)
    return s, trace
