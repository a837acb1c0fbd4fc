"""Baseline schemes, Monte Carlo sweeps and convergence traces."""

from __future__ import annotations

import csv
import enum
import hashlib
import io
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import ao
from .channel import ChannelSet, draw_channels
from .params import ConfigError, Scenario, SystemParams, default_config, scenario_from_config
from .subproblems import ScaSettings

log = logging.getLogger(__name__)

CSV_HEADER = ("scheme", "variable", "value", "trial", "seed", "iterations", "ssr_bits")
SWEEP_VARIABLES = ("m_ris", "p_max_dbm", "sigma_si_db")
DEFAULT_VALUES = {
    "m_ris": (20, 40, 60),
    "p_max_dbm": (10, 15, 20, 25, 30),
    "sigma_si_db": (-110, -100, -90, -80),
}


class Scheme(str, enum.Enum):
    FD_RIS_AN = "FD_RIS_AN"      # full algorithm
    HD_RIS_AN = "HD_RIS_AN"      # half-duplex: separate UL and DL half-slots
    FD_RIS_NOAN = "FD_RIS_NOAN"  # V pinned to zero
    FD_AN_NORIS = "FD_AN_NORIS"  # RIS removed, phases never optimized

    @classmethod
    def parse(cls, name: str) -> "Scheme":
        key = name.strip().upper().replace("-", "_")
        try:
            return cls(key)
        except ValueError:
            raise ConfigError(f"unknown scheme {name!r}; expected one of {[s.value for s in cls]}") from None


def _ul_slot(ch: ChannelSet) -> ChannelSet:
    # BS only receives (and may jam with AN); no SI in a half-duplex slot
    return replace(ch, H_BB=np.zeros_like(ch.H_BB))


def _dl_slot(ch: ChannelSet) -> ChannelSet:
    # the UL user is silent
    return replace(ch, H_BB=np.zeros_like(ch.H_BB), h_UI=np.zeros_like(ch.h_UI),
                   h_UB=np.zeros_like(ch.h_UB), h_UD=0j, h_UE=0j)


@dataclass
class SchemeResult:
    ssr: float            # clamped, bits/s/Hz
    iterations: int       # AO iterations (summed over slots for HD)
    traces: list = field(default_factory=list)


def run_scheme(scheme: Scheme | str, ch: ChannelSet, p: SystemParams,
               cfg: ScaSettings = ScaSettings(), seed: int = 0) -> SchemeResult:
    """Optimize one scheme on one channel realization; reports the clamped SSR."""
    scheme = Scheme.parse(scheme) if isinstance(scheme, str) else scheme
    if scheme is Scheme.FD_RIS_AN:
        _, tr = ao.run(ch, p, cfg, seed)
    elif scheme is Scheme.FD_RIS_NOAN:
        _, tr = ao.run(ch, p, cfg, seed, blocks="w")
    elif scheme is Scheme.FD_AN_NORIS:
        _, tr = ao.run(ch.without_ris(), p, cfg, seed, optimize_phases=False)
    else:
        # UL slot carries no DL data, DL slot no UL data; each gets half the time
        _, tr_ul = ao.run(_ul_slot(ch), p, cfg, seed, blocks="v")
        _, tr_dl = ao.run(_dl_slot(ch), p, cfg, seed)
        ssr = 0.5 * (tr_ul.final_ssr_clamped + tr_dl.final_ssr_clamped)
        return SchemeResult(ssr, tr_ul.iterations + tr_dl.iterations, [tr_ul, tr_dl])
    return SchemeResult(tr.final_ssr_clamped, tr.iterations, [tr])


def derive_seed(*parts) -> int:
    """Stable 63-bit seed from an arbitrary tuple of printable parts."""
    text = "|".join(str(x) for x in parts).encode()
    return int.from_bytes(hashlib.blake2b(text, digest_size=8).digest(), "little") >> 1


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    values: tuple
    trials: int = 50
    base: dict = field(default_factory=default_config)
    schemes: tuple = tuple(Scheme)
    seed: int = 0
    sca: ScaSettings = ScaSettings()

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise ConfigError(f"sweep variable must be one of {SWEEP_VARIABLES}, got {self.variable!r}")
        if len(self.values) == 0:
            raise ConfigError("sweep values must be non-empty")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        object.__setattr__(self, "schemes", tuple(Scheme.parse(s) if isinstance(s, str) else s
                                                  for s in self.schemes))
        if self.variable == "m_ris":
            object.__setattr__(self, "values", tuple(int(v) for v in self.values))
        else:
            object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    def scenario(self, value) -> Scenario:
        return scenario_from_config({**self.base, self.variable: value})


@dataclass(frozen=True)
class SweepRow:
    scheme: str
    variable: str
    value: float
    trial: int
    seed: int
    iterations: int
    ssr_bits: float

    def sort_key(self):
        return (self.scheme, self.value, self.trial)


def _work_item(spec: SweepSpec, scheme: Scheme, value, trial: int) -> SweepRow:
    sc = spec.scenario(value)
    # neither seed depends on the sweep value: a trial is a paired comparison
    # along the sweep, and all schemes of a trial share one propagation draw
    ch = draw_channels(sc.params, sc.geometry, derive_seed(spec.seed, "channel", trial))
    seed = derive_seed(spec.seed, scheme.value, trial)
    res = run_scheme(scheme, ch, sc.params, spec.sca, seed)
    return SweepRow(scheme.value, spec.variable, value, trial, seed, res.iterations, res.ssr)


def _run_item(args) -> SweepRow:
    return _work_item(*args)


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.9g}"


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(CSV_HEADER)
    for r in sorted(rows, key=SweepRow.sort_key):
        wr.writerow([r.scheme, r.variable, _fmt(r.value), r.trial, r.seed, r.iterations, _fmt(r.ssr_bits)])
    return buf.getvalue()


def run_sweep(spec: SweepSpec, workers: int | None = None, out: str | os.PathLike | None = None) -> list:
    """Run every (scheme, value, trial); returns rows sorted by (scheme, value, trial).

    With ``out`` set the CSV is written there, including the rows finished
    before a failure.
    """
    items = [(spec, s, v, t) for s in spec.schemes for v in spec.values for t in range(spec.trials)]
    workers = workers if workers is not None else min(os.cpu_count() or 1, len(items))
    rows: list[SweepRow] = []
    try:
        if workers <= 1:
            for it in items:
                rows.append(_run_item(it))
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                for row in pool.map(_run_item, items, chunksize=max(1, len(items) // (4 * workers))):
                    rows.append(row)
    finally:
        if out is not None:
            with open(out, "w", newline="") as fh:
                fh.write(rows_to_csv(rows))
    return sorted(rows, key=SweepRow.sort_key)


@dataclass(frozen=True)
class PointSummary:
    scheme: str
    value: float
    n: int
    mean: float
    stderr: float


def summarize(rows) -> list:
    """Mean and standard error of the SSR per (scheme, value)."""
    groups: dict = {}
    for r in rows:
        groups.setdefault((r.scheme, r.value), []).append(r.ssr_bits)
    out = []
    for (scheme, value), xs in sorted(groups.items()):
        a = np.asarray(xs, dtype=float)
        se = float(a.std(ddof=1) / math.sqrt(a.size)) if a.size > 1 else float("nan")
        out.append(PointSummary(scheme, value, a.size, float(a.mean()), se))
    return out


def means(rows) -> dict:
    """``{scheme: {value: mean}}``."""
    out: dict = {}
    for s in summarize(rows):
        out.setdefault(s.scheme, {})[s.value] = s.mean
    return out


CONVERGENCE_HEADER = ("m_ris", "k", "ssr_phase", "ssr_tx", "ssr_rx", "phase_accepted", "rank_ratio")


def run_convergence(base: dict, m_list, seed: int, cfg: ScaSettings = ScaSettings()) -> dict:
    """One full AO run per M on channels drawn from ``seed``; returns ``{M: AOTrace}``."""
    traces = {}
    for m in m_list:
        sc = scenario_from_config({**base, "m_ris": int(m)})
        ch = draw_channels(sc.params, sc.geometry, seed)
        _, traces[int(m)] = ao.run(ch, sc.params, cfg, seed)
    return traces


def convergence_csv(traces: dict) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(CONVERGENCE_HEADER)
    for m, tr in sorted(traces.items()):
        wr.writerow([m, 0, _fmt(tr.initial_ssr), _fmt(tr.initial_ssr), _fmt(tr.initial_ssr), "", ""])
        for r in tr.records:
            wr.writerow([m, r.k, _fmt(r.ssr_phase), _fmt(r.ssr_tx), _fmt(r.ssr_rx),
                         int(r.phase_accepted), _fmt(r.rank_ratio)])
    return buf.getvalue()
