"""Seeded Rayleigh channel realizations for every link of the scenario.

Each link draws from its own substream: ``SeedSequence(seed,
spawn_key=(crc32(link_name),))`` feeding a PCG64 generator. Adding or
reordering links never changes the realization of an existing link.
"""

from __future__ import annotations

import base64
import json
import zlib
from dataclasses import dataclass, fields, replace

import numpy as np

from .params import Geometry, SystemParams, link_distance, path_loss_linear

# link name -> (endpoint a, endpoint b, RIS-related)
LINKS = {
    "H_BI": ("bs", "ris", True),
    "H_IB": ("ris", "bs", True),
    "h_ID": ("ris", "dl", True),
    "h_IE": ("ris", "eve", True),
    "h_UI": ("ul", "ris", True),
    "h_BE": ("bs", "eve", False),
    "h_BD": ("bs", "dl", False),
    "h_UE": ("ul", "eve", False),
    "h_UD": ("ul", "dl", False),
    "h_UB": ("ul", "bs", False),
}

RIS_LINKS = tuple(k for k, v in LINKS.items() if v[2])


@dataclass(frozen=True)
class ChannelSet:
    """One realization of all propagation channels and the residual SI channel.

    Vectors follow the column convention: the row channel from the RIS to the
    DL user is ``h_ID.conj()``, likewise for ``h_IE``, ``h_BE`` and ``h_BD``.
    """

    H_BI: np.ndarray  # (M, N_T)
    H_IB: np.ndarray  # (N_R, M)
    h_ID: np.ndarray  # (M,)
    h_IE: np.ndarray  # (M,)
    h_BE: np.ndarray  # (N_T,)
    h_BD: np.ndarray  # (N_T,)
    h_UE: complex
    h_UD: complex
    h_UB: np.ndarray  # (N_R,)
    h_UI: np.ndarray  # (M,)
    H_BB: np.ndarray  # (N_R, N_T)

    @property
    def n_tx(self) -> int:
        return self.H_BI.shape[1]

    @property
    def n_rx(self) -> int:
        return self.H_IB.shape[0]

    @property
    def m_ris(self) -> int:
        return self.H_BI.shape[0]

    def without_ris(self) -> "ChannelSet":
        """Copy with every RIS-endpoint channel set to zero."""
        return replace(self, **{k: np.zeros_like(getattr(self, k)) for k in RIS_LINKS})

    def without_eve(self) -> "ChannelSet":
        return replace(self, h_IE=np.zeros_like(self.h_IE), h_BE=np.zeros_like(self.h_BE), h_UE=0j)

    def validate(self, params: SystemParams | None = None) -> None:
        shapes = {
            "H_BI": (self.m_ris, self.n_tx), "H_IB": (self.n_rx, self.m_ris),
            "h_ID": (self.m_ris,), "h_IE": (self.m_ris,), "h_UI": (self.m_ris,),
            "h_BE": (self.n_tx,), "h_BD": (self.n_tx,), "h_UB": (self.n_rx,),
            "H_BB": (self.n_rx, self.n_tx),
        }
        if params is not None and (params.n_tx, params.n_rx, params.m_ris) != (self.n_tx, self.n_rx, self.m_ris):
            raise ValueError("channel dimensions do not match parameters")
        for name, shape in shapes.items():
            if np.shape(getattr(self, name)) != shape:
                raise ValueError(f"{name} has shape {np.shape(getattr(self, name))}, expected {shape}")
        for f in fields(self):
            if not np.all(np.isfinite(getattr(self, f.name))):
                raise ValueError(f"{f.name} has non-finite entries")


def link_rng(seed: int, link: str) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=(zlib.crc32(link.encode()),))
    return np.random.Generator(np.random.PCG64(ss))


def crandn(rng: np.random.Generator, shape) -> np.ndarray:
    """Circularly-symmetric CN(0, 1) samples."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def link_shape(params: SystemParams, link: str) -> tuple:
    n_t, n_r, m = params.n_tx, params.n_rx, params.m_ris
    return {
        "H_BI": (m, n_t), "H_IB": (n_r, m), "h_ID": (m,), "h_IE": (m,), "h_UI": (m,),
        "h_BE": (n_t,), "h_BD": (n_t,), "h_UE": (), "h_UD": (), "h_UB": (n_r,), "H_BB": (n_r, n_t),
    }[link]


def link_variance(params: SystemParams, geometry: Geometry, link: str) -> float:
    """Per-entry variance of one link: path loss, or sigma2_si for the SI channel."""
    if link == "H_BB":
        return params.sigma2_si
    a, b, ris_related = LINKS[link]
    exponent = params.exp_ris if ris_related else params.exp_direct
    return path_loss_linear(link_distance(geometry, a, b), exponent, params)


def draw_link(params: SystemParams, geometry: Geometry, seed: int, link: str) -> np.ndarray:
    """One link of :func:`draw_channels`, drawn from its own substream."""
    return np.sqrt(link_variance(params, geometry, link)) * crandn(link_rng(seed, link), link_shape(params, link))


def draw_channels(params: SystemParams, geometry: Geometry, seed: int) -> ChannelSet:
    """Draw one realization; deterministic in ``(params, geometry, seed)``."""
    out = {name: draw_link(params, geometry, seed, name) for name in (*LINKS, "H_BB")}
    out["h_UE"] = complex(out["h_UE"])
    out["h_UD"] = complex(out["h_UD"])
    return ChannelSet(**out)


def _encode(a) -> dict:
    a = np.asarray(a, dtype=np.complex128)
    return {"shape": list(a.shape), "dtype": "complex128", "data": base64.b64encode(a.tobytes()).decode("ascii")}


def _decode(d: dict) -> np.ndarray:
    a = np.frombuffer(base64.b64decode(d["data"]), dtype=np.complex128).reshape(d["shape"])
    return a.copy()


def dump_channels(ch: ChannelSet) -> str:
    """Serialize to a single-line JSON object (base64 little-endian complex128)."""
    return json.dumps({f.name: _encode(getattr(ch, f.name)) for f in fields(ch)}, sort_keys=True)


def load_channels(text: str) -> ChannelSet:
    raw = json.loads(text)
    vals = {f.name: _decode(raw[f.name]) for f in fields(ChannelSet)}
    vals["h_UE"] = complex(vals["h_UE"])
    vals["h_UD"] = complex(vals["h_UD"])
    return ChannelSet(**vals)
