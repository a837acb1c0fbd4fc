"""Projected first-order maximization over the two PSD-constrained sets.

Points are tuples of Hermitian blocks. Two feasible sets are supported:

* :class:`PowerCap` -- every block PSD and the traces summing to at most a
  power budget (the transmit covariance pair ``(W, V)``, or ``(W,)`` alone).
* :class:`CorrelationSet` -- a single PSD block with unit diagonal (the
  relaxed RIS phase matrix ``Q``).

Gradients are taken with respect to Hermitian variables with the convention
``d/dX Tr(A X) = (A + A^H) / 2``, so the directional derivative of ``f`` along
a Hermitian ``E`` is ``Re Tr(grad^H E)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .signal_model import LN2, LogTerm, herm

Point = tuple


class ProjectionError(np.linalg.LinAlgError):
    pass


# ---------------------------------------------------------------- projections

def _eigh(X: np.ndarray):
    try:
        return np.linalg.eigh(X)
    except np.linalg.LinAlgError as exc:
        raise ProjectionError(str(exc)) from exc


def project_psd(X: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the PSD cone (negative eigenvalues clipped)."""
    X = np.asarray(X)
    if np.max(np.abs(X - X.conj().T), initial=0.0) > 1e-8 * max(1.0, np.abs(X).max(initial=0.0)):
        raise ValueError("project_psd expects a Hermitian matrix")
    lam, U = _eigh(herm(X))
    lam = np.clip(lam, 0.0, None)
    return herm((U * lam) @ U.conj().T)


def project_capped_simplex(lam: np.ndarray, cap: float) -> np.ndarray:
    """Project a real vector onto ``{x >= 0, sum(x) <= cap}``."""
    lam = np.asarray(lam, dtype=float)
    pos = np.clip(lam, 0.0, None)
    if pos.sum() <= cap:
        return pos
    if cap <= 0:
        return np.zeros_like(lam)
    # shift tau > 0 with sum(max(lam - tau, 0)) == cap
    u = np.sort(lam)[::-1]
    css = np.cumsum(u) - cap
    k = np.arange(1, u.size + 1)
    active = np.nonzero(u - css / k > 0)[0]
    # an empty set only happens when cap is below rounding of the largest entry
    rho = active[-1] if active.size else 0
    tau = css[rho] / (rho + 1)
    return np.clip(lam - tau, 0.0, None)


def project_power_cap(blocks: Sequence[np.ndarray], p_max: float) -> Point:
    """Joint projection of Hermitian blocks onto {X_i PSD, sum Tr(X_i) <= p_max}."""
    decomps = [_eigh(herm(np.asarray(X))) for X in blocks]
    sizes = [lam.size for lam, _ in decomps]
    lam_all = project_capped_simplex(np.concatenate([lam for lam, _ in decomps]), p_max)
    out = []
    start = 0
    for (_, U), n in zip(decomps, sizes):
        lam = lam_all[start:start + n]
        start += n
        out.append(herm((U * lam) @ U.conj().T))
    return tuple(out)


@dataclass
class DykstraInfo:
    iterations: int
    converged: bool


def project_correlation(Q: np.ndarray, tol: float = 1e-10, max_iter: int = 500,
                        return_info: bool = False):
    """Projection onto ``{Q PSD, diag(Q) = 1}`` by Dykstra's alternating projections.

    The returned matrix has an exactly unit diagonal; its smallest eigenvalue
    is within the iteration tolerance of zero.
    """
    X = herm(np.asarray(Q, dtype=complex))
    n = X.shape[0]
    idx = np.diag_indices(n)
    p_corr = np.zeros_like(X)
    q_corr = np.zeros_like(X)
    converged = False
    it = 0
    Y = X
    for it in range(1, max_iter + 1):
        Y = project_psd(X + p_corr)
        p_corr = X + p_corr - Y
        Z = Y + q_corr
        X_new = Z.copy()
        X_new[idx] = 1.0
        q_corr = Z - X_new
        delta = np.linalg.norm(X_new - X)
        X = X_new
        if delta <= tol:
            converged = True
            break
    # Finish from the last PSD iterate with a diagonal congruence: PSD and the
    # unit diagonal then both hold exactly, and the change is O(tol).
    d = np.sqrt(np.clip(np.diag(Y).real, 1e-300, None))
    X = herm(Y / np.outer(d, d))
    X[idx] = 1.0
    if return_info:
        return X, DykstraInfo(it, converged)
    return X


# ---------------------------------------------------------------- feasible sets

@dataclass(frozen=True)
class PowerCap:
    p_max: float

    def project(self, x: Point) -> Point:
        return project_power_cap(x, self.p_max)

    def violation(self, x: Point) -> float:
        worst = sum(np.trace(X).real for X in x) - self.p_max
        for X in x:
            worst = max(worst, -np.linalg.eigvalsh(herm(X)).min())
        return max(worst, 0.0)


@dataclass(frozen=True)
class CorrelationSet:
    dim: int
    tol: float = 1e-10
    max_iter: int = 500

    def project(self, x: Point) -> Point:
        return (project_correlation(x[0], self.tol, self.max_iter),)

    def violation(self, x: Point) -> float:
        Q = x[0]
        return max(np.abs(np.diag(Q).real - 1.0).max(), -np.linalg.eigvalsh(herm(Q)).min(), 0.0)


# ---------------------------------------------------------------- point algebra

def inner(a: Point, b: Point) -> float:
    return float(sum(np.vdot(x, y).real for x, y in zip(a, b)))


def axpy(alpha: float, a: Point, b: Point) -> Point:
    return tuple(alpha * x + y for x, y in zip(a, b))


def sub(a: Point, b: Point) -> Point:
    return tuple(x - y for x, y in zip(a, b))


# ---------------------------------------------------------------- objectives

class LogAffine:
    """``sum_k w_k log2(c_k + sum_j Tr(A_kj X_j)) - sum_j Tr(L_j X_j) + offset``.

    Concave whenever all weights are positive.
    """

    def __init__(self, terms: Sequence[LogTerm], linear: Sequence | None = None, offset: float = 0.0):
        self.terms = list(terms)
        self.linear = tuple(linear) if linear is not None else None
        self.offset = float(offset)

    def args(self, x: Point) -> np.ndarray:
        out = np.empty(len(self.terms))
        for k, t in enumerate(self.terms):
            v = t.const
            for A, X in zip(t.mats, x):
                if A is not None:
                    v += np.vdot(A, X).real
            out[k] = v
        return out

    def value(self, x: Point) -> float:
        a = self.args(x)
        if np.any(a <= 0):
            return -np.inf
        val = sum(t.weight * np.log2(ak) for t, ak in zip(self.terms, a)) + self.offset
        if self.linear is not None:
            val -= sum(np.vdot(L, X).real for L, X in zip(self.linear, x) if L is not None)
        return float(val)

    def gradient(self, x: Point) -> Point:
        a = self.args(x)
        grads = [np.zeros_like(X) for X in x]
        for t, ak in zip(self.terms, a):
            scale = t.weight / (LN2 * ak)
            for j, A in enumerate(t.mats):
                if A is not None:
                    grads[j] += scale * A
        if self.linear is not None:
            for j, L in enumerate(self.linear):
                if L is not None:
                    grads[j] -= L
        return tuple(grads)


def linearize(terms: Sequence[LogTerm], x0: Point) -> tuple[float, Point]:
    """Value and gradient at ``x0`` of a log-affine sum (for first-order upper bounds)."""
    obj = LogAffine(terms)
    return obj.value(x0), obj.gradient(x0)


# ---------------------------------------------------------------- solver

@dataclass
class ConcaveProgram:
    objective: Callable[[Point], float]
    gradient: Callable[[Point], Point]
    feasible_set: object
    start: Point


@dataclass
class SolveReport:
    x: Point
    value: float
    iterations: int
    reason: str
    trace: list = field(default_factory=list)


def maximize(prog: ConcaveProgram, tol: float = 1e-8, max_iter: int = 5000,
             armijo: float = 1e-4, shrink: float = 0.5, min_step: float = 1e-14) -> SolveReport:
    """Projected gradient ascent with spectral step lengths and Armijo backtracking.

    The trial step for the first iteration is 1.0; later iterations use the
    Barzilai-Borwein length of the previous move. Each iteration projects once
    and backtracks along the feasible segment towards the projected point, so
    every iterate stays feasible and the objective never decreases.
    """
    x = tuple(np.asarray(b) for b in prog.start)
    f = prog.objective(x)
    if not np.isfinite(f):
        raise FloatingPointError("objective is not finite at the start point")
    g = prog.gradient(x)
    alpha = 1.0
    trace = [f]
    reason = "iteration cap"
    it = 0
    slow = 0
    for it in range(1, max_iter + 1):
        y = prog.feasible_set.project(axpy(alpha, g, x))
        d = sub(y, x)
        slope = inner(g, d)
        if slope <= 1e-16 * max(1.0, abs(f)):
            reason = "tolerance"
            it -= 1
            break
        t = 1.0
        while True:
            x_new = axpy(t, d, x)
            f_new = prog.objective(x_new)
            if np.isnan(f_new):
                raise FloatingPointError("objective returned NaN")
            if f_new >= f + armijo * t * slope:
                break
            t *= shrink
            if t < min_step:
                break
        if t < min_step:
            reason = "stall"
            it -= 1
            break
        g_new = prog.gradient(x_new)
        s = sub(x_new, x)
        ydiff = sub(g, g_new)
        sy = inner(s, ydiff)
        ss = inner(s, s)
        alpha = ss / sy if sy > 0 else alpha * 4.0
        alpha = float(np.clip(alpha, 1e-30, 1e30))
        gain = f_new - f
        x, f, g = x_new, f_new, g_new
        trace.append(f)
        if gain <= tol * max(1.0, abs(f)):
            slow += 1
            if slow >= 2:
                reason = "tolerance"
                break
        else:
            slow = 0
    return SolveReport(x, f, it, reason, trace)


def _unit_rows(R: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(R, axis=1, keepdims=True)
    return R / np.maximum(n, 1e-300)


def _gram(R: np.ndarray) -> np.ndarray:
    Q = herm(R @ R.conj().T)
    Q[np.diag_indices(Q.shape[0])] = 1.0
    return Q


def maximize_factored(objective: Callable[[Point], float], gradient: Callable[[Point], Point],
                      R0: np.ndarray, tol: float = 1e-8, max_iter: int = 5000,
                      armijo: float = 1e-4, shrink: float = 0.5,
                      min_step: float = 1e-14) -> tuple[SolveReport, np.ndarray]:
    """Maximize a concave function of Q over the correlation set via ``Q = R R^H``.

    The rows of ``R`` are kept at unit norm, so every iterate is exactly PSD
    with unit diagonal and no eigendecomposition is needed. The ascent is
    Riemannian gradient ascent on the product of spheres with spectral step
    lengths and Armijo backtracking along the row-normalizing retraction.

    Returns the report (``report.x == (Q,)``) and the final factor.
    """

    def tangent_grad(R, Q):
        E = 2.0 * gradient((Q,))[0] @ R
        radial = np.real(np.sum(E.conj() * R, axis=1, keepdims=True))
        return E - radial * R

    R = _unit_rows(np.asarray(R0, dtype=complex))
    Q = _gram(R)
    f = objective((Q,))
    if not np.isfinite(f):
        raise FloatingPointError("objective is not finite at the start point")
    xi = tangent_grad(R, Q)
    alpha = 1.0
    trace = [f]
    reason = "iteration cap"
    slow = 0
    it = 0
    for it in range(1, max_iter + 1):
        nrm2 = np.vdot(xi, xi).real
        if nrm2 <= 1e-32:
            reason = "tolerance"
            it -= 1
            break
        t = alpha
        while True:
            R_new = _unit_rows(R + t * xi)
            Q_new = _gram(R_new)
            f_new = objective((Q_new,))
            if np.isnan(f_new):
                raise FloatingPointError("objective returned NaN")
            if f_new >= f + armijo * t * nrm2:
                break
            t *= shrink
            if t * np.sqrt(nrm2) < min_step:
                break
        if t * np.sqrt(nrm2) < min_step:
            reason = "stall"
            it -= 1
            break
        xi_new = tangent_grad(R_new, Q_new)
        s = R_new - R
        ydiff = xi - xi_new
        sy = np.vdot(s, ydiff).real
        alpha = np.vdot(s, s).real / sy if sy > 0 else alpha * 4.0
        alpha = float(np.clip(alpha, 1e-30, 1e30))
        gain = f_new - f
        R, Q, f, xi = R_new, Q_new, f_new, xi_new
        trace.append(f)
        if gain <= tol * max(1.0, abs(f)):
            slow += 1
            if slow >= 2:
                reason = "tolerance"
                break
        else:
            slow = 0
    return SolveReport((Q,), f, it, reason, trace), R
