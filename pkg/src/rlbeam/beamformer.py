"""Two-step transmit adaptation: pick likely target bins, then design the beam.

The design problem is to maximize the minimum beampattern value over the
selected angles subject to a fixed total transmit power, a small
semidefinite program. It is solved here by projected subgradient ascent:
climb along the steering outer products of the currently worst angles,
then project back onto the set of PSD matrices with the required trace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .array_signal import AngleGrid, ArrayConfig, WaveformCovariance, WeightMatrix, steering_matrix
from .detector import DetectionMap

__all__ = [
    "BinSelection",
    "BeamPlan",
    "select_bins",
    "optimize_covariance",
    "factor_covariance",
    "omni_weights",
    "design_beam",
    "project_psd_trace",
]


@dataclass(eq=False)
class BinSelection:
    """The i angle bins whose range profiles carry the largest statistics.

    `scores` keeps the full per-bin vector of row maxima so the selection
    can be audited; `indices` are ordered by decreasing score with ties
    broken toward the lower bin index.
    """

    indices: tuple[int, ...]
    angles: np.ndarray
    scores: np.ndarray

    def __post_init__(self):
        self.angles = np.asarray(self.angles, dtype=float)
        self.scores = np.asarray(self.scores, dtype=float)
        if len(self.indices) != len(set(self.indices)):
            raise ValueError("selected bin indices must be distinct")
        if len(self.indices) != self.angles.size:
            raise ValueError("indices and angles disagree in length")


@dataclass(eq=False)
class BeamPlan:
    """Bundle of one adaptation step: selection, covariance, weights, floor."""

    selection: BinSelection
    covariance: WaveformCovariance
    weights: WeightMatrix
    achieved_min: float

    def __post_init__(self):
        p_t = self.covariance.p_t
        resid = self.weights.entries @ self.weights.entries.conj().T - self.covariance.entries
        if np.linalg.norm(resid) > 1e-8 * p_t:
            raise ValueError("weights do not factor the covariance within tolerance")
        a = steering_matrix(self.selection.angles, self.covariance.n_tx)
        floor = float(
            np.einsum("jt,ts,js->j", a, self.covariance.entries, a.conj()).real.min()
        )
        if abs(floor - self.achieved_min) > 1e-6 * max(abs(floor), 1e-300):
            raise ValueError("achieved_min inconsistent with the covariance")


def select_bins(dmap: DetectionMap, i: int, grid: AngleGrid) -> BinSelection:
    """Indices of the i angle bins with the largest range-wise maxima.

    Ties are broken toward the lower bin index so repeated runs select
    deterministically.
    """
    n_bins = dmap.n_bins
    if not 1 <= i <= n_bins:
        raise ValueError(f"i must be in [1, {n_bins}], got {i}")
    if grid.n_bins != n_bins:
        raise ValueError("detection map and grid disagree on the number of bins")
    t = dmap.values.max(axis=1)
    order = np.argsort(-t, kind="stable")
    idx = tuple(int(j) for j in order[:i])
    return BinSelection(indices=idx, angles=grid.angles[list(idx)], scores=t)


def _project_simplex(v: np.ndarray, total: float) -> np.ndarray:
    """Euclidean projection of a real vector onto {w >= 0, sum w = total}."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - total
    ranks = np.arange(1, v.size + 1)
    valid = u - css / ranks > 0
    rho = ranks[valid][-1]
    tau = css[rho - 1] / rho
    return np.maximum(v - tau, 0.0)


def project_psd_trace(matrix: np.ndarray, total: float) -> np.ndarray:
    """Nearest (Frobenius) PSD matrix with the given trace.

    Eigendecomposes the Hermitian part and projects the spectrum onto the
    scaled simplex.
    """
    m = 0.5 * (matrix + matrix.conj().T)
    w, u = np.linalg.eigh(m)
    w = _project_simplex(w, total)
    return (u * w) @ u.conj().T


def _solve_maxmin(
    steer: np.ndarray,
    p_t: float,
    initial: np.ndarray | None = None,
    max_iters: int = 1500,
    step_scale: float = 0.1,
    active_tol: float = 1e-6,
    stall_window: int = 50,
    stall_tol: float = 1e-8,
) -> tuple[np.ndarray, float, np.ndarray]:
    """Projected subgradient ascent on min_j a_j^T R a_j^* over the trace-P_T PSD set.

    `steer` holds the steering vectors as rows. Each iteration ascends
    along the summed outer products of the angles within active_tol * p_t
    of the current minimum, with diminishing step (step_scale * p_t) /
    sqrt(iter), then projects back onto the feasible set. The best iterate
    seen so far is retained, so the reported objective trace is
    non-decreasing by construction. Stops early once the best objective
    improves by less than stall_tol * p_t over stall_window iterations.

    Returns (best covariance, best objective, per-iteration best trace).
    """
    n = steer.shape[1]
    if initial is None:
        r = np.eye(n, dtype=complex) * (p_t / n)
    else:
        r = project_psd_trace(initial, p_t)
    steer_c = steer.conj()

    def objective(mat: np.ndarray) -> np.ndarray:
        return np.einsum("jt,jt->j", steer @ mat, steer_c).real

    b = objective(r)
    best_val = float(b.min())
    best_r = r.copy()
    trace = np.empty(max_iters + 1)
    trace[0] = best_val
    c = step_scale * p_t
    atol = active_tol * p_t
    n_done = 0
    for it in range(1, max_iters + 1):
        active = steer[b <= b.min() + atol]
        direction = active.conj().T @ active
        r = project_psd_trace(r + (c / math.sqrt(it)) * direction, p_t)
        b = objective(r)
        val = float(b.min())
        if val > best_val:
            best_val = val
            best_r = r.copy()
        trace[it] = best_val
        n_done = it
        if it >= stall_window and best_val - trace[it - stall_window] < stall_tol * p_t:
            break
    return best_r, best_val, trace[: n_done + 1]


def optimize_covariance(
    angles: Sequence[float] | np.ndarray,
    array: ArrayConfig,
    p_t: float,
    initial: WaveformCovariance | None = None,
    max_iters: int = 1500,
) -> WaveformCovariance:
    """Waveform covariance maximizing the minimum beampattern over `angles`.

    Feasible set: Hermitian PSD with trace p_t. Passing `initial` warm
    starts the ascent (useful when re-solving for an unchanged angle set);
    the solution is start-invariant up to the solver tolerance because the
    problem is concave over a convex set.
    """
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    if angles.size == 0:
        raise ValueError("angle set is empty")
    if angles.size > array.n_tx:
        raise ValueError(
            f"cannot shape {angles.size} beams with {array.n_tx} transmit elements"
        )
    if np.unique(angles).size != angles.size:
        raise ValueError("angle set contains duplicates")
    if p_t <= 0:
        raise ValueError(f"p_t must be positive, got {p_t}")
    # canonical order: the design depends on the angle set, not its ordering
    steer = steering_matrix(np.sort(angles), array.n_tx)
    init = initial.entries if initial is not None else None
    r, _, _ = _solve_maxmin(steer, p_t, initial=init, max_iters=max_iters)
    # renormalize the trace exactly before constructing the checked type
    r = 0.5 * (r + r.conj().T)
    r *= p_t / float(np.trace(r).real)
    return WaveformCovariance(r, p_t)


def factor_covariance(r_w: WaveformCovariance) -> WeightMatrix:
    """Hermitian square root of the covariance, C = U diag(sqrt(lam)) U^H.

    Any right-unitary rotation of C yields the same covariance; callers
    must only rely on C C^H.
    """
    w, u = np.linalg.eigh(r_w.entries)
    w = np.maximum(w, 0.0)
    c = (u * np.sqrt(w)) @ u.conj().T
    # rescale so the checked power constraint holds exactly
    power = float(np.sum(np.abs(c) ** 2))
    c *= np.sqrt(r_w.p_t / power)
    return WeightMatrix(c, r_w.p_t)


def omni_weights(array: ArrayConfig, p_t: float) -> WeightMatrix:
    """Identity-proportional weighting: flat beampattern of height p_t."""
    if p_t <= 0:
        raise ValueError(f"p_t must be positive, got {p_t}")
    c = np.eye(array.n_tx, dtype=complex) * np.sqrt(p_t / array.n_tx)
    return WeightMatrix(c, p_t)


def design_beam(
    selection: BinSelection,
    array: ArrayConfig,
    p_t: float,
    initial: WaveformCovariance | None = None,
) -> BeamPlan:
    """Full adaptation step: optimize over the selected angles and factor."""
    cov = optimize_covariance(selection.angles, array, p_t, initial=initial)
    weights = factor_covariance(cov)
    a = steering_matrix(selection.angles, array.n_tx)
    achieved = float(np.einsum("jt,ts,js->j", a, cov.entries, a.conj()).real.min())
    return BeamPlan(selection=selection, covariance=cov, weights=weights, achieved_min=achieved)
