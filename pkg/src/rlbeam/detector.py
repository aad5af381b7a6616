"""Per-cell GLR detection with chi-squared threshold calibration.

With known noise power the statistic 2 |h^H y|^2 / (sigma2 ||h||^2) is
exactly chi-squared with 2 dof under noise alone, and noncentral
chi-squared with 2 dof under a deterministic amplitude, so thresholds
and detection probabilities have closed or rapidly convergent forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .array_signal import AngleGrid, ArrayConfig, WeightMatrix, steering_matrix

__all__ = [
    "NoiseModel",
    "ThresholdConfig",
    "DetectionMap",
    "glr_statistic",
    "threshold_from_pfa",
    "chi2_2_tail",
    "noncentral_chi2_2_tail",
    "ml_alpha",
    "estimate_noise_power",
    "scan",
]


@dataclass(frozen=True)
class NoiseModel:
    """Disturbance description: power sigma2, and whether it is known a priori.

    When known is False, scans substitute a robust estimate computed from
    the scan's own cells.
    """

    sigma2: float
    known: bool = True

    def __post_init__(self):
        if self.sigma2 <= 0:
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")


@dataclass(frozen=True)
class ThresholdConfig:
    """False-alarm design point and the matching chi2(2 dof) threshold."""

    p_fa: float
    lambda_bar: float

    def __post_init__(self):
        if not 0.0 < self.p_fa < 1.0:
            raise ValueError(f"p_fa must be in (0, 1), got {self.p_fa}")
        expected = -2.0 * math.log(self.p_fa)
        if abs(self.lambda_bar - expected) > 1e-9 * max(expected, 1.0):
            raise ValueError(
                f"lambda_bar = {self.lambda_bar!r} inconsistent with p_fa = {self.p_fa!r}"
            )

    @classmethod
    def from_pfa(cls, p_fa: float) -> "ThresholdConfig":
        return cls(p_fa, threshold_from_pfa(p_fa))


@dataclass(eq=False)
class DetectionMap:
    """GLR statistics of all angle-range cells at one time step."""

    values: np.ndarray
    k: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValueError("detection map must be a 2-d (angle x range) matrix")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("detection map contains non-finite entries")
        if self.values.min() < 0:
            raise ValueError("detection map contains negative entries")

    @property
    def n_bins(self) -> int:
        return self.values.shape[0]

    @property
    def n_ranges(self) -> int:
        return self.values.shape[1]


def glr_statistic(y: np.ndarray, h: np.ndarray, sigma2: float) -> float:
    """GLR statistic 2 |h^H y|^2 / (sigma2 ||h||^2) for one cell.

    Invariant to rescaling h by any nonzero complex factor.
    """
    if sigma2 <= 0:
        raise ValueError(f"sigma2 must be positive, got {sigma2}")
    h = np.asarray(h, dtype=complex)
    y = np.asarray(y, dtype=complex)
    hh = float(np.sum(np.abs(h) ** 2))
    if hh == 0.0:
        raise ValueError("spatial signature is the zero vector")
    return 2.0 / sigma2 * abs(np.vdot(h, y)) ** 2 / hh


def threshold_from_pfa(p_fa: float) -> float:
    """Detection threshold achieving the requested false-alarm probability.

    Closed-form inverse of the chi2(2 dof) survival function: -2 ln(p_fa).
    """
    if not 0.0 < p_fa < 1.0:
        raise ValueError(f"p_fa must be in (0, 1), got {p_fa}")
    return -2.0 * math.log(p_fa)


def chi2_2_tail(x: float) -> float:
    """Survival function of the central chi-squared with 2 dof: exp(-x/2)."""
    if x < 0:
        raise ValueError(f"x must be nonnegative, got {x}")
    return math.exp(-x / 2.0)


def noncentral_chi2_2_tail(x: float, delta: float) -> float:
    """Survival function of the noncentral chi-squared with 2 dof.

    Evaluates the Poisson mixture of central chi-squared tails,

        sum_n PoisPmf(n; delta/2) * PoisCdf(n; x/2),

    where the inner factor is the closed-form tail of a chi-squared with
    2(n+1) dof. The sum is truncated once the remaining Poisson mass drops
    below 1e-13; each dropped term is at most that mass times 1, so the
    truncation error is below 1e-13 in absolute value. Equals the Marcum Q
    function Q_1(sqrt(delta), sqrt(x)).
    """
    if x < 0:
        raise ValueError(f"x must be nonnegative, got {x}")
    if delta < 0:
        raise ValueError(f"delta must be nonnegative, got {delta}")
    if x == 0.0:
        return 1.0
    if delta == 0.0:
        return math.exp(-x / 2.0)
    hx = x / 2.0
    hd = delta / 2.0
    # Saturation shortcut: if essentially all Poisson(hd) mass lies above the
    # upper tail of Poisson(hx), every inner cdf factor is 1 to double
    # precision. The window bounds below leave out less than 1e-30 of mass
    # on either side (Chernoff), so the result is 1 within 1e-15.
    if hd - 12.0 * math.sqrt(hd) - 10.0 > hx + 9.0 * math.sqrt(hx) + 30.0:
        return 1.0
    if hd < 700.0 and hx < 700.0:
        w = math.exp(-hd)  # Poisson(hd) pmf at n
        cum = w
        p = math.exp(-hx)  # Poisson(hx) pmf at n
        cdf = p
        total = w * cdf
        n = 0
        while 1.0 - cum > 1e-13 and n < 200_000:
            n += 1
            w *= hd / n
            cum += w
            p *= hx / n
            cdf += p
            total += w * (cdf if cdf < 1.0 else 1.0)
        return min(total, 1.0)
    return _noncentral_tail_windowed(hx, hd)


def _poisson_log_pmf(n: np.ndarray, mean: float) -> np.ndarray:
    from scipy.special import gammaln

    return n * math.log(mean) - mean - gammaln(n + 1.0)


def _noncentral_tail_windowed(hx: float, hd: float) -> float:
    """Large-argument branch of the mixture sum, evaluated in log space.

    Only reached when hx or hd exceeds 700 (where exp(-hx) or exp(-hd)
    underflows) and the saturation shortcut did not fire. Terms are summed
    over a window of +-(12 sqrt(mean) + 10) around each Poisson mode; the
    excluded mass is below 1e-30 per side.
    """
    def window(mean: float) -> tuple[int, int]:
        half = 12.0 * math.sqrt(mean) + 10.0
        return max(0, int(mean - half)), int(mean + half) + 1

    n1, n2 = window(hd)
    n = np.arange(n1, n2 + 1)
    w = np.exp(_poisson_log_pmf(n, hd))
    # Poisson(hx) cdf at every n in [n1, n2], built from the pmf window of hx.
    m1, m2 = window(hx)
    if m2 < n1:
        cdf_at = np.ones(n.size)
    elif m1 > n2:
        cdf_at = np.zeros(n.size)
    else:
        j = np.arange(m1, m2 + 1)
        cum = np.cumsum(np.exp(_poisson_log_pmf(j, hx)))
        pos = n - m1
        cdf_at = np.where(pos < 0, 0.0, cum[np.clip(pos, 0, j.size - 1)])
    return float(min(np.sum(w * np.minimum(cdf_at, 1.0)), 1.0))


def ml_alpha(y: np.ndarray, h: np.ndarray) -> complex:
    """Maximum-likelihood amplitude estimate h^H y / ||h||.

    With this normalization, 2 |ml_alpha|^2 / sigma2 coincides with the
    GLR statistic of the same cell.
    """
    h = np.asarray(h, dtype=complex)
    y = np.asarray(y, dtype=complex)
    norm = float(np.linalg.norm(h))
    if norm == 0.0:
        raise ValueError("spatial signature is the zero vector")
    return complex(np.vdot(h, y) / norm)


def estimate_noise_power(snapshots: np.ndarray) -> float:
    """Robust noise power estimate from the cells of one scan.

    Divides the median over cells of ||y||^2 by the median of ||n||^2 at
    unit noise power, which is half the median of a chi-squared variable
    with 2M dof (M = vector length). The median is insensitive to the
    sparse minority of target-bearing cells.
    """
    y = np.asarray(snapshots, dtype=complex)
    if y.ndim < 2:
        raise ValueError("expected an array of snapshot vectors")
    cells = y.reshape(-1, y.shape[-1])
    if cells.shape[0] < 10:
        raise ValueError(f"need at least 10 cells, got {cells.shape[0]}")
    m = cells.shape[-1]
    energies = np.sum(np.abs(cells) ** 2, axis=-1)
    ref_median = stats.chi2.median(2 * m) / 2.0
    return float(np.median(energies) / ref_median)


def scan(
    snapshots: np.ndarray,
    c: WeightMatrix,
    noise: NoiseModel,
    grid: AngleGrid,
    array: ArrayConfig,
    k: int = 0,
) -> DetectionMap:
    """GLR statistic for every angle-range cell of one scan.

    `snapshots` has shape (n_bins, n_ranges, n_tx * n_rx). Spatial
    signatures are computed once per angle bin and shared across the
    range cells of that bin.
    """
    y = np.asarray(snapshots, dtype=complex)
    if y.ndim != 3:
        raise ValueError("snapshots must have shape (n_bins, n_ranges, n_tx * n_rx)")
    if y.shape[0] != grid.n_bins:
        raise ValueError(f"snapshot grid has {y.shape[0]} bins, expected {grid.n_bins}")
    if y.shape[2] != array.n_virtual:
        raise ValueError(
            f"snapshot vectors have length {y.shape[2]}, expected {array.n_virtual}"
        )
    sigma2 = noise.sigma2 if noise.known else estimate_noise_power(y)
    # h_l = (C^T a_tx(theta_l)) kron a_rx(theta_l) for all bins at once
    b = steering_matrix(grid.angles, array.n_tx) @ c.entries  # rows (C^T a_l)^T
    h = np.einsum("lt,lr->ltr", b, steering_matrix(grid.angles, array.n_rx)).reshape(
        grid.n_bins, -1
    )
    h_norm2 = np.sum(np.abs(h) ** 2, axis=1)
    if np.any(h_norm2 == 0.0):
        dead = int(np.argmin(h_norm2))
        raise ValueError(f"zero spatial signature at angle bin {dead}")
    inner = np.matmul(y, h.conj()[:, :, None])[:, :, 0]
    values = (2.0 / sigma2) * np.abs(inner) ** 2 / h_norm2[:, None]
    return DetectionMap(values, k=k)
