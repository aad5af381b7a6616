"""Array geometry, transmit beampatterns, and measurement synthesis.

Both ends of the link are half-wavelength uniform linear arrays. The
transmit side emits weighted combinations of orthonormal waveforms; only
the weighting matrix C matters after matched filtering, through the
waveform covariance R = C C^H and the per-cell spatial signature
h(theta) = (C^T a_tx(theta)) kron a_rx(theta).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "ArrayConfig",
    "AngleGrid",
    "WeightMatrix",
    "WaveformCovariance",
    "Snapshot",
    "steering_tx",
    "steering_rx",
    "steering_matrix",
    "beampattern",
    "normalized_beampattern_db",
    "spatial_signature",
    "synthesize_snapshot",
    "synthesize_scene",
]

# A cell target is (angle_bin, range_cell, snr_db).
CellTarget = tuple[int, int, float]


@dataclass(frozen=True)
class ArrayConfig:
    """Element counts of the colocated transmit/receive ULAs."""

    n_tx: int
    n_rx: int

    def __post_init__(self):
        if self.n_tx < 1:
            raise ValueError(f"n_tx must be >= 1, got {self.n_tx}")
        if self.n_rx < 1:
            raise ValueError(f"n_rx must be >= 1, got {self.n_rx}")

    @property
    def n_virtual(self) -> int:
        """Length of the vectorized per-cell measurement."""
        return self.n_tx * self.n_rx


@dataclass(frozen=True)
class AngleGrid:
    """Uniform angular grid of n_bins angles over [theta_min, theta_max], radians."""

    theta_min: float
    theta_max: float
    n_bins: int

    def __post_init__(self):
        half_pi = np.pi / 2
        if not (-half_pi < self.theta_min < half_pi):
            raise ValueError(f"theta_min must lie in (-pi/2, pi/2), got {self.theta_min}")
        if not (-half_pi < self.theta_max < half_pi):
            raise ValueError(f"theta_max must lie in (-pi/2, pi/2), got {self.theta_max}")
        if not self.theta_min < self.theta_max:
            raise ValueError("theta_min must be strictly less than theta_max")
        if self.n_bins < 1:
            raise ValueError(f"n_bins must be >= 1, got {self.n_bins}")

    @classmethod
    def from_degrees(cls, lo_deg: float, hi_deg: float, n_bins: int) -> "AngleGrid":
        return cls(float(np.deg2rad(lo_deg)), float(np.deg2rad(hi_deg)), n_bins)

    @property
    def angles(self) -> np.ndarray:
        """Bin angles in radians, strictly increasing, endpoints included."""
        return np.linspace(self.theta_min, self.theta_max, self.n_bins)

    def nearest_bin(self, theta: float) -> int:
        """Index of the grid angle closest to theta (ties go to the lower bin)."""
        return int(np.argmin(np.abs(self.angles - theta)))


@dataclass(eq=False)
class WeightMatrix:
    """Transmit weighting matrix C with total power trace(C C^H) = p_t."""

    entries: np.ndarray
    p_t: float

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=complex)
        if self.entries.ndim != 2 or self.entries.shape[0] != self.entries.shape[1]:
            raise ValueError(f"weight matrix must be square, got shape {self.entries.shape}")
        if self.p_t <= 0:
            raise ValueError(f"p_t must be positive, got {self.p_t}")
        power = float(np.sum(np.abs(self.entries) ** 2))
        if abs(power - self.p_t) > 1e-9 * self.p_t:
            raise ValueError(
                f"trace(C C^H) = {power!r} differs from p_t = {self.p_t!r} beyond 1e-9 relative"
            )

    @property
    def n_tx(self) -> int:
        return self.entries.shape[0]

    def covariance(self) -> "WaveformCovariance":
        """The waveform covariance C C^H induced by this weighting."""
        r = self.entries @ self.entries.conj().T
        r = 0.5 * (r + r.conj().T)
        return WaveformCovariance(r, self.p_t)


@dataclass(eq=False)
class WaveformCovariance:
    """Hermitian PSD waveform covariance with trace equal to the total power p_t."""

    entries: np.ndarray
    p_t: float

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=complex)
        if self.entries.ndim != 2 or self.entries.shape[0] != self.entries.shape[1]:
            raise ValueError(f"covariance must be square, got shape {self.entries.shape}")
        if self.p_t <= 0:
            raise ValueError(f"p_t must be positive, got {self.p_t}")
        scale = float(np.linalg.norm(self.entries))
        herm_err = float(np.linalg.norm(self.entries - self.entries.conj().T))
        if herm_err > 1e-10 * max(scale, 1e-300):
            raise ValueError(f"covariance is not Hermitian (relative deviation {herm_err / scale:.2e})")
        tr = float(np.trace(self.entries).real)
        if abs(tr - self.p_t) > 1e-9 * self.p_t:
            raise ValueError(f"trace = {tr!r} differs from p_t = {self.p_t!r} beyond 1e-9 relative")
        eigs = np.linalg.eigvalsh(self.entries)
        if eigs.min() < -1e-10 * tr:
            raise ValueError(f"covariance has a negative eigenvalue {eigs.min():.3e}")

    @property
    def n_tx(self) -> int:
        return self.entries.shape[0]


@dataclass(eq=False)
class Snapshot:
    """Vectorized measurement of one angle-range cell at time step k."""

    y: np.ndarray
    cell: tuple[int, int]
    k: int = 0

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=complex)
        if self.y.ndim != 1:
            raise ValueError("snapshot must be a vector")


def steering_tx(theta: float, n_tx: int) -> np.ndarray:
    """Transmit steering vector; entry m equals exp(j*pi*m*sin(theta))."""
    m = np.arange(n_tx)
    return np.exp(1j * np.pi * m * np.sin(theta))


def steering_rx(theta: float, n_rx: int) -> np.ndarray:
    """Receive steering vector, same phase law as the transmit side."""
    return steering_tx(theta, n_rx)


def steering_matrix(angles: np.ndarray, n: int) -> np.ndarray:
    """Stack of steering vectors, one row per angle; shape (len(angles), n)."""
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    m = np.arange(n)
    return np.exp(1j * np.pi * np.sin(angles)[:, None] * m[None, :])


def beampattern(r_w: WaveformCovariance, theta) -> float | np.ndarray:
    """Transmitted power density a^T R a* at angle(s) theta.

    Accepts a scalar angle or an array of angles. Values are clamped at
    zero from below to absorb round-off in nearly singular covariances.
    """
    a = steering_matrix(theta, r_w.n_tx)
    b = np.einsum("lt,ts,ls->l", a, r_w.entries, a.conj()).real
    b = np.maximum(b, 0.0)
    if np.isscalar(theta) or np.ndim(theta) == 0:
        return float(b[0])
    return b


def normalized_beampattern_db(r_w: WaveformCovariance, grid: AngleGrid) -> np.ndarray:
    """Beampattern over the grid in dB relative to its own maximum (peak = 0 dB)."""
    b = beampattern(r_w, grid.angles)
    peak = b.max()
    if peak <= 0.0:
        raise ValueError("beampattern is zero over the entire grid")
    return 10.0 * np.log10(b / peak)


def spatial_signature(theta: float, c: WeightMatrix, array: ArrayConfig) -> np.ndarray:
    """Per-cell signature (C^T a_tx) kron a_rx, the vectorized rank-one response."""
    if c.n_tx != array.n_tx:
        raise ValueError(f"weight matrix is {c.n_tx}x{c.n_tx} but the array has n_tx={array.n_tx}")
    b = c.entries.T @ steering_tx(theta, array.n_tx)
    return np.kron(b, steering_rx(theta, array.n_rx))


def _complex_normal(rng: np.random.Generator, shape, var: float):
    """Circular complex Gaussian with total variance var per entry.

    Real and imaginary parts are independent N(0, var/2) draws.
    """
    z = rng.standard_normal(tuple(shape) + (2,))
    return (z[..., 0] + 1j * z[..., 1]) * np.sqrt(var / 2.0)


def _check_targets(targets: Sequence[CellTarget], n_bins: int, n_ranges: int | None = None):
    seen = set()
    for l, g, _snr in targets:
        if not (0 <= l < n_bins):
            raise ValueError(f"target angle bin {l} outside grid of {n_bins} bins")
        if n_ranges is not None and not (0 <= g < n_ranges):
            raise ValueError(f"target range cell {g} outside {n_ranges} cells")
        if (l, g) in seen:
            raise ValueError(f"two targets occupy cell ({l}, {g})")
        seen.add((l, g))


def synthesize_snapshot(
    cell: tuple[int, int],
    targets: Sequence[CellTarget],
    c: WeightMatrix,
    grid: AngleGrid,
    array: ArrayConfig,
    sigma2: float,
    rng: np.random.Generator,
    k: int = 0,
) -> Snapshot:
    """Simulate the measurement of one cell.

    Noise is white circular complex Gaussian with per-component variance
    sigma2. If a target from `targets` (triples of angle bin, range cell,
    SNR in dB) occupies the cell, a fresh complex amplitude with variance
    10^(snr/10) * sigma2 is drawn and applied to the cell's signature.
    Draw order is noise first, then the amplitude.
    """
    if sigma2 <= 0:
        raise ValueError(f"sigma2 must be positive, got {sigma2}")
    _check_targets(targets, grid.n_bins)
    l, g = cell
    y = _complex_normal(rng, (array.n_virtual,), sigma2)
    for tl, tg, snr_db in targets:
        if (tl, tg) == (l, g):
            var = 10.0 ** (snr_db / 10.0) * sigma2
            alpha = complex(_complex_normal(rng, (), var))
            y = y + alpha * spatial_signature(grid.angles[l], c, array)
            break
    return Snapshot(y=y, cell=(l, g), k=k)


def synthesize_scene(
    targets: Sequence[CellTarget],
    c: WeightMatrix,
    grid: AngleGrid,
    n_ranges: int,
    array: ArrayConfig,
    sigma2: float,
    rng: np.random.Generator,
    out: np.ndarray | None = None,
) -> np.ndarray:
    """Simulate all angle-range cells of one scan at once.

    Returns a complex array of shape (n_bins, n_ranges, n_tx * n_rx).
    Passing `out` reuses the buffer across scans. Noise for the whole
    scene is drawn in a single call, then one amplitude per target in
    the order given.
    """
    if sigma2 <= 0:
        raise ValueError(f"sigma2 must be positive, got {sigma2}")
    _check_targets(targets, grid.n_bins, n_ranges)
    shape = (grid.n_bins, n_ranges, array.n_virtual)
    if out is None:
        out = np.empty(shape, dtype=complex)
    elif out.shape != shape or out.dtype != np.complex128 or not out.flags.c_contiguous:
        raise ValueError("out buffer must be C-contiguous complex128 of shape (L, G, M)")
    flat = out.view(np.float64).reshape(-1)
    rng.standard_normal(out=flat)
    flat *= np.sqrt(sigma2 / 2.0)
    for l, g, snr_db in targets:
        var = 10.0 ** (snr_db / 10.0) * sigma2
        alpha = complex(_complex_normal(rng, (), var))
        out[l, g] += alpha * spatial_signature(grid.angles[l], c, array)
    return out
