"""Steering vectors and transmit beampatterns of the colocated MIMO model.

Walks through: the phase law of a half-wavelength ULA, the flat pattern of
the identity weighting, a rank-one design steered at one bin, and the
power-conservation identity (the beampattern averaged uniformly in
sin-space equals the total transmit power).
"""

import numpy as np

from rlbeam import (
    AngleGrid,
    ArrayConfig,
    WaveformCovariance,
    beampattern,
    normalized_beampattern_db,
    omni_weights,
    steering_tx,
)

arr = ArrayConfig(n_tx=16, n_rx=16)
grid = AngleGrid.from_degrees(-45, 45, 22)
p_t = float(arr.n_tx)

print("steering vector at 0 deg (first 4 entries):", steering_tx(0.0, 4))
print("steering vector at 30 deg, 2 elements:", steering_tx(np.pi / 6, 2))

# identity weighting: flat pattern at p_t everywhere
omni = omni_weights(arr, p_t).covariance()
angles_deg = np.degrees(grid.angles)
b_omni = beampattern(omni, grid.angles)
print(f"\nomnidirectional pattern: min={b_omni.min():.6f}, max={b_omni.max():.6f} (p_t={p_t})")

# rank-one design: all power into one steering direction
steer_bin = 17
a = steering_tx(grid.angles[steer_bin], arr.n_tx)
rank_one = WaveformCovariance(p_t * np.outer(a.conj(), a) / arr.n_tx, p_t)
d = normalized_beampattern_db(rank_one, grid)
print(f"\nrank-one design steered at bin {steer_bin} ({angles_deg[steer_bin]:.1f} deg):")
for lo in range(0, grid.n_bins, 6):
    row = "  ".join(f"{angles_deg[l]:+6.1f}:{d[l]:7.1f} dB" for l in range(lo, min(lo + 6, grid.n_bins)))
    print("  " + row)
print(f"peak gain over omni: {beampattern(rank_one, grid.angles[steer_bin]) / p_t:.1f}x")

# power conservation: mean over a sin-uniform grid recovers trace = p_t
u = -1.0 + 2.0 * np.arange(4096) / 4096
for name, cov in (("omni", omni), ("rank-one", rank_one)):
    avg = beampattern(cov, np.arcsin(u)).mean()
    print(f"sin-space average of {name} pattern: {avg:.6f} (total power {p_t})")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(angles_deg, 10 * np.log10(b_omni / b_omni.max()), "o-", label="omni")
    ax.plot(angles_deg, d, "s-", label=f"rank-one at {angles_deg[steer_bin]:.0f} deg")
    ax.set_xlabel("angle (deg)")
    ax.set_ylabel("normalized pattern (dB)")
    ax.set_ylim(-40, 2)
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig("demo01_beampatterns.png", dpi=120)
    print("\nsaved demo01_beampatterns.png")
except ImportError:
    print("\nmatplotlib not available; skipping the plot")
