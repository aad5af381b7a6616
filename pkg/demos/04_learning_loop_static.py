"""The closed learning loop on the static four-target scene, reduced scale.

Runs the adaptive mode against the omnidirectional baseline on a
shortened static scenario and prints the detection comparison, the
action/state distributions, and the convergence-index trace.
"""

from dataclasses import replace

import numpy as np

from rlbeam import monte_carlo, study_case_1

RUNS = 10
STEPS = 100

scn = study_case_1(n_steps=STEPS, n_runs=RUNS, seed=3)
print(f"static scene, {RUNS} runs x {STEPS} steps (expect a couple of minutes)")
print("targets:", [(t.angle_bin, f"{t.snr_db:+.0f} dB") for t in scn.targets])

adaptive = monte_carlo(scn, keep_runs=1)
omni = monte_carlo(replace(scn, baseline_mode="omni"))

print("\nper-target detection probability:")
print("  target   bin   snr      adaptive   omni")
for i, t in enumerate(scn.targets):
    print(
        f"  T{i + 1}      {t.angle_bin:4d}  {t.snr_db:+5.0f}    "
        f"{adaptive.pd[i]:8.3f}  {omni.pd[i]:8.3f}"
    )

run0 = adaptive.runs[0]
print("\nrun 0 state/action traces (last 20 steps):")
print("  states :", run0.states[-20:])
print("  actions:", run0.actions[-20:])

xi = adaptive.mean_xi
print("\nmean convergence index:")
for lo in range(0, STEPS, 20):
    seg = xi[lo : lo + 20]
    print(f"  steps {lo + 1:3d}-{lo + len(seg):3d}: median {np.median(seg):.3f}")

tb = [t.angle_bin for t in scn.targets]
others = [b for b in range(scn.grid.n_bins) if b not in tb]
w = adaptive.mean_beampattern_db[STEPS // 2 :]
print(
    f"\nmean pattern, second half: target bins {w[:, tb].mean():.1f} dB, "
    f"non-target bins {w[:, others].mean():.1f} dB"
)

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(1, 2, figsize=(11, 4))
    im = axes[0].imshow(
        adaptive.mean_beampattern_db.T,
        aspect="auto",
        origin="lower",
        extent=[1, STEPS, np.degrees(scn.grid.theta_min), np.degrees(scn.grid.theta_max)],
        vmin=-25,
        vmax=0,
        cmap="viridis",
    )
    axes[0].set_xlabel("time step")
    axes[0].set_ylabel("angle (deg)")
    axes[0].set_title("mean normalized pattern (dB)")
    fig.colorbar(im, ax=axes[0])
    axes[1].plot(np.arange(1, STEPS + 1), xi)
    axes[1].set_xlabel("time step")
    axes[1].set_ylabel("mean Q-table change")
    axes[1].grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig("demo04_learning_loop.png", dpi=120)
    print("\nsaved demo04_learning_loop.png")
except ImportError:
    print("\nmatplotlib not available; skipping the plot")
