"""Closed-loop MIMO radar simulator with learned transmit beamforming.

A tabular SARSA agent observes per-cell GLR detection maps, counts the
angle bins that look occupied, and steers the transmit beampattern toward
them through a max-min covariance design under a total power constraint.
"""

from .array_signal import (
    AngleGrid,
    ArrayConfig,
    Snapshot,
    WaveformCovariance,
    WeightMatrix,
    beampattern,
    normalized_beampattern_db,
    spatial_signature,
    steering_matrix,
    steering_rx,
    steering_tx,
    synthesize_scene,
    synthesize_snapshot,
)
from .beamformer import (
    BeamPlan,
    BinSelection,
    design_beam,
    factor_covariance,
    omni_weights,
    optimize_covariance,
    select_bins,
)
from .detector import (
    DetectionMap,
    NoiseModel,
    ThresholdConfig,
    chi2_2_tail,
    estimate_noise_power,
    glr_statistic,
    ml_alpha,
    noncentral_chi2_2_tail,
    scan,
    threshold_from_pfa,
)
from .rl_agent import (
    AgentConfig,
    QTable,
    Transition,
    compute_state,
    convergence_index,
    reward,
    sarsa_update,
    select_action,
)
from .sim_engine import (
    BURN_IN_STEPS,
    MCSummary,
    RunMetrics,
    Scenario,
    SimulationError,
    TargetSpec,
    episode_rng,
    monte_carlo,
    run_episode,
    study_case_1,
    study_case_2,
)

__version__ = "0.1.0"
