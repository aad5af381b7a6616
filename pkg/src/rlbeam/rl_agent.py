"""Tabular agent surface: state extraction, reward, policy, and Q update.

The state is the number of angle bins whose range profile crosses the
detection threshold; the action is how many bins the next transmission
will cover. Rewards accumulate the estimated per-cell detection
probability of every over-threshold cell.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import i0e

from .detector import DetectionMap, noncentral_chi2_2_tail

__all__ = [
    "QTable",
    "AgentConfig",
    "Transition",
    "compute_state",
    "reward",
    "select_action",
    "sarsa_update",
    "convergence_index",
]

REWARD_KINDS = ("pd_tail", "pdf_literal")


@dataclass(eq=False)
class QTable:
    """State-action values; rows are states 0..t_max, columns actions 1..t_max."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[0] != self.values.shape[1] + 1:
            raise ValueError(
                f"Q table must have shape (t_max + 1, t_max), got {self.values.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("Q table contains non-finite entries")

    @classmethod
    def zeros(cls, t_max: int) -> "QTable":
        if t_max < 1:
            raise ValueError(f"t_max must be >= 1, got {t_max}")
        return cls(np.zeros((t_max + 1, t_max)))

    @property
    def t_max(self) -> int:
        return self.values.shape[1]

    def copy(self) -> "QTable":
        return QTable(self.values.copy())


@dataclass(frozen=True)
class AgentConfig:
    """SARSA hyperparameters.

    Careful: epsilon is the probability of taking the GREEDY action, the
    inverse of the usual exploration-rate convention. epsilon = 1 is pure
    exploitation, epsilon = 0 never takes the greedy action.
    """

    beta: float = 0.8
    gamma: float = 0.1
    epsilon: float = 0.5
    t_max: int = 10
    reward_kind: str = "pd_tail"
    textbook_update: bool = False
    learning_rate: float = 0.1

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must be in (0, 1), got {self.beta}")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must be in [0, 1], got {self.epsilon}")
        if self.t_max < 1:
            raise ValueError(f"t_max must be >= 1, got {self.t_max}")
        if self.reward_kind not in REWARD_KINDS:
            raise ValueError(f"reward_kind must be one of {REWARD_KINDS}, got {self.reward_kind!r}")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError(f"learning_rate must be in (0, 1], got {self.learning_rate}")


@dataclass(frozen=True)
class Transition:
    """One SARSA quintuple (s, a, r, s', a')."""

    s: int
    a: int
    r: float
    s_next: int
    a_next: int


def compute_state(dmap: DetectionMap, lambda_bar: float, t_max: int) -> int:
    """Number of angle bins with at least one over-threshold range cell.

    Clamped to t_max so the value always indexes the Q table, even when
    false alarms push the raw count beyond the identifiable maximum.
    """
    if lambda_bar < 0:
        raise ValueError(f"lambda_bar must be nonnegative, got {lambda_bar}")
    count = int(np.sum(dmap.values.max(axis=1) > lambda_bar))
    return min(count, t_max)


def reward(dmap: DetectionMap, lambda_bar: float, kind: str = "pd_tail") -> float:
    """Sum of per-cell contributions over the cells exceeding the threshold.

    pd_tail scores each over-threshold cell by the tail probability of a
    noncentral chi-squared (2 dof) with the cell's statistic as
    noncentrality, i.e. the estimated probability of that detection
    repeating. pdf_literal instead evaluates the same distribution's
    density at its own noncentrality. Cells at or below the threshold
    contribute nothing.
    """
    if kind not in REWARD_KINDS:
        raise ValueError(f"kind must be one of {REWARD_KINDS}, got {kind!r}")
    hits = dmap.values[dmap.values > lambda_bar]
    if hits.size == 0:
        return 0.0
    if kind == "pd_tail":
        return float(sum(noncentral_chi2_2_tail(lambda_bar, d) for d in hits))
    # density of a noncentral chi2(2, delta) at delta: 0.5 * exp(-delta) * I0(delta)
    return float(np.sum(0.5 * i0e(hits)))


def select_action(q: QTable, s: int, epsilon: float, rng: np.random.Generator) -> int:
    """Pick a coverage count in 1..t_max.

    With probability epsilon take the greedy action (row argmax, ties to
    the smallest action); otherwise draw uniformly from the remaining
    actions.
    """
    if not 0 <= s < q.values.shape[0]:
        raise ValueError(f"state {s} outside table rows 0..{q.values.shape[0] - 1}")
    t_max = q.t_max
    a_opt = int(np.argmax(q.values[s])) + 1
    if t_max == 1:
        return a_opt
    if rng.random() < epsilon:
        return a_opt
    other = int(rng.integers(t_max - 1)) + 1
    return other if other < a_opt else other + 1


def sarsa_update(q: QTable, t: Transition, cfg: AgentConfig) -> float:
    """Apply one Q iteration in place and return the new entry value.

    Default rule: Q(s,a) <- beta * Q(s,a) + (1 - beta) * (r + gamma *
    Q(s',a') - Q(s,a)), which rescales the old value rather than adding a
    stepped temporal difference. Setting textbook_update uses the
    conventional Q(s,a) <- Q(s,a) + lr * (r + gamma * Q(s',a') - Q(s,a))
    instead. Exactly one entry changes.
    """
    rows, cols = q.values.shape
    if not (0 <= t.s < rows and 0 <= t.s_next < rows):
        raise ValueError(f"transition states ({t.s}, {t.s_next}) outside 0..{rows - 1}")
    if not (1 <= t.a <= cols and 1 <= t.a_next <= cols):
        raise ValueError(f"transition actions ({t.a}, {t.a_next}) outside 1..{cols}")
    old = q.values[t.s, t.a - 1]
    bootstrap = t.r + cfg.gamma * q.values[t.s_next, t.a_next - 1]
    if cfg.textbook_update:
        new = old + cfg.learning_rate * (bootstrap - old)
    else:
        new = cfg.beta * old + (1.0 - cfg.beta) * (bootstrap - old)
    q.values[t.s, t.a - 1] = new
    return float(new)


def convergence_index(q_prev: QTable, q_curr: QTable) -> float:
    """Largest entry-wise change between two consecutive Q tables."""
    if q_prev.values.shape != q_curr.values.shape:
        raise ValueError(
            f"table shapes differ: {q_prev.values.shape} vs {q_curr.values.shape}"
        )
    return float(np.max(np.abs(q_curr.values - q_prev.values)))
