"""Reference trajectories, tracking controllers and data collection.

Key Components:
- HelixSpec, Trajectory, gen_helix, sample_random_specs: helical references
- PidGains, pd_track, CascadedPidController: cascaded PD/PID tracking
- PerturbedController: exploration noise on the rotor commands for data collection
- simulate_tracking, collect_dataset: nonlinear rollouts and snapshot logging
"""

from .controller import (
    CascadedPidController,
    PerturbedController,
    PidGains,
    baseline_pid_gains,
    pd_track,
)
from .helix import (
    HelixDefaults,
    HelixSpec,
    Trajectory,
    TrajectorySample,
    flat_attitude,
    gen_helix,
    reference_states,
    sample_random_specs,
)
from .tracking import (
    DIVERGENCE_BOUND,
    collect_dataset,
    collect_logs,
    simulate_tracking,
)

__all__ = [
    "DIVERGENCE_BOUND",
    "CascadedPidController",
    "HelixDefaults",
    "HelixSpec",
    "PerturbedController",
    "PidGains",
    "Trajectory",
    "TrajectorySample",
    "baseline_pid_gains",
    "collect_dataset",
    "collect_logs",
    "flat_attitude",
    "gen_helix",
    "pd_track",
    "reference_states",
    "sample_random_specs",
    "simulate_tracking",
]
