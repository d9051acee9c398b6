"""Interval-set simulation of the random subset-sum process, with witness
reconstruction, brute-force oracles and Monte Carlo checks of its tail bounds.
"""

from .intervals import Interval, IntervalSet, normalize
from .process import (
    ProcessParams,
    ProcessState,
    StoppingTimes,
    clipped_next_volume,
    eps_covered,
    init,
    run,
    step,
    two_eps_covered,
    volume,
)
from .oracle import (
    GridDpParams,
    SubsetSolution,
    brute_force_best,
    grid_dp_approximable,
    reconstruct,
)

__all__ = [
    "Interval",
    "IntervalSet",
    "normalize",
    "ProcessParams",
    "ProcessState",
    "StoppingTimes",
    "init",
    "step",
    "volume",
    "clipped_next_volume",
    "run",
    "eps_covered",
    "two_eps_covered",
    "GridDpParams",
    "SubsetSolution",
    "brute_force_best",
    "grid_dp_approximable",
    "reconstruct",
]
