"""Depth-1 QAOA, recursive QAOA and policy-gradient elimination for Ising problems."""
from __future__ import annotations

from .graph import IsingInstance, contract, energy, reconstruct
from .qaoa import Angles, all_correlations, optimize_angles
from .rqaoa import RqaoaConfig, best_of_runs, brute_force_exact, run_rqaoa

__version__ = "0.1.0"

__all__ = ["IsingInstance", "contract", "energy", "reconstruct", "Angles", "all_correlations",
           "optimize_angles", "RqaoaConfig", "best_of_runs", "brute_force_exact", "run_rqaoa",
           "__version__"]
