"""Calibration workbench for a simulated cable-driven arm under a stereo rig.

The package simulates a repeatable positional bias, observes it through a
pinhole stereo pair, learns a coarse correction with a small neural network,
refines it with per-yaw residual forests, and scores the result on a circle
grid benchmark and a fragment-removal task.
"""

from . import debridesim, evalbench, persist, phase1, phase2, regress, scenario, stereocam, worldsim

__version__ = "0.1.0"

__all__ = ["debridesim", "evalbench", "persist", "phase1", "phase2", "regress",
           "scenario", "stereocam", "worldsim", "__version__"]
