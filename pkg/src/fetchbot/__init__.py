"""fetchbot: a deterministic mobile-manipulation simulator.

A differential-drive base with two 7-joint arms fetches a requested object
and hands it over on a sensed pull, end to end: grammar-parsed commands,
face matching, occupancy mapping with an inflated costmap, Monte-Carlo
localization, A* global planning, elastic-band local planning, PID/watchdog
drive control and marker-guided grasping, all on a seeded 20 Hz world.
"""

from .geometry import Pose2D, Transform3D, Twist2D
from .kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["Pose2D", "Twist2D", "Transform3D", "KERNEL_BACKEND", "__version__"]
