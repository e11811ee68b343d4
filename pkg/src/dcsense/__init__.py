"""Cooperative spectrum sensing laboratory.

Simulates a cognitive radio network with spatially correlated shadow
fading, builds per-user energy-detection reports, trains a small CNN
fusion model from scratch, and benchmarks it against K-out-of-N voting
and a linear SVM.
"""

from dcsense.config import ScenarioConfig

__all__ = ["ScenarioConfig"]
__version__ = "0.1.0"
