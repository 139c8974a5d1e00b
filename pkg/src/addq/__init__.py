"""Tabular distributional RL lab: ADDQ, its baselines, exact oracles and theory checks."""

__version__ = "0.1.0"
