"""Reactive-path durations of one-dimensional overdamped Langevin dynamics.

Exact conditioned-exit laws, small-temperature limit laws, Monte Carlo and
adaptive multilevel splitting samplers, and the statistics that compare them.
"""
from .errors import *  # noqa: F401,F403
from .potentials import Potential

__version__ = "0.1.0"

__all__ = ["Potential", "__version__"]
