"""Gradient random surfaces with convex potentials: oracles, samplers and bounds."""

__version__ = "0.1.0"

from . import energy, lattice, logconcave, potentials, sampler  # noqa: E402
from .errors import *  # noqa: E402,F401,F403
from .lattice import build_box, build_torus, custom_graph  # noqa: E402
from .potentials import Potential, parse_potential  # noqa: E402

__all__ = [
    "__version__",
    "energy",
    "lattice",
    "logconcave",
    "potentials",
    "sampler",
    "Potential",
    "parse_potential",
    "build_box",
    "build_torus",
    "custom_graph",
]
