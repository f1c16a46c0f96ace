"""Bohmian trajectories, quantum probability tubes and paraxial optical streamlines."""

from ._bohmflow import *  # noqa: F401,F403
from ._bohmflow import BohmflowError, __version__  # noqa: F401
