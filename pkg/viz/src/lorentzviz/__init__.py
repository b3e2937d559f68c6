"""Batch figure rendering for lorentzgas CSV artifacts.

This package is a pure consumer of the CSV schemas written by the
lorentzgas command-line tool; it never imports the simulation code and
never recomputes a statistic — every number shown in a figure is read
from the input files.
"""

__version__ = "0.1.0"

from .render import PlotSpec, SchemaError, build_figure, render  # noqa: F401
