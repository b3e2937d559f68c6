"""Numerical laboratory for the Boltzmann-Grad limit of the 2D periodic
Lorentz gas: exact lattice billiard, continued-fraction transfer-map
asymptotics, the limiting transition kernel, and the extended-phase-space
kinetic model."""

__version__ = "0.1.0"
