"""Simulation and analysis of a spin-squeezed optical-lattice clock comparison.

Modules
-------
core        shared types, units and constants
cavity      dispersive atom-cavity response and coupling fit
geometry    effective coupling from cloud geometry, sub-ensemble overlap
squeezing   QND measurement model and squeezing sweeps
clock       two-ensemble differential clock sequence
stats       estimators, Allan deviation and noise bounds
"""

__version__ = "0.1.0"
