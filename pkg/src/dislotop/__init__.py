"""Topological indices of dislocated one-dimensional periodic operators.

Computes band structure, bulk Maslov indices, Chern numbers, edge indices,
and spectral flows for Schrodinger operators with a dislocation, and the
corresponding quantities for Dirac operators with a rotating mass, then
checks that they all agree.
"""
from dislotop._kernels import backend_name

__version__ = "0.1.0"

__all__ = ["backend_name", "__version__"]
