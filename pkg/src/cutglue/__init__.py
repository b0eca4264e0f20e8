"""Numerical laboratory for cutoff regularization by field averaging on
discretized manifolds with boundary, and for the exact gluing of partition
functions across an interface cut, order by order in the loop expansion."""

__version__ = "0.1.0"
