"""Constrained variational problems solved with neural function approximators.

Provides penalty and augmented Lagrangian training loops over small
feed-forward / LSTM-style networks, quadrature-evaluated functionals,
four built-in benchmark problems with closed-form truth oracles, and a
command line runner (``varconstrain``).
"""

__version__ = "0.1.0"
