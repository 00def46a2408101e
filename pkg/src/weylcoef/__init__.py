"""Numerical Weyl coefficients of 2x2 canonical systems and their scale-function estimates."""

from .errors import WeylError
from .hamiltonian_core import (HamiltonianModel, constant, diagonal, identity, omega,
                               piecewise_constant, table)
from .scales import envelopes, log_r_hat, log_r_ring, r_hat, r_ring, t_hat, t_ring
from .weyl_engine import QEvaluation, eval_q, propagate, q_value, weyl_disk

__all__ = [
    "WeylError", "HamiltonianModel", "constant", "diagonal", "identity", "omega",
    "piecewise_constant", "table", "envelopes", "log_r_hat", "log_r_ring", "r_hat", "r_ring",
    "t_hat", "t_ring", "QEvaluation", "eval_q", "propagate", "q_value", "weyl_disk",
]
