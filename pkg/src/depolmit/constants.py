"""Global numerical tolerances, kept in one place."""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    # structural checks: norms, traces, hermiticity, unitarity
    structural: float = 1e-10
    # density-matrix eigenvalue floor (allows float drift below zero)
    eig_floor: float = -1e-8
    # Kraus completeness, sum_i K_i^dag K_i = 1
    kraus: float = 1e-8
    # trace preservation of channel application
    trace_preserve: float = 1e-9
    # largest tolerated imaginary residue of a real expectation value
    imag_residue: float = 1e-9
    # largest tolerated negative sampling probability
    negative_prob: float = 1e-7


TOL = Tolerances()
