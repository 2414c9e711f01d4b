"""Connected multi-kink correlators in the dephased regime.

With bond operators ``b_{R_i} a_{R_i+1}`` more than two sites apart, every
Wick contraction between different bonds is ``<b_m a_n> = -2 alpha_{n-m}``
with the Gaussian ``alpha_R = exp(-pi (R/xi)^2) / xi``.  The connected
``(M+1)``-point correlator then reduces to a sum over single cycles through
all bonds: ``(-1)^M sum_perm alpha_{R_i0 - R_i1} ... alpha_{R_iM - R_i0}``.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .protocol import KZScales

M_MAX = 8
MIN_GAP = 3
_UNDERFLOW = 1e-300


@dataclass(frozen=True)
class KinkPositions:
    positions: tuple

    def __post_init__(self):
        pos = tuple(int(p) for p in self.positions)
        object.__setattr__(self, "positions", pos)
        if len(pos) < 2:
            raise DomainError("need at least two kink positions (M >= 1)")
        if pos[0] != 0:
            raise DomainError(f"positions must start at R_0 = 0, got {pos[0]}")
        if len(pos) - 1 > M_MAX:
            raise DomainError(f"M = {len(pos) - 1} exceeds the cost guard M <= {M_MAX}")
        gaps = np.diff(pos)
        if np.any(gaps < MIN_GAP):
            raise DomainError(f"positions must increase with gaps >= {MIN_GAP}, got {pos}")

    @property
    def M(self) -> int:
        return len(self.positions) - 1

    @classmethod
    def from_offsets(cls, positions):
        """Shift an arbitrary increasing sequence so it starts at zero."""
        p = [int(x) for x in positions]
        return cls(tuple(x - p[0] for x in p))


def gaussian_alpha(scales: KZScales, R):
    xi = scales.xi_hat
    return np.exp(-math.pi * (np.asarray(R, dtype=float) / xi) ** 2) / xi


def correlator_sign(M: int) -> int:
    """Sign of the connected ``(M+1)``-point correlator at generic positions."""
    if M < 1:
        raise DomainError(f"M must be >= 1, got {M}")
    return -1 if M % 2 else 1


def connected_kink_correlator(scales: KZScales, pos: KinkPositions) -> float:
    """``(-1)^M`` times the sum over all orderings of a closed alpha-cycle."""
    p = pos.positions
    M = pos.M
    A = gaussian_alpha(scales, np.subtract.outer(p, p))
    total = 0.0
    for perm in itertools.permutations(range(1, M + 1)):
        prod = 1.0
        prev = 0
        for i in perm:
            prod *= A[prev, i]
            if prod < _UNDERFLOW:
                prod = 0.0
                break
            prev = i
        if prod:
            total += prod * A[prev, 0]
    return correlator_sign(M) * total
