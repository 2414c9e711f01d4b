"""Chain geometry, ramp schedules and closed-form Kibble-Zurek scales.

The transverse field is ramped linearly, ``g(t) = -t / tau_q``, from ``g0``
down to zero, optionally pausing at ``g_w`` for a waiting time ``t_w``.
Only the even-parity sector is considered, so fermionic quasimomenta are
half-integer multiples of ``2 pi / N``.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .errors import DegeneracyError, DomainError

# Variational parameters of the anomalous-correlator approximation.
A_FIT = 19.0 / 20.0
a_FIT = 4.0 / 3.0


@dataclass(frozen=True)
class ChainSpec:
    """Periodic spin chain of ``N`` sites (anti-periodic fermions)."""

    N: int

    def __post_init__(self):
        if not isinstance(self.N, (int, np.integer)) or isinstance(self.N, bool):
            raise DomainError(f"N must be an integer, got {self.N!r}")
        if self.N < 4 or self.N % 2:
            raise DomainError(f"N must be even and >= 4, got {self.N}")


@dataclass(frozen=True)
class Halt:
    g_w: float
    t_w: float

    def __post_init__(self):
        if not 0.0 < self.g_w < 1.0:
            raise DomainError(f"halt field g_w must lie in (0, 1), got {self.g_w}")
        if not self.t_w >= 0.0:
            raise DomainError(f"waiting time t_w must be >= 0, got {self.t_w}")


class Segment(NamedTuple):
    t0: float
    t1: float
    g0: float
    g1: float

    @property
    def slope(self) -> float:
        return (self.g1 - self.g0) / (self.t1 - self.t0)


@dataclass(frozen=True)
class RampProtocol:
    """Piecewise-linear field schedule ending at ``g = 0``.

    Without a halt the ramp runs over ``[-g0 * tau_q, 0]``.  With a halt the
    end time is shifted to ``t_w`` so that the second linear piece is the
    straight ramp delayed by the waiting time.
    """

    tau_q: float
    g0: float = 10.0
    halt: Optional[Halt] = None
    segments: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.tau_q > 0:
            raise DomainError(f"tau_q must be > 0, got {self.tau_q}")
        if not self.g0 > 1:
            raise DomainError(f"g0 must be > 1, got {self.g0}")
        tau = float(self.tau_q)
        g0 = float(self.g0)
        t_start = -g0 * tau
        if self.halt is None or self.halt.t_w == 0.0:
            segs = (Segment(t_start, 0.0, g0, 0.0),)
            if self.halt is not None:
                # t_w = 0: keep the breakpoint at g_w so the schedule is
                # segment-for-segment comparable with t_w > 0 runs
                t_a = -self.halt.g_w * tau
                segs = (Segment(t_start, t_a, g0, self.halt.g_w),
                        Segment(t_a, 0.0, self.halt.g_w, 0.0))
        else:
            g_w, t_w = float(self.halt.g_w), float(self.halt.t_w)
            t_a = -g_w * tau
            t_b = t_a + t_w
            segs = (
                Segment(t_start, t_a, g0, g_w),
                Segment(t_a, t_b, g_w, g_w),
                Segment(t_b, t_w, g_w, 0.0),
            )
        object.__setattr__(self, "segments", segs)

    @property
    def t_start(self) -> float:
        return self.segments[0].t0

    @property
    def t_end(self) -> float:
        return self.segments[-1].t1

    @property
    def t_critical(self) -> float:
        """Time at which the ramp crosses ``g = 1``."""
        return -float(self.tau_q)


def field_at(protocol: RampProtocol, t: float) -> float:
    """Transverse field at time ``t``; exact at every breakpoint."""
    if not protocol.t_start <= t <= protocol.t_end:
        raise DomainError(
            f"t = {t} outside the ramp domain "
            f"[{protocol.t_start}, {protocol.t_end}]"
        )
    segs = protocol.segments
    i = bisect.bisect_right([s.t0 for s in segs], t) - 1
    s = segs[max(i, 0)]
    if t == s.t0:
        return s.g0
    if t == s.t1:
        return s.g1
    if s.g0 == s.g1:
        return s.g0
    return s.g0 + (s.g1 - s.g0) * (t - s.t0) / (s.t1 - s.t0)


def momentum_grid(chain: ChainSpec) -> np.ndarray:
    """All ``N`` half-integer quasimomenta, ascending."""
    N = chain.N
    j = np.arange(1, N // 2 + 1)
    kp = (2 * j - 1) * np.pi / N
    return np.concatenate([-kp[::-1], kp])


def positive_momenta(chain: ChainSpec) -> np.ndarray:
    N = chain.N
    return (2 * np.arange(1, N // 2 + 1) - 1) * np.pi / N


def dispersion(g, k):
    """Quasiparticle energy 2 sqrt((g - cos k)^2 + sin^2 k)."""
    return 2.0 * np.hypot(g - np.cos(k), np.sin(k))


def bdg_matrix(g, k):
    a = 2.0 * (g - np.cos(k))
    b = 2.0 * np.sin(k)
    return np.array([[a, b], [b, -a]])


def static_mode(g, k):
    """Positive-energy stationary Bogoliubov mode ``(U, V)``.

    ``U`` is real and non-negative.  Works elementwise on arrays.
    """
    a = 2.0 * (g - np.cos(k))
    b = 2.0 * np.sin(k)
    eps = np.hypot(a, b)
    if np.any(eps == 0.0):
        raise DegeneracyError(f"gapless point: eps_k = 0 at g={g}, k={k}")
    x = a / eps
    U = np.sqrt(0.5 * (1.0 + x))
    V = np.sqrt(0.5 * (1.0 - x))
    V = np.where(b < 0, -V, V)
    if np.ndim(U) == 0:
        return float(U), float(V)
    return U, V


@dataclass(frozen=True)
class KZScales:
    xi_hat: float
    n: float
    l: float
    l_w: Optional[float] = None
    t_D: Optional[float] = None
    tau_q: Optional[float] = None

    def rescaled(self, n_numeric: float) -> "KZScales":
        """Same length ratios, but with ``xi_hat = 1/n_numeric``.

        Analytic curves compared against numerical correlators are built from
        this so that the comparison isolates the correlator shape.
        """
        xi = 1.0 / n_numeric
        f = xi / self.xi_hat
        return KZScales(
            xi_hat=xi,
            n=n_numeric,
            l=self.l * f,
            l_w=None if self.l_w is None else self.l_w * f,
            t_D=self.t_D,
            tau_q=self.tau_q,
        )


def kz_length(tau_q: float) -> float:
    return 2.0 * math.pi * math.sqrt(2.0 * tau_q)


def dephasing_length(tau_q: float, g_w: float = 0.5, t_w: float = 0.0) -> float:
    xi = kz_length(tau_q)
    shift = 0.0
    if t_w:
        shift = 2.0 * g_w / abs(1.0 - g_w) * t_w / tau_q
    x = (math.log(tau_q) + shift) / (a_FIT * math.pi)
    return xi * math.sqrt(1.0 + x * x)


def dephasing_time(tau_q: float, g_w: float) -> float:
    return 2.0 * math.pi / 3.0 * abs(1.0 - g_w) / g_w * tau_q


def kz_scales(protocol: RampProtocol) -> KZScales:
    tau = float(protocol.tau_q)
    xi = kz_length(tau)
    l = dephasing_length(tau)
    l_w = t_D = None
    if protocol.halt is not None:
        l_w = dephasing_length(tau, protocol.halt.g_w, protocol.halt.t_w)
        t_D = dephasing_time(tau, protocol.halt.g_w)
    return KZScales(xi_hat=xi, n=1.0 / xi, l=l, l_w=l_w, t_D=t_D, tau_q=tau)


def lz_probability(protocol: RampProtocol, k):
    """Landau-Zener excitation probability in two forms.

    Returns ``(full, gaussian)`` with ``full = exp(-2 pi tau_q sin^2 k)`` and
    ``gaussian = exp(-2 pi tau_q k^2)``.
    """
    tau = float(protocol.tau_q)
    full = np.exp(-2.0 * np.pi * tau * np.sin(k) ** 2)
    gauss = np.exp(-2.0 * np.pi * tau * np.asarray(k) ** 2)
    if np.ndim(full) == 0:
        return float(full), float(gauss)
    return full, gauss


def lz_rate(tau_q: float, k):
    """Effective Landau-Zener sweep rate ``1 / (4 tau_q sin^2 k)``."""
    return 1.0 / (4.0 * tau_q * np.sin(k) ** 2)


def default_chain_size(tau_q: float) -> int:
    n = max(2000, math.ceil(40.0 * kz_length(tau_q)))
    return n + (n % 2)
