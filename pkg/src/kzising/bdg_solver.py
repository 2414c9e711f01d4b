"""Time-dependent Bogoliubov-de Gennes evolution of the ramped chain.

Every quasimomentum ``k`` carries a two-component amplitude ``(u_k, v_k)``
obeying

    i du/dt = +2 (g(t) - cos k) u + 2 sin k v
    i dv/dt = -2 (g(t) - cos k) v + 2 sin k u

started in the positive-energy stationary mode at ``g0``.  All modes are
advanced together by a unitary sixth-order Magnus scheme (see ``_magnus``);
the step sequence is shared, so results do not depend on the thread count.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _magnus
from .errors import DomainError, IntegrationError
from .protocol import (
    ChainSpec,
    RampProtocol,
    dispersion,
    field_at,
    momentum_grid,
    positive_momenta,
    static_mode,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-10
    max_step: float = np.inf

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol"):
            val = getattr(self, name)
            if not 0.0 < val <= 1e-3:
                raise DomainError(f"{name} must lie in (0, 1e-3], got {val}")
        if not self.max_step > 0:
            raise DomainError(f"max_step must be > 0, got {self.max_step}")

    @property
    def tol(self) -> float:
        # amplitudes are unit vectors, so the mixed tolerance is a constant
        return self.abs_tol + self.rel_tol

    def halved(self) -> "IntegratorConfig":
        return IntegratorConfig(self.rel_tol / 2, self.abs_tol / 2, self.max_step)


@dataclass(frozen=True)
class ModeState:
    k: float
    u: complex
    v: complex
    t: float

    @property
    def norm(self) -> float:
        return abs(self.u) ** 2 + abs(self.v) ** 2


@dataclass(frozen=True)
class FinalModes:
    """Final amplitudes for a set of quasimomenta (arrays, ascending ``k``)."""

    chain: ChainSpec
    protocol: RampProtocol
    k: np.ndarray
    u: np.ndarray
    v: np.ndarray
    t: float

    def states(self):
        return [ModeState(float(k), complex(u), complex(v), self.t)
                for k, u, v in zip(self.k, self.u, self.v)]

    def norm_error(self) -> float:
        return float(np.max(np.abs(np.abs(self.u) ** 2 + np.abs(self.v) ** 2 - 1)))

    def occupations(self) -> np.ndarray:
        g = field_at(self.protocol, self.t)
        return excitation_probability(self.u, self.v, g, self.k)


@dataclass(frozen=True)
class ExcitationSpectrum:
    k: np.ndarray
    p: np.ndarray
    protocol: RampProtocol
    chain: ChainSpec

    @property
    def entries(self):
        return list(zip(self.k.tolist(), self.p.tolist()))


def excitation_probability(u, v, g, k):
    """Weight on the negative-energy branch ``(-V, U)`` at field ``g``."""
    U, V = static_mode(g, k)
    return np.abs(U * v - V * u) ** 2


def evolve_modes(protocol: RampProtocol, k, cfg: Optional[IntegratorConfig] = None,
                 *, threads: Optional[int] = None):
    """Evolve the modes ``k`` (array) from ``t_start`` to ``t_end``.

    Returns ``(u, v, stats)``.
    """
    cfg = cfg or IntegratorConfig()
    k = np.asarray(k, dtype=np.float64)
    if np.any(np.sin(k) == 0.0):
        raise DomainError("k = 0 and k = pi are not on the anti-periodic grid")
    _magnus.set_threads(threads)
    U, V = static_mode(protocol.g0, k)
    u0 = np.asarray(U, dtype=complex)
    v0 = np.asarray(V, dtype=complex)
    u, v, stats = _magnus.propagate(
        2.0 * np.sin(k), 2.0 * np.cos(k), np.atleast_1d(u0), np.atleast_1d(v0),
        protocol.segments, cfg.tol, cfg.max_step)
    if stats["failed"]:
        kk = float(np.atleast_1d(k)[stats["index"]])
        raise IntegrationError(
            f"step size underflow at t={stats['t']:.6g} for k={kk:.6g}",
            k=kk, t=stats["t"])
    log.debug("BdG propagation: %d steps (%d rejected) for %d modes",
              stats["accepted"], stats["rejected"], k.size)
    return u, v, stats


def evolve_mode(protocol: RampProtocol, k: float,
                cfg: Optional[IntegratorConfig] = None) -> ModeState:
    """Evolve a single quasimomentum to the end of the ramp (``g = 0``)."""
    u, v, _ = evolve_modes(protocol, np.array([k]), cfg)
    return ModeState(float(k), complex(u[0]), complex(v[0]), protocol.t_end)


def evolve_grid(protocol: RampProtocol, chain: ChainSpec,
                cfg: Optional[IntegratorConfig] = None, *, full: bool = False,
                threads: Optional[int] = None) -> FinalModes:
    """Final amplitudes on the whole grid.

    By default only ``k > 0`` is integrated; the ``k < 0`` half follows from
    the exact symmetry ``(u_-k, v_-k) = (u_k, -v_k)`` of the BdG equations.
    ``full=True`` integrates both halves independently.
    """
    if full:
        k = momentum_grid(chain)
        u, v, _ = evolve_modes(protocol, k, cfg, threads=threads)
    else:
        kp = positive_momenta(chain)
        up, vp, _ = evolve_modes(protocol, kp, cfg, threads=threads)
        k = np.concatenate([-kp[::-1], kp])
        u = np.concatenate([up[::-1], up])
        v = np.concatenate([-vp[::-1], vp])
    return FinalModes(chain, protocol, k, u, v, protocol.t_end)


def spectrum(protocol: RampProtocol, chain: ChainSpec,
             cfg: Optional[IntegratorConfig] = None, *,
             modes: Optional[FinalModes] = None) -> ExcitationSpectrum:
    """Final excitation probabilities ``p_k`` on the positive half-grid."""
    if modes is None:
        kp = positive_momenta(chain)
        u, v, _ = evolve_modes(protocol, kp, cfg)
        p = excitation_probability(u, v, field_at(protocol, protocol.t_end), kp)
        return ExcitationSpectrum(kp, p, protocol, chain)
    pos = modes.k > 0
    p = modes.occupations()[pos]
    return ExcitationSpectrum(modes.k[pos], p, protocol, chain)


def kink_density(spec: ExcitationSpectrum) -> float:
    """Mean kink density ``(1/N) sum_k p_k`` over the full grid.

    ``p_k`` is even in ``k`` so the positive half is counted twice.
    """
    return float(2.0 * np.sum(spec.p) / spec.chain.N)


def halt_rotation(u, v, g_w, k, t_w):
    """Analytic propagation through a halt at constant ``g_w``.

    Diagonalises the static BdG matrix and attaches ``exp(-+i eps_k t_w)`` to
    the two branches.  Used to cross-check the stepped evolution.
    """
    U, V = static_mode(g_w, k)
    eps = dispersion(g_w, k)
    cp = U * u + V * v
    cm = -V * u + U * v
    ph = np.exp(-1j * eps * t_w)
    cp = cp * ph
    cm = cm * np.conj(ph)
    return U * cp - V * cm, V * cp + U * cm


def self_convergence(protocol: RampProtocol, k, cfg: Optional[IntegratorConfig] = None):
    """Max change of ``|v|^2`` at the end of the ramp when tolerances halve."""
    cfg = cfg or IntegratorConfig()
    _, v1, _ = evolve_modes(protocol, k, cfg)
    _, v2, _ = evolve_modes(protocol, k, cfg.halved())
    return float(np.max(np.abs(np.abs(v1) ** 2 - np.abs(v2) ** 2)))
