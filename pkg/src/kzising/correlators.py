"""Quadratic fermion correlators and kink-kink correlation functions.

``alpha_R = <c_{n+R} c_n^+>`` and ``beta_R = <c_{n+R} c_n>`` are evaluated as
finite momentum sums over the anti-periodic grid, keeping the full dynamical
phases of the final amplitudes.  Kink correlators are built from them by
Wick's theorem; the closed-form comparator curves live here as well.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import least_squares

from . import majorana
from .bdg_solver import FinalModes
from .errors import DomainError, FitError
from .protocol import A_FIT, ChainSpec, KZScales, a_FIT, momentum_grid

# n^-2 C prefactor of the dephasing term: (57 sqrt(6 pi) / 80)^2
KK_PREFACTOR = 9747.0 * math.pi / 3200.0

KINDS = ("exact", "approx", "analytic", "analytic_halted", "dephased")


@dataclass(frozen=True)
class FermionCorrelators:
    R_max: int
    alpha: np.ndarray
    beta: np.ndarray
    scales: Optional[KZScales] = None
    N: Optional[int] = None

    def a(self, d: int) -> float:
        return float(self.alpha[abs(d)])

    def b(self, d: int) -> complex:
        return complex(self.beta[d]) if d >= 0 else -complex(self.beta[-d])


@dataclass(frozen=True)
class CorrelatorSeries:
    kind: str
    R: np.ndarray
    values: np.ndarray
    normalization: float

    @property
    def points(self):
        return list(zip(self.R.tolist(), self.values.tolist()))

    @property
    def nR(self) -> np.ndarray:
        return np.sqrt(self.normalization) * self.R


def fermion_correlators(modes: FinalModes, R_max: int,
                        scales: Optional[KZScales] = None,
                        chunk: int = 256) -> FermionCorrelators:
    """``alpha_0..alpha_Rmax`` and ``beta_0..beta_Rmax`` from final amplitudes.

    ``modes`` must cover the full grid.  ``R_max`` may go up to ``N - 1``.
    """
    chain: ChainSpec = modes.chain
    N = chain.N
    grid = momentum_grid(chain)
    have = np.asarray(modes.k)
    if have.shape != grid.shape or not np.allclose(have, grid, rtol=0, atol=1e-12):
        missing = [float(k) for k in grid
                   if not np.any(np.isclose(have, k, rtol=0, atol=1e-12))]
        raise DomainError(f"incomplete momentum grid; missing k = {missing}")
    if not 0 <= R_max <= N - 1:
        raise DomainError(f"R_max must lie in [0, {N - 1}], got {R_max}")

    uu = np.abs(modes.u) ** 2
    uv = modes.u * np.conj(modes.v)
    R = np.arange(R_max + 1)
    alpha = np.empty(R_max + 1)
    beta = np.empty(R_max + 1, dtype=complex)
    for s in range(0, R_max + 1, chunk):
        r = R[s:s + chunk]
        ph = np.exp(1j * np.outer(grid, r))
        alpha[s:s + chunk] = np.real(np.sum(uu[:, None] * ph, axis=0)) / N
        beta[s:s + chunk] = -1j * np.sum(uv[:, None] * ph, axis=0) / N
    beta[0] = 0.0
    return FermionCorrelators(R_max, alpha, beta, scales, N)


def _check_R(fc: FermionCorrelators, R: int, hi: int):
    if not 1 <= R <= hi:
        raise DomainError(f"R must lie in [1, {hi}], got {R}")


def kink_kink_exact(fc: FermionCorrelators, R: int) -> float:
    """Connected ``<K_n K_{n+R}>`` from Wick's theorem, no approximation.

    For ``R >= 2`` this is the familiar six-term combination of alpha and
    beta at ``R`` and ``R +- 1``.  At ``R = 1`` the two bonds share a site and
    the contraction ``<a_1 b_1>`` adds ``(alpha_2 - Re beta_2) / 2``.
    """
    _check_R(fc, R, fc.R_max - 1)
    a, b = fc.a, fc.b
    bR, bp, bm = b(R), b(R + 1), b(R - 1)
    val = (0.5 * abs(bR) ** 2 + 0.5 * (bp * np.conj(bm)).real
           - a(R + 1) * a(R - 1)
           + 0.5 * (bp * bm - bR * bR).real
           + a(R - 1) * bp.real - a(R + 1) * bm.real)
    if R == 1:
        val += 0.5 * (a(2) - bp.real)
    return float(val)


def kink_kink_approx(fc: FermionCorrelators, R: int) -> float:
    _check_R(fc, R, fc.R_max)
    return float(abs(fc.b(R)) ** 2 - fc.a(R) ** 2)


def transverse_connected(fc: FermionCorrelators, R: int) -> float:
    """Connected ``<sx_0 sx_R>`` with ``sx_n = a_n b_n`` via Wick pairings."""
    _check_R(fc, R, fc.R_max)
    c = lambda o1, m, o2, n: majorana.contraction(o1, m, o2, n, fc.alpha, fc.beta)
    val = -c("a", 0, "a", R) * c("b", 0, "b", R) + c("a", 0, "b", R) * c("b", 0, "a", R)
    return float(np.real(val))


def kink_density_from_correlators(fc: FermionCorrelators) -> float:
    """``<K_n> = (1 - <b_n a_{n+1}>) / 2``."""
    return float(0.5 * (1.0 - majorana.contraction("b", 0, "a", 1, fc.alpha, fc.beta)))


def kink_autocorrelation(n: float) -> float:
    """``<K_n^2> - <K_n>^2 = n (1 - n)``; the ``R = 0`` member kept out of
    the correlator series."""
    return n * (1.0 - n)


def _variant_length(scales: KZScales, variant: str) -> float:
    if variant == "straight":
        return scales.l
    if variant == "halted":
        if scales.l_w is None:
            raise DomainError("halted variant requested for a ramp without a halt")
        return scales.l_w
    raise DomainError(f"unknown variant {variant!r}")


def kink_kink_analytic(scales: KZScales, R, variant: str = "straight"):
    """Scaled closed-form correlator ``n^-2 C_R``.

    ``straight`` and ``halted`` add the positive dephasing-length term (with
    ``l`` or ``l_w``) to the anti-bunching Gaussian; ``dephased`` is the
    Gaussian alone.  The first term peaks at ``R = l / sqrt(3 pi)``.
    """
    R = np.asarray(R, dtype=float)
    xi = scales.xi_hat
    gauss = -np.exp(-2.0 * np.pi * (R / xi) ** 2)
    if variant == "dephased":
        out = gauss
    else:
        l = _variant_length(scales, variant)
        x = R / l
        out = KK_PREFACTOR * (xi / l) * x * x * np.exp(-3.0 * np.pi * x * x) + gauss
    return float(out) if out.ndim == 0 else out


def delta_beta_analytic(scales: KZScales, R, variant: str = "straight"):
    """Magnitude of the excitation part of ``beta_R`` (its phase is not modelled)."""
    R = np.asarray(R, dtype=float)
    l = _variant_length(scales, variant)
    pref = math.sqrt(8.0 * math.pi) * A_FIT / a_FIT ** 1.5
    out = pref * R / math.sqrt(scales.xi_hat * l ** 3) * np.exp(-2.0 * math.pi / a_FIT * (R / l) ** 2)
    return float(out) if out.ndim == 0 else out


def scaled_series(fc: FermionCorrelators, kind: str, R, n: float,
                  scales: Optional[KZScales] = None) -> CorrelatorSeries:
    """``n^-2 C_R`` for one curve kind at the separations ``R``.

    Numerical kinds use the correlators in ``fc``; analytic kinds use
    ``scales`` rescaled to the supplied density ``n``.
    """
    R = np.asarray(R, dtype=int)
    if np.any(R < 1):
        raise DomainError("correlator series start at R = 1")
    if kind == "exact":
        vals = np.array([kink_kink_exact(fc, int(r)) for r in R]) / n ** 2
    elif kind == "approx":
        vals = np.array([kink_kink_approx(fc, int(r)) for r in R]) / n ** 2
    else:
        sc = (scales or fc.scales)
        if sc is None:
            raise DomainError(f"kind {kind!r} needs KZ scales")
        sc = sc.rescaled(n)
        variant = {"analytic": "straight", "analytic_halted": "halted",
                   "dephased": "dephased"}.get(kind)
        if variant is None:
            raise DomainError(f"unknown correlator kind {kind!r}")
        vals = np.asarray(kink_kink_analytic(sc, R, variant), dtype=float)
    return CorrelatorSeries(kind, R, vals, n ** 2)


@dataclass(frozen=True)
class DephasingFit:
    l: float
    amplitude: float
    residual: float

    @property
    def peak_height(self) -> float:
        # max of A (R/l)^2 exp(-3 pi (R/l)^2) is A / (3 pi e)
        return self.amplitude / (3.0 * math.pi * math.e)


def fit_dephasing_length(fc: FermionCorrelators, n: float, l_guess: float,
                         R_lo: int = 2, R_hi: Optional[int] = None,
                         max_residual: float = 0.2) -> DephasingFit:
    """Fit ``A (R/l)^2 exp(-3 pi (R/l)^2)`` to the positive term ``n^-2 |beta_R|^2``.

    For ``R >= 2`` the ground-state part of ``beta`` vanishes, so
    ``|beta_R|^2`` is exactly the positive piece of the approximate
    correlator ``|beta_R|^2 - alpha_R^2``.  The residual is the rms misfit
    relative to the peak of the data.
    """
    R_hi = R_hi or min(fc.R_max, int(3 * l_guess))
    R = np.arange(R_lo, R_hi + 1)
    y = np.abs(fc.beta[R]) ** 2 / n ** 2
    peak = float(np.max(y))
    if not peak > 0:
        raise FitError("no positive correlator term to fit", residual=np.inf)

    def model(p):
        A, l = p
        x = R / l
        return A * x * x * np.exp(-3.0 * np.pi * x * x)

    A0 = peak * 3.0 * math.pi * math.e
    res = least_squares(lambda p: (model(p) - y) / peak, x0=[A0, l_guess],
                        bounds=([0.0, 1.0], [np.inf, np.inf]), x_scale=[A0, l_guess])
    rms = float(np.sqrt(np.mean(res.fun ** 2)))
    if not res.success or rms > max_residual:
        raise FitError(f"dephasing-length fit failed (rms residual {rms:.3g})", residual=rms)
    return DephasingFit(l=float(res.x[1]), amplitude=float(res.x[0]), residual=rms)
