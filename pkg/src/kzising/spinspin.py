"""Ferromagnetic sz-sz correlator after dephasing.

Once the anomalous correlator has dephased down to its ground-state value
``beta_R = sign(R) delta_{|R|,1} / 4`` and ``<aa> = <bb> = 0``, the string
``<b_0 a_1 b_1 a_2 ... b_{R-1} a_R>`` collapses to the determinant of an
``R x R`` Toeplitz matrix with entries ``<b_i a_{j+1}>``.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from . import majorana
from .errors import ConditioningError, DomainError, FitError
from .protocol import KZScales

R_GUARD = 10.0  # max R in units of xi_hat


def dephased_alpha(scales: KZScales, d):
    """Ground-state delta terms plus the Gaussian excitation part."""
    d = np.abs(np.asarray(d))
    xi = scales.xi_hat
    out = np.exp(-np.pi * (d / xi) ** 2) / xi
    out = out + 0.5 * (d == 0) - 0.25 * (d == 1)
    return out


def dephased_beta(d):
    d = np.asarray(d)
    return 0.25 * np.sign(d) * (np.abs(d) == 1)


def toeplitz_symbol(scales: KZScales, m):
    """``T_ij = t(j - i)`` with ``t(m) = <b_0 a_{m+1}>``."""
    d = np.asarray(m) + 1
    return (d == 0) - 2.0 * dephased_alpha(scales, d) + 2.0 * dephased_beta(d)


@dataclass(frozen=True)
class ToeplitzSpec:
    R: int
    scales: KZScales

    def generator(self, m):
        return toeplitz_symbol(self.scales, m)

    def matrix(self) -> np.ndarray:
        i = np.arange(self.R)
        return self.generator(i[None, :] - i[:, None]).astype(float)


@dataclass(frozen=True)
class AsymptoteFit:
    decay_rate: float
    frequency: float
    phase: float
    amplitude: float
    residual: float


def _guard(scales, R):
    if not 1 <= R <= R_GUARD * scales.xi_hat:
        raise DomainError(
            f"R must lie in [1, {R_GUARD:g} xi_hat = {R_GUARD * scales.xi_hat:.1f}], got {R}")


def czz(scales: KZScales, R: int) -> float:
    """``C^zz_R`` as a pivoted-LU determinant."""
    _guard(scales, R)
    sign, logdet = np.linalg.slogdet(ToeplitzSpec(int(R), scales).matrix())
    return float(sign * math.exp(logdet))


def czz_levinson(scales: KZScales, R_max: int) -> np.ndarray:
    """Determinants of all leading ``R x R`` blocks, ``R = 1..R_max``.

    Non-symmetric Levinson recursion on the forward/backward solutions of
    ``T f = e_1`` and ``T b = e_R``; ``det T_{R+1} = det T_R / f_1``.
    """
    _guard(scales, R_max)
    t = lambda m: float(toeplitz_symbol(scales, m))
    tpos = np.array([t(m) for m in range(R_max)])  # t_0 .. t_{R-1}
    tneg = np.array([t(-m) for m in range(R_max)])  # t_0 .. t_{-(R-1)}
    dets = np.empty(R_max)
    dets[0] = tpos[0]
    if tpos[0] == 0.0:
        raise ConditioningError("singular leading minor at R=1")
    f = np.array([1.0 / tpos[0]])
    b = f.copy()
    for n in range(1, R_max):
        # row n of T_{n+1} against [f; 0], row 0 against [0; b]
        ef = float(np.dot(tneg[n:0:-1], f))
        eb = float(np.dot(tpos[1:n + 1], b))
        den = 1.0 - ef * eb
        if den == 0.0:
            raise ConditioningError(f"singular leading minor at R={n + 1}")
        f0 = np.append(f, 0.0)
        b0 = np.insert(b, 0, 0.0)
        f = (f0 - ef * b0) / den
        b = (b0 - eb * f0) / den
        dets[n] = dets[n - 1] / f[0]
    return dets


def czz_series(scales: KZScales, R_max: int, check_every: int = 25,
               rtol: float = 1e-8) -> np.ndarray:
    """``C^zz_R`` for ``R = 1..R_max`` via the recursion, spot-checked by LU.

    Raises ``ConditioningError`` when the two evaluations disagree by more
    than ``rtol`` relative to the largest determinant in the series.
    """
    dets = czz_levinson(scales, R_max)
    scale = float(np.max(np.abs(dets)))
    for R in list(range(1, R_max + 1, check_every)) + [R_max]:
        lu = czz(scales, R)
        if abs(lu - dets[R - 1]) > rtol * scale:
            raise ConditioningError(
                f"Levinson and LU determinants disagree at R={R}: "
                f"{dets[R - 1]!r} vs {lu!r}")
    return dets


def czz_exact(fc, R: int) -> float:
    """``<sz_0 sz_R>`` for arbitrary (not dephased) correlators, as a Pfaffian."""
    if not 1 <= R <= fc.R_max:
        raise DomainError(f"R must lie in [1, {fc.R_max}], got {R}")
    val = majorana.expectation(majorana.string_operators(R), fc.alpha, fc.beta)
    return float(np.real(val))


def kink_density_model(scales: KZScales) -> float:
    """``<K_n>`` in the dephased model; ``C^zz_1 = 1 - 2 <K_n>``."""
    return float(0.5 * (1.0 - toeplitz_symbol(scales, 0)))


def _initial_guess(x, y):
    zc = np.where(np.diff(np.sign(y)) != 0)[0]
    if len(zc) >= 2:
        # linear interpolation of the zero crossings
        xs = x[zc] - y[zc] * (x[zc + 1] - x[zc]) / (y[zc + 1] - y[zc])
        omega = math.pi / float(np.mean(np.diff(xs)))
    else:
        omega = 2.0 * math.pi / (x[-1] - x[0])
    ext = [i for i in range(1, len(y) - 1)
           if abs(y[i]) >= abs(y[i - 1]) and abs(y[i]) >= abs(y[i + 1])]
    if len(ext) >= 2:
        lam = -np.polyfit(x[ext], np.log(np.abs(y[ext])), 1)[0]
    else:
        lam = 1.0
    return max(lam, 1e-3), omega


def fit_asymptote(R, values, scales: KZScales, max_residual: float = 0.05) -> AsymptoteFit:
    """Least-squares fit of ``A exp(-lam x) cos(w x - phi)`` with ``x = R / xi_hat``.

    The residual is the rms misfit relative to the largest |value|.
    """
    R = np.asarray(R, dtype=float)
    y = np.asarray(values, dtype=float)
    if R.size < 40:
        raise FitError(f"need at least 40 points, got {R.size}", residual=np.inf)
    x = R / scales.xi_hat
    lam0, om0 = _initial_guess(x, y)
    env = np.exp(-lam0 * x)
    # amplitude and phase from a linear fit at fixed (lam0, om0)
    basis = np.column_stack([env * np.cos(om0 * x), env * np.sin(om0 * x)])
    (c1, c2), *_ = np.linalg.lstsq(basis, y, rcond=None)
    A0 = math.hypot(c1, c2)
    phi0 = math.atan2(c2, c1)
    scale = float(np.max(np.abs(y)))

    def resid(p):
        A, lam, om, phi = p
        return (A * np.exp(-lam * x) * np.cos(om * x - phi) - y) / scale

    res = least_squares(resid, x0=[A0, lam0, om0, phi0], method="lm")
    A, lam, om, phi = res.x
    if A < 0:
        A, phi = -A, phi + math.pi
    phi = math.remainder(phi, 2.0 * math.pi)
    rms = float(np.sqrt(np.mean(res.fun ** 2)))
    if not res.success or rms > max_residual or lam <= 0 or om <= 0:
        raise FitError(f"asymptote fit failed (rms residual {rms:.3g})", residual=rms)
    return AsymptoteFit(decay_rate=float(lam), frequency=float(om), phase=float(phi),
                        amplitude=float(A), residual=rms)
