"""Time kernels of the nonlinear optomechanical interaction.

For a dimensionless coupling profile g(tau) (all rates rescaled by the
mechanical frequency, tau = omega_m * t) the propagator factorization is
parameterized by three scalar kernels

    F_+(tau)  = - int_0^tau g(t') cos t' dt'
    F_-(tau)  = - int_0^tau g(t') sin t' dt'
    F_a(tau)  = -2 * int_0^tau g(t') sin t' [ int_0^t' g(t'') cos t'' dt'' ] dt'

(the signs are fixed by demanding that the factored propagator solve the
Schroedinger equation; see tests against time-ordered integration) from
which the derived quantities follow:

    A(tau)        = F_a + F_+ F_-          (Kerr-like optical phase)
    G(tau)        = F_- - i F_+            (mechanical displacement per photon)
    B(tau', tau)  = 2 Im[G(tau) G*(tau')]  (two-time interference phase)

For a constant coupling g0 the integrals have closed forms,

    F_a = g0^2 (sin 2tau - 2tau) / 2,  F_+ = -g0 sin tau,  F_- = g0 (cos tau - 1),

so G(2*pi*k) = 0 at integer multiples of the mechanical period.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator

from .errors import InputDomainError
from .quadrature import QuadConfig, adaptive_quad, cumulative_simpson_complex


# ---------------------------------------------------------------------------
# coupling profiles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConstantCoupling:
    """Time-independent coupling g(tau) = g0."""

    g0: float

    def __post_init__(self):
        if not np.isfinite(self.g0):
            raise InputDomainError("constant coupling must be finite")


class TabulatedCoupling:
    """Coupling sampled at strictly increasing times, interpolated monotonically.

    Monotone cubic (PCHIP) interpolation avoids spurious oscillation between
    samples.  Evaluation outside the sampled window is an error.
    """

    def __init__(self, taus, values):
        taus = np.asarray(taus, dtype=float)
        values = np.asarray(values, dtype=float)
        if taus.ndim != 1 or taus.shape != values.shape or taus.size < 2:
            raise InputDomainError("tabulated profile needs matching 1-d arrays of >= 2 samples")
        if not np.all(np.diff(taus) > 0):
            raise InputDomainError("tabulated sample times must be strictly increasing")
        if not (np.all(np.isfinite(taus)) and np.all(np.isfinite(values))):
            raise InputDomainError("tabulated profile contains non-finite entries")
        self.taus = taus
        self.values = values
        self._interp = PchipInterpolator(taus, values, extrapolate=False)

    def __call__(self, tau):
        out = self._interp(tau)
        if np.any(np.isnan(out)):
            raise InputDomainError(
                f"profile sampled outside its window [{self.taus[0]}, {self.taus[-1]}]")
        return out


@dataclass(frozen=True)
class CallbackCoupling:
    """Coupling given by an arbitrary pure function of tau."""

    func: Callable


CouplingProfile = Union[ConstantCoupling, TabulatedCoupling, CallbackCoupling]


def profile_values(profile: CouplingProfile, tau):
    """Evaluate a coupling profile at scalar or array tau."""
    tau = np.asarray(tau, dtype=float)
    if isinstance(profile, ConstantCoupling):
        vals = np.full_like(tau, profile.g0)
    elif isinstance(profile, TabulatedCoupling):
        vals = np.asarray(profile(tau), dtype=float)
    elif isinstance(profile, CallbackCoupling):
        vals = np.asarray(profile.func(tau), dtype=float)
        if vals.shape != tau.shape:  # non-vectorized callback
            vals = np.array([profile.func(t) for t in np.atleast_1d(tau)]).reshape(tau.shape)
    else:
        raise InputDomainError(f"unknown coupling profile type {type(profile)!r}")
    if not np.all(np.isfinite(vals)):
        raise InputDomainError("coupling profile returned non-finite values")
    return vals


def profile_from_csv(path) -> TabulatedCoupling:
    """Read a two-column CSV with header ``tau,g`` into a tabulated profile."""
    taus, vals = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip().lower() for c in header[:2]] != ["tau", "g"]:
            raise InputDomainError(f"{path}: expected CSV header 'tau,g'")
        for row in reader:
            if not row:
                continue
            taus.append(float(row[0]))
            vals.append(float(row[1]))
    return TabulatedCoupling(taus, vals)


# ---------------------------------------------------------------------------
# F coefficients
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FCoeffs:
    """The three scalar kernels evaluated at one time."""

    tau: float
    f_a: float
    f_plus: float
    f_minus: float


def f_coeffs_constant(g0: float, tau: float) -> FCoeffs:
    """Closed-form kernels for a constant coupling g0."""
    if not (np.isfinite(g0) and np.isfinite(tau)):
        raise InputDomainError("g0 and tau must be finite")
    if tau < 0:
        raise InputDomainError("tau must be non-negative")
    f_a = 0.5 * g0 * g0 * (np.sin(2.0 * tau) - 2.0 * tau)
    f_plus = -g0 * np.sin(tau)
    f_minus = g0 * (np.cos(tau) - 1.0)
    return FCoeffs(tau=tau, f_a=f_a, f_plus=f_plus, f_minus=f_minus)


def f_coeffs_general(profile: CouplingProfile, tau: float,
                     cfg: QuadConfig = QuadConfig()) -> FCoeffs:
    """Kernels for an arbitrary profile by adaptive quadrature.

    F_+ and F_- are single adaptive integrals.  The nested F_a integral is
    evaluated with an inner cumulative table (dense Simpson grid plus cubic
    interpolation, refined until the outer adaptive result is stable within
    the configured tolerances).
    """
    if not np.isfinite(tau) or tau < 0:
        raise InputDomainError("tau must be finite and non-negative")
    if tau == 0:
        return FCoeffs(tau=0.0, f_a=0.0, f_plus=0.0, f_minus=0.0)

    g = lambda t: profile_values(profile, t)
    f_plus, _ = adaptive_quad(lambda t: -g(t) * np.cos(t), 0.0, tau, cfg)
    f_minus, _ = adaptive_quad(lambda t: -g(t) * np.sin(t), 0.0, tau, cfg)

    # inner cumulative integral C(t) = int_0^t g cos, refined until the outer
    # integral stops moving
    f_a_prev = None
    npts = max(201, int(32 * tau) | 1)
    for _ in range(12):
        grid = np.linspace(0.0, tau, npts)
        inner = cumulative_simpson_complex(g(grid) * np.cos(grid), grid).real
        c_of_t = CubicSpline(grid, inner)
        f_a, _ = adaptive_quad(lambda t: -2.0 * g(t) * np.sin(t) * c_of_t(t), 0.0, tau, cfg)
        f_a = f_a.real
        if f_a_prev is not None and abs(f_a - f_a_prev) <= max(cfg.abs_tol, cfg.rel_tol * abs(f_a)):
            break
        f_a_prev = f_a
        npts = 2 * npts - 1
    return FCoeffs(tau=float(tau), f_a=float(f_a),
                   f_plus=float(np.real(f_plus)), f_minus=float(np.real(f_minus)))


def phase_A(fc: FCoeffs) -> float:
    """Accumulated Kerr-like optical phase A = F_a + F_+ F_-."""
    return fc.f_a + fc.f_plus * fc.f_minus


def displacement_G(fc: FCoeffs) -> complex:
    """Mechanical displacement per cavity photon, G = F_- - i F_+."""
    return fc.f_minus - 1j * fc.f_plus


def interference_B(g_tau: complex, g_tauprime: complex) -> float:
    """Two-time interference phase B = 2 Im[G(tau) G*(tau')]."""
    return 2.0 * float(np.imag(g_tau * np.conj(g_tauprime)))


# ---------------------------------------------------------------------------
# vectorized kernel evaluation over a time window
# ---------------------------------------------------------------------------

class CouplingKernels:
    """Vectorized access to F_a, F_+, F_-, A and G over [0, tau_max].

    Constant couplings use the closed forms directly.  General profiles are
    reduced once to cumulative tables on a refined dense grid; evaluation is
    then cubic interpolation.  Instances are immutable and safe to share
    between threads.
    """

    def __init__(self, profile: CouplingProfile, tau_max: float,
                 cfg: QuadConfig = QuadConfig()):
        self.profile = profile
        self.tau_max = float(tau_max)
        self._constant = isinstance(profile, ConstantCoupling)
        if self._constant:
            self._g0 = profile.g0
            return

        g = lambda t: profile_values(profile, t)
        npts = max(801, int(256 * tau_max) | 1)
        prev = None
        for _ in range(10):
            grid = np.linspace(0.0, tau_max, npts)
            gv = g(grid)
            fp = -cumulative_simpson_complex(gv * np.cos(grid), grid).real
            fm = -cumulative_simpson_complex(gv * np.sin(grid), grid).real
            # inner integral int_0^t g cos equals -F_+, so the outer
            # integrand -2 g sin * inner is +2 g sin * F_+
            fa = cumulative_simpson_complex(2.0 * gv * np.sin(grid) * fp, grid).real
            end = np.array([fa[-1], fp[-1], fm[-1]])
            if prev is not None and np.all(np.abs(end - prev)
                                           <= np.maximum(cfg.abs_tol, cfg.rel_tol * np.abs(end))):
                break
            prev = end
            npts = 2 * npts - 1
        self._fa = CubicSpline(grid, fa)
        self._fp = CubicSpline(grid, fp)
        self._fm = CubicSpline(grid, fm)

    def f_arrays(self, tau):
        """Arrays (f_a, f_plus, f_minus) at scalar or vector tau."""
        tau = np.asarray(tau, dtype=float)
        if np.any(tau < -1e-15) or np.any(tau > self.tau_max + 1e-12):
            raise InputDomainError("tau outside the kernel window")
        if self._constant:
            g0 = self._g0
            return (0.5 * g0 * g0 * (np.sin(2 * tau) - 2 * tau),
                    -g0 * np.sin(tau),
                    g0 * (np.cos(tau) - 1.0))
        return self._fa(tau), self._fp(tau), self._fm(tau)

    def f_coeffs(self, tau: float) -> FCoeffs:
        fa, fp, fm = self.f_arrays(float(tau))
        return FCoeffs(tau=float(tau), f_a=float(fa), f_plus=float(fp), f_minus=float(fm))

    def A(self, tau):
        fa, fp, fm = self.f_arrays(tau)
        return fa + fp * fm

    def G(self, tau):
        _, fp, fm = self.f_arrays(tau)
        return fm - 1j * fp
