"""Closed-form loss-dressed observables of the intracavity field.

All results hold in the frame rotating with the free optical evolution;
lab-frame amplitudes carry an extra exp(-i omega_c t) phase that is not
applied here.  Times and rates are dimensionless (rescaled by the
mechanical frequency).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.special import gammainc, gammaln

from .errors import InputDomainError, TruncationError
from .kernels import (ConstantCoupling, CouplingKernels, CouplingProfile,
                      f_coeffs_constant)
from .quadrature import QuadConfig, adaptive_quad, gauss_legendre_nodes

TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------------------
# parameter bundles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SystemParams:
    """Coupling profile, rescaled optical loss rate and (unused) frequency ratio."""

    g_profile: CouplingProfile
    kappa: float
    omega_ratio: float = 0.0

    def __post_init__(self):
        if self.kappa < 0:
            raise InputDomainError("kappa must be non-negative")
        if self.omega_ratio < 0:
            raise InputDomainError("omega_ratio must be non-negative")


@dataclass(frozen=True)
class MechCoherent:
    beta: complex = 0.0


@dataclass(frozen=True)
class MechThermal:
    nbar: float = 0.0

    def __post_init__(self):
        if self.nbar < 0:
            raise InputDomainError("thermal occupation must be non-negative")


@dataclass(frozen=True)
class InitialState:
    """Optical coherent amplitude and the mechanical starting state."""

    alpha: complex
    mech: Union[MechCoherent, MechThermal] = MechCoherent()


@dataclass
class ObservableTrace:
    """Named time series of a complex observable with parameter provenance."""

    name: str
    taus: np.ndarray
    values: np.ndarray
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.taus = np.asarray(self.taus, dtype=float)
        self.values = np.asarray(self.values)
        if self.taus.ndim != 1 or self.taus.shape != self.values.shape:
            raise InputDomainError("taus and values must be matching 1-d arrays")
        if np.any(np.diff(self.taus) <= 0):
            raise InputDomainError("taus must be strictly increasing")

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["tau", "re", "im"])
            for t, v in zip(self.taus, self.values):
                w.writerow([f"{t:.17g}", f"{np.real(v):.17g}", f"{np.imag(v):.17g}"])


@dataclass(frozen=True)
class FidelityTruncation:
    """Fock cutoff of the fidelity double sum plus quadrature tolerances."""

    n_max: int
    quad: QuadConfig = QuadConfig()

    def __post_init__(self):
        if self.n_max < 1:
            raise InputDomainError("n_max must be a positive integer")

    def check_tail(self, alpha: complex, tail_bound: float = 1e-12):
        """Assert that the Poisson weight above n_max is negligible."""
        tail = float(gammainc(self.n_max + 1, abs(alpha) ** 2))
        if tail >= tail_bound:
            raise TruncationError(
                f"Poisson tail {tail:.3e} above n_max={self.n_max} exceeds "
                f"{tail_bound:.1e}", required=for_alpha(alpha, tail_bound).n_max)
        return self


def for_alpha(alpha: complex, tail_bound: float = 1e-12,
              quad: QuadConfig = QuadConfig()) -> FidelityTruncation:
    """Cutoff chosen from the Poisson tail bound for this amplitude."""
    mean = abs(alpha) ** 2
    n = max(2, int(np.ceil(mean)))
    while gammainc(n + 1, mean) >= tail_bound:
        n += 1
    return FidelityTruncation(n_max=n, quad=quad)


# ---------------------------------------------------------------------------
# photon number and intracavity quadratures
# ---------------------------------------------------------------------------

def photon_number(alpha: complex, kappa: float, tau: float) -> float:
    """Mean photon number |alpha|^2 e^{-kappa tau}.

    The photon number commutes with the light-matter interaction, so it
    decays exactly as for an empty lossy cavity.
    """
    if kappa < 0 or tau < 0:
        raise InputDomainError("kappa and tau must be non-negative")
    return abs(alpha) ** 2 * float(np.exp(-kappa * tau))


def _loss_integral(alpha, kappa, kernels: CouplingKernels, tau, quad: QuadConfig):
    """kappa |alpha|^2 int_0^tau e^{-kappa t} e^{-2iA(t)} e^{iB(t, tau)} dt."""
    if kappa == 0.0 or tau == 0.0:
        return 0.0 + 0.0j
    g_final = kernels.G(tau)

    def integrand(t):
        a_t = kernels.A(t)
        b_t = 2.0 * np.imag(g_final * np.conj(kernels.G(t)))
        return np.exp(-kappa * t) * np.exp(-2j * a_t) * np.exp(1j * b_t)

    val, _ = adaptive_quad(integrand, 0.0, tau, quad)
    return kappa * abs(alpha) ** 2 * val


def _expect_a_common(alpha, kappa, kernels, tau, mech_factor, quad):
    a_tau = kernels.A(tau)
    g_tau = kernels.G(tau)
    dephase = np.exp(abs(alpha) ** 2 * (np.exp(-2j * a_tau) * np.exp(-kappa * tau) - 1.0))
    core = (alpha * dephase * np.exp(-1j * a_tau) * np.exp(-0.5 * kappa * tau)
            * mech_factor(g_tau))
    return core * np.exp(_loss_integral(alpha, kappa, kernels, tau, quad))


def expect_a(init: InitialState, sys: SystemParams, tau: float,
             quad: QuadConfig = QuadConfig(),
             kernels: CouplingKernels | None = None) -> complex:
    """Heterodyne-frame <a(tau)> for a coherent mechanical starting state."""
    if not isinstance(init.mech, MechCoherent):
        raise InputDomainError("expect_a needs a coherent mechanical state; "
                               "use expect_a_thermal for thermal mechanics")
    if tau < 0:
        raise InputDomainError("tau must be non-negative")
    beta = init.mech.beta
    if kernels is None:
        kernels = CouplingKernels(sys.g_profile, tau, quad)

    def mech_factor(g_tau):
        return np.exp(-0.5 * abs(g_tau) ** 2) * np.exp(g_tau * np.conj(beta)
                                                       - np.conj(g_tau) * beta)

    return complex(_expect_a_common(init.alpha, sys.kappa, kernels, tau,
                                    mech_factor, quad))


def expect_a_thermal(init: InitialState, sys: SystemParams, tau: float,
                     quad: QuadConfig = QuadConfig(),
                     kernels: CouplingKernels | None = None) -> complex:
    """<a(tau)> with the mechanics starting in a thermal state."""
    if not isinstance(init.mech, MechThermal):
        raise InputDomainError("expect_a_thermal needs a thermal mechanical state")
    if tau < 0:
        raise InputDomainError("tau must be non-negative")
    nbar = init.mech.nbar
    if kernels is None:
        kernels = CouplingKernels(sys.g_profile, tau, quad)

    def mech_factor(g_tau):
        return np.exp(-0.5 * abs(g_tau) ** 2 * (1.0 + 2.0 * nbar))

    return complex(_expect_a_common(init.alpha, sys.kappa, kernels, tau,
                                    mech_factor, quad))


def quadrature_trace(init: InitialState, sys: SystemParams, taus,
                     quad: QuadConfig = QuadConfig()):
    """Optical quadrature traces X = sqrt(2) Re<a>, P = sqrt(2) Im<a>."""
    taus = np.asarray(taus, dtype=float)
    if taus.ndim != 1 or taus.size == 0 or np.any(np.diff(taus) <= 0):
        raise InputDomainError("taus must be a non-empty increasing 1-d array")
    kernels = CouplingKernels(sys.g_profile, float(taus[-1]), quad)
    eval_one = expect_a_thermal if isinstance(init.mech, MechThermal) else expect_a
    vals = np.array([eval_one(init, sys, t, quad, kernels=kernels) for t in taus])
    params = {"alpha": init.alpha, "kappa": sys.kappa, "mech": repr(init.mech)}
    x = ObservableTrace("X", taus, np.sqrt(2.0) * vals.real, params)
    p = ObservableTrace("P", taus, np.sqrt(2.0) * vals.imag, params)
    return x, p


def quadrature_decay_bound(alpha: complex, sys: SystemParams, tau: float,
                           quad: QuadConfig = QuadConfig()) -> float:
    """Upper bound on |<a(tau)>|^2; decays to zero for any kappa > 0."""
    if tau < 0:
        raise InputDomainError("tau must be non-negative")
    kernels = CouplingKernels(sys.g_profile, max(tau, 1e-9), quad)
    a_tau = kernels.A(tau)
    g_tau = kernels.G(tau)
    kt = sys.kappa * tau
    mu = abs(alpha) ** 2
    return float(mu * np.exp(2.0 * mu * np.cos(2.0 * a_tau) * np.exp(-kt))
                 * np.exp(-abs(g_tau) ** 2) * np.exp(-kt)
                 * np.exp(-2.0 * mu * np.exp(-kt)))


# ---------------------------------------------------------------------------
# cat-state fidelity
# ---------------------------------------------------------------------------

def _kerr_phase_const(g0):
    """Vectorized A(tau) for constant coupling."""
    def a_of(t):
        fa = 0.5 * g0 * g0 * (np.sin(2.0 * t) - 2.0 * t)
        return fa + (-g0 * np.sin(t)) * (g0 * (np.cos(t) - 1.0))
    return a_of


def cat_fidelity(alpha: complex, g0: float, kappa: float,
                 ft: FidelityTruncation | None = None) -> float:
    """Overlap of the lossy tau = 2*pi cavity state with the ideal cat.

    The double sum couples Fock pairs only through k = n - n', so the
    oscillatory loss integral is evaluated once per k and cached.
    Constant coupling only: the closed form is specific to a full
    mechanical period.
    """
    if kappa < 0:
        raise InputDomainError("kappa must be non-negative")
    if ft is None:
        ft = for_alpha(alpha)
    ft.check_tail(alpha)
    mu = abs(alpha) ** 2
    n_max = ft.n_max
    a_of = _kerr_phase_const(g0)

    ints = np.empty(n_max + 1, dtype=complex)
    for k in range(n_max + 1):
        if kappa == 0.0:
            ints[k] = 0.0
            continue
        def f(t, k=k):
            return np.exp(-kappa * t) * np.exp(-2j * k * a_of(t))
        val, _ = adaptive_quad(f, 0.0, TWO_PI, ft.quad)
        ints[k] = kappa * mu * val
    kgrid = np.concatenate([np.conj(ints[:0:-1]), ints])  # k = -n_max .. n_max

    n = np.arange(n_max + 1)
    logw = n * np.log(mu) - gammaln(n + 1) - mu if mu > 0 else np.where(n == 0, 0.0, -np.inf)
    w = np.exp(logw) * np.exp(-kappa * np.pi * n)
    diff = n[:, None] - n[None, :]
    total = complex(w @ np.exp(kgrid[diff + n_max]) @ w)
    if abs(total.imag) > 1e-10:
        raise InputDomainError(f"fidelity imaginary residue {total.imag:.3e}")
    return float(total.real)


def cat_fidelity_series(alpha: complex, g0: float, kappa: float,
                        order_q: int, quad: QuadConfig = QuadConfig()) -> float:
    """Perturbative fidelity: jump-count expansion truncated at order_q.

    Each order contributes a q-dimensional integral over [0, 2*pi]^q,
    evaluated by tensor-product Gauss-Legendre quadrature; orders above 3
    are rejected because the node count grows geometrically.
    """
    if not 1 <= order_q <= 3:
        raise InputDomainError("order_q must be 1, 2 or 3")
    if kappa < 0:
        raise InputDomainError("kappa must be non-negative")
    mu = abs(alpha) ** 2
    damp = np.exp(-np.pi * kappa)
    a_of = _kerr_phase_const(g0)

    npts = {1: 192, 2: 96, 3: 48}
    total = 1.0
    for q in range(1, order_q + 1):
        x, w = gauss_legendre_nodes(npts[q], 0.0, TWO_PI)
        a_vals = a_of(x)
        shape = [1] * q
        a_sum = np.zeros(shape)
        e_sum = np.zeros(shape)
        wprod = np.ones(shape)
        for axis in range(q):
            sh = [1] * q
            sh[axis] = x.size
            a_sum = a_sum + a_vals.reshape(sh)
            e_sum = e_sum + x.reshape(sh)
            wprod = wprod * w.reshape(sh)
        integrand = np.exp(-kappa * e_sum) * np.exp(-4.0 * mu * damp * np.sin(a_sum) ** 2)
        j_q = float(np.sum(wprod * integrand))
        total += (kappa * mu) ** q / math.factorial(q) * j_q
    return float(np.exp(-2.0 * mu * (1.0 - damp)) * total)


def fidelity_bounds(alpha: complex, kappa: float):
    """Coupling-independent lower and upper bounds on the cat fidelity."""
    if kappa < 0:
        raise InputDomainError("kappa must be non-negative")
    mu = abs(alpha) ** 2
    damp = np.exp(-np.pi * kappa)
    lower = (2.0 * np.exp(-2.0 * mu) * np.sinh(2.0 * mu * damp)
             + np.exp(-mu * (1.0 + damp) ** 2))
    upper = np.exp(-mu * (1.0 - damp) ** 2)
    return float(lower), float(upper)
