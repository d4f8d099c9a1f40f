"""Construction of ideal and loss-degraded optical cat states.

At a full mechanical period the optical and mechanical modes disentangle
and the cavity is left with Fock amplitudes carrying the Kerr-like phase
exp(2 pi i g0^2 n^2).  For g0 = 1/2 this is the two-component cat
(1+i)/2 |alpha> + (1-i)/2 |-alpha>; 1/sqrt(6) and 1/(2 sqrt(2)) give the
three- and four-component cats.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import InputDomainError
from .fock import coherent_state
from .reference import ReferenceConfig, solve_blocks

TWO_PI = 2.0 * np.pi

_COMPONENT_COUPLINGS = {2: 0.5, 3: 1.0 / np.sqrt(6.0), 4: 1.0 / (2.0 * np.sqrt(2.0))}


@dataclass(frozen=True)
class CatSpec:
    """Requested component count (2, 3 or 4) and coherent amplitude."""

    components: int
    alpha: complex

    def __post_init__(self):
        if self.components not in _COMPONENT_COUPLINGS:
            raise InputDomainError("supported cat components: 2, 3, 4")

    @property
    def g0(self) -> float:
        return _COMPONENT_COUPLINGS[self.components]


def components_to_coupling(k: int) -> float:
    """Coupling strength that yields a k-component cat after one period."""
    if k not in _COMPONENT_COUPLINGS:
        raise InputDomainError(f"unsupported component count {k}; expected 2, 3 or 4")
    return _COMPONENT_COUPLINGS[k]


def ideal_cat_state(alpha: complex, g0: float, n: int) -> np.ndarray:
    """Lossless cavity state after one mechanical period, on n Fock levels.

    Amplitudes are the coherent ones rotated by exp(2 pi i g0^2 k^2); the
    global phase is fixed by making the vacuum amplitude real positive.
    """
    vec = coherent_state(alpha, n, leak_tol=1e-12)
    k = np.arange(n)
    vec = vec * np.exp(2j * np.pi * g0 * g0 * k * k)
    if abs(vec[0]) > 0:
        vec = vec * (abs(vec[0]) / vec[0])
    return vec / np.linalg.norm(vec)


def noisy_cat_density(alpha: complex, g0: float, kappa: float,
                      n_cav: int | None = None,
                      cfg: ReferenceConfig = ReferenceConfig()) -> np.ndarray:
    """Reduced cavity state after one lossy mechanical period.

    Evolves coherent(alpha) x mechanical vacuum to tau = 2*pi under the
    photon-block reference integrator and traces out the mechanics.
    Returns the (n_cav x n_cav) cavity density matrix.
    """
    sol = solve_blocks(alpha, g0, kappa, [TWO_PI], n_cav=n_cav, cfg=cfg)
    rc = sol.reduced_cavity(TWO_PI)
    return 0.5 * (rc + rc.conj().T)


def cat_to_csv(vec: np.ndarray, path):
    """Write Fock amplitudes as rows of n, re, im."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "re", "im"])
        for i, z in enumerate(vec):
            w.writerow([i, f"{z.real:.17g}", f"{z.imag:.17g}"])
