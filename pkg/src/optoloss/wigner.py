"""Wigner functions of single-mode cavity states on a phase-space grid.

Uses the displaced-parity form W(X, P) = (1/pi) Tr[rho D(gamma) Pi
D(gamma)^dag] with gamma = (X + iP)/sqrt(2), evaluated through the
closed-form Fock matrix elements of D(2 gamma) Pi (associated Laguerre
polynomials).  Exact at the given truncation; no FFT-grid aliasing.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.special import eval_genlaguerre, gammaln

from .errors import GridCoverageError, InputDomainError


@dataclass(frozen=True)
class GridSpec:
    """Uniform rectangular grid in the (X, P) quadrature plane."""

    x_min: float = -5.0
    x_max: float = 5.0
    n_x: int = 201
    p_min: float = -5.0
    p_max: float = 5.0
    n_p: int = 201

    def __post_init__(self):
        if self.x_max <= self.x_min or self.p_max <= self.p_min:
            raise InputDomainError("grid bounds must be increasing")
        if self.n_x < 2 or self.n_p < 2:
            raise InputDomainError("grid needs at least 2 points per axis")

    @property
    def x_axis(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_x)

    @property
    def p_axis(self) -> np.ndarray:
        return np.linspace(self.p_min, self.p_max, self.n_p)


@dataclass
class WignerGrid:
    """Sampled W(X, P) with its axes; values indexed [x, p]."""

    x_axis: np.ndarray
    p_axis: np.ndarray
    values: np.ndarray

    @property
    def cell_area(self) -> float:
        return float((self.x_axis[1] - self.x_axis[0]) * (self.p_axis[1] - self.p_axis[0]))

    def normalization(self) -> float:
        """Riemann-sum integral of W over the grid."""
        return float(self.values.sum() * self.cell_area)

    def to_csv(self, path):
        """Long-format CSV with header X,P,W."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["X", "P", "W"])
            for i, x in enumerate(self.x_axis):
                for j, p in enumerate(self.p_axis):
                    w.writerow([f"{x:.17g}", f"{p:.17g}", f"{self.values[i, j]:.17g}"])

    def to_matrix_txt(self, path):
        """Dense matrix dump with axis header lines."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("# X: " + " ".join(f"{x:.17g}" for x in self.x_axis) + "\n")
            fh.write("# P: " + " ".join(f"{p:.17g}" for p in self.p_axis) + "\n")
            for row in self.values:
                fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def wigner(rho_c: np.ndarray, grid: GridSpec = GridSpec(),
           check_coverage: bool = True) -> WignerGrid:
    """Wigner function of a cavity density matrix (or state vector).

    Raises :class:`GridCoverageError` when the Riemann-sum normalization
    deviates from 1 by more than 5e-3, which signals a state leaking off
    the grid.
    """
    rho_c = np.asarray(rho_c, dtype=complex)
    if rho_c.ndim == 1:
        rho_c = np.outer(rho_c, rho_c.conj())
    n = rho_c.shape[0]
    if rho_c.shape != (n, n):
        raise InputDomainError("rho_c must be square")
    herm_defect = np.abs(rho_c - rho_c.conj().T).max()
    if herm_defect > 1e-10:
        raise InputDomainError(f"rho_c Hermiticity defect {herm_defect:.3e}")

    x = grid.x_axis
    p = grid.p_axis
    gamma2 = np.sqrt(2.0) * (x[:, None] + 1j * p[None, :])  # 2 gamma
    absq = np.abs(gamma2) ** 2
    env = np.exp(-0.5 * absq)

    # W = (1/pi) sum_{jk} (-1)^k <j|D(2 gamma)|k> rho_{kj}; diagonals d = j - k.
    vals = np.zeros(absq.shape, dtype=complex)
    for d in range(n):
        pref_phase = gamma2 ** d if d else np.ones_like(gamma2)
        for k in range(n - d):
            j = k + d
            if d == 0 and k == 0:
                lag = np.ones_like(absq)
            else:
                lag = eval_genlaguerre(k, d, absq)
            elem = (np.exp(0.5 * (gammaln(k + 1) - gammaln(j + 1)))
                    * pref_phase * env * lag)
            sign = -1.0 if k % 2 else 1.0
            term = sign * elem * rho_c[k, j]
            vals += term if d == 0 else term + np.conj(term)
    vals /= np.pi

    resid = float(np.abs(vals.imag).max())
    if resid > 1e-10:
        raise InputDomainError(f"Wigner imaginary residue {resid:.3e}")
    out = WignerGrid(x_axis=x, p_axis=p, values=vals.real)
    if check_coverage:
        norm = out.normalization()
        if abs(norm - 1.0) > 5e-3:
            raise GridCoverageError(
                f"grid normalization {norm:.6f} deviates from 1 by more than 5e-3; "
                "enlarge the grid or refine its spacing")
    return out


def negativity_volume(w: WignerGrid) -> float:
    """Riemann sum of the negative part of W (a nonclassicality measure)."""
    neg = np.where(w.values < 0.0, -w.values, 0.0)
    return float(neg.sum() * w.cell_area)
