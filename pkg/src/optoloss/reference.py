"""High-precision Lindblad reference for constant coupling.

Direct fixed-step integration of the truncated master equation needs very
large mechanical cutoffs once the per-photon displacement is appreciable:
the n-photon branch swings through ~(2 g n)^2 phonons, so pinning the
reduced cavity state to 1e-6 at alpha ~ 1 is out of reach for dense
density-matrix stepping.  This module integrates the same equation exactly
in a photon-block interaction picture instead.

Because the photon number commutes with the Hamiltonian, the density
matrix splits into cavity blocks rho^(n,n') (mechanical operators).  With
U_n(tau) = exp(-i H_n tau) the branch propagators of the per-photon
Hamiltonians H_n = N_b - g n (b + b^dag), the transformed blocks

    X(n,n'; tau) = e^{kappa (n+n') tau / 2} U_n^dag rho^(n,n') U_n'

obey a feed-forward chain driven only by photon jumps,

    dX(n,n')/dtau = kappa e^{-kappa tau} sqrt((n+1)(n'+1))
                    C_n(tau) X(n+1,n'+1) C_n'(tau)^dag,

with C_n(tau) = U_n(tau)^dag U_{n+1}(tau).  The branch propagators come
from eigendecompositions of the (large, per-branch sized) tridiagonal
H_n, so there is no time-stepping error; the chain is a nested cumulative
integral of slowly varying integrands evaluated with composite Simpson on
a fixed node grid.  Everything is plain linear algebra on the truncated
model; no closed-form solution enters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammainc

from .errors import InputDomainError
from .fock import coherent_state, thermal_state
from .quadrature import cumulative_simpson_complex

_TIME_CHUNK = 128


@dataclass(frozen=True)
class ReferenceConfig:
    """Resolution of the block integrator.

    ``block_levels`` is the mechanical size of the interaction-picture
    blocks; it is set by the photon-jump count times the per-jump
    displacement, not by the full branch excursion.  ``branch_margin``
    adds headroom on top of the estimated per-branch excursion for the
    eigenbasis spaces.  ``pairs_per_period`` fixes the Simpson grid
    density per 2*pi of evolution.
    """

    block_levels: int = 40
    branch_margin: int = 48
    pairs_per_period: int = 1536
    cavity_tail: float = 1e-10

    def scaled(self, factor: float) -> "ReferenceConfig":
        """A uniformly refined copy, for convergence checks."""
        return ReferenceConfig(
            block_levels=int(np.ceil(self.block_levels * factor)),
            branch_margin=int(np.ceil(self.branch_margin * factor)),
            pairs_per_period=int(np.ceil(self.pairs_per_period * factor)),
            cavity_tail=self.cavity_tail)


def cavity_levels_for(alpha: complex, tail: float = 1e-10) -> int:
    """Smallest cavity cutoff whose Poisson tail is below ``tail``."""
    mean = abs(alpha) ** 2
    n = max(4, int(np.ceil(mean)))
    while gammainc(n, mean) >= tail:
        n += 1
    return n + 1


class BranchPropagators:
    """Eigendecomposed per-branch propagators U_n(tau) = exp(-i H_n tau).

    Branch n needs a mechanical space containing its displaced excursion
    of ~(2 g n)^2 phonons.  All products against the small
    interaction-picture blocks are formed through the eigenbases, so any
    evolution time is available without stepping error.
    """

    def __init__(self, g0: float, n_cav: int, ms: int, margin: int):
        self.g0 = g0
        self.n_cav = n_cav
        self.ms = ms
        self.margin = margin
        self._eig_cache = {}
        self._w_cache = {}

    def branch_size(self, n: int) -> int:
        d = 2.0 * abs(self.g0) * n
        return int(np.ceil(d * d + 10.0 * d)) + self.ms + self.margin

    def _eig(self, n: int, m: int):
        key = (n, m)
        if key not in self._eig_cache:
            main = np.arange(m, dtype=float)
            off = -self.g0 * n * np.sqrt(np.arange(1, m))
            self._eig_cache[key] = eigh_tridiagonal(main, off)
        return self._eig_cache[key]

    def _pair(self, n_bra: int, n_ket: int):
        """Eigendata of both branches on their common space, plus overlap."""
        m = max(self.branch_size(n_bra), self.branch_size(n_ket))
        lam_a, v_a = self._eig(n_bra, m)
        lam_b, v_b = self._eig(n_ket, m)
        key = (n_bra, n_ket)
        w = self._w_cache.get(key)
        if w is None:
            w = (v_a.T @ v_b).astype(complex)
            if abs(n_bra - n_ket) <= 1:
                self._w_cache[key] = w
        return lam_a, v_a, lam_b, v_b, w

    def corner_series(self, n: int, grid: np.ndarray) -> np.ndarray:
        """C_n(tau)[:ms, :ms] at every grid node, shape (nt, ms, ms)."""
        return self.cross_corner_series(n, n + 1, grid)

    def cross_corner_series(self, n_bra: int, n_ket: int, grid: np.ndarray) -> np.ndarray:
        """[U_bra^dag U_ket](tau)[:ms, :ms] at every grid node."""
        ms = self.ms
        lam_a, v_a, lam_b, v_b, w = self._pair(n_bra, n_ket)
        rows = v_a[:ms, :].astype(complex)
        cols = np.ascontiguousarray(v_b[:ms, :].T).astype(complex)
        out = np.empty((grid.size, ms, ms), dtype=complex)
        for lo in range(0, grid.size, _TIME_CHUNK):
            sl = slice(lo, min(lo + _TIME_CHUNK, grid.size))
            ts = grid[sl]
            ph_b = np.exp(-1j * np.outer(ts, lam_b))
            y = np.matmul(w[None, :, :], ph_b[:, :, None] * cols[None, :, :])
            ph_a = np.exp(1j * np.outer(ts, lam_a))
            out[sl] = np.matmul(rows[None, :, :], ph_a[:, :, None] * y)
        return out

    def cross_corner(self, n_bra: int, n_ket: int, tau: float) -> np.ndarray:
        return self.cross_corner_series(n_bra, n_ket, np.array([tau]))[0]


class ReferenceSolution:
    """Interaction-picture blocks at the sample times, plus reductions."""

    def __init__(self, g0, kappa, taus, n_cav, ms, blocks, props):
        self.g0 = g0
        self.kappa = kappa
        self.taus = [float(t) for t in taus]
        self.n_cav = n_cav
        self.ms = ms
        self._blocks = blocks          # dict (n, n') with n >= n' -> (ntau, ms, ms)
        self._props = props
        self._corner_cache = {}

    def _corner(self, n_bra, n_ket, tau):
        key = (n_bra, n_ket, tau)
        if key not in self._corner_cache:
            self._corner_cache[key] = self._props.cross_corner(n_bra, n_ket, tau)
        return self._corner_cache[key]

    def _block(self, n, npr, itau):
        if n >= npr:
            return self._blocks[(n, npr)][itau]
        return self._blocks[(npr, n)][itau].conj().T

    def block_trace(self, n: int, npr: int, tau: float) -> complex:
        """tr_mech rho^(n,n') at a sample time."""
        itau = self.taus.index(float(tau))
        x = self._block(n, npr, itau)
        decay = np.exp(-0.5 * self.kappa * (n + npr) * tau)
        if n == npr:
            return decay * complex(np.trace(x))
        # tr[U_n X U_n'^dag] = tr[X (U_n'^dag U_n)]
        m = self._corner(npr, n, tau)
        return decay * complex(np.einsum('ij,ji->', x, m))

    def reduced_cavity(self, tau: float) -> np.ndarray:
        """Reduced cavity density matrix at a sample time."""
        rc = np.empty((self.n_cav, self.n_cav), dtype=complex)
        for n in range(self.n_cav):
            for npr in range(n, self.n_cav):
                val = self.block_trace(npr, n, tau)
                rc[npr, n] = val
                rc[n, npr] = np.conj(val)
        return rc

    def expect_a(self, tau: float) -> complex:
        """Tr[a rho] at a sample time (one-off-diagonal blocks only)."""
        total = 0.0 + 0.0j
        for n in range(self.n_cav - 1):
            total += np.sqrt(n + 1.0) * self.block_trace(n + 1, n, tau)
        return total

    def photon_number(self, tau: float) -> float:
        return float(np.real(sum(n * self.block_trace(n, n, tau)
                                 for n in range(1, self.n_cav))))


def solve_blocks(alpha: complex, g0: float, kappa: float, taus,
                 mech_nbar: float = 0.0, mech_beta: complex = 0.0,
                 n_cav: int | None = None,
                 cfg: ReferenceConfig = ReferenceConfig()) -> ReferenceSolution:
    """Integrate the photon-block chain and sample it at ``taus``.

    The initial state is coherent(alpha) in the cavity and either a
    coherent or thermal mechanical state.  Sample times must be sorted,
    non-negative and representable on the Simpson node grid.
    """
    taus = [float(t) for t in taus]
    if not taus or any(t < 0 for t in taus) or any(b <= a for a, b in zip(taus, taus[1:])):
        raise InputDomainError("sample times must be non-negative and increasing")
    if kappa < 0:
        raise InputDomainError("kappa must be non-negative")
    tau_max = taus[-1]
    if n_cav is None:
        n_cav = cavity_levels_for(alpha, cfg.cavity_tail)

    ms = cfg.block_levels
    if tau_max == 0.0:
        grid = np.array([0.0])
        itaus = [0]
    else:
        npairs = max(64, int(np.ceil(cfg.pairs_per_period * tau_max / (2 * np.pi))))
        grid = np.linspace(0.0, tau_max, 2 * npairs + 1)
        itaus = []
        for t in taus:
            i = int(round(t / grid[1]))
            if abs(grid[i] - t) > 1e-9 * max(1.0, tau_max):
                raise InputDomainError("sample times must lie on the node grid; "
                                       "adjust pairs_per_period")
            itaus.append(i)

    props = BranchPropagators(g0, n_cav, ms, cfg.branch_margin)

    # initial mechanical block, shared by every (n, n') pair
    if mech_nbar > 0.0:
        if mech_beta != 0.0:
            raise InputDomainError("mechanical state is either coherent or thermal")
        chi0 = thermal_state(mech_nbar, ms, leak_tol=1e-9).astype(complex)
    else:
        v = coherent_state(mech_beta, ms, leak_tol=1e-9)
        chi0 = np.outer(v, v.conj())
    cvec = coherent_state(alpha, n_cav, leak_tol=max(cfg.cavity_tail, 1e-13))

    if kappa == 0.0 or tau_max == 0.0:
        # no jump feed: blocks stay at their initial values
        blocks = {(n, j): np.broadcast_to(cvec[n] * np.conj(cvec[j]) * chi0,
                                          (len(itaus), ms, ms)).copy()
                  for n in range(n_cav) for j in range(n + 1)}
        return ReferenceSolution(g0, kappa, taus, n_cav, ms, blocks, props)

    decay = (kappa * np.exp(-kappa * grid))[:, None, None]
    corners = [props.corner_series(n, grid) for n in range(n_cav - 1)]
    corners_conj_t = [np.ascontiguousarray(c.conj().transpose(0, 2, 1)) for c in corners]

    # march each diagonal top-down; d >= 0 suffices by Hermitian symmetry
    blocks_out = {}
    for d in range(n_cav - 1, -1, -1):
        series_above = None     # full time series of X(j+1+d, j+1)
        for j in range(n_cav - 1 - d, -1, -1):
            n = j + d
            x0 = cvec[n] * np.conj(cvec[j]) * chi0
            if series_above is None:
                series = np.broadcast_to(x0, (grid.size, ms, ms)).copy()
            else:
                integrand = np.matmul(np.matmul(corners[n], series_above),
                                      corners_conj_t[j])
                integrand *= np.sqrt((n + 1.0) * (j + 1.0)) * decay
                series = x0 + cumulative_simpson_complex(integrand, grid, axis=0)
            blocks_out[(n, j)] = series[itaus].copy()
            series_above = series
        del series_above
    return ReferenceSolution(g0, kappa, taus, n_cav, ms, blocks_out, props)
