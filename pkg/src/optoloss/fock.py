"""Brute-force ground truth in a truncated two-mode Fock space.

The cavity (dimension ``n_cav``) and the mechanical mode (``n_mech``) are
stored cavity-major: basis index = n_cav_index * n_mech + mech_index.  The
Hamiltonian is taken in the frame rotating with the free optical evolution,

    H = N_b - g(tau) N_a (b^dag + b)    (optionally + omega_ratio * N_a),

and photon loss enters through the single Lindblad channel sqrt(kappa) a.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.linalg import expm
from scipy.sparse.linalg import expm_multiply
from scipy.special import gammaln

from .errors import (InputDomainError, LeakageError, MemoryBudgetError,
                     TruncationError)
from .kernels import (ConstantCoupling, CouplingProfile, f_coeffs_constant,
                      profile_values)

# dense superoperators are only sensible for a handful of levels per mode
SUPEROP_MAX_BYTES = 1 << 29


@dataclass(frozen=True)
class FockDims:
    """Truncation of the cavity and mechanical Fock ladders."""

    n_cav: int
    n_mech: int

    def __post_init__(self):
        if self.n_cav < 2 or self.n_mech < 2:
            raise InputDomainError("both modes need at least 2 Fock levels")

    @property
    def size(self) -> int:
        return self.n_cav * self.n_mech


@dataclass
class DensityMatrix:
    """Complex square matrix over the truncated two-mode basis."""

    dims: FockDims
    data: np.ndarray

    def __post_init__(self):
        n = self.dims.size
        self.data = np.ascontiguousarray(self.data, dtype=complex)
        if self.data.shape != (n, n):
            raise InputDomainError(f"density matrix shape {self.data.shape} != ({n}, {n})")

    def trace(self) -> complex:
        return complex(np.trace(self.data))

    def hermiticity_defect(self) -> float:
        return float(np.abs(self.data - self.data.conj().T).max())

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.data + self.data.conj().T)).min())

    def validate(self, herm_tol=1e-12, trace_tol=1e-10, eig_tol=1e-8):
        """On-demand physicality check (Hermitian, unit trace, positive)."""
        if self.hermiticity_defect() > herm_tol:
            raise InputDomainError("density matrix is not Hermitian within tolerance")
        if abs(self.trace() - 1.0) > trace_tol:
            raise InputDomainError("density matrix trace deviates from 1")
        if self.min_eigenvalue() < -eig_tol:
            raise InputDomainError("density matrix has a significantly negative eigenvalue")
        return self


@dataclass
class VectorizedState:
    """Row-stacked vector form of a density matrix."""

    dims: FockDims
    vec: np.ndarray


def vectorize(rho: DensityMatrix) -> VectorizedState:
    """Stack rows of the matrix into one vector (row-major reshape)."""
    return VectorizedState(dims=rho.dims, vec=rho.data.reshape(-1).copy())


def devectorize(vs: VectorizedState) -> DensityMatrix:
    n = vs.dims.size
    return DensityMatrix(dims=vs.dims, data=vs.vec.reshape(n, n).copy())


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------

def destroy(n: int) -> np.ndarray:
    """Single-mode annihilation operator on n levels."""
    return np.diag(np.sqrt(np.arange(1, n)), 1).astype(complex)


def cavity_destroy(dims: FockDims) -> np.ndarray:
    return np.kron(destroy(dims.n_cav), np.eye(dims.n_mech))


def number_cav(dims: FockDims) -> np.ndarray:
    return np.kron(np.diag(np.arange(dims.n_cav, dtype=float)), np.eye(dims.n_mech)).astype(complex)


def number_mech(dims: FockDims) -> np.ndarray:
    return np.kron(np.eye(dims.n_cav), np.diag(np.arange(dims.n_mech, dtype=float))).astype(complex)


def mech_b_plus(dims: FockDims) -> np.ndarray:
    """Position-like quadrature b^dag + b of the mechanics."""
    b = destroy(dims.n_mech)
    return np.kron(np.eye(dims.n_cav), b + b.conj().T)


def mech_b_minus(dims: FockDims) -> np.ndarray:
    """Momentum-like quadrature i (b^dag - b) of the mechanics."""
    b = destroy(dims.n_mech)
    return np.kron(np.eye(dims.n_cav), 1j * (b.conj().T - b))


def build_hamiltonian(g0: float, dims: FockDims, omega_ratio: float = 0.0) -> np.ndarray:
    """Rotating-frame Hamiltonian N_b - g0 N_a (b^dag + b) [+ omega_ratio N_a].

    The free optical term is dropped by default; an optional omega_ratio
    restores it for frame-invariance checks.
    """
    if not np.isfinite(g0):
        raise InputDomainError("g0 must be finite")
    h = number_mech(dims) - g0 * (number_cav(dims) @ mech_b_plus(dims))
    if omega_ratio != 0.0:
        h = h + omega_ratio * number_cav(dims)
    return h


# ---------------------------------------------------------------------------
# states
# ---------------------------------------------------------------------------

def _poisson_tail_above(mean: float, level: int) -> float:
    """P(X > level) for X ~ Poisson(mean)."""
    from scipy.special import gammainc
    if mean == 0.0:
        return 0.0
    return float(gammainc(level + 1, mean))


def coherent_state(amp: complex, n: int, leak_tol: float = 1e-8) -> np.ndarray:
    """Truncated, renormalized coherent state on n levels.

    Requires the Poisson weight above level n-2 to be below ``leak_tol``;
    otherwise raises with an estimate of the cutoff that would suffice.
    """
    if n < 2:
        raise InputDomainError("need at least 2 levels")
    mean = abs(amp) ** 2
    if _poisson_tail_above(mean, n - 2) >= leak_tol:
        need = n
        while _poisson_tail_above(mean, need - 2) >= leak_tol:
            need += max(2, need // 4)
        raise TruncationError(
            f"coherent state |amp|={abs(amp):.3g} does not fit in {n} levels",
            required=need)
    k = np.arange(n)
    if amp == 0:
        vec = np.zeros(n, dtype=complex)
        vec[0] = 1.0
        return vec
    log_mag = -mean / 2 + k * np.log(abs(amp)) - 0.5 * gammaln(k + 1)
    vec = np.exp(log_mag) * np.exp(1j * k * np.angle(complex(amp)))
    return vec / np.linalg.norm(vec)


def thermal_state(nbar: float, n: int, leak_tol: float = 1e-8) -> np.ndarray:
    """Truncated, renormalized single-mode thermal density matrix."""
    if nbar < 0:
        raise InputDomainError("mean occupation must be non-negative")
    if n < 2:
        raise InputDomainError("need at least 2 levels")
    if nbar == 0.0:
        rho = np.zeros((n, n), dtype=complex)
        rho[0, 0] = 1.0
        return rho
    r = nbar / (1.0 + nbar)
    tail = r ** (n - 1)  # weight above level n-2
    if tail >= leak_tol:
        need = int(np.ceil(np.log(leak_tol) / np.log(r))) + 2
        raise TruncationError(
            f"thermal state nbar={nbar} does not fit in {n} levels", required=need)
    w = (1.0 - r) * r ** np.arange(n)
    return np.diag(w / w.sum()).astype(complex)


def product_state(cavity_vec: np.ndarray, mech, dims: FockDims) -> DensityMatrix:
    """Density matrix of cavity vector x mechanical vector-or-matrix."""
    if cavity_vec.shape != (dims.n_cav,):
        raise InputDomainError("cavity vector length does not match dims")
    rc = np.outer(cavity_vec, cavity_vec.conj())
    mech = np.asarray(mech, dtype=complex)
    rm = np.outer(mech, mech.conj()) if mech.ndim == 1 else mech
    if rm.shape != (dims.n_mech, dims.n_mech):
        raise InputDomainError("mechanical state does not match dims")
    return DensityMatrix(dims=dims, data=np.kron(rc, rm))


def default_dims(alpha: complex, g0: float, beta: complex = 0.0,
                 nbar: float = 0.0) -> FockDims:
    """Truncation heuristic for an initial coherent (or thermal) product state.

    Cavity: Poisson support of alpha plus slack.  Mechanics: initial
    amplitude plus the per-photon displacement scale, validated post hoc by
    the evolver's leakage check.
    """
    n_cav = int(np.ceil(abs(alpha) ** 2 + 8.0 * abs(alpha) + 10.0))
    n_mech = int(np.ceil(abs(beta) + np.sqrt(5.0) * abs(g0) * np.sqrt(n_cav) + 10.0))
    if nbar > 0:
        r = nbar / (1.0 + nbar)
        n_mech = max(n_mech, int(np.ceil(np.log(1e-9) / np.log(r))) + 2)
    return FockDims(n_cav=n_cav, n_mech=n_mech)


# ---------------------------------------------------------------------------
# master equation right-hand side and superoperator
# ---------------------------------------------------------------------------

def lindblad_rhs(rho: DensityMatrix, H: np.ndarray, kappa: float) -> DensityMatrix:
    """d rho / d tau for photon loss at rate kappa, applied matrix-free."""
    if kappa < 0:
        raise InputDomainError("kappa must be non-negative")
    dims = rho.dims
    r = rho.data
    d = -1j * (H @ r - r @ H)
    if kappa != 0.0:
        r4 = r.reshape(dims.n_cav, dims.n_mech, dims.n_cav, dims.n_mech)
        d4 = d.reshape(dims.n_cav, dims.n_mech, dims.n_cav, dims.n_mech)
        nvec = np.arange(dims.n_cav, dtype=float)
        # a rho a^dag shifts both cavity indices down by one
        w = np.sqrt(np.outer(nvec[1:], nvec[1:]))
        d4[:-1, :, :-1, :] += kappa * w[:, None, :, None] * r4[1:, :, 1:, :]
        d4 -= (0.5 * kappa) * (nvec[:, None, None, None] + nvec[None, None, :, None]) * r4
    return DensityMatrix(dims=dims, data=d)


def build_superoperator(H: np.ndarray, kappa: float, dims: FockDims) -> np.ndarray:
    """Dense generator acting on row-stacked states.

    Uses the real-Fock-basis convention (transpose equals dagger for H and
    a), which holds for the rotating-frame Hamiltonian built here.  Only
    intended for small truncations; guarded by a memory budget.
    """
    n = dims.size
    nbytes = (n ** 4) * 16
    if nbytes > SUPEROP_MAX_BYTES:
        raise MemoryBudgetError(
            f"superoperator of side {n * n} needs {nbytes / 2**20:.0f} MiB")
    if np.abs(H.imag).max() > 1e-12:
        raise InputDomainError("real-basis superoperator requires a real Hamiltonian")
    eye = np.eye(n)
    a = cavity_destroy(dims)
    na = number_cav(dims)
    sup = -1j * (np.kron(H, eye) - np.kron(eye, H))
    if kappa != 0.0:
        sup = sup + kappa * (np.kron(a, a)
                             - 0.5 * (np.kron(na, eye) + np.kron(eye, na)))
    return sup


# ---------------------------------------------------------------------------
# time evolution
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EvolveConfig:
    """Stepping parameters for the fixed-step integrator.

    ``dt=None`` selects the spectral-radius heuristic
    dt = 0.1 / (g n_cav + kappa n_cav + n_mech).  That step keeps conserved
    quantities (photon number) at machine accuracy; state-sensitive
    comparisons should pass an explicit smaller dt or use ``dt_safety`` < 1.
    """

    dt: float | None = None
    dt_safety: float = 1.0
    leak_tol: float = 1e-8
    trace_tol: float = 1e-8
    hermitize_every: int = 100

    def __post_init__(self):
        if self.dt is not None and self.dt <= 0:
            raise InputDomainError("dt must be positive")
        if self.dt_safety <= 0:
            raise InputDomainError("dt_safety must be positive")


def heuristic_dt(g_scale: float, kappa: float, dims: FockDims) -> float:
    return 0.1 / (abs(g_scale) * dims.n_cav + kappa * dims.n_cav + dims.n_mech)


class _Stepper:
    """Vectorized Lindblad right-hand side bound to fixed dims."""

    def __init__(self, dims: FockDims, kappa: float, omega_ratio: float = 0.0):
        self.dims = dims
        self.kappa = kappa
        nc, nm = dims.n_cav, dims.n_mech
        b = destroy(nm)
        # interaction part N_a (x) (b + b^dag), applied as a sparse matrix
        self.h_int = sp.kron(sp.diags(np.arange(nc, dtype=float)),
                             sp.csr_matrix((b + b.conj().T).real), format="csr")
        nvec = np.arange(nc, dtype=float)
        mvec = np.arange(nm, dtype=float)
        self.diag = (np.add.outer(omega_ratio * nvec, mvec)).reshape(-1)
        self.nvec = nvec
        self.wfeed = np.sqrt(np.outer(nvec[1:], nvec[1:]))[:, None, :, None]
        self.asum = 0.5 * kappa * (nvec[:, None, None, None] + nvec[None, None, :, None])

    def rhs(self, r: np.ndarray, g: float) -> np.ndarray:
        nc, nm = self.dims.n_cav, self.dims.n_mech
        hr = self.diag[:, None] * r - g * (self.h_int @ r)
        # h_int is real symmetric, so rho @ h_int = (h_int @ rho.T).T
        rh = r * self.diag[None, :] - g * (self.h_int @ r.T).T
        d = -1j * (hr - rh)
        if self.kappa != 0.0:
            r4 = r.reshape(nc, nm, nc, nm)
            d4 = d.reshape(nc, nm, nc, nm)
            d4[:-1, :, :-1, :] += self.kappa * self.wfeed * r4[1:, :, 1:, :]
            d4 -= self.asum * r4
        return d


def evolve(rho0: DensityMatrix, g_profile: CouplingProfile, kappa: float,
           tau_end: float, cfg: EvolveConfig = EvolveConfig(),
           snapshots=None, omega_ratio: float = 0.0):
    """Integrate the master equation with classical RK4 stepping.

    Returns the final density matrix, or the list of matrices at the
    requested ``snapshots`` (which must be sorted and end at ``tau_end``).
    The state is re-Hermitized periodically; trace drift and top-two-level
    leakage are checked at the end.
    """
    if kappa < 0 or tau_end < 0:
        raise InputDomainError("kappa and tau_end must be non-negative")
    dims = rho0.dims
    if snapshots is None:
        marks = [tau_end]
    else:
        marks = list(snapshots)
        if any(b <= a for a, b in zip(marks, marks[1:])) or (marks and marks[-1] > tau_end):
            raise InputDomainError("snapshots must be increasing and <= tau_end")
        if not marks or marks[-1] < tau_end:
            marks.append(tau_end)

    g_scale = np.max(np.abs(profile_values(g_profile, np.linspace(0.0, max(tau_end, 1e-12), 64))))
    dt = cfg.dt if cfg.dt is not None else heuristic_dt(g_scale, kappa, dims) * cfg.dt_safety
    stepper = _Stepper(dims, kappa, omega_ratio)
    constant = isinstance(g_profile, ConstantCoupling)
    g_of = (lambda t: g_profile.g0) if constant else (lambda t: float(profile_values(g_profile, t)))

    r = rho0.data.copy()
    tr0 = np.trace(r).real
    out = []
    t = 0.0
    steps_done = 0
    for mark in marks:
        seg = mark - t
        if seg > 0:
            nsteps = max(1, int(np.ceil(seg / dt)))
            h = seg / nsteps
            for _ in range(nsteps):
                g1 = g_of(t)
                gm = g1 if constant else g_of(t + 0.5 * h)
                g2 = g1 if constant else g_of(t + h)
                k1 = stepper.rhs(r, g1)
                k2 = stepper.rhs(r + 0.5 * h * k1, gm)
                k3 = stepper.rhs(r + 0.5 * h * k2, gm)
                k4 = stepper.rhs(r + h * k3, g2)
                r += (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
                t += h
                steps_done += 1
                if steps_done % cfg.hermitize_every == 0:
                    r = 0.5 * (r + r.conj().T)
        out.append(DensityMatrix(dims=dims, data=0.5 * (r + r.conj().T)))

    final = out[-1]
    drift = abs(final.trace().real - tr0)
    if drift > cfg.trace_tol:
        raise LeakageError(f"trace drifted by {drift:.3e} during evolution")
    leak = _edge_population(final)
    if leak > cfg.leak_tol:
        raise LeakageError(
            f"top-two-level population {leak:.3e} exceeds leak_tol; "
            f"increase dims beyond {dims.n_cav}x{dims.n_mech}",
            required=(dims.n_cav + 4, dims.n_mech + max(4, dims.n_mech // 3)))
    return out if snapshots is not None else final


def _edge_population(rho: DensityMatrix) -> float:
    nc, nm = rho.dims.n_cav, rho.dims.n_mech
    p = np.real(np.diag(rho.data)).reshape(nc, nm)
    return float(p[-2:, :].sum() + p[:-2, -2:].sum())


def evolve_pure(psi0: np.ndarray, g0: float, tau_end: float, dims: FockDims,
                omega_ratio: float = 0.0) -> np.ndarray:
    """Unitary (kappa = 0) evolution of a pure product state, constant coupling.

    Uses a scaled-and-squared Krylov exponential on the sparse Hamiltonian,
    so there is no time-stepping error; intended as the lossless oracle at
    truncations too large for density-matrix stepping.
    """
    if psi0.shape != (dims.size,):
        raise InputDomainError("state vector length does not match dims")
    nc, nm = dims.n_cav, dims.n_mech
    b = destroy(nm)
    h = (sp.kron(sp.eye(nc), sp.diags(np.arange(nm, dtype=float)))
         - g0 * sp.kron(sp.diags(np.arange(nc, dtype=float)), sp.csr_matrix((b + b.conj().T).real)))
    if omega_ratio != 0.0:
        h = h + omega_ratio * sp.kron(sp.diags(np.arange(nc, dtype=float)), sp.eye(nm))
    return expm_multiply((-1j * tau_end) * h.tocsc(), psi0.astype(complex))


# ---------------------------------------------------------------------------
# factored propagator and checks
# ---------------------------------------------------------------------------

def unitary_factored(g0: float, tau: float, dims: FockDims) -> np.ndarray:
    """Product of the four factored exponentials for constant coupling.

    Block diagonal in the photon number, so each cavity level carries its
    own pair of dense mechanical exponentials.
    """
    fc = f_coeffs_constant(g0, tau)
    nc, nm = dims.n_cav, dims.n_mech
    b = destroy(nm)
    bp = b + b.conj().T
    bm = 1j * (b.conj().T - b)
    mech_phase = np.exp(-1j * tau * np.arange(nm))
    u = np.zeros((dims.size, dims.size), dtype=complex)
    for n in range(nc):
        blk = expm(-1j * fc.f_plus * n * bp) @ expm(-1j * fc.f_minus * n * bm)
        blk = np.exp(-1j * fc.f_a * n * n) * (mech_phase[:, None] * blk)
        u[n * nm:(n + 1) * nm, n * nm:(n + 1) * nm] = blk
    return u


def interior_mask(dims: FockDims, exclude: int = 2) -> np.ndarray:
    """Boolean mask of basis states away from both truncation edges."""
    keep = np.zeros(dims.size, dtype=bool)
    for n in range(dims.n_cav - exclude):
        base = n * dims.n_mech
        keep[base:base + dims.n_mech - exclude] = True
    return keep


def heisenberg_a_check(g0: float, tau: float, dims: FockDims) -> float:
    """Max interior deviation between conjugated and factored forms of a.

    Compares U^dag a U against the phase-displacement product acting on a;
    both sides are built independently from the same truncated operators.
    """
    fc = f_coeffs_constant(g0, tau)
    a_phase = fc.f_a + fc.f_plus * fc.f_minus
    u = unitary_factored(g0, tau, dims)
    a = cavity_destroy(dims)
    lhs = u.conj().T @ a @ u
    nm = dims.n_mech
    b = destroy(nm)
    disp = expm(-1j * fc.f_plus * (b + b.conj().T)) @ expm(-1j * fc.f_minus * 1j * (b.conj().T - b))
    kerr = np.exp(-2j * a_phase * np.arange(dims.n_cav))
    rhs = np.exp(-1j * fc.f_a) * np.kron(np.diag(kerr), disp) @ a
    keep = interior_mask(dims)
    return float(np.abs(lhs[np.ix_(keep, keep)] - rhs[np.ix_(keep, keep)]).max())


# ---------------------------------------------------------------------------
# reductions
# ---------------------------------------------------------------------------

def expectation(op: np.ndarray, rho: DensityMatrix) -> complex:
    """Tr[op rho]."""
    return complex(np.einsum('ij,ji->', op, rho.data))


def partial_trace_mech(rho: DensityMatrix) -> np.ndarray:
    """Reduced cavity density matrix (n_cav x n_cav)."""
    nc, nm = rho.dims.n_cav, rho.dims.n_mech
    return np.trace(rho.data.reshape(nc, nm, nc, nm), axis1=1, axis2=3)


def state_fidelity(psi: np.ndarray, rho: np.ndarray) -> float:
    """<psi| rho |psi> for a pure reference state, clamped to [0, 1]."""
    rho = rho.data if isinstance(rho, DensityMatrix) else rho
    val = complex(psi.conj() @ rho @ psi)
    if abs(val.imag) > 1e-10:
        raise InputDomainError(f"fidelity has imaginary residue {val.imag:.3e}")
    return float(min(1.0, max(0.0, val.real)))


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def save_density_matrix(rho: DensityMatrix, path, params: dict | None = None):
    """Write a JSON header line plus row-major 're,im' pairs per matrix row."""
    header = {"n_cav": rho.dims.n_cav, "n_mech": rho.dims.n_mech,
              "format": "re,im row-major"}
    if params:
        header["params"] = params
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header) + "\n")
        for row in rho.data:
            fh.write(",".join(f"{z.real:.17g},{z.imag:.17g}" for z in row) + "\n")


def load_density_matrix(path) -> DensityMatrix:
    with open(path, encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        dims = FockDims(n_cav=header["n_cav"], n_mech=header["n_mech"])
        n = dims.size
        data = np.empty((n, n), dtype=complex)
        for i in range(n):
            parts = np.array(fh.readline().split(","), dtype=float)
            data[i] = parts[0::2] + 1j * parts[1::2]
    return DensityMatrix(dims=dims, data=data)
