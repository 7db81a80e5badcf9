"""Intrinsic-decoherence dynamics of the sender state and transfer fidelity.

The master equation ``drho/dt = -i[H, rho] - (gamma/2)[H, [H, rho]]`` is
diagonal in the energy basis: coherence ``(k, k')`` picks up
``exp(-i t dE - gamma t dE**2 / 2)`` with ``dE = E_k - E_k'``.  Everything
here works in that ``(d+1)``-dimensional basis; ``full_space_oracle`` is the
exception and works on all ``N`` vertices.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special

from .drg import DistanceMatrices, FullGraph, stratify
from .errors import IntegrationError, InvalidParameterError, SizeLimitError
from .spectra import Spectrum

#: Dense diagonalisation limit for the vertex-level oracle.
ORACLE_CAP = 4096
KRAUS_TAIL = 1e-12
IMAG_TOL = 1e-12


@dataclass(frozen=True)
class DecoherenceParams:
    gamma: float = 0.0

    def __post_init__(self):
        if not (self.gamma >= 0 and math.isfinite(self.gamma)):
            raise InvalidParameterError(f"gamma must be finite and >= 0, got {self.gamma}")


@dataclass(frozen=True, eq=False)
class EvolvedState:
    t: float
    rho: np.ndarray
    basis: str = "energy"

    def in_krylov_basis(self, spec: Spectrum) -> "EvolvedState":
        if self.basis == "krylov":
            return self
        v = spec.eigenvectors
        return EvolvedState(self.t, v @ self.rho @ v.T, "krylov")


@dataclass(frozen=True, eq=False)
class FidelityTrace:
    times: np.ndarray
    fidelities: np.ndarray
    steady: float
    gamma: float
    label: str = ""

    def first_peak(self) -> tuple[float, float]:
        """Time and value of the first interior local maximum (or the global max)."""
        f = self.fidelities
        for i in range(1, len(f) - 1):
            if f[i] >= f[i - 1] and f[i] > f[i + 1]:
                return float(self.times[i]), float(f[i])
        i = int(np.argmax(f))
        return float(self.times[i]), float(f[i])


def _gamma(dp) -> float:
    return dp.gamma if isinstance(dp, DecoherenceParams) else DecoherenceParams(float(dp)).gamma


def _coherence_factors(e: np.ndarray, gamma: float, t) -> np.ndarray:
    """``exp(-i t dE - gamma t dE**2 / 2)``; leading axis follows ``t``."""
    de = e[:, None] - e[None, :]
    t = np.asarray(t, dtype=float)[..., None, None]
    return np.exp(-1j * t * de - 0.5 * gamma * t * de**2)


def initial_amplitudes(spec: Spectrum) -> np.ndarray:
    """``<psi_k|phi_0> = p_0(x_k) sqrt(mu_k) = sqrt(mu_k)``."""
    return np.sqrt(spec.weights)


def evolve_closed_form(e, spec: Spectrum, dp, t: float) -> EvolvedState:
    if t < 0:
        raise InvalidParameterError("t must be >= 0")
    e = np.asarray(e, dtype=float)
    a = initial_amplitudes(spec)
    rho = np.outer(a, a) * _coherence_factors(e, _gamma(dp), t)
    return EvolvedState(float(t), rho)


def _receiver_overlaps(spec: Spectrum, paper_normalization: bool) -> np.ndarray:
    """Per-eigenvector factor ``c_k`` such that ``F = sum c_k c_k' * coherence``."""
    if paper_normalization:
        # Literal form: denominators sum_l P_l(x_k)**2 and numerator P_d(x_k).
        return spec.p_vals[-1] / spec.raw_norms
    return spec.pnorm_vals[-1] * spec.weights


def fidelity(e, spec: Spectrum, dp, t, paper_normalization: bool = False):
    """Receiver population ``<phi_d|rho(t)|phi_d>``; vectorised over ``t``.

    The default uses ``<phi_d|psi_k> = p_d(x_k) sqrt(mu_k)``.  With
    ``paper_normalization`` the unnormalised ``P_l`` are used instead; this
    does not give unit fidelity at the transfer time when ``kappa_l != 1``
    and is only kept for comparison.
    """
    e = np.asarray(e, dtype=float)
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise InvalidParameterError("t must be >= 0")
    c = _receiver_overlaps(spec, paper_normalization)
    vals = np.einsum("k,...kl,l->...", c, _coherence_factors(e, _gamma(dp), t_arr), c)
    if np.max(np.abs(vals.imag), initial=0.0) > IMAG_TOL:
        raise ArithmeticError(f"fidelity has imaginary part {np.max(np.abs(vals.imag)):.3e}")
    vals = vals.real
    return float(vals) if vals.ndim == 0 else vals


def degenerate_pairs(e, tol: float = 1e-9) -> list[tuple[int, int]]:
    """Index pairs ``k < k'`` with ``|E_k - E_k'| <= tol * max(1, max|E|)``."""
    e = np.asarray(e, dtype=float)
    thresh = tol * max(1.0, float(np.max(np.abs(e))))
    n = e.size
    return [(k, l) for k in range(n) for l in range(k + 1, n) if abs(e[k] - e[l]) <= thresh]


def steady_fidelity(
    e, spec: Spectrum, degeneracy_tol: float = 1e-9, paper_normalization: bool = False
) -> float:
    """Long-time limit for ``gamma > 0``: only degenerate coherences survive."""
    c = _receiver_overlaps(spec, paper_normalization)
    sign = (-1.0) ** np.arange(c.size)
    value = float(np.sum(c**2))
    # Cross terms carry (-1)**(k+k'), i.e. p_d(x_k) = (-1)**k is assumed.
    for k, l in degenerate_pairs(e, degeneracy_tol):
        value += 2.0 * sign[k] * sign[l] * abs(c[k]) * abs(c[l])
    return value


def time_grid(t_max: float, dt: float) -> np.ndarray:
    if not dt > 0 or not t_max >= 0:
        raise InvalidParameterError("need dt > 0 and t_max >= 0")
    n = int(math.floor(t_max / dt + 1e-9))
    return np.arange(n + 1) * dt


def fidelity_trace(
    e, spec: Spectrum, dp, times, label: str = "", paper_normalization: bool = False
) -> FidelityTrace:
    times = np.asarray(times, dtype=float)
    f = fidelity(e, spec, dp, times, paper_normalization)
    fs = steady_fidelity(e, spec, paper_normalization=paper_normalization)
    return FidelityTrace(times, np.atleast_1d(f), fs, _gamma(dp), label)


# ---------------------------------------------------------------------------
# Oracles


def liouvillian(e, gamma: float) -> np.ndarray:
    """Superoperator ``J + S + L`` acting on row-major ``vec(rho)``.

    ``J rho = gamma H rho H``, ``S rho = -i[H, rho]``,
    ``L rho = -(gamma/2){H^2, rho}`` with ``H = diag(E)``; uses
    ``vec(A rho B) = (A kron B^T) vec(rho)``.
    """
    h = np.diag(np.asarray(e, dtype=float)).astype(complex)
    h2 = h @ h
    eye = np.eye(h.shape[0])
    jop = gamma * np.kron(h, h.T)
    sop = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    lop = -0.5 * gamma * (np.kron(h2, eye) + np.kron(eye, h2.T))
    return jop + sop + lop


def rk4_propagator(m: np.ndarray, h: float) -> np.ndarray:
    """One classical RK4 step of ``y' = M y``, applied to every basis vector."""
    y = np.eye(m.shape[0], dtype=complex)
    k1 = m @ y
    k2 = m @ (y + 0.5 * h * k1)
    k3 = m @ (y + 0.5 * h * k2)
    k4 = m @ (y + h * k3)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate_master_equation(
    e,
    spec: Spectrum,
    dp,
    t_max: float,
    dt: float,
    substeps: Optional[int] = None,
    max_step_norm: float = 0.01,
) -> list[EvolvedState]:
    """Classical RK4 integration in the energy basis, sampled every ``dt``.

    The equation is linear, so the RK4 step map is formed once and reused.
    Without ``substeps`` each output interval is split so that
    ``h * max|lambda| <= max_step_norm``, ``lambda`` being the coherence decay
    rates.  An explicit ``substeps`` beyond the RK4 stability bound raises.
    """
    gamma = _gamma(dp)
    e = np.asarray(e, dtype=float)
    n = e.size
    times = time_grid(t_max, dt)
    de = np.abs(e[:, None] - e[None, :])
    lam = float(np.max(np.abs(1j * de + 0.5 * gamma * de**2)))
    if substeps is None:
        substeps = max(1, math.ceil(dt * lam / max_step_norm))
    h_step = dt / substeps
    if h_step * lam > 2.78:
        raise IntegrationError(
            f"step {h_step:.3e} times max rate {lam:.3e} exceeds the RK4 stability bound"
        )
    step = np.linalg.matrix_power(rk4_propagator(liouvillian(e, gamma), h_step), substeps)
    a = initial_amplitudes(spec)
    y = np.outer(a, a).astype(complex).ravel()
    out = [EvolvedState(0.0, y.reshape(n, n).copy())]
    for t in times[1:]:
        y = step @ y
        if not np.all(np.isfinite(y)):
            raise IntegrationError(f"non-finite density matrix at t={t}")
        out.append(EvolvedState(float(t), y.reshape(n, n).copy()))
    return out


def kraus_cutoff(e, gamma: float, t: float, tail: float = KRAUS_TAIL) -> int:
    """Smallest ``l_max`` whose Poisson(gamma t max E**2) tail is below ``tail``."""
    lam = gamma * t * float(np.max(np.asarray(e, dtype=float) ** 2))
    if lam == 0:
        return 0
    lo, hi = 0, max(1, int(lam))
    while special.pdtrc(hi, lam) >= tail:
        lo, hi = hi, 2 * hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if special.pdtrc(mid, lam) >= tail:
            lo = mid
        else:
            hi = mid
    return hi if special.pdtrc(lo, lam) >= tail else lo


def kraus_diagonals(e, gamma: float, t, l_max: int) -> np.ndarray:
    """Diagonals of ``K_0..K_lmax`` in the energy basis, shape ``t.shape + (l_max+1, d+1)``.

    ``K_l = (gamma t)^(l/2) H^l exp(-iHt) exp(-gamma t H^2 / 2) / sqrt(l!)``;
    magnitudes are formed in log space so each stays below 1.
    """
    e = np.asarray(e, dtype=float)
    t = np.asarray(t, dtype=float)[..., None, None]
    l = np.arange(l_max + 1)[:, None]
    lam = gamma * t * e**2
    with np.errstate(divide="ignore", invalid="ignore"):
        log_mag = 0.5 * (l * np.log(lam) - lam - special.gammaln(l + 1))
    mag = np.where(lam > 0, np.exp(log_mag), (l == 0).astype(float))
    sign = np.where(e < 0, (-1.0) ** l, 1.0)
    return mag * sign * np.exp(-1j * e * t)


def kraus_completeness(e, gamma: float, t: float, l_max: int) -> np.ndarray:
    """``sum_l K_l^dagger K_l`` (diagonal matrix) at truncation ``l_max``."""
    k = kraus_diagonals(e, gamma, t, l_max)
    return np.diag(np.sum(np.abs(k) ** 2, axis=0))


def kraus_sum(e, spec: Spectrum, dp, t: float, l_max: Optional[int] = None) -> EvolvedState:
    """``sum_l K_l rho(0) K_l^dagger`` truncated at ``l_max``."""
    gamma = _gamma(dp)
    if l_max is None:
        l_max = kraus_cutoff(e, gamma, t)
    k = kraus_diagonals(e, gamma, t, l_max)
    a = initial_amplitudes(spec)
    # Diagonal K_l: (K_l rho K_l^dagger)_{ij} = K_l,i rho_ij conj(K_l,j).
    return EvolvedState(float(t), np.outer(a, a) * (k.T @ k.conj()))


def closed_form_trajectory(e, spec: Spectrum, dp, times) -> np.ndarray:
    """Stacked closed-form ``rho(t)``, shape ``(len(times), d+1, d+1)``."""
    a = initial_amplitudes(spec)
    return np.outer(a, a) * _coherence_factors(np.asarray(e, dtype=float), _gamma(dp), times)


def kraus_trajectory(e, spec: Spectrum, dp, times, l_max: Optional[int] = None, chunk: int = 64) -> np.ndarray:
    """Stacked Kraus-sum ``rho(t)``, shape ``(len(times), d+1, d+1)``.

    Without ``l_max`` each chunk of times is truncated at the cutoff of its
    latest time, which bounds the tail for every earlier time too.
    """
    gamma = _gamma(dp)
    times = np.asarray(times, dtype=float)
    a = initial_amplitudes(spec)
    out = np.empty((times.size, a.size, a.size), dtype=complex)
    for lo in range(0, times.size, chunk):
        tc = times[lo : lo + chunk]
        cut = kraus_cutoff(e, gamma, float(tc.max())) if l_max is None else l_max
        k = kraus_diagonals(e, gamma, tc, cut)
        out[lo : lo + chunk] = np.swapaxes(k, 1, 2) @ k.conj()
    return np.outer(a, a) * out


def full_hamiltonian(
    g: FullGraph, j, include_constant: bool = False, dm: Optional[DistanceMatrices] = None
) -> np.ndarray:
    """``2 sum_m J_m A_m``, optionally plus ``(N - 4)/2 sum_m J_m kappa_m I``."""
    if g.n_vertices > ORACLE_CAP:
        raise SizeLimitError(f"{g.n_vertices} vertices exceeds the oracle cap {ORACLE_CAP}")
    dm = dm or DistanceMatrices(g)
    j = np.asarray(j, dtype=float)
    if len(j) != dm.diameter + 1:
        raise InvalidParameterError(f"need {dm.diameter + 1} couplings, got {len(j)}")
    ham = 2.0 * sum(jm * dm.matrix(m) for m, jm in enumerate(j))
    if include_constant:
        kappa = np.array([np.count_nonzero(dm.distance[g.reference] == m) for m in range(len(j))])
        ham = ham + 0.5 * (g.n_vertices - 4) * float(np.dot(j, kappa)) * np.eye(g.n_vertices)
    return ham


def full_space_oracle(g: FullGraph, j, dp, t, include_constant: bool = False):
    """Receiver population from the ``N x N`` single-excitation Hamiltonian.

    Vectorised over ``t``.  Degenerate eigenspaces are harmless: the
    coherence factor is 1 inside each of them.
    """
    gamma = _gamma(dp)
    w, u = np.linalg.eigh(full_hamiltonian(g, j, include_constant))
    b = u[g.target] * u[g.reference]
    vals = np.einsum("k,...kl,l->...", b, _coherence_factors(w, gamma, t), b).real
    return float(vals) if vals.ndim == 0 else vals


def krylov_residual(g: FullGraph) -> float:
    """Largest residual of ``A phi_i - (beta_{i+1} phi_{i+1} + alpha_i phi_i + beta_i phi_{i-1})``."""
    strat, jp, _ = stratify(g)
    n = g.n_vertices
    phis = np.zeros((jp.d + 1, n))
    for i, layer in enumerate(strat.strata):
        phis[i, layer] = 1.0 / math.sqrt(len(layer))
    aphi = (g.adjacency @ phis.T).T
    expected = jp.matrix() @ phis
    return float(np.max(np.abs(aphi - expected)))
