"""Orthogonal polynomials and spectral data of a Jacobi matrix.

Three polynomial families share one recursion:

* ``Q_i`` -- monic, ``Q_{i+1} = (x - alpha_i) Q_i - beta_i**2 Q_{i-1}``;
* ``p_i = Q_i / (beta_1 ... beta_i)`` -- orthonormal under the spectral measure;
* ``P_i = sqrt(kappa_i) p_i`` -- the distance polynomials, ``A_i = P_i(A)``.

Eigenvector components and weights use ``p_i``; see ``Spectrum.weights``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial
from scipy import sparse

from .drg import FullGraph, JacobiParams
from .errors import DegenerateJacobiError, SpectralInconsistencyError

DEGENERACY_TOL = 1e-9
ROOT_RESIDUAL_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class PolynomialTable:
    jacobi: JacobiParams
    #: ``Q_0 .. Q_{d+1}`` as ascending-coefficient polynomials.
    q_coeffs: tuple[Polynomial, ...]

    @property
    def d(self) -> int:
        return self.jacobi.d

    def evaluate(self, x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return ``(Q, P, p)`` value tables, each indexed ``[i, k]``.

        ``Q`` has ``d + 2`` rows (through ``Q_{d+1}``); ``P`` and ``p`` have
        ``d + 1``.  Values come from the recursions, not the coefficients.
        """
        jp = self.jacobi
        x = np.atleast_1d(np.asarray(x, dtype=float))
        d = jp.d
        q = np.empty((d + 2, x.size))
        q[0] = 1.0
        q[1] = x - jp.alpha[0]
        for i in range(1, d + 1):
            q[i + 1] = (x - jp.alpha[i]) * q[i] - jp.beta_sq[i - 1] * q[i - 1]

        beta = jp.beta
        pn = np.empty((d + 1, x.size))
        pn[0] = 1.0
        if d >= 1:
            pn[1] = (x - jp.alpha[0]) / beta[0]
        for i in range(1, d):
            pn[i + 1] = ((x - jp.alpha[i]) * pn[i] - beta[i - 1] * pn[i - 1]) / beta[i]
        big_p = np.sqrt(np.asarray(jp.kappa, dtype=float))[:, None] * pn
        return q, big_p, pn


def polynomials(jp: JacobiParams) -> PolynomialTable:
    x = Polynomial([0.0, 1.0])
    qs = [Polynomial([1.0]), x - jp.alpha[0]]
    for i in range(1, jp.d + 1):
        qs.append((x - jp.alpha[i]) * qs[i] - jp.beta_sq[i - 1] * qs[i - 1])
    return PolynomialTable(jp, tuple(qs))


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Distinct adjacency eigenvalues (descending) with their weights on ``phi_0``."""

    eigenvalues: np.ndarray
    weights: np.ndarray
    poly: PolynomialTable
    q_vals: np.ndarray
    p_vals: np.ndarray
    pnorm_vals: np.ndarray
    root_residual: float

    @property
    def d(self) -> int:
        return self.poly.d

    @property
    def jacobi(self) -> JacobiParams:
        return self.poly.jacobi

    @property
    def eigenvectors(self) -> np.ndarray:
        """Column ``k`` is ``psi_k`` in the stratum basis: ``p_l(x_k) sqrt(mu_k)``."""
        return self.pnorm_vals * np.sqrt(self.weights)[None, :]

    @property
    def raw_norms(self) -> np.ndarray:
        """``sum_l P_l(x_k)**2``, the literal denominator with unnormalised ``P``."""
        return np.sum(self.p_vals**2, axis=0)


def sturm_count(jp: JacobiParams, x: np.ndarray) -> np.ndarray:
    """Number of eigenvalues strictly below each entry of ``x``."""
    x = np.asarray(x, dtype=float)
    bmax = float(jp.beta_sq.max()) if jp.d else 1.0
    pivmin = np.finfo(float).tiny * max(1.0, bmax)
    q = jp.alpha[0] - x
    q = np.where(np.abs(q) < pivmin, -pivmin, q)
    count = (q < 0).astype(int)
    for i in range(1, jp.d + 1):
        q = jp.alpha[i] - x - jp.beta_sq[i - 1] / q
        q = np.where(np.abs(q) < pivmin, -pivmin, q)
        count += q < 0
    return count


def tridiagonal_eigenvalues(jp: JacobiParams, max_iter: int = 200) -> np.ndarray:
    """All eigenvalues by Sturm-sequence bisection, sorted descending."""
    n = jp.d + 1
    beta = np.concatenate([[0.0], jp.beta, [0.0]])
    radius = beta[:-1] + beta[1:]
    lo0 = float(np.min(jp.alpha - radius))
    hi0 = float(np.max(jp.alpha + radius))
    pad = 1e-12 * max(1.0, abs(lo0), abs(hi0))
    lo = np.full(n, lo0 - pad)
    hi = np.full(n, hi0 + pad)
    # Entry j brackets the j-th smallest eigenvalue.
    j = np.arange(n)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if np.all((mid <= lo) | (mid >= hi)):
            break
        below = sturm_count(jp, mid) > j
        hi = np.where(below, mid, hi)
        lo = np.where(below, lo, mid)
    return (0.5 * (lo + hi))[::-1]


def characteristic_roots(poly: PolynomialTable) -> np.ndarray:
    """Roots of ``Q_{d+1}`` from its coefficients, descending (cross-check route)."""
    roots = poly.q_coeffs[-1].roots()
    return np.sort(roots.real)[::-1]


def eigen_solve(jp: JacobiParams, poly: PolynomialTable | None = None) -> Spectrum:
    if poly is None:
        poly = polynomials(jp)
    x = tridiagonal_eigenvalues(jp)
    gaps = -np.diff(x)
    scale = max(1.0, float(np.max(np.abs(x))))
    if gaps.size and gaps.min() <= DEGENERACY_TOL * scale:
        raise DegenerateJacobiError(f"eigenvalues closer than {DEGENERACY_TOL}: {x}")

    q, big_p, pn = poly.evaluate(x)
    coef_scale = np.sum(np.abs(poly.q_coeffs[-1].coef)) * np.maximum(1.0, np.abs(x)) ** (jp.d + 1)
    residual = float(np.max(np.abs(q[-1]) / coef_scale))
    if residual > ROOT_RESIDUAL_TOL:
        raise SpectralInconsistencyError(f"Q_(d+1) residual {residual:.3e} at eigenvalues")
    weights = 1.0 / np.sum(pn**2, axis=0)
    return Spectrum(x, weights, poly, q[:-1], big_p, pn, residual)


def spectrum(jp: JacobiParams) -> Spectrum:
    return eigen_solve(jp, polynomials(jp))


@dataclass(frozen=True)
class MomentsReport:
    ok: bool
    #: ``(m, closed-walk count, sum_k mu_k x_k**m)`` per order.
    rows: list[tuple[int, float, float]]
    max_rel_error: float


def moments_check(spec: Spectrum, g: FullGraph, max_m: int, rtol: float = 1e-9) -> MomentsReport:
    """Compare ``sum_k mu_k x_k**m`` with closed-walk counts at the reference."""
    adj = sparse.csr_matrix(g.adjacency, dtype=float)
    vec = np.zeros(g.n_vertices)
    vec[g.reference] = 1.0
    rows = []
    worst = 0.0
    for m in range(max_m + 1):
        walks = float(vec[g.reference])
        moment = float(np.sum(spec.weights * spec.eigenvalues**m))
        err = abs(moment - walks) / max(1.0, abs(walks))
        worst = max(worst, err)
        rows.append((m, walks, moment))
        vec = adj @ vec
    return MomentsReport(worst <= rtol, rows, worst)
