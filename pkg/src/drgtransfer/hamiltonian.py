"""Coupling strengths, energy levels and the perfect-transfer inverse problem.

Units: ``hbar = 1``; couplings are energies and times their reciprocals.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DimensionMismatchError, InvalidParameterError, SolverFailureError
from .spectra import Spectrum

PST_TOL = 1e-9

#: Coupling vectors printed for the three worked examples, keyed by preset name.
#: Each entry is ``(family, param or None for any size, J_0..J_d)``.
PRESETS: dict[str, tuple[str, Optional[int], tuple[float, ...]]] = {
    "paper-c4": ("cycle", 2, (-math.pi / 4, 0.0, math.pi / 4)),
    "paper-h32": ("hypercube", 3, (-3 * math.pi / 4, math.pi / 4, 0.0, 0.0)),
    "paper-crown": ("crown", None, (-math.pi / 4, 0.0, 0.0, math.pi / 4)),
}

#: Target strategy that reproduces each family's printed couplings.
DEFAULT_STRATEGY = {"cycle": "folded", "hypercube": "ladder", "crown": "folded"}


@dataclass(frozen=True)
class PstTarget:
    transfer_time: float = 1.0
    strategy: str = "ladder"
    explicit: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        if not self.transfer_time > 0:
            raise InvalidParameterError("transfer_time must be positive")
        if self.strategy not in ("ladder", "folded", "explicit"):
            raise InvalidParameterError(f"unknown strategy {self.strategy!r}")
        if self.strategy == "explicit" and self.explicit is None:
            raise InvalidParameterError("explicit strategy needs target energies")

    def energies(self, n: int) -> np.ndarray:
        t0 = self.transfer_time
        k = np.arange(n)
        if self.strategy == "ladder":
            return -k * math.pi / t0
        if self.strategy == "folded":
            # -k*pi/t0 reduced into (-2pi/t0, 0] is -(k mod 2)*pi/t0.
            return -(k % 2) * math.pi / t0
        e = np.asarray(self.explicit, dtype=float)
        if e.shape != (n,):
            raise DimensionMismatchError(f"expected {n} target energies, got {e.shape}")
        return e


def _as_couplings(j, n: int) -> np.ndarray:
    j = np.asarray(j, dtype=float)
    if j.shape != (n,):
        raise DimensionMismatchError(f"expected {n} couplings, got shape {j.shape}")
    if not np.all(np.isfinite(j)):
        raise InvalidParameterError("couplings must be finite")
    return j


def coupling_matrix(spec: Spectrum) -> np.ndarray:
    """``M[k, m] = 2 P_m(x_k)`` so that ``E = M @ J``."""
    return 2.0 * spec.p_vals.T


def energies(j, spec: Spectrum) -> np.ndarray:
    """Energy levels ``E_k = 2 sum_m J_m P_m(x_k)``, aligned with descending ``x_k``."""
    j = _as_couplings(j, spec.d + 1)
    return coupling_matrix(spec) @ j


def pst_check(e, t0: float, tol: float = PST_TOL) -> tuple[bool, float]:
    """True when ``exp(-i E_k t0) (-1)**k`` is the same phase for every ``k``."""
    e = np.asarray(e, dtype=float)
    signs = (-1.0) ** np.arange(e.size)
    phases = np.exp(-1j * e * t0) * signs
    residual = float(np.max(np.abs(phases - phases[0])))
    return residual <= tol, residual


def solve_couplings(spec: Spectrum, target: PstTarget, rcond: float = 1e-10) -> np.ndarray:
    """Solve ``2 sum_m J_m P_m(x_k) = E_k`` for the target energies."""
    m = coupling_matrix(spec)
    e = target.energies(spec.d + 1)
    sv = np.linalg.svd(m, compute_uv=False)
    if sv[-1] <= rcond * sv[0]:
        raise SolverFailureError(
            f"coupling system is rank deficient (condition {sv[0] / sv[-1]:.3e})"
        )
    return np.linalg.solve(m, e)


def preset_couplings(name: str, family: str, param: int) -> np.ndarray:
    try:
        fam, size, values = PRESETS[name]
    except KeyError:
        raise InvalidParameterError(
            f"unknown preset {name!r}; choose from {sorted(PRESETS)}"
        ) from None
    if fam != family or (size is not None and size != param):
        raise InvalidParameterError(f"preset {name!r} does not apply to {family} {param}")
    return np.array(values)
