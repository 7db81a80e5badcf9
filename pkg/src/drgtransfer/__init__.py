"""Quantum state transfer over distance-regular spin networks with intrinsic decoherence."""
from .drg import (
    DistanceMatrices,
    FullGraph,
    JacobiParams,
    Stratification,
    build_crown,
    build_cycle,
    build_hypercube,
    check_distance_regularity,
    family_jacobi,
    from_adjacency_list,
    stratify,
)
from .dynamics import (
    DecoherenceParams,
    EvolvedState,
    FidelityTrace,
    evolve_closed_form,
    fidelity,
    fidelity_trace,
    full_space_oracle,
    integrate_master_equation,
    kraus_sum,
    steady_fidelity,
)
from .hamiltonian import PRESETS, PstTarget, energies, pst_check, solve_couplings
from .spectra import PolynomialTable, Spectrum, eigen_solve, moments_check, polynomials, spectrum

__version__ = "0.1.0"
