import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from drgtransfer import drg, dynamics, hamiltonian, spectra
from drgtransfer.errors import DimensionMismatchError, InvalidParameterError, SolverFailureError
from drgtransfer.hamiltonian import PstTarget

PI = math.pi


def spec_of(family, param):
    return spectra.spectrum(drg.family_jacobi(family, param))


def test_energies_c4_by_hand():
    # P_0 = 1, P_1 = x, P_2 = (x^2 - 2)/2 at x = (2, 0, -2).
    x = np.array([2.0, 0.0, -2.0])
    big_p = np.vstack([np.ones(3), x, (x**2 - 2) / 2])
    j = np.array([-PI / 4, 0, PI / 4])
    by_hand = 2 * big_p.T @ j
    np.testing.assert_allclose(by_hand, [0, -PI, 0], atol=1e-15)
    np.testing.assert_allclose(hamiltonian.energies(j, spec_of("cycle", 2)), by_hand, atol=1e-14)


@pytest.mark.parametrize(
    "family, param, j, e",
    [
        ("hypercube", 3, [-3 * PI / 4, PI / 4, 0, 0], [0, -PI, -2 * PI, -3 * PI]),
        ("crown", 3, [-PI / 4, 0, 0, PI / 4], [0, -PI, 0, -PI]),
        ("crown", 5, [-PI / 4, 0, 0, PI / 4], [0, -PI, 0, -PI]),
    ],
)
def test_energies_examples(family, param, j, e):
    np.testing.assert_allclose(hamiltonian.energies(j, spec_of(family, param)), e, atol=1e-13)


def test_energies_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        hamiltonian.energies([0.0, 1.0], spec_of("cycle", 2))


@pytest.mark.parametrize(
    "e, ok",
    [([0, -PI, 0], True), ([0, -PI, -2 * PI, -3 * PI], True), ([0, -PI / 2, 0], False)],
)
def test_pst_check(e, ok):
    result, residual = hamiltonian.pst_check(e, 1.0)
    assert result is ok
    if ok:
        assert residual <= 1e-9
    else:
        assert residual > 0.5


@pytest.mark.parametrize(
    "family, param, strategy, printed",
    [
        ("cycle", 2, "folded", [-PI / 4, 0, PI / 4]),
        ("hypercube", 3, "ladder", [-3 * PI / 4, PI / 4, 0, 0]),
        ("crown", 3, "folded", [-PI / 4, 0, 0, PI / 4]),
    ],
)
def test_solver_reproduces_printed_couplings(family, param, strategy, printed):
    j = hamiltonian.solve_couplings(spec_of(family, param), PstTarget(1.0, strategy))
    np.testing.assert_allclose(j, printed, rtol=0, atol=1e-12)


def test_presets_match_solver():
    for name, (family, size, values) in hamiltonian.PRESETS.items():
        size = size or 3
        strategy = hamiltonian.DEFAULT_STRATEGY[family]
        j = hamiltonian.solve_couplings(spec_of(family, size), PstTarget(1.0, strategy))
        np.testing.assert_allclose(j, values, atol=1e-12, err_msg=name)
        np.testing.assert_allclose(hamiltonian.preset_couplings(name, family, size), values)


def test_preset_wrong_family():
    with pytest.raises(InvalidParameterError):
        hamiltonian.preset_couplings("paper-c4", "cycle", 3)
    with pytest.raises(InvalidParameterError):
        hamiltonian.preset_couplings("nope", "cycle", 2)


def test_hypercube_ladder_closed_form():
    # E_k = 2 J_0 + 2 J_1 (d - 2k) = -k pi gives J_1 = pi/4, J_0 = -d pi/4.
    for d in range(1, 9):
        j = hamiltonian.solve_couplings(spec_of("hypercube", d), PstTarget(1.0, "ladder"))
        expected = np.zeros(d + 1)
        expected[:2] = [-d * PI / 4, PI / 4]
        np.testing.assert_allclose(j, expected, atol=1e-10)


def test_folded_targets():
    e = PstTarget(0.5, "folded").energies(5)
    np.testing.assert_allclose(e, [0, -2 * PI, 0, -2 * PI, 0])
    assert np.all((e > -2 * PI / 0.5) & (e <= 0))


def test_explicit_target_shape():
    with pytest.raises(DimensionMismatchError):
        PstTarget(1.0, "explicit", (0.0, 1.0)).energies(3)
    with pytest.raises(InvalidParameterError):
        PstTarget(1.0, "explicit")
    with pytest.raises(InvalidParameterError):
        PstTarget(0.0, "ladder")


def test_singular_system_rejected():
    # Two equal columns of P_m(x_k) make the coupling matrix singular.
    sp = spec_of("cycle", 3)
    p_vals = sp.p_vals.copy()
    p_vals[:, 1] = p_vals[:, 0]
    broken = dataclasses.replace(sp, p_vals=p_vals)
    with pytest.raises(SolverFailureError):
        hamiltonian.solve_couplings(broken, PstTarget(1.0, "ladder"))


FAMILY_SIZES = st.sampled_from(
    [("cycle", m) for m in range(2, 9)]
    + [("hypercube", d) for d in range(1, 9)]
    + [("crown", m) for m in range(3, 9)]
)


@settings(max_examples=60, deadline=None)
@given(FAMILY_SIZES, st.sampled_from(["ladder", "folded"]), st.floats(0.1, 10))
def test_round_trip_and_pst(fam, strategy, t0):
    sp = spec_of(*fam)
    target = PstTarget(t0, strategy)
    j = hamiltonian.solve_couplings(sp, target)
    e = hamiltonian.energies(j, sp)
    np.testing.assert_allclose(e, target.energies(sp.d + 1), rtol=0, atol=1e-10 * max(1, 1 / t0))
    assert hamiltonian.pst_check(e, t0)[0]


@settings(max_examples=40, deadline=None)
@given(FAMILY_SIZES, st.sampled_from(["ladder", "folded"]), st.floats(0.2, 5))
def test_scaling_covariance(fam, strategy, c):
    sp = spec_of(*fam)
    j1 = hamiltonian.solve_couplings(sp, PstTarget(1.0, strategy))
    jc = hamiltonian.solve_couplings(sp, PstTarget(1.0 / c, strategy))
    np.testing.assert_allclose(jc, c * j1, rtol=1e-9, atol=1e-9)


@settings(max_examples=40, deadline=None)
@given(FAMILY_SIZES, st.floats(-20, 20), st.floats(0, 0.5))
def test_global_phase_changes_only_j0_and_not_fidelity(fam, delta, gamma):
    sp = spec_of(*fam)
    base = PstTarget(1.0, "ladder").energies(sp.d + 1)
    j = hamiltonian.solve_couplings(sp, PstTarget(1.0, "explicit", tuple(base)))
    js = hamiltonian.solve_couplings(sp, PstTarget(1.0, "explicit", tuple(base + delta)))
    np.testing.assert_allclose(js[1:], j[1:], atol=1e-9)
    assert js[0] - j[0] == pytest.approx(delta / 2, abs=1e-9)
    times = np.linspace(0, 5, 51)
    f = dynamics.fidelity(hamiltonian.energies(j, sp), sp, gamma, times)
    fs = dynamics.fidelity(hamiltonian.energies(js, sp), sp, gamma, times)
    np.testing.assert_allclose(f, fs, atol=1e-9)
