import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from drgtransfer import drg, spectra
from drgtransfer.errors import DegenerateJacobiError


def full_graph_weights(g):
    """Distinct eigenvalues (descending) and reference-vertex spectral mass by dense eigh."""
    w, u = np.linalg.eigh(g.dense())
    mass = u[g.reference] ** 2
    levels, weights = [], []
    for val, m in sorted(zip(w, mass), key=lambda p: -p[0]):
        if levels and abs(levels[-1] - val) < 1e-8:
            weights[-1] += m
        else:
            levels.append(val)
            weights.append(m)
    keep = [i for i, m in enumerate(weights) if m > 1e-12]
    return np.array(levels)[keep], np.array(weights)[keep]


@pytest.mark.parametrize(
    "g, x, mu",
    [
        (drg.build_cycle(2), [2, 0, -2], [1 / 4, 1 / 2, 1 / 4]),
        (drg.build_hypercube(3), [3, 1, -1, -3], [1 / 8, 3 / 8, 3 / 8, 1 / 8]),
        (drg.build_crown(3), [2, 1, -1, -2], [1 / 6, 1 / 3, 1 / 3, 1 / 6]),
    ],
    ids=["C4", "H32", "crown3"],
)
def test_eigenvalues_and_weights(g, x, mu):
    # Frozen values first checked against the dense full-graph oracle.
    ox, omu = full_graph_weights(g)
    np.testing.assert_allclose(ox, x, atol=1e-12)
    np.testing.assert_allclose(omu, mu, atol=1e-12)
    _, jp, _ = drg.stratify(g)
    sp = spectra.spectrum(jp)
    np.testing.assert_allclose(sp.eigenvalues, x, atol=1e-12)
    np.testing.assert_allclose(sp.weights, mu, atol=1e-12)


def test_weights_match_full_graph(family_case):
    _, _, g, _, sp = family_case
    ox, omu = full_graph_weights(g)
    np.testing.assert_allclose(sp.eigenvalues, ox, atol=1e-10)
    np.testing.assert_allclose(sp.weights, omu, atol=1e-12)


def test_q_polynomials_c4():
    table = spectra.polynomials(drg.family_jacobi("cycle", 2))
    np.testing.assert_allclose(table.q_coeffs[0].coef, [1])
    np.testing.assert_allclose(table.q_coeffs[1].coef, [0, 1])
    np.testing.assert_allclose(table.q_coeffs[2].coef, [-2, 0, 1])
    np.testing.assert_allclose(table.q_coeffs[3].coef, [0, -4, 0, 1])


def test_q_polynomials_crown3():
    table = spectra.polynomials(drg.family_jacobi("crown", 3))
    np.testing.assert_allclose(table.q_coeffs[3].coef, [0, -3, 0, 1])
    np.testing.assert_allclose(table.q_coeffs[4].coef, [4, 0, -5, 0, 1])
    np.testing.assert_allclose(np.sort(table.q_coeffs[4].roots().real), [-2, -1, 1, 2], atol=1e-12)


def test_coefficient_recursion_identity(family_case):
    _, _, _, jp, sp = family_case
    qs = sp.poly.q_coeffs
    x = np.polynomial.Polynomial([0, 1])
    for i in range(1, jp.d + 1):
        diff = qs[i + 1] - ((x - jp.alpha[i]) * qs[i] - jp.beta_sq[i - 1] * qs[i - 1])
        assert np.max(np.abs(diff.coef), initial=0.0) == 0.0


def test_normalisation_and_sign_alternation(family_case):
    _, _, _, jp, sp = family_case
    assert np.all(sp.weights > 0)
    assert abs(sp.weights.sum() - 1) <= 1e-12
    np.testing.assert_array_equal(sp.pnorm_vals[0], 1.0)
    signs = (-1.0) ** np.arange(jp.d + 1)
    np.testing.assert_allclose(sp.p_vals[-1], signs, rtol=0, atol=1e-9)
    assert np.all(-np.diff(sp.eigenvalues) > 0)


def test_eigenvectors(family_case):
    _, _, _, jp, sp = family_case
    v = sp.eigenvectors
    np.testing.assert_allclose(v.T @ v, np.eye(jp.d + 1), atol=1e-12)
    resid = np.linalg.norm(jp.matrix() @ v - v * sp.eigenvalues, axis=0)
    assert resid.max() <= 1e-10


def test_polynomial_tables_consistent(family_case):
    _, _, _, jp, sp = family_case
    prod = np.concatenate([[1.0], np.cumprod(jp.beta)])
    np.testing.assert_allclose(sp.q_vals, prod[:, None] * sp.pnorm_vals, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(
        sp.p_vals, np.sqrt(jp.kappa.astype(float))[:, None] * sp.pnorm_vals, rtol=1e-12, atol=1e-12
    )


def test_distance_polynomials_reproduce_distance_matrices(family_case):
    # A_i = P_i(A): evaluate P_i on the full adjacency spectrum.
    _, _, g, jp, sp = family_case
    w, u = np.linalg.eigh(g.dense())
    _, big_p, _ = sp.poly.evaluate(w)
    _, _, dm = drg.stratify(g)
    for i in range(jp.d + 1):
        np.testing.assert_allclose((u * big_p[i]) @ u.T, dm.matrix(i), atol=1e-9)


@pytest.mark.parametrize("family", ["cycle", "hypercube", "crown"])
@pytest.mark.parametrize("size", range(1, 13))
def test_roots_agree_with_bisection(family, size):
    param = {"cycle": size + 1, "hypercube": size, "crown": size + 2}[family]
    sp = spectra.spectrum(drg.family_jacobi(family, param))
    roots = spectra.characteristic_roots(sp.poly)
    np.testing.assert_allclose(sp.eigenvalues, roots, rtol=0, atol=1e-9)


@pytest.mark.parametrize("m", range(2, 12))
def test_cycle_chebyshev_identity(m):
    sp = spectra.spectrum(drg.family_jacobi("cycle", m))
    theta = np.linspace(0.05, math.pi - 0.05, 17)
    q, _, _ = sp.poly.evaluate(2 * np.cos(theta))
    for i in range(1, m):
        np.testing.assert_allclose(q[i], 2 * np.cos(i * theta), rtol=0, atol=1e-12)
    np.testing.assert_allclose(sp.eigenvalues, 2 * np.cos(np.pi * np.arange(m + 1) / m), atol=1e-12)


def _walks(g, start, length):
    """Closed walks counted by explicit recursion over neighbour lists."""
    nbrs = [g.adjacency[v].indices for v in range(g.n_vertices)]

    def go(v, left):
        if left == 0:
            return int(v == start)
        return sum(go(w, left - 1) for w in nbrs[v])

    return go(start, length)


def test_moments_c4_walks():
    g = drg.build_cycle(2)
    _, jp, _ = drg.stratify(g)
    rep = spectra.moments_check(spectra.spectrum(jp), g, 4)
    assert rep.ok
    assert [r[1] for r in rep.rows] == [_walks(g, 0, m) for m in range(5)] == [1, 0, 2, 0, 8]
    assert rep.rows[2][2] == pytest.approx(2, abs=1e-12)


def test_moments_identity(family_case):
    _, _, g, jp, sp = family_case
    rep = spectra.moments_check(sp, g, 2 * jp.d)
    assert rep.ok, rep
    assert rep.rows[0][2] == pytest.approx(1.0, abs=1e-12)
    assert rep.rows[1][2] == pytest.approx(0.0, abs=1e-12)
    if g.n_vertices <= 8:
        for m, walks, _ in rep.rows[: 2 * jp.d + 1]:
            if m <= 6:
                assert walks == _walks(g, g.reference, m)


def test_moments_mismatch_reported():
    g = drg.build_cycle(3)
    wrong = spectra.spectrum(drg.family_jacobi("hypercube", 3))  # same d, different graph
    rep = spectra.moments_check(wrong, g, 6)
    assert not rep.ok
    assert rep.rows[2][1:] == (2.0, pytest.approx(3.0))


def test_degenerate_jacobi_rejected():
    # beta underflow makes the matrix numerically block-diagonal with repeated 0s.
    jp = drg.JacobiParams([0.0, 0.0, 0.0], [1e-40, 1e-40], [1, 1, 1])
    with pytest.raises(DegenerateJacobiError):
        spectra.spectrum(jp)


def jacobi_params(min_beta, max_alpha=3.0):
    return st.integers(1, 12).flatmap(
        lambda d: st.tuples(
            st.lists(st.floats(-max_alpha, max_alpha), min_size=d + 1, max_size=d + 1),
            st.lists(st.floats(min_beta, 3), min_size=d, max_size=d),
        )
    )


def _random_jacobi(params):
    alpha, beta = params
    return drg.JacobiParams.from_beta(alpha, beta, np.ones(len(alpha)))


@settings(max_examples=150, deadline=None)
@given(jacobi_params(0.05))
def test_bisection_matches_dense_eigensolver(params):
    jp = _random_jacobi(params)
    x = spectra.tridiagonal_eigenvalues(jp)
    ref = np.linalg.eigvalsh(jp.matrix())[::-1]
    np.testing.assert_allclose(x, ref, rtol=0, atol=1e-10 * max(1.0, np.abs(ref).max()))


@settings(max_examples=150, deadline=None)
@given(jacobi_params(0.5))
def test_random_jacobi_weights_match_first_components(params):
    # mu_k is the squared first component of the k-th unit eigenvector.
    jp = _random_jacobi(params)
    sp = spectra.spectrum(jp)
    _, u = np.linalg.eigh(jp.matrix())
    assert abs(sp.weights.sum() - 1) <= 1e-10
    np.testing.assert_allclose(sp.weights, (u[0] ** 2)[::-1], rtol=0, atol=1e-10)


@settings(max_examples=150, deadline=None)
@given(jacobi_params(0.5, max_alpha=1.0))
def test_random_jacobi_eigenvector_residual(params):
    # Forward evaluation of p_l is unstable once the diagonal varies strongly
    # against beta (localised eigenvectors), so the residual is only checked
    # in a mild regime.
    jp = _random_jacobi(params)
    sp = spectra.spectrum(jp)
    v = sp.eigenvectors
    assert np.linalg.norm(jp.matrix() @ v - v * sp.eigenvalues, axis=0).max() <= 1e-7
