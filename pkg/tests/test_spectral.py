import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from semiphoton import spectral as sp
from semiphoton.fields import Grid, spectral_derivative
from semiphoton.modes import ModeVector, beta, hermite_function


def _random_seq(rng, L=50):
    return rng.normal(size=L) + 1j * rng.normal(size=L)


@pytest.mark.parametrize("n", [0, 1, 2, 3, 7])
def test_green_formula(rng, n):
    for _ in range(5):
        g, f = _random_seq(rng), _random_seq(rng)
        for M in (5, 20, 47):
            assert abs(sp.green_lhs(g, f, n, M) + sp.bracket(g, f, n, M)) < 1e-12


@given(st.integers(0, 9), st.integers(20, 200))
def test_wronskian_constant(n, M):
    b = sp.boundary_sequences(n, M)
    s = sp.start_index(n)
    w = sp.brackets(b.u, b.v, n)[s:M + 1]
    assert np.max(np.abs(w - w[0])) < 1e-12
    assert abs(w[0] - 1.0) < 1e-12


@pytest.mark.parametrize("n", [0, 1, 2, 4])
def test_boundary_sequences_solve_zero_energy(n):
    b = sp.boundary_sequences(n, 40)
    s = sp.start_index(n)
    for y in (b.u, b.v):
        Ty = sp.jacobi_apply(y, n)
        assert np.max(np.abs(Ty[s + 1:40])) < 1e-12


@pytest.mark.parametrize("n,z", [(2, 1j), (3, -1j), (0, 0.5 + 2j), (1, 1j)])
def test_polynomial_solution_eigen_relation(n, z):
    P = sp.polynomial_solution(n, z, 30)
    s = sp.start_index(n)
    TP = sp.jacobi_apply(P, n)
    assert np.max(np.abs((TP - z * P)[s:29])) < 1e-9 * np.max(np.abs(P))


def test_start_index():
    assert [sp.start_index(n) for n in range(4)] == [2, 1, 0, 0]
    with pytest.raises(ValueError):
        sp.start_index(-1)


def test_deficiency_tail_monotone_and_conjugate_symmetric():
    a = sp.deficiency_tail(2, 1j, 200)
    b = sp.deficiency_tail(2, -1j, 200)
    assert np.all(np.diff(a.partial_sums) >= 0)
    assert np.allclose(a.partial_sums, b.partial_sums, rtol=1e-13)
    assert a.M == 200 and a.partial_sums[0] == 1.0
    with pytest.raises(ValueError):
        sp.deficiency_tail(2, 1.0, 10)


def test_deficiency_terms_decay_like_power():
    r = sp.deficiency_tail(2, 1j, 800)
    terms = np.diff(r.partial_sums)
    slope = np.polyfit(np.log(np.arange(400, 800)), np.log(terms[399:799]), 1)[0]
    early = np.polyfit(np.log(np.arange(100, 200)), np.log(terms[99:199]), 1)[0]
    assert slope == pytest.approx(-1.5, abs=0.1)
    assert slope < early
    # the limit extrapolated from M=800 agrees with the one from M=400
    r2 = sp.deficiency_tail(2, 1j, 400)
    assert abs(r.extrapolated - r2.extrapolated) < 1e-3 * abs(r.extrapolated)


@pytest.mark.parametrize("n", [2, 3, 6])
def test_berezanskii_bound_against_mpmath(n):
    rep = sp.berezanskii_check(n, 400)
    j = np.arange(sp.start_index(n), 1000)
    c_n = 2 * max([1.0] + [(jj + 1) / (jj + n - 1) for jj in j])
    assert rep.bound == pytest.approx(c_n * float(mpmath.zeta(1.5)), rel=1e-12)
    assert rep.bound_holds and rep.partial_bound_ok
    assert rep.inv_sum_partial == pytest.approx(sum(-1 / beta(int(jj), n) for jj in j[:400]), rel=1e-12)


def test_gamma_boundary_finite_sequence_vanishes():
    f = np.zeros(120, dtype=complex)
    f[:10] = 1.0
    bv = sp.gamma_boundary(f, 2, 100)
    assert bv.gamma1 == 0 and bv.gamma2 == 0 and bv.converged


def test_gamma_boundary_rejects_short_input():
    with pytest.raises(ValueError):
        sp.gamma_boundary(np.ones(10), 2, 50)


def test_extension_residual_cases():
    f = np.ones(5, dtype=complex)
    assert sp.extension_residual(f, 2, 0.3, 40) == 0
    b = sp.boundary_sequences(2, 60)
    g = b.u[:62].astype(complex)
    assert abs(sp.extension_residual(g, 2, sp.INFINITY, 50)) < 1e-12
    # [u, v] = 1, so the residual of u for h_n is exactly 1
    assert abs(sp.extension_residual(g, 2, 0.7, 50) - 1.0) < 1e-12


def test_extension_residual_zero_combination():
    n, M = 2, 300
    Pp = sp.polynomial_solution(n, 1j, M + 2)
    Pm = sp.polynomial_solution(n, -1j, M + 2)
    rp = sp.extension_residual(Pp, n, 0.0, M)
    rm = sp.extension_residual(Pm, n, 0.0, M)
    f = rm * Pp - rp * Pm
    assert abs(sp.extension_residual(f, n, 0.0, M)) < 1e-6 * max(abs(rp), abs(rm)) ** 2


# -- truncated-basis propagator ---------------------------------------------------------

def _expected(gen, m, h, t):
    w = math.sqrt(h / 2) * t
    c, s = math.cos(w), math.sin(w)
    table = {
        ("T4", 0): {(0, 0): c, (1, 0): -1j * s},
        ("T5", 0): {(0, 0): c, (1, 0): -s},
        ("T38", 0): {(0, 0): np.exp(1j * w)},
        ("T4", 1): {(1, 0): c, (0, 0): -1j * s},
        ("T5", 1): {(1, 0): c, (0, 0): s},
        ("T38", 1): {(1, 0): np.exp(-1j * w)},
    }
    return ModeVector(table[gen, m])


@pytest.mark.parametrize("h", [0.05, 0.1, 0.2])
@pytest.mark.parametrize("gen", ["T4", "T5", "T38"])
@pytest.mark.parametrize("m", [0, 1])
def test_two_mode_identities(h, gen, m):
    for t in (0.3, 1.7, math.pi / math.sqrt(2 * h)):
        got = sp.truncated_propagator(gen, t, h, ModeVector.basis(m))
        assert got.allclose(_expected(gen, m, h, t), atol=1e-10)


@given(st.floats(0.02, 0.2), st.floats(-0.5, 0.5), st.integers(0, 6), st.integers(2, 4))
@settings(max_examples=25, deadline=None)
def test_truncated_propagator_unitary(h, t, m, n):
    v = ModeVector({(m, n): 0.6, (m + 1, n): 0.8j})
    out = sp.truncated_propagator("T4", t, h, v)
    assert out.norm() == pytest.approx(1.0, abs=1e-10)


def test_truncated_propagator_identity_at_zero():
    v = ModeVector({(3, 2): 1.0, (0, 0): 2j})
    assert sp.truncated_propagator("T4", 0.0, 0.1, v).allclose(v, atol=1e-14)


def test_truncated_propagator_matches_expm_on_small_block():
    h, t = 0.1, 0.8
    H = sp.generator_matrix("T4", h, 3, 300)
    ref = expm(1j * t * H / h)[:, 1]
    got = sp.truncated_propagator("T4", t, h, ModeVector.basis(1, 3))
    assert np.max(np.abs(np.array([got[m, 3] for m in range(300)]) - ref)) < 1e-10


def test_leakage_error():
    # cubic growth of the couplings lets mass reach the truncation edge in finite time
    with pytest.raises(sp.TruncationLeakageError):
        sp.truncated_propagator("T4", 400.0, 0.5, ModeVector.basis(0, 3), N_max=64)


def test_unknown_generator():
    with pytest.raises(ValueError):
        sp.generator_matrix("T9", 0.1, 0, 10)


def test_t0_matrix_matches_differential_operator():
    """The ``T0`` matrix represents ``x(x^2 + (hD)^2)/2 - 3hx/2 - i h^2 D / 2``."""
    h = 0.2
    g = Grid((512,), (7.0,), h)
    x = g.axes[0]
    H = sp.generator_matrix("T0", h, 0, 12)
    rows = hermite_function(12, x, h)
    for m in range(8):
        u = rows[m]
        op = (0.5 * x * (x ** 2 * u - h * h * spectral_derivative(u, g, 0, 2))
              - 1.5 * h * x * u - 0.5 * h * h * spectral_derivative(u, g, 0, 1))
        ref = rows[:12].T @ H[:, m]
        assert np.max(np.abs(op - ref)) < 1e-9
