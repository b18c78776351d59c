import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.polynomial.hermite import hermval

from semiphoton.fields import Grid, GridWarning, GridWavefunction, spectral_derivative
from semiphoton.modes import (ModeIndex, ModeVector, apply_diag38, apply_t0_1d, apply_t4, apply_t5,
                              beta, hermite_function, mode_eval, mode_project, mode_superposition,
                              project_n)

small = st.integers(min_value=0, max_value=12)


@pytest.mark.parametrize("m,n,expected", [
    (0, 0, 0.5), (2, 0, -math.sqrt(3) / 2), (3, 0, -2.0), (4, 0, -1.5 * math.sqrt(5)),
    (1, 1, -1 / math.sqrt(2)), (2, 1, -math.sqrt(3)), (1, 0, 0.0), (0, 1, 0.0),
])
def test_beta_matrix_entries(m, n, expected):
    assert beta(m, n) == pytest.approx(expected, abs=1e-15)


@given(small, small)
def test_beta_vanishes_on_antidiagonal(m, n):
    assert (beta(m, n) == 0) == (m + n == 1)


def test_beta_rejects_negative():
    with pytest.raises(ValueError):
        beta(-1, 0)


def test_mode_index_validation():
    with pytest.raises(ValueError):
        ModeIndex(-1, 0)
    assert ModeIndex(2.0, 1).m == 2


def test_mode_vector_drops_zeros_and_merges():
    v = ModeVector.from_items([((1, 0), 1.0), ((1, 0), -1.0), ((2, 3), 2j)])
    assert len(v) == 1 and v[2, 3] == 2j
    with pytest.raises(ValueError):
        ModeVector({(0, 0): float("nan")})


@given(st.lists(st.tuples(small, small, st.floats(-3, 3), st.floats(-3, 3)), max_size=6),
       st.lists(st.tuples(small, small, st.floats(-3, 3), st.floats(-3, 3)), max_size=6))
def test_t4_symmetric(a, b):
    u = ModeVector.from_items(((m, n), x + 1j * y) for m, n, x, y in a)
    v = ModeVector.from_items(((m, n), x + 1j * y) for m, n, x, y in b)
    assert abs(apply_t4(u).inner(v) - u.inner(apply_t4(v))) < 1e-9
    assert abs(apply_t5(u).inner(v) - u.inner(apply_t5(v))) < 1e-9


def test_t0_couplings_match_beta():
    for m in range(10):
        out = apply_t0_1d(ModeVector.basis(m))
        assert out[m + 1] == pytest.approx(beta(m, 0), abs=1e-14)
        if m:
            assert out[m - 1] == pytest.approx(beta(m - 1, 0), abs=1e-14)
    with pytest.raises(ValueError):
        apply_t0_1d(ModeVector.basis(0, 1))


def test_diag38_eigenvalue_and_projection():
    v = ModeVector({(3, 2): 1.0, (0, 1): 2.0})
    assert apply_diag38(v)[3, 2] == pytest.approx(3.5)
    assert project_n(v, 1).coeffs == {ModeIndex(0, 1): 2.0}


@pytest.mark.parametrize("h", [1.0, 0.1])
def test_hermite_function_matches_physicists_polynomials(h):
    x = np.linspace(-3, 3, 41) * math.sqrt(h)
    rows = hermite_function(8, x, h)
    for m in range(9):
        c = np.zeros(m + 1)
        c[m] = 1.0
        ref = hermval(x / math.sqrt(h), c) * np.exp(-x ** 2 / (2 * h)) / math.sqrt(
            2 ** m * math.factorial(m) * math.sqrt(math.pi * h))
        assert np.allclose(rows[m], ref, atol=1e-12)


def test_ground_state_peak_at_h1():
    g = Grid((128, 128), (8.0, 8.0))
    f = mode_eval((0, 0), 1.0, g)
    assert np.max(np.abs(f.values)) == pytest.approx(1 / math.sqrt(math.pi), rel=1e-12)


def test_modes_orthonormal_on_grid():
    g = Grid((256,), (8.0,), 0.25)
    fs = [mode_eval((m, 0), 0.25, g) for m in range(6)]
    gram = np.array([[a.inner(b) for b in fs] for a in fs])
    assert np.allclose(gram, np.eye(6), atol=1e-12)


def test_mode_eval_warnings():
    with pytest.warns(GridWarning):
        mode_eval((0, 0), 0.01, Grid((16,), (4.0,)))
    with pytest.warns(GridWarning):
        mode_eval((20, 0), 1.0, Grid((512,), (3.0,)))
    with pytest.raises(ValueError):
        mode_eval((0, 1), 1.0, Grid((64,), (6.0,)))


def test_mode_project_roundtrip():
    h = 0.2
    g = Grid((256,), (6.0,), h)
    v = ModeVector({0: 0.6, 3: 0.8j})
    with warnings.catch_warnings():
        warnings.simplefilter("error", GridWarning)
        f = mode_superposition(v, h, g)
    assert mode_project(f, h, 10).allclose(v, atol=1e-12)


def _t4_differential(f: GridWavefunction, h: float) -> np.ndarray:
    """``x((hD_x)^2 + (hD_y)^2 + x^2 + y^2)/2 - 5hx/2 - i h^2 D_x / 2`` with ``D = -i d/dx``."""
    x, y = f.grid.mesh()
    u = f.values
    lap = spectral_derivative(u, f.grid, 0, 2) + spectral_derivative(u, f.grid, 1, 2)
    kin = -h * h * lap + (x ** 2 + y ** 2) * u
    return 0.5 * x * kin - 2.5 * h * x * u - 0.5 * h * h * spectral_derivative(u, f.grid, 0, 1)


@pytest.mark.parametrize("idx", [(0, 0), (1, 0), (2, 1), (3, 2)])
def test_t4_matches_differential_operator(idx):
    h = 0.25
    g = Grid((128, 128), (5.0, 5.0), h)
    f = mode_eval(idx, h, g)
    lhs = _t4_differential(f, h)
    rhs = -math.sqrt(2) * h ** 1.5 * mode_superposition(apply_t4(ModeVector.basis(*idx)), h, g).values
    assert np.max(np.abs(lhs - rhs)) < 1e-10
