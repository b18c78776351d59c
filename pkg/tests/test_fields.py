import json
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from semiphoton import fields as fd
from semiphoton.fields import Grid, GridWarning, GridWavefunction
from semiphoton.modes import mode_eval


def _gauss(grid, x0=0.3, p0=0.5, h=None):
    h = grid.h if h is None else h
    return GridWavefunction.from_function(
        grid, lambda x: (math.pi * h) ** -0.25 * np.exp(-(x - x0) ** 2 / (2 * h) + 1j * p0 * x / h))


def test_grid_validation_and_dual():
    g = Grid((64,), (4.0,), 0.5)
    assert g.spacing[0] == pytest.approx(8.0 / 64)
    assert g.axes[0][0] == -4.0 and g.axes[0][-1] == pytest.approx(4.0 - 0.125)
    assert g.dual().extent[0] == pytest.approx(64 * math.pi * 0.5 / 8.0)
    assert g.dual().dual() == g
    with pytest.raises(ValueError):
        Grid((63,), (4.0,))
    with pytest.raises(ValueError):
        Grid((64,), (-1.0,))


def test_norm_inner_distance():
    g = Grid((256,), (6.0,), 0.2)
    f = _gauss(g)
    assert f.norm() == pytest.approx(1.0, abs=1e-12)
    assert f.inner(f * 2j) == pytest.approx(-2j, abs=1e-12)
    assert (f - f).norm() == 0 and f.distance(f * -1) == pytest.approx(2.0)


def test_sft_of_gaussian_analytic():
    h = 0.2
    g = Grid((256,), (6.0,), h)
    x0, p0 = 0.3, 0.5
    F = fd.sft(_gauss(g, x0, p0))
    xi = F.grid.axes[0]
    # int exp(-i x xi/h) exp(-(x-x0)^2/2h + i p0 x/h) dx = sqrt(2 pi h) exp(-i x0 (xi-p0)/h - (xi-p0)^2/2h)
    ref = (math.pi * h) ** -0.25 * math.sqrt(2 * math.pi * h) * np.exp(
        -1j * x0 * (xi - p0) / h - (xi - p0) ** 2 / (2 * h))
    assert np.max(np.abs(F.values - ref)) < 1e-12


@given(st.floats(-1, 1), st.floats(-1, 1))
@settings(max_examples=20, deadline=None)
def test_sft_roundtrip_and_plancherel(x0, p0):
    g = Grid((128,), (6.0,), 0.3)
    f = _gauss(g, x0, p0)
    F = fd.sft(f, check=False)
    assert np.allclose(fd.isft(F, g).values, f.values, atol=1e-13)
    assert F.norm() ** 2 / (2 * math.pi * g.h) == pytest.approx(f.norm() ** 2, rel=1e-12)


def test_sft_warns_on_edge_mass():
    g = Grid((64,), (2.0,), 1.0)
    with pytest.warns(GridWarning):
        fd.sft(_gauss(g, 0.0, 0.0))
    with pytest.raises(ValueError):
        fd.isft(fd.sft(_gauss(g, 0.0, 0.0), check=False), Grid((64,), (3.0,), 1.0))


def test_spectral_derivative_of_gaussian():
    g = Grid((128,), (8.0,), 1.0)
    x = g.axes[0]
    u = np.exp(-x ** 2)
    assert np.max(np.abs(fd.spectral_derivative(u, g, 0, 1) + 2 * x * u)) < 1e-11
    assert np.max(np.abs(fd.spectral_derivative(u, g, 0, 2) - (4 * x * x - 2) * u)) < 1e-10


def test_wigner_of_coherent_state():
    h = 0.2
    g = Grid((256,), (6.0,), h)
    x0, p0 = 0.3, -0.4
    W = fd.wigner(_gauss(g, x0, p0))
    X, XI = np.meshgrid(W.x, W.xi, indexing="ij")
    ref = 2 * np.exp(-((X - x0) ** 2 + (XI - p0) ** 2) / h)
    assert np.max(np.abs(W.values - ref)) < 1e-10


def test_wigner_marginals_and_pairing():
    h = 0.2
    g = Grid((256,), (6.0,), h)
    f = _gauss(g, 0.3, -0.4) * 0.6 + mode_eval((1, 0), h, g) * 0.8j
    f = f * (1 / f.norm())
    W = fd.wigner(f)
    assert W.integrate(lambda x, xi: np.ones_like(x)).real == pytest.approx(1.0, abs=1e-10)
    x = g.axes[0]
    mean_x2 = float(np.sum(x * x * np.abs(f.values) ** 2) * g.spacing[0])
    assert fd.weyl_pairing(W, lambda x, xi: x * x).real == pytest.approx(mean_x2, abs=1e-10)
    # <hD f, f> from the spectral derivative against the xi moment
    hd = -1j * h * fd.spectral_derivative(f.values, g, 0, 1)
    mean_xi = complex(np.sum(hd * np.conj(f.values)) * g.spacing[0])
    assert W.integrate(lambda x, xi: xi) == pytest.approx(mean_xi, abs=1e-10)


def test_cross_wigner_hermitian_symmetry():
    h = 0.2
    g = Grid((128,), (5.0,), h)
    a, b = _gauss(g, 0.2, 0.1), mode_eval((2, 0), h, g)
    assert np.allclose(fd.wigner(a, b).values, np.conj(fd.wigner(b, a).values), atol=1e-12)
    assert fd.wigner(a, b).integrate(lambda x, xi: np.ones_like(x)) == pytest.approx(a.inner(b), abs=1e-10)


def test_fourier_rotate_matches_analytic():
    g = Grid((64, 64), (6.0, 6.0), 1.0)
    a, b = g.mesh()
    F = lambda u, v: np.exp(-(u - 0.5) ** 2 - 2 * (v + 0.3) ** 2)
    th = 0.6
    out = fd.fourier_rotate(F(a, b), g, th)
    c, s = math.cos(th), math.sin(th)
    ref = F(c * a - s * b, s * a + c * b)
    assert np.max(np.abs(out - ref)) < 1e-10


def test_extended_wigner_of_ground_state_is_ground_state():
    g = Grid((128, 128), (math.sqrt(128 * math.pi / 2),) * 2, 1.0)
    f = mode_eval((0, 0), 1.0, g)
    assert fd.extended_wigner(f).distance(f) < 1e-10


def test_extended_wigner_against_quadrature():
    g = Grid((64, 64), (8.0, 8.0), 1.0)
    F = lambda u, v: np.exp(-(u - 0.4) ** 2 / 2 - (v + 0.2) ** 2 / 1.5)
    f = GridWavefunction.from_function(g, F)
    out = fd.extended_wigner(f)
    i, j = 42, 35
    x, y = g.axes[0][i], g.axes[1][j]
    p = np.linspace(-12, 12, 4001)
    vals = np.exp(1j * p * y) * F((x + p) / math.sqrt(2), (x - p) / math.sqrt(2))
    ref = np.trapezoid(vals, p) / math.sqrt(2 * math.pi)
    assert out.values[i, j] == pytest.approx(ref, abs=1e-10)


def test_partial_fourier_of_gaussian():
    g = Grid((64, 64), (8.0, 8.0), 1.0)
    f = GridWavefunction.from_function(g, lambda x, p: np.exp(-x * x / 2 - p * p / 2))
    out = fd.partial_fourier(f)
    x, y = g.mesh()
    assert np.max(np.abs(out.values - np.exp(-x * x / 2 - y * y / 2))) < 1e-12
    with pytest.raises(ValueError):
        fd.partial_fourier(GridWavefunction.from_function(Grid((64, 64), (6.0, 6.0), 0.5),
                                                          lambda x, p: x * 0))


def test_json_roundtrip_and_layout(tmp_path):
    g = Grid((8, 4), (2.0, 1.0), 0.3)
    vals = np.arange(32).reshape(8, 4) * (1 + 0.5j)
    f = GridWavefunction(g, vals)
    doc = json.loads(fd.to_json(f))
    assert doc["format"] == "semiphoton.gridwf" and doc["version"] == 1
    assert doc["points"] == [8, 4] and doc["samples"][2:4] == [1.0, 0.5]
    p = tmp_path / "f.json"
    fd.save(f, p)
    back = fd.load(p)
    assert back.grid == g and np.array_equal(back.values, vals)


@pytest.mark.parametrize("mutate", [
    lambda d: d.update(format="other"),
    lambda d: d.update(version=99),
    lambda d: d.update(samples=d["samples"][:-2]),
    lambda d: d.update(spacing=[1.0, 1.0]),
])
def test_json_rejects_bad_documents(mutate):
    f = GridWavefunction(Grid((8, 4), (2.0, 1.0), 0.3), np.ones((8, 4)))
    doc = json.loads(fd.to_json(f))
    mutate(doc)
    with pytest.raises(ValueError):
        fd.from_json(json.dumps(doc))


def test_fourier_interpolate():
    g = Grid((128,), (8.0,), 1.0)
    f = GridWavefunction.from_function(g, lambda x: np.exp(-x * x / 2 + 0.7j * x))
    pts = np.array([-1.234, 0.0, 0.5, 2.71828, 9.0])
    ref = np.exp(-pts ** 2 / 2 + 0.7j * pts)
    ref[-1] = 0.0
    assert np.max(np.abs(fd.fourier_interpolate(f, pts) - ref)) < 1e-12


def test_same_grid_required():
    a = GridWavefunction(Grid((8,), (1.0,)), np.ones(8))
    b = GridWavefunction(Grid((8,), (2.0,)), np.ones(8))
    with pytest.raises(ValueError):
        a.inner(b)
