import math
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from semiphoton import flows as fl
from semiphoton import propagators as pr
from semiphoton.fields import Grid, GridWarning, GridWavefunction, extended_wigner, spectral_derivative
from semiphoton.modes import mode_eval
from semiphoton.propagators import Chart, ChartedTime

GYR_L = math.sqrt(128 * math.pi / 2)


def _coherent2d(grid, c, h):
    return GridWavefunction.from_function(
        grid, lambda x, y: np.exp(-((x - c[0]) ** 2 + (y - c[1]) ** 2) / (2 * h)
                                  + 1j * (c[2] * x + c[3] * y) / h) / math.sqrt(math.pi * h))


def _means(f):
    """Phase-space centre ``(<x>, <y>, <hD_x>, <hD_y>)``."""
    g = f.grid
    x, y = g.mesh()
    w = np.abs(f.values) ** 2 * g.cell
    out = [np.sum(x * w), np.sum(y * w)]
    for ax in (0, 1):
        d = -1j * g.h * spectral_derivative(f.values, g, ax, 1)
        out.append((np.sum(d * np.conj(f.values)) * g.cell).real)
    return np.array(out)


# -- charts -----------------------------------------------------------------------

def test_charted_time_validation():
    assert ChartedTime(0.1, Chart.FREQUENCY).chart is Chart.FREQUENCY
    with pytest.raises(pr.ChartError):
        ChartedTime(math.pi / 2, Chart.FREQUENCY)
    with pytest.raises(pr.ChartError):
        ChartedTime(0.0, Chart.POSITION)


@given(st.floats(-10, 10))
def test_auto_chart_always_valid(t):
    ct = ChartedTime.auto(t)
    assert ChartedTime.valid(t, ct.chart)


# -- warm-up ----------------------------------------------------------------------------

@pytest.fixture(scope="module")
def warm():
    h = 0.5
    g = Grid((128, 128), (10.0, 10.0), h)
    return h, _coherent2d(g, (0.4, -0.3, 0.2, 0.5), h)


def test_warmup_identity_and_norm(warm):
    h, v = warm
    assert pr.warmup_propagator(v, 0.0, h) is v
    for t in (0.3, -0.5, 0.6):
        assert pr.warmup_propagator(v, t, h).norm() == pytest.approx(1.0, abs=1e-7)


def test_warmup_group_law(warm):
    h, v = warm
    a = pr.warmup_propagator(pr.warmup_propagator(v, 0.3, h), 0.4, h)
    b = pr.warmup_propagator(v, 0.7, h)
    assert a.distance(b) < 1e-9


def test_warmup_moves_centre_along_hyperbolic_flow(warm):
    h, v = warm
    c = np.array([0.4, -0.3, 0.2, 0.5])
    for t in (0.4, -0.6):
        assert np.allclose(_means(pr.warmup_propagator(v, t, h)), fl.hyperbolic_matrix(t) @ c, atol=1e-9)


def test_warmup_solves_pde(warm):
    h, v = warm
    res = pr.warmup_residual(v, 0.5, h)
    assert np.max(np.abs(res)) < 1e-6


def test_warmup_warns_when_solution_leaves_grid():
    h = 0.5
    g = Grid((64, 64), (5.0, 5.0), h)
    v = _coherent2d(g, (1.0, 1.0, 0.0, 0.0), h)
    with pytest.warns(GridWarning):
        pr.warmup_propagator(v, 1.5, h)
    with pytest.raises(ValueError):
        pr.warmup_propagator(GridWavefunction(Grid((64,), (5.0,), h), np.ones(64)), 0.1, h)


# -- gyrator ------------------------------------------------------------------------------

@pytest.fixture(scope="module")
def gyr_grid():
    return Grid((128, 128), (GYR_L, GYR_L), 1.0)


@pytest.mark.parametrize("t", [0.3, math.pi / 4, math.pi / 3, 2.0, -1.2])
def test_gyrator_norm_both_charts(gyr_grid, t):
    v = _coherent2d(gyr_grid, (1.0, -0.5, 0.7, -0.3), 1.0)
    for chart in Chart:
        if ChartedTime.valid(t, chart):
            assert pr.gyrator(v, ChartedTime(t, chart)).norm() == pytest.approx(1.0, abs=1e-7)


def test_gyrator_charts_agree(gyr_grid):
    v = _coherent2d(gyr_grid, (1.0, -0.5, 0.7, -0.3), 1.0) + mode_eval((2, 1), 1.0, gyr_grid) * 0.5
    for t in (math.pi / 3, 0.9, -0.7):
        a = pr.gyrator(v, ChartedTime(t, Chart.FREQUENCY))
        b = pr.gyrator(v, ChartedTime(t, Chart.POSITION))
        assert a.distance(b) < 1e-6


def test_gyrator_identity_and_centre(gyr_grid):
    c = np.array([1.0, -0.5, 0.7, -0.3])
    v = _coherent2d(gyr_grid, c, 1.0)
    assert pr.gyrator(v, ChartedTime(0.0, Chart.FREQUENCY)) is v
    for t in (0.6, 2.2):
        assert np.allclose(_means(pr.gyrator(v, ChartedTime.auto(t))), fl.gyrator_matrix(t) @ c, atol=1e-9)


def test_gyrator_group_law(gyr_grid):
    v = _coherent2d(gyr_grid, (0.5, 0.2, -0.4, 0.1), 1.0)
    a = pr.gyrator(pr.gyrator(v, ChartedTime.auto(0.5)), ChartedTime.auto(0.8))
    assert a.distance(pr.gyrator(v, ChartedTime.auto(1.3))) < 1e-9


def test_gyrator_hg_to_lg():
    g = Grid((256, 256), (math.sqrt(256 * math.pi / 2),) * 2, 1.0)
    for m, n in ((0, 0), (1, 0), (0, 1), (1, 1), (2, 1)):
        u = pr.gyrator(mode_eval((m, n), 1.0, g), ChartedTime(math.pi / 4, Chart.FREQUENCY))
        ref = extended_wigner(mode_eval((n, m), 1.0, g)) * (-1j) ** n
        assert u.distance(ref) < 1e-6
        u = pr.gyrator(mode_eval((m, n), 1.0, g), ChartedTime(-math.pi / 4, Chart.FREQUENCY))
        ref = extended_wigner(mode_eval((m, n), 1.0, g)) * (1j) ** n
        assert u.distance(ref) < 1e-6


def test_gyrator_requires_unit_h():
    g = Grid((64, 64), (6.0, 6.0), 0.5)
    with pytest.raises(ValueError):
        pr.gyrator(_coherent2d(g, (0, 0, 0, 0), 0.5), ChartedTime(0.3, Chart.FREQUENCY))


# -- first-order FIO for p0 ------------------------------------------------------------------

@pytest.fixture(scope="module")
def t0_setup():
    h = 0.1
    g = Grid((256,), (6.0,), h)
    return h, g, mode_eval((0, 0), h, g)


def test_t0_reference_solves_pde(t0_setup):
    h, g, v = t0_setup
    t, dt = 0.5, 1e-4
    u = pr.t0_reference(v, t, h)
    ut = (pr.t0_reference(v, t + dt, h).values - pr.t0_reference(v, t - dt, h).values) / (2 * dt)
    res = -1j * h * ut + pr.t0_operator(u)
    assert np.max(np.abs(res)) < 1e-7
    assert u.norm() == pytest.approx(1.0, abs=1e-10)


def test_t0_operator_symmetric(t0_setup):
    h, g, v = t0_setup
    w = mode_eval((3, 0), h, g) + GridWavefunction.from_function(g, lambda x: 0.3j * np.exp(-(x - 0.2) ** 2 / h))
    a = np.sum(pr.t0_operator(v) * np.conj(w.values)) * g.spacing[0]
    b = np.sum(v.values * np.conj(pr.t0_operator(w))) * g.spacing[0]
    assert abs(a - b) < 1e-10


def test_t0_fio_identity_at_zero(t0_setup):
    h, g, v = t0_setup
    r = pr.t0_fio(v, 0.0, h)
    assert r.u.distance(v) < 1e-12 and r.covered.all()


def test_t0_fio_short_time_accuracy(t0_setup):
    h, g, v = t0_setup
    r = pr.t0_fio(v, 0.2, h)
    assert (r.u - pr.t0_reference(v, 0.2, h)).norm() < 5e-4
    assert r.covered[np.abs(g.axes[0]) < 0.5].all()


def test_t0_fio_localization_gate(t0_setup):
    h, g, _ = t0_setup
    far = GridWavefunction.from_function(g, lambda x: np.exp(-(x - 3) ** 2 / (2 * h)) / (math.pi * h) ** 0.25)
    with pytest.raises(pr.LocalizationError):
        pr.t0_fio(far, 0.2, h)


def test_localization_mass(t0_setup):
    h, g, v = t0_setup
    assert pr.localization_mass(v, 4.5 * math.sqrt(h)) < 1e-6
    assert pr.localization_mass(v, 0.5 * math.sqrt(h)) > 0.5


# -- Q2 / Q1 --------------------------------------------------------------------------------

@pytest.fixture(scope="module")
def q2_setup():
    h = 0.1
    g = Grid((1024,), (8.0,), h)
    u0 = lambda x: np.exp(-(x - 0.3) ** 2 / (2 * h) + 0.5j * x / h) / (math.pi * h) ** 0.25
    return h, g, u0


def test_q2_identity_at_zero(q2_setup):
    h, g, u0 = q2_setup
    v = GridWavefunction.from_function(g, u0)
    assert np.array_equal(pr.q2_propagator(v, 0.0, h).u.values, v.values)


@pytest.mark.parametrize("t", [0.2, 0.5])
def test_q2_residual(q2_setup, t):
    h, g, u0 = q2_setup
    assert pr.q2_residual(u0, t, h, g) < 1e-5


def test_q2_grid_input_matches_callable_and_conserves_norm(q2_setup):
    h, g, u0 = q2_setup
    v = GridWavefunction.from_function(g, u0)
    a = pr.q2_propagator(v, 0.7, h).u
    b = pr.q2_propagator(u0, 0.7, h, g).u
    assert a.distance(b) < 1e-12
    # well before the singular point reaches the packet tail
    assert pr.q2_propagator(v, 0.5, h).u.norm() == pytest.approx(v.norm(), abs=1e-8)


def test_q2_singular_point_and_grid_requirement(q2_setup):
    h, g, u0 = q2_setup
    r = pr.q2_propagator(u0, 0.8, h, g)
    a = math.sqrt(5 * h)
    assert r.singular_point == pytest.approx(-a / math.tanh(0.8 * a))
    with pytest.raises(ValueError):
        pr.q2_propagator(u0, 0.8, h)


def test_q1_propagator_transport_equation():
    u0 = lambda y: np.exp(-y * y)
    t, d = 0.4, 1e-5
    x = np.linspace(-1.5, 1.5, 13)
    u = lambda tt, xx: pr.q1_propagator(u0, tt, xx)
    ut = (u(t + d, x) - u(t - d, x)) / (2 * d)
    ux = (u(t, x + d) - u(t, x - d)) / (2 * d)
    # u_t + x^2 u_x + x u = 0 is the continuity equation of the flow x' = x^2
    assert np.max(np.abs(ut + x * x * ux + x * u(t, x))) < 1e-8


@pytest.mark.parametrize("alpha,t", [(0.75, 1.0), (0.6, 2.0), (0.9, 0.5)])
def test_q1_probe_slope(alpha, t):
    assert pr.q1_singularity_probe(alpha, t) == pytest.approx(alpha - 1, abs=1e-3)


def test_q1_probe_errors():
    with pytest.raises(ValueError):
        pr.q1_singularity_probe(0.4, 1.0)
    with pytest.raises(ValueError):
        pr.q1_singularity_probe(0.75, 0.0)
    with pytest.raises(pr.FitError):
        pr.q1_singularity_probe(0.75, 1.0, eps=(1e-3, 1e-5))


@pytest.mark.parametrize("alpha", [0.6, 0.75, 0.9])
def test_q1_norm_conserved_and_closed_form(alpha):
    ref = float(mpmath.sqrt(mpmath.pi) * mpmath.gamma(alpha - 0.5) / mpmath.gamma(alpha))
    assert pr.q1_norm(alpha, 0.0) == pytest.approx(ref, rel=1e-10)
    assert pr.q1_norm(alpha, 1.0) == pytest.approx(ref, rel=1e-8)


# -- symbols and Egorov --------------------------------------------------------------------

def test_symbol_parsing():
    s = pr.symbol("xieta", 2)
    assert s.Q[2, 3] == 1 and s.Q[3, 2] == 1 and s.Q.sum() == 2
    assert pr.symbol("x2").Q[0, 0] == 2
    assert pr.symbol("xxi").Q[0, 1] == 1
    assert pr.symbol("1").c == 1
    z = np.array([0.3, -0.2, 0.5, 0.7])
    assert pr.symbol("xeta", 2)(z) == pytest.approx(0.3 * 0.7)
    for bad in ("q", "xxx", "x2y"):
        with pytest.raises(ValueError):
            pr.symbol(bad, 2)


def test_apply_weyl_symmetric_product():
    h = 0.2
    g = Grid((256,), (6.0,), h)
    f = GridWavefunction.from_function(g, lambda x: np.exp(-(x - 0.3) ** 2 / h + 0.4j * x / h))
    x = g.axes[0]
    hd = lambda u: -1j * h * spectral_derivative(u, g, 0, 1)
    ref = 0.5 * (x * hd(f.values) + hd(x * f.values))
    assert np.max(np.abs(pr.apply_weyl(pr.symbol("xxi"), f) - ref)) < 1e-10
    assert np.max(np.abs(pr.apply_weyl(pr.symbol("xi2"), f) - hd(hd(f.values)))) < 1e-9


def test_egorov_gyrator_exact(gyr_grid):
    f = _coherent2d(gyr_grid, (1.0, -0.5, 0.7, -0.3), 1.0)
    g = mode_eval((1, 0), 1.0, gyr_grid)
    for s in ("x", "eta", "xy", "xieta", "x2"):
        assert pr.egorov_check(s, 0.7, 1.0, f, g, "GYRATOR").deviation < 1e-6


def test_egorov_t0_order():
    devs = []
    for h in (0.1, 0.05):
        g = Grid((256,), (6.0,), h)
        c = 0.5 * math.sqrt(h)
        f = GridWavefunction.from_function(
            g, lambda x: np.exp(-(x - c) ** 2 / (2 * h) + 1j * c * x / h) / (math.pi * h) ** 0.25)
        devs.append(pr.egorov_check("x", 0.5, h, f, f, "T0").deviation)
    assert math.log2(devs[0] / devs[1]) >= 1


def test_egorov_errors(gyr_grid):
    f = mode_eval((0, 0), 1.0, gyr_grid)
    with pytest.raises(ValueError):
        pr.egorov_check("x", 0.5, 0.5, f, f, "GYRATOR")
    with pytest.raises(ValueError):
        pr.egorov_check("x", 0.5, 1.0, f, f, "T9")
