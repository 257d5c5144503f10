import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from babenko_solitary.spectral import (
    GridError,
    GridFunction,
    NormSpec,
    apply_derivative,
    apply_modD,
    fourier_interpolate,
    hilbert,
    make_grid,
    multiply_alpha,
    norm,
    parity_defect,
    project_parity,
    solve_one_plus_modD,
    write_columns_csv,
    x_norm,
)


@pytest.mark.parametrize("L, n", [(0.0, 64), (-1.0, 64), (10.0, 100), (10.0, 32)])
def test_make_grid_rejects_bad_sizes(L, n):
    with pytest.raises(GridError):
        make_grid(L, n)


def test_nodes_and_reflection(small_grid):
    g = small_grid
    assert g.nodes[0] == -g.period_L / 2
    assert g.nodes[g.center] == 0.0
    np.testing.assert_allclose(g.nodes[g.reflect_index][1:], -g.nodes[1:])


def _mode(g, k, fn=np.cos):
    return fn(2 * np.pi * k * g.nodes / g.period_L)


@pytest.mark.parametrize("k", [1, 5, 37])
def test_multipliers_on_single_modes(small_grid, k):
    g = small_grid
    xi = 2 * np.pi * k / g.period_L
    c, s = _mode(g, k), _mode(g, k, np.sin)
    np.testing.assert_allclose(g.modD(c), xi * c, atol=1e-12)
    np.testing.assert_allclose(g.deriv(c), -xi * s, atol=1e-12)
    # H has symbol -i sgn(xi): cos -> sin, sin -> -cos.
    np.testing.assert_allclose(g.hilbert(c), s, atol=1e-12)
    np.testing.assert_allclose(g.hilbert(s), -c, atol=1e-12)
    np.testing.assert_allclose(g.inv_one_plus_modD(c), c / (1 + xi), atol=1e-12)


def test_modD_is_derivative_of_hilbert(small_grid):
    g = small_grid
    f = np.exp(-g.nodes**2)
    np.testing.assert_allclose(g.modD(f), g.deriv(g.hilbert(f)), atol=1e-12)


def test_gridfunction_validates_parity(small_grid):
    g = small_grid
    GridFunction(g, np.exp(-g.nodes**2), "even")
    with pytest.raises(ValueError):
        GridFunction(g, np.exp(-(g.nodes - 1) ** 2), "even")
    with pytest.raises(ValueError):
        GridFunction(g, np.full(g.size_n, np.nan))


def test_parity_of_operator_outputs(small_grid):
    g = small_grid
    f = GridFunction(g, np.exp(-g.nodes**2), "even")
    assert apply_modD(f).parity == "even"
    assert apply_derivative(f).parity == "odd"
    assert hilbert(f).parity == "odd"
    assert solve_one_plus_modD(f).parity == "even"
    assert multiply_alpha(f).parity == "odd"
    assert parity_defect(g, hilbert(f).values, "odd") <= 1e-14


def test_project_parity_splits(small_grid):
    g = small_grid
    f = GridFunction(g, np.exp(-(g.nodes - 0.5) ** 2))
    e, o = project_parity(f, "even"), project_parity(f, "odd")
    np.testing.assert_allclose(e.values + o.values, f.values, atol=1e-15)


def test_l2_norm_of_gaussian_matches_closed_form(grid):
    f = GridFunction(grid, np.exp(-grid.nodes**2), "even")
    assert norm(f, NormSpec("Hk", k=0)) == pytest.approx(np.sqrt(np.sqrt(np.pi / 2)), rel=1e-12)


def test_h1_norm_of_gaussian_matches_closed_form(grid):
    # |f|^2 + |f'|^2 for exp(-a^2): sqrt(pi/2) (1 + 1)
    f = GridFunction(grid, np.exp(-grid.nodes**2), "even")
    assert norm(f, NormSpec("Hk", k=1)) ** 2 == pytest.approx(np.sqrt(np.pi / 2) * 2, rel=1e-10)


def test_x_norm_includes_weighted_part(grid):
    f = np.exp(-grid.nodes**2)
    h2 = norm(GridFunction(grid, f, "even"), NormSpec("Hk", k=2))
    assert x_norm(f, grid, 0.0) == pytest.approx(h2)
    assert x_norm(f, grid, 0.1) > h2


def test_normspec_validation():
    with pytest.raises(ValueError):
        NormSpec("Hk", k=5)
    with pytest.raises(ValueError):
        NormSpec("Hk_sigma", k=1, sigma=3)


def test_fourier_interpolation_is_exact_for_band_limited_data(small_grid):
    g = small_grid
    values = _mode(g, 3) + 0.5 * _mode(g, 7, np.sin)
    pts = np.linspace(-20, 20, 57) + 0.123
    L = g.period_L
    exact = np.cos(2 * np.pi * 3 * pts / L) + 0.5 * np.sin(2 * np.pi * 7 * pts / L)
    np.testing.assert_allclose(fourier_interpolate(g, values, pts), exact, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.2, 5.0), st.floats(-3.0, 3.0), st.floats(-3.0, 3.0))
def test_modD_linear_and_nonnegative(width, a, b):
    g = make_grid(64.0, 512)
    f = np.exp(-(g.nodes / width) ** 2)
    h = np.exp(-((g.nodes - 1) / width) ** 2)
    np.testing.assert_allclose(g.modD(a * f + b * h), a * g.modD(f) + b * g.modD(h), atol=1e-11)
    assert g.inner(f, g.modD(f)) >= 0


def test_csv_has_header_and_17_digits(tmp_path):
    path = tmp_path / "c.csv"
    write_columns_csv(path, {"x": np.array([1 / 3]), "y": np.array([2.0])})
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["x", "y"]
    assert float(rows[1][0]) == 1 / 3
    assert len(rows[1][0].replace("0.", "", 1)) == 17


def test_extended_modD_agrees_with_float64(small_grid):
    g = small_grid
    f = np.exp(-g.nodes**2)
    np.testing.assert_allclose(np.asarray(g.modD_extended(f), dtype=float), g.modD(f), atol=1e-14)
