import csv
import json
import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from babenko_solitary.babenko import (
    AdmissibilityError,
    BallEscapeError,
    ConvergenceError,
    PhysicalParams,
    SolverOptions,
    admissibility_check,
    apply_L,
    apply_linearized_values,
    babenko_residual,
    babenko_residual_values,
    bo_soliton,
    criticality_test,
    first_variation,
    fixed_point_solve,
    g_tilde,
    make_profile,
    rescale_to_physical,
    rescaled_residual,
    solve_L_even,
    solve_metadata,
    soliton_defect,
    truncation_floor,
    write_metadata,
    write_profile,
)
from babenko_solitary.spectral import GridFunction, hilbert, make_grid


def test_normalized_parameters():
    p = PhysicalParams.normalized(0.05)
    assert (p.g, p.gamma) == (1.0, -1.0)
    assert p.c == pytest.approx(1.05)
    assert p.sign_ok
    assert p.epsilon == pytest.approx(0.05, abs=1e-15)
    assert p.critical_velocity == 1.0
    assert p.max_height == pytest.approx(1.05**2 / 2)


def test_parameter_validation():
    with pytest.raises(ValueError):
        PhysicalParams(0.0, -1.0, 1.0)
    with pytest.raises(ValueError):
        PhysicalParams(1.0, 0.0, 1.0)
    assert not PhysicalParams(1.0, -1.0, 0.9).sign_ok


def test_solver_options_validation():
    with pytest.raises(ValueError):
        SolverOptions(fp_tolerance=0.0)
    with pytest.raises(ValueError):
        SolverOptions(max_iterations=0)


def test_g_tilde_vanishes_at_zero_and_rejects_negative(small_grid):
    rho = bo_soliton(small_grid)
    assert g_tilde(rho, 0.0).sup() == 0.0
    with pytest.raises(ValueError):
        g_tilde(rho, -0.1)


def test_rescaled_residual_of_rho_is_the_box_defect(grid):
    rho = bo_soliton(grid)
    np.testing.assert_array_equal(rescaled_residual(rho, 0.0).values, soliton_defect(grid).values)
    assert truncation_floor(grid) < 1e-3


@settings(max_examples=15, deadline=None)
@given(
    g=st.floats(0.5, 3.0),
    gamma=st.floats(-2.0, -0.3),
    eps=st.floats(0.01, 0.4),
    width=st.floats(0.5, 2.0),
)
def test_physical_residual_is_rescaled_residual(g, gamma, eps, width):
    # U(alpha) = a phi(b alpha) maps the physical residual to gamma^2 a^2 times the rescaled one,
    # for any even phi and any admissible (g, gamma, c).
    comp = make_grid(80.0, 1024)
    c = -g * (1 + eps) / gamma
    params = PhysicalParams(g, gamma, c)
    phi = GridFunction(comp, 3.0 * np.exp(-(comp.nodes / width) ** 2), "even")
    phys = comp.scaled(1.0 / params.width_scale)
    U = params.amplitude_scale * phi.values
    lhs = babenko_residual_values(phys, params, U)
    rhs = gamma**2 * params.amplitude_scale**2 * rescaled_residual(phi, params.epsilon).values
    np.testing.assert_allclose(lhs, rhs, atol=1e-10 * np.max(np.abs(rhs)))


def test_apply_L_kills_translation_mode(grid):
    a = grid.nodes
    drho = GridFunction(grid, grid.odd_part(-8 * a / (1 + a**2) ** 2), "odd")
    assert apply_L(drho).sup() < 1e-3


def test_solve_L_even_inverts_apply_L(small_grid):
    f = GridFunction(small_grid, np.exp(-small_grid.nodes**2), "even")
    w = solve_L_even(f)
    np.testing.assert_allclose(apply_L(w).values, f.values, atol=1e-11)
    with pytest.raises(ValueError):
        solve_L_even(GridFunction(small_grid, np.exp(-(small_grid.nodes - 1) ** 2)))


def test_fixed_point_plain_iteration(solutions, grid):
    sol = solutions(0.02)
    assert sol.iterations <= 200
    assert sol.rescaled_residual_sup <= 10 * truncation_floor(grid)
    assert sol.phi.parity == "even"
    gaps = np.array(sol.iterate_gaps)
    assert gaps[-1] < 1e-11
    # contraction: the gap sequence decreases geometrically after the first few steps
    assert np.all(np.diff(gaps[3:]) < 0)


def test_fixed_point_with_box_correction_solves_discrete_equation(solutions):
    sol = solutions(0.02, True)
    assert sol.rescaled_residual_sup < 1e-10


def test_fixed_point_zero_epsilon_is_rho(small_grid):
    sol = fixed_point_solve(0.0, small_grid, SolverOptions(torus_correction=True))
    np.testing.assert_allclose(sol.phi.values, bo_soliton(small_grid).values + sol.v.values)
    assert sol.rescaled_residual_sup < 1e-10


def test_fixed_point_errors(small_grid, caplog):
    with pytest.raises(ValueError):
        fixed_point_solve(-0.1, small_grid)
    with pytest.raises(ConvergenceError) as info:
        fixed_point_solve(0.05, small_grid, SolverOptions(max_iterations=3))
    assert len(info.value.record) == 3
    with pytest.raises(BallEscapeError):
        fixed_point_solve(0.05, small_grid, SolverOptions(ball_factor_k=1.0))
    with caplog.at_level(logging.WARNING), pytest.raises(ConvergenceError):
        fixed_point_solve(0.6, small_grid, SolverOptions(max_iterations=1))
    assert "soft cap" in caplog.text


def test_reconstruction_identities(profiles):
    prof = profiles(0.05)
    p = prof.params
    U = prof.U.values
    np.testing.assert_array_equal(prof.reW.values, hilbert(prof.U).values)
    np.testing.assert_allclose(prof.imQ.values, -0.5 * p.gamma * U**2 - p.c * U, atol=1e-15)
    H_U2 = hilbert(GridFunction(prof.grid, U**2, "even")).values
    np.testing.assert_allclose(prof.reQ.values, -p.c * prof.reW.values - 0.5 * p.gamma * H_U2, atol=1e-14)


def test_physical_residual_reported(profiles):
    prof = profiles(0.05)
    _, sup = babenko_residual(prof)
    assert sup == prof.babenko_residual_sup
    assert sup < 1e-6


def _trial_profile(grid, params, amp=0.06):
    b = params.width_scale
    U = GridFunction(grid, amp * 4 / (1 + (grid.nodes * b) ** 2), "even")
    return make_profile(params, U)


def test_linearized_operator_matches_directional_derivative(profiles):
    prof = profiles(0.05)
    grid, params, U = prof.grid, prof.params, prof.U.values
    w = np.exp(-(grid.nodes * params.width_scale) ** 2 / 4) * 0.05
    h = 1e-4
    fd = (babenko_residual_values(grid, params, U + h * w) - babenko_residual_values(grid, params, U - h * w)) / (2 * h)
    lin = apply_linearized_values(grid, params, U, w)
    np.testing.assert_allclose(lin, fd, atol=1e-9 * np.max(np.abs(lin)))


def test_linearized_operator_is_symmetric(profiles):
    prof = profiles(0.05)
    grid, params, U = prof.grid, prof.params, prof.U.values
    x = grid.nodes * params.width_scale
    w1, w2 = np.exp(-x**2 / 4), x**2 * np.exp(-x**2 / 9)
    a = grid.inner(w1, apply_linearized_values(grid, params, U, w2))
    b = grid.inner(apply_linearized_values(grid, params, U, w1), w2)
    assert a == pytest.approx(b, rel=1e-10)


def test_residual_is_gradient_of_lagrangian(grid):
    params = PhysicalParams.normalized(0.05)
    prof = _trial_profile(grid.scaled(1 / params.width_scale), params)
    R, _ = babenko_residual(prof)
    w = np.exp(-(prof.grid.nodes * params.width_scale) ** 2 / 8)
    dv = first_variation(prof, w, np.zeros_like(w))
    assert dv == pytest.approx(prof.grid.inner(R.values, w), rel=1e-6)


def test_criticality(profiles):
    prof = profiles(0.05, True)
    assert criticality_test(prof, 10, seed=0) <= 1e-6
    assert criticality_test(prof, 4, seed=1, component="Q") <= 1e-8
    with pytest.raises(ValueError):
        criticality_test(prof, fd_step=1.0)


def test_criticality_detects_non_solutions(grid):
    params = PhysicalParams.normalized(0.05)
    prof = _trial_profile(grid.scaled(1 / params.width_scale), params, amp=0.08)
    assert criticality_test(prof, 4) > 1e-4


def test_admissibility_and_rescaling_guards(solutions, profiles):
    ok, margin = admissibility_check(profiles(0.05))
    assert ok and 0.3 < margin < 0.4
    with pytest.raises(AdmissibilityError):
        rescale_to_physical(solutions(0.05), PhysicalParams(1.0, -1.0, 0.95))
    with pytest.raises(ValueError):
        rescale_to_physical(solutions(0.05), PhysicalParams.normalized(0.06))


def test_profile_and_metadata_output(tmp_path, solutions, profiles):
    sol, prof = solutions(0.05), profiles(0.05)
    write_profile(tmp_path / "p.csv", sol, prof)
    with open(tmp_path / "p.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["alpha", "phi", "v", "U", "imQ", "reW", "reQ"]
    assert len(rows) == prof.grid.size_n + 1
    meta = solve_metadata(sol, prof)
    write_metadata(tmp_path / "p.json", meta)
    loaded = json.loads((tmp_path / "p.json").read_text())
    assert set(loaded) == {"epsilon", "period_L", "size_n", "iterations", "rescaled_residual_sup",
                           "babenko_residual_sup", "x_norm_v", "height_margin", "sign_ok"}
    assert loaded["sign_ok"] is True
