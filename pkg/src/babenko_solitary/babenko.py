"""Solitary waves of the constant-vorticity Babenko equation.

The physical profile ``U = Im W`` solves

    (g + c gamma - c^2 |D|) U = - gamma^2/2 U^2 - g U |D|U - g/2 |D|U^2
                                + gamma^2/2 (U |D|U^2 - U^2 |D|U - 1/3 |D|U^3).

Writing ``U(alpha) = a phi(b alpha)`` with ``a = |g + c gamma| / gamma^2`` and
``b = |g + c gamma| / c^2`` turns it into a perturbation of the Benjamin-Ono
soliton equation

    -phi - |D|phi + phi^2/2 = g_eps(phi),

where ``eps = |g + c gamma| / g`` and ``g_eps`` collects the terms carrying
``eps/(1+eps)^2`` and ``eps^2/(1+eps)^2``.  Around ``rho = 4/(1+alpha^2)`` the
correction ``v = phi - rho`` is the fixed point of

    v  ->  L^{-1}(-v^2/2 + g_eps(rho + v)),      L = -1 - |D| + rho,

with ``L`` inverted on even functions only.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .linsolve import LinearSolveError, solve_even
from .spectral import (
    Grid,
    GridFunction,
    NormSpec,
    hilbert,
    norm,
    write_columns_csv,
    x_norm,
)

LOGGER = logging.getLogger(__name__)

EPSILON_SOFT_CAP = 0.5


class SolverError(RuntimeError):
    """Fixed-point iteration failed; ``record`` holds the iterate gaps so far."""

    def __init__(self, message: str, record: list[float] | None = None):
        super().__init__(message)
        self.record = list(record or [])


class ConvergenceError(SolverError):
    pass


class BallEscapeError(SolverError):
    """Iterate left the ball ``||v||_X <= k eps`` (contraction regime lost)."""


class AdmissibilityError(ValueError):
    pass


# -- parameters ------------------------------------------------------------------


@dataclass(frozen=True)
class PhysicalParams:
    """Gravity ``g``, vorticity ``gamma`` and wave speed ``c``."""

    g: float
    gamma: float
    c: float

    def __post_init__(self):
        if not self.g > 0:
            raise ValueError(f"gravity must be positive, got {self.g}")
        if self.gamma == 0:
            raise ValueError("vorticity must be nonzero")

    @classmethod
    def normalized(cls, epsilon: float) -> "PhysicalParams":
        """``g = 1, gamma = -1, c = 1 + eps``."""
        return cls(1.0, -1.0, 1.0 + epsilon)

    @property
    def detuning(self) -> float:
        """``g + c gamma``; negative on the solitary-wave side."""
        return self.g + self.c * self.gamma

    @property
    def sign_ok(self) -> bool:
        return self.detuning < 0

    @property
    def epsilon(self) -> float:
        return abs(self.detuning) / self.g

    @property
    def amplitude_scale(self) -> float:
        return abs(self.detuning) / self.gamma**2

    @property
    def width_scale(self) -> float:
        return abs(self.detuning) / self.c**2

    @property
    def critical_velocity(self) -> float:
        return -self.g / self.gamma

    @property
    def max_height(self) -> float:
        return self.c**2 / (2 * self.g)

    def with_velocity(self, c: float) -> "PhysicalParams":
        return replace(self, c=c)


@dataclass(frozen=True)
class SolverOptions:
    """Controls of the rescaled fixed-point iteration.

    ``torus_correction`` subtracts the periodic-box defect of ``rho`` from the
    forcing, so the iteration converges to the exact solution of the discrete
    equation on the torus instead of leaving that defect in the residual.
    """

    ball_factor_k: float = 1000.0
    eta: float = 0.1
    fp_tolerance: float = 1e-11
    max_iterations: int = 500
    linear_solve_tolerance: float = 1e-12
    torus_correction: bool = False

    def __post_init__(self):
        for name in ("ball_factor_k", "eta", "fp_tolerance", "linear_solve_tolerance"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


# -- the soliton and the rescaled equation --------------------------------------


def bo_soliton_values(alpha: np.ndarray) -> np.ndarray:
    return 4.0 / (1.0 + alpha**2)


def bo_soliton(grid: Grid) -> GridFunction:
    """Benjamin-Ono soliton ``4 / (1 + alpha^2)`` sampled at the nodes."""
    return GridFunction(grid, bo_soliton_values(grid.nodes), "even")


def _operator(grid: Grid, extended: bool):
    return grid.modD_extended if extended else grid.modD


def bo_residual_values(grid: Grid, phi: np.ndarray, extended: bool = False) -> np.ndarray:
    if extended:
        phi = np.asarray(phi, dtype=np.longdouble)
    return -phi - _operator(grid, extended)(phi) + 0.5 * phi**2


def soliton_defect(grid: Grid) -> GridFunction:
    """Pointwise defect of ``-rho - |D|rho + rho^2/2`` on the torus."""
    return GridFunction(grid, grid.even_part(bo_residual_values(grid, bo_soliton_values(grid.nodes))), "even")


def truncation_floor(grid: Grid) -> float:
    """Sup norm of the soliton defect; the accuracy limit of the box."""
    return soliton_defect(grid).sup()


def _g_tilde(grid: Grid, phi: np.ndarray, epsilon: float, extended: bool = False) -> np.ndarray:
    D = _operator(grid, extended)
    if extended:
        phi = np.asarray(phi, dtype=np.longdouble)
        epsilon = np.longdouble(epsilon)
    phi2 = phi * phi
    Dphi = D(phi)
    Dphi2 = D(phi2)
    s = (1 + epsilon) ** 2
    quad = -phi * Dphi - 0.5 * Dphi2
    cubic = 0.5 * phi * Dphi2 - 0.5 * phi2 * Dphi - D(phi2 * phi) / 6.0
    return (epsilon / s) * quad + (epsilon**2 / s) * cubic


def g_tilde(phi: GridFunction, epsilon: float) -> GridFunction:
    """Right side of the rescaled equation (terms of order eps and eps^2)."""
    if epsilon < 0:
        raise ValueError(f"epsilon must be nonnegative, got {epsilon}")
    return _clean_like(phi, _g_tilde(phi.grid, phi.values, epsilon))


def rescaled_residual(phi: GridFunction, epsilon: float, extended: bool = False) -> GridFunction:
    """``-phi - |D|phi + phi^2/2 - g_eps(phi)`` evaluated from scratch.

    ``extended`` evaluates in long double before rounding the result.
    """
    grid = phi.grid
    r = bo_residual_values(grid, phi.values, extended) - _g_tilde(grid, phi.values, epsilon, extended)
    return _clean_like(phi, np.asarray(r, dtype=float))


def _clean_like(f: GridFunction, values: np.ndarray) -> GridFunction:
    if f.parity == "even":
        values = f.grid.even_part(values)
    return GridFunction(f.grid, values, "even" if f.parity == "even" else "none")


def apply_L(w: GridFunction) -> GridFunction:
    """``L w = -w - |D|w + rho w``."""
    grid = w.grid
    out = _apply_L_values(grid, bo_soliton_values(grid.nodes), w.values)
    if w.parity == "even":
        return GridFunction(grid, grid.even_part(out), "even")
    if w.parity == "odd":
        return GridFunction(grid, grid.odd_part(out), "odd")
    return GridFunction(grid, out)


def _apply_L_values(grid: Grid, rho: np.ndarray, w: np.ndarray) -> np.ndarray:
    return -w - grid.modD(w) + rho * w


def solve_L_even(f: GridFunction, tol: float = 1e-12) -> GridFunction:
    """Even solution of ``L w = f``.

    Preconditioned by the exact inverse of ``1 + |D|``; raises
    :class:`~babenko_solitary.linsolve.LinearSolveError` if the relative
    residual cannot be pushed below ``tol``.
    """
    grid = f.grid
    if f.parity != "even":
        defect = float(np.max(np.abs(f.values - f.values[grid.reflect_index])))
        if defect > 1e-12 * max(1.0, f.sup()):
            raise ValueError("solve_L_even requires an even right-hand side")
    rho = bo_soliton_values(grid.nodes)
    w = solve_even(grid, lambda x: _apply_L_values(grid, rho, x), 1.0 + grid.xi, f.values, tol=tol)
    return GridFunction(grid, w, "even")


# -- fixed point ----------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SolitonSolution:
    epsilon: float
    grid: Grid
    phi: GridFunction
    v: GridFunction
    iterations: int
    iterate_gaps: tuple[float, ...]
    rescaled_residual_sup: float
    x_norm_v: float
    options: SolverOptions = field(default_factory=SolverOptions)
    warning: str | None = None

    @property
    def truncation_floor(self) -> float:
        return truncation_floor(self.grid)

    def metadata(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "period_L": self.grid.period_L,
            "size_n": self.grid.size_n,
            "iterations": self.iterations,
            "rescaled_residual_sup": self.rescaled_residual_sup,
            "x_norm_v": self.x_norm_v,
        }


def fixed_point_solve(epsilon: float, grid: Grid, opts: SolverOptions | None = None) -> SolitonSolution:
    """Solve the rescaled equation by Picard iteration around ``rho``.

    Starting from ``v = 0`` the update ``v <- L^{-1}(-v^2/2 + g_eps(rho+v))``
    is repeated until the X-norm gap between iterates drops below
    ``opts.fp_tolerance``.

    Raises
    ------
    ConvergenceError
        ``max_iterations`` reached without meeting the tolerance.
    BallEscapeError
        An iterate left the ball of radius ``ball_factor_k * eps`` (plus the
        X-norm of the pure box correction when ``torus_correction`` is set).
    """
    opts = opts or SolverOptions()
    if epsilon < 0:
        raise ValueError(f"epsilon must be nonnegative, got {epsilon}")
    warning = None
    if epsilon > EPSILON_SOFT_CAP:
        warning = f"epsilon={epsilon} beyond the small-amplitude regime (soft cap {EPSILON_SOFT_CAP})"
        LOGGER.warning(warning)

    rho = bo_soliton_values(grid.nodes)
    defect = bo_residual_values(grid, rho) if opts.torus_correction else 0.0
    radius = opts.ball_factor_k * epsilon

    def apply_L_even(x):
        return _apply_L_values(grid, rho, x)

    if opts.torus_correction:
        # the box correction alone is O(1) in X because of the periodic wrap
        box = solve_even(grid, apply_L_even, 1.0 + grid.xi, -grid.even_part(defect), tol=opts.linear_solve_tolerance)
        radius += 2 * x_norm(box, grid, opts.eta)

    v = np.zeros(grid.size_n)
    gaps: list[float] = []
    for it in range(1, opts.max_iterations + 1):
        rhs = grid.even_part(-0.5 * v * v + _g_tilde(grid, rho + v, epsilon) - defect)
        try:
            v_new = solve_even(grid, apply_L_even, 1.0 + grid.xi, rhs, tol=opts.linear_solve_tolerance)
        except LinearSolveError as exc:
            raise ConvergenceError(f"linear solve failed at iteration {it}: {exc}", gaps) from exc
        gap = x_norm(v_new - v, grid, opts.eta)
        gaps.append(gap)
        v = v_new
        size = x_norm(v, grid, opts.eta)
        if size > radius:
            raise BallEscapeError(f"||v||_X = {size:.4g} exceeds ball radius {radius:.4g} at iteration {it}", gaps)
        if gap < opts.fp_tolerance:
            break
    else:
        raise ConvergenceError(f"no convergence in {opts.max_iterations} iterations (last gap {gaps[-1]:.3e})", gaps)

    phi = GridFunction(grid, rho + v, "even")
    residual = rescaled_residual(phi, epsilon)
    LOGGER.info("eps=%g converged in %d iterations, residual %.3e", epsilon, it, residual.sup())
    return SolitonSolution(
        epsilon=float(epsilon),
        grid=grid,
        phi=phi,
        v=GridFunction(grid, v, "even"),
        iterations=it,
        iterate_gaps=tuple(gaps),
        rescaled_residual_sup=residual.sup(),
        x_norm_v=x_norm(v, grid, opts.eta),
        options=opts,
        warning=warning,
    )


# -- physical variables ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PhysicalProfile:
    """Physical solitary wave: ``W = reW + i U`` and ``Q = reQ + i imQ``."""

    params: PhysicalParams
    U: GridFunction
    imQ: GridFunction | None = None
    reW: GridFunction | None = None
    reQ: GridFunction | None = None
    babenko_residual_sup: float | None = None

    @property
    def grid(self) -> Grid:
        return self.U.grid

    def sup_U(self) -> float:
        return float(np.max(self.U.values))


def make_profile(params: PhysicalParams, U: GridFunction) -> PhysicalProfile:
    """Profile with ``W, Q`` reconstructed and the Babenko residual evaluated."""
    prof = reconstruct_WQ(PhysicalProfile(params, U))
    _, sup = babenko_residual(prof)
    return replace(prof, babenko_residual_sup=sup)


def rescale_to_physical(sol: SolitonSolution, params: PhysicalParams) -> PhysicalProfile:
    """Map the rescaled profile ``phi`` to ``U(alpha) = a phi(b alpha)``.

    The physical grid has the same nodes as the computational one stretched
    by ``1/b``, so no resampling is needed.
    """
    if not params.sign_ok:
        raise AdmissibilityError(f"sign condition g + c gamma < 0 violated ({params.detuning:.4g})")
    if abs(sol.epsilon - params.epsilon) > 1e-12:
        raise ValueError(f"solution epsilon {sol.epsilon} does not match parameters ({params.epsilon})")
    grid = sol.grid.scaled(1.0 / params.width_scale)
    U = GridFunction(grid, params.amplitude_scale * sol.phi.values, "even")
    return make_profile(params, U)


def reconstruct_WQ(profile: PhysicalProfile) -> PhysicalProfile:
    """Fill ``reW = H U``, ``imQ = -gamma/2 U^2 - c U`` and ``reQ = H imQ``."""
    U = profile.U
    grid = U.grid
    if U.parity != "even":
        defect = float(np.max(np.abs(U.values - U.values[grid.reflect_index])))
        if defect > 1e-12 * max(1.0, U.sup()):
            raise ValueError(f"U is not even (defect {defect:.3e})")
        U = GridFunction(grid, grid.even_part(U.values), "even")
    p = profile.params
    imQ = GridFunction(grid, -0.5 * p.gamma * U.values**2 - p.c * U.values, "even")
    reW = hilbert(U)
    reQ = hilbert(imQ)
    return replace(profile, U=U, imQ=imQ, reW=reW, reQ=reQ)


def babenko_residual_values(grid: Grid, params: PhysicalParams, U: np.ndarray, extended: bool = False) -> np.ndarray:
    g, gm, c = params.g, params.gamma, params.c
    D = _operator(grid, extended)
    if extended:
        U = np.asarray(U, dtype=np.longdouble)
        g, gm, c = np.longdouble(g), np.longdouble(gm), np.longdouble(c)
    U2 = U * U
    DU = D(U)
    DU2 = D(U2)
    DU3 = D(U2 * U)
    lhs = (g + c * gm) * U - c**2 * DU
    rhs = -0.5 * gm**2 * U2 - g * U * DU - 0.5 * g * DU2 + 0.5 * gm**2 * (U * DU2 - U2 * DU - DU3 / 3.0)
    return lhs - rhs


def babenko_residual(profile: PhysicalProfile, extended: bool = False) -> tuple[GridFunction, float]:
    """Pointwise defect (left minus right side) and its sup norm.

    ``extended`` evaluates in long double before rounding the result.
    """
    grid = profile.grid
    r = np.asarray(babenko_residual_values(grid, profile.params, profile.U.values, extended), dtype=float)
    if profile.U.parity == "even":
        res = GridFunction(grid, grid.even_part(r), "even")
    else:
        res = GridFunction(grid, r)
    return res, res.sup()


def apply_linearized_values(grid: Grid, params: PhysicalParams, U: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Linearization of the Babenko residual at ``U`` applied to ``w``."""
    g, gm, c = params.g, params.gamma, params.c
    D = grid.modD
    U2 = U * U
    DU = D(U)
    DU2 = D(U2)
    Dw = D(w)
    out = (g + c * gm + gm**2 * U) * w - c**2 * Dw
    out += g * (U * Dw + DU * w + D(U * w))
    out -= 0.5 * gm**2 * (2 * U * D(U * w) + w * DU2 - U2 * Dw - 2 * U * w * DU - D(U2 * w))
    return out


def apply_linearized(profile: PhysicalProfile, w: GridFunction) -> GridFunction:
    out = apply_linearized_values(profile.grid, profile.params, profile.U.values, w.values)
    return GridFunction(w.grid, w.grid.even_part(out) if w.parity == "even" else out,
                        "even" if w.parity == "even" else "none")


def linearized_preconditioner(grid: Grid, params: PhysicalParams) -> np.ndarray:
    """Positive symbol ``|g + c gamma| + c^2 |xi|`` approximating ``|L_U|``."""
    return abs(params.detuning) + params.c**2 * grid.xi


# -- functionals ---------------------------------------------------------------------


def _functional_terms(grid: Grid, params: PhysicalParams, U: np.ndarray, Q: np.ndarray):
    g, gm = params.g, params.gamma
    D = grid.modD
    DQ = D(Q)
    DU = D(U)
    U2 = U * U
    energy = 0.5 * grid.integrate(DQ * Q + g * U2 * (1 + DU) + gm * DQ * U2 + gm**2 / 3 * U2 * U * (1 + DU))
    flux = grid.integrate(DQ * U)
    shear = 0.5 * gm * grid.integrate(U2 * (1 + DU))
    return energy, flux, shear


def functionals(profile: PhysicalProfile) -> tuple[float, float]:
    """Total energy and horizontal momentum by rectangle-rule quadrature."""
    E, flux, shear = _functional_terms(profile.grid, profile.params, profile.U.values, profile.imQ.values)
    return E, -(flux + shear)


def momentum_pieces(profile: PhysicalProfile) -> tuple[float, float]:
    """``(int |D|ImQ U, gamma/2 int U^2 (1 + |D|U))``; momentum is minus their sum."""
    _, flux, shear = _functional_terms(profile.grid, profile.params, profile.U.values, profile.imQ.values)
    return flux, shear


def lagrangian(profile: PhysicalProfile, U: np.ndarray, Q: np.ndarray) -> float:
    E, flux, shear = _functional_terms(profile.grid, profile.params, U, Q)
    return E + profile.params.c * (flux + shear)


def first_variation(profile: PhysicalProfile, w1: np.ndarray, w2: np.ndarray, fd_step: float = 1e-5) -> float:
    """Centered difference of ``E - c P`` along ``(w1, w2)`` at ``s = 0``."""
    U, Q = profile.U.values, profile.imQ.values
    plus = lagrangian(profile, U + fd_step * w1, Q + fd_step * w2)
    minus = lagrangian(profile, U - fd_step * w1, Q - fd_step * w2)
    return (plus - minus) / (2 * fd_step)


def random_even_directions(grid: Grid, count: int, scale: float, seed: int = 0, modes: int = 6):
    """Smooth even bumps ``exp(-x^2/8) sum_j a_j cos(j x / 2)`` with ``x = scale alpha``."""
    rng = np.random.default_rng(seed)
    x = scale * grid.nodes
    envelope = np.exp(-x**2 / 8)
    out = []
    for _ in range(count):
        a = rng.standard_normal((2, modes))
        pair = [grid.even_part(envelope * (np.cos(np.outer(x, np.arange(modes)) / 2) @ a[i])) for i in range(2)]
        out.append(tuple(pair))
    return out


def criticality_test(
    profile: PhysicalProfile,
    n_directions: int = 10,
    fd_step: float = 1e-5,
    seed: int = 0,
    component: str = "both",
) -> float:
    """Largest normalized first variation of ``E - c P`` over random directions.

    ``component`` selects which of ``(U, Im Q)`` is perturbed: ``"both"``,
    ``"U"`` or ``"Q"``.  Each derivative is divided by the H^1 norm of the
    perturbation pair.
    """
    if not 1e-7 <= fd_step <= 1e-4:
        raise ValueError("fd_step must lie in [1e-7, 1e-4]")
    grid = profile.grid
    p = profile.params
    scale = p.width_scale if p.sign_ok else 1.0
    worst = 0.0
    h1 = NormSpec("Hk", k=1)
    for w1, w2 in random_even_directions(grid, n_directions, scale, seed):
        if component == "U":
            w2 = np.zeros_like(w2)
        elif component == "Q":
            w1 = np.zeros_like(w1)
        size = np.hypot(norm(GridFunction(grid, w1), h1), norm(GridFunction(grid, w2), h1))
        worst = max(worst, abs(first_variation(profile, w1, w2, fd_step)) / size)
    return worst


def admissibility_check(profile: PhysicalProfile) -> tuple[bool, float]:
    """``(g + c gamma < 0, c^2/(2g) - sup U)``."""
    p = profile.params
    return p.sign_ok, p.max_height - profile.sup_U()


# -- output ----------------------------------------------------------------------------


def write_profile(path, sol: SolitonSolution, profile: PhysicalProfile) -> None:
    """CSV with columns ``alpha, phi, v, U, imQ, reW, reQ`` on the physical nodes."""
    write_columns_csv(path, {
        "alpha": profile.grid.nodes,
        "phi": sol.phi.values,
        "v": sol.v.values,
        "U": profile.U.values,
        "imQ": profile.imQ.values,
        "reW": profile.reW.values,
        "reQ": profile.reQ.values,
    })


def solve_metadata(sol: SolitonSolution, profile: PhysicalProfile) -> dict:
    sign_ok, margin = admissibility_check(profile)
    return {
        "epsilon": sol.epsilon,
        "period_L": sol.grid.period_L,
        "size_n": sol.grid.size_n,
        "iterations": sol.iterations,
        "rescaled_residual_sup": sol.rescaled_residual_sup,
        "babenko_residual_sup": profile.babenko_residual_sup,
        "x_norm_v": sol.x_norm_v,
        "height_margin": margin,
        "sign_ok": sign_ok,
    }


def write_metadata(path, meta: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")
