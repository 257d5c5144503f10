"""Continuation of solitary waves in the wave speed.

Given ``U1`` solving the Babenko equation at speed ``c1``, the profile at
``c2`` is ``U2 = U1 + w`` where

    L_{U1} w = -(c2 - c1)(gamma - (c2 + c1)|D|)(U1 + w) - Q(w) - R_{c1}(U1).

``L_{U1}`` is the linearized Babenko operator, ``Q`` collects every term with
at least two factors of ``w`` and ``R_{c1}(U1)`` is the residual of the
starting profile, which vanishes for an exact solution and otherwise absorbs
the resampling error when ``U1`` is moved to the natural grid of ``c2``.
"""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .babenko import (
    AdmissibilityError,
    ConvergenceError,
    PhysicalParams,
    PhysicalProfile,
    SolverOptions,
    apply_linearized_values,
    babenko_residual_values,
    bo_soliton_values,
    linearized_preconditioner,
    make_profile,
)
from .linsolve import LinearSolveError, solve_even
from .spectral import Grid, GridFunction, fourier_interpolate, sobolev_sq, x_norm
from .spectrum import linearized_spectrum

LOGGER = logging.getLogger(__name__)

STOP_REASONS = (
    "reached_target",
    "interval_infinite_cap",
    "norm_blowup",
    "height_margin_collapse",
    "eigenvalue_collapse",
    "step_underflow",
)


class StepError(RuntimeError):
    """A single continuation step failed."""


# -- the difference equation -----------------------------------------------------


def nonlinear_part(grid: Grid, params: PhysicalParams, U: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Terms of ``R_c(U + w) - R_c(U)`` that are at least quadratic in ``w``."""
    g, gm = params.g, params.gamma
    D = grid.modD
    w2 = w * w
    Dw = D(w)
    Dw2 = D(w2)
    out = 0.5 * gm**2 * w2 + g * w * Dw + 0.5 * g * Dw2
    cubic = (
        U * Dw2
        + 2 * w * D(U * w)
        + w * Dw2
        - w2 * D(U)
        - 2 * U * w * Dw
        - w2 * Dw
        - D(U * w2)
        - D(w2 * w) / 3.0
    )
    return out - 0.5 * gm**2 * cubic


def speed_forcing(grid: Grid, params: PhysicalParams, c2: float, f: np.ndarray) -> np.ndarray:
    """``-(c2 - c1)(gamma - (c2 + c1)|D|) f`` with ``c1 = params.c``."""
    c1 = params.c
    return -(c2 - c1) * (params.gamma * f - (c2 + c1) * grid.modD(f))


def natural_grid(base: Grid, params: PhysicalParams) -> Grid:
    """Physical grid whose nodes are those of ``base`` stretched by ``1/b``."""
    return base.scaled(1.0 / params.width_scale)


def computational_grid(profile: PhysicalProfile) -> Grid:
    return profile.grid.scaled(profile.params.width_scale)


def regrid_profile(profile: PhysicalProfile, grid: Grid) -> PhysicalProfile:
    """Resample ``U`` on another grid by trigonometric interpolation."""
    if grid is profile.grid or (grid.period_L == profile.grid.period_L and grid.size_n == profile.grid.size_n):
        return profile
    values = fourier_interpolate(profile.grid, profile.U.values, grid.nodes)
    return make_profile(profile.params, GridFunction(grid, grid.even_part(values), "even"))


def continuation_step(
    U1: PhysicalProfile,
    c2: float,
    opts: SolverOptions | None = None,
    base_grid: Grid | None = None,
) -> PhysicalProfile:
    """Profile at speed ``c2`` obtained by Picard iteration on the increment.

    ``U1`` is first moved to the natural grid of ``c2`` (``base_grid`` is the
    computational grid; it defaults to the one ``U1`` lives on).  The update
    ``w <- L_{U1}^{-1}(...)`` starts from ``w = 0`` and stops when the X-norm
    gap falls below ``opts.fp_tolerance`` times ``max(1, ||U1||_X)``.

    Raises
    ------
    AdmissibilityError
        ``U1`` or the target speed violates the sign or height condition.
    StepError
        Picard iteration or a linear solve failed.
    """
    opts = opts or SolverOptions()
    p1 = U1.params
    if not p1.sign_ok:
        raise AdmissibilityError(f"starting profile violates the sign condition ({p1.detuning:.4g})")
    margin = p1.max_height - U1.sup_U()
    if margin <= 0:
        raise AdmissibilityError(f"starting profile exceeds the maximal height (margin {margin:.4g})")
    p2 = p1.with_velocity(c2)
    if not p2.sign_ok:
        raise AdmissibilityError(f"target speed {c2} violates the sign condition ({p2.detuning:.4g})")

    base = base_grid or computational_grid(U1)
    grid = natural_grid(base, p2)
    start = regrid_profile(U1, grid)
    U = start.U.values
    defect = babenko_residual_values(grid, p1, U)
    forcing0 = speed_forcing(grid, p1, c2, U) - defect
    symbol = linearized_preconditioner(grid, p1)

    def apply_op(x):
        return apply_linearized_values(grid, p1, U, x)

    scale = max(1.0, x_norm(U, grid, opts.eta))
    w = np.zeros(grid.size_n)
    for it in range(1, opts.max_iterations + 1):
        rhs = forcing0 + speed_forcing(grid, p1, c2, w) - nonlinear_part(grid, p1, U, w)
        try:
            w_new = solve_even(grid, apply_op, symbol, rhs, tol=opts.linear_solve_tolerance)
        except LinearSolveError as exc:
            raise StepError(f"linearized solve failed at iteration {it}: {exc}") from exc
        gap = x_norm(w_new - w, grid, opts.eta)
        w = w_new
        if not np.isfinite(gap) or gap > 1e3 * scale:
            raise StepError(f"increment diverged at iteration {it} (gap {gap:.3e})")
        if gap < opts.fp_tolerance * scale:
            break
    else:
        raise StepError(f"no convergence in {opts.max_iterations} iterations (last gap {gap:.3e})")

    U2 = make_profile(p2, GridFunction(grid, grid.even_part(U + w), "even"))
    margin2 = p2.max_height - U2.sup_U()
    if margin2 <= 0:
        raise AdmissibilityError(f"maximal height exceeded at c={c2} (margin {margin2:.4g})")
    return U2


# -- branch tracing ----------------------------------------------------------------


@dataclass(frozen=True)
class BranchControls:
    """Step law ``dc = safety * min(margin * s1, |lambda| * s2, s3 / ||U||_X)``.

    The floors decide when a diagnostic counts as collapsed; ``norm_growth_cap``
    bounds ``||v||_X / eps`` relative to its value at the start of the branch.
    """

    safety: float = 0.5
    s1: float = 0.05
    s2: float = 0.5
    s3: float = 0.05
    max_step: float = 0.01
    min_step: float = 1e-5
    margin_floor: float = 1e-3
    eigenvalue_floor: float = 1e-4
    norm_growth_cap: float = 4.0
    velocity_cap_factor: float = 100.0
    residual_tolerance: float = 1e-7
    spectrum_modes: int = 1024
    max_points: int = 500


@dataclass(frozen=True)
class BranchPoint:
    c: float
    epsilon: float
    sup_U: float
    x_norm: float
    x_norm_v: float
    residual: float
    lambda_min: float
    height_margin: float
    step_used: float
    lipschitz: float | None = None

    def to_dict(self) -> dict:
        return {
            "c": self.c,
            "epsilon": self.epsilon,
            "sup_U": self.sup_U,
            "x_norm": self.x_norm,
            "x_norm_v": self.x_norm_v,
            "residual": self.residual,
            "lambda_min": self.lambda_min,
            "height_margin": self.height_margin,
            "step_used": self.step_used,
            "lipschitz": self.lipschitz,
        }


@dataclass(frozen=True, eq=False)
class Branch:
    g: float
    gamma: float
    points: tuple[BranchPoint, ...]
    stop_reason: str
    controls: BranchControls = field(default_factory=BranchControls)
    profiles: tuple[PhysicalProfile, ...] = field(default=(), repr=False)
    message: str = ""

    def __post_init__(self):
        if self.stop_reason not in STOP_REASONS:
            raise ValueError(f"unknown stop reason {self.stop_reason!r}")

    def to_dict(self) -> dict:
        return {
            "g": self.g,
            "gamma": self.gamma,
            "points": [p.to_dict() for p in self.points],
            "stop_reason": self.stop_reason,
            "message": self.message,
            "controls": asdict(self.controls),
        }

    def write_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["c", "sup_U", "lambda_min", "height_margin"])
            for p in self.points:
                writer.writerow([f"{x:.17g}" for x in (p.c, p.sup_U, p.lambda_min, p.height_margin)])


def rescaled_correction(profile: PhysicalProfile) -> np.ndarray:
    """``v = U(alpha / b) / a - rho`` on the computational nodes."""
    p = profile.params
    comp = computational_grid(profile)
    return profile.U.values / p.amplitude_scale - bo_soliton_values(comp.nodes)


def point_diagnostics(profile: PhysicalProfile, controls: BranchControls, eta: float) -> dict:
    p = profile.params
    report = linearized_spectrum(profile, modes=controls.spectrum_modes)
    comp = computational_grid(profile)
    return {
        "sup_U": profile.sup_U(),
        "x_norm": x_norm(profile.U.values, profile.grid, eta),
        "x_norm_v": x_norm(rescaled_correction(profile), comp, eta),
        "residual": float(profile.babenko_residual_sup),
        "lambda_min": float(report.lambda_min_nontrivial),
        "height_margin": p.max_height - profile.sup_U(),
    }


def step_cap(diag: dict, controls: BranchControls) -> float:
    """Largest admissible speed increment for the next step."""
    cap = min(
        diag["height_margin"] * controls.s1,
        abs(diag["lambda_min"]) * controls.s2,
        controls.s3 / max(diag["x_norm"], 1e-300),
    )
    return min(controls.safety * cap, controls.max_step)


def _h2_distance(a: PhysicalProfile, b: PhysicalProfile) -> float:
    values = regrid_profile(a, b.grid).U.values
    return float(np.sqrt(sobolev_sq(b.grid, b.U.values - values, 2)))


def trace_branch(
    start: PhysicalProfile,
    c_target: float,
    controls: BranchControls | None = None,
    opts: SolverOptions | None = None,
) -> Branch:
    """Follow the branch from ``start`` toward ``c_target``.

    Every accepted point has its Babenko residual evaluated from scratch and
    its even ``L_U`` spectrum recomputed.  A failed step is retried at half
    the size; termination is always reported through ``stop_reason``.
    """
    controls = controls or BranchControls()
    opts = opts or SolverOptions()
    p0 = start.params
    base = computational_grid(start)
    direction = float(np.sign(c_target - p0.c))
    c_cap = controls.velocity_cap_factor * p0.g / abs(p0.gamma)

    def finish(reason, message=""):
        LOGGER.info("branch stopped: %s %s", reason, message)
        return Branch(p0.g, p0.gamma, tuple(points), reason, controls, tuple(profiles), message)

    points: list[BranchPoint] = []
    profiles: list[PhysicalProfile] = []

    margin0 = p0.max_height - start.sup_U()
    if margin0 <= controls.margin_floor:
        return finish("height_margin_collapse", f"height margin {margin0:.4g} at entry")
    if not p0.sign_ok:
        return finish("step_underflow", "sign condition violated at entry")

    diag = point_diagnostics(start, controls, opts.eta)
    points.append(BranchPoint(p0.c, p0.epsilon, step_used=0.0, **diag))
    profiles.append(start)
    ratio0 = diag["x_norm_v"] / max(p0.epsilon, 1e-300)
    current = start
    if direction == 0:
        return finish("reached_target")

    while len(points) < controls.max_points:
        c1 = current.params.c
        dc = step_cap(diag, controls)
        remaining = abs(c_target - c1)
        dc = min(dc, remaining)
        new = None
        while dc >= controls.min_step or (dc == remaining and dc > 0):
            c2 = c1 + direction * dc
            if abs(c2) > c_cap:
                return finish("interval_infinite_cap", f"|c| = {abs(c2):.6g} exceeds {c_cap:.6g}")
            if not current.params.with_velocity(c2).sign_ok:
                dc *= 0.5
                continue
            try:
                new = continuation_step(current, c2, opts, base_grid=base)
            except (StepError, AdmissibilityError, ConvergenceError) as exc:
                LOGGER.info("step %.3e from c=%.6g failed: %s", dc, c1, exc)
                dc *= 0.5
                continue
            if new.babenko_residual_sup > controls.residual_tolerance:
                LOGGER.info("step %.3e rejected: residual %.3e", dc, new.babenko_residual_sup)
                new = None
                dc *= 0.5
                continue
            break
        if new is None:
            return finish("step_underflow", f"no admissible step above {controls.min_step:g} from c={c1:.10g}")

        diag = point_diagnostics(new, controls, opts.eta)
        lip = _h2_distance(current, new) / dc
        points.append(BranchPoint(c2, new.params.epsilon, step_used=dc, lipschitz=lip, **diag))
        profiles.append(new)
        current = new
        LOGGER.info("accepted c=%.8g eps=%.6g lambda=%.4g margin=%.4g", c2, new.params.epsilon,
                    diag["lambda_min"], diag["height_margin"])

        if c2 == c_target or abs(c2 - c_target) <= 1e-14 * max(1.0, abs(c_target)):
            return finish("reached_target")
        if diag["height_margin"] <= controls.margin_floor:
            return finish("height_margin_collapse", f"height margin {diag['height_margin']:.4g}")
        if abs(diag["lambda_min"]) <= controls.eigenvalue_floor:
            return finish("eigenvalue_collapse", f"lambda_min {diag['lambda_min']:.4g}")
        ratio = diag["x_norm_v"] / max(new.params.epsilon, 1e-300)
        if ratio > controls.norm_growth_cap * ratio0:
            return finish("norm_blowup", f"||v||_X/eps grew from {ratio0:.4g} to {ratio:.4g}")
    return finish("step_underflow", f"point budget {controls.max_points} exhausted")
