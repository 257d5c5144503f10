"""Identity suite: grid checks of the exact relations the solver relies on.

Checks that are limited by the periodic box (Hilbert transform of ``rho``,
the commutator ``[alpha, |D|] = -H``) are judged by convergence: the defect
on a fixed core window must shrink by at least ``IDENTITY_REFINEMENT_RATIO``
when the box and the node count are doubled.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import config
from .asymptotics import (
    MAX_PARTIAL_FRACTION_POWER,
    RhoPolynomial,
    modD_rho_power_coeffs,
    rho_power_partial_fractions,
)
from .babenko import bo_soliton_values, truncation_floor
from .spectral import Grid, make_grid
from .spectrum import assemble_operator_matrix, eig_sym


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    tolerance: float
    passed: bool
    comparison: str

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "value": self.value,
            "tolerance": self.tolerance,
            "comparison": self.comparison,
            "passed": self.passed,
        }


def _at_most(name, value, tol) -> CheckResult:
    return CheckResult(name, float(value), float(tol), bool(value <= tol), "<=")


def _at_least(name, value, tol) -> CheckResult:
    return CheckResult(name, float(value), float(tol), bool(value >= tol), ">=")


def hilbert_rho_defect(grid: Grid, radius: float | None = None) -> float:
    """``sup |H rho - alpha rho|`` over ``|alpha| <= radius`` (whole box if None)."""
    a = grid.nodes
    rho = bo_soliton_values(a)
    err = np.abs(grid.hilbert(rho) - a * rho)
    return float(np.max(err if radius is None else err[np.abs(a) <= radius]))


def commutator_defect(grid: Grid, radius: float | None = None) -> float:
    """``sup |[alpha, |D|] f + H f|`` for the unit Gaussian ``f``."""
    a = grid.nodes
    f = np.exp(-a * a)
    err = np.abs(a * grid.modD(f) - grid.modD(a * f) + grid.hilbert(f))
    return float(np.max(err if radius is None else err[np.abs(a) <= radius]))


def closure_defect(grid: Grid, k: int) -> float:
    """Relative sup error of grid ``|D| rho^k`` against the exact polynomial on ``|alpha| <= L/4``."""
    a = grid.nodes
    core = np.abs(a) <= grid.period_L / 4
    exact = modD_rho_power_coeffs(k).evaluate(a)
    numeric = grid.modD(bo_soliton_values(a) ** k)
    return float(np.max(np.abs(numeric - exact)[core]) / np.max(np.abs(exact[core])))


def golden_spectrum(grid: Grid, modes: int) -> tuple[float, float]:
    """Distances of the two largest even eigenvalues of ``L`` from ``phi`` and ``-1/phi``."""
    w = eig_sym(assemble_operator_matrix("L_rho", "even_cosine", modes, grid=grid)).eigenvalues
    return abs(w[-1] - config.GOLDEN_RATIO), abs(w[-2] + 1 / config.GOLDEN_RATIO)


def run_identity_suite(
    period_L: float = config.DEFAULT_PERIOD_L,
    size_n: int = config.DEFAULT_SIZE_N,
    modes: int = config.DEFAULT_SPECTRUM_MODES,
) -> list[CheckResult]:
    grid = make_grid(period_L, size_n)
    fine = make_grid(2 * period_L, 2 * size_n)
    results = []

    floor = truncation_floor(grid)
    results.append(_at_most("soliton_equation_defect", floor, config.SOLITON_DEFECT_TOLERANCE))
    results.append(_at_least("soliton_defect_refinement", floor / truncation_floor(fine), config.SOLITON_REFINEMENT_RATIO))

    soliton = modD_rho_power_coeffs(1) + RhoPolynomial({1: 1}) - RhoPolynomial({2: Fraction(1, 2)})
    results.append(_at_most("soliton_identity_exact", float(len(soliton.coefficients)), 0))

    r = config.IDENTITY_CORE_RADIUS
    for name, defect in (("hilbert_rho", hilbert_rho_defect), ("commutator", commutator_defect)):
        coarse = defect(grid, r)
        results.append(_at_most(f"{name}_core_defect", coarse, config.IDENTITY_CORE_TOLERANCE))
        results.append(_at_least(f"{name}_core_refinement", coarse / defect(fine, r), config.IDENTITY_REFINEMENT_RATIO))

    closure_tol = max(config.CLOSURE_RELATIVE_TOLERANCE, floor)
    for k in range(1, 6):
        results.append(_at_most(f"closure_k{k}", closure_defect(grid, k), closure_tol))
        degree = modD_rho_power_coeffs(k).degree
        results.append(_at_most(f"closure_k{k}_degree_gap", abs(degree - (k + 1)), 0))

    bad = 0
    for ell in range(1, MAX_PARTIAL_FRACTION_POWER + 1):
        form = rho_power_partial_fractions(ell)
        for x in (0, 1, 2):
            value = form.evaluate_exact(x)
            if value.im != 0 or value.re != Fraction(4, 1 + x * x) ** ell:
                bad += 1
        for j in range(1, ell + 1):
            b, g = form.beta(j), form.gamma(j)
            if b != (g if j % 2 == 0 else -g):
                bad += 1
    results.append(_at_most("partial_fractions_exact", bad, 0))

    top, second = golden_spectrum(grid, modes)
    results.append(_at_most("spectrum_golden_ratio", top, config.GOLDEN_TOLERANCE))
    results.append(_at_most("spectrum_golden_conjugate", second, config.GOLDEN_TOLERANCE))
    return results


def format_table(results: list[CheckResult]) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"{'check'.ljust(width)}  {'value':>12}      {'tolerance':>10}  result"]
    for r in results:
        lines.append(f"{r.name.ljust(width)}  {r.value:12.4e}  {r.comparison:>2}  {r.tolerance:10.3e}  "
                     f"{'PASS' if r.passed else 'FAIL'}")
    return "\n".join(lines)
