"""Dense Galerkin matrices of the linearized operators and their spectra.

Two bases are offered, both orthonormal for the grid inner product
``<f, g> = h sum f g``:

* ``even_cosine`` -- ``cos(xi_k alpha)``, ``k = 0..m-1``; diagonalizes ``|D|``.
* ``full``        -- the cosines ``k = 0..m/2`` followed by ``sin(xi_k alpha)``,
  ``k = 1..m/2-1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np
import scipy.linalg

from .babenko import (
    PhysicalProfile,
    apply_linearized_values,
    bo_soliton_values,
    PhysicalParams,
)
from .spectral import Grid, x_norm

Kind = Literal["L_rho", "L_U", "const_coeff"]
Basis = Literal["even_cosine", "full"]

CONTINUUM_BUFFER = 5e-2
TRANSLATION_CORRELATION = 0.99


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    kind: str
    basis: str
    modes: int
    entries: np.ndarray = field(repr=False)
    grid: Grid = field(repr=False)
    basis_vectors: np.ndarray = field(repr=False)
    asymmetry: float = 0.0
    meta: dict = field(default_factory=dict)

    def coefficients(self, values: np.ndarray) -> np.ndarray:
        """Expansion coefficients of a grid function in this basis."""
        return self.grid.spacing * self.basis_vectors.T @ values


@dataclass(frozen=True, eq=False)
class SpectrumReport:
    kind: str
    modes: int
    eigenvalues: np.ndarray = field(repr=False)
    eigenvectors: np.ndarray = field(repr=False)
    lambda_min_nontrivial: float
    continuous_edge: float
    has_discrete: bool
    height_margin: float | None = None
    translation_index: int | None = None
    translation_correlation: float | None = None

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "modes": self.modes,
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "lambda_min_nontrivial": float(self.lambda_min_nontrivial),
            "continuous_edge": float(self.continuous_edge),
            "height_margin": None if self.height_margin is None else float(self.height_margin),
        }


def basis_vectors(grid: Grid, basis: Basis, modes: int) -> np.ndarray:
    """``n x modes`` matrix of basis functions sampled at the nodes."""
    n = grid.size_n
    if modes < 1 or modes > n // 2:
        raise ValueError(f"modes must lie in [1, {n // 2}], got {modes}")
    alpha = grid.nodes
    L = grid.period_L

    def cosines(ks):
        B = np.cos(np.outer(alpha, 2 * np.pi * ks / L))
        B *= np.sqrt(2 / L)
        B[:, ks == 0] = np.sqrt(1 / L)
        return B

    if basis == "even_cosine":
        return cosines(np.arange(modes))
    if basis == "full":
        ncos = modes // 2 + 1
        nsin = modes - ncos
        S = np.sin(np.outer(alpha, 2 * np.pi * np.arange(1, nsin + 1) / L)) * np.sqrt(2 / L)
        return np.hstack([cosines(np.arange(ncos)), S])
    raise ValueError(f"unknown basis {basis!r}")


def _batched(grid: Grid, op, B: np.ndarray, chunk: int = 256) -> np.ndarray:
    out = np.empty_like(B)
    for start in range(0, B.shape[1], chunk):
        out[:, start:start + chunk] = op(B[:, start:start + chunk])
    return out


def _modD_cols(grid: Grid, F: np.ndarray) -> np.ndarray:
    return np.fft.irfft(grid.xi[:, None] * np.fft.rfft(F, axis=0), grid.size_n, axis=0)


def assemble_operator_matrix(
    kind: Kind,
    basis: Basis,
    modes: int,
    grid: Grid | None = None,
    profile: PhysicalProfile | None = None,
) -> OperatorMatrix:
    """Galerkin matrix ``A_jk = <b_j, Op b_k>``.

    ``L_rho`` needs ``grid``; ``L_U`` needs ``profile`` (its grid is used);
    ``const_coeff`` is ``-1 - |D|`` on ``grid``.
    """
    if kind == "L_U":
        if profile is None:
            raise ValueError("L_U requires a profile")
        grid = profile.grid
    elif grid is None:
        raise ValueError(f"{kind} requires a grid")
    B = basis_vectors(grid, basis, modes)
    meta: dict = {}

    if kind == "const_coeff":
        def op(F):
            return -F - _modD_cols(grid, F)
    elif kind == "L_rho":
        rho = bo_soliton_values(grid.nodes)[:, None]

        def op(F):
            return -F - _modD_cols(grid, F) + rho * F
    elif kind == "L_U":
        p = profile.params
        U = profile.U.values
        meta = {"g": p.g, "gamma": p.gamma, "c": p.c}

        def op(F):
            return np.column_stack([apply_linearized_values(grid, p, U, F[:, j]) for j in range(F.shape[1])])
    else:
        raise ValueError(f"unknown operator kind {kind!r}")

    A = grid.spacing * B.T @ _batched(grid, op, B)
    scale = max(float(np.max(np.abs(A))), 1e-300)
    asym = float(np.max(np.abs(A - A.T))) / scale
    A = 0.5 * (A + A.T)
    return OperatorMatrix(kind, basis, modes, A, grid, B, asym, meta)


def continuous_edge(matrix: OperatorMatrix) -> float:
    if matrix.kind == "L_U":
        m = matrix.meta
        return m["g"] + m["c"] * m["gamma"]
    return -1.0


def eig_sym(matrix: OperatorMatrix, translation_mode: np.ndarray | None = None) -> SpectrumReport:
    """Full symmetric eigendecomposition with discrete/continuum bookkeeping.

    Eigenvalues within ``5e-2 |edge|`` of the continuum edge (or below it)
    are treated as continuum.  For the full basis, the eigenvector best
    aligned with ``translation_mode`` (``rho'`` or ``U'``) is the translation
    zero and is excluded from ``lambda_min_nontrivial`` when its cosine
    similarity is at least 0.99.
    """
    try:
        w, V = scipy.linalg.eigh(matrix.entries)
    except scipy.linalg.LinAlgError as exc:
        raise RuntimeError(f"eigensolver failed: {exc}") from exc
    edge = continuous_edge(matrix)

    t_index = t_corr = None
    if translation_mode is not None:
        c = matrix.coefficients(translation_mode)
        c = c / np.linalg.norm(c)
        corr = np.abs(V.T @ c)
        t_index = int(np.argmax(corr))
        t_corr = float(corr[t_index])

    mask = w > edge + CONTINUUM_BUFFER * abs(edge)
    if t_index is not None and t_corr >= TRANSLATION_CORRELATION:
        mask[t_index] = False
    if np.any(mask):
        cand = w[mask]
        lam = float(cand[np.argmin(np.abs(cand))])
        discrete = True
    else:
        lam = edge
        discrete = False
    return SpectrumReport(
        kind=matrix.kind,
        modes=matrix.modes,
        eigenvalues=w,
        eigenvectors=V,
        lambda_min_nontrivial=lam,
        continuous_edge=edge,
        has_discrete=discrete,
        translation_index=t_index,
        translation_correlation=t_corr,
    )


def translation_mode_rho(grid: Grid) -> np.ndarray:
    a = grid.nodes
    return -8 * a / (1 + a**2) ** 2


def linearized_spectrum(profile: PhysicalProfile, modes: int = 1024) -> SpectrumReport:
    """Even-subspace spectrum of ``L_U`` with the height margin attached."""
    report = eig_sym(assemble_operator_matrix("L_U", "even_cosine", modes, profile=profile))
    p = profile.params
    return replace(report, height_margin=p.max_height - profile.sup_U())


def spectrum_diagnostics(report: SpectrumReport, profile: PhysicalProfile, eta: float = 0.1) -> dict:
    """The quantities governing the admissible continuation step."""
    p: PhysicalParams = profile.params
    return {
        "lambda_min_nontrivial": report.lambda_min_nontrivial,
        "discrete_eigenvalue": report.has_discrete,
        "height_margin": p.max_height - profile.sup_U(),
        "x_norm": x_norm(profile.U.values, profile.grid, eta),
        "continuous_edge": report.continuous_edge,
    }
