"""Periodic Fourier grid, multiplier operators and Sobolev norms.

The real line is replaced by the centered torus ``[-L/2, L/2)`` sampled at
``n`` uniform nodes.  Every operator here is a Fourier multiplier applied via
the real FFT:

    |D|            ->  |xi|
    d/dalpha       ->  i xi          (Nyquist mode dropped)
    H              ->  -i sgn(xi)    (Nyquist mode dropped)
    (1 + |D|)^-1   ->  1 / (1 + |xi|)

so that ``|D| = d/dalpha o H``.  Functions are carried as :class:`GridFunction`
objects with an optional parity tag; even and odd refer to reflection through
the node ``alpha = 0`` (index ``n // 2``).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import scipy.fft

Parity = Literal["even", "odd", "none"]

PARITY_TOL = 1e-12


class GridError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform periodic grid on ``[-L/2, L/2)``.

    Attributes
    ----------
    period_L : float
        Length of the periodic box.
    size_n : int
        Number of nodes, a power of two.
    nodes : ndarray
        ``alpha_m = -L/2 + m L/n``.
    xi : ndarray
        Non-negative wavenumbers ``2 pi k / L`` for ``k = 0..n/2`` (rfft layout).
    """

    period_L: float
    size_n: int
    nodes: np.ndarray = field(repr=False)
    xi: np.ndarray = field(repr=False)

    @property
    def spacing(self) -> float:
        return self.period_L / self.size_n

    @property
    def center(self) -> int:
        return self.size_n // 2

    @property
    def reflect_index(self) -> np.ndarray:
        """Index map ``m -> (n - m) mod n`` realizing ``alpha -> -alpha``."""
        return (-np.arange(self.size_n)) % self.size_n

    def scaled(self, factor: float) -> "Grid":
        """Grid with the same node count and period ``factor * L``."""
        return make_grid(self.period_L * factor, self.size_n)

    # -- array-level multipliers -------------------------------------------
    def _apply(self, f: np.ndarray, symbol: np.ndarray) -> np.ndarray:
        return np.fft.irfft(symbol * np.fft.rfft(f), self.size_n)

    def modD(self, f: np.ndarray) -> np.ndarray:
        return self._apply(f, self.xi)

    def deriv(self, f: np.ndarray) -> np.ndarray:
        return self._apply(f, self._ixi)

    def hilbert(self, f: np.ndarray) -> np.ndarray:
        return self._apply(f, self._msgn)

    def inv_one_plus_modD(self, f: np.ndarray) -> np.ndarray:
        return self._apply(f, 1.0 / (1.0 + self.xi))

    def multiplier(self, f: np.ndarray, symbol: np.ndarray) -> np.ndarray:
        """Apply an arbitrary real even symbol given on the rfft wavenumbers."""
        return self._apply(f, symbol)

    def modD_extended(self, f: np.ndarray) -> np.ndarray:
        """``|D|`` evaluated in long double; used for residual checks below float64 roundoff."""
        pi = 4 * np.arctan(np.longdouble(1))
        xi = 2 * pi * np.arange(self.size_n // 2 + 1, dtype=np.longdouble) / np.longdouble(self.period_L)
        return scipy.fft.irfft(xi * scipy.fft.rfft(np.asarray(f, dtype=np.longdouble)), self.size_n)

    @property
    def _ixi(self) -> np.ndarray:
        s = 1j * self.xi
        s[-1] = 0.0
        return s

    @property
    def _msgn(self) -> np.ndarray:
        s = -1j * np.sign(self.xi)
        s[-1] = 0.0
        return s

    def integrate(self, f: np.ndarray) -> float:
        return float(self.spacing * np.sum(f))

    def inner(self, f: np.ndarray, g: np.ndarray) -> float:
        return float(self.spacing * np.dot(f, g))

    def even_part(self, f: np.ndarray) -> np.ndarray:
        return 0.5 * (f + f[self.reflect_index])

    def odd_part(self, f: np.ndarray) -> np.ndarray:
        return 0.5 * (f - f[self.reflect_index])


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def make_grid(period_L: float = 400.0, size_n: int = 8192) -> Grid:
    """Build the centered periodic grid.

    Raises
    ------
    GridError
        If ``size_n`` is not a power of two at least 64, or ``period_L <= 0``.
    """
    if not (isinstance(size_n, (int, np.integer)) and _is_power_of_two(int(size_n))):
        raise GridError(f"size_n must be a power of two, got {size_n}")
    if size_n < 64:
        raise GridError(f"size_n must be at least 64, got {size_n}")
    if not period_L > 0 or not np.isfinite(period_L):
        raise GridError(f"period_L must be positive, got {period_L}")
    n = int(size_n)
    L = float(period_L)
    nodes = -L / 2 + L * np.arange(n) / n
    xi = 2 * np.pi * np.arange(n // 2 + 1) / L
    nodes.setflags(write=False)
    xi.setflags(write=False)
    return Grid(L, n, nodes, xi)


def full_wavenumbers(grid: Grid) -> np.ndarray:
    """Signed wavenumbers in numpy fft order (``xi_{-k} = -xi_k``)."""
    return 2 * np.pi * np.fft.fftfreq(grid.size_n, grid.spacing)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Real samples of a function on a :class:`Grid`.

    The parity tag is validated on construction: an ``even`` (``odd``) tag
    requires ``f(-alpha) = f(alpha)`` (``-f(alpha)``) to ``1e-12`` relative to
    ``max(1, sup|f|)``.
    """

    grid: Grid
    values: np.ndarray = field(repr=False)
    parity: Parity = "none"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.size_n,):
            raise GridError(f"expected {self.grid.size_n} samples, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise GridError("grid function has non-finite samples")
        if self.parity not in ("even", "odd", "none"):
            raise GridError(f"unknown parity {self.parity!r}")
        if self.parity != "none":
            defect = parity_defect(self.grid, v, self.parity)
            if defect > PARITY_TOL * max(1.0, float(np.max(np.abs(v)))):
                raise GridError(f"{self.parity} tag violated by {defect:.3e}")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, grid: Grid, func, parity: Parity = "none") -> "GridFunction":
        return cls(grid, func(grid.nodes), parity)

    @property
    def alpha(self) -> np.ndarray:
        return self.grid.nodes

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def with_values(self, values: np.ndarray, parity: Parity | None = None) -> "GridFunction":
        return GridFunction(self.grid, values, self.parity if parity is None else parity)

    def __add__(self, other: "GridFunction") -> "GridFunction":
        return GridFunction(self.grid, self.values + other.values, _sum_parity(self.parity, other.parity))

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        return GridFunction(self.grid, self.values - other.values, _sum_parity(self.parity, other.parity))

    def __mul__(self, scalar: float) -> "GridFunction":
        return GridFunction(self.grid, scalar * self.values, self.parity)

    __rmul__ = __mul__

    def to_csv(self, path) -> None:
        write_columns_csv(path, {"alpha": self.grid.nodes, "value": self.values})


def _sum_parity(a: Parity, b: Parity) -> Parity:
    return a if a == b else "none"


_FLIP = {"even": "odd", "odd": "even", "none": "none"}


def parity_defect(grid: Grid, values: np.ndarray, parity: Parity) -> float:
    sign = 1.0 if parity == "even" else -1.0
    return float(np.max(np.abs(values - sign * values[grid.reflect_index])))


def _clean(f: GridFunction, values: np.ndarray, parity: Parity) -> GridFunction:
    # Multipliers keep exact parity only up to FFT roundoff; re-symmetrize.
    if parity == "even":
        values = f.grid.even_part(values)
    elif parity == "odd":
        values = f.grid.odd_part(values)
    return GridFunction(f.grid, values, parity)


def apply_modD(f: GridFunction) -> GridFunction:
    """``|D| f``, the multiplier ``|xi|`` (Nyquist mode kept)."""
    return _clean(f, f.grid.modD(f.values), f.parity)


def apply_derivative(f: GridFunction) -> GridFunction:
    return _clean(f, f.grid.deriv(f.values), _FLIP[f.parity])


def hilbert(f: GridFunction) -> GridFunction:
    """Hilbert transform with symbol ``-i sgn(xi)``; annihilates the mean."""
    return _clean(f, f.grid.hilbert(f.values), _FLIP[f.parity])


def solve_one_plus_modD(f: GridFunction) -> GridFunction:
    """``(1 + |D|)^{-1} f``; convolution with a kernel of unit mass."""
    return _clean(f, f.grid.inv_one_plus_modD(f.values), f.parity)


def project_parity(f: GridFunction, parity: Literal["even", "odd"]) -> GridFunction:
    if parity == "even":
        return GridFunction(f.grid, f.grid.even_part(f.values), "even")
    if parity == "odd":
        return GridFunction(f.grid, f.grid.odd_part(f.values), "odd")
    raise GridError(f"parity must be 'even' or 'odd', got {parity!r}")


def multiply_alpha(f: GridFunction) -> GridFunction:
    """Pointwise product with the node coordinate (no periodization)."""
    return _clean(f, f.grid.nodes * f.values, _FLIP[f.parity])


# -- norms -------------------------------------------------------------------


@dataclass(frozen=True)
class NormSpec:
    """Which Sobolev-type norm to evaluate.

    ``Hk``       : ``||f||_{H^k}``
    ``Hk_sigma`` : ``||(1 + alpha^2)^{sigma/2} f||_{H^k}``
    ``X``        : ``sqrt(||f||_{H^2}^2 + eta^2 ||alpha f||_{H^2}^2)``
    """

    kind: Literal["Hk", "Hk_sigma", "X"] = "Hk"
    k: int = 2
    sigma: int = 0
    eta: float = 0.1

    def __post_init__(self):
        if self.kind not in ("Hk", "Hk_sigma", "X"):
            raise ValueError(f"unknown norm kind {self.kind!r}")
        if not (0 <= self.k <= 4) or int(self.k) != self.k:
            raise ValueError(f"Sobolev order must be an integer in [0, 4], got {self.k}")
        if self.sigma < 0 or self.sigma % 2:
            raise ValueError(f"sigma must be a nonnegative even integer, got {self.sigma}")
        if not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta}")


X_NORM = NormSpec("X", k=2)


def sobolev_sq(grid: Grid, values: np.ndarray, k: int) -> float:
    """``L * sum_k (1 + xi_k^2)^k |c_k|^2`` with ``c_k`` the normalized DFT."""
    c = np.fft.rfft(values) / grid.size_n
    w = np.full(c.shape, 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    return float(grid.period_L * np.sum(w * (1 + grid.xi**2) ** k * np.abs(c) ** 2))


def norm(f: GridFunction, spec: NormSpec = X_NORM) -> float:
    g = f.grid
    if spec.kind == "Hk":
        return np.sqrt(sobolev_sq(g, f.values, spec.k))
    if spec.kind == "Hk_sigma":
        weight = (1 + g.nodes**2) ** (spec.sigma // 2)
        return np.sqrt(sobolev_sq(g, weight * f.values, spec.k))
    return np.sqrt(sobolev_sq(g, f.values, spec.k) + spec.eta**2 * sobolev_sq(g, g.nodes * f.values, spec.k))


def x_norm(values: np.ndarray, grid: Grid, eta: float = 0.1) -> float:
    return float(np.sqrt(sobolev_sq(grid, values, 2) + eta**2 * sobolev_sq(grid, grid.nodes * values, 2)))


# -- resampling ----------------------------------------------------------------


def fourier_interpolate(grid: Grid, values: np.ndarray, points: np.ndarray, chunk: int = 256) -> np.ndarray:
    """Evaluate the trigonometric interpolant of ``values`` at arbitrary points.

    The Nyquist coefficient is split symmetrically so the interpolant is real.
    Cost is ``O(len(points) * n)``.
    """
    n = grid.size_n
    c = np.fft.rfft(values) / n
    w = np.full(c.shape, 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    # Node phase: samples sit at alpha_m = -L/2 + m h, so shift the origin.
    shift = np.exp(-1j * grid.xi * (-grid.period_L / 2))
    coef = w * c * shift
    pts = np.asarray(points, dtype=float)
    out = np.empty(pts.shape)
    flat = pts.ravel()
    res = out.ravel()
    for start in range(0, flat.size, chunk):
        x = flat[start:start + chunk]
        res[start:start + chunk] = np.real(np.exp(1j * np.outer(x, grid.xi)) @ coef)
    return out


def write_columns_csv(path, columns: dict) -> None:
    """Write equal-length columns with a header row and 17 significant digits."""
    names = list(columns)
    data = [np.asarray(columns[k], dtype=float) for k in names]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for row in zip(*data):
            writer.writerow([f"{x:.17g}" for x in row])
