"""Exact closure identities for powers of ``rho`` and far-field fits.

Powers of ``rho = 4/(1+alpha^2)`` split into poles at ``alpha = +-i``:

    rho^l = sum_j beta_j (alpha - i)^{-j} + gamma_j (alpha + i)^{-j}.

``(alpha - i)^{-j}`` is the boundary value of a function holomorphic below
the real axis, so with ``H`` the multiplier ``-i sgn(xi)``

    H (alpha - i)^{-j} = i (alpha - i)^{-j},
    |D| (alpha - i)^{-j} = -i j (alpha - i)^{-j-1},

and the conjugate relations hold at ``alpha + i``.  Consequently ``|D| rho^k``
is again a polynomial in ``rho`` of degree ``k + 1``.  All coefficients are
computed in exact rational complex arithmetic.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Iterable

import numpy as np

from .spectral import GridFunction

MAX_PARTIAL_FRACTION_POWER = 12
MAX_CLOSURE_POWER = 10
MAX_FIT_ORDER = 6


# -- exact complex rationals ----------------------------------------------------------


@dataclass(frozen=True)
class ComplexRational:
    """``re + i im`` with rational parts."""

    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)

    @classmethod
    def of(cls, value) -> "ComplexRational":
        if isinstance(value, ComplexRational):
            return value
        return cls(Fraction(value), Fraction(0))

    def __add__(self, other) -> "ComplexRational":
        o = ComplexRational.of(other)
        return ComplexRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self) -> "ComplexRational":
        return ComplexRational(-self.re, -self.im)

    def __sub__(self, other) -> "ComplexRational":
        return self + (-ComplexRational.of(other))

    def __rsub__(self, other) -> "ComplexRational":
        return ComplexRational.of(other) - self

    def __mul__(self, other) -> "ComplexRational":
        o = ComplexRational.of(other)
        return ComplexRational(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "ComplexRational":
        o = ComplexRational.of(other)
        d = o.re * o.re + o.im * o.im
        if d == 0:
            raise ZeroDivisionError("division by zero complex rational")
        return self * ComplexRational(o.re / d, -o.im / d)

    def __pow__(self, k: int) -> "ComplexRational":
        if k < 0:
            return ComplexRational(Fraction(1)) / (self ** (-k))
        out = ComplexRational(Fraction(1))
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def conjugate(self) -> "ComplexRational":
        return ComplexRational(self.re, -self.im)

    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))


I = ComplexRational(Fraction(0), Fraction(1))
ZERO = ComplexRational()


# -- polynomials in rho ------------------------------------------------------------------


@dataclass(frozen=True)
class RhoPolynomial:
    """Finite sum ``sum_j c_j rho^j`` over powers ``j >= 1`` with rational ``c_j``."""

    coefficients: dict[int, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for power, coef in self.coefficients.items():
            if int(power) != power or power < 1:
                raise ValueError(f"powers must be integers >= 1, got {power}")
            coef = Fraction(coef)
            if coef != 0:
                clean[int(power)] = coef
        object.__setattr__(self, "coefficients", dict(sorted(clean.items())))

    @property
    def degree(self) -> int:
        return max(self.coefficients, default=0)

    def __add__(self, other: "RhoPolynomial") -> "RhoPolynomial":
        out = dict(self.coefficients)
        for p, c in other.coefficients.items():
            out[p] = out.get(p, Fraction(0)) + c
        return RhoPolynomial(out)

    def __neg__(self) -> "RhoPolynomial":
        return RhoPolynomial({p: -c for p, c in self.coefficients.items()})

    def __sub__(self, other: "RhoPolynomial") -> "RhoPolynomial":
        return self + (-other)

    def __mul__(self, other) -> "RhoPolynomial":
        if isinstance(other, RhoPolynomial):
            out: dict[int, Fraction] = {}
            for p, a in self.coefficients.items():
                for q, b in other.coefficients.items():
                    out[p + q] = out.get(p + q, Fraction(0)) + a * b
            return RhoPolynomial(out)
        s = Fraction(other)
        return RhoPolynomial({p: s * c for p, c in self.coefficients.items()})

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        return isinstance(other, RhoPolynomial) and self.coefficients == other.coefficients

    def __hash__(self) -> int:
        return hash(tuple(self.coefficients.items()))

    def is_zero(self) -> bool:
        return not self.coefficients

    def apply_modD(self) -> "RhoPolynomial":
        """``|D|`` applied termwise through the closure rule."""
        out = RhoPolynomial()
        for p, c in self.coefficients.items():
            out = out + c * modD_rho_power_coeffs(p)
        return out

    def evaluate(self, alpha) -> np.ndarray:
        rho = 4.0 / (1.0 + np.asarray(alpha, dtype=float) ** 2)
        out = np.zeros_like(rho)
        for p, c in self.coefficients.items():
            out = out + float(c) * rho**p
        return out

    def evaluate_exact(self, alpha) -> Fraction:
        a = Fraction(alpha)
        rho = Fraction(4) / (1 + a * a)
        return sum((c * rho**p for p, c in self.coefficients.items()), Fraction(0))

    def to_dict(self, k: int | None = None) -> dict:
        terms = [
            {"power": p, "numerator": c.numerator, "denominator": c.denominator}
            for p, c in self.coefficients.items()
        ]
        return {"k": k, "r": terms}


def rho_monomial(power: int) -> RhoPolynomial:
    return RhoPolynomial({power: Fraction(1)})


# -- partial fractions ----------------------------------------------------------------------


@dataclass(frozen=True)
class PartialFractionForm:
    """``sum beta_j (alpha - i)^{-j} + gamma_j (alpha + i)^{-j}``.

    ``terms`` maps ``(pole, order)`` with ``pole`` in ``{+1, -1}`` (for
    ``+i`` and ``-i``) to an exact complex coefficient.
    """

    terms: dict[tuple[int, int], ComplexRational] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for (pole, order), coef in self.terms.items():
            if pole not in (1, -1) or order < 1:
                raise ValueError(f"invalid term {(pole, order)}")
            coef = ComplexRational.of(coef)
            if not coef.is_zero():
                clean[(pole, order)] = coef
        object.__setattr__(self, "terms", dict(sorted(clean.items())))

    def beta(self, j: int) -> ComplexRational:
        return self.terms.get((1, j), ZERO)

    def gamma(self, j: int) -> ComplexRational:
        return self.terms.get((-1, j), ZERO)

    @property
    def max_order(self) -> int:
        return max((order for _, order in self.terms), default=0)

    def __add__(self, other: "PartialFractionForm") -> "PartialFractionForm":
        out = dict(self.terms)
        for key, c in other.terms.items():
            out[key] = out.get(key, ZERO) + c
        return PartialFractionForm(out)

    def scale(self, s) -> "PartialFractionForm":
        return PartialFractionForm({k: c * s for k, c in self.terms.items()})

    def is_real(self) -> bool:
        """Conjugate symmetry ``gamma_j = conj(beta_j)``."""
        orders = {order for _, order in self.terms}
        return all(self.gamma(j) == self.beta(j).conjugate() for j in orders)

    def evaluate_exact(self, alpha) -> ComplexRational:
        a = ComplexRational.of(Fraction(alpha))
        out = ZERO
        for (pole, order), c in self.terms.items():
            out = out + c * (a - I * pole) ** (-order)
        return out

    def evaluate(self, alpha) -> np.ndarray:
        a = np.asarray(alpha, dtype=float)
        out = np.zeros(a.shape, dtype=complex)
        for (pole, order), c in self.terms.items():
            out += complex(c) * (a - 1j * pole) ** (-order)
        return out

    def apply_modD(self) -> "PartialFractionForm":
        """``|D|(alpha -+ i)^{-j} = -+ i j (alpha -+ i)^{-j-1}``."""
        out = {}
        for (pole, order), c in self.terms.items():
            out[(pole, order + 1)] = c * I * (-pole * order)
        return PartialFractionForm(out)

    def apply_hilbert(self) -> "PartialFractionForm":
        """``H(alpha -+ i)^{-j} = +- i (alpha -+ i)^{-j}``."""
        return PartialFractionForm({(pole, order): c * I * pole for (pole, order), c in self.terms.items()})


def _check_range(name: str, value: int, upper: int) -> None:
    if int(value) != value or not 1 <= value <= upper:
        raise ValueError(f"{name} must be an integer in [1, {upper}], got {value}")


def rho_power_partial_fractions(ell: int) -> PartialFractionForm:
    """Exact partial fractions of ``rho^ell`` for ``1 <= ell <= 12``.

    Expanding ``(alpha + i)^{-ell}`` about ``alpha = i`` gives
    ``beta_j = 4^ell (-1)^m C(ell+m-1, m) (2i)^{-(ell+m)}`` with ``m = ell - j``;
    ``gamma_j`` is the conjugate.
    """
    _check_range("ell", ell, MAX_PARTIAL_FRACTION_POWER)
    two_i = ComplexRational(Fraction(0), Fraction(2))
    terms = {}
    for j in range(1, ell + 1):
        m = ell - j
        beta = (two_i ** (-(ell + m))) * (Fraction(4) ** ell * (-1) ** m * comb(ell + m - 1, m))
        terms[(1, j)] = beta
        terms[(-1, j)] = beta.conjugate()
    return PartialFractionForm(terms)


def rho_polynomial_from_fractions(form: PartialFractionForm) -> RhoPolynomial:
    """Re-express a partial-fraction form as a polynomial in ``rho``.

    Peels off the highest pole order with the matching power of ``rho``;
    raises ``ValueError`` if the form is not in the span of ``rho^j``.
    """
    remaining = form
    coeffs: dict[int, Fraction] = {}
    while remaining.terms:
        top = remaining.max_order
        if top > MAX_PARTIAL_FRACTION_POWER:
            raise ValueError(f"pole order {top} beyond supported range")
        basis = rho_power_partial_fractions(top)
        ratio = remaining.beta(top) / basis.beta(top)
        if ratio.im != 0:
            raise ValueError("form does not represent a real polynomial in rho")
        coeffs[top] = ratio.re
        remaining = remaining + basis.scale(-ratio)
        if remaining.max_order >= top and remaining.terms:
            raise ValueError("form is not a combination of powers of rho")
    return RhoPolynomial(coeffs)


def modD_rho_power_coeffs(k: int) -> RhoPolynomial:
    """Exact ``r_j`` with ``|D| rho^k = sum_{j=1}^{k+1} r_j rho^j``, ``1 <= k <= 10``."""
    _check_range("k", k, MAX_CLOSURE_POWER)
    return rho_polynomial_from_fractions(rho_power_partial_fractions(k).apply_modD())


def closure_json(k: int) -> dict:
    return modD_rho_power_coeffs(k).to_dict(k)


# -- fits on computed profiles ----------------------------------------------------------


class FitError(ValueError):
    """Invalid fit request (order or region)."""


@dataclass(frozen=True)
class ExpansionFit:
    coefficients: tuple[float, ...]
    remainder_sups: tuple[float, ...]
    condition_number: float
    fit_region: tuple[float, float]
    samples: int
    epsilon: float | None = None

    @property
    def order(self) -> int:
        return len(self.coefficients)

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "N": self.order,
            "a": list(self.coefficients),
            "remainder_sups": list(self.remainder_sups),
            "condition_number": self.condition_number,
            "fit_region": list(self.fit_region),
            "samples": self.samples,
        }


def _window(phi: GridFunction, fit_region: tuple[float, float]) -> np.ndarray:
    lo, hi = fit_region
    quarter = phi.grid.period_L / 4
    if not 0 <= lo < hi:
        raise FitError(f"fit region must satisfy 0 <= min < max, got {fit_region}")
    if hi > quarter * (1 + 1e-12):
        raise FitError(f"fit region exceeds L/4 = {quarter:g}")
    a = np.abs(phi.grid.nodes)
    mask = (a >= lo) & (a <= hi) & (phi.grid.nodes >= 0)
    if mask.sum() < 2:
        raise FitError("fit region contains too few nodes")
    return mask


def _weighted_lstsq(design: np.ndarray, target: np.ndarray, weight: np.ndarray):
    A = design * weight[:, None]
    b = target * weight
    scale = np.linalg.norm(A, axis=0)
    scale[scale == 0] = 1.0
    An = A / scale
    sol, *_ = np.linalg.lstsq(An, b, rcond=None)
    return sol / scale, float(np.linalg.cond(An))


def expansion_fit(
    phi: GridFunction,
    N: int,
    fit_region: tuple[float, float] = (50.0, 100.0),
    epsilon: float | None = None,
) -> ExpansionFit:
    """Fit ``phi - rho = sum_{j=1}^N a_j rho^j`` on ``fit_min <= |alpha| <= fit_max``.

    Rows carry the weight ``<alpha>^2 = 1 + alpha^2``; columns are normalized
    before the solve and the condition number of the normalized system is
    reported.  ``remainder_sups[m-1]`` is ``sup alpha^{2m} |g_m|`` over the
    window with ``g_m = phi - rho - sum_{j<=m} a_j rho^j``.
    """
    _check_fit_order(N)
    if phi.parity != "even":
        grid = phi.grid
        defect = float(np.max(np.abs(phi.values - phi.values[grid.reflect_index])))
        if defect > 1e-12 * max(1.0, phi.sup()):
            raise FitError("expansion_fit requires an even profile")
    mask = _window(phi, fit_region)
    alpha = phi.grid.nodes[mask]
    rho = 4.0 / (1.0 + alpha**2)
    target = phi.values[mask] - rho
    design = np.column_stack([rho**j for j in range(1, N + 1)])
    a, cond = _weighted_lstsq(design, target, 1.0 + alpha**2)
    sups = []
    g = target.copy()
    for m in range(1, N + 1):
        g = g - a[m - 1] * rho**m
        sups.append(float(np.max(alpha ** (2 * m) * np.abs(g))))
    return ExpansionFit(tuple(float(x) for x in a), tuple(sups), cond, tuple(fit_region), int(mask.sum()), epsilon)


def odd_power_coefficients(
    phi: GridFunction,
    N: int,
    odd_powers: Iterable[int] = (3,),
    fit_region: tuple[float, float] = (50.0, 100.0),
) -> tuple[np.ndarray, np.ndarray, float]:
    """Fit ``phi - rho`` against ``rho^1..rho^N`` plus odd ``<alpha>^{-p}``.

    Returns the even coefficients, the odd ones and the condition number.
    """
    _check_fit_order(N)
    mask = _window(phi, fit_region)
    alpha = phi.grid.nodes[mask]
    rho = 4.0 / (1.0 + alpha**2)
    bracket = np.sqrt(1.0 + alpha**2)
    odd = list(odd_powers)
    design = np.column_stack([rho**j for j in range(1, N + 1)] + [bracket ** (-p) for p in odd])
    sol, cond = _weighted_lstsq(design, phi.values[mask] - rho, 1.0 + alpha**2)
    return sol[:N], sol[N:], cond


def _check_fit_order(N: int) -> None:
    if int(N) != N or not 1 <= N <= MAX_FIT_ORDER:
        raise FitError(f"N must be an integer in [1, {MAX_FIT_ORDER}], got {N}")


@dataclass(frozen=True)
class DecayReport:
    inner_cut: float
    outer_cut: float
    weighted_sup: float
    slope: float | None

    def to_dict(self) -> dict:
        return {"inner_cut": self.inner_cut, "outer_cut": self.outer_cut,
                "weighted_sup": self.weighted_sup, "slope": self.slope}


def decay_report(v: GridFunction, inner_cut: float = 50.0) -> DecayReport:
    """``sup alpha^2 |v|`` over ``inner_cut <= |alpha| <= L/4`` and the log-log slope of ``|v|``."""
    outer = v.grid.period_L / 4
    if not 0 < inner_cut < outer:
        raise ValueError(f"inner_cut must lie in (0, L/4 = {outer:g}), got {inner_cut}")
    a = np.abs(v.grid.nodes)
    mask = (a >= inner_cut) & (a <= outer)
    alpha = a[mask]
    vals = np.abs(v.values[mask])
    sup = float(np.max(alpha**2 * vals))
    slope = None
    positive = vals > 0
    if positive.sum() >= 2:
        slope = float(np.polyfit(np.log(alpha[positive]), np.log(vals[positive]), 1)[0])
    return DecayReport(float(inner_cut), float(outer), sup, slope)


def write_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
