"""Extended-exponent complex arithmetic and polynomial root finding.

Derivative products along orbits, such as ``(R^n)'(x)``, overflow or underflow
double precision within a few hundred steps. :class:`ScaledComplex` stores a
value as ``mantissa * 2**exponent`` with ``1 <= |mantissa| < 2`` and an integer
exponent, so these products stay exact up to mantissa rounding.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

from . import _kernels

EXP_MIN = -(2**63)
EXP_MAX = 2**63 - 1

DEFAULT_ROOT_TOL = 1e-12


class RootFindingError(ArithmeticError):
    """Raised when simultaneous root iteration fails to converge.

    Carries the best iterate and its residuals so callers can report them.
    """

    def __init__(self, message: str, best: Sequence[complex], residuals: Sequence[float]):
        super().__init__(message)
        self.best = list(best)
        self.residuals = list(residuals)


def _check_exponent(e: int) -> int:
    if e > EXP_MAX or e < EXP_MIN:
        raise OverflowError(f"binary exponent {e} outside the int64 range")
    return e


def _ldexp_complex(z: complex, k: int) -> complex:
    return complex(math.ldexp(z.real, k), math.ldexp(z.imag, k))


@dataclass(frozen=True, slots=True)
class ScaledComplex:
    """Complex number ``mantissa * 2**exponent``.

    Construct through :meth:`of` or :meth:`normalized`; the raw constructor
    trusts its arguments.
    """

    mantissa: complex = 0j
    exponent: int = 0

    @classmethod
    def of(cls, z: complex | float | ScaledComplex) -> ScaledComplex:
        if isinstance(z, ScaledComplex):
            return z
        return cls.normalized(complex(z), 0)

    @classmethod
    def normalized(cls, m: complex, e: int) -> ScaledComplex:
        m = complex(m)
        if m == 0:
            return ZERO
        a = abs(m)
        if not math.isfinite(a):
            raise OverflowError("cannot scale a non-finite value")
        _, k = math.frexp(a)
        shift = k - 1
        m = _ldexp_complex(m, -shift)
        e = e + shift
        a = abs(m)
        if a >= 2.0:
            m *= 0.5
            e += 1
        elif a < 1.0:
            m *= 2.0
            e -= 1
        return cls(m, _check_exponent(e))

    @classmethod
    def from_log2(cls, log2_abs: float, phase: float = 0.0) -> ScaledComplex:
        e = math.floor(log2_abs)
        m = 2.0 ** (log2_abs - e) * complex(math.cos(phase), math.sin(phase))
        return cls.normalized(m, e)

    def is_zero(self) -> bool:
        return self.mantissa == 0

    def __mul__(self, other):
        if not isinstance(other, ScaledComplex):
            other = ScaledComplex.of(other)
        if self.mantissa == 0 or other.mantissa == 0:
            return ZERO
        return ScaledComplex.normalized(self.mantissa * other.mantissa, self.exponent + other.exponent)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, ScaledComplex):
            other = ScaledComplex.of(other)
        if other.mantissa == 0:
            raise ZeroDivisionError("division by a scaled zero")
        if self.mantissa == 0:
            return ZERO
        return ScaledComplex.normalized(self.mantissa / other.mantissa, self.exponent - other.exponent)

    def __rtruediv__(self, other):
        return ScaledComplex.of(other) / self

    def reciprocal(self) -> ScaledComplex:
        return ONE / self

    def __add__(self, other):
        if not isinstance(other, ScaledComplex):
            other = ScaledComplex.of(other)
        if self.mantissa == 0:
            return other
        if other.mantissa == 0:
            return self
        e = max(self.exponent, other.exponent)
        m = _ldexp_complex(self.mantissa, self.exponent - e) + _ldexp_complex(other.mantissa, other.exponent - e)
        return ScaledComplex.normalized(m, e)

    __radd__ = __add__

    def __neg__(self) -> ScaledComplex:
        return ScaledComplex(-self.mantissa, self.exponent)

    def __sub__(self, other):
        if not isinstance(other, ScaledComplex):
            other = ScaledComplex.of(other)
        return self + (-other)

    def __rsub__(self, other):
        return ScaledComplex.of(other) - self

    def conjugate(self) -> ScaledComplex:
        return ScaledComplex(self.mantissa.conjugate(), self.exponent)

    def abs(self) -> ScaledComplex:
        if self.mantissa == 0:
            return ZERO
        return ScaledComplex.normalized(abs(self.mantissa), self.exponent)

    def log2abs(self) -> float:
        if self.mantissa == 0:
            raise ValueError("log2 of zero")
        return math.log2(abs(self.mantissa)) + self.exponent

    def arg(self) -> float:
        return math.atan2(self.mantissa.imag, self.mantissa.real)

    def in_native_range(self) -> bool:
        return self.mantissa == 0 or -1020 < self.exponent < 1020

    def to_complex(self) -> complex:
        """Convert to a native complex; raises ``OverflowError`` when too large.

        Values below the double range flush to zero.
        """
        if self.mantissa == 0:
            return 0j
        if self.exponent > 1023:
            raise OverflowError(f"2**{self.exponent} exceeds double range")
        if self.exponent < -1200:
            return 0j
        return _ldexp_complex(self.mantissa, self.exponent)

    def __complex__(self) -> complex:
        return self.to_complex()

    def __float__(self) -> float:
        if self.mantissa.imag != 0:
            raise TypeError("ScaledComplex with nonzero imaginary part")
        return self.to_complex().real

    def __abs__(self) -> float:
        return abs(self.to_complex())

    def __repr__(self) -> str:
        return f"ScaledComplex({self.mantissa!r}, {self.exponent})"


ZERO = ScaledComplex(0j, 0)
ONE = ScaledComplex(1 + 0j, 0)


def scaled_mul(a: ScaledComplex, b: ScaledComplex) -> ScaledComplex:
    return a * b


def scaled_abs_log2(a: ScaledComplex) -> float:
    return a.log2abs()


def scaled_sum(values: Iterable[ScaledComplex]) -> ScaledComplex:
    total = ZERO
    for v in values:
        total = total + v
    return total


def scaled_product(values: Iterable[complex | ScaledComplex]) -> ScaledComplex:
    acc = ONE
    for v in values:
        acc = acc * v
    return acc


@dataclass(frozen=True)
class Polynomial:
    """Polynomial with complex coefficients in ascending degree order."""

    coeffs: tuple[complex, ...]

    def __init__(self, coeffs: Iterable[complex] = ()):
        cs = [complex(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        object.__setattr__(self, "coeffs", tuple(cs))

    @classmethod
    def from_roots(cls, roots: Iterable[complex], leading: complex = 1.0) -> Polynomial:
        return cls(npoly.polyfromroots(list(roots)) * leading)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def leading(self) -> complex:
        return self.coeffs[-1] if self.coeffs else 0j

    def is_zero(self) -> bool:
        return not self.coeffs

    def array(self) -> np.ndarray:
        if not self.coeffs:
            return np.zeros(1, dtype=np.complex128)
        return np.array(self.coeffs, dtype=np.complex128)

    def __call__(self, z: complex) -> complex:
        acc = 0j
        for c in reversed(self.coeffs):
            acc = acc * z + c
        return acc

    def abs_scale(self, z: complex) -> float:
        """``sum |a_k| |z|^k``, the natural size of rounding in ``p(z)``."""
        r = abs(z)
        acc = 0.0
        for c in reversed(self.coeffs):
            acc = acc * r + abs(c)
        return acc

    def deriv(self, m: int = 1) -> Polynomial:
        if self.degree < m:
            return Polynomial()
        return Polynomial(npoly.polyder(self.array(), m))

    def __add__(self, other: Polynomial) -> Polynomial:
        return Polynomial(npoly.polyadd(self.array(), other.array()))

    def __sub__(self, other: Polynomial) -> Polynomial:
        return Polynomial(npoly.polysub(self.array(), other.array()))

    def __mul__(self, other):
        if isinstance(other, Polynomial):
            if self.is_zero() or other.is_zero():
                return Polynomial()
            return Polynomial(npoly.polymul(self.array(), other.array()))
        return Polynomial(c * other for c in self.coeffs)

    __rmul__ = __mul__

    def __neg__(self) -> Polynomial:
        return self * -1

    def max_abs_coeff(self) -> float:
        return max((abs(c) for c in self.coeffs), default=0.0)


def _as_polynomial(p: Polynomial | Sequence[complex]) -> Polynomial:
    return p if isinstance(p, Polynomial) else Polynomial(p)


def _initial_guesses(coeffs: np.ndarray, rng: np.random.Generator | None) -> np.ndarray:
    deg = len(coeffs) - 1
    lead = abs(coeffs[-1])
    # Fujiwara-style bound on root moduli
    bound = 2.0 * max(
        (abs(coeffs[deg - k]) / lead) ** (1.0 / k) for k in range(1, deg + 1)
    )
    radius = max(bound * 0.5, 1e-300)
    offset = 0.4 if rng is None else rng.uniform(0, 2 * np.pi)
    angles = offset + 2 * np.pi * np.arange(deg) / deg
    r = radius if rng is None else radius * rng.uniform(0.5, 1.0, deg)
    return r * np.exp(1j * angles)


def _newton_polish(p: Polynomial, dp: Polynomial, z: complex, steps: int = 3) -> complex:
    best, best_res = z, abs(p(z))
    for _ in range(steps):
        d = dp(best)
        if d == 0 or best_res == 0:
            break
        cand = best - p(best) / d
        res = abs(p(cand))
        if res < best_res:
            best, best_res = cand, res
        else:
            break
    return best


def _cluster(roots: list[complex], tol: float) -> list[complex]:
    """Replace tight root clusters by their centroid.

    A group of ``m`` roots all within ``10 * tol**(1/m)`` of their centroid is
    treated as one root of multiplicity ``m``.
    """
    n = len(roots)
    if n < 2:
        return roots
    out = list(roots)
    used = [False] * n
    for i in range(n):
        if used[i]:
            continue
        members = [i]
        for m in range(2, n + 1):
            radius = 10.0 * tol ** (1.0 / m)
            cand = sorted(
                (j for j in range(n) if not used[j] and j not in members),
                key=lambda j: abs(roots[j] - roots[i]),
            )
            if not cand:
                break
            trial = members + [cand[0]]
            centroid = sum(roots[j] for j in trial) / len(trial)
            if all(abs(roots[j] - centroid) <= radius for j in trial):
                members = trial
            else:
                break
        if len(members) > 1:
            centroid = sum(roots[j] for j in members) / len(members)
            for j in members:
                out[j] = centroid
                used[j] = True
    return out


def poly_roots(
    p: Polynomial | Sequence[complex],
    tol: float = DEFAULT_ROOT_TOL,
    *,
    max_iter: int = 500,
    restarts: int = 8,
    seed: int = 0,
) -> list[complex]:
    """All complex roots of ``p`` with multiplicity.

    Parameters
    ----------
    p : Polynomial or sequence of complex
        Coefficients in ascending order.
    tol : float
        Each root ``r`` satisfies ``|p(r)| <= tol * sum_k |a_k| |r|^k``.
    max_iter, restarts : int
        Aberth iteration cap per attempt and number of perturbed restarts.
    seed : int
        Seed for the restart perturbations (results are deterministic).

    Raises
    ------
    RootFindingError
        When no attempt reaches the residual tolerance.
    """
    poly = _as_polynomial(p)
    if poly.degree < 1:
        raise ValueError("poly_roots needs degree >= 1")
    # exact zero roots
    coeffs = list(poly.coeffs)
    zeros = 0
    while coeffs[0] == 0:
        coeffs.pop(0)
        zeros += 1
    reduced = Polynomial(coeffs)
    roots: list[complex] = [0j] * zeros
    if reduced.degree == 0:
        return roots
    if reduced.degree == 1:
        return roots + [-coeffs[0] / coeffs[1]]

    arr = reduced.array()
    dreduced = reduced.deriv()
    eps = np.finfo(float).eps
    rng = None
    best, best_worst = None, math.inf
    for attempt in range(restarts + 1):
        init = _initial_guesses(arr, rng)
        if best is not None and rng is not None:
            init = best + (rng.normal(size=len(best)) + 1j * rng.normal(size=len(best))) * 1e-3 * (1 + np.abs(best))
        found, _, _ = _kernels.aberth(arr, init, max_iter, eps)
        found = [_newton_polish(reduced, dreduced, complex(z)) for z in found]
        found = _cluster(found, tol)
        residuals = [abs(reduced(z)) / max(reduced.abs_scale(z), 1e-300) for z in found]
        worst = max(residuals)
        if worst < best_worst:
            best, best_worst = np.array(found), worst
        if worst <= tol:
            return roots + found
        if rng is None:
            rng = np.random.default_rng(seed)
    best_list = [complex(z) for z in best]
    raise RootFindingError(
        f"root iteration stagnated (worst scaled residual {best_worst:.3e} > tol {tol:.1e})",
        roots + best_list,
        [0.0] * zeros + [abs(reduced(z)) / max(reduced.abs_scale(z), 1e-300) for z in best_list],
    )


def root_multiplicities(roots: Sequence[complex]) -> list[tuple[complex, int]]:
    """Group the clustered output of :func:`poly_roots` into ``(root, multiplicity)``."""
    out: list[tuple[complex, int]] = []
    for r in roots:
        for k, (s, m) in enumerate(out):
            if r == s:
                out[k] = (s, m + 1)
                break
        else:
            out.append((r, 1))
    return out
