"""Partial fractions of ``1/(R^n)'`` and the derived sums ``s_n`` and ``B_n``.

For a map with simple critical points and no critical relations,

    1/(R^n)'(z) = sum_i b_i / (z - y_i) + p_n

where the ``y_i`` run over ``R^{-k}(c)`` for finite critical points ``c`` and
``0 <= k < n``. The residue at ``y in R^{-k}(c)`` is

    b = 1 / (R''(c) * (R^{n-k-1})'(R(c)) * ((R^k)'(y))**2)

and ``p_n`` is the constant ``lambda**n`` (``lambda`` the multiplier at infinity).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import NamedTuple

from .maps import INFINITY, RationalMap, orbit, preimages
from .numerics import ONE, ZERO, ScaledComplex

POLE_DEDUP_TOL = 1e-10


class CriticalRelationError(ValueError):
    """A preimage tree or critical orbit meets a critical point."""


class DepthCapError(ValueError):
    """Requested depth exceeds the exponential-cost cap."""


class PoleCollisionError(ValueError):
    """Evaluation point coincides with a pole of the decomposition."""


class Pole(NamedTuple):
    location: complex
    depth: int
    critical_index: int
    critical_point: complex


def default_depth_cap(R: RationalMap) -> int:
    if R.degree == 2:
        return 10
    ncrit = max(1, len(R.critical_points))
    n = 1
    while ncrit * (R.degree ** (n + 1) - 1) // (R.degree - 1) <= 4096:
        n += 1
    return n


@dataclass(frozen=True)
class ResolventDecomposition:
    n: int
    poles: tuple[Pole, ...]
    residues: tuple[ScaledComplex, ...]
    polynomial_part: complex
    lambda_power: complex

    def __len__(self) -> int:
        return len(self.poles)

    def evaluate(self, z: complex) -> complex:
        """``sum b_i/(z - y_i) + p_n``."""
        total = ZERO
        for pole, b in zip(self.poles, self.residues):
            total = total + b * (1.0 / (z - pole.location))
        return total.to_complex() + self.polynomial_part

    def polynomial_part_mismatch(self) -> float:
        return abs(self.polynomial_part - self.lambda_power)


def _forward_derivatives(R: RationalMap, c: complex, n: int) -> list[ScaledComplex]:
    """``(R^m)'(R(c))`` for ``m = 0..n-1``."""
    v = R.eval(c)
    if v is INFINITY:
        raise CriticalRelationError(f"critical point {c!r} is a pole")
    od = orbit(R, v, max(n - 1, 0), escape_radius=math.inf)
    if len(od.points) < n:
        raise CriticalRelationError(f"orbit of R({c!r}) reaches a pole")
    derivs = list(od.cumulative_derivatives[:n])
    for m, d in enumerate(derivs):
        if d.is_zero():
            raise CriticalRelationError(
                f"critical relation: R^{m}(R(c)) is critical for c={c!r}"
            )
    return derivs


def _check_distinct(poles: list[Pole], tol: float = POLE_DEDUP_TOL) -> None:
    order = sorted(range(len(poles)), key=lambda i: poles[i].location.real)
    for a_pos, i in enumerate(order):
        zi = poles[i].location
        for j in order[a_pos + 1:]:
            zj = poles[j].location
            if zj.real - zi.real > tol:
                break
            if abs(zj - zi) <= tol:
                raise CriticalRelationError(
                    f"poles collide at {zi!r}: depth {poles[i].depth} of c{poles[i].critical_index} "
                    f"and depth {poles[j].depth} of c{poles[j].critical_index}"
                )


def polynomial_part_estimate(R: RationalMap, n: int, radius: float = 1e6, angle: float = 0.3) -> complex:
    """Limit of ``1/(R^n)'(z)`` at infinity by Richardson extrapolation."""

    def f(r: float) -> complex:
        z = r * cmath.exp(1j * angle)
        od = orbit(R, z, n, escape_radius=math.inf)
        if len(od.points) < n + 1:
            # orbit overflowed: |(R^n)'| is far beyond the double range
            return 0j
        d = od.cumulative_derivatives[n]
        if d.is_zero():
            raise ZeroDivisionError("critical point at large radius")
        return d.reciprocal().to_complex()

    return 2.0 * f(2.0 * radius) - f(radius)


def decompose(R: RationalMap, n: int, depth_cap: int | None = None) -> ResolventDecomposition:
    """Partial-fraction decomposition of ``1/(R^n)'``.

    Raises
    ------
    CriticalRelationError
        When a critical orbit or preimage tree meets a critical point, which
        would make a pole non-simple.
    DepthCapError
        When ``n`` exceeds ``depth_cap``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    cap = default_depth_cap(R) if depth_cap is None else depth_cap
    if n > cap:
        raise DepthCapError(f"n={n} exceeds the depth cap {cap}")
    poles: list[Pole] = []
    residues: list[ScaledComplex] = []
    for i, c in enumerate(R.critical_points):
        second = R.deriv(c, 2)
        if second == 0:
            raise CriticalRelationError(f"critical point {c!r} is not simple")
        forward = _forward_derivatives(R, c, n)
        level: list[tuple[complex, ScaledComplex]] = [(c, ONE)]
        for k in range(n):
            base = ScaledComplex.of(second) * forward[n - k - 1]
            for y, dk in level:
                poles.append(Pole(y, k, i, c))
                residues.append((base * dk * dk).reciprocal())
            if k == n - 1:
                break
            nxt = []
            for y, dk in level:
                for y2 in preimages(R, y):
                    r1 = R.deriv(y2)
                    if abs(r1) <= 1e-12 * max(1.0, abs(y2)):
                        raise CriticalRelationError(
                            f"preimage {y2!r} of depth {k + 1} over c={c!r} is a critical point"
                        )
                    nxt.append((y2, dk * r1))
            level = nxt
    _check_distinct(poles)
    order = sorted(range(len(poles)), key=lambda j: (poles[j].location.real, poles[j].location.imag))
    lam_n = R.infinity_multiplier**n
    p_est = polynomial_part_estimate(R, n)
    return ResolventDecomposition(
        n=n,
        poles=tuple(poles[j] for j in order),
        residues=tuple(residues[j] for j in order),
        polynomial_part=p_est,
        lambda_power=lam_n,
    )


def s_n(dec: ResolventDecomposition, a: complex, tol: float = 1e-12) -> ScaledComplex:
    """``sum_i |b_i| / |a - y_i|``."""
    total = ZERO
    for pole, b in zip(dec.poles, dec.residues):
        dist = abs(a - pole.location)
        if dist <= tol:
            raise PoleCollisionError(f"{a!r} is within {tol:g} of the pole {pole.location!r} (n={dec.n})")
        total = total + b.abs() * (1.0 / dist)
    return total


def B_n(dec: ResolventDecomposition) -> ScaledComplex:
    """``sum_i |b_i|``."""
    total = ZERO
    for b in dec.residues:
        total = total + b.abs()
    return total


def B_n_grouped(dec: ResolventDecomposition) -> dict[tuple[int, int], ScaledComplex]:
    """``sum |b|`` per (critical index, depth) group."""
    groups: dict[tuple[int, int], ScaledComplex] = {}
    for pole, b in zip(dec.poles, dec.residues):
        key = (pole.critical_index, pole.depth)
        groups[key] = groups.get(key, ZERO) + b.abs()
    return dict(sorted(groups.items()))


def residue_limit(R: RationalMap, n: int, pole: complex, radius: float = 1e-2, points: int = 32, tol: float = 1e-9) -> complex:
    """Numeric residue of ``1/(R^n)'`` at ``pole`` from trapezoid contour integrals.

    The circle is halved until two consecutive radii agree to ``tol``, so a
    neighbouring pole inside the first circle is shed without knowing where it is.
    """

    def contour(r: float) -> complex:
        total = 0j
        for k in range(points):
            u = r * cmath.exp(2j * math.pi * (k + 0.5) / points)
            od = orbit(R, pole + u, n, escape_radius=math.inf)
            total += (ScaledComplex.of(u) / od.cumulative_derivatives[n]).to_complex()
        return total / points

    prev = contour(radius)
    for _ in range(30):
        radius *= 0.5
        cur = contour(radius)
        if abs(cur - prev) <= tol * max(abs(cur), 1e-300):
            return cur
        prev = cur
    raise ArithmeticError(f"contour residue at {pole!r} did not settle")
