"""Rational maps fixing infinity: evaluation, orbits, critical data, preimages."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .numerics import (
    DEFAULT_ROOT_TOL,
    ONE,
    Polynomial,
    RootFindingError,
    ScaledComplex,
    poly_roots,
)


class _PointAtInfinity:
    """Marker for the point at infinity of the Riemann sphere."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "INFINITY"

    def __reduce__(self):
        return (_PointAtInfinity, ())


INFINITY = _PointAtInfinity()


class PoleError(ZeroDivisionError):
    """Evaluation of a derivative at a pole of the map."""


class MapSpecError(ValueError):
    """Invalid map specification."""


def _coeffs(values: Iterable) -> list[complex]:
    out = []
    for v in values:
        if isinstance(v, (list, tuple)):
            if len(v) != 2:
                raise MapSpecError(f"complex literal must be [re, im], got {v!r}")
            out.append(complex(float(v[0]), float(v[1])))
        else:
            out.append(complex(v))
    return out


class RationalMap:
    """``R = P/Q`` with ``deg P > deg Q`` so that infinity is fixed.

    Critical data is computed eagerly; instances are immutable. Degree one
    (affine) maps are accepted so that Mobius conjugations can be represented;
    the dynamical analyses require degree at least two.

    Parameters
    ----------
    numerator, denominator : sequence of complex or Polynomial
        Ascending coefficients of ``P`` and ``Q``.
    root_tol : float
        Residual tolerance for the critical-point root solve.
    """

    def __init__(self, numerator, denominator=(1.0,), *, root_tol: float = DEFAULT_ROOT_TOL):
        P = numerator if isinstance(numerator, Polynomial) else Polynomial(_coeffs(numerator))
        Q = denominator if isinstance(denominator, Polynomial) else Polynomial(_coeffs(denominator))
        if Q.is_zero():
            raise MapSpecError("zero denominator")
        if P.degree <= Q.degree:
            raise MapSpecError(
                "infinity is not fixed (deg P <= deg Q); use conjugate_to_fix_infinity"
            )
        if P.degree < 1:
            raise MapSpecError("constant map")
        # normalize Q to be monic-ish only when it is a constant
        if Q.degree == 0:
            P = P * (1.0 / Q.coeffs[0])
            Q = Polynomial([1.0])
        self.P = P
        self.Q = Q
        self.root_tol = root_tol
        self.degree = P.degree
        if Q.degree > 0:
            for r in poly_roots(Q, root_tol):
                if abs(P(r)) <= 1e-9 * max(1.0, P.abs_scale(r)):
                    raise MapSpecError(f"numerator and denominator share the root {r!r}")
        self.dP = P.deriv()
        self.dQ = Q.deriv()
        # R' = W / Q^2 and R'' = (W' Q - 2 Q' W) / Q^3
        self.W = self.dP * Q - P * self.dQ
        self.W2 = self.W.deriv() * Q - (self.dQ * self.W) * 2.0
        self._arrays = (P.array(), self.dP.array(), Q.array(), self.dQ.array())
        if self.degree - Q.degree == 1:
            self.infinity_multiplier = Q.leading / P.leading
            self.infinity_superattracting = False
        else:
            self.infinity_multiplier = 0j
            self.infinity_superattracting = True
        self.critical_points: tuple[complex, ...] = tuple(
            sorted(poly_roots(self.W, root_tol), key=lambda z: (z.real, z.imag))
        ) if self.W.degree >= 1 else ()
        values = []
        for c in self.critical_points:
            v = self.eval(c)
            values.append(v)
        self.critical_values: tuple = tuple(values)

    # construction helpers -------------------------------------------------

    @classmethod
    def polynomial(cls, coeffs: Sequence[complex]) -> RationalMap:
        return cls(coeffs, [1.0])

    @classmethod
    def from_spec(cls, spec: dict) -> RationalMap:
        """Build from the JSON map format (see :func:`load_map_spec`)."""
        if "quadratic_c" in spec:
            c = _coeffs([spec["quadratic_c"]])[0]
            return QuadraticMap(c)
        if "numerator" not in spec:
            raise MapSpecError("map spec needs 'numerator' or 'quadratic_c'")
        return cls(_coeffs(spec["numerator"]), _coeffs(spec.get("denominator", [1.0])))

    def to_spec(self) -> dict:
        enc = lambda p: [[c.real, c.imag] for c in p.coeffs]  # noqa: E731
        return {"numerator": enc(self.P), "denominator": enc(self.Q)}

    # properties -----------------------------------------------------------

    @property
    def is_polynomial(self) -> bool:
        return self.Q.degree == 0

    @property
    def infinity_critical_order(self) -> int:
        """Multiplicity of infinity as a critical point."""
        return self.degree - self.Q.degree - 1

    @property
    def finite_critical_values(self) -> tuple[complex, ...]:
        return tuple(v for v in self.critical_values if v is not INFINITY)

    def second_derivatives_at_critical(self) -> tuple[complex, ...]:
        return tuple(self.deriv(c, 2) for c in self.critical_points)

    def coefficient_bound(self) -> float:
        lead = abs(self.P.leading)
        return max((abs(c) / lead for c in self.P.coeffs[:-1]), default=0.0)

    def default_escape_radius(self) -> float:
        return 2.0 * max(1.0, self.coefficient_bound())

    def __repr__(self) -> str:
        return f"RationalMap(P={list(self.P.coeffs)!r}, Q={list(self.Q.coeffs)!r})"

    def __eq__(self, other) -> bool:
        return isinstance(other, RationalMap) and self.P == other.P and self.Q == other.Q

    def __hash__(self) -> int:
        return hash((self.P, self.Q))

    # evaluation -----------------------------------------------------------

    def eval(self, z):
        """``P(z)/Q(z)``; returns :data:`INFINITY` at a pole or for ``z = INFINITY``."""
        if z is INFINITY:
            return INFINITY
        q = self.Q(z)
        if q == 0:
            return INFINITY
        w = self.P(z) / q
        if not (math.isfinite(w.real) and math.isfinite(w.imag)):
            return INFINITY
        return w

    __call__ = eval

    def deriv(self, z: complex, order: int = 1) -> complex:
        if order not in (1, 2):
            raise ValueError("order must be 1 or 2")
        q = self.Q(z)
        if q == 0:
            raise PoleError(f"{z!r} is a pole of the map")
        if order == 1:
            return self.W(z) / (q * q)
        return self.W2(z) / (q * q * q)

    def iterate(self, z: complex, n: int):
        for _ in range(n):
            z = self.eval(z)
            if z is INFINITY:
                return INFINITY
        return z


class QuadraticMap(RationalMap):
    """``z**2 + c``; critical point exactly 0, critical value exactly ``c``."""

    def __init__(self, c: complex):
        self.c = complex(c)
        super().__init__([self.c, 0.0, 1.0], [1.0])
        self.critical_points = (0j,)
        self.critical_values = (self.c,)

    def eval(self, z):
        if z is INFINITY:
            return INFINITY
        return z * z + self.c

    __call__ = eval

    def deriv(self, z: complex, order: int = 1) -> complex:
        if order == 1:
            return 2 * z
        if order == 2:
            return 2 + 0j
        raise ValueError("order must be 1 or 2")

    def to_spec(self) -> dict:
        return {"quadratic_c": [self.c.real, self.c.imag]}

    def __repr__(self) -> str:
        return f"QuadraticMap(c={self.c!r})"


# free-function API ----------------------------------------------------------


def eval_map(R: RationalMap, z):
    return R.eval(z)


def deriv(R: RationalMap, z: complex, order: int = 1) -> complex:
    return R.deriv(z, order)


@dataclass(frozen=True)
class OrbitData:
    """Orbit ``z_0..z_N`` with cumulative derivatives ``(R^n)'(z_0)``."""

    points: tuple[complex, ...]
    cumulative_derivatives: tuple[ScaledComplex, ...]
    escaped_at: int | None = None
    hit_pole: bool = False
    overflowed: bool = False

    def __len__(self) -> int:
        return len(self.points)


def orbit(R: RationalMap, z0: complex, N: int, escape_radius: float | None = None) -> OrbitData:
    """Forward orbit of ``z0`` with chain-rule derivatives.

    Stops early when ``|z| > escape_radius`` (``escaped_at`` is then the index
    of the first point outside), when the orbit lands on a pole, or when the
    next point or derivative is not a finite double (``overflowed``).
    """
    if N < 0:
        raise ValueError("N must be >= 0")
    if escape_radius is None:
        escape_radius = R.default_escape_radius()
    P, dP, Q, dQ = R._arrays
    pts, mant, expo, count, status = _kernels.orbit(P, dP, Q, dQ, complex(z0), int(N), float(escape_radius))
    points = tuple(complex(p) for p in pts[:count])
    derivs = tuple(
        ScaledComplex(complex(m), int(e)) if m != 0 else ScaledComplex() for m, e in zip(mant[:count], expo[:count])
    )
    return OrbitData(
        points=points,
        cumulative_derivatives=derivs,
        escaped_at=count - 1 if status == _kernels.STATUS_ESCAPED else None,
        hit_pole=status == _kernels.STATUS_POLE,
        overflowed=status == _kernels.STATUS_OVERFLOW,
    )


def preimages(R: RationalMap, w: complex, tol: float | None = None) -> list[complex]:
    """The ``d`` roots of ``P(y) - w Q(y)``, with multiplicity."""
    tol = R.root_tol if tol is None else tol
    if isinstance(R, QuadraticMap):
        s = complex(np.sqrt(complex(w) - R.c))
        roots = [s, -s]
    else:
        poly = R.P - R.Q * complex(w)
        try:
            roots = poly_roots(poly, tol)
        except RootFindingError as exc:
            raise RootFindingError(f"preimages of {w!r}: {exc}", exc.best, exc.residuals) from exc
    bound = 1e-8 * max(1.0, abs(w))
    for y in roots:
        val = R.eval(y)
        if val is INFINITY or abs(val - w) > bound:
            # residuals of multiple roots are checked on the defining polynomial
            poly = R.P - R.Q * complex(w)
            if abs(poly(y)) > tol * max(poly.abs_scale(y), 1e-300) * 1e4:
                raise RootFindingError(f"preimage {y!r} of {w!r} fails the residual check", roots, [])
    return roots


@dataclass(frozen=True)
class Verdict:
    """Pass/fail verdict with an optional witness and warnings."""

    ok: bool
    witness: dict | None = None
    warnings: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {"ok": self.ok, "witness": self.witness, "warnings": list(self.warnings)}


def check_simple_critical_points(R: RationalMap, tol: float = 1e-9) -> Verdict:
    """Every finite critical point has ``|R''(c)| > tol`` and finite critical value."""
    expected = 2 * R.degree - 2 - R.infinity_critical_order
    if len(R.critical_points) != expected:
        return Verdict(False, {"reason": "critical count mismatch", "found": len(R.critical_points), "expected": expected})
    for c, v in zip(R.critical_points, R.critical_values):
        if v is INFINITY:
            return Verdict(False, {"reason": "critical point is a pole", "c": _enc(c)})
        second = R.deriv(c, 2)
        if abs(second) <= tol:
            return Verdict(False, {"reason": "degenerate critical point", "c": _enc(c), "R2": _enc(second)})
    for i, a in enumerate(R.critical_points):
        for b in R.critical_points[i + 1:]:
            if abs(a - b) <= 1e-7 * max(1.0, abs(a)):
                return Verdict(False, {"reason": "multiple critical point", "c": _enc(a)})
    if R.infinity_critical_order > 1:
        return Verdict(False, {"reason": "infinity is a multiple critical point", "order": R.infinity_critical_order})
    return Verdict(True)


def check_no_simple_critical_relations(R: RationalMap, N: int, tol: float = 1e-9, warn_tol: float = 1e-6) -> Verdict:
    """No ``R^n(c1) = R^m(c2)`` for distinct finite critical points and ``n, m <= N``."""
    cps = list(R.critical_points)
    if len(cps) < 2:
        return Verdict(True)
    orbits = []
    for c in cps:
        pts = [c]
        z = c
        for _ in range(N):
            z = R.eval(z)
            if z is INFINITY:
                break
            pts.append(z)
        orbits.append(pts)
    warnings = []
    for i in range(len(cps)):
        for j in range(i + 1, len(cps)):
            for n, u in enumerate(orbits[i]):
                for m, v in enumerate(orbits[j]):
                    dist = abs(u - v)
                    if dist <= tol:
                        return Verdict(
                            False,
                            {"c1": _enc(cps[i]), "c2": _enc(cps[j]), "n": n, "m": m, "distance": dist},
                        )
                    if dist <= warn_tol:
                        warnings.append(f"near collision R^{n}(c{i}) ~ R^{m}(c{j}) at distance {dist:.2e}")
    return Verdict(True, None, tuple(warnings))


def conjugate_to_fix_infinity(R, fixed_point, tol: float = 1e-9) -> RationalMap:
    """Conjugate by ``M(z) = 1/(z - p)`` so that the fixed point ``p`` goes to infinity.

    ``R`` may be a :class:`RationalMap` or a ``(numerator, denominator)`` pair
    of coefficient sequences for a map that does not fix infinity.
    """
    if isinstance(R, RationalMap):
        P, Q = R.P, R.Q
    else:
        num, den = R
        P = num if isinstance(num, Polynomial) else Polynomial(_coeffs(num))
        Q = den if isinstance(den, Polynomial) else Polynomial(_coeffs(den))
    if fixed_point is INFINITY:
        if not isinstance(R, RationalMap):
            return RationalMap(P, Q)
        return R
    p = complex(fixed_point)
    qp = Q(p)
    if qp == 0 or abs(P(p) / qp - p) > tol * max(1.0, abs(p)):
        raise ValueError(f"{p!r} is not a fixed point")
    d = max(P.degree, Q.degree)

    def homogenize(poly: Polynomial) -> Polynomial:
        # w^d * poly(p + 1/w) = sum_k a_k (p w + 1)^k w^(d-k)
        out = Polynomial()
        base = Polynomial([1.0, p])
        for k, a in enumerate(poly.coeffs):
            term = Polynomial([a])
            for _ in range(k):
                term = term * base
            shift = Polynomial([0.0] * (d - k) + [1.0])
            out = out + term * shift
        return out

    Ph = homogenize(P)
    Qh = homogenize(Q)
    new_num = Qh
    den = Ph - Qh * p
    # the w^d coefficient of den is Q(p) (R(p) - p) = 0 exactly
    den_coeffs = list(den.coeffs[:d])
    new_den = Polynomial(den_coeffs)
    scale = 1.0 / new_num.leading
    return RationalMap(new_num * scale, new_den * scale)


def map_multiplier_at(R, z: complex) -> complex:
    return R.deriv(z)


def find_attracting_cycles(
    R: RationalMap,
    max_period: int = 8,
    samples: int = 32,
    *,
    seed: int = 0,
    burn_in: int = 2000,
) -> list[tuple[tuple[complex, ...], complex]]:
    """Heuristic search for finite attracting cycles.

    Seeds are the tails of critical orbits plus ``samples`` random points;
    each seed is iterated ``burn_in`` times and then refined by Newton on
    ``R^p(z) = z``. Not guaranteed complete.
    """
    rng = np.random.default_rng(seed)
    radius = R.default_escape_radius()
    seeds = list(R.critical_points) + list(R.finite_critical_values)
    seeds += list(radius * np.sqrt(rng.uniform(0, 1, samples)) * np.exp(2j * np.pi * rng.uniform(0, 1, samples)))
    cycles: list[tuple[tuple[complex, ...], complex]] = []
    for s in seeds:
        z = complex(s)
        escaped = False
        for _ in range(burn_in):
            z = R.eval(z)
            if z is INFINITY or abs(z) > 1e8 * radius:
                escaped = True
                break
        if escaped:
            continue
        for p in range(1, max_period + 1):
            found = _newton_cycle(R, z, p)
            if found is None:
                continue
            pts, mult = found
            if abs(mult) >= 1.0:
                continue
            if not any(_same_cycle(pts, other) for other, _ in cycles):
                cycles.append((pts, mult))
            break
    return cycles


def _newton_cycle(R: RationalMap, z: complex, p: int, steps: int = 40):
    for _ in range(steps):
        w, dw = z, 1 + 0j
        for _ in range(p):
            try:
                dw *= R.deriv(w)
            except PoleError:
                return None
            w = R.eval(w)
            if w is INFINITY:
                return None
        g = w - z
        if abs(g) <= 1e-13 * max(1.0, abs(z)):
            break
        denom = dw - 1
        if denom == 0:
            return None
        z = z - g / denom
    else:
        return None
    pts = [z]
    mult = 1 + 0j
    w = z
    for k in range(p):
        mult *= R.deriv(w)
        w = R.eval(w)
        if k < p - 1:
            pts.append(w)
    # minimal period only
    for q in range(1, p):
        if p % q == 0 and abs(pts[q] - pts[0]) <= 1e-9 * max(1.0, abs(z)):
            return None
    return tuple(pts), mult


def _same_cycle(a: Sequence[complex], b: Sequence[complex], tol: float = 1e-6) -> bool:
    if len(a) != len(b):
        return False
    return all(min(abs(x - y) for y in b) < tol for x in a)


def escape_radius_bound(R: RationalMap) -> float:
    """Radius ``r`` such that ``|z| > r`` implies ``|R(z)| > |z|``.

    Raises ``ValueError`` when infinity is not attracting.
    """
    if not R.infinity_superattracting and abs(R.infinity_multiplier) >= 1.0:
        raise ValueError("infinity is not attracting; no escape disk")
    P, Q = R.P, R.Q
    lead = abs(P.leading)
    low = [abs(c) for c in P.coeffs[:-1]]
    qabs = [abs(c) for c in Q.coeffs]

    def good(r: float) -> bool:
        lower = lead * r**P.degree - sum(a * r**k for k, a in enumerate(low))
        upper = sum(a * r**k for k, a in enumerate(qabs))
        return lower > r * upper

    if R.is_polynomial:
        # largest positive root of lead r^d - sum_k |a_k| r^k - |q0| r
        coeffs = [-a for a in low] + [lead]
        coeffs[1] -= qabs[0]
        roots = np.roots(coeffs[::-1])
        real = [float(r.real) for r in roots if abs(r.imag) < 1e-9 and r.real > 0]
        return max(real, default=1.0)
    r = 1.0
    while not good(r):
        r *= 2.0
        if r > 1e12:
            raise ValueError("could not bound the escape radius")
    lo, hi = r / 2, r
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if good(mid):
            hi = mid
        else:
            lo = mid
    return hi * 1.001


def load_map_spec(path: str | Path) -> RationalMap:
    """Read ``{"numerator": [...], "denominator": [...]}`` or ``{"quadratic_c": [re, im]}``."""
    try:
        spec = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise MapSpecError(f"map file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise MapSpecError(f"map file is not valid JSON: {exc}") from exc
    if not isinstance(spec, dict):
        raise MapSpecError("map spec must be a JSON object")
    return RationalMap.from_spec(spec)


def _enc(z: complex) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]
