"""The Ruelle operator on Cauchy-kernel combinations, and its relatives.

``R*`` maps a function ``phi`` to ``z -> sum_{R(y)=z} phi(y) / R'(y)**2``. On the
kernel ``tau_a(z) = 1/(z - a)`` it acts in closed form:

    R*(tau_a) = tau_{R(a)} / R'(a) - sum_i b_i / (a - c_i) * tau_{R(c_i)}

with ``b_i = 1/R''(c_i)``, so finite combinations of kernels are closed under
``R*`` as long as no kernel sits on a critical point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .maps import INFINITY, PoleError, RationalMap, orbit, preimages
from .numerics import ONE, ZERO, ScaledComplex
from .resolvent import decompose

EvaluableField = Callable[[complex], complex]

MERGE_TOL = 1e-12
CRITICAL_TOL = 1e-10


class KernelAtCriticalPointError(ValueError):
    """A kernel pole sits on a critical point, outside the closed family."""


class CriticalFiberError(ValueError):
    """A preimage fiber passes through a critical point."""


class AtomCollisionError(ValueError):
    """Evaluation point coincides with an atom."""


def merge_atoms(
    atoms: Iterable[tuple[complex, ScaledComplex]], tol: float = MERGE_TOL
) -> tuple[tuple[complex, ScaledComplex], ...]:
    """Sum weights of atoms closer than ``tol``; drop exact zeros; sort by (re, im)."""
    items = sorted(((complex(a), ScaledComplex.of(w)) for a, w in atoms), key=lambda t: (t[0].real, t[0].imag))
    merged: list[list] = []
    for a, w in items:
        target = None
        for slot in reversed(merged):
            if a.real - slot[0].real > tol:
                break
            if abs(a - slot[0]) <= tol:
                target = slot
                break
        if target is None:
            merged.append([a, w])
        else:
            target[1] = target[1] + w
    out = [(a, w) for a, w in merged if not w.is_zero()]
    out.sort(key=lambda t: (t[0].real, t[0].imag))
    return tuple(out)


@dataclass(frozen=True)
class CauchyCombo:
    """``sum_k w_k / (z - a_k) + constant_part``."""

    atoms: tuple[tuple[complex, ScaledComplex], ...] = ()
    constant_part: complex = 0j

    @classmethod
    def from_atoms(cls, atoms: Iterable[tuple[complex, complex | ScaledComplex]], constant_part: complex = 0j) -> CauchyCombo:
        return cls(merge_atoms(atoms), complex(constant_part))

    @classmethod
    def tau(cls, a: complex) -> CauchyCombo:
        return cls(((complex(a), ONE),))

    def __len__(self) -> int:
        return len(self.atoms)

    @property
    def poles(self) -> tuple[complex, ...]:
        return tuple(a for a, _ in self.atoms)

    def weight_at(self, a: complex, tol: float = 1e-9) -> ScaledComplex:
        total = ZERO
        for p, w in self.atoms:
            if abs(p - a) <= tol:
                total = total + w
        return total

    def total_weight(self) -> ScaledComplex:
        total = ZERO
        for _, w in self.atoms:
            total = total + w
        return total

    def evaluate_scaled(self, z: complex, tol: float = 0.0) -> ScaledComplex:
        total = ScaledComplex.of(self.constant_part)
        for a, w in self.atoms:
            diff = z - a
            if abs(diff) <= tol or diff == 0:
                raise AtomCollisionError(f"{z!r} coincides with the atom {a!r}")
            total = total + w * (1.0 / diff)
        return total

    def __call__(self, z: complex) -> complex:
        return self.evaluate_scaled(z).to_complex()

    def scale(self, alpha: complex | ScaledComplex) -> CauchyCombo:
        s = ScaledComplex.of(alpha)
        return CauchyCombo(
            merge_atoms((a, w * s) for a, w in self.atoms),
            complex(self.constant_part * complex(alpha)),
        )

    def __add__(self, other: CauchyCombo) -> CauchyCombo:
        return CauchyCombo(merge_atoms(self.atoms + other.atoms), self.constant_part + other.constant_part)

    def __neg__(self) -> CauchyCombo:
        return CauchyCombo(tuple((a, -w) for a, w in self.atoms), -self.constant_part)

    def __sub__(self, other: CauchyCombo) -> CauchyCombo:
        return self + (-other)


def _critical_data(R: RationalMap) -> list[tuple[complex, complex, complex]]:
    """``(c_i, b_i, R(c_i))`` for the finite critical points."""
    out = []
    for c, v in zip(R.critical_points, R.critical_values):
        second = R.deriv(c, 2)
        if second == 0:
            raise KernelAtCriticalPointError(f"critical point {c!r} is not simple")
        out.append((c, 1.0 / second, v))
    return out


def apply_star(R: RationalMap, phi: CauchyCombo) -> CauchyCombo:
    """One step of ``R*`` in closed form.

    A constant ``k`` is mapped to ``k * (sum_i b_i tau_{R(c_i)} + lambda**2)``,
    which is again in the family. A kernel on a critical point is only
    admissible for quadratic polynomials, where the two preimage branches
    cancel and it is sent to zero.
    """
    crit = _critical_data(R)
    if any(v is INFINITY for _, _, v in crit):
        raise KernelAtCriticalPointError("a critical value is infinite; kernels leave the family")
    symmetric = R.is_polynomial and R.degree == 2
    out: list[tuple[complex, ScaledComplex]] = []
    for a, w in phi.atoms:
        hit = next((c for c, _, _ in crit if abs(a - c) <= CRITICAL_TOL), None)
        if hit is not None:
            if symmetric and a == hit:
                continue
            raise KernelAtCriticalPointError(f"kernel pole {a!r} is the critical point {hit!r}")
        image = R.eval(a)
        if image is not INFINITY:
            out.append((image, w / R.deriv(a)))
        for c, b, v in crit:
            out.append((v, -(w * (b / (a - c)))))
    const = 0j
    if phi.constant_part != 0:
        lam = R.infinity_multiplier
        const = phi.constant_part * lam * lam
        for _, b, v in crit:
            out.append((v, ScaledComplex.of(phi.constant_part * b)))
    return CauchyCombo(merge_atoms(out), const)


def apply_star_n(R: RationalMap, phi: CauchyCombo, n: int) -> CauchyCombo:
    for _ in range(n):
        phi = apply_star(R, phi)
    return phi


def star_closed_form(R: RationalMap, a: complex, n: int) -> CauchyCombo:
    """``(R*)^n tau_a`` directly from the partial fractions of ``1/(R^n)'``.

    ``tau_{R^n(a)} / (R^n)'(a) - sum_j b_j / (a - y_j) * tau_{R^n(y_j)}``.
    """
    dec = decompose(R, n)
    od = orbit(R, a, n, escape_radius=math.inf)
    if len(od.points) < n + 1:
        raise PoleError(f"orbit of {a!r} leaves the plane before step {n}")
    atoms = [(od.points[n], od.cumulative_derivatives[n].reciprocal())]
    for pole, b in zip(dec.poles, dec.residues):
        target = R.iterate(pole.location, n)
        if target is INFINITY:
            raise PoleError(f"pole {pole.location!r} maps to infinity")
        atoms.append((target, -(b * (1.0 / (a - pole.location)))))
    return CauchyCombo.from_atoms(atoms)


def apply_star_oracle(R: RationalMap, phi: EvaluableField, z: complex, n: int = 1, max_points: int = 4096) -> complex:
    """``sum_{R^n(y)=z} phi(y) / ((R^n)'(y))**2`` by expanding fibers."""
    if R.degree**n > max_points:
        raise ValueError(f"fiber of size {R.degree}**{n} exceeds {max_points}")
    level: list[tuple[complex, ScaledComplex]] = [(complex(z), ONE)]
    for step in range(n):
        nxt = []
        for y, dk in level:
            for y2 in preimages(R, y):
                r1 = R.deriv(y2)
                if abs(r1) <= 1e-12 * max(1.0, abs(y2)):
                    raise CriticalFiberError(f"fiber over {z!r} meets the critical point {y2!r} at step {step + 1}")
                nxt.append((y2, dk * r1))
        level = nxt
    total = ZERO
    for y, dk in level:
        total = total + ScaledComplex.of(phi(y)) / (dk * dk)
    return total.to_complex()


def pushforward(R: RationalMap, phi: EvaluableField) -> EvaluableField:
    """``z -> phi(R(z)) * R'(z)**2``."""

    def pushed(z: complex) -> complex:
        return phi(R.eval(z)) * R.deriv(z) ** 2

    return pushed


def beltrami_eval(R: RationalMap, mu: EvaluableField, z: complex) -> complex:
    """``mu(R(z)) * conj(R'(z)) / R'(z)``."""
    r1 = R.deriv(z)
    if r1 == 0:
        raise KernelAtCriticalPointError(f"{z!r} is a critical point")
    return mu(R.eval(z)) * (r1.conjugate() / r1)


def apply_T(R: RationalMap, F: EvaluableField, a: complex) -> complex:
    """``F(R(a))/R'(a) - sum_i b_i F(R(c_i)) / (a - c_i)``."""
    crit = _critical_data(R)
    for c, _, _ in crit:
        if abs(a - c) <= CRITICAL_TOL:
            raise KernelAtCriticalPointError(f"{a!r} is the critical point {c!r}")
    image = R.eval(a)
    if image is INFINITY:
        raise PoleError(f"{a!r} is a pole of the map")
    total = F(image) / R.deriv(a)
    for c, b, v in crit:
        total -= b * F(v) / (a - c)
    return total


@dataclass
class _OrbitTable:
    points: list[complex]
    inv_derivs: list[ScaledComplex]


def _orbit_table(R: RationalMap, x: complex, N: int) -> _OrbitTable:
    od = orbit(R, x, N, escape_radius=math.inf)
    if len(od.points) < N + 1:
        raise PoleError(f"orbit of {x!r} is undefined within {N} steps")
    inv = []
    for k, d in enumerate(od.cumulative_derivatives):
        if d.is_zero():
            raise KernelAtCriticalPointError(f"orbit of {x!r} meets a critical point at step {k}")
        inv.append(d.reciprocal())
    return _OrbitTable(list(od.points), inv)


def T_iterates(R: RationalMap, F: EvaluableField, a: complex, N: int) -> list[ScaledComplex]:
    """``T^j(F)(a)`` for ``j = 0..N-1``.

    Uses the unfolded recursion

        G_n(x) = F(R^n x)/(R^n)'(x)
                 - sum_{k<n} 1/(R^k)'(x) sum_i b_i G_{n-1-k}(d_i) / (R^k(x) - c_i)

    with ``G_j(d_i)`` memoized, in scaled arithmetic throughout.
    """
    if N <= 0:
        return []
    crit = _critical_data(R)
    values = [v for _, _, v in crit]
    if any(v is INFINITY for v in values):
        raise PoleError("a critical value is infinite")
    tables = [_orbit_table(R, x, N) for x in [complex(a)] + values]
    for t in tables:
        for k in range(N):
            for c, _, _ in crit:
                if abs(t.points[k] - c) <= CRITICAL_TOL:
                    raise KernelAtCriticalPointError(f"orbit meets the critical point {c!r} at step {k}")
    Fvals = [[ScaledComplex.of(F(t.points[k])) for k in range(N)] for t in tables]
    m = len(crit)
    # G[j][i] = G_j(d_i)
    G: list[list[ScaledComplex]] = []
    coeff = [[[ScaledComplex.of(b / (t.points[k] - c)) * t.inv_derivs[k] for c, b, _ in crit] for k in range(N)] for t in tables]

    def G_n(tidx: int, n: int) -> ScaledComplex:
        t = tables[tidx]
        total = Fvals[tidx][n] * t.inv_derivs[n]
        for k in range(n):
            row = G[n - 1 - k]
            for i in range(m):
                total = total - coeff[tidx][k][i] * row[i]
        return total

    out = []
    for n in range(N):
        G.append([G_n(1 + i, n) for i in range(m)])
        out.append(G_n(0, n))
    return out


def cesaro_T(R: RationalMap, F: EvaluableField, a: complex, N: int) -> list[complex]:
    """Cesaro averages ``A_m = (1/m) sum_{j<m} T^j(F)(a)``, ``m = 1..N``.

    Values outside the double range are returned as ``inf`` only when the
    average itself is not representable; use :func:`cesaro_T_scaled` otherwise.
    """
    return [v.to_complex() for v in cesaro_T_scaled(R, F, a, N)]


def cesaro_T_scaled(R: RationalMap, F: EvaluableField, a: complex, N: int) -> list[ScaledComplex]:
    it = T_iterates(R, F, a, N)
    out = []
    acc = ZERO
    for m, v in enumerate(it, start=1):
        acc = acc + v
        out.append(acc * (1.0 / m))
    return out


@dataclass(frozen=True)
class BoundCheck:
    m: int
    average_abs: float
    bound: float
    ok: bool


def cesaro_bound_trail(R: RationalMap, F: EvaluableField, a: complex, m_max: int, sup_F: float) -> list[BoundCheck]:
    """Compare ``|A_m|`` with ``(1/m) sum_{j<m} (2 s_j(a) + |lambda|**j) sup|F|``.

    ``s_0 = 0`` since ``1/(R^0)' = 1`` has no poles; the ``|lambda|**j`` term
    accounts for the constant part of each decomposition.
    """
    from .resolvent import s_n

    averages = cesaro_T_scaled(R, F, a, m_max)
    lam = abs(R.infinity_multiplier)
    acc = 0.0
    out = []
    for m in range(1, m_max + 1):
        j = m - 1
        sj = 0.0 if j == 0 else float(s_n(decompose(R, j), a))
        acc += 2.0 * sj + lam**j
        bound = acc / m * sup_F
        val = float(averages[m - 1].abs())
        out.append(BoundCheck(m, val, bound, val <= bound * (1 + 1e-9)))
    return out


def pair_with_measure(atoms: Sequence[tuple[complex, ScaledComplex]], phi: EvaluableField) -> complex:
    """``sum_k w_k phi(x_k)`` for an atomic measure."""
    total = ZERO
    for x, w in atoms:
        total = total + w * phi(x)
    return total.to_complex()


def cauchy_transform(atoms: Sequence[tuple[complex, ScaledComplex]]) -> EvaluableField:
    """``F(a) = <mu, tau_a> = sum_k w_k / (x_k - a)``."""

    def F(a: complex) -> complex:
        return pair_with_measure(atoms, lambda x: 1.0 / (x - a))

    return F


def random_points(rng: np.random.Generator, n: int, radius: float) -> list[complex]:
    r = radius * np.sqrt(rng.uniform(0, 1, n))
    t = rng.uniform(0, 2 * np.pi, n)
    return [complex(z) for z in r * np.exp(1j * t)]


__all__ = [
    "AtomCollisionError",
    "BoundCheck",
    "CauchyCombo",
    "CriticalFiberError",
    "EvaluableField",
    "KernelAtCriticalPointError",
    "T_iterates",
    "apply_T",
    "apply_star",
    "apply_star_n",
    "apply_star_oracle",
    "beltrami_eval",
    "cauchy_transform",
    "cesaro_T",
    "cesaro_T_scaled",
    "cesaro_bound_trail",
    "merge_atoms",
    "pair_with_measure",
    "pushforward",
    "random_points",
    "star_closed_form",
]
