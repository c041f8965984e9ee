"""Randomized verification suites shared by the CLI and the acceptance tests.

Each suite returns a dict with ``passed``, the number of checks, the worst
error seen, and any failing cases with enough parameters to replay them.
"""
from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .maps import INFINITY, QuadraticMap, RationalMap, orbit
from .measures import mu_n, mu_n_quadratic_recursive
from .ruelle import CauchyCombo, apply_star_n, apply_star_oracle, pushforward
from .series import verify_proposition_A


def _cplx(rng: np.random.Generator, scale: float = 1.0) -> complex:
    return complex(rng.normal() * scale, rng.normal() * scale)


def random_map(rng: np.random.Generator, degree: int | None = None) -> RationalMap:
    """Degree 2 or 3 map: quadratic family, cubic polynomial, or cubic over linear."""
    degree = degree or int(rng.integers(2, 4))
    if degree == 2:
        return QuadraticMap(_cplx(rng, 0.5))
    if rng.uniform() < 0.5:
        return RationalMap.polynomial([_cplx(rng, 0.4), _cplx(rng, 0.4), 0.0, 1.0])
    num = [_cplx(rng, 0.3), _cplx(rng, 0.3), _cplx(rng, 0.3), 1.0]
    den = [1.0 + _cplx(rng, 0.1), _cplx(rng, 0.2)]
    return RationalMap(num, den)


def singular_points(R: RationalMap, n: int, extra: tuple = ()) -> list[complex]:
    """Critical points, poles, and ``n``-step orbits of the critical values and ``extra``."""
    pts = list(R.critical_points)
    if not R.is_polynomial:
        pts += [complex(r) for r in np.roots(R.Q.coeffs[::-1])]
    for v in list(R.critical_values) + list(extra):
        if v is INFINITY:
            continue
        pts.extend(orbit(R, v, n, escape_radius=math.inf).points)
    return pts


def random_instance(rng: np.random.Generator, n: int, min_dist: float = 0.05, tries: int = 200):
    """``(R, a, z)`` with ``a`` and ``z`` at distance ``> min_dist`` from the singular set."""
    for _ in range(tries):
        R = random_map(rng)
        if any(abs(R.deriv(c, 2)) < 1e-3 for c in R.critical_points):
            continue
        a = _cplx(rng, 0.8)
        z = _cplx(rng, 0.8)
        base = singular_points(R, n)
        if any(not math.isfinite(abs(p)) for p in base) or min(abs(a - p) for p in base) <= min_dist:
            continue
        near_z = base + singular_points(R, n, (a,))[len(base):]
        if any(abs(z - p) <= min_dist for p in near_z):
            continue
        return R, a, z
    raise RuntimeError("could not draw an admissible instance")


def _result(name: str, checks: int, worst: float, failures: list[dict], tol: float, **extra) -> dict:
    out = {"suite": name, "passed": not failures, "checks": checks, "worst": worst, "tolerance": tol, "failures": failures}
    out.update(extra)
    return out


def oracle_suite(seed: int = 0, instances: int = 100, tol: float = 1e-8, ns=(1, 2, 3, 4)) -> dict:
    """Closed-form operator iterates against fiber sums."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    failures = []
    checks = 0
    for k in range(instances):
        R, a, z = random_instance(rng, max(ns))
        combo = CauchyCombo.tau(a)
        prev = 0
        for n in ns:
            combo = apply_star_n(R, combo, n - prev)
            prev = n
            closed = combo(z)
            oracle = apply_star_oracle(R, lambda y, a=a: 1.0 / (y - a), z, n)
            err = abs(closed - oracle) / max(1.0, abs(oracle))
            worst = max(worst, err)
            checks += 1
            if not err <= tol:
                failures.append({"instance": k, "map": R.to_spec(), "a": [a.real, a.imag], "z": [z.real, z.imag], "n": n, "error": err})
    return _result("oracle", checks, worst, failures, tol, seed=seed)


def duality_suite(seed: int = 0, samples: int = 50, tol: float = 1e-9) -> dict:
    """Fiber sum of ``(phi o R) R'^2`` returns ``deg(R) phi``."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    failures = []
    for k in range(samples):
        R, a, z = random_instance(rng, 1)
        w = _cplx(rng, 2.0) + 3.0
        coeffs = [_cplx(rng) for _ in range(3)]
        phi: Callable[[complex], complex] = lambda y, w=w, cs=coeffs: cs[0] + cs[1] * y + cs[2] / (y - w)
        got = apply_star_oracle(R, pushforward(R, phi), z, 1)
        want = R.degree * phi(z)
        err = abs(got - want) / max(abs(want), 1e-300)
        worst = max(worst, err)
        if not err <= tol:
            failures.append({"sample": k, "map": R.to_spec(), "z": [z.real, z.imag], "error": err})
    return _result("duality", samples, worst, failures, tol, seed=seed)


def identities_suite(seed: int = 0, tol: float = 1e-6, extra_instances: int = 5) -> dict:
    """Truncated orbit identities: the best variant must meet ``tol``."""
    rng = np.random.default_rng(seed)
    cases = [(QuadraticMap(-2), 10.0 + 0j, 8)]
    for _ in range(extra_instances):
        cases.append((QuadraticMap(_cplx(rng, 0.4)), 3.0 + _cplx(rng, 0.5), 6))
    failures = []
    reports = []
    worst = 0.0
    for k, (R, a, N) in enumerate(cases):
        rep = verify_proposition_A(R, a, N)
        d = rep.to_dict()
        reports.append({"map": R.to_spec(), **d})
        for ident in (1, 2):
            best = rep.best(ident)
            res = math.inf if best is None else best.residual
            worst = max(worst, res)
            if not res <= tol:
                failures.append({"case": k, "identity": ident, "map": R.to_spec(), "a": [a.real, a.imag], "N": N, "residual": res})
    return _result("identities", 2 * len(cases), worst, failures, tol, seed=seed, reports=reports)


def measures_suite(seed: int = 0, params: int = 20, n_max: int = 8, tol: float = 1e-8, weight_tol: float = 1e-9) -> dict:
    """Orbit recursion against operator iteration, plus the zero-total-weight law."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    failures = []
    checks = 0
    for k in range(params):
        c = complex(*rng.uniform(-1.0, 1.0, 2))
        R = QuadraticMap(c)
        for n in range(1, n_max + 1):
            general = mu_n(R, 0, n)
            rec = mu_n_quadratic_recursive(c, n)
            checks += 1
            err = 0.0
            if len(general) != len(rec):
                err = math.inf
            else:
                for (x1, w1), (x2, w2) in zip(general.atoms, rec.atoms):
                    if abs(x1 - x2) > 1e-9:
                        err = math.inf
                        break
                    err = max(err, float((w1 - w2).abs() / w1.abs()))
            tw = float(general.total_weight().abs())
            worst = max(worst, err)
            if not (err <= tol and tw <= weight_tol):
                failures.append({"param": k, "c": [c.real, c.imag], "n": n, "error": err, "total_weight": tw})
    return _result("measures", checks, worst, failures, tol, seed=seed)


SUITES = {
    "oracle": lambda seed: [oracle_suite(seed), duality_suite(seed)],
    "identities": lambda seed: [identities_suite(seed)],
    "measures": lambda seed: [measures_suite(seed)],
}


def run_suite(name: str, seed: int = 0) -> dict:
    results = SUITES[name](seed)
    return {"suite": name, "seed": seed, "passed": all(r["passed"] for r in results), "results": results}


__all__ = [
    "SUITES",
    "duality_suite",
    "identities_suite",
    "measures_suite",
    "oracle_suite",
    "random_instance",
    "random_map",
    "run_suite",
]
