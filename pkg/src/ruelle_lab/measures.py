"""Atomic measures from operator iterates, their averages, and weak-* probes.

``mu_n`` is the distributional dbar of ``(R*)^n(tau_d)`` with the factor ``pi``
dropped, so its atoms and weights are those of the kernel combination.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .maps import INFINITY, RationalMap, escape_radius_bound, find_attracting_cycles, orbit, preimages
from .numerics import ONE, ZERO, ScaledComplex
from .ruelle import CauchyCombo, apply_star, merge_atoms


class DegenerateParameterError(ValueError):
    """The critical orbit meets the critical point; ``index`` is the first bad ``j``."""

    def __init__(self, message: str, index: int):
        super().__init__(message)
        self.index = index


class NeighborhoodError(RuntimeError):
    """Backward invariance could not be achieved."""


@dataclass(frozen=True)
class AtomicMeasure:
    atoms: tuple[tuple[complex, ScaledComplex], ...] = ()

    @classmethod
    def from_atoms(cls, atoms: Iterable[tuple[complex, complex | ScaledComplex]]) -> AtomicMeasure:
        return cls(merge_atoms(atoms))

    @classmethod
    def delta(cls, x: complex, weight: complex | ScaledComplex = 1.0) -> AtomicMeasure:
        return cls.from_atoms([(x, weight)])

    @classmethod
    def from_combo(cls, combo: CauchyCombo) -> AtomicMeasure:
        return cls(combo.atoms)

    def __len__(self) -> int:
        return len(self.atoms)

    @property
    def support(self) -> tuple[complex, ...]:
        return tuple(x for x, _ in self.atoms)

    def pair(self, h: Callable[[complex], complex]) -> complex:
        total = ZERO
        for x, w in self.atoms:
            total = total + w * complex(h(x))
        return total.to_complex()

    def total_weight(self) -> ScaledComplex:
        total = ZERO
        for _, w in self.atoms:
            total = total + w
        return total

    def total_variation(self) -> ScaledComplex:
        total = ZERO
        for _, w in self.atoms:
            total = total + w.abs()
        return total

    def weight_at(self, x: complex, tol: float = 1e-9) -> ScaledComplex:
        total = ZERO
        for p, w in self.atoms:
            if abs(p - x) <= tol:
                total = total + w
        return total

    def scale(self, alpha: complex | ScaledComplex) -> AtomicMeasure:
        s = ScaledComplex.of(alpha)
        return AtomicMeasure(merge_atoms((x, w * s) for x, w in self.atoms))

    def __add__(self, other: AtomicMeasure) -> AtomicMeasure:
        return AtomicMeasure(merge_atoms(self.atoms + other.atoms))

    def __sub__(self, other: AtomicMeasure) -> AtomicMeasure:
        return self + other.scale(-1.0)

    def records(self, **labels) -> list[dict]:
        out = []
        for x, w in self.atoms:
            rec = dict(labels)
            rec["loc"] = [x.real, x.imag]
            rec["w_log2abs"] = w.log2abs()
            rec["w_arg"] = w.arg()
            out.append(rec)
        return out


def write_measures_jsonl(records: Iterable[dict], path: str | Path) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def _critical_value(R: RationalMap, i: int) -> complex:
    if not 0 <= i < len(R.critical_values):
        raise IndexError(f"critical value index {i} out of range")
    d = R.critical_values[i]
    if d is INFINITY:
        raise ValueError(f"critical value {i} is infinite")
    return d


def mu_sequence(R: RationalMap, i: int, n_max: int) -> list[AtomicMeasure]:
    """``mu_0 .. mu_{n_max}`` for the ``i``-th critical value."""
    phi = CauchyCombo.tau(_critical_value(R, i))
    out = [AtomicMeasure.from_combo(phi)]
    for _ in range(n_max):
        phi = apply_star(R, phi)
        out.append(AtomicMeasure.from_combo(phi))
    return out


def mu_n(R: RationalMap, i: int, n: int) -> AtomicMeasure:
    return mu_sequence(R, i, n)[-1]


def mu_n_quadratic_recursive(c: complex, n: int) -> AtomicMeasure:
    """``mu_n`` for ``z**2 + c`` from the orbit of ``c`` alone.

    ``mu_0 = delta_c`` and
    ``mu_m = delta_{R^m c}/(R^m)'(c) - sum_{j<m} mu_j / (R^{m-j})'(c)``.
    """
    c = complex(c)
    pts = [c]
    for _ in range(n):
        pts.append(pts[-1] * pts[-1] + c)
    factors = [ScaledComplex.of(2 * p) for p in pts[:n]]
    for j, f in enumerate(factors):
        if abs(pts[j]) <= 1e-12:
            raise DegenerateParameterError(f"(R^{j + 1})'(c) vanishes: the orbit of c meets 0 at step {j}", j + 1)

    inv = [ONE]
    for f in factors:
        inv.append(inv[-1] / f)
    mus = [AtomicMeasure.delta(c)]
    for m in range(1, n + 1):
        atoms = [(pts[m], inv[m])]
        for j in range(m):
            s = inv[m - j]
            atoms.extend((x, -(w * s)) for x, w in mus[j].atoms)
        mus.append(AtomicMeasure.from_atoms(atoms))
    return mus[n]


def cesaro_measures(mus: Sequence[AtomicMeasure], L: int) -> list[AtomicMeasure]:
    """``nu_1 .. nu_L`` with ``nu_l = (1/l) sum_{k<l} mu_k``."""
    if L > len(mus):
        raise ValueError(f"need {L} measures, have {len(mus)}")
    out = []
    running = AtomicMeasure()
    for l in range(1, L + 1):
        running = running + mus[l - 1]
        out.append(running.scale(1.0 / l))
    return out


def nu_l(R: RationalMap, i: int, l: int) -> AtomicMeasure:
    if l < 1:
        raise ValueError("l must be >= 1")
    return cesaro_measures(mu_sequence(R, i, l - 1), l)[-1]


def orbit_grouping(R: RationalMap, measure: AtomicMeasure, steps: int, tol: float = 1e-9) -> dict:
    """Assign each atom to ``(critical value index, step)`` when it lies on a critical-value orbit."""
    orbits = []
    for i, d in enumerate(R.critical_values):
        if d is INFINITY:
            continue
        od = orbit(R, d, steps, escape_radius=math.inf)
        orbits.append((i, od.points))
    groups: dict = {}
    for x, w in measure.atoms:
        key = None
        for i, pts in orbits:
            for m, p in enumerate(pts):
                if abs(p - x) <= tol:
                    key = (i, m)
                    break
            if key:
                break
        groups.setdefault(key, []).append((x, w))
    return groups


# essential neighborhoods -----------------------------------------------------


@dataclass(frozen=True)
class EssentialNeighborhood:
    outer_radius: float
    excluded_disks: tuple[tuple[complex, float], ...] = ()
    epsilon: float = 0.0
    halvings: int = 0

    def contains(self, z: complex) -> bool:
        if abs(z) > self.outer_radius:
            return False
        return all(abs(z - c) >= r for c, r in self.excluded_disks)

    __contains__ = contains

    def sample(self, rng: np.random.Generator, count: int) -> list[complex]:
        out: list[complex] = []
        while len(out) < count:
            r = self.outer_radius * np.sqrt(rng.uniform(0, 1, count))
            t = rng.uniform(0, 2 * np.pi, count)
            for z in r * np.exp(1j * t):
                z = complex(z)
                if self.contains(z):
                    out.append(z)
                    if len(out) == count:
                        break
        return out

    def to_dict(self) -> dict:
        return {
            "outer_radius": self.outer_radius,
            "excluded_disks": [{"center": [c.real, c.imag], "radius": r} for c, r in self.excluded_disks],
            "epsilon": self.epsilon,
            "halvings": self.halvings,
        }


def backward_invariance_violations(R: RationalMap, U: EssentialNeighborhood, samples: Sequence[complex]) -> list[tuple[complex, complex]]:
    """``(w, y)`` pairs with ``w`` in ``U`` and a preimage ``y`` outside."""
    bad = []
    for w in samples:
        for y in preimages(R, w):
            if not U.contains(y):
                bad.append((w, y))
    return bad


def julia_samples(R: RationalMap, count: int, seed: int = 0, burn_in: int = 40) -> list[complex]:
    """Points near the Julia set by random backward iteration."""
    rng = np.random.default_rng(seed)
    z = complex(rng.normal(), rng.normal()) + 0.123
    out = []
    for k in range(burn_in + count):
        pre = preimages(R, z)
        z = pre[int(rng.integers(len(pre)))]
        if k >= burn_in:
            out.append(z)
    return out


def _adapted_radii(R: RationalMap, cycle: Sequence[complex], multiplier: complex) -> list[float]:
    """Relative radii ``r_j`` with ``|R'(p_j)| r_j < r_{j+1}`` around the cycle."""
    p = len(cycle)
    kappa = [abs(R.deriv(z)) for z in cycle]
    target = max(abs(multiplier), 0.5**p)
    prod = math.prod(kappa)
    if prod < target:
        lo, hi = 0.0, 1.0
        while math.prod(max(k, hi) for k in kappa) < target:
            hi *= 2.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if math.prod(max(k, mid) for k in kappa) < target:
                lo = mid
            else:
                hi = mid
        kappa = [max(k, hi) for k in kappa]
    rho = math.prod(kappa) ** (1.0 / p)
    radii = [1.0]
    for j in range(p - 1):
        radii.append(radii[-1] * kappa[j] / rho)
    top = max(radii)
    return [r / top for r in radii]


def build_essential_neighborhood(
    R: RationalMap,
    eps: float = 0.1,
    *,
    margin: float = 0.5,
    samples: int = 1000,
    seed: int = 0,
    max_halvings: int = 20,
    julia_count: int = 400,
) -> EssentialNeighborhood:
    """Disk of radius ``escape bound + margin`` minus disks around attracting cycles.

    Disk radii along each cycle are scaled by the local derivative so that the
    union of disks maps into itself; the common scale starts at ``eps`` and is
    halved until sampled backward invariance holds and sampled Julia points lie
    inside.
    """
    outer = float(escape_radius_bound(R)) + margin
    cycles = find_attracting_cycles(R, seed=seed)
    shapes = []
    for pts, mult in cycles:
        rel = _adapted_radii(R, pts, mult)
        shapes.extend(zip(pts, rel))
    rng = np.random.default_rng(seed)
    jpts = julia_samples(R, julia_count, seed=seed) if shapes else []
    scale = eps
    for halvings in range(max_halvings + 1):
        U = EssentialNeighborhood(outer, tuple((c, scale * r) for c, r in shapes), scale, halvings)
        pts = U.sample(rng, samples)
        if not backward_invariance_violations(R, U, pts) and all(U.contains(z) for z in jpts):
            return U
        scale *= 0.5
    raise NeighborhoodError(f"backward invariance fails after {max_halvings} halvings")


# test functions and probes ----------------------------------------------------


@dataclass(frozen=True)
class TestFunction:
    name: str
    fn: Callable[[complex], complex]
    kind: str
    dbar_bound: float

    def __call__(self, z: complex) -> complex:
        return self.fn(z)


@dataclass(frozen=True)
class TestFunctionFamily:
    members: tuple[TestFunction, ...]

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)


def _kernel(w: complex) -> Callable[[complex], complex]:
    return lambda z: 1.0 / (z - w)


def _monomial(k: int) -> Callable[[complex], complex]:
    return lambda z: z**k


def _bump(center: complex, radius: float) -> Callable[[complex], complex]:
    def h(z: complex) -> complex:
        s = abs(z - center) ** 2 / radius**2
        return complex((1.0 - s) ** 2) if s < 1.0 else 0j

    return h


def default_family(
    U: EssentialNeighborhood | None = None,
    *,
    kernel_radius: float | None = None,
    kernels: int = 8,
    poly_degree: int = 4,
    bumps: Sequence[tuple[complex, float]] | None = None,
) -> TestFunctionFamily:
    """Cauchy kernels on a circle outside ``U``, monomials, and radial bumps."""
    outer = U.outer_radius if U is not None else 2.5
    rk = kernel_radius if kernel_radius is not None else 2.0 * outer
    members = []
    for k in range(kernels):
        w = complex(rk * math.cos(2 * math.pi * k / kernels), rk * math.sin(2 * math.pi * k / kernels))
        members.append(TestFunction(f"tau[{w.real:.4g},{w.imag:.4g}]", _kernel(w), "kernel", 0.0))
    for k in range(poly_degree + 1):
        members.append(TestFunction(f"z^{k}", _monomial(k), "polynomial", 0.0))
    if bumps is None:
        bumps = [(0j, outer / 2), (complex(outer / 3, outer / 5), outer / 3)]
    for center, radius in bumps:
        # |dbar h| = |(1 - s) (z - c)| * 2 / r^2 <= 2 / r
        members.append(TestFunction(f"bump[{center.real:.3g},{center.imag:.3g};{radius:.3g}]", _bump(center, radius), "bump", 2.0 / radius))
    return TestFunctionFamily(tuple(members))


CAUCHY = "cauchy"
OSCILLATING = "oscillating"
GROWING = "growing"


@dataclass(frozen=True)
class ProbeConfig:
    tol_rel: float = 1e-4
    tail_fraction: float = 0.25
    ratios: tuple[float, ...] = (2.0, 1.5)
    growth_factor: float = 2.0


def _verdict(values: Sequence[complex], cfg: ProbeConfig) -> tuple[str, float]:
    L = len(values)
    k = max(2, math.ceil(L * cfg.tail_fraction))
    tail = np.array(values[-k:], dtype=complex)
    if not np.all(np.isfinite(tail)):
        return GROWING, math.inf
    spread = float(np.max(np.abs(tail[:, None] - tail[None, :]))) if len(tail) > 1 else 0.0
    peak = float(np.max(np.abs(tail)))
    if spread < cfg.tol_rel * (1.0 + peak):
        return CAUCHY, spread
    head = np.abs(np.array(values[: max(1, L // 2)], dtype=complex))
    if peak >= cfg.growth_factor * max(float(head.max()), 1e-300) and abs(values[-1]) >= float(np.abs(tail[: len(tail) // 2 + 1]).max()):
        return GROWING, spread
    return OSCILLATING, spread


@dataclass
class ProbeReport:
    L: int
    trails: dict[str, list[complex]]
    verdicts: dict[str, str]
    spreads: dict[str, float]
    subsequences: dict[str, dict]
    converges: bool
    witness: str | None
    limits: dict[str, complex] = field(default_factory=dict)
    outside_atoms: int = 0
    notes: list[str] = field(default_factory=list)

    @property
    def aggregate(self) -> str:
        if self.converges:
            return "converges-on-family"
        if any(v == GROWING for v in self.verdicts.values()):
            return "growing"
        return "fails"

    def nonzero_weak_boundary(self, floor: float = 1e-6) -> bool:
        """Some tail limit is bounded away from zero on the family."""
        return self.converges and any(abs(v) > floor for v in self.limits.values())

    def to_dict(self, include_trails: bool = True) -> dict:
        enc = lambda z: [z.real, z.imag]  # noqa: E731
        out = {
            "L": self.L,
            "aggregate": self.aggregate,
            "converges": self.converges,
            "witness": self.witness,
            "verdicts": self.verdicts,
            "spreads": self.spreads,
            "subsequences": self.subsequences,
            "limits": {k: enc(v) for k, v in self.limits.items()},
            "outside_atoms": self.outside_atoms,
            "notes": self.notes,
        }
        if include_trails:
            out["trails"] = {k: [enc(v) for v in vals] for k, vals in self.trails.items()}
        return out


def geometric_indices(L: int, r: float) -> list[int]:
    out: list[int] = []
    k = 0
    while True:
        l = int(math.floor(r**k))
        if l > L:
            break
        if not out or l != out[-1]:
            out.append(l)
        k += 1
    return out


def weak_star_probe(
    measures: Sequence[AtomicMeasure] | Callable[[int], AtomicMeasure],
    family: TestFunctionFamily,
    L: int,
    config: ProbeConfig | None = None,
    U: EssentialNeighborhood | None = None,
) -> ProbeReport:
    """Pair ``nu_l`` (``l = 1..L``) with each test function and judge the trails."""
    cfg = config or ProbeConfig()
    get = measures if callable(measures) else (lambda l: measures[l - 1])
    seq = [get(l) for l in range(1, L + 1)]
    outside = 0
    if U is not None:
        outside = sum(1 for x in {x for m in seq for x in m.support} if not U.contains(x))
    trails: dict[str, list[complex]] = {}
    verdicts: dict[str, str] = {}
    spreads: dict[str, float] = {}
    limits: dict[str, complex] = {}
    subsequences: dict[str, dict] = {}
    for h in family:
        vals = [m.pair(h.fn) for m in seq]
        trails[h.name] = vals
        verdicts[h.name], spreads[h.name] = _verdict(vals, cfg)
        k = max(2, math.ceil(L * cfg.tail_fraction))
        limits[h.name] = complex(np.mean(vals[-k:]))
    for r in cfg.ratios:
        idx = geometric_indices(L, r)
        per = {}
        for h in family:
            sub = [trails[h.name][l - 1] for l in idx]
            per[h.name] = _verdict(sub, cfg)[0] if len(sub) >= 2 else OSCILLATING
        subsequences[f"r={r:g}"] = {
            "indices": idx,
            "cauchy_all": all(v == CAUCHY for v in per.values()),
            "verdicts": per,
        }
    witness = next((h.name for h in family if verdicts[h.name] != CAUCHY), None)
    return ProbeReport(L, trails, verdicts, spreads, subsequences, witness is None, witness, limits, outside)


def theorem_c_probe(
    R: RationalMap,
    L: int,
    family: TestFunctionFamily | None = None,
    U: EssentialNeighborhood | None = None,
    config: ProbeConfig | None = None,
) -> dict:
    """Probe ``nu_l^i`` for every finite critical value ``i``.

    Reports per-index verdicts and whether some geometric subsequence is
    Cauchy on the family for all indices at once.
    """
    if family is None:
        family = default_family(U)
    reports = {}
    for i, d in enumerate(R.critical_values):
        if d is INFINITY:
            continue
        mus = mu_sequence(R, i, L - 1)
        nus = cesaro_measures(mus, L)
        reports[i] = weak_star_probe(nus, family, L, config, U)
    keys = next(iter(reports.values())).subsequences.keys() if reports else []
    shared = [k for k in keys if all(rep.subsequences[k]["cauchy_all"] for rep in reports.values())]
    notes = []
    if R.degree > 2:
        notes.append("atoms lie on all critical-value orbits, not only the orbit of the indexed value")
    return {
        "per_index": {str(i): rep.to_dict(include_trails=False) for i, rep in reports.items()},
        "reports": reports,
        "all_converge": all(rep.converges for rep in reports.values()),
        "any_growing": any(rep.aggregate == "growing" for rep in reports.values()),
        "shared_subsequences": shared,
        "notes": notes,
    }
