"""The ten acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line; ``conftest.py`` prints them in the
terminal summary, and running this file directly prints them too.
"""
import cmath
import math
import time

import numpy as np
import pytest

from ruelle_lab.cli import main as cli_main
from ruelle_lab.diagnostics import critical_value_trail, theorem_b_check
from ruelle_lab.maps import QuadraticMap, orbit
from ruelle_lab.measures import (
    AtomicMeasure,
    backward_invariance_violations,
    build_essential_neighborhood,
    default_family,
    weak_star_probe,
)
from ruelle_lab.resolvent import CriticalRelationError, decompose, residue_limit
from ruelle_lab.series import backward_S, verify_proposition_A
from ruelle_lab.verify import duality_suite, measures_suite, oracle_suite, random_map

RESULTS: dict[int, str] = {}


def record(k: int, title: str, ok: bool, detail: str) -> None:
    RESULTS[k] = f"AC{k:<2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    assert ok, RESULTS[k]


def test_ac1_oracle_equivalence():
    t0 = time.perf_counter()
    res = oracle_suite(seed=0, instances=100, tol=1e-8, ns=(1, 2, 3, 4))
    dt = time.perf_counter() - t0
    ok = res["passed"] and res["checks"] == 400 and dt <= 60
    record(1, "closed-form R*^n vs preimage sums", ok, f"{res['checks']} checks, worst rel err {res['worst']:.2e} (tol 1e-8), {dt:.1f}s (limit 60s)")


def test_ac2_duality():
    res = duality_suite(seed=0, samples=50, tol=1e-9)
    record(2, "R* of pushforward equals deg(R) phi", res["passed"] and res["checks"] == 50, f"{res['checks']} samples, worst rel err {res['worst']:.2e} (tol 1e-9)")


def test_ac3_resolvent_residues():
    rng = np.random.default_rng(0)
    worst_res = worst_rec = 0.0
    residues = maps = 0
    while maps < 12:
        R = random_map(rng, degree=2 + maps % 2)
        for n in range(1, 5):
            try:
                dec = decompose(R, n)
            except CriticalRelationError:
                break
            for pole, b in zip(dec.poles, dec.residues):
                bc = b.to_complex()
                worst_res = max(worst_res, abs(residue_limit(R, n, pole.location) - bc) / abs(bc))
                residues += 1
            for z in rng.normal(size=6) * 1.5 + 1j * rng.normal(size=6) * 1.5:
                z = complex(z)
                if min(abs(z - p.location) for p in dec.poles) < 0.05:
                    continue
                od = orbit(R, z, n, escape_radius=math.inf)
                want = od.cumulative_derivatives[n].reciprocal().to_complex()
                worst_rec = max(worst_rec, abs(dec.evaluate(z) - want) / max(1.0, abs(want)))
        else:
            maps += 1
    ok = worst_res <= 1e-6 and worst_rec <= 1e-8
    record(3, "resolvent residues and reconstruction", ok, f"{maps} maps (d=2,3), {residues} residues, worst residue rel err {worst_res:.2e} (tol 1e-6), worst reconstruction err {worst_rec:.2e} (tol 1e-8)")


def test_ac4_orbit_recursion():
    res = measures_suite(seed=0, params=20, n_max=8, tol=1e-8, weight_tol=1e-9)
    record(4, "orbit recursion equals operator iteration", res["passed"] and res["checks"] == 160, f"20 parameters x n<=8, worst weight rel err {res['worst']:.2e} (tol 1e-8), total weight <= 1e-9")


def test_ac5_chebyshev_fixture():
    t0 = time.perf_counter()
    D, S, deg, _ = critical_value_trail(-2, 64)
    powers = all(D[n].log2abs() == 2 * n and abs(D[n].mantissa.imag) == 0 for n in range(65))
    s_err = abs(S[64].to_complex() - 2 / 3)
    cert = theorem_b_check(-2, 64)
    d0 = theorem_b_check(0, 64)
    d1 = theorem_b_check(-1, 64)
    dt = time.perf_counter() - t0
    ok = (
        powers
        and deg is None
        and s_err <= 1e-10
        and cert.verdict == "condition-1"
        and cert.certificate
        and (d0.verdict, d0.degenerate_at) == ("degenerate", 1)
        and (d1.verdict, d1.degenerate_at) == ("degenerate", 2)
        and dt <= 5
    )
    record(5, "c=-2 certificate and degenerate c=0, c=-1", ok, f"|D_n|=4^n: {powers}, |S_64-2/3|={s_err:.1e}, verdict {cert.verdict}, c=0 fails at {d0.degenerate_at}, c=-1 fails at {d1.degenerate_at}, {dt:.2f}s")


def test_ac6_orbit_identities():
    rep = verify_proposition_A(QuadraticMap(-2), 10.0, 8)
    b1, b2 = rep.best(1), rep.best(2)
    names = rep.to_dict()["best"]
    ok = b1.residual <= 1e-6 and b2.residual <= 1e-6 and names["1"] == b1.name and names["2"] == b2.name
    record(6, "truncated orbit identities, z^2-2, a=10, N=8", ok, f"{b1.name} residual {b1.residual:.1e}, {b2.name} residual {b2.residual:.1e} (tol 1e-6)")


def test_ac7_backward_series_fixture():
    R = QuadraticMap(0)
    worst = 0.0
    gaps = []
    for x in (1.0 + 0j, cmath.exp(0.7j), cmath.exp(-2.1j)):
        tr = backward_S(R, x, 6)
        worst = max(worst, max(abs(tr.term(n) - 2.0**-n) for n in range(7)))
        gaps.append([abs(tr.psum(n) - 2.0) for n in range(7)])
    approach = all(all(g[k + 1] < g[k] for k in range(6)) and g[6] <= 2.0**-6 + 1e-12 for g in gaps)
    record(7, "S-series for z^2 on |x|=1", worst <= 1e-12 and approach, f"max |term - 2^-n| = {worst:.1e} (tol 1e-12), |partial sum - 2| falls to {max(g[6] for g in gaps):.4f}")


def test_ac8_essential_neighborhood():
    R = QuadraticMap(-2)
    U = build_essential_neighborhood(R, seed=0)
    fresh = U.sample(np.random.default_rng(12345), 1000)
    bad = backward_invariance_violations(R, U, fresh)
    R1 = QuadraticMap(-1)
    U1 = build_essential_neighborhood(R1, seed=0)
    centers = {round(c.real, 9) + 1j * round(c.imag, 9) for c, _ in U1.excluded_disks}
    excludes = centers == {0j, -1 + 0j} and not U1.contains(0j) and not U1.contains(-1 + 0j)
    fresh1 = U1.sample(np.random.default_rng(54321), 1000)
    bad1 = backward_invariance_violations(R1, U1, fresh1)
    radii = ", ".join(f"{c.real:g}:{r:.3g}" for c, r in U1.excluded_disks)
    record(8, "essential neighborhoods", not bad and excludes and not bad1, f"z^2-2: {len(bad)} violations in 1000 fresh samples; z^2-1 excludes disks [{radii}], {len(bad1)} violations")


def test_ac9_probe_controls():
    fam = default_family()
    t0 = time.perf_counter()
    const = weak_star_probe([AtomicMeasure.delta(-2.0)] * 64, fam, 64)
    t1 = time.perf_counter()
    osc = weak_star_probe([AtomicMeasure.delta(0.5 + 0.5j, (-1.0) ** l) for l in range(1, 65)], fam, 64)
    t2 = time.perf_counter()
    ok = const.converges and not osc.converges and osc.witness is not None and t1 - t0 <= 1 and t2 - t1 <= 1
    record(9, "weak-* probe controls", ok, f"constant: {const.aggregate} ({t1 - t0:.3f}s); oscillating: {osc.aggregate}, witness {osc.witness} ({t2 - t1:.3f}s)")


def test_ac10_scan_determinism(tmp_path):
    args = ["scan", "--grid=-2.1,-0.1,-1.9,0.1", "--res", "3", "--n", "64", "--seed", "7"]
    codes = [cli_main(args + ["--out", str(tmp_path / name)]) for name in ("first", "second")]
    a = (tmp_path / "first" / "scan.csv").read_bytes()
    b = (tmp_path / "second" / "scan.csv").read_bytes()
    rows = a.decode().strip().splitlines()[1:]
    ok = codes == [0, 0] and a == b and len(rows) == 9
    record(10, "scan determinism", ok, f"3x3 grid twice, {len(rows)} rows, byte-identical: {a == b}")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
