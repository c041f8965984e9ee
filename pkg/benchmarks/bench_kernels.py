"""Time the pure-Python and Cython kernels on the same inputs.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import cmath
import timeit

import numpy as np

from ruelle_lab._kernels import compiled, pure


def orbit_case(mod):
    # z^2 - 2 from a generic point: long bounded orbit, no escape
    P = np.array([-2, 0, 1], dtype=np.complex128)
    dP = np.array([0, 2], dtype=np.complex128)
    Q = np.array([1], dtype=np.complex128)
    dQ = np.array([0], dtype=np.complex128)
    return lambda: mod.orbit(P, dP, Q, dQ, 0.3 + 0j, 10_000, 1e6)


def aberth_case(mod, degree=24):
    rng = np.random.default_rng(0)
    coeffs = rng.normal(size=degree + 1) + 1j * rng.normal(size=degree + 1)
    coeffs[-1] = 1
    radius = max(abs(coeffs[:-1])) ** (1 / degree)
    init = [radius * cmath.exp(2j * cmath.pi * (k + 0.25) / degree) for k in range(degree)]
    return lambda: mod.aberth(coeffs, init, 500, 1e-15)


def check_parity():
    a = orbit_case(pure)()
    b = orbit_case(compiled)()
    assert a[3:] == b[3:] and np.allclose(a[0], b[0]) and np.array_equal(a[2], b[2])
    ra = np.sort_complex(aberth_case(pure)()[0])
    rb = np.sort_complex(aberth_case(compiled)()[0])
    assert np.allclose(ra, rb, atol=1e-10)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if compiled is None:
        raise SystemExit("compiled kernels not built; run `pip install -e . --no-build-isolation` first")
    check_parity()
    print(f"{'kernel':<28}{'python (ms)':>14}{'cython (ms)':>14}{'speedup':>10}")
    for name, case in [("orbit, N=10000", orbit_case), ("aberth, degree 24", aberth_case)]:
        times = []
        for mod in (pure, compiled):
            fn = case(mod)
            number = 3 if mod is pure else 30
            times.append(min(timeit.repeat(fn, number=number, repeat=args.repeat)) / number * 1e3)
        print(f"{name:<28}{times[0]:>14.3f}{times[1]:>14.3f}{times[0] / times[1]:>9.1f}x")


if __name__ == "__main__":
    main()
