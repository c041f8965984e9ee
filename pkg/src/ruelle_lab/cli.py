"""Command-line front end: ``analyze``, ``scan`` and ``verify``.

Exit codes: 0 success, 1 invalid configuration, 2 hypotheses violated,
3 degenerate result only, 4 verification failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path

import numpy as np

from .diagnostics import SCAN_COLUMNS, DiagnosticsConfig, analyze, jsonable, scan_row
from .io import heatmap_legend, verdict_heatmap, write_json, write_jsonl, write_ppm, write_rows_csv
from .maps import MapSpecError, QuadraticMap, RationalMap, load_map_spec
from .series import write_trace_csv
from .verify import SUITES, run_suite

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_HYPOTHESES = 2
EXIT_DEGENERATE = 3
EXIT_VERIFY = 4

MAX_RES = 512


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with the invalid-configuration code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def parse_complex(text: str) -> complex:
    parts = text.split(",")
    try:
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise ConfigError(f"expected RE,IM but got {text!r}")


def parse_grid(text: str) -> tuple[float, float, float, float]:
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        vals = ()
    if len(vals) != 4:
        raise ConfigError(f"--grid expects X0,Y0,X1,Y1 but got {text!r}")
    return vals  # type: ignore[return-value]


def load_thresholds(path: str | None) -> DiagnosticsConfig:
    if not path:
        return DiagnosticsConfig()
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"thresholds file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"thresholds file is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("thresholds must be a JSON object")
    try:
        return DiagnosticsConfig.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def resolve_jobs(jobs: int | None) -> int:
    if jobs is None:
        env = os.environ.get("RUELLE_LAB_JOBS")
        if env:
            try:
                jobs = int(env)
            except ValueError as exc:
                raise ConfigError(f"RUELLE_LAB_JOBS must be an integer, got {env!r}") from exc
        else:
            jobs = 1
    if jobs < 1:
        raise ConfigError("--jobs must be >= 1")
    return jobs


def build_map(args) -> RationalMap:
    if args.map and args.quadratic_c is not None:
        raise ConfigError("give either --map or --quadratic-c, not both")
    if args.quadratic_c is not None:
        return QuadraticMap(parse_complex(args.quadratic_c))
    if args.map:
        R = load_map_spec(args.map)
        if R.degree < 2:
            raise ConfigError("map degree must be at least 2")
        return R
    raise ConfigError("one of --map or --quadratic-c is required")


def _julia_image(R: RationalMap, size: int = 256, radius: float = 2.5, iters: int = 200) -> np.ndarray:
    """Escape-time picture of the filled Julia set (grey levels)."""
    xs = np.linspace(-radius, radius, size)
    Z = xs[None, :] + 1j * xs[::-1, None]
    P = R.P.array()[::-1]
    Q = R.Q.array()[::-1]
    count = np.zeros(Z.shape, dtype=np.int32)
    alive = np.ones(Z.shape, dtype=bool)
    bound = 1e6
    with np.errstate(all="ignore"):
        for _ in range(iters):
            Z = np.where(alive, np.polyval(P, Z) / np.polyval(Q, Z), Z)
            esc = alive & ~(np.abs(Z) < bound)
            alive &= ~esc
            count += alive
    grey = (255 * (1.0 - count / iters)).astype(np.uint8)
    return np.repeat(grey[:, :, None], 3, axis=2)


def cmd_analyze(args) -> int:
    cfg = load_thresholds(args.thresholds)
    if args.a is not None:
        a = parse_complex(args.a)
        cfg = DiagnosticsConfig.from_dict({**cfg.to_dict(), "a": [a.real, a.imag]})
    if args.n < 1:
        raise ConfigError("--n must be >= 1")
    if args.depth is not None and args.depth < 1:
        raise ConfigError("--depth must be >= 1")
    R = build_map(args)
    out = Path(args.out)
    (out / "traces").mkdir(parents=True, exist_ok=True)
    report = analyze(R, args.n, cfg, depth=args.depth)
    data = dict(report.data)
    data["config"] = {**data["config"], "seed": args.seed}
    write_json(data, out / "report.json")
    for name, trace in sorted(report.traces.items()):
        write_trace_csv(trace, out / "traces" / f"{name}.csv")
    write_jsonl(report.measures, out / "measures.jsonl")
    if args.plots:
        (out / "plots").mkdir(exist_ok=True)
        write_ppm(out / "plots" / "julia.ppm", _julia_image(R), "escape-time grey levels; white escapes fast, black stays bounded")
    print(f"{report.statement}: {data['overall'].get('criterion') or '-'} -> {out / 'report.json'}")
    return report.exit_code


def grid_points(grid: tuple[float, float, float, float], res: int) -> list[complex]:
    """Row-major points; rows run along the real axis from ``y0`` to ``y1``."""
    x0, y0, x1, y1 = grid
    if res == 1:
        return [complex((x0 + x1) / 2, (y0 + y1) / 2)]
    xs = [((res - 1 - i) * x0 + i * x1) / (res - 1) for i in range(res)]
    ys = [((res - 1 - j) * y0 + j * y1) / (res - 1) for j in range(res)]
    return [complex(x, y) for y in ys for x in xs]


def run_scan(points: list[complex], N: int, cfg: DiagnosticsConfig, jobs: int) -> list[dict]:
    work = partial(scan_row, N=N, config=cfg)
    if jobs == 1:
        return [work(c) for c in points]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(work, points, chunksize=max(1, len(points) // (4 * jobs))))


def cmd_scan(args) -> int:
    cfg = load_thresholds(args.thresholds)
    if args.res < 1 or args.res > args.max_res:
        raise ConfigError(f"--res must be in 1..{args.max_res}")
    if args.n < 1:
        raise ConfigError("--n must be >= 1")
    grid = parse_grid(args.grid)
    jobs = resolve_jobs(args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = run_scan(grid_points(grid, args.res), args.n, cfg, jobs)
    write_rows_csv(rows, SCAN_COLUMNS, out / "scan.csv")
    write_jsonl((jsonable(r) for r in rows), out / "scan.jsonl")
    if args.plots:
        (out / "plots").mkdir(exist_ok=True)
        img = verdict_heatmap([r["verdict"] for r in rows], args.res, scale=max(1, 256 // args.res))
        write_ppm(out / "plots" / "scan.ppm", img, heatmap_legend())
    print(f"{len(rows)} rows -> {out / 'scan.csv'}")
    return EXIT_OK


def cmd_verify(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result = run_suite(args.suite, seed=args.seed)
    write_json(jsonable(result), out / f"verify_{args.suite}.json")
    for r in result["results"]:
        status = "PASS" if r["passed"] else "FAIL"
        print(f"{status} {r['suite']}: {r['checks']} checks, worst {r['worst']:.3e} (tol {r['tolerance']:g})")
    return EXIT_OK if result["passed"] else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ruelle-lab", description="Numerical diagnostics for the Ruelle operator of rational maps.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("analyze", help="analyze a single map")
    a.add_argument("--map", help="JSON map file")
    a.add_argument("--quadratic-c", help="parameter of z^2 + c as RE,IM")
    a.add_argument("--n", type=int, default=64, help="series length")
    a.add_argument("--depth", type=int, default=None, help="resolvent depth cap")
    a.add_argument("--a", default=None, help="base point as RE,IM (default from thresholds)")
    a.add_argument("--out", default="out", help="output directory")
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--thresholds", help="JSON file of diagnostics thresholds")
    a.add_argument("--plots", action="store_true", help="write plots/julia.ppm")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("scan", help="scan quadratic parameters on a grid")
    s.add_argument("--grid", required=True, help="X0,Y0,X1,Y1")
    s.add_argument("--res", type=int, required=True, help="points per axis")
    s.add_argument("--max-res", type=int, default=MAX_RES)
    s.add_argument("--n", type=int, default=64)
    s.add_argument("--out", default="out")
    s.add_argument("--jobs", type=int, default=None, help="worker processes (env RUELLE_LAB_JOBS)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--thresholds")
    s.add_argument("--plots", action="store_true", help="write plots/scan.ppm")
    s.set_defaults(func=cmd_scan)

    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("suite", choices=sorted(SUITES))
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out", default="out")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, MapSpecError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
