"""Verdict assembly: derivative and series criteria along critical orbits.

Every verdict carries the thresholds and index windows it was computed from,
and reports are plain JSON-able dicts so reruns can be compared byte for byte.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields
from typing import Sequence

from .maps import (
    INFINITY,
    QuadraticMap,
    RationalMap,
    check_no_simple_critical_relations,
    check_simple_critical_points,
)
from .numerics import ZERO, ScaledComplex
from .resolvent import CriticalRelationError, DepthCapError, decompose, s_n
from .ruelle import AtomCollisionError, KernelAtCriticalPointError
from .series import (
    ABSOLUTELY_CONVERGENT,
    BOUNDED_TERMS_DIVERGENT,
    SLOW_DIVERGENT,
    ClassifyConfig,
    SeriesTrace,
    backward_RS,
    backward_RS_combos,
    derivative_trail,
    forward_series,
    verify_proposition_A,
)

CONDITION_1 = "condition-1"
CONDITION_2 = "condition-2"
INCONCLUSIVE = "inconclusive"
DEGENERATE = "degenerate"

CERTIFICATE = "certificate"
HYPOTHESES_VIOLATED = "hypotheses-violated"


class ShortOrbitError(ValueError):
    """The orbit has too few distinct points for the classification."""


@dataclass(frozen=True)
class DiagnosticsConfig:
    """All thresholds used by the verdicts; serialized into every report."""

    delta: float = 1e-3
    degenerate_tol: float = 1e-12
    cond1_min_log2: float = 16.0
    cond1_min_witnesses: int = 3
    band_width_log2: float = 2.0
    band_min_len: int = 10
    cond2_growth: float = 4.0
    cond2_min_abs_sum: float = 100.0
    long_orbit_sep: float = 1e-8
    long_orbit_steps: int = 500
    convergent_bound: float = 1e6
    trend_slack: float = 0.5
    a: complex = 0.3 + 0j
    Ns: tuple[int, ...] = (4, 8, 16, 32)
    strongly_n_max: int = 6
    probe_L: int = 64
    identities_N: int = 8
    classify: ClassifyConfig = field(default_factory=ClassifyConfig)

    @classmethod
    def from_dict(cls, d: dict) -> DiagnosticsConfig:
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown threshold keys: {sorted(unknown)}")
        kw = dict(d)
        if "classify" in kw:
            kw["classify"] = ClassifyConfig.from_dict(kw["classify"])
        if "a" in kw:
            v = kw["a"]
            kw["a"] = complex(*v) if isinstance(v, (list, tuple)) else complex(v)
        if "Ns" in kw:
            kw["Ns"] = tuple(int(n) for n in kw["Ns"])
        return cls(**kw)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["a"] = [self.a.real, self.a.imag]
        d["Ns"] = list(self.Ns)
        return d


def jsonable(obj):
    """Convert complex, ScaledComplex and tuples to JSON-friendly values."""
    if isinstance(obj, ScaledComplex):
        if obj.is_zero():
            return {"log2abs": None, "arg": 0.0}
        return {"log2abs": obj.log2abs(), "arg": obj.arg()}
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if obj is INFINITY:
        return "inf"
    if isinstance(obj, float):
        if math.isnan(obj):
            return None
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if hasattr(obj, "item") and callable(obj.item):
        return jsonable(obj.item())
    return obj


# critical-value trail verdict -----------------------------------------------


@dataclass(frozen=True)
class TheoremBVerdict:
    c: complex
    N: int
    verdict: str
    degenerate_at: int | None
    log2_abs_D: tuple[float, ...]
    abs_S: tuple[float, ...]
    condition_1_witness: tuple[int, ...]
    condition_2_witness: tuple[int, ...]
    escaped_at: int | None
    thresholds: dict

    @property
    def certificate(self) -> bool:
        return self.verdict in (CONDITION_1, CONDITION_2)

    @property
    def S_final(self) -> float:
        return self.abs_S[-1] if self.abs_S else math.nan

    def to_dict(self) -> dict:
        return jsonable({
            "c": self.c,
            "N": self.N,
            "verdict": self.verdict,
            "certificate": self.certificate,
            "degenerate_at": self.degenerate_at,
            "escaped_at": self.escaped_at,
            "condition_1_witness": list(self.condition_1_witness),
            "condition_2_witness": list(self.condition_2_witness),
            "log2_abs_D_final": self.log2_abs_D[-1] if self.log2_abs_D else None,
            "abs_S_final": self.S_final,
            "thresholds": self.thresholds,
        })


def critical_value_trail(c: complex, N: int) -> tuple[list[ScaledComplex], list[ScaledComplex], int | None, int | None]:
    """``D_n = (R^n)'(c)`` and ``S_n = sum_{j<=n} 1/D_j`` for ``z**2 + c``.

    Returns ``(D, S, degenerate_at, escaped_at)``; on degeneracy the lists stop
    before the vanishing derivative.
    """
    R = QuadraticMap(c)
    derivs, pts, info = derivative_trail(R, complex(c), N)
    D, S = [], []
    acc = ZERO
    for n, d in enumerate(derivs):
        if d.is_zero():
            return D, S, n, info.get("escaped_at")
        D.append(d)
        acc = acc + d.reciprocal()
        S.append(acc)
    return D, S, None, info.get("escaped_at")


def _degenerate_index(c: complex, N: int, tol: float) -> int | None:
    z = complex(c)
    for j in range(N):
        if abs(z) < tol:
            return j + 1
        z = z * z + c
        if not math.isfinite(abs(z)) or abs(z) > 1e150:
            return None
    return None


def theorem_b_check(c: complex, N: int, config: DiagnosticsConfig | None = None) -> TheoremBVerdict:
    """Search the critical-value orbit of ``z**2 + c`` for the two subsequence conditions.

    Condition 1: indices where ``log2|D_n|`` sets a new record, reaches at least
    ``cond1_min_log2``, and ``|S_n| >= delta``; enough of them must lie in the
    second half of the available trail.
    Condition 2: at least ``band_min_len`` indices with ``log2|D_n|`` inside a
    band of width ``band_width_log2`` along which ``|S_n|`` grows by
    ``cond2_growth`` and exceeds ``cond2_min_abs_sum``.
    """
    cfg = config or DiagnosticsConfig()
    c = complex(c)
    thresholds = {
        "delta": cfg.delta,
        "degenerate_tol": cfg.degenerate_tol,
        "cond1_min_log2": cfg.cond1_min_log2,
        "cond1_min_witnesses": cfg.cond1_min_witnesses,
        "band_width_log2": cfg.band_width_log2,
        "band_min_len": cfg.band_min_len,
        "cond2_growth": cfg.cond2_growth,
        "cond2_min_abs_sum": cfg.cond2_min_abs_sum,
    }
    deg = _degenerate_index(c, N, cfg.degenerate_tol)
    D, S, deg2, escaped = critical_value_trail(c, N)
    if deg is None:
        deg = deg2
    if deg is not None:
        D, S = D[:deg], S[:deg]
        return TheoremBVerdict(c, N, DEGENERATE, deg, tuple(d.log2abs() for d in D), tuple(float(s.abs()) for s in S), (), (), escaped, thresholds)
    logD = [d.log2abs() for d in D]
    absS = [float(s.abs()) if s.in_native_range() else math.inf for s in S]
    n_avail = len(logD)
    half = n_avail // 2

    wit1 = []
    record = -math.inf
    for n in range(1, n_avail):
        if logD[n] > record:
            record = logD[n]
            if absS[n] >= cfg.delta:
                wit1.append(n)
    strong = [n for n in wit1 if n >= half and logD[n] >= cfg.cond1_min_log2]
    cond1 = len(strong) >= cfg.cond1_min_witnesses

    wit2: list[int] = []
    order = sorted(range(1, n_avail), key=lambda n: logD[n])
    best: list[int] = []
    j = 0
    for i in range(len(order)):
        while logD[order[i]] - logD[order[j]] > cfg.band_width_log2:
            j += 1
        if i - j + 1 > len(best):
            best = order[j:i + 1]
    band = sorted(best)
    cond2 = False
    if len(band) >= cfg.band_min_len:
        sv = [absS[n] for n in band]
        first = max(sv[0], 1e-300)
        if sv[-1] >= cfg.cond2_growth * first and max(sv) >= cfg.cond2_min_abs_sum:
            cond2 = True
            wit2 = band
    if cond1:
        verdict = CONDITION_1
    elif cond2:
        verdict = CONDITION_2
    else:
        verdict = INCONCLUSIVE
    return TheoremBVerdict(c, N, verdict, None, tuple(logD), tuple(absS), tuple(wit1), tuple(wit2), escaped, thresholds)


# orbit selection ------------------------------------------------------------


def long_orbit_points(R: RationalMap, a: complex, count: int, sep: float = 1e-8, max_steps: int = 500) -> list[complex]:
    """First ``count`` pairwise-separated points of the forward orbit of ``a``."""
    pts: list[complex] = []
    z = complex(a)
    for _ in range(max_steps):
        if all(abs(z - p) > sep for p in pts):
            pts.append(z)
            if len(pts) == count:
                return pts
        z = R.eval(z)
        if z is INFINITY:
            break
    raise ShortOrbitError(f"orbit of {a!r} has only {len(pts)} distinct points (need {count}); choose another point")


# Collet-Eckmann style classification -----------------------------------------


def corollary_a_case(rs_class: str, rp_class: str) -> int | None:
    """Case number for a pair of series labels, or ``None``."""
    ac = ABSOLUTELY_CONVERGENT
    if rs_class == ac and rp_class == ac:
        return 1
    if (rs_class == ac and rp_class == BOUNDED_TERMS_DIVERGENT) or (rp_class == ac and rs_class == BOUNDED_TERMS_DIVERGENT):
        return 2
    slowish = {ac, SLOW_DIVERGENT}
    if rs_class in slowish and rp_class in slowish:
        return 3
    return None


def overall_case(cases: Sequence[int | None]) -> int | None:
    if not cases or any(c is None for c in cases):
        return None
    return max(cases)


@dataclass
class CEVerdict:
    a: complex
    N: int
    points: list[complex]
    pairs: list[dict]
    case: int | None

    def to_dict(self) -> dict:
        return jsonable({"a": self.a, "N": self.N, "points": self.points, "pairs": self.pairs, "case": self.case})


def collet_eckmann_classify(R: RationalMap, a: complex, N: int, config: DiagnosticsConfig | None = None) -> CEVerdict:
    cfg = config or DiagnosticsConfig()
    pts = long_orbit_points(R, a, 2 * R.degree, cfg.long_orbit_sep, cfg.long_orbit_steps)
    rp_traces: dict[int, SeriesTrace] = {}
    for k, c in enumerate(R.critical_points):
        rp_traces[k], _ = forward_series(R, c, N, cfg.classify)
    pairs = []
    for k, c in enumerate(R.critical_points):
        for x in pts:
            entry: dict = {"critical_point": c, "x": x, "RP": rp_traces[k].classification}
            try:
                rs = backward_RS(R, c, x, N, cfg.classify)
                entry["RS"] = rs.classification
                entry["RS_stable"] = rs.evidence.get("stable")
            except (AtomCollisionError, KernelAtCriticalPointError, ArithmeticError) as exc:
                entry["RS"] = "error"
                entry["error"] = str(exc)
            entry["case"] = corollary_a_case(entry["RS"], entry["RP"])
            pairs.append(entry)
    return CEVerdict(complex(a), N, pts, pairs, overall_case([p["case"] for p in pairs]))


# condition (*) ----------------------------------------------------------------


def convergent_condition_star(R: RationalMap, a: complex, Ns: Sequence[int], config: DiagnosticsConfig | None = None) -> dict:
    """``A_N(x) = (1/N) sum_{j<N} sum_k |(R*)^j tau_x (c_k)| / |R''(c_k) (R^{N-j-1})'(R(c_k))|``."""
    cfg = config or DiagnosticsConfig()
    Ns = sorted(set(int(n) for n in Ns))
    if not Ns or Ns[0] < 1:
        raise ValueError("Ns must be positive")
    n_max = Ns[-1]
    pts = long_orbit_points(R, a, 2 * R.degree, cfg.long_orbit_sep, cfg.long_orbit_steps)
    crit = []
    for c, v in zip(R.critical_points, R.critical_values):
        if v is INFINITY:
            continue
        derivs, _, info = derivative_trail(R, v, n_max)
        crit.append((c, abs(R.deriv(c, 2)), derivs))
    rows = []
    for x in pts:
        flagged = []
        combos = []
        try:
            combos = backward_RS_combos(R, x, n_max - 1)
        except KernelAtCriticalPointError as exc:
            flagged.append({"j": None, "reason": str(exc)})
            try:
                combos = [backward_RS_combos(R, x, 0)[0]]
            except KernelAtCriticalPointError:
                combos = []
        # inner[j][k] = |(R*)^j tau_x (c_k)|
        inner: list[list[ScaledComplex | None]] = []
        for j, phi in enumerate(combos):
            row = []
            for c, _, _ in crit:
                try:
                    row.append(phi.evaluate_scaled(c, tol=1e-10).abs())
                except AtomCollisionError as exc:
                    row.append(None)
                    flagged.append({"j": j, "critical_point": c, "reason": str(exc)})
            inner.append(row)
        values = {}
        for N in Ns:
            total = ZERO
            for j in range(min(N, len(inner))):
                for k, (c, r2, derivs) in enumerate(crit):
                    v = inner[j][k]
                    m = N - j - 1
                    if v is None or m >= len(derivs) or derivs[m].is_zero():
                        continue
                    total = total + v / (derivs[m].abs() * r2)
            values[N] = total * (1.0 / N)
        vals = [float(values[N]) if values[N].in_native_range() else math.inf for N in Ns]
        half = len(vals) // 2
        trend_ok = vals[-1] <= max(vals[: half + 1]) * (1.0 + cfg.trend_slack)
        bounded = max(vals) < cfg.convergent_bound and trend_ok
        rows.append({"x": x, "values": dict(zip(Ns, vals)), "bounded": bounded, "flagged": flagged})
    return jsonable({
        "a": complex(a),
        "Ns": Ns,
        "rows": rows,
        "bounded": all(r["bounded"] for r in rows),
        "bound": cfg.convergent_bound,
    })


# strongly convergent ------------------------------------------------------------


def strongly_convergent_check(R: RationalMap, d_point: complex, n_max: int, config: DiagnosticsConfig | None = None) -> dict:
    """Trail of ``s_n(d_point)`` for ``n = 1..n_max``.

    A pole collision raises; a decomposition blocked by a critical relation
    truncates the trail and is recorded.
    """
    cfg = config or DiagnosticsConfig()
    trail = []
    stopped = None
    for n in range(1, n_max + 1):
        try:
            dec = decompose(R, n)
        except (CriticalRelationError, DepthCapError) as exc:
            stopped = {"n": n, "reason": str(exc)}
            break
        trail.append(s_n(dec, d_point))
    try:
        long_orbit_points(R, d_point, 2 * R.degree - 1 + 1, cfg.long_orbit_sep, cfg.long_orbit_steps)
        long_orbit = True
    except ShortOrbitError:
        long_orbit = False
    vals = [float(v) if v.in_native_range() else math.inf for v in trail]
    if len(vals) >= 2:
        half = len(vals) // 2
        trend = "bounded" if max(vals[half:]) <= max(vals[:half] or vals[:1]) * (1.0 + cfg.trend_slack) else "growing"
    else:
        trend = "insufficient"
    return jsonable({
        "d": complex(d_point),
        "trail": vals,
        "trend": trend,
        "long_orbit": long_orbit,
        "stopped": stopped,
    })


# report -------------------------------------------------------------------------


@dataclass
class DiagnosticsReport:
    data: dict
    traces: dict[str, SeriesTrace]
    measures: list[dict]
    statement: str
    exit_code: int

    def to_dict(self) -> dict:
        return self.data


def _map_descriptor(R: RationalMap) -> dict:
    return jsonable({
        "spec": R.to_spec(),
        "degree": R.degree,
        "critical_points": list(R.critical_points),
        "critical_values": list(R.critical_values),
        "infinity_multiplier": R.infinity_multiplier,
        "infinity_superattracting": R.infinity_superattracting,
    })


def analyze(R: RationalMap, N: int, config: DiagnosticsConfig | None = None, *, depth: int | None = None) -> DiagnosticsReport:
    """Run every applicable criterion and assemble the overall statement."""
    from .measures import AtomicMeasure, cesaro_measures, default_family, mu_sequence, weak_star_probe

    cfg = config or DiagnosticsConfig()
    data: dict = {"map": _map_descriptor(R), "config": jsonable({"N": N, "depth": depth, "thresholds": cfg.to_dict()})}
    traces: dict[str, SeriesTrace] = {}
    measure_records: list[dict] = []
    simple = check_simple_critical_points(R)
    relations = check_no_simple_critical_relations(R, N)
    data["hypotheses"] = jsonable({"simple_critical_points": simple.to_dict(), "no_critical_relations": relations.to_dict()})
    verdicts: dict = {}

    tb = None
    if isinstance(R, QuadraticMap):
        tb = theorem_b_check(R.c, N, cfg)
        verdicts["theorem_b"] = tb.to_dict()

    for k, c in enumerate(R.critical_points):
        rp, p = forward_series(R, c, N, cfg.classify)
        traces[f"RP_c{k}"] = rp
        traces[f"P_c{k}"] = p
    verdicts["forward_series"] = {name: jsonable(t.summary()) for name, t in traces.items()}

    degenerate = (tb is not None and tb.verdict == DEGENERATE) or (
        tb is None and all(traces[f"RP_c{k}"].degenerate_at is not None for k in range(len(R.critical_points)))
    )
    hyp_ok = simple.ok and relations.ok

    if not degenerate and hyp_ok:
        try:
            ce = collet_eckmann_classify(R, cfg.a, N, cfg)
            verdicts["collet_eckmann"] = ce.to_dict()
        except (ShortOrbitError, ArithmeticError, ValueError) as exc:
            verdicts["collet_eckmann"] = {"error": str(exc)}
        try:
            Ns = [n for n in cfg.Ns if n <= N] or [N]
            verdicts["condition_star"] = convergent_condition_star(R, cfg.a, Ns, cfg)
        except (ShortOrbitError, ArithmeticError, ValueError) as exc:
            verdicts["condition_star"] = {"error": str(exc)}
        try:
            n_max = min(cfg.strongly_n_max, depth) if depth else cfg.strongly_n_max
            verdicts["strongly_convergent"] = strongly_convergent_check(R, cfg.a, n_max, cfg)
        except (ArithmeticError, ValueError) as exc:
            verdicts["strongly_convergent"] = {"error": str(exc)}
        try:
            verdicts["identities"] = jsonable(verify_proposition_A(R, cfg.a, min(cfg.identities_N, N)).to_dict())
        except (ArithmeticError, ValueError) as exc:
            verdicts["identities"] = {"error": str(exc)}
        L = min(cfg.probe_L, N)
        probes = {}
        for i, d in enumerate(R.critical_values):
            if d is INFINITY:
                continue
            try:
                mus = mu_sequence(R, i, L - 1)
                nus = cesaro_measures(mus, L)
                rep = weak_star_probe(nus, default_family(), L)
                probes[str(i)] = rep.to_dict(include_trails=False)
                for n, m in enumerate(mus):
                    measure_records.extend(m.records(i=i, l=None, n=n))
                for l, m in enumerate(nus, start=1):
                    measure_records.extend(m.records(i=i, l=l, n=None))
            except (ArithmeticError, ValueError) as exc:
                probes[str(i)] = {"error": str(exc)}
        verdicts["weak_star"] = jsonable(probes)

    data["verdicts"] = verdicts
    if degenerate:
        statement, code, criterion = DEGENERATE, 3, None
    elif not hyp_ok:
        statement, code, criterion = HYPOTHESES_VIOLATED, 2, None
    elif tb is not None and tb.certificate:
        statement, code, criterion = CERTIFICATE, 0, f"theorem_b:{tb.verdict}"
    elif verdicts.get("collet_eckmann", {}).get("case") is not None:
        statement, code, criterion = CERTIFICATE, 0, f"corollary_a:case-{verdicts['collet_eckmann']['case']}"
    else:
        statement, code, criterion = INCONCLUSIVE, 0, None
    data["overall"] = {
        "statement": statement,
        "criterion": criterion,
        "meaning": "no invariant line field (numerical evidence under the recorded thresholds)" if statement == CERTIFICATE else None,
        "assumptions": ["Lebesgue measure of the Julia set and postcritical set is not verified"],
    }
    if tb is not None and tb.certificate:
        probe_growing = any(isinstance(p, dict) and p.get("aggregate") == "growing" for p in verdicts.get("weak_star", {}).values())
        data["overall"]["consistency"] = {"weak_star_growing": probe_growing, "consistent": not probe_growing}
    return DiagnosticsReport(data, traces, measure_records, statement, code)


SCAN_COLUMNS = (
    "c_re",
    "c_im",
    "verdict",
    "certificate",
    "degenerate_at",
    "escaped_at",
    "log2_abs_D_N",
    "abs_S_N",
    "rp_class",
    "p_class",
    "error",
)


def scan_row(c: complex, N: int, config: DiagnosticsConfig | None = None) -> dict:
    """One summary row for a quadratic parameter."""
    cfg = config or DiagnosticsConfig()
    c = complex(c)
    row = {k: "" for k in SCAN_COLUMNS}
    row["c_re"], row["c_im"] = c.real, c.imag
    try:
        tb = theorem_b_check(c, N, cfg)
        rp, p = forward_series(QuadraticMap(c), 0j, N, cfg.classify)
        row.update({
            "verdict": tb.verdict,
            "certificate": int(tb.certificate),
            "degenerate_at": "" if tb.degenerate_at is None else tb.degenerate_at,
            "escaped_at": "" if tb.escaped_at is None else tb.escaped_at,
            "log2_abs_D_N": tb.log2_abs_D[-1] if tb.log2_abs_D else "",
            "abs_S_N": tb.abs_S[-1] if tb.abs_S else "",
            "rp_class": rp.classification,
            "p_class": p.classification,
        })
    except Exception as exc:  # recorded per row; the scan continues
        row["verdict"] = "error"
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row
