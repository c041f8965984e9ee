"""Ruelle-Poincare series along orbits and backward fibers.

Series conventions (``d_i = R(c_i)``, ``b_i = 1/R''(c_i)``):

* ``RP(x)``: terms ``1/(R^n)'(R(x))`` for ``n >= 0``; ``P(x)`` their moduli.
* ``RS(x, a)``: terms ``(R*)^n(tau_a)(x)``; ``S(x)``: ``sum_{R^n(y)=x} |(R^n)'(y)|^-2``.
* ``A(x, a)``: terms ``1/((R^n)'(a) (x - R^n(a)))``.

Cauchy products use ``C[0] = 0`` and ``C[k] = sum_{j+l=k-1} A[j] B[l]``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .maps import INFINITY, RationalMap, orbit, preimages
from .numerics import ONE, ZERO, ScaledComplex
from .ruelle import AtomCollisionError, CauchyCombo, CriticalFiberError, KernelAtCriticalPointError, apply_star

ABSOLUTELY_CONVERGENT = "absolutely-convergent"
BOUNDED_TERMS_DIVERGENT = "bounded-terms-divergent"
SLOW_DIVERGENT = "slow-divergent"
DIVERGENT = "divergent"
DEGENERATE = "degenerate"
CLASSES = (ABSOLUTELY_CONVERGENT, BOUNDED_TERMS_DIVERGENT, SLOW_DIVERGENT, DIVERGENT, DEGENERATE)

ATOM_TOL = 1e-10


@dataclass(frozen=True)
class ClassifyConfig:
    ratio_window: int = 10
    ratio_limit: float = 0.95
    tail_rel: float = 1e-6
    bounded_lo: float = 1e-3
    bounded_hi: float = 1e3
    log_fit_r2: float = 0.99
    min_terms: int = 8
    stability_fraction: float = 2.0 / 3.0

    @classmethod
    def from_dict(cls, d: dict) -> ClassifyConfig:
        known = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        return cls(**known)


@dataclass(frozen=True)
class SeriesTrace:
    name: str
    terms: tuple[ScaledComplex, ...]
    partial_sums: tuple[ScaledComplex, ...]
    abs_partial_sums: tuple[float, ...]
    classification: str
    evidence: dict = field(default_factory=dict)
    degenerate_at: int | None = None

    def __len__(self) -> int:
        return len(self.terms)

    def term(self, n: int) -> complex:
        return self.terms[n].to_complex()

    def psum(self, n: int | None = None) -> complex:
        return self.partial_sums[-1 if n is None else n].to_complex()

    def abs_terms_log2(self) -> list[float]:
        return [_log2(t) for t in self.terms]

    def truncated(self, n_terms: int) -> SeriesTrace:
        return make_trace(self.name, self.terms[:n_terms], degenerate_at=self.degenerate_at if n_terms >= len(self) else None)

    def to_rows(self) -> list[dict]:
        rows = []
        for n, (t, s, a) in enumerate(zip(self.terms, self.partial_sums, self.abs_partial_sums)):
            tc = _safe_complex(t)
            sc = _safe_complex(s)
            rows.append({
                "n": n,
                "term_re": tc.real,
                "term_im": tc.imag,
                "term_log2abs": _log2(t),
                "psum_re": sc.real,
                "psum_im": sc.imag,
                "abs_psum_log2": a,
            })
        return rows

    def summary(self) -> dict:
        return {
            "name": self.name,
            "terms": len(self.terms),
            "classification": self.classification,
            "degenerate_at": self.degenerate_at,
            "evidence": self.evidence,
        }


TRACE_COLUMNS = ("n", "term_re", "term_im", "term_log2abs", "psum_re", "psum_im", "abs_psum_log2")


def write_trace_csv(trace: SeriesTrace, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for row in trace.to_rows():
            w.writerow([row[c] if c == "n" else repr(float(row[c])) for c in TRACE_COLUMNS])


def _log2(v: ScaledComplex) -> float:
    return -math.inf if v.is_zero() else v.log2abs()


def _safe_complex(v: ScaledComplex) -> complex:
    try:
        return v.to_complex()
    except OverflowError:
        return complex(math.copysign(math.inf, v.mantissa.real), math.copysign(math.inf, v.mantissa.imag))


def make_trace(
    name: str,
    terms: Sequence[ScaledComplex],
    *,
    degenerate_at: int | None = None,
    config: ClassifyConfig | None = None,
    extra: dict | None = None,
) -> SeriesTrace:
    terms = tuple(ScaledComplex.of(t) for t in terms)
    psums = []
    abs_sums = []
    acc = ZERO
    abs_acc = ZERO
    for t in terms:
        acc = acc + t
        abs_acc = abs_acc + t.abs()
        psums.append(acc)
        abs_sums.append(_log2(abs_acc))
    trace = SeriesTrace(name, terms, tuple(psums), tuple(abs_sums), DEGENERATE, {}, degenerate_at)
    label, evidence = classify(trace, config or ClassifyConfig(), extra=extra)
    return replace(trace, classification=label, evidence=evidence)


def _window_ratio(logs: list[float], window: int) -> float | None:
    """Geometric-mean ratio over the last ``window`` steps (log2 domain)."""
    finite = [(i, v) for i, v in enumerate(logs) if math.isfinite(v)]
    if len(finite) < 2:
        return None
    tail = finite[-(window + 1):]
    (i0, v0), (i1, v1) = tail[0], tail[-1]
    if i1 == i0:
        return None
    x = (v1 - v0) / (i1 - i0)
    return math.inf if x > 1023 else 2.0**x


def _log_fit_r2(values: np.ndarray) -> tuple[float, float]:
    n = np.arange(1, len(values) + 1, dtype=float)
    x = np.log(n)
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, values, rcond=None)
    pred = A @ coef
    ss_res = float(np.sum((values - pred) ** 2))
    ss_tot = float(np.sum((values - values.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return r2, float(coef[0])


def _classify_core(trace: SeriesTrace, cfg: ClassifyConfig) -> tuple[str, dict]:
    if trace.degenerate_at is not None:
        return DEGENERATE, {"degenerate_at": trace.degenerate_at}
    logs = trace.abs_terms_log2()
    n = len(logs)
    ev: dict = {"terms": n}
    if n == 0:
        return DIVERGENT, ev
    tail_logs = [v for v in logs[-cfg.ratio_window:] if math.isfinite(v)]
    if not tail_logs:
        ev["reason"] = "terms vanish identically"
        return ABSOLUTELY_CONVERGENT, ev
    head = trace.abs_partial_sums[-1]
    ratio = _window_ratio(logs, cfg.ratio_window)
    ev["ratio_estimate"] = ratio
    if ratio is not None and ratio < cfg.ratio_limit:
        tail_log2 = max(tail_logs) + math.log2(ratio / (1.0 - ratio)) if ratio > 0 else -math.inf
        ev["tail_log2"] = tail_log2
        ev["head_log2"] = head
        if tail_log2 < head + math.log2(cfg.tail_rel):
            return ABSOLUTELY_CONVERGENT, ev
    if n >= cfg.min_terms and all(math.isfinite(v) for v in trace.abs_partial_sums):
        max_log = max(trace.abs_partial_sums)
        if max_log < 1000:
            sums = np.array([2.0 ** v for v in trace.abs_partial_sums])
            half = n // 2
            growing = sums[-1] > sums[half] * (1 + 1e-9)
            last_half = logs[half:]
            in_band = all(math.log2(cfg.bounded_lo) <= v <= math.log2(cfg.bounded_hi) for v in last_half)
            terms_lin = np.array([2.0 ** v if math.isfinite(v) else 0.0 for v in logs])
            decaying = terms_lin[half:].max() <= terms_lin[:half].max() and terms_lin[-1] < terms_lin[half] if half > 0 else False
            if growing:
                r2, slope = _log_fit_r2(sums)
                ev["log_fit_r2"] = r2
                ev["log_fit_slope"] = slope
                if r2 >= cfg.log_fit_r2 and slope > 0 and decaying:
                    return SLOW_DIVERGENT, ev
                if in_band:
                    ev["band"] = [cfg.bounded_lo, cfg.bounded_hi]
                    return BOUNDED_TERMS_DIVERGENT, ev
    return DIVERGENT, ev


def classify(trace: SeriesTrace, cfg: ClassifyConfig | None = None, extra: dict | None = None) -> tuple[str, dict]:
    """Heuristic label plus evidence, including a prefix-stability flag."""
    cfg = cfg or ClassifyConfig()
    label, ev = _classify_core(trace, cfg)
    if extra:
        ev.update(extra)
    if label != DEGENERATE:
        k = max(1, math.ceil(len(trace) * cfg.stability_fraction))
        if k < len(trace):
            prefix = SeriesTrace(trace.name, trace.terms[:k], trace.partial_sums[:k], trace.abs_partial_sums[:k], label, {}, None)
            plabel, _ = _classify_core(prefix, cfg)
            ev["stable"] = plabel == label
            ev["prefix_classification"] = plabel
        else:
            ev["stable"] = False
    return label, ev


# series constructors ---------------------------------------------------------


def series_escape_radius(R: RationalMap) -> float:
    """Largest radius whose image is still a finite double."""
    scale = 1.0 + sum(abs(c) for c in R.P.coeffs)
    return (1e300 / scale) ** (1.0 / R.degree)


def derivative_trail(R: RationalMap, z0, N: int) -> tuple[list[ScaledComplex], list[complex], dict]:
    """Cumulative derivatives ``(R^n)'(z0)`` for ``n <= N`` and the orbit."""
    if z0 is INFINITY:
        return [], [], {"infinite_start": True}
    od = orbit(R, z0, N, escape_radius=series_escape_radius(R))
    info: dict = {}
    if od.escaped_at is not None:
        info["escaped_at"] = od.escaped_at
    if od.hit_pole or od.overflowed:
        info["left_plane_at"] = len(od.points)
    return list(od.cumulative_derivatives), list(od.points), info


def _reciprocal_terms(derivs: Sequence[ScaledComplex]) -> tuple[list[ScaledComplex], int | None]:
    terms = []
    for j, d in enumerate(derivs):
        if d.is_zero():
            return terms, j
        terms.append(d.reciprocal())
    return terms, None


def forward_series(R: RationalMap, x: complex, N: int, config: ClassifyConfig | None = None) -> tuple[SeriesTrace, SeriesTrace]:
    """``RP(x)`` and ``P(x)`` for ``n = 0..N``."""
    start = R.eval(x)
    if start is INFINITY:
        empty: list[ScaledComplex] = []
        return (make_trace("RP", empty, degenerate_at=0, config=config), make_trace("P", empty, degenerate_at=0, config=config))
    derivs, _, info = derivative_trail(R, start, N)
    terms, deg = _reciprocal_terms(derivs)
    extra = dict(info)
    if deg is None and ("escaped_at" in info) and R.infinity_superattracting:
        extra["escaped"] = True
    rp = make_trace("RP", terms, degenerate_at=deg, config=config, extra=extra)
    p = make_trace("P", [t.abs() for t in terms], degenerate_at=deg, config=config, extra=extra)
    if extra.get("escaped") and deg is None:
        rp = _mark_escaped(rp)
        p = _mark_escaped(p)
    return rp, p


def _mark_escaped(trace: SeriesTrace) -> SeriesTrace:
    """Orbits escaping to a superattracting infinity have super-exponentially decaying terms."""
    ev = dict(trace.evidence)
    ev["reason"] = "orbit escapes to superattracting infinity"
    return replace(trace, classification=ABSOLUTELY_CONVERGENT, evidence=ev)


def backward_RS(R: RationalMap, x: complex, a: complex, N: int, config: ClassifyConfig | None = None) -> SeriesTrace:
    """``RS(x, a)`` for ``n = 0..N``, iterating the closed-form operator."""
    phi = CauchyCombo.tau(a)
    terms = []
    for n in range(N + 1):
        for atom, _ in phi.atoms:
            if abs(x - atom) <= ATOM_TOL:
                raise AtomCollisionError(f"x={x!r} meets the atom {atom!r} of term {n}")
        terms.append(phi.evaluate_scaled(x))
        if n < N:
            phi = apply_star(R, phi)
    return make_trace("RS", terms, config=config)


def backward_RS_combos(R: RationalMap, a: complex, N: int) -> list[CauchyCombo]:
    phi = CauchyCombo.tau(a)
    out = [phi]
    for _ in range(N):
        phi = apply_star(R, phi)
        out.append(phi)
    return out


def backward_S(R: RationalMap, x: complex, depth: int, config: ClassifyConfig | None = None, max_points: int = 1 << 14) -> SeriesTrace:
    """``S(x)`` for ``n = 0..depth`` by recursive fiber expansion."""
    if R.degree**depth > max_points:
        raise ValueError(f"fiber of size {R.degree}**{depth} exceeds {max_points}")
    level: list[tuple[complex, ScaledComplex]] = [(complex(x), ONE)]
    terms = [ONE]
    for step in range(depth):
        nxt = []
        total = ZERO
        for y, dk in level:
            for y2 in preimages(R, y):
                r1 = R.deriv(y2)
                if abs(r1) <= 1e-12 * max(1.0, abs(y2)):
                    raise CriticalFiberError(f"fiber over {x!r} meets the critical point {y2!r} at depth {step + 1}")
                d2 = dk * r1
                nxt.append((y2, d2))
                mag = d2.abs()
                total = total + (mag * mag).reciprocal()
        level = nxt
        terms.append(total)
    return make_trace("S", terms, config=config)


def modified_A(R: RationalMap, x: complex, a: complex, N: int, config: ClassifyConfig | None = None) -> SeriesTrace:
    """``A(x, a)`` for ``n = 0..N``; degenerate where ``R^n(a)`` meets ``x``."""
    derivs, pts, info = derivative_trail(R, a, N)
    terms = []
    deg = None
    for n, (d, p) in enumerate(zip(derivs, pts)):
        if d.is_zero() or abs(x - p) <= ATOM_TOL:
            deg = n
            break
        terms.append((d * (x - p)).reciprocal())
    if deg is None and len(terms) < N + 1 and not info.get("escaped_at"):
        deg = len(terms)
    return make_trace("A", terms, degenerate_at=deg, config=config, extra=info)


def cauchy_product(A: SeriesTrace | Sequence[ScaledComplex], B: SeriesTrace | Sequence[ScaledComplex], N: int, name: str = "product") -> SeriesTrace:
    """``C[0] = 0``, ``C[k] = sum_{j+l=k-1} A[j] B[l]`` for ``k = 0..N``."""
    a = A.terms if isinstance(A, SeriesTrace) else tuple(ScaledComplex.of(t) for t in A)
    b = B.terms if isinstance(B, SeriesTrace) else tuple(ScaledComplex.of(t) for t in B)
    if len(a) < N or len(b) < N:
        raise ValueError(f"need {N} terms, have {len(a)} and {len(b)}")
    out = [ZERO]
    for k in range(1, N + 1):
        acc = ZERO
        for j in range(k):
            acc = acc + a[j] * b[k - 1 - j]
        out.append(acc)
    return make_trace(name, out)


# truncated identities ----------------------------------------------------------


@dataclass(frozen=True)
class VariantResult:
    identity: int
    sign: int
    argument: str
    lhs: complex | None
    rhs: complex | None
    residual: float | None
    error: str | None = None

    @property
    def name(self) -> str:
        return f"identity{self.identity}[sign={'+' if self.sign > 0 else '-'},arg={self.argument}]"

    def to_dict(self) -> dict:
        enc = lambda z: None if z is None else [z.real, z.imag]  # noqa: E731
        return {
            "name": self.name,
            "identity": self.identity,
            "sign": self.sign,
            "argument": self.argument,
            "lhs": enc(self.lhs),
            "rhs": enc(self.rhs),
            "residual": self.residual,
            "error": self.error,
        }


@dataclass(frozen=True)
class PropositionAReport:
    a: complex
    x: complex
    N: int
    variants: tuple[VariantResult, ...]

    def best(self, identity: int) -> VariantResult | None:
        ok = [v for v in self.variants if v.identity == identity and v.residual is not None]
        return min(ok, key=lambda v: v.residual) if ok else None

    def to_dict(self) -> dict:
        return {
            "a": [self.a.real, self.a.imag],
            "x": [self.x.real, self.x.imag],
            "N": self.N,
            "variants": [v.to_dict() for v in self.variants],
            "best": {str(i): (self.best(i).name if self.best(i) else None) for i in (1, 2)},
        }


def _psum(terms: Iterable[ScaledComplex]) -> ScaledComplex:
    acc = ZERO
    for t in terms:
        acc = acc + t
    return acc


def _rel(lhs: ScaledComplex, rhs: ScaledComplex) -> float:
    diff = (lhs - rhs).abs()
    scale = lhs.abs()
    if scale.is_zero():
        return 0.0 if diff.is_zero() else math.inf
    return float(diff / scale)


def verify_proposition_A(
    R: RationalMap,
    a: complex,
    N: int,
    sign_mode: str = "both",
    x: complex | None = None,
) -> PropositionAReport:
    """Residuals of the two truncated orbit identities under each variant.

    Identity 1 compares ``sum_{n=1}^N 1/(R^n)'(arg)`` (``arg`` is ``a`` or
    ``R(a)``) with ``sum_{n=1}^N lambda**n + s sum_i b_i [RS(c_i, a) * RP(c_i)]_n``.
    Identity 2 compares ``RS(x, a)`` with
    ``A(x, a) + s sum_k b_k [A(c_k, a) * RS(x, arg_k)]`` where ``arg_k`` is
    ``R(c_k)`` or ``c_k``. ``sign_mode`` is ``"+"``, ``"-"`` or ``"both"``.
    """
    if sign_mode not in ("+", "-", "both"):
        raise ValueError("sign_mode must be '+', '-' or 'both'")
    signs = {"+": (1,), "-": (-1,), "both": (1, -1)}[sign_mode]
    a = complex(a)
    x = complex(2.0 * a + 1.0) if x is None else complex(x)
    crit = [(c, 1.0 / R.deriv(c, 2), v) for c, v in zip(R.critical_points, R.critical_values)]
    lam = R.infinity_multiplier
    lam_sum = ScaledComplex.of(sum(lam**n for n in range(1, N + 1)))
    variants: list[VariantResult] = []

    # identity 1
    products = []
    err1 = None
    try:
        for c, b, _ in crit:
            rs = backward_RS(R, c, a, N)
            rp, _ = forward_series(R, c, N)
            if rp.degenerate_at is not None:
                raise ZeroDivisionError(f"RP(c={c!r}) degenerate at {rp.degenerate_at}")
            products.append((b, cauchy_product(rs, rp, N)))
    except (ArithmeticError, ValueError) as exc:
        err1 = str(exc)
    for arg in ("a", "R(a)"):
        base = a if arg == "a" else R.eval(a)
        derivs, _, info = derivative_trail(R, base, N) if base is not INFINITY else ([], [], {})
        if "escaped_at" in info and R.infinity_superattracting:
            # past escape the reciprocal derivatives are below any double
            derivs = derivs + [None] * (N + 1 - len(derivs))
        bad = len(derivs) < N + 1 or any(d is not None and d.is_zero() for d in derivs)
        for s in signs:
            if err1 or bad:
                variants.append(VariantResult(1, s, arg, None, None, None, err1 or "orbit derivative vanishes or orbit leaves the plane"))
                continue
            lhs = _psum(d.reciprocal() for d in derivs[1:] if d is not None)
            corr = _psum(ScaledComplex.of(b) * _psum(prod.terms[1:]) for b, prod in products)
            rhs = lam_sum + corr if s > 0 else lam_sum - corr
            variants.append(VariantResult(1, s, arg, lhs.to_complex(), rhs.to_complex(), _rel(lhs, rhs)))

    # identity 2
    lhs2 = None
    err2 = None
    try:
        lhs2 = _psum(backward_RS(R, x, a, N).terms)
        A_x = _psum(modified_A(R, x, a, N).terms)
    except (ArithmeticError, ValueError) as exc:
        err2 = str(exc)
    for arg in ("R(c_k)", "c_k"):
        inner_err = err2
        corr = ZERO
        if inner_err is None:
            try:
                for c, b, v in crit:
                    A_c = modified_A(R, c, a, N)
                    if A_c.degenerate_at is not None:
                        raise ZeroDivisionError(f"A(c={c!r}) degenerate at {A_c.degenerate_at}")
                    target = v if arg == "R(c_k)" else c
                    if target is INFINITY:
                        raise ZeroDivisionError("critical value at infinity")
                    rs = backward_RS(R, x, target, N)
                    corr = corr + ScaledComplex.of(b) * _psum(cauchy_product(A_c, rs, N).terms)
            except (ArithmeticError, ValueError, KernelAtCriticalPointError) as exc:
                inner_err = str(exc)
        for s in signs:
            if inner_err is not None:
                variants.append(VariantResult(2, s, arg, None, None, None, inner_err))
                continue
            rhs = A_x + corr if s > 0 else A_x - corr
            variants.append(VariantResult(2, s, arg, lhs2.to_complex(), rhs.to_complex(), _rel(lhs2, rhs)))
    return PropositionAReport(a, x, N, tuple(variants))
