"""Exit criteria of the engine, runnable from the CLI (`verify`) and from pytest.

Each check returns a CheckResult; ``tamper`` hooks deliberately corrupt one
construction so the failure paths can be exercised.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .covering import audit_coverage, best_upper, rogers_bound, subset_bound, tiling_cover
from .discrete_oracle import PI_SQ, zq_max_experiment
from .geometry import Ball, Box, scale
from .lattices import (
    catalog_entry,
    lattice_lower_bound,
    normalize_to_packing,
    packing_density,
)
from .witness import lattice_witness_ratio, ratio, sample_double_pd


@dataclass
class CheckResult:
    name: str
    statement: str
    passed: bool
    detail: str
    seconds: float
    budget: float

    @property
    def within_budget(self) -> bool:
        return self.seconds <= self.budget

    def line(self) -> str:
        flag = "PASS" if self.passed and self.within_budget else "FAIL"
        return f"{flag}  {self.name:<28} {self.seconds:7.2f}s/{self.budget:g}s  {self.statement}  [{self.detail}]"


def _timed(name, statement, budget, fn) -> CheckResult:
    t0 = time.perf_counter()
    ok, detail = fn()
    return CheckResult(name, statement, bool(ok), detail, time.perf_counter() - t0, budget)


def _grid_offset(U, tamper):
    if tamper != "grid":
        return None
    from .geometry import inscribed_box

    cell = inscribed_box(scale(U, Fraction(1, 2)))
    return tuple(Fraction(3, 10) * 2 * h for h in cell.half_widths)


def one_dim_window(tamper=None) -> CheckResult:
    def run():
        Z = catalog_entry("Zn", 1).lattice
        U = Box((1,))
        bad = []
        for r in range(1, 21):
            V = Box((r,))
            up = tiling_cover(U, V, offset=_grid_offset(U, tamper))
            lo = lattice_lower_bound(Z, U, V)
            if up.exact != 2 + Fraction(1, r) or abs(up.bound_value - (2 + 1 / r)) > 1e-12:
                bad.append(f"upper r={r}: {up.exact}")
            if lo.exact != 2 - Fraction(1, r) or abs(lo.value - (2 - 1 / r)) > 1e-12:
                bad.append(f"lower r={r}: {lo.exact}")
        return not bad, "; ".join(bad[:3]) or "r=1..20 exact"

    return _timed("1d-sharp-window", "2 - 1/r <= C_1(r) <= 2 + 1/r", 1.0, run)


def cube_sandwich(tamper=None) -> CheckResult:
    def run():
        bad = []
        for n in range(1, 6):
            U = Box((1,) * n)
            Z = catalog_entry("Zn", n).lattice
            for r in range(1, 11):
                V = scale(U, r)
                up = tiling_cover(U, V)
                lo = lattice_lower_bound(Z, U, V)
                if abs(up.bound_value - (2 + 1 / r) ** n) > 1e-9 or abs(lo.value - (2 - 1 / r) ** n) > 1e-9:
                    bad.append(f"n={n} r={r}")
            V = scale(U, 100)
            q = tiling_cover(U, V).bound_value / lattice_lower_bound(Z, U, V).value
            if q > (1 + 1 / 50) ** n:
                bad.append(f"n={n} r=100 ratio {q}")
        return not bad, "; ".join(bad[:3]) or "n=1..5, r=1..10 exact; r=100 gap within (1+1/50)^n"

    return _timed("tile-cube-sandwich", "C_n(cube, r cube) = 2^n (1 + o(1))", 10.0, run)


def witness_containment(trials: int = 500, seed: int = 0, tol: float = 1e-8) -> CheckResult:
    def run():
        violations = 0
        checked = 0
        worst = -math.inf
        for n in (1, 2, 3):
            for kind in ("ball", "cube"):
                U = Ball(n, 1) if kind == "ball" else Box((1,) * n)
                for r in (1, 2, 4):
                    V = scale(U, r)
                    top = best_upper(U, V)
                    rng = np.random.default_rng([seed, n, r, kind == "ball"])
                    for t in range(trials):
                        J = int(rng.integers(1, 9))
                        fs = float(rng.uniform(0.25, 4.0)) / U.circumradius()
                        f = sample_double_pd(n, J, fs, int(rng.integers(2**31)))
                        est = ratio(f, U, V, tol)
                        checked += 1
                        gap = est.lower - top.value
                        worst = max(worst, gap)
                        if gap > 1e-6:
                            violations += 1
        return violations == 0, f"{checked} witnesses, {violations} violations, max(lower - upper) = {worst:.3g}"

    return _timed("witness-containment", "mean_V f / mean_U f <= |X||U|/|V|", 120.0, run)


EXPECTED_LATTICE_WITNESS = {10: Fraction(61, 42), 20: Fraction(121, 82), 40: Fraction(241, 162), 80: Fraction(481, 322)}


def proof_construction_convergence() -> CheckResult:
    def run():
        Z = catalog_entry("Zn", 1).lattice
        U, V = Box((1,)), Box((2,))
        vals = {R: lattice_witness_ratio(Z, U, V, R) for R in EXPECTED_LATTICE_WITNESS}
        ok = all(vals[R] == EXPECTED_LATTICE_WITNESS[R] for R in vals)
        seq = [vals[R] for R in sorted(vals)]
        ok &= all(a < b for a, b in zip(seq, seq[1:]))
        ok &= all(Fraction(3, 2) - vals[R] <= Fraction(2, R) and vals[R] < Fraction(3, 2) for R in vals)
        return ok, ", ".join(f"R={R}: {vals[R]}" for R in sorted(vals))

    return _timed("proof-construction", "discrete limit increases to 2 - 1/2", 1.0, run)


def hexagonal_asymptote() -> CheckResult:
    def run():
        U, V = Ball(2, 1), Ball(2, 50)
        lat = normalize_to_packing(catalog_entry("A2"), U)
        delta = packing_density(lat, scale(U, Fraction(1, 2)))
        target = 4 * math.pi / math.sqrt(12)
        lo = lattice_lower_bound(lat, U, V)
        ok = abs(lo.value - target) <= 0.05 * target and abs(4 * delta - target) < 1e-9
        return ok, f"bound {lo.value:.5f} vs 2^2 delta = {4 * delta:.5f} (count {lo.audit['interior_count']})"

    return _timed("hexagonal-asymptote", "C_2(B_1, B_r) >= 4 delta_L(B_1/2)(1 + o(1))", 10.0, run)


def zq_ceiling(trials: int = 10_000, seed: int = 0) -> CheckResult:
    def run():
        parts, ok = [], True
        for q in (128, 1024):
            n = q // 8
            res = zq_max_experiment(q, n, trials, seed)
            m = res["max_ratio"]
            ok &= m <= PI_SQ + 1e-9 and m >= (2 * n + 1) / (n + 1)
            parts.append(f"q={q}: max {m:.4f}")
        return ok, ", ".join(parts)

    return _timed("zq-ceiling", "sum_{k<=2n} f(k) <= pi^2 sum_{k<=n} f(k)", 60.0, run)


def _certified_bounds(U, V, lattice):
    out = {"tiling": tiling_cover(U, V).bound_value, "rogers": rogers_bound(U, V).value}
    try:
        out["subset"] = subset_bound(U, V).value
    except ValueError:
        pass
    out["lattice"] = lattice_lower_bound(lattice, U, V).value
    return out


def homogeneity_monotonicity() -> CheckResult:
    def run():
        bad = []
        for n in (1, 2, 3):
            for U in (Box((1,) * n), Ball(n, 1)):
                lat = normalize_to_packing(catalog_entry("Zn", n), U)
                for r in (1, 2, 4):
                    V = scale(U, r)
                    base = _certified_bounds(U, V, lat)
                    for lam in (Fraction(1, 2), Fraction(3)):
                        other = _certified_bounds(scale(U, lam), scale(V, lam), lat.scaled(lam))
                        for k, v in base.items():
                            if abs(other[k] - v) > 1e-12 * max(1.0, abs(v)):
                                bad.append(f"{U.literal()} r={r} lam={lam} {k}")
                    for lam in (1, Fraction(3, 2), 2, 3):
                        big = lattice_lower_bound(lat, U, scale(V, lam)).value
                        if big < base["lattice"] / float(lam) ** n - 1e-12:
                            bad.append(f"monotone {U.literal()} r={r} lam={lam}")
        return not bad, "; ".join(bad[:3]) or "joint scaling exact, V-enlargement within lam^n"

    return _timed("homogeneity", "C(lam U, lam V) = C(U, V); C(U, lam V) >= lam^-n C(U, V)", 5.0, run)


def rogers_regression() -> CheckResult:
    def run():
        bad = []
        for r in range(1, 21):
            v = rogers_bound(Box((1,)), Box((r,))).value
            if abs(v - 2 * (1 + 1 / r)) > 1e-12:
                bad.append(f"n=1 r={r}: {v}")
        v2 = rogers_bound(Ball(2, 1), Ball(2, 4)).value
        if abs(v2 - 66.58) > 0.01:
            bad.append(f"ball r=4: {v2}")
        for n in range(1, 5):
            U = Box((1,) * n)
            for r in range(1, 11):
                V = scale(U, r)
                if not tiling_cover(U, V).bound_value < rogers_bound(U, V).value:
                    bad.append(f"tiling not better n={n} r={r}")
        return not bad, "; ".join(bad[:3]) or f"n=2 ball r=4 gives {v2:.4f}"

    return _timed("rogers-regression", "C_n(U, V) <= 2^n theta_n |V+U|/|V|", 10.0, run)


def coverage_audit(tamper=None, samples: int = 10_000) -> CheckResult:
    def run():
        fails, total = 0, 0
        cases = [(Box((1,)), Box((5,))), (Box((1, 1)), Box((2, 2))), (Ball(2, 1), Ball(2, 2)), (Ball(3, 1), Ball(3, 2))]
        for U, V in cases:
            cert = tiling_cover(U, V, offset=_grid_offset(U, tamper))
            c, f = audit_coverage(cert, samples)
            total += c
            fails += f
        return fails == 0, f"{total} sampled points of K, {fails} uncovered"

    return _timed("coverage-audit", "K subset H + X", 30.0, run)


def sandwich_consistency(tamper=None) -> CheckResult:
    def run():
        offset = 1 if tamper == "count" else 0
        bad = []
        for n in (1, 2, 3):
            U = Box((1,) * n)
            Z = catalog_entry("Zn", n).lattice
            for r in (1, 2, 5):
                V = scale(U, r)
                lo = lattice_lower_bound(Z, U, V, count_offset=offset).value
                up = best_upper(U, V).value
                if lo > up + 1e-9:
                    bad.append(f"n={n} r={r}: {lo} > {up}")
        return not bad, "; ".join(bad[:3]) or "lower <= upper on all cube cases"

    return _timed("sandwich-consistency", "lattice lower <= best upper", 10.0, run)


CRITERIA = {
    "1d-sharp-window": one_dim_window,
    "tile-cube-sandwich": cube_sandwich,
    "witness-containment": witness_containment,
    "proof-construction": proof_construction_convergence,
    "hexagonal-asymptote": hexagonal_asymptote,
    "zq-ceiling": zq_ceiling,
    "homogeneity": homogeneity_monotonicity,
    "rogers-regression": rogers_regression,
}
AUDITS = {"coverage-audit": coverage_audit, "sandwich-consistency": sandwich_consistency}
_TAMPERABLE = {"1d-sharp-window", "tile-cube-sandwich", "coverage-audit", "sandwich-consistency"}


def run_all(only=None, tamper=None) -> list[CheckResult]:
    out = []
    for name, fn in {**CRITERIA, **AUDITS}.items():
        if only and name not in only:
            continue
        out.append(fn(tamper=tamper) if name in _TAMPERABLE else fn())
    return out
