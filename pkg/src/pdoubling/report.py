"""Bound reports and (n, r) sweeps combining every bound source."""
from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .bounds import BoundEntry
from .covering import best_upper, rogers_bound, tiling_cover, upper_candidates
from .geometry import Ball, Box, ConvexBody, CrossPolytope, GeometryError, UnsupportedKind, scale
from .lattices import (
    LatticeError,
    ResourceCapExceeded,
    catalog_for_dim,
    lattice_lower_bound,
    normalize_to_packing,
    packing_density,
)
from .literals import parse_body
from .witness import (
    Autocorrelation,
    Gaussian,
    QuadratureFailure,
    lattice_witness_ratio,
    optimize_family,
    ratio,
    sample_double_pd,
)

CONSISTENCY_TOL = 1e-9
CONTAINMENT_TOL = 1e-6
#: the lattice witness radius is reduced until |Lambda_R| stays below this
LATTICE_WITNESS_POINTS = 200_000


@dataclass
class BoundReport:
    dim: int
    U: str
    V: str
    entries: list[BoundEntry]
    sandwich: tuple[float, float]
    witness_best: float | None
    consistency: bool
    commentary: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "kind": "bound-report",
            "dim": self.dim,
            "U": self.U,
            "V": self.V,
            "entries": [e.to_json() for e in self.entries],
            "sandwich": {"lower": self.sandwich[0], "upper": self.sandwich[1]},
            "witness_best": self.witness_best,
            "consistency": self.consistency,
            "commentary": list(self.commentary),
        }


def _derived_seed(seed: int, t: int) -> int:
    return int(np.random.SeedSequence([seed, t]).generate_state(1)[0])


def lattice_lower_entries(
    U: ConvexBody, V: ConvexBody, *, count_offset: int = 0, notes: list | None = None
) -> list[BoundEntry]:
    out = []
    for entry in catalog_for_dim(U.dim):
        try:
            lat = normalize_to_packing(entry, U)
            out.append(lattice_lower_bound(lat, U, V, count_offset=count_offset))
        except (UnsupportedKind, LatticeError, ResourceCapExceeded) as exc:
            if notes is not None:
                notes.append(f"lattice {entry.name} skipped: {exc}")
    return out


def best_packing(U: ConvexBody):
    """(lattice, density) of the densest catalog lattice packing of U/2."""
    best = None
    H = scale(U, Fraction(1, 2))
    for entry in catalog_for_dim(U.dim):
        try:
            lat = normalize_to_packing(entry, U)
            d = packing_density(lat, H)
        except (UnsupportedKind, LatticeError, ResourceCapExceeded):
            continue
        if best is None or d > best[1]:
            best = (lat, d)
    return best


def witness_battery(
    U: ConvexBody,
    V: ConvexBody,
    *,
    trials: int = 200,
    seed: int = 0,
    tol: float = 1e-8,
    lattice_witness: bool = True,
    commentary: list | None = None,
) -> list[BoundEntry]:
    """Autocorrelation of U, optimised Gaussian, random squared character sums, lattice witness."""
    notes = commentary if commentary is not None else []
    n = U.dim
    out = []
    try:
        est = ratio(Autocorrelation(U), U, V, tol)
        out.append(_witness_entry(est, "witness-family", {"family": f"autocorr:{U.literal()}"}))
    except (UnsupportedKind, QuadratureFailure) as exc:
        notes.append(f"autocorrelation witness skipped: {exc}")
    try:
        lo = U.circumradius() / 100
        hi = max(U.circumradius(), V.circumradius()) * 100
        sigma, est = optimize_family(lambda s: Gaussian(n, s), U, V, (lo, hi), log_scale=True, tol=tol)
        out.append(_witness_entry(est, "witness-family", {"family": "gauss", "sigma": sigma}))
    except QuadratureFailure as exc:
        notes.append(f"gaussian witness skipped: {exc}")
    if trials > 0:
        base_scale = 1.0 / U.circumradius()  # 2 / diam(U)
        best, best_label, fails = None, None, 0
        for t in range(trials):
            f = sample_double_pd(n, 1 + t % 8, base_scale, _derived_seed(seed, t))
            try:
                est = ratio(f, U, V, tol)
            except QuadratureFailure:
                fails += 1
                continue
            if best is None or est.lower > best.lower:
                best, best_label = est, f.literal()
        if best is not None:
            out.append(
                _witness_entry(
                    best,
                    "witness-random",
                    {"trials": trials, "argmax": best_label, "freq_scale": base_scale, "quadrature_failures": fails},
                )
            )
    if lattice_witness:
        packing = best_packing(U)
        if packing is not None:
            lat = packing[0]
            R = 10 * V.circumradius()
            while R > V.circumradius():
                vol = math.pi ** (n / 2) / math.gamma(n / 2 + 1) * R**n / lat.determinant
                if vol <= LATTICE_WITNESS_POINTS:
                    break
                R /= 1.25
            R = max(R, V.circumradius())
            try:
                val = lattice_witness_ratio(lat, U, V, R)
                out.append(
                    BoundEntry(
                        value=float(val),
                        direction="lower",
                        method="lattice-witness",
                        certified=False,
                        exact=val if isinstance(val, Fraction) else None,
                        audit={"lattice": lat.name, "R": R},
                    )
                )
            except (ResourceCapExceeded, LatticeError) as exc:
                notes.append(f"lattice witness skipped: {exc}")
    return out


def _witness_entry(est, method, audit) -> BoundEntry:
    audit = dict(audit, quadrature=est.method, nodes=est.node_count)
    return BoundEntry(value=est.value, direction="lower", method=method, certified=False, error=est.abs_error, audit=audit)


def _max_key(e: BoundEntry):
    return e.exact if e.exact is not None else Fraction(e.value)


def bounds(
    dim: int,
    U: ConvexBody | str,
    V: ConvexBody | str,
    *,
    seed: int = 0,
    tol: float = 1e-8,
    witness_trials: int = 200,
    count_offset: int = 0,
) -> BoundReport:
    """Every upper bound, every catalog lattice lower bound and the witness battery for C_n(U, V)."""
    U = parse_body(U, dim) if isinstance(U, str) else U
    V = parse_body(V, dim) if isinstance(V, str) else V
    if U.dim != dim or V.dim != dim:
        raise GeometryError("body dimension does not match --dim")
    notes: list[str] = []
    uppers = upper_candidates(U, V)
    top = best_upper(U, V, uppers)
    if not any(e.method == "tiling-cover" for e in uppers):
        notes.append("tiling cover unavailable for this pair (unsupported body or resource cap)")
    lowers = lattice_lower_entries(U, V, count_offset=count_offset, notes=notes)
    witnesses = witness_battery(U, V, trials=witness_trials, seed=seed, tol=tol, commentary=notes)
    best_lo = max(lowers, key=_max_key) if lowers else None
    lo_val = best_lo.value if best_lo is not None else 1.0
    if best_lo is None:
        notes.append("no catalog lattice bound available; lower end uses the constant function")
    consistent = lo_val <= top.value + CONSISTENCY_TOL
    wbest = max((w.usable for w in witnesses), default=None)
    if wbest is not None and top.certified and wbest > top.value + CONTAINMENT_TOL:
        consistent = False
        notes.append("witness exceeds the certified upper bound")
    if not consistent:
        notes.append("CONSISTENCY VIOLATION: lower bound exceeds upper bound")
    notes.append(f"best upper bound from {top.method}")
    if isinstance(U, Ball) and dim > 1:
        notes.append(
            "asymptotic Minkowski-constant estimates for balls (c_n > 65963 n for large n) are not computed; "
            "catalog lattice densities are used instead"
        )
    return BoundReport(
        dim=dim,
        U=U.literal(),
        V=V.literal(),
        entries=uppers + lowers + witnesses,
        sandwich=(lo_val, top.value),
        witness_best=wbest,
        consistency=consistent,
        commentary=notes,
    )


def revalidate(report: dict) -> bool:
    """Recompute every certified entry of a serialised report from its literals."""
    dim = report["dim"]
    U, V = parse_body(report["U"], dim), parse_body(report["V"], dim)
    fresh = {}
    for e in upper_candidates(U, V) + lattice_lower_entries(U, V):
        fresh.setdefault(e.method, []).append(e.value)
    for e in report["entries"]:
        if not e["certified"]:
            continue
        vals = fresh.get(e["method"], [])
        if not any(abs(v - e["value"]) <= 1e-12 * max(1.0, abs(v)) for v in vals):
            return False
    return True


# -- sweeps -------------------------------------------------------------------------

SWEEP_COLUMNS = [
    "n",
    "r",
    "lower_lattice",
    "upper_tiling",
    "upper_rogers",
    "witness_best",
    "ref_2n",
    "ref_2n_delta",
]


def unit_body(kind: str, n: int) -> ConvexBody:
    if kind in ("box", "cube"):
        return Box((1,) * n)
    if kind == "ball":
        return Ball(n, 1)
    if kind == "cross":
        return CrossPolytope(n, 1)
    raise ValueError(f"unknown body kind {kind!r}")


def _sweep_cell(kind: str, n: int, r, witness_trials: int, seed: int, tol: float, ref_delta) -> dict:
    U = unit_body(kind, n)
    V = scale(U, r)
    lowers = lattice_lower_entries(U, V)
    try:
        tiling = tiling_cover(U, V).bound_value
    except (UnsupportedKind, ResourceCapExceeded):
        tiling = None
    ws = witness_battery(U, V, trials=witness_trials, seed=seed, tol=tol, lattice_witness=False)
    return {
        "n": n,
        "r": float(r),
        "lower_lattice": max((e.value for e in lowers), default=None),
        "upper_tiling": tiling,
        "upper_rogers": rogers_bound(U, V).value,
        "witness_best": max((w.usable for w in ws), default=None),
        "ref_2n": float(2**n),
        "ref_2n_delta": ref_delta,
    }


def sweep(
    dims, rs, kind: str = "box", *, witness_trials: int = 20, seed: int = 0, tol: float = 1e-8, jobs: int = 1
) -> list[dict]:
    """One row per (n, r) with U the unit body and V = r U, in (n, r) order.

    With jobs > 1 the cells are computed in a process pool; rows are still
    returned in (n, r) order so the output does not depend on scheduling.
    """
    cells = []
    for n in dims:
        packing = best_packing(unit_body(kind, n))
        ref_delta = 2**n * packing[1] if packing is not None else None
        cells += [(kind, n, r, witness_trials, seed, tol, ref_delta) for r in rs]
    if jobs <= 1:
        return [_sweep_cell(*c) for c in cells]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_sweep_cell, *zip(*cells)))


def write_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: ("" if row[k] is None else repr(row[k])) for k in SWEEP_COLUMNS})


def write_dat(rows: list[dict], path) -> None:
    """Whitespace-separated companion file; missing values are written as NaN."""
    with open(path, "w") as fh:
        fh.write("# " + " ".join(SWEEP_COLUMNS) + "\n")
        for row in rows:
            fh.write(" ".join("NaN" if row[k] is None else repr(row[k]) for k in SWEEP_COLUMNS) + "\n")
