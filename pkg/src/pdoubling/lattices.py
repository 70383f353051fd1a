"""Full-rank lattices, point enumeration and lattice-packing lower bounds."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .bounds import BoundEntry, from_exact
from .geometry import (
    Ball,
    Box,
    ConvexBody,
    CrossPolytope,
    GeometryError,
    Sum,
    UnsupportedKind,
    exact,
    scale,
    volume_ratio,
)

MAX_DIM = 8
#: enumeration refuses regions expected to hold more points than this
MAX_POINTS = 5_000_000


class LatticeError(ValueError):
    pass


class DimensionTooLarge(LatticeError):
    pass


class UnboundedRegion(LatticeError):
    pass


class NotAPacking(LatticeError):
    pass


class ResourceCapExceeded(RuntimeError):
    pass


def _exact_det(rows: list[list[Fraction]]) -> Fraction:
    a = [list(r) for r in rows]
    n = len(a)
    det = Fraction(1)
    for i in range(n):
        p = next((k for k in range(i, n) if a[k][i] != 0), None)
        if p is None:
            return Fraction(0)
        if p != i:
            a[i], a[p] = a[p], a[i]
            det = -det
        det *= a[i][i]
        for k in range(i + 1, n):
            f = a[k][i] / a[i][i]
            if f:
                for j in range(i, n):
                    a[k][j] -= f * a[i][j]
    return det


@dataclass(frozen=True)
class Lattice:
    """Lattice M Z^n; the columns of ``basis`` are the generators."""

    basis: tuple
    name: str = "custom"
    _float: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        rows = tuple(tuple(exact(v) for v in row) for row in np.asarray(self.basis, dtype=object).tolist())
        n = len(rows)
        if n == 0 or any(len(r) != n for r in rows):
            raise LatticeError("basis must be a square matrix")
        object.__setattr__(self, "basis", rows)
        object.__setattr__(self, "_float", np.array([[float(v) for v in r] for r in rows]))
        if self.exact_determinant == 0:
            raise LatticeError("basis is singular")

    @classmethod
    def from_columns(cls, columns, name="custom"):
        cols = [list(c) for c in columns]
        return cls(tuple(tuple(cols[j][i] for j in range(len(cols))) for i in range(len(cols))), name)

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def matrix(self) -> np.ndarray:
        return self._float.copy()

    @property
    def exact_determinant(self) -> Fraction:
        return abs(_exact_det([list(r) for r in self.basis]))

    @property
    def determinant(self) -> float:
        return float(self.exact_determinant)

    def point(self, coeffs) -> tuple[Fraction, ...]:
        """Exact coordinates of M c."""
        c = [int(v) for v in coeffs]
        return tuple(sum(row[j] * c[j] for j in range(self.dim)) for row in self.basis)

    def scaled(self, lam) -> "Lattice":
        lam = exact(lam)
        return Lattice(tuple(tuple(v * lam for v in r) for r in self.basis), self.name if lam == 1 else f"{lam}*{self.name}")

    def is_diagonal(self) -> bool:
        return all(self.basis[i][j] == 0 for i in range(self.dim) for j in range(self.dim) if i != j)

    def shortest_vector_length(self) -> float:
        """Euclidean length of a shortest nonzero vector, by exhaustive enumeration."""
        return math.sqrt(float(self.shortest_norm2()))

    def shortest_norm2(self) -> Fraction:
        rho = min(np.linalg.norm(self._float, axis=0))
        coeffs = _ball_coefficients(self._float, rho * (1 + 1e-9) + 1e-12)
        best = None
        for c in coeffs:
            if not np.any(c):
                continue
            p = self.point(c)
            q = sum(v * v for v in p)
            if best is None or q < best:
                best = q
        return best

    def literal(self) -> str:
        rows = ";".join(",".join(repr(float(v)) if v.denominator != 1 else str(v.numerator) for v in r) for r in self.basis)
        return f"lattice:matrix[{rows}]"


def _ball_coefficients(M: np.ndarray, rho: float) -> np.ndarray:
    """All integer c with |M c| <= rho (Fincke-Pohst, vectorised breadth-first)."""
    n = M.shape[0]
    _, R = np.linalg.qr(M)
    rho2 = rho * rho
    coeffs = np.zeros((1, 0), dtype=np.int64)
    partial = np.zeros(1)
    for i in range(n - 1, -1, -1):
        r = R[i, i]
        t = coeffs @ R[i, i + 1 :] if coeffs.shape[1] else np.zeros(len(coeffs))
        rem = np.maximum(rho2 - partial, 0.0)
        half = np.sqrt(rem) / abs(r)
        center = -t / r
        lo = np.ceil(center - half - 1e-9).astype(np.int64)
        hi = np.floor(center + half + 1e-9).astype(np.int64)
        cnt = np.maximum(hi - lo + 1, 0)
        total = int(cnt.sum())
        if total > MAX_POINTS * 4:
            raise ResourceCapExceeded(f"enumeration would visit {total} nodes")
        rep = np.repeat(np.arange(len(coeffs)), cnt)
        offs = np.arange(total) - np.repeat(np.cumsum(cnt) - cnt, cnt)
        ci = np.repeat(lo, cnt) + offs
        new_partial = partial[rep] + (r * ci + t[rep]) ** 2
        keep = new_partial <= rho2 * (1 + 1e-9) + 1e-12
        coeffs = np.concatenate([ci[keep, None], coeffs[rep][keep]], axis=1)
        partial = new_partial[keep]
    return coeffs


def enumerate_points(
    lattice: Lattice,
    region: ConvexBody,
    strict_interior: bool = False,
    return_coefficients: bool = False,
):
    """Every point of the lattice inside ``region`` (or its open interior).

    Candidates come from a Fincke-Pohst scan of the ball circumscribing the
    region's bounding box; membership is then decided exactly.
    """
    n = lattice.dim
    if n > MAX_DIM:
        raise DimensionTooLarge(f"dimension {n} > {MAX_DIM}")
    if region.dim != n:
        raise GeometryError("region and lattice dimensions differ")
    hw = [float(w) for w in region.bounding_half_widths()]
    if not all(math.isfinite(w) for w in hw):
        raise UnboundedRegion(region.literal())
    rho = math.sqrt(sum(w * w for w in hw))
    expected = math.pi ** (n / 2) / math.gamma(n / 2 + 1) * rho**n / lattice.determinant
    if expected > MAX_POINTS:
        raise ResourceCapExceeded(f"about {expected:.3g} candidate points in {region.literal()}")
    coeffs = _ball_coefficients(lattice.matrix, rho * (1 + 1e-9) + 1e-12)
    pts = coeffs @ lattice.matrix.T
    inside = region.contains_many(pts, strict=strict_interior, exact_point=lambda i: lattice.point(coeffs[i]))
    if return_coefficients:
        return pts[inside], coeffs[inside]
    return pts[inside]


def _diag_axis_count(d: Fraction, w: Fraction, strict: bool) -> int:
    d = abs(d)
    q = w / d
    k = math.ceil(q) - 1 if strict else math.floor(q)
    return 2 * k + 1


def count_points(lattice: Lattice, region: ConvexBody, strict_interior: bool = False) -> int:
    """Number of lattice points in the region; closed form for diagonal lattices in boxes."""
    if lattice.dim > MAX_DIM:
        raise DimensionTooLarge(f"dimension {lattice.dim} > {MAX_DIM}")
    if isinstance(region, Box) and lattice.is_diagonal():
        total = 1
        for i, w in enumerate(region.half_widths):
            total *= _diag_axis_count(lattice.basis[i][i], w, strict_interior)
        return total
    return len(enumerate_points(lattice, region, strict_interior))


def check_packing(lattice: Lattice, U: ConvexBody) -> bool:
    """True iff no nonzero lattice vector lies in the open interior of U."""
    if isinstance(U, Box) and lattice.is_diagonal():
        return count_points(lattice, U, strict_interior=True) == 1
    pts = enumerate_points(lattice, U, strict_interior=True)
    return not np.any(np.any(pts != 0, axis=1))


def packing_density(lattice: Lattice, H: ConvexBody) -> float:
    """|H| / det(Lambda) for a lattice packing of H."""
    if not check_packing(lattice, scale(H, 2)):
        raise NotAPacking(f"{lattice.name} is not a packing lattice for {H.literal()}")
    ev = H.exact_volume()
    if ev is not None:
        return float(ev / lattice.exact_determinant)
    return H.volume() / lattice.determinant


def lattice_lower_bound(lattice: Lattice, U: ConvexBody, V: ConvexBody, *, count_offset: int = 0) -> BoundEntry:
    """Certified lower bound |Lambda cap Int V| |U| / |V|.

    ``count_offset`` is a tamper hook used by the verification harness to
    exercise the failure path; leave it at zero.
    """
    if not check_packing(lattice, U):
        raise NotAPacking(f"{lattice.name} is not a packing lattice for {U.literal()}")
    count = count_points(lattice, V, strict_interior=True) + count_offset
    ratio = volume_ratio(U, V)
    if ratio is not None:
        value, q = from_exact(count * ratio, 0.0)
    else:
        value, q = count * U.volume() / V.volume(), None
    return BoundEntry(
        value=value,
        direction="lower",
        method="lattice",
        certified=True,
        exact=q,
        audit={"lattice": lattice.name, "basis": lattice.literal(), "interior_count": count},
    )


# -- catalog ------------------------------------------------------------------

@dataclass(frozen=True)
class LatticeCatalogEntry:
    name: str
    lattice: Lattice
    min_norm2: Fraction
    description: str


def _a2() -> Lattice:
    # sqrt(3)/2 rounded up so the dyadic lattice is a genuine packing of unit distance
    s = math.nextafter(math.sqrt(3) / 2, 1.0)
    while Fraction(1, 4) + Fraction(s) ** 2 < 1:
        s = math.nextafter(s, 1.0)
    return Lattice.from_columns([(1, 0), (Fraction(1, 2), s)], "A2")


def _dn(n: int) -> Lattice:
    cols = []
    v = [0] * n
    v[0], v[1] = 1, 1
    cols.append(v)
    for i in range(n - 1):
        v = [0] * n
        v[i], v[i + 1] = 1, -1
        cols.append(v)
    return Lattice.from_columns(cols, f"D{n}")


def _e8() -> Lattice:
    cols = [[2, 0, 0, 0, 0, 0, 0, 0]]
    for i in range(6):
        v = [0] * 8
        v[i], v[i + 1] = -1, 1
        cols.append(v)
    cols.append([Fraction(1, 2)] * 8)
    return Lattice.from_columns(cols, "E8")


def catalog_entry(name: str, n: int | None = None) -> LatticeCatalogEntry:
    key = name.upper()
    if key == "ZN":
        if n is None:
            raise LatticeError("Zn needs a dimension")
        lat = Lattice(tuple(tuple(int(i == j) for j in range(n)) for i in range(n)), f"Z{n}")
        return LatticeCatalogEntry("Zn", lat, Fraction(1), "integer lattice, minimal vectors +-e_i")
    if key == "A2":
        return LatticeCatalogEntry("A2", _a2(), Fraction(1), "hexagonal lattice, minimal distance 1")
    if key.startswith("D") and key[1:].isdigit():
        d = int(key[1:])
        if not 3 <= d <= 8:
            raise LatticeError("Dn is catalogued for 3 <= n <= 8")
        return LatticeCatalogEntry(f"D{d}", _dn(d), Fraction(2), "checkerboard lattice, minimal vectors +-e_i +- e_j")
    if key == "E8":
        return LatticeCatalogEntry("E8", _e8(), Fraction(2), "Gosset lattice, 240 minimal vectors of norm 2")
    if key.startswith("Z") and key[1:].isdigit():
        return catalog_entry("Zn", int(key[1:]))
    raise LatticeError(f"unknown catalog lattice {name!r}")


def catalog_for_dim(n: int) -> list[LatticeCatalogEntry]:
    out = [catalog_entry("Zn", n)]
    if n == 2:
        out.append(catalog_entry("A2"))
    if 3 <= n <= 8:
        out.append(catalog_entry(f"D{n}"))
    if n == 8:
        out.append(catalog_entry("E8"))
    return out


def _gauge(U: ConvexBody, p) -> Fraction:
    """Squared gauge for balls, plain gauge otherwise (exact)."""
    if isinstance(U, Ball):
        return sum(v * v for v in p) / U.radius**2
    if isinstance(U, Box):
        return max(abs(v) / w for v, w in zip(p, U.half_widths))
    if isinstance(U, CrossPolytope):
        return sum(abs(v) for v in p) / U.radius
    raise UnsupportedKind(f"no gauge for {U.literal()}")


def normalize_to_packing(entry: LatticeCatalogEntry | Lattice, U: ConvexBody) -> Lattice:
    """Catalog lattice scaled by the smallest factor that makes it a packing for U.

    The critical factor is 1 / min gauge_U(v) over nonzero v, found exactly
    by enumeration; for balls it is irrational in general and is rounded up.
    """
    lat = entry.lattice if isinstance(entry, LatticeCatalogEntry) else entry
    if isinstance(U, Sum):
        raise UnsupportedKind("packing normalisation needs a ball, box or cross-polytope")
    if U.dim != lat.dim:
        raise GeometryError("dimension mismatch")
    cols = [lat.point([int(i == j) for i in range(lat.dim)]) for j in range(lat.dim)]
    t = min(_gauge(U, c) for c in cols)
    tt = math.sqrt(float(t)) if isinstance(U, Ball) else float(t)
    _, coeffs = enumerate_points(lat, scale(U, exact(tt * (1 + 1e-9))), return_coefficients=True)
    g = min(_gauge(U, lat.point(c)) for c in coeffs if np.any(c))
    if isinstance(U, Ball):
        num, den = g.numerator, g.denominator
        rn, rd = math.isqrt(num), math.isqrt(den)
        if rn * rn == num and rd * rd == den:
            s = Fraction(rd, rn)
        else:
            s = Fraction(1 / math.sqrt(float(g)))
            while s * s * g < 1:
                s = Fraction(math.nextafter(float(s), math.inf))
    else:
        s = 1 / g
    out = lat.scaled(s) if s != 1 else lat
    if not check_packing(out, U):
        raise NotAPacking("normalised lattice failed the packing guard")
    return out
