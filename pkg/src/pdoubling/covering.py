"""Upper bounds on C_n(U, V): grid tiling covers, the Rogers formula, subset and chain bounds."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
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
    UnsupportedExactVolume,
    UnsupportedKind,
    exact,
    inscribed_box,
    minkowski_sum,
    scale,
    volume_estimate,
    volume_ratio,
)
from .lattices import ResourceCapExceeded

#: explicit translate lists are never materialised beyond this size
MAX_EXPORT = 10**6
#: cells scanned by the non-separable classifier
MAX_SCAN = 10**8
_CHUNK = 1 << 20


class BadParameters(ValueError):
    pass


class NotComparable(ValueError):
    pass


@dataclass(frozen=True)
class CoveringCertificate:
    """Grid translates X with K contained in H + X.

    X is kept either as per-axis index ranges (``axes``; X is their product)
    or as an explicit integer index array (``indices``). Centres are
    ``offset + 2 * cell_half_widths * k``.
    """

    U: ConvexBody
    V: ConvexBody
    H: ConvexBody
    K: ConvexBody
    cell: Box
    offset: tuple
    axes: tuple | None
    indices: np.ndarray | None
    size: int
    bound_value: float
    exact: Fraction | None
    certified: bool = True

    @property
    def dim(self) -> int:
        return self.U.dim

    def _steps(self) -> np.ndarray:
        return np.array([2 * float(h) for h in self.cell.half_widths])

    def index_array(self, cap: int = MAX_EXPORT) -> np.ndarray:
        if self.size > cap:
            raise ResourceCapExceeded(f"|X| = {self.size} exceeds the export cap {cap}")
        if self.indices is not None:
            return self.indices
        grids = np.meshgrid(*[np.arange(lo, hi + 1) for lo, hi in self.axes], indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def translates(self, cap: int = MAX_EXPORT) -> np.ndarray:
        k = self.index_array(cap)
        return np.array([float(o) for o in self.offset]) + k * self._steps()

    def _has_index(self, k) -> bool:
        if self.axes is not None:
            return all(lo <= v <= hi for v, (lo, hi) in zip(k, self.axes))
        return tuple(k) in self._index_set()

    def _index_set(self):
        cache = self.__dict__.get("_iset")
        if cache is None:
            cache = set(map(tuple, self.indices.tolist()))
            object.__setattr__(self, "_iset", cache)
        return cache

    def covers(self, x) -> bool:
        """True if x lies in cell + a for some a in X."""
        t = (np.asarray(x, dtype=float) - np.array([float(o) for o in self.offset])) / self._steps()
        cands = []
        for v in t:
            r = math.floor(v + 0.5)
            c = {r}
            if abs((v + 0.5) - r) < 1e-9:
                c.add(r - 1)
            if abs((v + 0.5) - (r + 1)) < 1e-9:
                c.add(r + 1)
            cands.append(sorted(c))
        return any(self._has_index(k) for k in itertools.product(*cands))

    def theta_diagnostic(self) -> float | None:
        """Finite-region covering density proxy |X| |cell| / |K| (diagnostic only)."""
        try:
            return self.size * self.cell.volume() / self.K.volume()
        except UnsupportedExactVolume:
            return None

    def to_json(self, cap: int = MAX_EXPORT) -> dict:
        return {
            "kind": "certificate",
            "dim": self.dim,
            "U": self.U.literal(),
            "V": self.V.literal(),
            "cell_half_widths": [float(h) for h in self.cell.half_widths],
            "offset": [float(o) for o in self.offset],
            "X": self.translates(cap).tolist(),
            "size": self.size,
            "bound": self.bound_value,
            "method": "tiling-cover",
            "certified": self.certified,
        }

    def entry(self) -> BoundEntry:
        return BoundEntry(
            value=self.bound_value,
            direction="upper",
            method="tiling-cover",
            certified=self.certified,
            exact=self.exact,
            audit={
                "size": self.size,
                "cell_half_widths": [float(h) for h in self.cell.half_widths],
                "volumetric_lower_estimate": _volumetric(self),
                "theta_diagnostic": self.theta_diagnostic(),
            },
        )


def _volumetric(cert) -> float | None:
    try:
        return cert.K.volume() / cert.cell.volume()
    except UnsupportedExactVolume:
        return None


def _bound_from_size(size: int, U: ConvexBody, V: ConvexBody) -> tuple[float, Fraction | None]:
    ratio = volume_ratio(U, V)
    if ratio is not None:
        return from_exact(size * ratio, 0.0)
    return size * U.volume() / V.volume(), None


def _dilated(K: ConvexBody, h: tuple) -> tuple[ConvexBody | None, str]:
    """K + Box(h) when it has an exact strict-membership rule."""
    try:
        D = minkowski_sum(K, Box(h))
    except UnsupportedKind:
        return None, "conservative"
    if isinstance(D, Box):
        return D, "separable"
    if isinstance(D, Sum) and (isinstance(D.left, Ball) or isinstance(D.right, Ball)):
        return D, "exact"
    if isinstance(D, Sum) and isinstance(K, CrossPolytope):
        return None, "l1"
    return None, "conservative"


def tiling_cover(U: ConvexBody, V: ConvexBody, *, offset=None) -> CoveringCertificate:
    """Constructive cover of K = V + U/2 by grid translates of a box inside U/2.

    A grid cell is kept iff its open interior meets the interior of K, which
    is equivalent to the cell centre lying in the open set int(K + cell).
    Since the cells tile space and each cell sits inside H + a, the kept
    centres X satisfy K subset H + X. ``offset`` shifts the grid (a test
    hook; the default anchors a cell at the origin).
    """
    if U.dim != V.dim:
        raise GeometryError("U and V differ in dimension")
    n = U.dim
    H = scale(U, Fraction(1, 2))
    cell = inscribed_box(H)
    K = minkowski_sum(V, H)
    h = cell.half_widths
    off = tuple(exact(o) for o in (offset if offset is not None else (0,) * n))
    D, mode = _dilated(K, h)

    if mode == "separable":
        axes = []
        for i in range(n):
            step = 2 * h[i]
            lo = math.floor((-D.half_widths[i] - off[i]) / step) + 1
            hi = math.ceil((D.half_widths[i] - off[i]) / step) - 1
            axes.append((lo, hi))
        size = math.prod(hi - lo + 1 for lo, hi in axes)
        value, q = _bound_from_size(size, U, V)
        return CoveringCertificate(U, V, H, K, cell, off, tuple(axes), None, size, value, q)

    steps = [2 * hi for hi in h]
    bb = (D if D is not None else minkowski_sum(Box(K.bounding_half_widths()), Box(h))).bounding_half_widths()
    ranges = [
        (math.floor((-bb[i] - off[i]) / steps[i]), math.ceil((bb[i] - off[i]) / steps[i])) for i in range(n)
    ]
    shape = tuple(hi - lo + 1 for lo, hi in ranges)
    total = math.prod(shape)
    if total > MAX_SCAN:
        raise ResourceCapExceeded(f"cover classification would scan {total} cells")
    lo_arr = np.array([lo for lo, _ in ranges])
    stepf = np.array([float(s) for s in steps])
    offf = np.array([float(o) for o in off])
    kept = []
    for start in range(0, total, _CHUNK):
        flat = np.arange(start, min(total, start + _CHUNK))
        k = np.stack(np.unravel_index(flat, shape), axis=1) + lo_arr
        centers = offf + k * stepf

        def exact_center(i, k=k):
            return [off[j] + steps[j] * int(k[i, j]) for j in range(n)]

        if mode == "exact":
            keep = D.contains_many(centers, strict=True, exact_point=exact_center)
        elif mode == "l1":
            hf = np.array([float(v) for v in h])
            keep = np.sum(np.maximum(np.abs(centers) - hf, 0.0), axis=1) < float(K.radius) * (1 + 1e-12) + 1e-12
        else:
            if not (isinstance(K, Sum) and (isinstance(K.left, Ball) or isinstance(K.right, Ball))):
                raise UnsupportedKind(f"no cell classifier for K = {K.literal()}")
            # Sum(Ball, B) margin is minus the Euclidean distance outside K
            halfdiag = float(np.linalg.norm([float(v) for v in h]))
            keep = -K._margin(centers) < halfdiag * (1 + 1e-9) + 1e-12
        kept.append(k[keep])
    indices = np.concatenate(kept, axis=0) if kept else np.zeros((0, n), dtype=np.int64)
    size = len(indices)
    value, q = _bound_from_size(size, U, V)
    return CoveringCertificate(U, V, H, K, cell, off, None, indices, size, value, q)


def audit_coverage(cert: CoveringCertificate, samples: int = 10**4, seed: int = 0) -> tuple[int, int]:
    """Sample points of K uniformly; return (points checked, points not covered)."""
    rng = np.random.default_rng(seed)
    w = np.array([float(v) for v in cert.K.bounding_half_widths()])
    checked = failed = 0
    while checked < samples:
        pts = rng.uniform(-w, w, size=(max(samples, 1000), cert.dim))
        pts = pts[cert.K._margin(pts) >= 0][: samples - checked]
        for p in pts:
            checked += 1
            if not cert.covers(p):
                failed += 1
    return checked, failed


def rogers_theta(n: int) -> float:
    """Upper estimate of the covering density: 1 for n = 1, Rogers' n ln n + n ln ln n + 5n otherwise."""
    if n < 1:
        raise BadParameters("dimension must be positive")
    if n == 1:
        return 1.0
    return n * math.log(n) + n * math.log(math.log(n)) + 5 * n


def rogers_bound(U: ConvexBody, V: ConvexBody, *, samples: int = 10**6, seed: int = 0) -> BoundEntry:
    n = U.dim
    certified = True
    audit = {"theta": rogers_theta(n)}
    try:
        S = minkowski_sum(V, U)
        ratio = volume_ratio(S, V)
        sum_ratio = float(ratio) if ratio is not None else S.volume() / V.volume()
        audit["sum_volume"] = "exact"
    except (UnsupportedExactVolume, UnsupportedKind):
        S = Sum(V, U)
        est, upper = volume_estimate(S, samples, seed)
        sum_ratio = upper / V.volume()
        certified = False
        audit.update(sum_volume="monte-carlo", estimate=est, upper_conf=upper, samples=samples, seed=seed)
    value = 2**n * sum_ratio * rogers_theta(n)
    audit["sum_ratio"] = sum_ratio
    return BoundEntry(value=value, direction="upper", method="rogers-formula", certified=certified, audit=audit)


def _subset(V: ConvexBody, U: ConvexBody) -> bool:
    if V.dim != U.dim:
        return False
    if isinstance(V, Ball) and isinstance(U, Ball):
        return V.radius <= U.radius
    if isinstance(V, CrossPolytope) and isinstance(U, CrossPolytope):
        return V.radius <= U.radius
    if isinstance(V, Box) and isinstance(U, Box):
        return all(v <= u for v, u in zip(V.half_widths, U.half_widths))
    if V == U:
        return True
    return False


def subset_bound(U: ConvexBody, V: ConvexBody) -> BoundEntry:
    """|U| / |V| when V is certifiably contained in U."""
    if not _subset(V, U):
        raise NotComparable(f"cannot certify {V.literal()} inside {U.literal()}")
    ratio = volume_ratio(U, V)
    value, q = from_exact(ratio, U.volume() / V.volume() if ratio is None else 0.0)
    return BoundEntry(value=value, direction="upper", method="subset", certified=True, exact=q)


def chain_bound(base: BoundEntry, lam, r) -> BoundEntry:
    """Iterated doubling estimate C(U, rU) <= C(U, lam U) ** log_lam(r)."""
    if base.direction != "upper":
        raise BadParameters("chain bound needs an upper-bound entry")
    lam_q, r_q = exact(lam), exact(r)
    if not (lam_q > 1 and r_q >= lam_q):
        raise BadParameters("need r >= lam > 1")
    expo = math.log(float(r_q)) / math.log(float(lam_q))
    q = None
    k = round(expo)
    if base.exact is not None and lam_q**k == r_q:
        q = base.exact**k
    value = float(q) if q is not None else base.value**expo
    return BoundEntry(
        value=value,
        direction="upper",
        method="chain",
        certified=base.certified,
        exact=q,
        audit={"base": base.value, "lam": float(lam_q), "r": float(r_q), "exponent": expo},
    )


_PREFERENCE = {"tiling-cover": 0, "subset": 1, "rogers-formula": 2, "chain": 3}


def _key(e: BoundEntry):
    v = e.exact if e.exact is not None else Fraction(e.value)
    return (v, _PREFERENCE[e.method])


def upper_candidates(U: ConvexBody, V: ConvexBody) -> list[BoundEntry]:
    out = []
    try:
        out.append(subset_bound(U, V))
    except NotComparable:
        pass
    try:
        out.append(tiling_cover(U, V).entry())
    except (UnsupportedKind, ResourceCapExceeded, GeometryError):
        pass
    out.append(rogers_bound(U, V))
    return out


def best_upper(U: ConvexBody, V: ConvexBody, candidates: list[BoundEntry] | None = None) -> BoundEntry:
    """Smallest certified upper bound; ties go to the tiling cover."""
    cands = candidates if candidates is not None else upper_candidates(U, V)
    certified = [e for e in cands if e.certified]
    pool = certified or cands
    return min(pool, key=_key)
