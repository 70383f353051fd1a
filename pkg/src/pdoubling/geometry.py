"""Origin-symmetric convex bodies with exact membership and volume.

Every linear parameter is stored as a :class:`fractions.Fraction`. Floats are
converted exactly (a double is a dyadic rational), so membership decisions on
rational points are exact; numpy float paths are only used as a fast filter
and ambiguous points are re-decided in rational arithmetic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy import stats

#: points whose float margin is within this (relative) band are re-decided exactly
EPS_GEO = 1e-12
_AMBIGUOUS = 1e-9


class GeometryError(ValueError):
    pass


class UnsupportedExactVolume(GeometryError):
    pass


class UnsupportedMembership(GeometryError):
    pass


class UnsupportedKind(GeometryError):
    pass


class DimensionMismatch(GeometryError):
    pass


def exact(x) -> Fraction:
    """Exact rational value of an int, Fraction, float or decimal string."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (float, np.floating)):
        if not math.isfinite(x):
            raise GeometryError(f"non-finite parameter {x!r}")
        return Fraction(float(x))
    if isinstance(x, (np.integer,)):
        return Fraction(int(x))
    return Fraction(x)


def ball_volume_constant(n: int) -> float:
    """Volume of the Euclidean unit ball in R^n."""
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def _l1_ball_dist2(y: Sequence[Fraction], radius: Fraction) -> Fraction:
    """Squared Euclidean distance from ``y`` to the l1 ball of given radius.

    Sort-based projection; exact for rational input.
    """
    a = sorted((abs(v) for v in y), reverse=True)
    if sum(a) <= radius:
        return Fraction(0)
    csum = Fraction(0)
    theta = Fraction(0)
    for i, v in enumerate(a, start=1):
        csum += v
        t = (csum - radius) / i
        if v - t > 0:
            theta = t
        else:
            break
    return sum(min(v, theta) ** 2 for v in a)


def _l1_ball_dist_float(points: np.ndarray, radius: float) -> np.ndarray:
    a = -np.sort(-np.abs(points), axis=1)
    css = np.cumsum(a, axis=1)
    idx = np.arange(1, a.shape[1] + 1)
    t = (css - radius) / idx
    rho = np.sum(a - t > 0, axis=1)
    rho = np.maximum(rho, 1)
    theta = t[np.arange(len(a)), rho - 1]
    theta = np.maximum(theta, 0.0)
    d2 = np.sum(np.minimum(a, theta[:, None]) ** 2, axis=1)
    inside = css[:, -1] <= radius
    d2[inside] = 0.0
    return np.sqrt(d2)


@dataclass(frozen=True)
class ConvexBody:
    """Base class; concrete bodies are Ball, Box, CrossPolytope and Sum."""

    @property
    def dim(self) -> int:
        raise NotImplementedError

    # -- metric data -----------------------------------------------------
    def bounding_half_widths(self) -> tuple[Fraction, ...]:
        raise NotImplementedError

    def circumradius(self) -> float:
        raise NotImplementedError

    def exact_volume(self) -> Fraction | None:
        """Volume as a rational when it is one (boxes, cross-polytopes)."""
        return None

    def volume(self) -> float:
        raise NotImplementedError

    # -- membership ------------------------------------------------------
    def _margin(self, pts: np.ndarray) -> np.ndarray:
        """Float signed margin: > 0 inside, 0 on the boundary, < 0 outside."""
        raise NotImplementedError

    def _exact_sign(self, x: Sequence[Fraction]) -> int:
        raise NotImplementedError

    def contains(self, x, strict: bool = False) -> bool:
        if not isinstance(x, (list, tuple)):
            x = np.ravel(x).tolist()
        x = [exact(v) for v in x]
        if len(x) != self.dim:
            raise DimensionMismatch(f"point of dimension {len(x)} for body of dimension {self.dim}")
        s = self._exact_sign(x)
        return s > 0 if strict else s >= 0

    def contains_many(
        self,
        pts: np.ndarray,
        strict: bool = False,
        exact_point: Callable[[int], Sequence[Fraction]] | None = None,
    ) -> np.ndarray:
        """Vectorised membership with exact re-decision near the boundary.

        ``exact_point(i)`` returns exact coordinates of row ``i`` when the
        float rows are themselves rounded (e.g. lattice points M c).
        """
        pts = np.asarray(pts, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, self.dim)
        if pts.shape[1] != self.dim:
            raise DimensionMismatch(f"points of dimension {pts.shape[1]} for body of dimension {self.dim}")
        if len(pts) == 0:
            return np.zeros(0, dtype=bool)
        m = self._margin(pts)
        scale = 1.0 + float(max(self.bounding_half_widths())) + np.max(np.abs(pts), axis=1)
        out = m > 0 if strict else m >= 0
        amb = np.nonzero(np.abs(m) <= _AMBIGUOUS * scale)[0]
        for i in amb:
            x = exact_point(int(i)) if exact_point is not None else [Fraction(float(v)) for v in pts[i]]
            s = self._exact_sign(x)
            out[i] = s > 0 if strict else s >= 0
        return out

    def literal(self) -> str:
        raise NotImplementedError


def _fmt(x: Fraction) -> str:
    if x.denominator == 1:
        return str(x.numerator)
    f = float(x)
    if Fraction(f) == x:
        return repr(f)
    return f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class Ball(ConvexBody):
    n: int
    radius: Fraction

    def __post_init__(self):
        object.__setattr__(self, "radius", exact(self.radius))
        if int(self.n) < 1:
            raise GeometryError("dimension must be positive")
        object.__setattr__(self, "n", int(self.n))
        if self.radius <= 0:
            raise GeometryError("radius must be positive")

    @property
    def dim(self) -> int:
        return self.n

    def bounding_half_widths(self):
        return (self.radius,) * self.n

    def circumradius(self):
        return float(self.radius)

    def volume(self):
        return ball_volume_constant(self.n) * float(self.radius) ** self.n

    def _margin(self, pts):
        return float(self.radius) - np.linalg.norm(pts, axis=1)

    def _exact_sign(self, x):
        d = self.radius**2 - sum(v * v for v in x)
        return (d > 0) - (d < 0)

    def literal(self):
        return f"ball:{_fmt(self.radius)}"


@dataclass(frozen=True)
class Box(ConvexBody):
    half_widths: tuple

    def __post_init__(self):
        hw = tuple(exact(w) for w in self.half_widths)
        if not hw:
            raise GeometryError("box needs at least one half-width")
        if any(w <= 0 for w in hw):
            raise GeometryError("half-widths must be positive")
        object.__setattr__(self, "half_widths", hw)

    @property
    def dim(self) -> int:
        return len(self.half_widths)

    def bounding_half_widths(self):
        return self.half_widths

    def circumradius(self):
        return math.sqrt(sum(float(w) ** 2 for w in self.half_widths))

    def exact_volume(self):
        v = Fraction(1)
        for w in self.half_widths:
            v *= 2 * w
        return v

    def volume(self):
        return float(self.exact_volume())

    def _margin(self, pts):
        w = np.array([float(v) for v in self.half_widths])
        return np.min(w - np.abs(pts), axis=1)

    def _exact_sign(self, x):
        d = min(w - abs(v) for w, v in zip(self.half_widths, x))
        return (d > 0) - (d < 0)

    def literal(self):
        return "box:" + ",".join(_fmt(w) for w in self.half_widths)


@dataclass(frozen=True)
class CrossPolytope(ConvexBody):
    n: int
    radius: Fraction

    def __post_init__(self):
        object.__setattr__(self, "radius", exact(self.radius))
        object.__setattr__(self, "n", int(self.n))
        if self.n < 1 or self.radius <= 0:
            raise GeometryError("cross-polytope needs positive dimension and radius")

    @property
    def dim(self) -> int:
        return self.n

    def bounding_half_widths(self):
        return (self.radius,) * self.n

    def circumradius(self):
        return float(self.radius)

    def exact_volume(self):
        return Fraction(2**self.n) * self.radius**self.n / math.factorial(self.n)

    def volume(self):
        return float(self.exact_volume())

    def _margin(self, pts):
        return float(self.radius) - np.sum(np.abs(pts), axis=1)

    def _exact_sign(self, x):
        d = self.radius - sum(abs(v) for v in x)
        return (d > 0) - (d < 0)

    def literal(self):
        return f"cross:{_fmt(self.radius)}"


@dataclass(frozen=True)
class Sum(ConvexBody):
    """Minkowski sum of two non-sum bodies of equal dimension."""

    left: ConvexBody
    right: ConvexBody

    def __post_init__(self):
        if isinstance(self.left, Sum) or isinstance(self.right, Sum):
            raise UnsupportedKind("nested Minkowski sums are not representable")
        if self.left.dim != self.right.dim:
            raise DimensionMismatch("summands differ in dimension")

    @property
    def dim(self) -> int:
        return self.left.dim

    def _ball_and_other(self):
        if isinstance(self.left, Ball):
            return self.left, self.right
        if isinstance(self.right, Ball):
            return self.right, self.left
        return None, None

    def bounding_half_widths(self):
        return tuple(a + b for a, b in zip(self.left.bounding_half_widths(), self.right.bounding_half_widths()))

    def circumradius(self):
        return self.left.circumradius() + self.right.circumradius()

    def exact_volume(self):
        merged = _collapse(self.left, self.right)
        return merged.exact_volume() if merged is not None else None

    def volume(self):
        merged = _collapse(self.left, self.right)
        if merged is not None:
            return merged.volume()
        ball, other = self._ball_and_other()
        if ball is not None and isinstance(other, Box):
            return _steiner_box_ball(other, ball)
        raise UnsupportedExactVolume(
            f"no closed-form volume for {self.literal()}; use volume_estimate"
        )

    def _margin(self, pts):
        merged = _collapse(self.left, self.right)
        if merged is not None:
            return merged._margin(pts)
        ball, other = self._ball_and_other()
        if isinstance(other, Box):
            w = np.array([float(v) for v in other.half_widths])
            d = np.linalg.norm(np.maximum(np.abs(pts) - w, 0.0), axis=1)
        elif isinstance(other, CrossPolytope):
            d = _l1_ball_dist_float(pts, float(other.radius))
        else:
            raise UnsupportedMembership(f"no exact membership rule for {self.literal()}")
        return float(ball.radius) - d

    def _exact_sign(self, x):
        merged = _collapse(self.left, self.right)
        if merged is not None:
            return merged._exact_sign(x)
        ball, other = self._ball_and_other()
        if isinstance(other, Box):
            d2 = sum(max(abs(v) - w, Fraction(0)) ** 2 for v, w in zip(x, other.half_widths))
        elif isinstance(other, CrossPolytope):
            d2 = _l1_ball_dist2(x, other.radius)
        else:
            raise UnsupportedMembership(f"no exact membership rule for {self.literal()}")
        d = ball.radius**2 - d2
        return (d > 0) - (d < 0)

    def literal(self):
        return f"sum({self.left.literal()},{self.right.literal()})"


def _collapse(a: ConvexBody, b: ConvexBody) -> ConvexBody | None:
    """Closed-form Minkowski sum for homothetic pairs (and boxes), else None."""
    if isinstance(a, Ball) and isinstance(b, Ball):
        return Ball(a.n, a.radius + b.radius)
    if isinstance(a, CrossPolytope) and isinstance(b, CrossPolytope):
        return CrossPolytope(a.n, a.radius + b.radius)
    if isinstance(a, Box) and isinstance(b, Box):
        return Box(tuple(x + y for x, y in zip(a.half_widths, b.half_widths)))
    return None


def _steiner_box_ball(box: Box, ball: Ball) -> float:
    # vol(Box + B_R) = sum_k omega_k R^k e_{n-k}(side lengths)
    sides = [2 * float(w) for w in box.half_widths]
    n = len(sides)
    e = [1.0] + [0.0] * n
    for s in sides:
        for k in range(n, 0, -1):
            e[k] += e[k - 1] * s
    r = float(ball.radius)
    return sum(ball_volume_constant(k) * r**k * e[n - k] for k in range(n + 1))


# -- operations ---------------------------------------------------------------

def volume(A: ConvexBody) -> float:
    return A.volume()


def volume_ratio(A: ConvexBody, B: ConvexBody) -> Fraction | None:
    """|A| / |B| as an exact rational when both volumes share their irrational part."""
    va, vb = A.exact_volume(), B.exact_volume()
    if va is not None and vb is not None:
        return va / vb
    ka, kb = _reduce(A), _reduce(B)
    if isinstance(ka, Ball) and isinstance(kb, Ball) and ka.n == kb.n:
        return (ka.radius / kb.radius) ** ka.n
    return None


def _reduce(A):
    if isinstance(A, Sum):
        merged = _collapse(A.left, A.right)
        return merged if merged is not None else A
    return A


def volume_estimate(A: ConvexBody, samples: int, seed: int = 0) -> tuple[float, float]:
    """Monte Carlo volume over the bounding box.

    Returns the hit-fraction estimate and a 99.9% one-sided Clopper-Pearson
    upper confidence bound.
    """
    rng = np.random.default_rng(seed)
    w = np.array([float(v) for v in A.bounding_half_widths()])
    box_vol = float(np.prod(2 * w))
    hits = 0
    left = int(samples)
    while left > 0:
        m = min(left, 200_000)
        pts = rng.uniform(-w, w, size=(m, A.dim))
        hits += int(np.count_nonzero(A._margin(pts) >= 0))
        left -= m
    frac = hits / samples
    upper = 1.0 if hits == samples else float(stats.beta.ppf(0.999, hits + 1, samples - hits))
    return frac * box_vol, upper * box_vol


def contains(A: ConvexBody, x, strict: bool = False) -> bool:
    return A.contains(x, strict=strict)


def scale(A: ConvexBody, lam) -> ConvexBody:
    lam = exact(lam)
    if lam <= 0:
        raise GeometryError("scale factor must be positive")
    if isinstance(A, Ball):
        return Ball(A.n, A.radius * lam)
    if isinstance(A, Box):
        return Box(tuple(w * lam for w in A.half_widths))
    if isinstance(A, CrossPolytope):
        return CrossPolytope(A.n, A.radius * lam)
    if isinstance(A, Sum):
        return Sum(scale(A.left, lam), scale(A.right, lam))
    raise UnsupportedKind(type(A).__name__)


def _homothetic(a: ConvexBody, b: ConvexBody) -> bool:
    return _collapse(a, b) is not None


def minkowski_sum(A: ConvexBody, B: ConvexBody) -> ConvexBody:
    if A.dim != B.dim:
        raise DimensionMismatch(f"dimensions {A.dim} and {B.dim}")
    if isinstance(A, Sum) and isinstance(B, Sum):
        return minkowski_sum(minkowski_sum(A, B.left), B.right)
    if isinstance(B, Sum):
        A, B = B, A
    if isinstance(A, Sum):
        if _homothetic(A.left, B):
            return minkowski_sum(_collapse(A.left, B), A.right)
        if _homothetic(A.right, B):
            return minkowski_sum(A.left, _collapse(A.right, B))
        raise UnsupportedKind(f"cannot flatten {A.literal()} + {B.literal()}")
    merged = _collapse(A, B)
    return merged if merged is not None else Sum(A, B)


def _inv_sqrt_down(n: int) -> Fraction:
    r = math.isqrt(n)
    if r * r == n:
        return Fraction(1, r)
    c = 1 / math.sqrt(n)
    while n * Fraction(c) ** 2 > 1:
        c = math.nextafter(c, 0.0)
    return Fraction(c)


def inscribed_box(A: ConvexBody) -> Box:
    """Largest axis-aligned 0-symmetric cube-like box inside A.

    For the ball the half-width is R c with c = 1/sqrt(n) rounded down to a
    double that provably satisfies n c^2 <= 1; keeping c independent of R
    makes the construction exactly scale-equivariant.
    """
    if isinstance(A, Box):
        return A
    if isinstance(A, CrossPolytope):
        return Box((A.radius / A.n,) * A.n)
    if isinstance(A, Ball):
        return Box((A.radius * _inv_sqrt_down(A.n),) * A.n)
    raise UnsupportedKind(f"no inscribed box rule for {A.literal()}")
