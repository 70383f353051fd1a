"""Double positive definite test functions and their doubling ratios.

A witness f >= 0 that is positive definite gives the empirical lower bound
    C_n(U, V) >= mean_V f / mean_U f.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import special

from .geometry import (
    Ball,
    Box,
    ConvexBody,
    CrossPolytope,
    UnsupportedKind,
    ball_volume_constant,
    exact,
    scale,
    volume_ratio,
)
from .lattices import Lattice, NotAPacking, check_packing, enumerate_points

MAX_NODES = 10**7
INV_PHI = (math.sqrt(5) - 1) / 2


class QuadratureFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class RatioEstimate:
    value: float
    abs_error: float
    method: str
    node_count: int

    @property
    def lower(self) -> float:
        """Usable empirical lower bound."""
        return self.value - self.abs_error


# -- witness families ------------------------------------------------------------

class WitnessFunction:
    dim: int

    def __call__(self, pts) -> np.ndarray:
        raise NotImplementedError

    def factors(self):
        """Per-axis (g, kinks) when f(x) = prod_i g_i(x_i); otherwise None."""
        return None

    def radial(self):
        """(g, kinks) when f(x) = g(|x|); otherwise None."""
        return None

    def literal(self) -> str:
        raise NotImplementedError


def _pts(f, x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x.reshape(-1, f.dim)
    if x.shape[1] != f.dim:
        raise ValueError(f"points of dimension {x.shape[1]} for a {f.dim}-dimensional witness")
    return x


def _hat(w: float):
    return lambda t: np.maximum(0.0, 1.0 - np.abs(t) / (2 * w))


@dataclass(frozen=True)
class Autocorrelation(WitnessFunction):
    """phi_H = |H|^-1 chi_H * chi_H, normalised so phi_H(0) = 1."""

    H: ConvexBody

    def __post_init__(self):
        H = self.H
        if isinstance(H, CrossPolytope) and H.n == 1:
            object.__setattr__(self, "H", Box((H.radius,)))
        elif not isinstance(H, (Ball, Box)):
            raise UnsupportedKind(f"no autocorrelation formula for {H.literal()}")

    @property
    def dim(self):
        return self.H.dim

    def _ball_profile(self, d):
        R = float(self.H.radius)
        n = self.H.dim
        t = np.clip(np.asarray(d, dtype=float) / (2 * R), 0.0, 1.0)
        return np.where(t < 1.0, special.betainc((n + 1) / 2, 0.5, 1.0 - t * t), 0.0)

    def __call__(self, x):
        x = _pts(self, x)
        if isinstance(self.H, Box):
            w = np.array([float(v) for v in self.H.half_widths])
            return np.prod(np.maximum(0.0, 1.0 - np.abs(x) / (2 * w)), axis=1)
        return self._ball_profile(np.linalg.norm(x, axis=1))

    def factors(self):
        if isinstance(self.H, Box):
            return [(_hat(float(w)), (-2 * float(w), 0.0, 2 * float(w))) for w in self.H.half_widths]
        if self.dim == 1:
            r = float(self.H.radius)
            return [(_hat(r), (-2 * r, 0.0, 2 * r))]
        return None

    def radial(self):
        if isinstance(self.H, Ball):
            return self._ball_profile, (2 * float(self.H.radius),)
        return None

    def literal(self):
        return f"autocorr:{self.H.literal()}"


@dataclass(frozen=True)
class Gaussian(WitnessFunction):
    """f(x) = exp(-pi |x / sigma|^2); its Fourier transform is again Gaussian."""

    n: int
    sigma: float

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")

    @property
    def dim(self):
        return self.n

    def _g(self, t):
        return np.exp(-math.pi * (np.asarray(t) / self.sigma) ** 2)

    def __call__(self, x):
        x = _pts(self, x)
        return np.exp(-math.pi * np.sum(x * x, axis=1) / self.sigma**2)

    def _scale_breaks(self):
        # resolve the peak when sigma is small next to the body
        t = [self.sigma * k for k in (0.5, 1, 2, 4)]
        return tuple([-v for v in t] + [0.0] + t)

    def factors(self):
        return [(self._g, self._scale_breaks())] * self.n

    def radial(self):
        return self._g, self._scale_breaks()

    def literal(self):
        return f"gauss:{self.sigma!r}"


@dataclass(frozen=True)
class CosineModulusSquare(WitnessFunction):
    """f(x) = |sum_j w_j e(xi_j . x)|^2 with w_j >= 0 and e(t) = exp(2 pi i t).

    Positive definite because its spectral measure sum_{j,k} w_j w_k
    delta_{xi_j - xi_k} is non-negative.
    """

    weights: np.ndarray
    freqs: np.ndarray
    label: str = field(default="", compare=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).ravel()
        xi = np.asarray(self.freqs, dtype=float)
        if xi.ndim == 1:
            xi = xi.reshape(len(w), -1)
        if len(w) == 0 or xi.shape[0] != len(w):
            raise ValueError("weights and frequencies must pair up")
        if np.any(w < 0):
            raise ValueError("weights must be non-negative")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "freqs", xi)

    @property
    def dim(self):
        return self.freqs.shape[1]

    def __call__(self, x):
        x = _pts(self, x)
        phase = 2 * math.pi * (x @ self.freqs.T)
        re = np.cos(phase) @ self.weights
        im = np.sin(phase) @ self.weights
        return re * re + im * im

    def difference_spectrum(self):
        """Atoms (w_j w_k, xi_j - xi_k) of the spectral measure."""
        ww = np.outer(self.weights, self.weights).ravel()
        dx = (self.freqs[:, None, :] - self.freqs[None, :, :]).reshape(-1, self.dim)
        return ww, dx

    def literal(self):
        return self.label or f"cms:J={len(self.weights)}"


@dataclass(frozen=True)
class LatticeDirichlet(WitnessFunction):
    """sum_{a, b in Lambda_R} phi_eps(x + a - b) / |Lambda_R|.

    Its ratio is taken in the eps -> 0 limit (see lattice_witness_ratio);
    pointwise evaluation uses the mollifier radius ``eps``.
    """

    lattice: Lattice
    R: float
    eps: float = 0.1

    @property
    def dim(self):
        return self.lattice.dim

    def _weights(self):
        cache = self.__dict__.get("_w")
        if cache is None:
            pts, coeffs = enumerate_points(self.lattice, Ball(self.dim, self.R), return_coefficients=True)
            diffs = {}
            keys = [tuple(c) for c in coeffs.tolist()]
            for a in keys:
                for b in keys:
                    c = tuple(x - y for x, y in zip(a, b))
                    diffs[c] = diffs.get(c, 0) + 1
            cs = np.array(list(diffs.keys()))
            cache = (cs @ self.lattice.matrix.T, np.array(list(diffs.values()), dtype=float) / len(keys))
            object.__setattr__(self, "_w", cache)
        return cache

    def __call__(self, x):
        x = _pts(self, x)
        centers, weights = self._weights()
        mol = Autocorrelation(Ball(self.dim, self.eps))
        out = np.zeros(len(x))
        for c, w in zip(centers, weights):
            out += w * mol(x + c)
        return out

    def literal(self):
        return f"latdir:{self.lattice.name},R={self.R!r}"


def evaluate(f: WitnessFunction, x) -> float:
    return float(f(np.asarray(x, dtype=float).reshape(1, -1))[0])


def sample_double_pd(n: int, J: int, freq_scale: float, seed: int) -> CosineModulusSquare:
    """Random squared character sum; the first frequency is pinned at 0."""
    if J < 1:
        raise ValueError("J must be at least 1")
    rng = np.random.default_rng(seed)
    w = 1.0 - rng.random(J)  # uniform on (0, 1]
    xi = rng.uniform(-freq_scale, freq_scale, size=(J, n))
    xi[0] = 0.0
    return CosineModulusSquare(w, xi, label=f"cms:seed={seed},J={J},scale={freq_scale!r}")


# -- quadrature ------------------------------------------------------------------

@lru_cache(maxsize=64)
def _gl(m: int):
    return np.polynomial.legendre.leggauss(m)


def _doubling(rule: Callable[[int], tuple[float, int]], tol: float, m0: int = 8, max_nodes: int = MAX_NODES):
    """Run ``rule(m)`` for m = m0, 2 m0, ... until two levels agree to ``tol`` (relative)."""
    prev, nodes = rule(m0)
    m = m0
    while True:
        m *= 2
        cur, nodes = rule(m)
        if nodes > max_nodes:
            raise QuadratureFailure(f"tolerance {tol:g} not reached within {max_nodes} nodes")
        err = abs(cur - prev)
        if err <= tol * abs(cur) or (cur == 0 and err == 0):
            return cur, err, nodes
        prev = cur


def _gl_pieces(g, breaks, m):
    x, w = _gl(m)
    total = 0.0
    for a, b in zip(breaks[:-1], breaks[1:]):
        if b <= a:
            continue
        xs = 0.5 * (b - a) * x + 0.5 * (a + b)
        total += 0.5 * (b - a) * float(w @ g(xs))
    return total


def _breaks(lo, hi, kinks):
    return [lo] + sorted(k for k in kinks if lo < k < hi) + [hi]


def _box_rule(W, m):
    x, w = _gl(m)
    axes = [(float(a) * x, float(a) * w) for a in W]
    nodes = np.stack(np.meshgrid(*[a[0] for a in axes], indexing="ij"), -1).reshape(-1, len(W))
    weights = np.ones(1)
    for a in axes:
        weights = np.multiply.outer(weights, a[1]).ravel()
    return nodes, weights


def _ball_rule(n, R, m):
    """Tensor rule on the n-ball via x1 = R sin(theta), recursing on the slice.

    Each coordinate range is split at 0 so kinks on the coordinate
    hyperplanes fall on panel edges.
    """
    x, w = _gl(m)
    xh, wh = 0.5 * (x + 1), 0.5 * w
    if n == 1:
        t = np.concatenate([-xh[::-1], xh])
        return (R * t).reshape(-1, 1), R * np.concatenate([wh[::-1], wh])
    th = 0.5 * math.pi * np.concatenate([-xh[::-1], xh])
    tw = 0.5 * math.pi * np.concatenate([wh[::-1], wh])
    inner_nodes, inner_w = _ball_rule(n - 1, 1.0, m)
    out_n, out_w = [], []
    for t, wt in zip(th, tw):
        r = R * math.cos(t)
        pts = np.concatenate([np.full((len(inner_nodes), 1), R * math.sin(t)), r * inner_nodes], axis=1)
        out_n.append(pts)
        out_w.append(wt * R * math.cos(t) * r ** (n - 1) * inner_w)
    return np.concatenate(out_n), np.concatenate(out_w)


def _cross_rule(n, R, m):
    x, w = _gl(m)
    if n == 1:
        return (R * x).reshape(-1, 1), R * w
    inner_nodes, inner_w = _cross_rule(n - 1, 1.0, m)
    out_n, out_w = [], []
    for sgn in (-1.0, 1.0):
        for s, ws in zip(0.5 * R * (x + 1), 0.5 * R * w):
            r = R - s
            pts = np.concatenate([np.full((len(inner_nodes), 1), sgn * s), r * inner_nodes], axis=1)
            out_n.append(pts)
            out_w.append(ws * r ** (n - 1) * inner_w)
    return np.concatenate(out_n), np.concatenate(out_w)


def _bbox_indicator_rule(body, m):
    W = [float(v) for v in body.bounding_half_widths()]
    nodes, weights = _box_rule(W, m)
    return nodes, weights * (body._margin(nodes) >= 0)


def _ball_fourier(R: float, n: int, eta: np.ndarray) -> np.ndarray:
    """Integral of e(eta . x) over the ball of radius R."""
    k = np.linalg.norm(eta, axis=1) * R
    out = np.full(len(k), ball_volume_constant(n) * R**n)
    big = k > 1e-7
    out[big] = R**n * special.jv(n / 2, 2 * math.pi * k[big]) / k[big] ** (n / 2)
    return out


def integrate(f: WitnessFunction, body: ConvexBody, tol: float = 1e-8, max_nodes: int = MAX_NODES):
    """Integral of f over body; returns (value, abs_error, method, nodes)."""
    n = body.dim
    if isinstance(f, CosineModulusSquare) and isinstance(body, (Box, Ball)):
        ww, eta = f.difference_spectrum()
        if isinstance(body, Box):
            W = np.array([float(v) for v in body.half_widths])
            vals = np.prod(2 * W * np.sinc(2 * eta * W), axis=1)
            vol = float(np.prod(2 * W))
        else:
            vals = _ball_fourier(float(body.radius), n, eta)
            vol = body.volume()
        total = float(ww @ vals)
        err = 1e-13 * float(ww.sum()) * vol * max(1, len(ww))
        return total, err, "fourier-closed-form", len(ww)

    if isinstance(body, Box) and f.factors() is not None:
        facs = f.factors()
        W = [float(v) for v in body.half_widths]

        def rule(m):
            val = 1.0
            for (g, kinks), a in zip(facs, W):
                val *= _gl_pieces(g, _breaks(-a, a, kinks), m)
            return val, m * n * 3

        v, e, k = _doubling(rule, tol, max_nodes=max_nodes)
        return v, e, "gauss-legendre-separable", k

    if isinstance(body, Ball) and f.radial() is not None:
        g, kinks = f.radial()
        R = float(body.radius)
        shell = n * ball_volume_constant(n)

        def rule(m):
            return shell * _gl_pieces(lambda r: g(r) * r ** (n - 1), _breaks(0.0, R, kinks), m), 2 * m

        v, e, k = _doubling(rule, tol, max_nodes=max_nodes)
        return v, e, "gauss-legendre-radial", k

    if isinstance(body, Box):
        W = [float(v) for v in body.half_widths]
        mk, method = (lambda m: _box_rule(W, m)), "gauss-legendre-tensor"
    elif isinstance(body, Ball):
        mk, method = (lambda m: _ball_rule(n, float(body.radius), m)), "gauss-legendre-ball"
    elif isinstance(body, CrossPolytope):
        mk, method = (lambda m: _cross_rule(n, float(body.radius), m)), "gauss-legendre-cross"
    else:
        mk, method = (lambda m: _bbox_indicator_rule(body, m)), "gauss-legendre-indicator"

    def rule(m):
        if (2 * m) ** n > max_nodes:
            return math.nan, (2 * m) ** n
        nodes, weights = mk(m)
        return float(weights @ f(nodes)), len(weights)

    v, e, k = _doubling(rule, tol, max_nodes=max_nodes)
    return v, e, method, k


def ratio(f: WitnessFunction, U: ConvexBody, V: ConvexBody, tol: float = 1e-8) -> RatioEstimate:
    """(mean of f over V) / (mean of f over U) with a propagated error bar."""
    if isinstance(f, LatticeDirichlet):
        val = lattice_witness_ratio(f.lattice, U, V, f.R)
        return RatioEstimate(float(val), 0.0, "discrete-limit", 0)
    iv, ev, mv, kv = integrate(f, V, tol / 4)
    iu, eu, mu, ku = integrate(f, U, tol / 4)
    if iu <= 0:
        raise QuadratureFailure("witness integrates to zero over U")
    vr = volume_ratio(U, V)
    vr = float(vr) if vr is not None else U.volume() / V.volume()
    value = iv / iu * vr
    err = abs(value) * (ev / abs(iv) if iv else 0.0) + abs(value) * eu / iu
    method = mv if mv == mu else f"{mv}/{mu}"
    return RatioEstimate(value, err, method, kv + ku)


# -- the lattice proof construction ------------------------------------------------

def lattice_witness_counts(lattice: Lattice, V: ConvexBody, R: float, delta=1e-9) -> tuple[int, int]:
    """(sum of N_c over c in Lambda cap Int((1-delta) V), N_0) with N_c = |Lambda_R cap (Lambda_R + c)|."""
    n = lattice.dim
    _, A = enumerate_points(lattice, Ball(n, R), return_coefficients=True)
    shrink = 1 - exact(delta)
    region = scale(V, shrink) if shrink != 1 else V
    _, C = enumerate_points(lattice, region, strict_interior=True, return_coefficients=True)
    lo = A.min(axis=0)
    span = A.max(axis=0) - lo + 1
    if np.prod(span.astype(float)) <= 5e7:
        # N_c is the overlap of the occupancy grid with itself shifted by c
        grid = np.zeros(tuple(span), dtype=bool)
        grid[tuple((A - lo).T)] = True
        total = 0
        for c in C:
            a = tuple(slice(max(0, k), s - max(0, -k)) for k, s in zip(c, span))
            b = tuple(slice(max(0, -k), s - max(0, k)) for k, s in zip(c, span))
            total += int(np.count_nonzero(grid[a] & grid[b]))
        return total, len(A)
    keys = np.sort(np.ravel_multi_index((A - lo).T, span))
    total = 0
    for c in C:
        B = A - c
        ok = np.all((B - lo >= 0) & (B - lo < span), axis=1)
        bk = np.ravel_multi_index((B[ok] - lo).T, span)
        pos = np.minimum(np.searchsorted(keys, bk), len(keys) - 1)
        total += int(np.count_nonzero(keys[pos] == bk))
    return total, len(A)


def lattice_witness_ratio(lattice: Lattice, U: ConvexBody, V: ConvexBody, R: float, delta=1e-9):
    """eps -> 0 limit of the doubling ratio of sum_{a,b in Lambda_R} phi_eps(x + a - b).

    Returns a Fraction when |U| / |V| is rational, else a float.
    """
    if not check_packing(lattice, U):
        raise NotAPacking(f"{lattice.name} is not a packing lattice for {U.literal()}")
    if R < V.circumradius():
        raise ValueError("R must be at least the circumradius of V")
    s, n0 = lattice_witness_counts(lattice, V, R, delta)
    vr = volume_ratio(U, V)
    if vr is not None:
        return vr * Fraction(s, n0)
    return U.volume() / V.volume() * s / n0


# -- one-parameter search ----------------------------------------------------------

def optimize_family(
    family: Callable[[float], WitnessFunction],
    U: ConvexBody,
    V: ConvexBody,
    param_range: tuple[float, float],
    *,
    log_scale: bool = False,
    iterations: int = 60,
    tol: float = 1e-8,
) -> tuple[float, RatioEstimate]:
    """Golden-section search maximising the ratio; returns the best point seen.

    Any incumbent is a valid empirical lower bound whether or not the ratio
    is unimodal in the parameter.
    """
    lo, hi = param_range
    if log_scale:
        lo, hi = math.log(lo), math.log(hi)
    to_p = math.exp if log_scale else (lambda t: t)
    best = [None, None]

    def score(t):
        est = ratio(family(to_p(t)), U, V, tol)
        if best[1] is None or est.lower > best[1].lower:
            best[0], best[1] = to_p(t), est
        return est.lower

    score(lo)
    score(hi)
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = score(c), score(d)
    for _ in range(iterations):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = score(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = score(d)
    return best[0], best[1]
