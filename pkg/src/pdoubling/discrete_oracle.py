"""Experimental check of the cyclic-group doubling inequality

    sum_{0<=k<=2n} f(k) <= C sum_{0<=k<=n} f(k),   C <= pi^2,

for non-negative positive definite f on Z_q.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

PI_SQ = math.pi**2


class ZeroWitness(ValueError):
    pass


@dataclass(frozen=True)
class ZqWitness:
    """f(k) = |sum_m c_m e(mk/q)|^2 with c_m >= 0; stored sparsely."""

    q: int
    support: np.ndarray
    coeffs: np.ndarray
    label: str = ""

    def __post_init__(self):
        s = np.asarray(self.support, dtype=np.int64) % self.q
        c = np.asarray(self.coeffs, dtype=float)
        if s.shape != c.shape:
            raise ValueError("support and coefficients differ in length")
        if np.any(c < 0):
            raise ValueError("coefficients must be non-negative")
        object.__setattr__(self, "support", s)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def dense(cls, c, label=""):
        c = np.asarray(c, dtype=float)
        nz = np.nonzero(c)[0]
        return cls(len(c), nz, c[nz], label)

    def values(self) -> np.ndarray:
        """f(0), ..., f(q-1) by direct summation."""
        k = np.arange(self.q)
        phase = 2 * math.pi * np.outer(k, self.support) / self.q
        re = np.cos(phase) @ self.coeffs
        im = np.sin(phase) @ self.coeffs
        return re * re + im * im

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(str(self.q).encode())
        h.update(self.support.tobytes())
        h.update(self.coeffs.tobytes())
        return h.hexdigest()[:16]


def zq_ratio(w: ZqWitness, n: int) -> float:
    if not 2 * n < w.q:
        raise ValueError("need 2n < q")
    if not np.any(w.coeffs > 0):
        raise ZeroWitness("all coefficients vanish")
    f = w.values()
    return float(f[: 2 * n + 1].sum() / f[: n + 1].sum())


def fejer_witness(q: int, N: int) -> ZqWitness:
    N = max(int(N), 1)
    m = np.arange(N)
    return ZqWitness(q, m, 1.0 - m / N, label=f"fejer:N={N}")


def random_witness(q: int, rng: np.random.Generator, label: str = "") -> ZqWitness:
    size = int(min(max(rng.poisson(8), 1), q))
    support = rng.choice(q, size=size, replace=False)
    coeffs = 1.0 - rng.random(size)
    return ZqWitness(q, support, coeffs, label)


def zq_max_experiment(q: int, n: int, trials: int, seed: int = 0) -> dict:
    """Largest doubling ratio over seeded random witnesses plus fixed ones.

    The constant witness and Fejer-type witnesses c_m = max(0, 1 - m/N),
    N in {n/2, n, 2n}, are always included.
    """
    if not 2 * n < q:
        raise ValueError("need 2n < q")
    if trials < 1:
        raise ValueError("trials must be positive")
    fixed = [ZqWitness(q, [0], [1.0], "constant")]
    fixed += [fejer_witness(q, N) for N in (n // 2, n, 2 * n)]
    best, best_w = -math.inf, None
    for w in fixed:
        r = zq_ratio(w, n)
        if r > best:
            best, best_w = r, w
    for t in range(trials):
        rng = np.random.default_rng([seed, t])
        w = random_witness(q, rng, f"trial:{t}")
        r = zq_ratio(w, n)
        if r > best:
            best, best_w = r, w
    return {
        "kind": "zq-oracle",
        "q": q,
        "n": n,
        "trials": trials,
        "seed": seed,
        "max_ratio": best,
        "pi_sq_margin": PI_SQ - best,
        "argmax_label": best_w.label,
        "argmax_digest": best_w.digest(),
    }


def dft_min(w: ZqWitness) -> float:
    """Smallest real part of the DFT of f (non-negative for positive definite f)."""
    return float(np.min(np.fft.fft(w.values()).real))
