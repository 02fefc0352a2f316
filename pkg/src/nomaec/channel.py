"""Rayleigh block fading for two users, via exponential order statistics.

Channel power gains are i.i.d. unit-mean exponentials; the weak user gets
the minimum and the strong user the maximum of each draw.

Random streams use numpy's Philox counter-based generator keyed by
``SeedSequence(seed, spawn_key=(stream_id,))``, so each (seed, stream_id)
pair is an independent, reproducible stream and parallel workers never
share state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .numerics import QuadratureSpec, integrate_semi_infinite

__all__ = [
    "OrderedChannelPair",
    "ChannelRng",
    "pdf_weak",
    "pdf_strong",
    "joint_pdf",
    "cdf_weak",
    "cdf_strong",
    "sample_pair",
    "sample_pairs",
    "MEAN_WEAK",
    "MEAN_STRONG",
    "expect_weak",
    "expect_strong",
    "expect_joint",
]

MEAN_WEAK = 0.5
MEAN_STRONG = 1.5


@dataclass(frozen=True)
class OrderedChannelPair:
    x1: float
    x2: float

    def __post_init__(self):
        if not (np.isfinite(self.x1) and np.isfinite(self.x2)):
            raise DomainError("channel gains must be finite")
        if not 0 <= self.x1 <= self.x2:
            raise DomainError(f"need 0 <= x1 <= x2, got ({self.x1}, {self.x2})")


@dataclass
class ChannelRng:
    """Single-owner random stream for channel draws."""

    seed: int
    stream_id: int = 0
    generator: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        if self.stream_id < 0:
            raise DomainError("stream_id must be nonnegative")
        seq = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        self.generator = np.random.Generator(np.random.Philox(seq))


def _check_nonneg(x):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("channel gain must be nonnegative")
    return x


def _out(v):
    return float(v) if np.ndim(v) == 0 else v


def pdf_weak(x):
    """Density of min of two unit exponentials, 2 exp(-2x)."""
    x = _check_nonneg(x)
    return _out(2.0 * np.exp(-2.0 * x))


def pdf_strong(x):
    """Density of max of two unit exponentials, 2 exp(-x) (1 - exp(-x))."""
    x = _check_nonneg(x)
    return _out(-2.0 * np.exp(-x) * np.expm1(-x))


def cdf_weak(x):
    x = _check_nonneg(x)
    return _out(-np.expm1(-2.0 * x))


def cdf_strong(x):
    x = _check_nonneg(x)
    return _out(np.expm1(-x) ** 2)


def joint_pdf(x1, x2):
    """Joint density of the ordered pair, 2 exp(-x1 - x2) on 0 <= x1 <= x2."""
    x1 = _check_nonneg(x1)
    x2 = _check_nonneg(x2)
    return _out(np.where(x1 <= x2, 2.0 * np.exp(-(x1 + x2)), 0.0))


def sample_pairs(rng: ChannelRng, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``n`` ordered gain pairs as two arrays (weak, strong).

    Two uniforms per draw go through the exponential inverse CDF and are
    then sorted, which preserves the exact joint law of the pair.
    """
    u = rng.generator.random((n, 2))
    g = -np.log1p(-u)
    return g.min(axis=1), g.max(axis=1)


def sample_pair(rng: ChannelRng) -> OrderedChannelPair:
    x1, x2 = sample_pairs(rng, 1)
    return OrderedChannelPair(float(x1[0]), float(x2[0]))


# Expectations over the channel law by quadrature. ``g`` / ``h`` must accept
# numpy arrays. Relative tolerance only: callers need relative accuracy even
# when the expectation is tiny.
_ORACLE_QUAD = QuadratureSpec(1e-12, 1e-300)
_OUTER_QUAD = QuadratureSpec(1e-10, 1e-300)


def expect_weak(g, spec: QuadratureSpec | None = None) -> float:
    """E[g(x1)] for the weak-user gain."""
    return integrate_semi_infinite(lambda x: 2.0 * np.exp(-2.0 * x) * g(x), 0.0, spec or _ORACLE_QUAD, scale=0.5)


def expect_strong(g, spec: QuadratureSpec | None = None) -> float:
    """E[g(x2)] for the strong-user gain (marginal law only)."""
    return integrate_semi_infinite(lambda x: -2.0 * np.exp(-x) * np.expm1(-x) * g(x), 0.0, spec or _ORACLE_QUAD)


def expect_joint(h, inner_scale=None, inner_spec: QuadratureSpec | None = None,
                 outer_spec: QuadratureSpec | None = None) -> float:
    """E[h(x1, x2)] over the ordered pair, as an iterated integral.

    The inner integral runs over x2 in [x1, inf) and is written as
    x2 = x1 + t so that exp(-x1) factors out of it. ``inner_scale(x1)``
    gives the length scale of h's variation in x2 near x2 = x1.
    """
    inner_spec = inner_spec or _ORACLE_QUAD
    outer_spec = outer_spec or _OUTER_QUAD

    def inner(x1: float) -> float:
        scale = 1.0 if inner_scale is None else min(1.0, inner_scale(x1))
        return integrate_semi_infinite(lambda t: np.exp(-t) * h(x1, x1 + t), 0.0, inner_spec, scale=scale)

    def outer(x1):
        flat = np.ravel(x1)
        vals = np.fromiter((inner(float(v)) for v in flat), float, len(flat))
        return 2.0 * np.exp(-2.0 * x1) * vals.reshape(np.shape(x1))

    return integrate_semi_infinite(outer, 0.0, outer_spec, scale=0.5)
