"""Effective capacity of a two-user uplink NOMA pair and its OMA baseline.

For a rate process R and normalized exponent beta < 0 the effective
capacity is ``log2(E[2**(beta*R)]) / beta``, i.e. ``log2(E[(1+SINR)**beta])
/ beta``. Three independent routes are offered:

* ``closed_form``: Tricomi U / incomplete-gamma expressions,
* ``quadrature``: direct integration of the defining expectation over the
  ordered-gain densities (the reference route),
* ``monte_carlo``: sample means over simulated fading blocks.

User 1 is the weak user (decoded last, interference free); user 2 is the
strong user, decoded first while user 1's signal is still present.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.special import logsumexp

from . import channel
from .channel import ChannelRng, OrderedChannelPair
from .errors import AccuracyFailure, DomainError, UnsupportedDomainError
from .numerics import (
    QuadratureSpec,
    SeriesSpec,
    hyp_u_1,
    log_upper_incomplete_gamma,
    sum_alternating_series,
)

LN2 = math.log(2.0)

Method = Literal["closed_form", "quadrature", "monte_carlo"]
Scheme = Literal["NOMA", "OMA"]
METHODS = ("closed_form", "quadrature", "monte_carlo")

# closed forms are only trusted inside this SNR band
SNR_BAND_DB = (-80.0, 80.0)
MC_BATCHES = 32


@dataclass(frozen=True)
class PowerAllocation:
    """Normalized power coefficients; total transmit power is 1."""

    p1: float
    p2: float | None = None

    def __post_init__(self):
        if self.p2 is None:
            object.__setattr__(self, "p2", 1.0 - self.p1)
        if not (0 < self.p1 < 1 and 0 < self.p2 < 1):
            raise DomainError(f"power coefficients must lie in (0, 1), got ({self.p1}, {self.p2})")
        if abs(self.p1 + self.p2 - 1.0) > 1e-12:
            raise DomainError("power coefficients must sum to 1")


def beta_from_theta(theta: float, tf_b: float) -> float:
    """Normalized QoS exponent -theta * Tf * B / ln 2."""
    if not (theta > 0 and tf_b > 0):
        raise DomainError("theta and Tf*B must be positive")
    return -theta * tf_b / LN2


@dataclass(frozen=True)
class QosExponent:
    theta: float
    tf_b: float = 1.0

    def __post_init__(self):
        beta_from_theta(self.theta, self.tf_b)

    @property
    def beta(self) -> float:
        return beta_from_theta(self.theta, self.tf_b)

    @classmethod
    def from_beta(cls, beta: float, tf_b: float = 1.0) -> "QosExponent":
        if not beta < 0:
            raise DomainError("beta must be negative")
        return cls(-beta * LN2 / tf_b, tf_b)


@dataclass(frozen=True)
class Snr:
    """Transmit SNR rho = 1 / noise variance (linear)."""

    rho: float

    def __post_init__(self):
        if not (self.rho > 0 and math.isfinite(self.rho)):
            raise DomainError(f"SNR must be positive and finite, got {self.rho!r}")

    @property
    def rho_db(self) -> float:
        return 10.0 * math.log10(self.rho)

    @classmethod
    def from_db(cls, rho_db: float) -> "Snr":
        return cls(10.0 ** (rho_db / 10.0))


@dataclass(frozen=True)
class EcEstimate:
    value: float
    method: Method
    std_error: float = 0.0
    samples: int = 0
    note: str = ""

    def __post_init__(self):
        if self.method not in METHODS:
            raise DomainError(f"unknown method {self.method!r}")
        if not self.std_error >= 0:
            raise DomainError("std_error must be nonnegative")
        if (self.samples > 0) != (self.method == "monte_carlo"):
            raise DomainError("samples > 0 exactly when method is monte_carlo")


def _rho(snr: Snr | float) -> float:
    return snr.rho if isinstance(snr, Snr) else Snr(float(snr)).rho


def _check_beta(beta: float) -> float:
    if not beta < 0:
        raise DomainError(f"beta must be negative, got {beta!r}")
    return float(beta)


def _check_user(user: int) -> int:
    if user not in (1, 2):
        raise DomainError(f"user must be 1 or 2, got {user!r}")
    return user


def _check_band(rho: float) -> None:
    db = 10.0 * math.log10(rho)
    lo, hi = SNR_BAND_DB
    if not lo - 1e-9 <= db <= hi + 1e-9:
        raise AccuracyFailure(f"closed forms are evaluated only for rho in [{lo}, {hi}] dB, got {db:.3f} dB")


def _ec_from_moment(m: float, beta: float) -> float:
    if not m > 0:
        raise AccuracyFailure(f"moment E[(1+SINR)^beta] evaluated to {m!r}")
    return math.log(m) / (beta * LN2)


# ---------------------------------------------------------------- rates


def rate_noma(snr: Snr | float, pa: PowerAllocation, pair: OrderedChannelPair, user: int) -> float:
    """Instantaneous SIC rate in b/s/Hz."""
    rho = _rho(snr)
    _check_user(user)
    return float(_noma_rates(rho, pa, np.float64(pair.x1), np.float64(pair.x2))[user - 1])


def rate_oma(snr: Snr | float, pair: OrderedChannelPair, user: int) -> float:
    """Rate with half the resources and full power, in b/s/Hz."""
    rho = _rho(snr)
    x = pair.x1 if _check_user(user) == 1 else pair.x2
    return 0.5 * math.log1p(rho * x) / LN2


def _noma_rates(rho, pa, x1, x2):
    i1 = rho * pa.p1 * x1
    r1 = np.log1p(i1) / LN2
    r2 = np.log1p(rho * pa.p2 * x2 / (1.0 + i1)) / LN2
    return r1, r2


# ------------------------------------------------------------ Monte Carlo


def _batch_log_means(log_terms: np.ndarray, batches: int):
    parts = np.array_split(log_terms, batches)
    sizes = np.array([len(p) for p in parts], dtype=float)
    return np.array([logsumexp(p) for p in parts]) - np.log(sizes), sizes


def _mc_estimate(batch_log_means: np.ndarray, sizes: np.ndarray, beta: float) -> EcEstimate:
    n = int(sizes.sum())
    log_mean = logsumexp(batch_log_means + np.log(sizes)) - math.log(n)
    value = log_mean / (beta * LN2)
    if len(sizes) > 1:
        batch_ec = batch_log_means / (beta * LN2)
        se = float(np.std(batch_ec, ddof=1) / math.sqrt(len(sizes)))
    else:
        se = 0.0
    return EcEstimate(float(value), "monte_carlo", se, n)


def ec_monte_carlo(rate_samples, beta: float, batches: int = MC_BATCHES) -> EcEstimate:
    """Effective capacity of an empirical rate sample.

    The standard error comes from batch means: the sample is cut into
    ``batches`` contiguous batches, each yields its own EC, and the spread
    of those is scaled by 1/sqrt(batches).
    """
    beta = _check_beta(beta)
    r = np.asarray(rate_samples, dtype=float).ravel()
    if r.size == 0:
        raise DomainError("rate sample is empty")
    logs, sizes = _batch_log_means(beta * LN2 * r, min(batches, r.size))
    return _mc_estimate(logs, sizes, beta)


def simulate_ecs(
    snr: Snr | float,
    pa: PowerAllocation,
    beta1: float,
    beta2: float,
    samples: int,
    seed: int = 0,
    stream_id: int = 0,
    batches: int = MC_BATCHES,
) -> dict[str, EcEstimate]:
    """Monte Carlo ECs of all four links from one common set of channel draws.

    Draws are generated batch by batch, so memory stays bounded for large
    ``samples``; the result depends only on (seed, stream_id, samples).

    Returns:
        dict with keys ``ec1_noma``, ``ec2_noma``, ``ec1_oma``, ``ec2_oma``.
    """
    rho = _rho(snr)
    beta1, beta2 = _check_beta(beta1), _check_beta(beta2)
    if samples < 1:
        raise DomainError("samples must be positive")
    batches = min(batches, samples)
    rng = ChannelRng(seed, stream_id)
    sizes = np.array([len(p) for p in np.array_split(np.empty(samples), batches)])
    keys = ("ec1_noma", "ec2_noma", "ec1_oma", "ec2_oma")
    betas = (beta1, beta2, beta1, beta2)
    logs = {k: np.empty(batches) for k in keys}
    for b, n in enumerate(sizes):
        x1, x2 = channel.sample_pairs(rng, int(n))
        r1, r2 = _noma_rates(rho, pa, x1, x2)
        o1 = 0.5 * np.log1p(rho * x1) / LN2
        o2 = 0.5 * np.log1p(rho * x2) / LN2
        for k, beta, r in zip(keys, betas, (r1, r2, o1, o2)):
            logs[k][b] = logsumexp(beta * LN2 * r) - math.log(n)
    return {k: _mc_estimate(logs[k], sizes.astype(float), beta) for k, beta in zip(keys, betas)}


# ----------------------------------------------------------- closed forms


def ec1_noma_closed(snr: Snr | float, pa: PowerAllocation, beta1: float) -> EcEstimate:
    """Weak-user NOMA EC through U(1, 2 + beta, 2 / (rho P1))."""
    rho = _rho(snr)
    beta1 = _check_beta(beta1)
    _check_band(rho)
    z = 2.0 / (rho * pa.p1)
    m = z * hyp_u_1(2.0 + beta1, z)
    return EcEstimate(_ec_from_moment(m, beta1), "closed_form")


def ec_oma_closed(snr: Snr | float, beta: float, user: int) -> EcEstimate:
    """OMA EC of either user through U(1, 2 + beta/2, .)."""
    rho = _rho(snr)
    beta = _check_beta(beta)
    _check_user(user)
    _check_band(rho)
    b = 2.0 + 0.5 * beta
    if user == 1:
        m = (2.0 / rho) * hyp_u_1(b, 2.0 / rho)
    else:
        m = (2.0 / rho) * (hyp_u_1(b, 1.0 / rho) - hyp_u_1(b, 2.0 / rho))
    return EcEstimate(_ec_from_moment(m, beta), "closed_form")


def ec2_noma_closed(
    snr: Snr | float,
    pa: PowerAllocation,
    beta2: float,
    series: SeriesSpec | None = None,
    accuracy_target: float = 1e-8,
) -> EcEstimate:
    """Strong-user NOMA EC through the binomial / incomplete-gamma series.

    With n = -beta2 (a positive integer), a = 1/(rho P2), d = P2 - P1::

        E[(1+SINR2)^beta2] = 2 P2 rho^beta2 exp(2/rho)
            * sum_{j=0}^{n} C(n, j) (rho P1)^j
            * sum_{k>=0} (-d)^k / (k! (1+j+k))
              * [Gamma(2+beta2+j+k, a) - a^(1+j+k) Gamma(1+beta2, a)]

    Every term is formed in log space with exp(a)-scaled gammas. The
    k-series cancels badly once d*a is large (low SNR), and each bracket
    cancels when a >> j+k; both effects are tracked in a running error
    bound.

    Raises:
        UnsupportedDomainError: beta2 is not a negative integer; use
            :func:`ec2_noma_quadrature`.
        AccuracyFailure: the propagated error bound on the EC exceeds
            ``accuracy_target`` (b/s/Hz), or the series does not converge.
    """
    rho = _rho(snr)
    beta2 = _check_beta(beta2)
    if beta2 != round(beta2):
        raise UnsupportedDomainError(
            f"closed form needs an integer beta2, got {beta2!r}; use ec2_noma_quadrature"
        )
    _check_band(rho)
    series = series or SeriesSpec()
    n = int(-round(beta2))
    a = 1.0 / (rho * pa.p2)
    d = pa.p2 - pa.p1
    log_a = math.log(a)
    log_gamma_low = log_upper_incomplete_gamma(1.0 + beta2, a) + a
    log_prefactor = math.log(2.0 * pa.p2) + beta2 * math.log(rho) + d * a
    log_abs_d = math.log(abs(d)) if d != 0 else -math.inf
    sign_d = -1.0 if d > 0 else 1.0

    total = 0.0
    error = 0.0
    for j in range(n + 1):
        log_outer = log_prefactor + math.log(math.comb(n, j)) + j * math.log(rho * pa.p1)
        worst = [0.0]

        def term(k: int, j: int = j, log_outer: float = log_outer) -> float:
            if k > 0 and d == 0:
                return 0.0
            m = j + k
            log_hi = log_upper_incomplete_gamma(2.0 + beta2 + m, a) + a
            delta = (1 + m) * log_a + log_gamma_low - log_hi
            if delta >= 0:
                raise AccuracyFailure("incomplete-gamma bracket lost all precision")
            cancel = math.exp(delta) / -math.expm1(delta)
            worst[0] = max(worst[0], 1e-14 * (1.0 + 2.0 * cancel))
            log_mag = (
                log_outer
                + (k * log_abs_d if k else 0.0)
                - math.lgamma(k + 1.0)
                - math.log1p(m)
                + log_hi
                + math.log(-math.expm1(delta))
            )
            if log_mag > 700.0:
                raise AccuracyFailure("series terms overflow; cancellation is catastrophic here")
            return sign_d**k * math.exp(log_mag)

        part = sum_alternating_series(term, series)
        total += part.value
        error += part.abs_sum * (worst[0] + 8 * np.finfo(float).eps * part.terms) + abs(part.value) * series.relative_term_cutoff

    if not total > 0:
        raise AccuracyFailure(f"series evaluated to a nonpositive moment {total!r}", error_bound=math.inf)
    ec_error = error / total / (abs(beta2) * LN2)
    value = _ec_from_moment(total, beta2)
    if ec_error > accuracy_target:
        raise AccuracyFailure(
            f"closed form error bound {ec_error:.3g} b/s/Hz exceeds {accuracy_target:.3g}",
            estimate=value,
            error_bound=ec_error,
        )
    return EcEstimate(value, "closed_form")


# ------------------------------------------------------------ quadrature


def _power_moment(expect, sinr, beta: float) -> float:
    # E[(1+SINR)^beta], switching to the deficit E[(1+SINR)^beta - 1] when
    # the moment is close to 1 so that low-SNR values keep relative accuracy.
    m = expect(lambda *x: np.exp(beta * np.log1p(sinr(*x))))
    if m > 0.5:
        m = 1.0 + expect(lambda *x: np.expm1(beta * np.log1p(sinr(*x))))
    return m


def _moment_to_ec(m: float, beta: float) -> float:
    return math.log1p(m - 1.0) / (beta * LN2) if m > 0.5 else _ec_from_moment(m, beta)


def _strong_expect(rho: float, pa: PowerAllocation):
    def inner_scale(x1):
        return x1 + (1.0 + rho * pa.p1 * x1) / (rho * pa.p2)

    return lambda h: channel.expect_joint(h, inner_scale)


def ec1_noma_quadrature(snr: Snr | float, pa: PowerAllocation, beta1: float) -> EcEstimate:
    """Weak-user NOMA EC by direct integration over the min-gain density."""
    rho = _rho(snr)
    beta1 = _check_beta(beta1)
    m = _power_moment(channel.expect_weak, lambda x: rho * pa.p1 * x, beta1)
    return EcEstimate(_moment_to_ec(m, beta1), "quadrature")


def ec2_noma_quadrature(snr: Snr | float, pa: PowerAllocation, beta2: float) -> EcEstimate:
    """Strong-user NOMA EC as an iterated integral over the ordered pair."""
    rho = _rho(snr)
    beta2 = _check_beta(beta2)

    def sinr(x1, x2):
        return rho * pa.p2 * x2 / (1.0 + rho * pa.p1 * x1)

    m = _power_moment(_strong_expect(rho, pa), sinr, beta2)
    return EcEstimate(_moment_to_ec(m, beta2), "quadrature")


def ec_oma_quadrature(snr: Snr | float, beta: float, user: int) -> EcEstimate:
    rho = _rho(snr)
    beta = _check_beta(beta)
    expect = channel.expect_weak if _check_user(user) == 1 else channel.expect_strong
    # half the resources: (1 + rho x)^(beta/2)
    m = _power_moment(expect, lambda x: rho * x, 0.5 * beta)
    return EcEstimate(_moment_to_ec(m, beta), "quadrature")


def ec2_high_snr_limit(pa: PowerAllocation, beta2: float) -> float:
    """Ceiling of the strong-user NOMA EC as rho -> inf.

    The interference-limited SINR is P2 x2 / (P1 x1); with beta2 < 0 the
    integrand stays in (0, 1] even as x1 -> 0.
    """
    beta2 = _check_beta(beta2)

    def h(x1, x2):
        return np.exp(beta2 * np.log1p(pa.p2 * x2 / (pa.p1 * x1)))

    m = channel.expect_joint(h, inner_scale=lambda x1: x1 + pa.p1 * x1 / pa.p2)
    return _ec_from_moment(m, beta2)


def ergodic_rate(snr: Snr | float, pa: PowerAllocation | None, user: int, scheme: Scheme = "NOMA") -> float:
    """Mean rate E[R] in b/s/Hz by quadrature (the beta -> 0 limit of the EC)."""
    rho = _rho(snr)
    _check_user(user)
    if scheme == "OMA":
        expect = channel.expect_weak if user == 1 else channel.expect_strong
        return 0.5 * expect(lambda x: np.log1p(rho * x)) / LN2
    if pa is None:
        raise DomainError("NOMA rates need a power allocation")
    if user == 1:
        return channel.expect_weak(lambda x: np.log1p(rho * pa.p1 * x)) / LN2
    return _strong_expect(rho, pa)(lambda x1, x2: np.log1p(rho * pa.p2 * x2 / (1.0 + rho * pa.p1 * x1))) / LN2


# ------------------------------------------------------------ dispatch


def ec_noma(
    user: int,
    snr: Snr | float,
    pa: PowerAllocation,
    beta: float,
    method: Method = "quadrature",
    samples: int = 10**6,
    seed: int = 0,
    stream_id: int = 0,
) -> EcEstimate:
    """NOMA EC of one user by the requested method.

    ``closed_form`` for user 2 falls back to quadrature when the series is
    unsupported (non-integer beta) or cannot meet its accuracy target; the
    returned estimate then has method ``quadrature`` and a ``note``.
    """
    _check_user(user)
    if method == "closed_form":
        if user == 1:
            return ec1_noma_closed(snr, pa, beta)
        try:
            return ec2_noma_closed(snr, pa, beta)
        except (UnsupportedDomainError, AccuracyFailure) as exc:
            est = ec2_noma_quadrature(snr, pa, beta)
            return EcEstimate(est.value, "quadrature", note=f"closed form unavailable ({exc}); used quadrature")
    if method == "quadrature":
        return ec1_noma_quadrature(snr, pa, beta) if user == 1 else ec2_noma_quadrature(snr, pa, beta)
    if method == "monte_carlo":
        res = simulate_ecs(snr, pa, beta, beta, samples, seed, stream_id)
        return res[f"ec{user}_noma"]
    raise DomainError(f"unknown method {method!r}")


def ec_oma(
    user: int,
    snr: Snr | float,
    beta: float,
    method: Method = "quadrature",
    samples: int = 10**6,
    seed: int = 0,
    stream_id: int = 0,
) -> EcEstimate:
    if method == "closed_form":
        return ec_oma_closed(snr, beta, user)
    if method == "quadrature":
        return ec_oma_quadrature(snr, beta, user)
    if method == "monte_carlo":
        _check_user(user)
        res = simulate_ecs(snr, PowerAllocation(0.5), beta, beta, samples, seed, stream_id)
        return res[f"ec{user}_oma"]
    raise DomainError(f"unknown method {method!r}")


def all_ecs(
    snr: Snr | float,
    pa: PowerAllocation,
    beta1: float,
    beta2: float,
    method: Method = "quadrature",
    samples: int = 10**6,
    seed: int = 0,
    stream_id: int = 0,
) -> dict[str, EcEstimate]:
    """The four per-user ECs (keys as in :func:`simulate_ecs`)."""
    if method == "monte_carlo":
        return simulate_ecs(snr, pa, beta1, beta2, samples, seed, stream_id)
    return {
        "ec1_noma": ec_noma(1, snr, pa, beta1, method),
        "ec2_noma": ec_noma(2, snr, pa, beta2, method),
        "ec1_oma": ec_oma(1, snr, beta1, method),
        "ec2_oma": ec_oma(2, snr, beta2, method),
    }


def combine(a: EcEstimate, b: EcEstimate) -> EcEstimate:
    """Sum of two estimates; MC standard errors add in quadrature."""
    method = a.method if a.method == b.method else "quadrature"
    if "monte_carlo" in (a.method, b.method) and method != "monte_carlo":
        raise DomainError("cannot mix Monte Carlo and deterministic estimates")
    return EcEstimate(
        a.value + b.value,
        method,
        math.hypot(a.std_error, b.std_error),
        max(a.samples, b.samples),
        "; ".join(filter(None, (a.note, b.note))),
    )


def sum_ec(
    snr: Snr | float,
    pa: PowerAllocation,
    beta1: float,
    beta2: float,
    scheme: Scheme = "NOMA",
    method: Method = "quadrature",
    samples: int = 10**6,
    seed: int = 0,
) -> EcEstimate:
    """Sum EC V_N (NOMA) or V_O (OMA) of the two users."""
    if scheme not in ("NOMA", "OMA"):
        raise DomainError(f"scheme must be NOMA or OMA, got {scheme!r}")
    if method == "monte_carlo":
        res = simulate_ecs(snr, pa, beta1, beta2, samples, seed)
        key = "noma" if scheme == "NOMA" else "oma"
        return combine(res[f"ec1_{key}"], res[f"ec2_{key}"])
    if scheme == "NOMA":
        return combine(ec_noma(1, snr, pa, beta1, method), ec_noma(2, snr, pa, beta2, method))
    return combine(ec_oma(1, snr, beta1, method), ec_oma(2, snr, beta2, method))
