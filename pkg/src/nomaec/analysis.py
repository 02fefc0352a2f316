"""Asymptotic checks, NOMA/OMA crossover search and scheme selection.

All checks run on the quadrature route; Monte Carlo is too noisy for
finite differences. "rho -> 0" is probed at -40 dB and "rho -> inf" at
60-70 dB.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Literal

import numpy as np

from .capacity import (
    LN2,
    PowerAllocation,
    Snr,
    ec1_noma_quadrature,
    ec2_high_snr_limit,
    ec2_noma_quadrature,
    ec_oma_quadrature,
)
from .channel import MEAN_STRONG, MEAN_WEAK
from .errors import DomainError

LOW_DB = -40.0
HIGH_DB = (60.0, 70.0)
SIGN_GRID_DB = np.linspace(-40.0, 60.0, 20)
SIGN_EPS = 1e-10
NEAR_ZERO = 1e-3

User = Literal[1, 2, "sum"]


@dataclass(frozen=True)
class Check:
    name: str
    expected: float
    observed: float
    tolerance: float
    passed: bool


@dataclass
class LemmaReport:
    lemma_id: int
    checks: list[Check] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def overall(self) -> bool:
        return all(c.passed for c in self.checks)

    def close(self, name, expected, observed, rel_tol, floor=0.0):
        """|observed - expected| <= rel_tol * max(|expected|, floor)."""
        tol = rel_tol * max(abs(expected), floor)
        self.checks.append(Check(name, expected, observed, tol, bool(abs(observed - expected) <= tol)))

    def at_most(self, name, bound, observed, tol=0.0):
        self.checks.append(Check(name, bound, observed, tol, bool(observed <= bound + tol)))

    def at_least(self, name, bound, observed, tol=0.0):
        self.checks.append(Check(name, bound, observed, tol, bool(observed >= bound - tol)))

    def as_dict(self) -> dict:
        return {
            "lemma_id": self.lemma_id,
            "overall": self.overall,
            "checks": [c.__dict__ for c in self.checks],
            "notes": list(self.notes),
        }


@dataclass(frozen=True)
class CrossoverResult:
    user: User
    rho_star_db: float | None
    bracket: tuple[float, float]
    achieved_gap: float | None
    gap_low: float
    gap_high: float

    @property
    def found(self) -> bool:
        return self.rho_star_db is not None


# Memoized quadrature ECs keyed on plain floats, so that lemma checks that
# share evaluation points (derivatives of sums, repeated grids) reuse them.
@lru_cache(maxsize=8192)
def _ec_cached(name: str, rho: float, p1: float, beta: float) -> float:
    if name == "ec1_noma":
        return ec1_noma_quadrature(rho, PowerAllocation(p1), beta).value
    if name == "ec2_noma":
        return ec2_noma_quadrature(rho, PowerAllocation(p1), beta).value
    if name == "ec1_oma":
        return ec_oma_quadrature(rho, beta, 1).value
    if name == "ec2_oma":
        return ec_oma_quadrature(rho, beta, 2).value
    raise KeyError(name)


def ec_function(name: str, pa: PowerAllocation, beta: float) -> Callable[[float], float]:
    """Quadrature EC as a function of linear rho."""
    return lambda rho: _ec_cached(name, float(rho), pa.p1, float(beta))


def gap_function(user: User, pa: PowerAllocation, beta1: float, beta2: float) -> Callable[[float], float]:
    """NOMA minus OMA EC (per user, or of the sums) as a function of linear rho."""
    e1n, e1o = ec_function("ec1_noma", pa, beta1), ec_function("ec1_oma", pa, beta1)
    e2n, e2o = ec_function("ec2_noma", pa, beta2), ec_function("ec2_oma", pa, beta2)
    if user == 1:
        return lambda r: e1n(r) - e1o(r)
    if user == 2:
        return lambda r: e2n(r) - e2o(r)
    if user == "sum":
        return lambda r: (e1n(r) + e2n(r)) - (e1o(r) + e2o(r))
    raise DomainError(f"user must be 1, 2 or 'sum', got {user!r}")


def d_ec_drho(ec_fn: Callable[[float], float], rho: float, step_rel: float = 1e-4) -> float:
    """Central difference in rho with relative step, one Richardson pass."""
    if not rho > 0:
        raise DomainError("rho must be positive")

    def central(h):
        return (ec_fn(rho * (1 + h)) - ec_fn(rho * (1 - h))) / (2 * rho * h)

    return (4.0 * central(0.5 * step_rel) - central(step_rel)) / 3.0


def _rho(db: float) -> float:
    return Snr.from_db(db).rho


def _sign_checks(report: LemmaReport, label: str, fn) -> None:
    slopes = [d_ec_drho(fn, _rho(db)) for db in SIGN_GRID_DB]
    worst = int(np.argmin(slopes))
    report.at_least(f"d{label}/drho >= 0 on grid (min at {SIGN_GRID_DB[worst]:.1f} dB)", 0.0, slopes[worst], SIGN_EPS)


def check_lemma1(pa: PowerAllocation, beta1: float = -1.0, beta2: float = -1.0) -> LemmaReport:
    """Low/high SNR limits of the four ECs and of the two NOMA-OMA gaps."""
    rep = LemmaReport(1)
    fns = {
        "E1": ec_function("ec1_noma", pa, beta1),
        "E2": ec_function("ec2_noma", pa, beta2),
        "E1_oma": ec_function("ec1_oma", pa, beta1),
        "E2_oma": ec_function("ec2_oma", pa, beta2),
    }
    lo = _rho(LOW_DB)
    for name, fn in fns.items():
        rep.close(f"{name} -> 0 at {LOW_DB:g} dB", 0.0, fn(lo), 1.0, floor=NEAR_ZERO)
    rep.close(f"E1-E1_oma -> 0 at {LOW_DB:g} dB", 0.0, fns["E1"](lo) - fns["E1_oma"](lo), 1.0, floor=NEAR_ZERO)
    rep.close(f"E2-E2_oma -> 0 at {LOW_DB:g} dB", 0.0, fns["E2"](lo) - fns["E2_oma"](lo), 1.0, floor=NEAR_ZERO)

    r60, r70 = (_rho(db) for db in HIGH_DB)
    for name in ("E1", "E1_oma", "E2_oma"):
        rep.at_least(f"{name} grows from 60 to 70 dB", 0.0, fns[name](r70) - fns[name](r60))
    ceiling = ec2_high_snr_limit(pa, beta2)
    for r, db in ((r60, 60), (r70, 70)):
        rep.close(f"E2 within 1% of its ceiling at {db} dB", ceiling, fns["E2"](r), 0.01)
        rep.at_most(f"E2 <= ceiling at {db} dB", ceiling, fns["E2"](r), 1e-9)
    g1 = [fns["E1"](r) - fns["E1_oma"](r) for r in (r60, r70)]
    g2 = [fns["E2"](r) - fns["E2_oma"](r) for r in (r60, r70)]
    rep.at_least("E1-E1_oma > 0 at 60 dB", 0.0, g1[0])
    rep.at_least("E1-E1_oma increasing 60->70 dB", 0.0, g1[1] - g1[0])
    rep.at_most("E2-E2_oma < 0 at 60 dB", 0.0, g2[0])
    rep.at_most("E2-E2_oma decreasing 60->70 dB", 0.0, g2[1] - g2[0])
    return rep


def _low_high_gap_checks(rep, gap, expected_low, low_floor, high_sign):
    slope_low = d_ec_drho(gap, _rho(LOW_DB))
    rep.close(f"d(gap)/drho at {LOW_DB:g} dB", expected_low, slope_low, 0.05, floor=low_floor)
    for db in (40.0, 60.0):
        r = _rho(db)
        rep.close(f"d(gap)/drho at {db:g} dB vs {'+' if high_sign > 0 else '-'}1/(2 rho ln2)",
                  high_sign / (2 * r * LN2), d_ec_drho(gap, r), 0.10)
    return slope_low


def _gap_trend(gap) -> str:
    vals = ", ".join(f"{db:g} dB: {gap(_rho(db)):.6f}" for db in (40.0, 60.0, 70.0))
    return f"gap trend {vals}"


def check_lemma2(pa: PowerAllocation, beta1: float = -1.0) -> LemmaReport:
    """Weak user: derivative signs, low-SNR gap slope, high-SNR gap slope."""
    rep = LemmaReport(2)
    e1 = ec_function("ec1_noma", pa, beta1)
    o1 = ec_function("ec1_oma", pa, beta1)
    _sign_checks(rep, "E1", e1)
    _sign_checks(rep, "E1_oma", o1)
    gap = lambda r: e1(r) - o1(r)  # noqa: E731
    expected = (pa.p1 - 0.5) * MEAN_WEAK / LN2
    _low_high_gap_checks(rep, gap, expected, MEAN_WEAK / (2 * LN2), +1.0)
    rep.notes.append(_gap_trend(gap))
    return rep


def check_lemma3(pa: PowerAllocation, beta2: float = -1.0) -> LemmaReport:
    """Strong user: as lemma 2, with the (P2 - 1/2) E[x2] / ln2 low-SNR constant."""
    rep = LemmaReport(3)
    e2 = ec_function("ec2_noma", pa, beta2)
    o2 = ec_function("ec2_oma", pa, beta2)
    _sign_checks(rep, "E2", e2)
    _sign_checks(rep, "E2_oma", o2)
    gap = lambda r: e2(r) - o2(r)  # noqa: E731
    expected = (pa.p2 - 0.5) * MEAN_STRONG / LN2
    slope = _low_high_gap_checks(rep, gap, expected, MEAN_STRONG / (2 * LN2), -1.0)
    alt = pa.p2 * MEAN_STRONG / (2 * LN2)
    rep.notes.append(
        f"low-SNR gap slope {slope:.6f}: (P2-1/2)E[x2]/ln2 = {expected:.6f}, P2 E[x2]/(2 ln2) = {alt:.6f}"
    )
    rep.notes.append(_gap_trend(gap))
    return rep


def check_lemma4(pa: PowerAllocation, beta1: float = -1.0, beta2: float = -1.0) -> LemmaReport:
    """Sum ECs: vanishing at low SNR, low-SNR slopes, flattening slopes at high SNR."""
    rep = LemmaReport(4)
    e1, e2 = ec_function("ec1_noma", pa, beta1), ec_function("ec2_noma", pa, beta2)
    o1, o2 = ec_function("ec1_oma", pa, beta1), ec_function("ec2_oma", pa, beta2)
    vn = lambda r: e1(r) + e2(r)  # noqa: E731
    vo = lambda r: o1(r) + o2(r)  # noqa: E731
    _sign_checks(rep, "V_N", vn)
    _sign_checks(rep, "V_O", vo)
    lo = _rho(LOW_DB)
    rep.close(f"V_N -> 0 at {LOW_DB:g} dB", 0.0, vn(lo), 1.0, floor=NEAR_ZERO)
    rep.close(f"V_O -> 0 at {LOW_DB:g} dB", 0.0, vo(lo), 1.0, floor=NEAR_ZERO)
    rep.close(f"dV_N/drho at {LOW_DB:g} dB", (pa.p1 * MEAN_WEAK + pa.p2 * MEAN_STRONG) / LN2, d_ec_drho(vn, lo), 0.05)
    rep.close(f"dV_O/drho at {LOW_DB:g} dB", (MEAN_WEAK + MEAN_STRONG) / (2 * LN2), d_ec_drho(vo, lo), 0.05)
    hi = _rho(HIGH_DB[0])
    rep.at_most("dV_N/drho < 1e-3 at 60 dB", 1e-3, d_ec_drho(vn, hi))
    rep.at_most("dV_O/drho < 1e-3 at 60 dB", 1e-3, d_ec_drho(vo, hi))
    return rep


def find_crossover(
    user: User,
    pa: PowerAllocation,
    beta1: float = -1.0,
    beta2: float = -1.0,
    bracket_db: tuple[float, float] = (0.0, 40.0),
    tol_db: float = 0.1,
) -> CrossoverResult:
    """Bisect the NOMA-minus-OMA gap for a sign change inside ``bracket_db``.

    Returns a result with ``rho_star_db=None`` when the gap has the same
    sign at both ends of the bracket.
    """
    lo, hi = map(float, bracket_db)
    if not lo < hi:
        raise DomainError("bracket must be (low_db, high_db) with low < high")
    gap = gap_function(user, pa, beta1, beta2)
    g_lo, g_hi = gap(_rho(lo)), gap(_rho(hi))
    if g_lo == 0.0:
        return CrossoverResult(user, lo, (lo, lo), 0.0, g_lo, g_hi)
    if g_hi == 0.0:
        return CrossoverResult(user, hi, (hi, hi), 0.0, g_lo, g_hi)
    if (g_lo > 0) == (g_hi > 0):
        return CrossoverResult(user, None, (lo, hi), None, g_lo, g_hi)
    a, b, ga = lo, hi, g_lo
    while b - a > tol_db:
        mid = 0.5 * (a + b)
        gm = gap(_rho(mid))
        if gm == 0.0:
            a = b = mid
            break
        if (gm > 0) == (ga > 0):
            a, ga = mid, gm
        else:
            b = mid
    root = 0.5 * (a + b)
    return CrossoverResult(user, root, (a, b), gap(_rho(root)), g_lo, g_hi)


def select_scheme(user: int, snr: Snr | float, pa: PowerAllocation, beta1: float = -1.0,
                  beta2: float = -1.0) -> tuple[str, float]:
    """Scheme with the larger per-user EC at this operating point; ties go to NOMA.

    Returns:
        (scheme, gap) with gap = NOMA EC - OMA EC.
    """
    if user not in (1, 2):
        raise DomainError("user must be 1 or 2")
    rho = snr.rho if isinstance(snr, Snr) else float(snr)
    g = gap_function(user, pa, beta1, beta2)(rho)
    return ("NOMA" if g >= 0 else "OMA"), g


def check_all(pa: PowerAllocation, beta1: float = -1.0, beta2: float = -1.0) -> list[LemmaReport]:
    return [
        check_lemma1(pa, beta1, beta2),
        check_lemma2(pa, beta1),
        check_lemma3(pa, beta2),
        check_lemma4(pa, beta1, beta2),
    ]


def format_report(rep: LemmaReport) -> str:
    lines = [f"Lemma {rep.lemma_id}: {'PASS' if rep.overall else 'FAIL'}"]
    for c in rep.checks:
        flag = "ok  " if c.passed else "FAIL"
        lines.append(f"  [{flag}] {c.name}: expected {c.expected:.6g}, observed {c.observed:.6g}, tol {c.tolerance:.3g}")
    lines += [f"  note: {n}" for n in rep.notes]
    return "\n".join(lines)
