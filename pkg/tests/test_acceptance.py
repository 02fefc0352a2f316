"""Acceptance criteria, one test per criterion (split where a criterion has parts).

Each test records a PASS/FAIL line; the lines are repeated in the pytest
terminal summary under "acceptance criteria". Tolerances are the stated
ones and are not tuned to the observed numbers.
"""

import math
import time

import numpy as np
import pytest

from nomaec import cli
from nomaec.analysis import d_ec_drho, find_crossover, gap_function
from nomaec.capacity import (
    LN2,
    PowerAllocation,
    Snr,
    all_ecs,
    ec1_noma_closed,
    ec1_noma_quadrature,
    ec2_high_snr_limit,
    ec2_noma_closed,
    ec2_noma_quadrature,
    ec_noma,
    ec_oma_closed,
    ec_oma_quadrature,
    ergodic_rate,
    rate_noma,
    simulate_ecs,
    sum_ec,
)
from nomaec.channel import ChannelRng, OrderedChannelPair, sample_pairs
from nomaec.errors import AccuracyFailure

PA = PowerAllocation(0.2)
GRID_DB = (-40.0, -10.0, 0.0, 10.0, 40.0)
GRID_BETA = (-1.0, -2.0, -3.0)
GRID_P1 = (0.2, 0.5)


def _rho(db):
    return Snr.from_db(db).rho


def _rel(observed, expected):
    return abs(observed - expected) / abs(expected)


# ------------------------------------------------------------------ 1


def test_criterion_01_closed_forms_match_quadrature(acceptance_line):
    t0 = time.perf_counter()
    worst = 0.0
    fallbacks = mismatches = 0
    for db in GRID_DB:
        snr = Snr.from_db(db)
        for beta in GRID_BETA:
            for p1 in GRID_P1:
                pa = PowerAllocation(p1)
                pairs = [
                    (ec1_noma_closed(snr, pa, beta), ec1_noma_quadrature(snr, pa, beta)),
                    (ec_oma_closed(snr, beta, 1), ec_oma_quadrature(snr, beta, 1)),
                    (ec_oma_closed(snr, beta, 2), ec_oma_quadrature(snr, beta, 2)),
                ]
                quad2 = ec2_noma_quadrature(snr, pa, beta)
                try:
                    pairs.append((ec2_noma_closed(snr, pa, beta), quad2))
                except AccuracyFailure:
                    # documented-discrepancy path: the closed form refuses and
                    # the dispatcher serves the quadrature value with a note
                    served = ec_noma(2, snr, pa, beta, "closed_form")
                    if served.note and served.value == quad2.value:
                        fallbacks += 1
                    else:
                        mismatches += 1
                for closed, quad in pairs:
                    diff = abs(closed.value - quad.value)
                    worst = max(worst, diff)
                    mismatches += diff > 1e-6
    elapsed = time.perf_counter() - t0
    ok = mismatches == 0 and elapsed < 60.0
    acceptance_line(
        "criterion 1 (closed form vs quadrature)", ok,
        f"30 points, max |diff| {worst:.2e} (tol 1e-6), {fallbacks} EC2 points via documented fallback, "
        f"{mismatches} mismatches, {elapsed:.1f} s (limit 60 s)")


# ------------------------------------------------------------------ 2


def test_criterion_02_monte_carlo_consistency(acceptance_line):
    t0 = time.perf_counter()
    grid_db = (-10.0, 0.0, 10.0, 20.0, 40.0)
    agree = total = 0
    worst_z = 0.0
    for db in grid_db:
        snr = Snr.from_db(db)
        for beta in GRID_BETA:
            for p1 in GRID_P1:
                pa = PowerAllocation(p1)
                mc = simulate_ecs(snr, pa, beta, beta, 10**6, seed=2718, stream_id=total)
                quad = all_ecs(snr, pa, beta, beta, "quadrature")
                z = max(abs(mc[k].value - quad[k].value) / mc[k].std_error for k in quad)
                worst_z = max(worst_z, z)
                agree += z <= 3.0
                total += 1
    elapsed = time.perf_counter() - t0
    ok = total == 30 and agree / total >= 0.95 and elapsed < 120.0
    acceptance_line(
        "criterion 2 (Monte Carlo vs quadrature)", ok,
        f"{agree}/{total} points with all four ECs within 3 std errors (need 95%), "
        f"largest |z| {worst_z:.2f}, {elapsed:.1f} s (limit 120 s)")


# ------------------------------------------------------------------ 3


def test_criterion_03_strong_user_ceiling(acceptance_line):
    limit = ec2_high_snr_limit(PA, -1.0)
    e2 = ec2_noma_quadrature(Snr.from_db(60.0), PA, -1.0).value
    e1 = [ec1_noma_quadrature(Snr.from_db(db), PA, -1.0).value for db in np.linspace(60.0, 70.0, 6)]
    increasing = bool(np.all(np.diff(e1) > 0))
    ok = _rel(e2, limit) < 0.01 and increasing
    acceptance_line(
        "criterion 3 (strong-user ceiling)", ok,
        f"EC2(60 dB) {e2:.6f} vs limit {limit:.6f} (rel {_rel(e2, limit):.2e}, tol 1e-2); "
        f"EC1 strictly increasing 60..70 dB: {increasing}")


# ------------------------------------------------------------------ 4


def test_criterion_04_low_snr_gap_slopes(acceptance_line):
    x1, x2 = sample_pairs(ChannelRng(31), 10**6)
    m1, m2 = float(x1.mean()), float(x2.mean())
    moments_ok = _rel(m1, 0.5) < 0.01 and _rel(m2, 1.5) < 0.01
    rho = _rho(-40.0)
    s1 = d_ec_drho(gap_function(1, PA, -1.0, -1.0), rho)
    s2 = d_ec_drho(gap_function(2, PA, -1.0, -1.0), rho)
    c1 = (PA.p1 - 0.5) * 0.5 / LN2
    c2 = (PA.p2 - 0.5) * 1.5 / LN2
    ok = moments_ok and _rel(s1, c1) < 0.05 and _rel(s2, c2) < 0.05
    acceptance_line(
        "criterion 4 (low-SNR gap slopes)", ok,
        f"user 1 {s1:.6f} vs {c1:.6f} (rel {_rel(s1, c1):.1e}), user 2 {s2:.6f} vs {c2:.6f} "
        f"(rel {_rel(s2, c2):.1e}), tol 5%; MC moments E[x1]={m1:.4f}, E[x2]={m2:.4f} (tol 1%)")


# ------------------------------------------------------------------ 5


@pytest.mark.parametrize("user, sign", [(1, +1.0), (2, -1.0)])
def test_criterion_05_high_snr_gap_slope(acceptance_line, user, sign):
    rho = _rho(40.0)
    slope = d_ec_drho(gap_function(user, PA, -1.0, -1.0), rho)
    expected = sign / (2 * rho * LN2)
    acceptance_line(
        f"criterion 5 (high-SNR gap slope, user {user})", _rel(slope, expected) < 0.10,
        f"slope at 40 dB {slope:.6e} vs {expected:.6e} (ratio {slope / expected:.3f}, tol 10%)")


# ------------------------------------------------------------------ 6


def test_criterion_06_sum_slopes(acceptance_line):
    def v(scheme):
        return lambda r: sum_ec(r, PA, -1.0, -1.0, scheme).value

    low, high = _rho(-40.0), _rho(60.0)
    vn, vo = d_ec_drho(v("NOMA"), low), d_ec_drho(v("OMA"), low)
    cn = (PA.p1 * 0.5 + PA.p2 * 1.5) / LN2
    co = (0.5 * 0.5 + 0.5 * 1.5) / LN2
    hn, ho = d_ec_drho(v("NOMA"), high), d_ec_drho(v("OMA"), high)
    ok = _rel(vn, cn) < 0.05 and _rel(vo, co) < 0.05 and abs(hn) < 1e-3 and abs(ho) < 1e-3
    acceptance_line(
        "criterion 6 (sum EC slopes)", ok,
        f"V_N {vn:.5f} vs {cn:.5f}, V_O {vo:.5f} vs {co:.5f} (tol 5%); "
        f"slopes at 60 dB {hn:.2e}, {ho:.2e} (limit 1e-3)")


# ------------------------------------------------------------------ 7


@pytest.mark.parametrize(
    "label, user, beta, lo, hi",
    [
        ("user 1, beta=-1", 1, -1.0, 13.0, 17.0),
        ("user 1, beta=-2", 1, -2.0, 23.0, 27.0),
        ("sum, beta=-1", "sum", -1.0, 18.0, 27.0),
    ],
)
def test_criterion_07_crossings(acceptance_line, label, user, beta, lo, hi):
    res = find_crossover(user, PA, beta, beta, bracket_db=(0.0, 40.0))
    ok = res.found and lo <= res.rho_star_db <= hi
    where = f"{res.rho_star_db:.2f} dB" if res.found else "no crossing in [0, 40] dB"
    acceptance_line(f"criterion 7 (crossing, {label})", ok, f"{where}, required [{lo:g}, {hi:g}] dB")


# ------------------------------------------------------------------ 8


def test_criterion_08_monotonicity(acceptance_line):
    names = ("ec1_noma", "ec2_noma", "ec1_oma", "ec2_oma")
    rho_grid = np.linspace(-40.0, 60.0, 20)
    by_rho = [all_ecs(Snr.from_db(db), PA, -1.0, -1.0) for db in rho_grid]
    rho_ok = all(np.all(np.diff([e[k].value for e in by_rho]) >= -1e-10) for k in names)

    beta_grid = (-4.0, -3.0, -2.0, -1.5, -1.0, -0.75, -0.5, -0.25)
    by_beta = [all_ecs(Snr.from_db(10.0), PA, b, b) for b in beta_grid]
    beta_ok = all(np.all(np.diff([e[k].value for e in by_beta]) >= -1e-10) for k in names)

    ergodic_ok = True
    for db, ecs in zip(rho_grid, by_rho):
        snr = Snr.from_db(db)
        bounds = (ergodic_rate(snr, PA, 1), ergodic_rate(snr, PA, 2),
                  ergodic_rate(snr, None, 1, "OMA"), ergodic_rate(snr, None, 2, "OMA"))
        ergodic_ok &= all(ecs[k].value <= b for k, b in zip(names, bounds))
    acceptance_line(
        "criterion 8 (monotonicity)", rho_ok and beta_ok and ergodic_ok,
        f"nondecreasing in rho on 20 points: {rho_ok}; in beta on 8 points: {beta_ok}; "
        f"EC <= ergodic rate on all 80 checks: {ergodic_ok}")


# ------------------------------------------------------------------ 9


def test_criterion_09_sic_identity(acceptance_line):
    rng = np.random.default_rng(99)
    x1, x2 = sample_pairs(ChannelRng(99), 10**4)
    rho_db = rng.uniform(-40.0, 80.0, 10**4)
    p1 = rng.uniform(0.01, 0.99, 10**4)
    worst = 0.0
    for a, b, db, p in zip(x1, x2, rho_db, p1):
        snr, pa, pair = Snr.from_db(db), PowerAllocation(p), OrderedChannelPair(a, b)
        total = rate_noma(snr, pa, pair, 1) + rate_noma(snr, pa, pair, 2)
        direct = math.log2(1 + snr.rho * pa.p1 * a + snr.rho * pa.p2 * b)
        worst = max(worst, abs(total - direct))
    acceptance_line("criterion 9 (SIC identity)", worst <= 1e-12,
                    f"max |R1 + R2 - log2(1 + rho P1 x1 + rho P2 x2)| = {worst:.2e} over 10^4 draws (tol 1e-12)")


# ------------------------------------------------------------------ 10


def test_criterion_10_determinism(acceptance_line, tmp_path):
    runs = {}
    for method, extra in (("monte_carlo", ["--samples", "20000"]), ("quadrature", [])):
        for i, workers in enumerate(("1", "4", "1")):
            path = tmp_path / f"{method}{i}.csv"
            argv = ["sweep", "--rho-db=-10,10,30", "--beta1=-1,-2", "--p1=0.2,0.4", "--method", method,
                    "--seed", "123", "--workers", workers, "-o", str(path)] + extra
            assert cli.main(argv) == 0
            runs.setdefault(method, []).append(path.read_bytes())
    ok = all(len(set(v)) == 1 for v in runs.values())
    acceptance_line("criterion 10 (determinism)", ok,
                    "repeated sweeps with workers 1, 4, 1 are byte-identical for monte_carlo and quadrature: "
                    f"{ok}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
