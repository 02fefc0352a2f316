import math

import pytest

from nomaec.analysis import (
    CrossoverResult,
    LemmaReport,
    check_lemma1,
    check_lemma2,
    check_lemma3,
    check_lemma4,
    d_ec_drho,
    ec_function,
    find_crossover,
    format_report,
    gap_function,
    select_scheme,
)
from nomaec.capacity import LN2, PowerAllocation, Snr
from nomaec.errors import DomainError

PA = PowerAllocation(0.2)


def _check(report: LemmaReport, prefix: str):
    matches = [c for c in report.checks if c.name.startswith(prefix)]
    assert len(matches) == 1, [c.name for c in report.checks]
    return matches[0]


# ------------------------------------------------------------ derivatives


def test_derivative_of_constant():
    assert d_ec_drho(lambda r: 3.0, 5.0) == 0.0


def test_derivative_of_log():
    assert d_ec_drho(lambda r: math.log2(1 + r), 1.0) == pytest.approx(1 / (2 * LN2), rel=1e-10)


def test_derivative_needs_positive_rho():
    with pytest.raises(DomainError):
        d_ec_drho(lambda r: r, 0.0)


def test_weak_user_ec_nondecreasing():
    f = ec_function("ec1_noma", PA, -1.0)
    for db in (-30.0, 0.0, 30.0):
        assert d_ec_drho(f, Snr.from_db(db).rho) >= -1e-10


# ------------------------------------------------------------ lemma reports


@pytest.mark.parametrize("p1, beta", [(0.2, -1.0), (0.2, -2.0), (0.5, -1.0)])
def test_lemma1_passes(p1, beta):
    rep = check_lemma1(PowerAllocation(p1), beta, beta)
    assert rep.overall, format_report(rep)


def test_lemma2_low_snr_constant():
    c = _check(check_lemma2(PA, -1.0), "d(gap)/drho at -40 dB")
    assert c.expected == pytest.approx(-0.3 * 0.5 / LN2, rel=1e-12)
    assert c.passed


def test_lemma2_equal_split_expects_zero():
    rep = check_lemma2(PowerAllocation(0.5), -1.0)
    c = _check(rep, "d(gap)/drho at -40 dB")
    assert c.expected == 0.0 and c.passed
    assert any("gap trend" in n for n in rep.notes)


def test_lemma3_low_snr_constant():
    rep = check_lemma3(PA, -1.0)
    c = _check(rep, "d(gap)/drho at -40 dB")
    assert c.expected == pytest.approx(0.3 * 1.5 / LN2, rel=1e-12)
    assert c.passed
    for db in ("40", "60"):
        assert _check(rep, f"d(gap)/drho at {db} dB").passed


def test_lemma4_passes():
    rep = check_lemma4(PA, -1.0, -1.0)
    assert rep.overall, format_report(rep)


def test_report_serializes():
    rep = LemmaReport(9)
    rep.close("x", 1.0, 1.01, 0.05)
    rep.at_most("y", 1.0, 2.0)
    d = rep.as_dict()
    assert d["overall"] is False and len(d["checks"]) == 2
    assert "FAIL" in format_report(rep)


# ------------------------------------------------------------ crossover / scheme choice


@pytest.mark.parametrize(
    "user, rho_db, expected",
    [(1, 5.0, "OMA"), (1, 30.0, "NOMA"), (2, 30.0, "OMA")],
)
def test_select_scheme_examples(user, rho_db, expected):
    scheme, gap = select_scheme(user, Snr.from_db(rho_db), PA, -1.0, -1.0)
    assert scheme == expected
    assert (gap >= 0) == (scheme == "NOMA")


def test_crossover_consistent_with_scheme_choice():
    res = find_crossover(1, PA, -2.0, -2.0)
    assert res.found
    lo, hi = res.bracket
    assert hi - lo <= 0.1
    below, _ = select_scheme(1, Snr.from_db(lo - 0.5), PA, -2.0, -2.0)
    above, _ = select_scheme(1, Snr.from_db(hi + 0.5), PA, -2.0, -2.0)
    assert (below, above) == ("OMA", "NOMA")
    assert gap_function(1, PA, -2.0, -2.0)(Snr.from_db(lo).rho) < 0 < gap_function(1, PA, -2.0, -2.0)(
        Snr.from_db(hi).rho)


def test_no_crossover_is_a_result():
    res = find_crossover(2, PA, -1.0, -1.0, bracket_db=(-20.0, 0.0))
    assert isinstance(res, CrossoverResult)
    assert not res.found and res.rho_star_db is None
    assert res.gap_low > 0 and res.gap_high > 0


def test_crossover_bracket_validation():
    with pytest.raises(DomainError):
        find_crossover(1, PA, bracket_db=(10.0, 0.0))
    with pytest.raises(DomainError):
        gap_function(3, PA, -1.0, -1.0)
