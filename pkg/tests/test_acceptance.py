"""Acceptance criteria 1 to 11 at their stated tolerances.

Each criterion is computed once per session and prints one PASS/FAIL line.
Criteria 4 and 9 contain sub-claims that do not hold numerically (see the
decisions ledger); their full assertions are kept as strict xfails and the
sub-parts that do hold are asserted separately.
"""

from functools import lru_cache

import numpy as np
import pytest

from revtorus import checks
from revtorus.profile import canonical_profile


@lru_cache(maxsize=None)
def _shared():
    p = canonical_profile()
    ball, vol = checks.two_route_volume(p)
    return p, ball, vol, checks.canonical_field(p)


@lru_cache(maxsize=None)
def result(k):
    p, ball, vol, fld = _shared() if k in (7, 8, 10) else (canonical_profile(),) + (None,) * 3
    if k == 7:
        return checks.criterion_7(p, fld, vol.quadrature)
    if k == 8:
        return checks.criterion_8(p, fld, ball)
    if k == 10:
        return checks.criterion_10(p, fld)
    if k == 11:
        return checks.criterion_11()
    return getattr(checks, f"criterion_{k}")(p)


_printed = set()


def report(k, capsys):
    res = result(k)
    if k not in _printed:
        _printed.add(k)
        with capsys.disabled():
            print("\n" + res.line())
    return res


def test_criterion_1_conservation(capsys):
    r = report(1, capsys)
    m = r.measured
    assert m["samples"] == 50
    assert m["max_energy_error"] < 1e-8
    assert m["max_clairaut_drift"] < 1e-8
    assert r.seconds < 60
    assert r.passed


def test_criterion_2_orbit_classification(capsys):
    r = report(2, capsys)
    m = r.measured
    assert m["hyperbolic_lambda"] > 1
    assert m["random_agree"] == m["random_total"] == 20
    assert m["max_det_error"] < 1e-6
    assert r.seconds < 120
    assert r.passed


def test_criterion_3_action_angle_oracle(capsys):
    r = report(3, capsys)
    m = r.measured
    assert m["max_rel_err_tau"] < 1e-7
    assert m["max_rel_err_phi"] < 1e-7
    assert m["factorization_error"] < 1e-6
    assert r.seconds < 60
    assert r.passed


def test_criterion_4_minors_superlinearity_and_f(capsys):
    r = report(4, capsys)
    m = r.measured
    assert m["minors_positive"] and m["min_det"] > 0 and m["min_ddg"] > 0
    assert m["superlinear"] and m["ratio_max"] <= m["k"] * (1 + 1e-12)
    assert m["f_increasing_concave"]
    assert m["identity_error"] < 1e-9
    assert r.seconds < 60


@pytest.mark.xfail(strict=True, reason="f~ = f o exp is convex for u > 2 q1; see ledger")
def test_criterion_4_full(capsys):
    r = report(4, capsys)
    m = r.measured
    assert m["f_tilde_points"] == 50
    assert m["f_tilde_concave_points"] == m["f_tilde_points"]
    assert m["minors_positive"] and m["superlinear"] and m["f_increasing_concave"]
    assert r.passed


def test_criterion_5_asymptotic_laws(capsys):
    r = report(5, capsys)
    m = r.measured
    assert m["min_r2"] > 0.999
    assert m["ratio_gap"] < 0.01
    assert r.seconds < 60
    assert r.passed


def test_criterion_6_two_route_volume(capsys):
    r = report(6, capsys)
    m = r.measured
    assert m["profiles"] == 6
    assert m["max_rel_gap"] < 1e-3
    assert m["convex"] and m["doubly_symmetric"]
    assert r.seconds < 120
    assert r.passed


def test_criterion_7_ball_volume(capsys):
    r = report(7, capsys)
    m = r.measured
    assert abs(m["flat_ratio"] - np.pi) / np.pi < 0.02
    assert m["v_g"] == pytest.approx(8 * np.pi**2, rel=1e-12)
    assert m["rel_gap"] < 0.10
    assert m["spread"] < 0.10
    assert r.seconds < 600
    assert r.passed


def test_criterion_8_stable_norm_cross_check(capsys):
    r = report(8, capsys)
    m = r.measured
    assert m["gap_s"] < 0.02
    assert m["gap_phi"] < 0.02
    assert r.seconds < 600
    assert r.passed


def test_criterion_9_calibration_and_inequality(capsys):
    r = report(9, capsys)
    m = r.measured
    assert 0.8 <= m["h_flat"] <= 1.2
    assert m["h_rank0"] < 0.3
    assert m["theorem1_margin_revolution"] >= 0
    assert m["theorem1_margin_flat"] >= 0
    assert r.seconds < 900


@pytest.mark.xfail(strict=True, reason="uniform samples resolve only the t^1 twist; see ledger")
def test_criterion_9_full(capsys):
    r = report(9, capsys)
    m = r.measured
    assert 0.8 <= m["h_flat"] <= 1.2
    assert 1.6 <= m["h_revolution"] <= 2.4
    assert m["h_rank0"] < 0.3
    assert m["h_revolution"] + 1 + 0.3 >= m["tau_revolution"]
    assert m["h_flat"] + 1 + 0.3 >= m["tau_flat"]
    assert r.passed


def test_criterion_10_group_growth(capsys):
    r = report(10, capsys)
    m = r.measured
    assert abs(m["z2_standard"] - 2) <= 0.05
    assert abs(m["z2_alternate"] - 2) <= 0.05
    assert abs(m["z3"] - 3) <= 0.1
    assert m["witness"] != "None"
    assert r.seconds < 120
    assert r.passed


def test_criterion_11_determinism(capsys):
    r = report(11, capsys)
    assert r.measured["csv_files"] > 0
    assert r.passed
