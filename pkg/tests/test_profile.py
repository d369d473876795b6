import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import brentq

from revtorus.errors import (NotImmersed, NotMorse, NotPositive, RepeatedCriticalValue,
                             ValidationError)
from revtorus.profile import (FlatTorus, TrigSeries, canonical_profile, load_profile,
                              make_profile, profile_from_config, random_profile)

TWO_PI = 2 * np.pi


def test_canonical_critical_points(canon):
    cps = canon.critical_points
    assert [c.kind for c in cps] == ["minimum", "maximum"]
    assert cps[0].s_crit == pytest.approx(0.5, abs=1e-14)
    assert cps[0].x_value == pytest.approx(1.0, abs=1e-14)
    assert cps[1].s_crit == pytest.approx(0.0, abs=1e-14)
    assert cps[1].x_value == pytest.approx(3.0, abs=1e-14)
    assert canon.x1 == pytest.approx(1.0)
    assert canon.rho0(0.5) == pytest.approx(TWO_PI)


@pytest.mark.parametrize("s, expect", [
    (0.0, (3.0, 0.0, -4 * np.pi**2, TWO_PI, TWO_PI)),
    (0.5, (1.0, 0.0, 4 * np.pi**2, -TWO_PI, TWO_PI)),
])
def test_canonical_geometry(canon, s, expect):
    g = canon.geometry(s)
    np.testing.assert_allclose([g.x, g.dx, g.ddx, g.dy, g.r], expect, atol=1e-12)


def test_not_positive():
    with pytest.raises(NotPositive):
        make_profile(TrigSeries(0.0, (1.0,)), TrigSeries(0.0, (), (1.0,)))


def test_not_morse():
    # x' = -2 pi sin(2 pi s)(1 - cos 2 pi s) has a double root at s = 0
    with pytest.raises(NotMorse):
        make_profile(TrigSeries(2.0, (1.0, -0.25)), TrigSeries(0.0, (), (1.0,)))


def test_not_immersed():
    with pytest.raises(NotImmersed):
        make_profile(TrigSeries(2.0, (1.0,)), TrigSeries(0.0))


def test_even_profile_has_repeated_minimum():
    # 2 + cos 2 pi s + 0.3 cos 4 pi s is even: its two minima share one value
    with pytest.raises(RepeatedCriticalValue):
        make_profile(TrigSeries(2.0, (1.0, 0.3)), TrigSeries(0.0, (), (1.0,)))


def _scan_oracle(xs, n=100_000):
    s = np.arange(n + 1) / n
    d = xs.jet(s, 1)[1]
    roots = []
    for i in np.nonzero(np.sign(d[:-1]) * np.sign(d[1:]) < 0)[0]:
        roots.append(brentq(lambda u: xs.jet(u, 1)[1], s[i], s[i + 1], xtol=1e-15))
    return sorted((float(xs(r)), r % 1.0) for r in roots)


def test_two_harmonic_against_scan_oracle():
    xs = TrigSeries(2.0, (1.0,), (0.0, 0.3))
    p = make_profile(xs, TrigSeries(0.0, (), (1.0,)))
    oracle = _scan_oracle(xs)
    got = [(c.x_value, c.s_crit) for c in p.critical_points]
    assert len(got) == 2
    np.testing.assert_allclose(got, oracle, atol=1e-10)


def test_critical_points_alternate(randoms):
    for p in randoms:
        cps = p.critical_points
        assert len(cps) % 2 == 0
        assert [c.x_value for c in cps] == sorted(c.x_value for c in cps)
        kinds = [c.kind for c in sorted(cps, key=lambda c: c.s_crit)]
        assert all(a != b for a, b in zip(kinds, kinds[1:] + kinds[:1]))
        for c in cps:
            assert (c.kind == "minimum") == (c.second_deriv > 0)
            assert abs(p.x_series.jet(c.s_crit, 1)[1]) < 1e-9


@given(st.floats(-10, 10), st.integers(0, 4))
def test_periodicity(s, seed):
    p = random_profile(np.random.default_rng(seed))
    a, b = p.full_jet(s), p.full_jet(s + 1.0)
    np.testing.assert_allclose(a, b, rtol=1e-9, atol=1e-9)


def test_derivatives_against_finite_differences(randoms):
    rng = np.random.default_rng(3)
    h = 1e-6
    for p in randoms:
        s = rng.uniform(0, 1, 1000)
        x, dx, ddx = p.x_series.jet(s, 2)
        fd1 = (p.x(s + h) - p.x(s - h)) / (2 * h)
        fd2 = (p.x_series.jet(s + h, 1)[1] - p.x_series.jet(s - h, 1)[1]) / (2 * h)
        scale1, scale2 = np.abs(dx).max(), np.abs(ddx).max()
        assert np.max(np.abs(fd1 - dx)) < 1e-6 * scale1
        assert np.max(np.abs(fd2 - ddx)) < 1e-6 * scale2


def test_canonical_volume_and_length(canon):
    assert canon.fundamental_volume() == pytest.approx(8 * np.pi**2, rel=1e-12)
    assert canon.meridian_length() == pytest.approx(TWO_PI, rel=1e-12)


def test_flat_torus_from_metric():
    f = FlatTorus.from_metric(1.0, 1.0)
    assert f.fundamental_volume() == pytest.approx(1.0)
    g = f.geometry(0.3)
    assert 4 * np.pi**2 * g.x**2 == pytest.approx(1.0)


def test_config_round_trip(tmp_path, randoms):
    p = randoms[0]
    path = tmp_path / "p.json"
    path.write_text(json.dumps({"profile": p.to_config()}))
    q = load_profile(path)
    assert q.to_config() == p.to_config()
    assert q.critical_points == p.critical_points


def test_config_rejects_unknown_keys():
    with pytest.raises(ValidationError):
        profile_from_config({"x": {"a0": 2, "cos": [1], "tan": [1]}, "y": {"sin": [1]}})
    with pytest.raises(ValidationError):
        profile_from_config({"x": {"a0": 2}})


def test_scaled_profile(canon):
    q = canon.scaled(2.0)
    assert q.x1 == pytest.approx(2.0)
    assert q.fundamental_volume() == pytest.approx(4 * canon.fundamental_volume())


def test_scalar_and_array_jets_agree():
    rng = np.random.default_rng(2)
    p = random_profile(rng, harmonics=3)
    s = rng.uniform(-3, 3, 200)
    arr = p.x_series.jet(s, 3)
    for i, si in enumerate(s):
        one = p.x_series.jet(si, 3)
        for n in range(4):
            assert one[n] == pytest.approx(arr[n][i], rel=1e-13, abs=1e-13 * (2 * np.pi)**n)
