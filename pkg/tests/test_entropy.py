import numpy as np
import pytest

from revtorus.entropy import (DEFAULT_EPS, FlowSampleSet, SeparationIndex, ambient_distance,
                              dyn_distance, flat_geodesic_flow, kronecker_flow,
                              poly_entropy_estimate, rank_one_flow, sample_linear,
                              sample_revolution, separated_count, sobol_states,
                              theorem_one_check)
from revtorus.errors import InequalityViolated, Saturated, ValidationError

TWO_PI = 2 * np.pi


@pytest.fixture(scope="module")
def rev_small(canon):
    return sample_revolution(canon, n=200, t_max=20.0, seed=1)


def test_sobol_deterministic():
    a, b = sobol_states(100, 5), sobol_states(100, 5)
    np.testing.assert_array_equal(a, b)
    assert a.shape == (100, 3) and np.all((a >= 0) & (a < 1))
    assert not np.array_equal(a, sobol_states(100, 6))


def test_time_grid_validation():
    with pytest.raises(ValidationError):
        sample_linear(kronecker_flow(), n=4, t_max=1.23)


def test_revolution_samples_on_level(canon, rev_small):
    assert rev_small.coords.shape == (41, 200, 3)
    np.testing.assert_allclose(np.diff(rev_small.times), 0.5)
    assert np.all((rev_small.coords >= 0) & (rev_small.coords < 1))


def test_rk4_matches_reference(canon, rev_small):
    from scipy.integrate import solve_ivp
    from revtorus.dynamics import level_vector_field
    u = sobol_states(200, 1)[7]
    y0 = [u[0], u[1], TWO_PI * u[2]]
    sol = solve_ivp(lambda t, y: np.array(level_vector_field(canon, y[1], y[2], 0.5)),
                    (0, 20), y0, method="DOP853", rtol=1e-12, atol=1e-12)
    ref = np.mod([sol.y[0, -1], sol.y[1, -1], sol.y[2, -1] / TWO_PI], 1.0)
    assert np.max(ambient_distance(rev_small.coords[-1, 7], ref)) < 1e-5


def test_dyn_distance_properties(rev_small):
    assert dyn_distance(rev_small, 3, 3, 20.0) == 0.0
    d0 = dyn_distance(rev_small, 3, 9, 0.0)
    assert d0 == pytest.approx(float(ambient_distance(rev_small.coords[0, 3],
                                                      rev_small.coords[0, 9])))
    rng = np.random.default_rng(0)
    ts = np.linspace(0, 20, 9)
    for i, j in rng.integers(0, 200, size=(100, 2)):
        d = [dyn_distance(rev_small, i, j, t) for t in ts]
        assert np.all(np.diff(d) >= 0)
    with pytest.raises(ValidationError):
        dyn_distance(rev_small, 0, 1, 21.0)


def test_ambient_distance_wraps():
    assert ambient_distance([0.05, 0.0, 0.0], [0.95, 0.0, 0.0]) == pytest.approx(0.1)
    assert ambient_distance([0.0, 0.0, 0.2], [0.0, 0.0, 0.7]) == pytest.approx(0.5)


def test_large_eps_gives_one(rev_small):
    assert separated_count(rev_small, 20.0, 0.51) == 1


def test_duplicates_leave_count_unchanged(rev_small):
    dup = FlowSampleSet(rev_small.times, np.repeat(rev_small.coords, 2, axis=1))
    for t in (0.0, 5.0, 20.0):
        assert separated_count(dup, t, 0.2) == separated_count(rev_small, t, 0.2)


def test_separated_set_is_separated(rev_small):
    idx = SeparationIndex(rev_small, [0.2])
    acc = idx.separated(10.0, 0.2)
    for a in range(len(acc)):
        for b in range(a + 1, len(acc)):
            assert dyn_distance(rev_small, acc[a], acc[b], 10.0) >= 0.2
    # Maximality: every sample is within eps of an accepted one.
    for i in range(rev_small.n):
        assert min(dyn_distance(rev_small, i, j, 10.0) for j in acc) < 0.2 or i in acc


def test_bracketing_and_monotone_table(rev_small):
    idx = SeparationIndex(rev_small, [0.4, 0.2, 0.1])
    tab = idx.table([1.0, 2.0, 5.0, 10.0, 20.0], with_cover=True)
    assert np.all(np.diff(tab.counts, axis=1) >= 0)
    # Rows ordered by decreasing eps.
    assert np.all(np.diff(tab.counts, axis=0) >= 0)
    S = dict(zip(tab.eps, tab.counts))
    G = dict(zip(tab.eps, tab.cover))
    for e in (0.2, 0.1):
        assert np.all(S[2 * e] <= G[e]) and np.all(G[e] <= S[e])
    with pytest.raises(ValidationError):
        idx.separated_count(1.0, 0.3)


def test_eps_must_be_positive(rev_small):
    with pytest.raises(ValidationError):
        SeparationIndex(rev_small, [0.1, 0.0])


def test_determinism(canon, tmp_path):
    a = sample_revolution(canon, n=64, t_max=10.0, seed=4)
    b = sample_revolution(canon, n=64, t_max=10.0, seed=4)
    np.testing.assert_array_equal(a.coords, b.coords)
    for k, s in enumerate((a, b)):
        est = poly_entropy_estimate(SeparationIndex(s, [0.4, 0.2]), t_floor=0.5)
        est.table.write_csv(tmp_path / f"t{k}.csv")
        est.write_summary_csv(tmp_path / f"s{k}.csv")
    assert (tmp_path / "t0.csv").read_bytes() == (tmp_path / "t1.csv").read_bytes()
    assert (tmp_path / "s0.csv").read_bytes() == (tmp_path / "s1.csv").read_bytes()
    head = (tmp_path / "s0.csv").read_text().splitlines()[0]
    assert head == "epsilon,slope,r2,hPolEstimate"


def test_rank_one_family_slope():
    s = sample_linear(rank_one_flow(), n=5000, t_max=200.0, seed=0)
    est = poly_entropy_estimate(SeparationIndex(s, DEFAULT_EPS))
    assert 0.8 <= est.h_pol <= 1.2


def test_rank_zero_family_slope():
    s = sample_linear(kronecker_flow((1 / TWO_PI, np.sqrt(2) / TWO_PI)), n=1500,
                      t_max=200.0, seed=0)
    est = poly_entropy_estimate(SeparationIndex(s, DEFAULT_EPS))
    assert 0.0 <= est.h_pol <= 0.3


def test_flat_geodesic_slope():
    s = sample_linear(flat_geodesic_flow(1.0, TWO_PI), n=1500, t_max=200.0, seed=0)
    est = poly_entropy_estimate(SeparationIndex(s, DEFAULT_EPS))
    assert 0.8 <= est.h_pol <= 1.2


def test_explicit_window(rev_small):
    idx = SeparationIndex(rev_small, [0.4])
    est = poly_entropy_estimate(idx, t_window=(1.0, 5.0))
    assert est.windows == ((1.0, 5.0),) and not est.saturated[0]
    # The count reaches N/4 = 50 by t = 20.
    with pytest.raises(Saturated):
        poly_entropy_estimate(idx, t_window=(2.0, 20.0))
    with pytest.raises(ValidationError):
        poly_entropy_estimate(idx, t_window=(2.0, 40.0))


def test_saturated(rev_small):
    # With 200 samples every eps below 0.1 saturates before t = 2.
    with pytest.raises(Saturated):
        poly_entropy_estimate(SeparationIndex(rev_small, [0.02]), t_floor=2.0)


def test_theorem_one():
    assert theorem_one_check(2.0, 2.0).margin == pytest.approx(1.3)
    assert theorem_one_check(2.0, 1.0).margin == pytest.approx(0.3)
    with pytest.raises(InequalityViolated):
        theorem_one_check(3.0, 1.0)
