import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from revtorus.dynamics import (CotangentState, LevelState, apply_zeta, embed_level,
                               hamiltonian, integrate, level_jacobian, level_of,
                               level_vector_field, vector_field)

TWO_PI = 2 * np.pi

level_states = st.builds(LevelState, st.floats(0, 1), st.floats(0, 1),
                         st.floats(0, TWO_PI), st.floats(0.05, 4.0))


def test_hamiltonian_examples(canon):
    assert hamiltonian(canon, CotangentState(0, 0, 0, TWO_PI)) == pytest.approx(0.5)
    assert hamiltonian(canon, CotangentState(0, 0.5, TWO_PI, 0)) == pytest.approx(0.5)
    assert hamiltonian(canon, CotangentState(0.3, 0.2, 0, 0)) == 0


def test_embed_examples(canon):
    z = embed_level(canon, LevelState(0, 0, 0, 0.5))
    np.testing.assert_allclose(z.as_array(), [0, 0, 6 * np.pi, 0], atol=1e-14)
    z = embed_level(canon, LevelState(0, 0, np.pi / 2, 0.5))
    np.testing.assert_allclose(z.as_array(), [0, 0, 0, TWO_PI], atol=1e-14)


@given(level_states)
def test_embedding_lands_on_level(ls):
    from revtorus.profile import canonical_profile
    p = canonical_profile()
    z = embed_level(p, ls)
    assert hamiltonian(p, z) == pytest.approx(ls.e, rel=1e-14)
    back = level_of(p, z)
    assert np.cos(back.theta - ls.theta) == pytest.approx(1.0, abs=1e-12)


def test_level_field_examples(canon):
    v = level_vector_field(canon, 0.5, 0.0, 0.5)
    np.testing.assert_allclose(v, [1 / TWO_PI, 0, 0], atol=1e-15)
    assert level_vector_field(canon, 0.0, np.pi / 2, 0.5)[1] == pytest.approx(1 / TWO_PI)


def _pushforward(p, ls, h=1e-4):
    """Fourth-order centered difference of the level coordinates along the 4D field."""
    z = embed_level(p, ls).as_array()
    X = vector_field(p, z)

    def coords(w):
        q = level_of(p, CotangentState.from_array(w))
        return np.array([q.phi_bar, q.s_bar, q.theta])

    def diff(k):
        d = coords(z + k * h * X) - coords(z - k * h * X)
        d[2] = (d[2] + np.pi) % TWO_PI - np.pi
        return d

    return (8 * diff(1) - diff(2)) / (12 * h)


@given(level_states, st.integers(0, 4))
def test_level_field_matches_pushforward(ls, seed):
    from revtorus.profile import random_profile
    p = random_profile(np.random.default_rng(seed))
    v = np.array(level_vector_field(p, ls.s_bar, ls.theta, ls.e))
    fd = _pushforward(p, ls)
    # Relative to the field's magnitude: single components may vanish.
    assert np.max(np.abs(fd - v)) < 1e-8 * max(np.linalg.norm(v), 1e-300) + 1e-12


def test_level_jacobian_finite_differences(randoms):
    p = randoms[1]
    h = 1e-6
    for s, th in [(0.1, 0.3), (0.7, 2.0), (0.45, -1.2)]:
        J = level_jacobian(p, s, th, 0.5)
        f = lambda y: np.array(level_vector_field(p, y[1], y[2], 0.5))
        y = np.array([0.0, s, th])
        fd = np.column_stack([(f(y + h * e) - f(y - h * e)) / (2 * h) for e in np.eye(3)])
        np.testing.assert_allclose(J, fd, atol=1e-7 * np.abs(J).max())


def test_meridian_geodesic(canon):
    tr = integrate(canon, CotangentState(0, 0, 0, TWO_PI), TWO_PI, sample_step=TWO_PI / 4)
    assert tr.states[-1, 1] == pytest.approx(1.0, abs=1e-8)
    assert tr.states[-1, 0] == 0


def test_critical_circle_is_invariant(canon):
    tr = integrate(canon, LevelState(0, 0.5, 0, 0.5), 100.0)
    lv = [level_of(canon, CotangentState.from_array(z)) for z in tr.states]
    assert max(abs(q.s_bar - 0.5) for q in lv) < 1e-8
    assert max(abs(np.sin(q.theta)) for q in lv) < 1e-8


def test_generic_conservation(canon):
    rng = np.random.default_rng(11)
    for _ in range(3):
        ls = LevelState(*rng.uniform(0, 1, 2), rng.uniform(0, TWO_PI), 0.5)
        tr = integrate(canon, ls, 100.0, tol=1e-10)
        assert tr.max_energy_drift < 1e-8
        assert tr.max_clairaut_drift < 1e-8


def test_zeta_is_involution():
    z = CotangentState(0, 0, 1, 2)
    assert apply_zeta(z) == CotangentState(0, 0, -1, -2)
    assert apply_zeta(apply_zeta(z)) == z


def test_zeta_conjugates_forward_and_backward(randoms):
    p = randoms[2]
    z = embed_level(p, LevelState(0.2, 0.3, 0.9, 0.5))
    fwd = integrate(p, apply_zeta(z), 10.0, tol=1e-11)
    bwd = integrate(p, z, 10.0, tol=1e-11, backward=True)
    zb = np.array([apply_zeta(CotangentState.from_array(w)).as_array() for w in bwd.states])
    np.testing.assert_allclose(fwd.states, zb, atol=1e-7)


def test_time_reversal_same_curve(randoms):
    p = randoms[0]
    z = embed_level(p, LevelState(0.0, 0.1, 2.2, 0.5))
    T = 10.0
    a = integrate(p, z, T, tol=1e-11, sample_step=0.5)
    end = a.final()
    b = integrate(p, apply_zeta(end), T, tol=1e-11, sample_step=0.5)
    np.testing.assert_allclose(a.states[::-1, :2], b.states[:, :2], atol=1e-6)


def test_level_and_4d_agree(randoms):
    p = randoms[3]
    ls = LevelState(0.4, 0.8, 0.5, 0.5)
    a = integrate(p, ls, 20.0, tol=1e-11, level=True)
    b = integrate(p, ls, 20.0, tol=1e-11)
    np.testing.assert_allclose(a.states, b.states, atol=1e-6)


def test_trajectory_csv(tmp_path, canon):
    tr = integrate(canon, LevelState(0, 0.2, 1.0, 0.5), 1.0, sample_step=0.5)
    path = tmp_path / "t.csv"
    tr.write_csv(path)
    lines = path.read_text().split("\n")
    assert lines[0] == "t,phi,s,pPhi,pS,H"
    assert len(lines) == 5 and lines[-1] == ""
    assert float(lines[1].split(",")[5]) == pytest.approx(0.5, rel=1e-14)
