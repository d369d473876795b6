"""Geodesic Hamiltonian flow on a torus of revolution.

Coordinates are ``(phi, s, p_phi, p_s)`` on the universal cover and
``(phi_bar, s_bar, theta)`` on an energy level ``H = e``, with

    p_phi = 2 pi sqrt(2e) x(s_bar) cos(theta),   p_s = sqrt(2e) r(s_bar) sin(theta).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import StepFailure, ValidationError

TWO_PI = 2.0 * np.pi
FOUR_PI2 = 4.0 * np.pi**2


@dataclass(frozen=True)
class CotangentState:
    phi: float
    s: float
    p_phi: float
    p_s: float

    def as_array(self) -> np.ndarray:
        return np.array([self.phi, self.s, self.p_phi, self.p_s], dtype=float)

    @classmethod
    def from_array(cls, z) -> "CotangentState":
        return cls(*(float(v) for v in z))


@dataclass(frozen=True)
class LevelState:
    phi_bar: float
    s_bar: float
    theta: float
    e: float

    def as_array(self) -> np.ndarray:
        return np.array([self.phi_bar, self.s_bar, self.theta], dtype=float)


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled solution with conservation diagnostics."""

    t: np.ndarray
    states: np.ndarray          # (n, 4): phi, s, p_phi, p_s
    energy: np.ndarray
    max_energy_drift: float
    max_clairaut_drift: float
    level: np.ndarray | None = None   # (n, 3) when integrated on the level

    def final(self) -> CotangentState:
        return CotangentState.from_array(self.states[-1])

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "phi", "s", "pPhi", "pS", "H"])
            for t, z, h in zip(self.t, self.states, self.energy):
                w.writerow([f"{v:.17e}" for v in (t, *z, h)])


def hamiltonian(profile, state) -> float:
    """``H = (p_phi^2 / (4 pi^2 x^2) + p_s^2 / r^2) / 2``; vectorized over arrays."""
    if isinstance(state, CotangentState):
        z = state.as_array()
    else:
        z = np.asarray(state, dtype=float)
    g = profile.geometry(z[..., 1])
    return 0.5 * (z[..., 2]**2 / (FOUR_PI2 * g.x**2) + z[..., 3]**2 / g.r**2)


def embed_level(profile, ls: LevelState) -> CotangentState:
    if not ls.e > 0:
        raise ValidationError("energy must be positive")
    g = profile.geometry(ls.s_bar)
    k = np.sqrt(2 * ls.e)
    return CotangentState(ls.phi_bar, ls.s_bar, float(TWO_PI * k * g.x * np.cos(ls.theta)),
                          float(k * g.r * np.sin(ls.theta)))


def level_of(profile, z: CotangentState) -> LevelState:
    """Inverse of :func:`embed_level` (theta in ``(-pi, pi]``)."""
    e = float(hamiltonian(profile, z))
    if not e > 0:
        raise ValidationError("state is not on a regular energy level")
    g = profile.geometry(z.s)
    theta = np.arctan2(z.p_s / g.r, z.p_phi / (TWO_PI * g.x))
    return LevelState(z.phi, z.s, float(theta), e)


def level_vector_field(profile, s_bar, theta, e):
    """``(dphi_bar/dt, ds_bar/dt, dtheta/dt)``; arrays broadcast.

    The theta component follows from conservation of
    ``p_phi = 2 pi sqrt(2e) x cos(theta)`` along ``ds_bar/dt``.
    """
    x, dx, _, _, _, r, _ = profile.full_jet(s_bar)
    k = np.sqrt(2 * e)
    c, sn = np.cos(theta), np.sin(theta)
    return k * c / (TWO_PI * x), k * sn / r, k * dx * c / (r * x)


def level_jacobian(profile, s_bar, theta, e) -> np.ndarray:
    """3x3 Jacobian of the level field in ``(phi_bar, s_bar, theta)``."""
    x, dx, ddx, _, _, r, dr = profile.full_jet(float(s_bar))
    k = np.sqrt(2 * e)
    c, sn = np.cos(theta), np.sin(theta)
    J = np.zeros((3, 3))
    J[0, 1] = -k * c * dx / (TWO_PI * x**2)
    J[0, 2] = -k * sn / (TWO_PI * x)
    J[1, 1] = -k * sn * dr / r**2
    J[1, 2] = k * c / r
    J[2, 1] = k * c * (ddx / (r * x) - dx * dr / (r**2 * x) - dx**2 / (r * x**2))
    J[2, 2] = -k * dx * sn / (r * x)
    return J


def vector_field(profile, z):
    """Hamilton's equations for ``H``; ``z`` has trailing axis of length 4."""
    z = np.asarray(z, dtype=float)
    s, pf, ps = z[..., 1], z[..., 2], z[..., 3]
    x, dx, _, _, _, r, dr = profile.full_jet(s)
    out = np.empty_like(z)
    out[..., 0] = pf / (FOUR_PI2 * x**2)
    out[..., 1] = ps / r**2
    out[..., 2] = 0.0
    out[..., 3] = pf**2 * dx / (FOUR_PI2 * x**3) + ps**2 * dr / r**3
    return out


# The embedded pair runs below the requested tol so that the accumulated
# drift over t ~ 100 stays under the 100 tol diagnostic bound.
RTOL_FACTOR = 0.03
ATOL_FACTOR = 1e-4


def _solve(fun, y0, t_max, tol, t_eval, events=None):
    sol = solve_ivp(fun, (0.0, t_max), y0, method="DOP853", rtol=RTOL_FACTOR * tol,
                    atol=ATOL_FACTOR * tol, t_eval=t_eval, events=events,
                    dense_output=events is not None)
    if sol.status < 0:
        raise StepFailure(sol.message)
    return sol


def _sample_times(t_max, sample_step):
    n = int(np.floor(t_max / sample_step + 1e-9))
    t = np.arange(n + 1) * sample_step
    if t[-1] < t_max - 1e-12 * max(1.0, t_max):
        t = np.append(t, t_max)
    return t


def integrate(profile, initial, t_max: float, tol: float = 1e-10,
              sample_step: float = 0.1, level: bool = False,
              backward: bool = False) -> Trajectory:
    """Integrate from a cotangent or level state, sampling every ``sample_step``.

    ``level=True`` integrates the 3D level field (initial must then be a
    :class:`LevelState`); samples are embedded for the diagnostics.
    ``backward=True`` runs the flow for negative times ``-t``.
    """
    if not tol > 0:
        raise ValidationError("tol must be positive")
    if not t_max > 0 or not sample_step > 0:
        raise ValidationError("t_max and sample_step must be positive")
    t_eval = _sample_times(t_max, sample_step)
    sign = -1.0 if backward else 1.0

    if level:
        if not isinstance(initial, LevelState):
            raise ValidationError("level integration needs a LevelState")
        e = initial.e

        def fun(t, y):
            return sign * np.array(level_vector_field(profile, y[1], y[2], e))

        sol = _solve(fun, initial.as_array(), t_max, tol, t_eval)
        lv = sol.y.T
        g = profile.geometry(lv[:, 1])
        k = np.sqrt(2 * e)
        states = np.column_stack([lv[:, 0], lv[:, 1],
                                  TWO_PI * k * g.x * np.cos(lv[:, 2]),
                                  k * g.r * np.sin(lv[:, 2])])
    else:
        z0 = initial if isinstance(initial, CotangentState) else embed_level(profile, initial)
        y0 = z0.as_array()

        def fun(t, y):
            return sign * vector_field(profile, y)

        sol = _solve(fun, y0, t_max, tol, t_eval)
        states = sol.y.T
        lv = None
    H = hamiltonian(profile, states)
    return Trajectory(sol.t * sign, states, H,
                      float(np.max(np.abs(H - H[0]))),
                      float(np.max(np.abs(states[:, 2] - states[0, 2]))), lv)


def first_return(profile, z0: CotangentState, tol: float = 1e-12, t_max: float = 1e4):
    """Time and state at which ``s`` first reaches ``z0.s + 1`` (p_s > 0 branch)."""
    y0 = z0.as_array()
    scale = max(1.0, float(np.max(np.abs(y0[2:]))))

    def ev(t, y):
        return y[1] - (y0[1] + 1.0)
    ev.terminal = True
    ev.direction = 1

    sol = solve_ivp(lambda t, y: vector_field(profile, y), (0.0, t_max), y0,
                    method="DOP853", rtol=tol, atol=tol * scale, events=ev,
                    dense_output=True)
    if sol.status < 0:
        raise StepFailure(sol.message)
    if not sol.t_events[0].size:
        raise StepFailure("meridian return not reached before t_max")
    return float(sol.t_events[0][0]), sol.y_events[0][0]


def apply_zeta(state: CotangentState) -> CotangentState:
    """The symmetry ``(m, p) -> (m, -p)``."""
    return CotangentState(state.phi, state.s, -state.p_phi, -state.p_s)
