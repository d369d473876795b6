"""Critical circles of the Clairaut integral and the separatrix graphs."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .dynamics import level_jacobian, level_vector_field
from .errors import StepFailure, ValidationError

TWO_PI = 2.0 * np.pi
DEGENERACY_GAP = 1e-4


@dataclass(frozen=True)
class Spectrum:
    """Floquet multipliers of a 3x3 level monodromy, sorted by modulus."""

    eigenvalues: tuple[complex, complex, complex]
    determinant: float
    unit_residual: float      # characteristic polynomial at 1
    kind: str                 # elliptic | hyperbolic | degenerate
    exponent: float           # log(lambda) or the rotation angle alpha


@dataclass(frozen=True)
class CriticalCircle:
    s_crit: float
    x_value: float
    theta_branch: float
    e: float
    period: float
    second_deriv: float
    floquet: Spectrum | None = None

    @property
    def kind(self) -> str:
        """Analytic type: hyperbolic at minima of x, elliptic at maxima."""
        return "hyperbolic" if self.second_deriv > 0 else "elliptic"

    @property
    def frequency(self) -> float:
        """Angular speed ``dphi_bar/dt`` on the circle."""
        return 1.0 / self.period


def _spectrum(M: np.ndarray) -> Spectrum:
    t = float(np.trace(M))
    c = float(M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0] + M[0, 0] * M[2, 2]
              - M[0, 2] * M[2, 0] + M[1, 1] * M[2, 2] - M[1, 2] * M[2, 1])
    d = float(np.linalg.det(M))
    # Deflate the known root 1 from l^3 - t l^2 + c l - d.
    S = t - 1.0
    P = c - S
    disc = S * S - 4.0 * P
    if disc >= 0:
        big = 0.5 * (S + np.copysign(np.sqrt(disc), S))
        small = P / big if big != 0 else 0.0
        pair = (complex(small), complex(big))
    else:
        re, im = 0.5 * S, 0.5 * np.sqrt(-disc)
        pair = (complex(re, -im), complex(re, im))
    eig = sorted([complex(1.0), *pair], key=lambda z: (abs(z), z.imag))
    l1, l2 = pair
    if abs(l1 - 1) < DEGENERACY_GAP or abs(l2 - 1) < DEGENERACY_GAP:
        kind, expo = "degenerate", 0.0
    elif disc < 0:
        kind, expo = "elliptic", float(abs(np.angle(l2)))
    elif min(l1.real, l2.real) > 0:
        kind, expo = "hyperbolic", float(np.log(max(abs(l1), abs(l2))))
    else:
        kind, expo = "degenerate", 0.0   # real negative pair
    return Spectrum(tuple(eig), d, 1.0 - t + c - d, kind, expo)


def monodromy_matrix(profile, s_crit: float, theta: float, e: float, period: float,
                     tol: float = 1e-12) -> np.ndarray:
    """Fundamental matrix of the variational level flow after one period."""

    def fun(t, y):
        v = level_vector_field(profile, y[1], y[2], e)
        J = level_jacobian(profile, y[1], y[2], e)
        Phi = y[3:].reshape(3, 3)
        return np.concatenate([np.array(v, dtype=float), (J @ Phi).ravel()])

    y0 = np.concatenate([[0.0, s_crit, theta], np.eye(3).ravel()])
    sol = solve_ivp(fun, (0.0, period), y0, method="DOP853", rtol=tol, atol=tol)
    if sol.status < 0:
        raise StepFailure(sol.message)
    return sol.y[3:, -1].reshape(3, 3)


def monodromy(circle: CriticalCircle, profile, tol: float = 1e-12) -> Spectrum:
    M = monodromy_matrix(profile, circle.s_crit, circle.theta_branch, circle.e,
                         circle.period, tol)
    return _spectrum(M)


def critical_circles(profile, e: float = 0.5, tol: float = 1e-12,
                     floquet: bool = True) -> list[CriticalCircle]:
    """The ``2n`` critical circles ``{s = s_i, theta in {0, pi}}`` on level ``e``."""
    if not e > 0:
        raise ValidationError("energy must be positive")
    out = []
    for cp in profile.critical_points:
        for th in (0.0, np.pi):
            c = CriticalCircle(cp.s_crit, cp.x_value, th, e,
                               TWO_PI * cp.x_value / np.sqrt(2 * e), cp.second_deriv)
            if floquet:
                c = CriticalCircle(*[getattr(c, f) for f in
                                     ("s_crit", "x_value", "theta_branch", "e", "period",
                                      "second_deriv")], monodromy(c, profile, tol))
            out.append(c)
    return out


def hyperbolic_circle(profile, e: float = 0.5, tol: float = 1e-12) -> CriticalCircle:
    """The circle over the global minimum ``x_1`` with ``theta = 0``."""
    cp = profile.critical_points[0]
    c = CriticalCircle(cp.s_crit, cp.x_value, 0.0, e, TWO_PI * cp.x_value / np.sqrt(2 * e),
                       cp.second_deriv)
    return CriticalCircle(c.s_crit, c.x_value, 0.0, e, c.period, c.second_deriv,
                          monodromy(c, profile, tol))


def return_time(profile, circle: CriticalCircle, tol: float = 1e-12) -> float:
    """Time for ``phi_bar`` to advance by one full turn, by ODE integration."""
    e = circle.e
    sign = 1.0 if np.cos(circle.theta_branch) > 0 else -1.0

    def ev(t, y):
        return sign * y[0] - 1.0
    ev.terminal = True

    sol = solve_ivp(lambda t, y: np.array(level_vector_field(profile, y[1], y[2], e)),
                    (0.0, 4 * circle.period + 1.0), [0.0, circle.s_crit, circle.theta_branch],
                    method="DOP853", rtol=tol, atol=tol, events=ev)
    if not sol.t_events[0].size:
        raise StepFailure("no return of phi_bar")
    return float(sol.t_events[0][0])


BRANCHES = ("0+", "0-", "pi+", "pi-")


@dataclass(frozen=True)
class SeparatrixGraph:
    branch: str
    e: float
    s_bar: np.ndarray
    theta: np.ndarray
    limit_circle: CriticalCircle
    clairaut: float           # the constant 2 pi sqrt(2e) x_1

    def max_clairaut_error(self, profile) -> float:
        x = profile.x(self.s_bar)
        pf = TWO_PI * np.sqrt(2 * self.e) * x * np.cos(self.theta)
        return float(np.max(np.abs(pf - np.copysign(self.clairaut, np.cos(self.theta)))))


def separatrix_theta(profile, s_bar, branch: str = "0+"):
    """``theta`` on the requested branch; ``+`` means ``sin(theta) >= 0``."""
    if branch not in BRANCHES:
        raise ValidationError(f"branch must be one of {BRANCHES}")
    # Ratio can exceed 1 by a rounding error at s_bar = s_1.
    th = np.arccos(np.minimum(profile.x1 / profile.x(s_bar), 1.0))
    if branch == "0+":
        return th
    if branch == "0-":
        return -th
    if branch == "pi+":
        return np.pi - th
    return np.pi + th


def separatrix(profile, e: float = 0.5, branch: str = "0+", n: int = 512) -> SeparatrixGraph:
    """Uniform sample of a separatrix branch over ``s_bar`` in ``s_1 + (0, 1)``."""
    if not e > 0:
        raise ValidationError("energy must be positive")
    s1 = profile.critical_points[0].s_crit
    s = s1 + (np.arange(n) + 0.5) / n
    th = separatrix_theta(profile, s, branch)
    cp = profile.critical_points[0]
    base = 0.0 if branch.startswith("0") else np.pi
    circ = CriticalCircle(cp.s_crit, cp.x_value, base, e, TWO_PI * cp.x_value / np.sqrt(2 * e),
                          cp.second_deriv)
    return SeparatrixGraph(branch, e, s, th, circ, TWO_PI * np.sqrt(2 * e) * profile.x1)


def write_orbits_csv(circles, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sCrit", "xValue", "thetaBranch", "kind", "period",
                    "floquetRe1", "floquetIm1", "floquetRe2", "floquetIm2",
                    "floquetRe3", "floquetIm3"])
        for c in circles:
            row = [f"{c.s_crit:.17e}", f"{c.x_value:.17e}", f"{c.theta_branch:.17e}",
                   c.kind, f"{c.period:.17e}"]
            for z in c.floquet.eigenvalues:
                row += [f"{z.real:.17e}", f"{z.imag:.17e}"]
            w.writerow(row)
