"""Rotation curve, stable-norm unit ball and asymptotic volume at ``e = 1/2``.

Near the separatrix every quantity is parametrized by ``delta = rho0 - rho``
rather than ``rho`` so that samples down to ``delta ~ 1e-30`` stay exact.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .actions import moments, rho0, tau_phi, tau_phi_derivatives
from .errors import (ConjugacyViolation, DegenerateWindow, EndpointMismatch, NonConvex,
                     PoorFit, TailEstimateDominates, ValidationError)
from .quadrature import gauss_kronrod

E_HALF = 0.5
TWO_PI = 2.0 * np.pi
FOUR_PI2 = 4.0 * np.pi**2


@dataclass(frozen=True)
class RotationCurve:
    """Samples ``omega(rho) = (phi/tau, 1/tau)`` for ``rho`` in ``[0, rho0)``."""

    profile: object
    rho0: float
    rho: np.ndarray
    delta: np.ndarray
    tau: np.ndarray
    phi: np.ndarray
    endpoint: float | None = None

    @property
    def X(self) -> np.ndarray:
        return self.phi / self.tau

    @property
    def Y(self) -> np.ndarray:
        return 1.0 / self.tau

    def with_endpoint(self, x0: float) -> "RotationCurve":
        return RotationCurve(self.profile, self.rho0, self.rho, self.delta, self.tau,
                             self.phi, float(x0))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["rho", "X", "Y"])
            for r, x, y in zip(self.rho, self.X, self.Y):
                w.writerow([f"{r:.17e}", f"{x:.17e}", f"{y:.17e}"])
            if self.endpoint is not None:
                w.writerow([f"{self.rho0:.17e}", f"{self.endpoint:.17e}", f"{0.0:.17e}"])


def graded_deltas(r0: float, n_uniform: int = 64, kappa: int = 4,
                  delta_min: float = 1e-12) -> np.ndarray:
    """``delta`` grid: uniform in ``rho`` on ``[0, rho0/2)`` then ``rho0 2^(-k/kappa)``."""
    uni = r0 - np.linspace(0.0, 0.5 * r0, n_uniform, endpoint=False)
    kmax = int(np.ceil(kappa * np.log2(0.5 / delta_min)))
    grad = 0.5 * r0 * 2.0 ** (-np.arange(kmax + 1) / kappa)
    return np.concatenate([uni, grad])


def rotation_curve(profile, n_uniform: int = 64, kappa: int = 4,
                   delta_min: float = 1e-12, rtol: float = 1e-12) -> RotationCurve:
    """Sample the rotation curve on a grid graded toward ``rho0`` (e = 1/2)."""
    if n_uniform < 2 or kappa < 1 or not 0 < delta_min < 0.5:
        raise ValidationError("bad rotation-curve grid parameters")
    r0 = rho0(profile, E_HALF)
    d = graded_deltas(r0, n_uniform, kappa, delta_min)
    tau = np.empty_like(d)
    phi = np.empty_like(d)
    for i, di in enumerate(d):
        tau[i], phi[i] = tau_phi(profile, E_HALF, 1.0, rtol, delta=di)
    phi[0] = 0.0
    return RotationCurve(profile, r0, r0 - d, d, tau, phi)


@dataclass(frozen=True)
class EndpointReport:
    extrapolated: float
    orbit_frequency: float
    value: float
    rel_gap: float
    printed_value: float        # 1/(4 pi^2 rho0) as printed
    printed_ratio: float        # printed_value / value


def extend_endpoint(curve: RotationCurve, tol: float = 0.01) -> EndpointReport:
    """``X(rho0)`` by extrapolation in ``Y -> 0`` and by the hyperbolic orbit frequency."""
    from .orbits import hyperbolic_circle
    from .dynamics import level_vector_field

    last = curve.delta <= 10 * curve.delta.min()
    if last.sum() < 10:
        raise DegenerateWindow("fewer than 10 samples in the last decade before rho0")
    # X = X0 + c Y up to terms exponentially small in 1/Y.
    Yl, Xl = curve.Y[last], curve.X[last]
    c1, c0 = np.polyfit(Yl, Xl, 1)
    a = float(c0)
    circ = hyperbolic_circle(curve.profile, E_HALF)
    b = float(level_vector_field(curve.profile, circ.s_crit, 0.0, E_HALF)[0])
    gap = abs(a - b) / abs(b)
    val = 0.5 * (a + b)
    printed = 1.0 / (FOUR_PI2 * curve.rho0)
    rep = EndpointReport(a, b, val, gap, printed, printed / val)
    if gap > tol:
        raise EndpointMismatch(f"extrapolated X(rho0) = {a:.8g} vs orbit frequency {b:.8g}")
    return rep


@dataclass(frozen=True)
class StableNormBall:
    vertices: np.ndarray       # (n, 2), counterclockwise, closed implicitly
    area: float

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["X", "Y"])
            for x, y in self.vertices:
                w.writerow([f"{x:.17e}", f"{y:.17e}"])


def shoelace(v: np.ndarray) -> float:
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _check_convex(v: np.ndarray, rtol: float = 1e-10):
    d1 = np.roll(v, -1, axis=0) - v
    d0 = v - np.roll(v, 1, axis=0)
    cross = d0[:, 0] * d1[:, 1] - d0[:, 1] * d1[:, 0]
    scale = float(np.max(np.sum(v**2, axis=1)))
    bad = np.nonzero(cross < -rtol * scale)[0]
    if bad.size:
        raise NonConvex(f"reflex vertices at indices {bad[:10].tolist()}")


def ball_from_polygon(v, check: bool = True) -> StableNormBall:
    """Ball from an arbitrary centrally symmetric vertex list (ccw enforced)."""
    v = np.asarray(v, dtype=float)
    a = shoelace(v)
    if a < 0:
        v, a = v[::-1].copy(), -a
    if check:
        _check_convex(v)
    return StableNormBall(v, a)


def stable_unit_ball(curve: RotationCurve) -> StableNormBall:
    """Close the curve by ``(X, Y) -> (-X, Y)`` (rho -> -rho) and ``(X, Y) -> (X, -Y)``."""
    if curve.endpoint is None:
        raise ValidationError("curve needs an endpoint; call extend_endpoint first")
    X, Y = curve.X, curve.Y
    order = np.argsort(curve.rho)
    X, Y = X[order], Y[order]
    # Upper arc from (X0, 0) to (-X0, 0), counterclockwise.
    right = np.column_stack([X[::-1], Y[::-1]])
    left = np.column_stack([-X[1:], Y[1:]]) if X[0] == 0 else np.column_stack([-X, Y])
    upper = np.vstack([[curve.endpoint, 0.0], right, left])
    lower = np.column_stack([-upper[:, 0], -upper[:, 1]])
    return ball_from_polygon(np.vstack([upper, lower]))


@dataclass(frozen=True)
class VolumeReport:
    quadrature: float
    tail: float
    cutoff_delta: float
    shoelace: float | None

    @property
    def rel_gap(self) -> float:
        return float("nan") if self.shoelace is None else \
            abs(self.quadrature - self.shoelace) / self.shoelace


def _volume_integrand(profile, u, rtol):
    """``delta (phi' tau - phi tau') / tau^3`` at ``delta = exp(-u)``."""
    out = np.empty(np.shape(u))
    r0 = rho0(profile, E_HALF)
    for i, ui in enumerate(np.ravel(u)):
        d = min(float(np.exp(-ui)), r0)
        tau, phi = tau_phi(profile, E_HALF, 1.0, rtol, delta=d)
        dtau, dphi = tau_phi_derivatives(profile, E_HALF, 1.0, rtol, delta=d)
        if d >= r0:
            phi, dtau = 0.0, 0.0
        out[i] = d * (dphi * tau - phi * dtau) / tau**3
    return out


def _log_constants(profile, d, rtol):
    """``tau ~ A u + B``, ``phi ~ A' u + B'`` from two points below ``d``."""
    u1, u2 = -np.log(d), -np.log(d) + 1.0
    t1, p1 = tau_phi(profile, E_HALF, 1.0, rtol, delta=d)
    t2, p2 = tau_phi(profile, E_HALF, 1.0, rtol, delta=float(np.exp(-u2)))
    A, Ap = (t2 - t1), (p2 - p1)
    return A, t1 - A * u1, Ap, p1 - Ap * u1


def asymptotic_volume(profile, shoelace_area: float | None = None,
                      cutoff: float = 1e-6, max_tail_fraction: float = 0.01,
                      floor: float = 1e-60, rtol: float = 1e-12) -> VolumeReport:
    """``V_g = 4 int_0^rho0 X' Y drho`` in ``u = -ln(rho0 - rho)`` plus an analytic tail.

    The tail beyond the cutoff follows from ``tau ~ A u + B``, ``phi ~ A' u + B'``:
    ``int_{u_c}^inf (A'B - AB') / (A u + B)^3 du``. The cutoff (relative to rho0)
    is lowered by factors of 1e6 while the tail exceeds ``max_tail_fraction`` of
    the total; ``TailEstimateDominates`` is raised if the floor is reached first.
    """
    r0 = rho0(profile, E_HALF)
    u0 = -np.log(r0)
    done, u_lo = 0.0, u0
    c = cutoff
    while True:
        d_c = c * r0
        u_c = -np.log(d_c)
        part, _ = gauss_kronrod(lambda u: _volume_integrand(profile, u, rtol), u_lo, u_c,
                                rtol=1e-10, initial=4 if u_lo == u0 else 2)
        done += float(part)
        A, B, Ap, Bp = _log_constants(profile, d_c, rtol)
        tail = (Ap * B - A * Bp) / (2 * A * (A * u_c + B)**2)
        total = 4 * (done + tail)
        if 4 * abs(tail) <= max_tail_fraction * abs(total):
            return VolumeReport(total, 4 * tail, d_c, shoelace_area)
        if c * 1e-6 < floor:
            raise TailEstimateDominates(
                f"tail {4 * tail:.3e} is {4 * tail / total:.1%} of V_g at cutoff {d_c:.1e}")
        c *= 1e-6
        u_lo = u_c


@dataclass(frozen=True)
class LawFit:
    law: str
    fitted: float
    intercept: float
    printed: float
    r2: float

    @property
    def ratio(self) -> float:
        return self.printed / self.fitted


@dataclass(frozen=True)
class AsymptoticsReport:
    laws: tuple[LawFit, ...]
    derived: dict               # closed-form constants from the local expansion
    pole_spread: float          # spread of tau' (rho0 - rho) over the last decade
    ratio_phi_tau: float        # A' / A

    def law(self, name) -> LawFit:
        return next(f for f in self.laws if f.law == name)


def _linfit(x, y):
    c1, c0 = np.polyfit(x, y, 1)
    res = y - (c1 * x + c0)
    r2 = 1.0 - np.sum(res**2) / np.sum((y - y.mean())**2)
    return float(c1), float(c0), float(r2)


def verify_asymptotics(profile, n: int = 40, window=(1e-2, 1e-5), r2_min: float = 0.999,
                       rtol: float = 1e-12) -> AsymptoticsReport:
    """Fit the log and pole laws near ``rho0`` and compare with printed constants.

    The machinery works at the minimum ``s1`` directly, which is the same as
    shifting the profile so the minimum sits at ``s = 0``.
    """
    r0 = rho0(profile, E_HALF)
    d = r0 * np.geomspace(window[0], window[1], n)
    tau = np.empty(n); phi = np.empty(n); dtau = np.empty(n)
    for i, di in enumerate(d):
        tau[i], phi[i] = tau_phi(profile, E_HALF, 1.0, rtol, delta=di)
        dtau[i] = tau_phi_derivatives(profile, E_HALF, 1.0, rtol, delta=di)[0]
    L = -np.log(d)
    A, B, r2a = _linfit(L, tau)
    Ap, Bp, r2b = _linfit(L, phi)
    App, Cpp, r2c = _linfit(1.0 / d, dtau)

    cp = profile.critical_points[0]
    r1 = float(profile.geometry(cp.s_crit).r)
    gam = cp.second_deriv
    base = r1 / (2 * np.sqrt(np.pi * gam))
    printed = (np.sqrt(r0) * base, base / (FOUR_PI2 * np.sqrt(r0)), base / (FOUR_PI2 * np.sqrt(r0)))
    A_th = r1 * np.sqrt(cp.x_value / gam)
    laws = (LawFit("tau_log", A, B, printed[0], r2a),
            LawFit("phi_log", Ap, Bp, printed[1], r2b),
            LawFit("dtau_pole", App, Cpp, printed[2], r2c))
    last = d <= 10 * d.min()
    prod = dtau[last] * d[last]
    spread = float((prod.max() - prod.min()) / abs(prod.mean()))
    rep = AsymptoticsReport(laws, {"A": A_th, "A_prime": A_th / r0, "A_pole": A_th},
                            spread, Ap / A)
    worst = min(laws, key=lambda f: f.r2)
    if worst.r2 < r2_min:
        raise PoorFit(f"{worst.law}: R^2 = {worst.r2:.6f} < {r2_min}")
    return rep


def write_asymptotics_csv(rep: AsymptoticsReport, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["law", "fittedConstant", "paperConstant", "ratio", "r2"])
        for f in rep.laws:
            w.writerow([f.law, f"{f.fitted:.17e}", f"{f.printed:.17e}", f"{f.ratio:.17e}",
                        f"{f.r2:.17e}"])


# ---- gauge and conjugacy ----

def support(ball: StableNormBall, c) -> np.ndarray:
    """Support function ``max_{w in Omega} <c, w>`` (the dual norm)."""
    c = np.atleast_2d(np.asarray(c, dtype=float))
    return np.max(c @ ball.vertices.T, axis=1)


def stable_norm(ball: StableNormBall, v) -> float:
    """Minkowski gauge of the polygon: ``t > 0`` with ``v / t`` on the boundary."""
    v = np.asarray(v, dtype=float)
    if not np.any(v):
        raise ValidationError("the gauge needs a nonzero vector")
    P = ball.vertices
    Q = np.roll(P, -1, axis=0)
    E = Q - P
    # Solve s v = P + lam E for s > 0, lam in [0, 1].
    den = v[0] * E[:, 1] - v[1] * E[:, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        s = (P[:, 0] * E[:, 1] - P[:, 1] * E[:, 0]) / den
        lam = (P[:, 0] * v[1] - P[:, 1] * v[0]) / den
    ok = (den != 0) & (s > 0) & (lam >= -1e-12) & (lam <= 1 + 1e-12)
    return float(1.0 / np.max(s[ok]))


def gauge_many(ball: StableNormBall, V: np.ndarray) -> np.ndarray:
    return np.array([stable_norm(ball, v) for v in V])


@dataclass(frozen=True)
class ConjugacyReport:
    max_rel_alpha_error: float     # numeric alpha vs (1/2) support^2
    max_rel_biconjugate_error: float
    rays_monotone: bool


def _legendre(P, Q, fQ, chunk=512):
    """``max_j <P_i, Q_j> - fQ_j`` evaluated in row chunks."""
    out = np.empty(len(P))
    for i in range(0, len(P), chunk):
        out[i:i + chunk] = np.max(P[i:i + chunk] @ Q.T - fQ[None, :], axis=1)
    return out


def conjugate_pair(ball: StableNormBall, n_dir: int = 128, n_rad: int = 96,
                   tol: float = 0.01) -> ConjugacyReport:
    """Legendre transforms of ``q = (1/2) N^2`` on polar grids, then back again."""
    ang = np.linspace(0, 2 * np.pi, n_dir, endpoint=False)
    U = np.column_stack([np.cos(ang), np.sin(ang)])
    Nu = gauge_many(ball, U)
    rmax = 2.0 / Nu.min()
    # Geometric radii give the same relative resolution at every scale.
    rad = np.r_[0.0, np.geomspace(1e-3 * rmax, rmax, n_rad - 1)]
    W = (rad[:, None, None] * U[None]).reshape(-1, 2)
    qW = 0.5 * (rad[:, None] * Nu[None]).ravel()**2

    hu = support(ball, U)
    # Maximizers stay inside both grids: |w*| <= |c| R^2 and N(w) <= c_max min(hu).
    R = float(np.max(np.linalg.norm(ball.vertices, axis=1)))
    cmax = rmax / R**2
    crad = np.r_[0.0, np.geomspace(1e-3 * cmax, cmax, n_rad - 1)]
    C = (crad[:, None, None] * U[None]).reshape(-1, 2)
    alpha = _legendre(C, W, qW)
    alpha_exact = 0.5 * support(ball, C)**2
    big = np.linalg.norm(C, axis=1) >= 1e-2 * cmax
    ea = float(np.max(np.abs(alpha[big] - alpha_exact[big]) / alpha_exact[big]))

    NW = (rad[:, None] * Nu[None]).ravel()
    inner = (NW <= 0.8 * cmax * hu.min()) & (NW >= 1e-2 * rmax * Nu.min())
    Wi, qi = W[inner], qW[inner]
    qq = _legendre(Wi, C, alpha)
    bigq = qi > 0
    eb = float(np.max(np.abs(qq[bigq] - qi[bigq]) / qi[bigq]))

    A2 = alpha.reshape(n_rad, n_dir)
    mono = bool(np.all(np.diff(A2, axis=0) >= -1e-12 * alpha.max()))
    rep = ConjugacyReport(ea, eb, mono)
    if eb > tol:
        raise ConjugacyViolation(f"biconjugate differs from q by {eb:.3%}")
    return rep
