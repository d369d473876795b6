"""Action-angle quantities at fixed energy and Clairaut value.

All integrals have the form ``int_0^1 r q^m R^(k/2) ds`` with
``q = 1 / (4 pi^2 x^2)`` and ``R = 2e - rho^2 q``. The radicand is evaluated in
the cancellation-free form

    R = 2e (x - x1)(x + x1) / x^2 + delta (2 rho0 - delta) q,   delta = rho0 - |rho|,

with ``x - x1`` from a Taylor expansion near the minimum, and the meridian
integral is taken in ``t = s - s1`` under ``t = c sinh(w)``, which absorbs the
near-zero of ``R`` at ``s1`` as ``delta -> 0``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .errors import BoundViolation, ConvexityViolation, DomainError, ValidationError
from .quadrature import gauss_kronrod

TWO_PI = 2.0 * np.pi
FOUR_PI2 = 4.0 * np.pi**2
TAYLOR_RADIUS = 0.02
TAYLOR_ORDER = 16
RTOL = 1e-12


@dataclass(frozen=True)
class _Local:
    s1: float
    x1: float
    gamma: float
    taylor: np.ndarray      # x^(n)(s1)/n!, n = 0..TAYLOR_ORDER


@lru_cache(maxsize=64)
def _local(profile) -> _Local:
    cp = profile.critical_points[0]
    jet = profile.x_series.jet(cp.s_crit, TAYLOR_ORDER)
    fact = np.cumprod(np.r_[1.0, np.arange(1, TAYLOR_ORDER + 1)])
    coef = np.array([float(j) for j in jet]) / fact
    return _Local(cp.s_crit, cp.x_value, cp.second_deriv, coef)


def rho0(profile, e: float) -> float:
    """Upper end of ``J(e)``: ``2 pi sqrt(2e) x1``."""
    return TWO_PI * np.sqrt(2 * e) * profile.x1


def _x_minus_x1(profile, loc: _Local, t, x):
    near = np.abs(t) < TAYLOR_RADIUS
    out = x - loc.x1
    if np.any(near):
        tn = t[near]
        acc = np.zeros_like(tn)
        for c in loc.taylor[:1:-1]:
            acc = acc * tn + c
        out[near] = acc * tn * tn
    return np.maximum(out, 0.0)


def _integrand(profile, loc, e, A, t, kinds):
    """Per-node integrands ``r q^m R^(k/2)`` for each ``(k, m)`` in ``kinds``."""
    x, *_, r, _ = profile.full_jet(loc.s1 + t)
    xm = _x_minus_x1(profile, loc, t, x)
    q = 1.0 / (FOUR_PI2 * x * x)
    R = 2 * e * xm * (xm + 2 * loc.x1) / (x * x) + A * q
    cols = []
    for k, m in kinds:
        cols.append(r * q**m * R**(0.5 * k))
    return np.stack(cols, axis=-1)


def moments(profile, e: float, delta: float, kinds, rtol: float = RTOL):
    """``int_0^1 r q^m R^(k/2) ds`` for each ``(k, m)``, at ``|rho| = rho0 - delta``.

    Returns ``(values, errors)`` as arrays aligned with ``kinds``.
    """
    if not e > 0:
        raise DomainError("energy must be positive")
    r0 = rho0(profile, e)
    if not 0.0 <= delta <= r0:
        raise DomainError(f"rho outside J(e): delta = {delta:.3e}")
    kinds = tuple(kinds)
    loc = _local(profile)
    A = delta * (2 * r0 - delta)
    if A == 0.0:
        if any(k < 0 for k, _ in kinds):
            raise DomainError("time integrals diverge on the separatrix")

        def f(t):
            return (_integrand(profile, loc, e, 0.0, t, kinds)
                    + _integrand(profile, loc, e, 0.0, -t, kinds))

        val, err = gauss_kronrod(f, 0.0, 0.5, rtol=rtol, breakpoints=[TAYLOR_RADIUS])
        return np.asarray(val), np.full(len(kinds), float(err))

    a = A / (FOUR_PI2 * loc.x1**2)
    b = 2 * e * loc.gamma / loc.x1
    c = np.sqrt(a / b)
    W = np.arcsinh(0.5 / c)

    def f(w):
        t = c * np.sinh(w)
        jac = (c * np.cosh(w))[:, None]
        return jac * (_integrand(profile, loc, e, A, t, kinds)
                      + _integrand(profile, loc, e, A, -t, kinds))

    bps = []
    wt = np.arcsinh(TAYLOR_RADIUS / c)
    if wt < W:
        bps.append(float(wt))
    if W > 4.0:
        # Coarse split of the long flat tail keeps the initial mesh balanced.
        bps.extend(float(v) for v in np.linspace(0.0, W, 9)[1:-1] if v not in bps)
    val, err = gauss_kronrod(f, 0.0, float(W), rtol=rtol, breakpoints=sorted(set(bps)))
    return np.asarray(val), np.full(len(kinds), float(err))


def _delta_of(profile, e, rho, closed=False):
    r0 = rho0(profile, e)
    d = r0 - abs(rho)
    if d < 0 or (d == 0 and not closed):
        raise DomainError(f"|rho| = {abs(rho):.6g} outside J(e) = (-{r0:.6g}, {r0:.6g})")
    return d


def tau_phi(profile, e: float, rho: float, rtol: float = RTOL, delta: float | None = None):
    """Meridian return time and angular advance over one meridian period.

    Pass ``delta = rho0 - |rho|`` directly to avoid cancellation near ``rho0``;
    ``rho`` then contributes only its sign.
    """
    d = _delta_of(profile, e, rho) if delta is None else float(delta)
    if d <= 0:
        raise DomainError("rho on or beyond the separatrix")
    (J0, J1), _ = moments(profile, e, d, ((-1, 0), (-1, 1)), rtol)
    mag = rho0(profile, e) - d
    return float(J0), float(np.sign(rho) * mag * J1) if rho != 0 else 0.0


def tau_phi_derivatives(profile, e, rho, rtol=RTOL, delta=None):
    """``(d tau / d rho, d phi / d rho)`` by quadrature of differentiated integrands."""
    d = _delta_of(profile, e, rho) if delta is None else float(delta)
    (J,), _ = moments(profile, e, d, ((-3, 1),), rtol)
    mag = rho0(profile, e) - d
    return float(np.sign(rho) * mag * J), float(2 * e * J)


def action_i2(profile, e: float, rho: float, rtol: float = RTOL, delta=None) -> float:
    """``I2 = int_0^1 r sqrt(2e - rho^2/(4 pi^2 x^2)) ds``; closed ``J(e)`` allowed."""
    d = _delta_of(profile, e, rho, closed=True) if delta is None else float(delta)
    (v,), _ = moments(profile, e, d, ((1, 0),), rtol)
    return float(v)


def time_of_flight_oracle(profile, e: float, rho: float, tol: float = 1e-12):
    """``(tau, phi_advance)`` from the 4D flow: time for ``s`` to go from 0 to 1."""
    from .dynamics import CotangentState, first_return
    _delta_of(profile, e, rho)
    g = profile.geometry(0.0)
    ps = np.sqrt(2 * e - rho**2 / (FOUR_PI2 * g.x**2)) * g.r
    t, z = first_return(profile, CotangentState(0.0, 0.0, float(rho), float(ps)), tol)
    return t, float(z[0])


@dataclass(frozen=True)
class ActionSample:
    e: float
    rho: float
    i1: float
    i2: float
    tau: float
    phi_advance: float


def action_sample(profile, e, rho, rtol=RTOL) -> ActionSample:
    tau, ph = tau_phi(profile, e, rho, rtol)
    return ActionSample(e, rho, rho, action_i2(profile, e, rho, rtol), tau, ph)


def frequency(profile, e, rho, rtol=RTOL):
    """Frequency vector ``(phi/tau, 1/tau)`` of the invariant torus."""
    tau, ph = tau_phi(profile, e, rho, rtol)
    return ph / tau, 1.0 / tau


# ---- reduction h = (I1^2 / 2) g(I2 / I1) ----

def q1(profile) -> float:
    """Left end of the domain of ``f``."""
    return 1.0 / (FOUR_PI2 * profile.x1**2)


def f_jet(profile, u: float, rtol: float = RTOL):
    """``(f, f', f'')`` at ``u`` with ``f(u) = int r sqrt(u - q)``.

    ``f(u) = I2(u/2, 1)``, so the same separatrix-safe moments are reused.
    """
    e = 0.5 * u
    r0 = rho0(profile, e)
    if not r0 > 1.0:
        raise DomainError(f"u = {u:.6g} outside the domain of f")
    (F, T, S), _ = moments(profile, e, r0 - 1.0, ((1, 0), (-1, 0), (-3, 0)), rtol)
    return float(F), 0.5 * float(T), -0.25 * float(S)


def g_inverse(profile, w: float, rtol: float = RTOL) -> float:
    """``g = f^-1`` by bracketed root finding."""
    lo = q1(profile)
    (L,), _ = moments(profile, 1.0, 0.0, ((0, 0),))     # int r
    if not w > 0:
        raise DomainError("g is defined on (0, inf)")
    # f(u) <= sqrt(u) L, so u >= (w / L)^2; f(u) >= sqrt(u - lo) L_min gives an upper bound
    hi = max(2 * lo, (w / L)**2 + lo)
    while f_jet(profile, hi, rtol)[0] < w:
        hi *= 2.0
    lo_b = max(lo * (1 + 1e-14), (w / L)**2)
    if f_jet(profile, lo_b, rtol)[0] > w:
        lo_b = lo * (1 + 1e-14)
    return brentq(lambda u: f_jet(profile, u, rtol)[0] - w, lo_b, hi, xtol=1e-15 * hi,
                  rtol=1e-15)


@dataclass(frozen=True)
class ConvexityReport:
    e: np.ndarray
    rho: np.ndarray
    w: np.ndarray
    g: np.ndarray
    g_direct: np.ndarray       # 2e / rho^2, the closed form of g(w)
    dg: np.ndarray
    ddg: np.ndarray
    det: np.ndarray            # 2 g g'' - g'^2, determinant of 2 D^2 h
    f_u: np.ndarray            # sample points for f and f~
    df: np.ndarray
    ddf: np.ndarray
    ddf_tilde: np.ndarray
    identity_error: float      # max rel. error of I2 = |rho| f(2e/rho^2)

    @property
    def minors_positive(self) -> bool:
        return bool(np.all(self.ddg > 0) and np.all(self.det > 0))

    @property
    def f_increasing_concave(self) -> bool:
        return bool(np.all(self.df > 0) and np.all(self.ddf < 0))

    @property
    def f_tilde_concave(self) -> bool:
        return bool(np.all(self.ddf_tilde < 0))


def verify_convexity(profile, e_values=None, rho_fracs=None, n_f: int = 50,
                     rtol: float = RTOL, strict: bool = False) -> ConvexityReport:
    """Hessian minors of ``h`` on an ``(e, rho)`` grid plus the 1D ``f`` checks.

    Raises ``ConvexityViolation`` when the minors fail; with ``strict`` also when
    ``f`` or ``f~ = f o exp`` fails its stated concavity.
    """
    e_values = np.linspace(0.25, 2.0, 20) if e_values is None else np.asarray(e_values)
    rho_fracs = np.linspace(-0.9, 0.9, 20) if rho_fracs is None else np.asarray(rho_fracs)
    if np.any(rho_fracs == 0) or np.any(np.abs(rho_fracs) >= 1):
        raise DomainError("rho fractions must lie in (-1, 0) U (0, 1)")
    E, F = np.meshgrid(e_values, rho_fracs, indexing="ij")
    E, F = E.ravel(), F.ravel()
    rho = F * np.array([rho0(profile, e) for e in E])
    n = E.size
    w = np.empty(n); g = np.empty(n); dg = np.empty(n); ddg = np.empty(n)
    gd = 2 * E / rho**2
    ident = 0.0
    cache: dict[float, tuple] = {}
    for i in range(n):
        i2 = action_i2(profile, E[i], rho[i], rtol)
        w[i] = i2 / abs(rho[i])
        key = round(w[i], 13)
        if key not in cache:
            u = g_inverse(profile, w[i], rtol)
            cache[key] = (u, f_jet(profile, u, rtol))
        u, (fv, f1, f2) = cache[key]
        g[i] = u
        dg[i] = 1.0 / f1
        ddg[i] = -f2 * dg[i]**3
        ident = max(ident, abs(i2 - abs(rho[i]) * f_jet(profile, gd[i], rtol)[0]) / i2)
    det = 2 * g * ddg - dg**2

    lo = q1(profile)
    u_lo, u_hi = float(gd.min()), float(gd.max())
    us = np.geomspace(u_lo, u_hi, n_f)
    jets = np.array([f_jet(profile, u, rtol) for u in us])
    # f~(v) = f(e^v): f~'' = e^{2v} f''(e^v) + e^v f'(e^v)
    ddft = us**2 * jets[:, 2] + us * jets[:, 1]
    rep = ConvexityReport(E, rho, w, g, gd, dg, ddg, det, us, jets[:, 1], jets[:, 2], ddft,
                          ident)
    if not rep.minors_positive:
        i = int(np.argmin(np.minimum(ddg, det)))
        raise ConvexityViolation(f"Hessian minor not positive at e={E[i]:.6g}, rho={rho[i]:.6g}")
    if strict and not rep.f_increasing_concave:
        raise ConvexityViolation("f is not increasing and concave on the sample")
    if strict and not rep.f_tilde_concave:
        j = int(np.argmax(ddft))
        raise ConvexityViolation(f"f~ not concave at u = log({us[j]:.6g}) (q1 = {lo:.6g})")
    return rep


@dataclass(frozen=True)
class SuperlinearityReport:
    k: float
    ratio_max: float          # max over samples of max(|I1|, |I2|) / sqrt(e)
    samples: int

    @property
    def holds(self) -> bool:
        return self.ratio_max <= self.k * (1 + 1e-12)


def superlinearity_constant(profile) -> float:
    (L,), _ = moments(profile, 1.0, 0.0, ((0, 0),))
    return float(np.sqrt(2) * max(TWO_PI * profile.x1, L))


def verify_superlinearity(profile, e_values=None, rho_fracs=None,
                          rtol: float = RTOL) -> SuperlinearityReport:
    """``max(|I1|, |I2|) <= k sqrt(e)`` on a grid, ``k = sqrt2 max(2 pi x1, int r)``."""
    e_values = np.linspace(0.25, 2.0, 20) if e_values is None else np.asarray(e_values)
    rho_fracs = np.linspace(-0.9, 0.9, 20) if rho_fracs is None else np.asarray(rho_fracs)
    k = superlinearity_constant(profile)
    worst = 0.0
    for e in e_values:
        for fr in rho_fracs:
            rho = fr * rho0(profile, e)
            i2 = action_i2(profile, e, rho, rtol)
            worst = max(worst, max(abs(rho), i2) / np.sqrt(e))
    rep = SuperlinearityReport(k, worst, len(e_values) * len(rho_fracs))
    if not rep.holds:
        raise BoundViolation(f"max(|I1|,|I2|)/sqrt(e) = {worst:.6g} > k = {k:.6g}")
    return rep


@dataclass
class FrequencyMap:
    """Energy as a function of the actions, via ``I2(e, I1) = i2`` inverted in ``e``."""

    profile: object
    rtol: float = RTOL
    _cache: dict = field(default_factory=dict, repr=False)

    def e_min(self, i1: float) -> float:
        return i1**2 / (2 * FOUR_PI2 * self.profile.x1**2)

    def h(self, i1: float, i2: float) -> float:
        lo = self.e_min(i1)
        i2_lo = action_i2(self.profile, lo, i1, self.rtol) if i1 != 0 else 0.0
        if not i2 > i2_lo:
            raise DomainError("action pair outside the image of the domain")
        hi = max(2 * lo, 1.0)
        while action_i2(self.profile, hi, i1, self.rtol) < i2:
            hi *= 2
        return brentq(lambda e: action_i2(self.profile, e, i1, self.rtol) - i2, lo, hi,
                      xtol=1e-15, rtol=1e-15)


def write_actions_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["e", "rho", "i1", "i2", "tau", "phiAdvance", "tauOracle", "phiOracle",
                    "relErrTau", "relErrPhi"])
        for r in rows:
            w.writerow([f"{v:.17e}" for v in r])
