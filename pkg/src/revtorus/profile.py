"""Meridian profiles of tori of revolution.

A profile is a pair of 1-periodic trigonometric series ``(x, y)``; the torus
is the image of ``(phi, s) -> (x(s) cos 2 pi phi, x(s) sin 2 pi phi, y(s))``
and carries the induced metric ``diag(4 pi^2 x(s)^2, r(s)^2)`` with
``r = sqrt(x'^2 + y'^2)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq

from .errors import (NotImmersed, NotMorse, NotPositive, RepeatedCriticalValue,
                     ValidationError)

TWO_PI = 2.0 * np.pi

MORSE_THRESHOLD = 1e-8
SEPARATION_THRESHOLD = 1e-6
SCAN_SAMPLES = 8192


def _cos_sin_2pi(u):
    """``cos(2 pi u), sin(2 pi u)`` with exact quarter-period reduction.

    Exact zeros at multiples of 1/4 keep critical circles at ``s = 0, 1/2``
    exactly invariant under the flow.
    """
    u = u - np.floor(u)
    q = np.rint(4.0 * u)
    ang = TWO_PI * (u - 0.25 * q)        # in [-pi/4, pi/4]
    c0, s0 = np.cos(ang), np.sin(ang)
    q = q.astype(np.int64) % 4
    c = np.where(q == 0, c0, np.where(q == 1, -s0, np.where(q == 2, -c0, s0)))
    sn = np.where(q == 0, s0, np.where(q == 1, c0, np.where(q == 2, -s0, -c0)))
    return c, sn


def _cos_sin_2pi_scalar(u: float):
    """Scalar twin of :func:`_cos_sin_2pi`, used on the integrator hot path."""
    u = u - math.floor(u)
    q = round(4.0 * u)
    ang = TWO_PI * (u - 0.25 * q)
    c0, s0 = math.cos(ang), math.sin(ang)
    q %= 4
    if q == 0:
        return c0, s0
    if q == 1:
        return -s0, c0
    if q == 2:
        return -c0, -s0
    return s0, -c0


@dataclass(frozen=True)
class TrigSeries:
    """``a0 + sum_k cos[k-1] cos(2 pi k s) + sin[k-1] sin(2 pi k s)``."""

    a0: float
    cos: tuple[float, ...] = ()
    sin: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "a0", float(self.a0))
        object.__setattr__(self, "cos", tuple(float(c) for c in self.cos))
        object.__setattr__(self, "sin", tuple(float(c) for c in self.sin))
        vals = (self.a0,) + self.cos + self.sin
        if not all(np.isfinite(vals)):
            raise ValidationError("trigonometric coefficients must be finite")

    @property
    def order(self) -> int:
        return max(len(self.cos), len(self.sin))

    def _coefficients(self):
        n = self.order
        a = np.zeros(n)
        b = np.zeros(n)
        a[:len(self.cos)] = self.cos
        b[:len(self.sin)] = self.sin
        return a, b

    def _jet_scalar(self, s: float, nmax: int) -> list[float]:
        out = [0.0] * (nmax + 1)
        n_cos = len(self.cos)
        for k in range(1, self.order + 1):
            a = self.cos[k - 1] if k <= n_cos else 0.0
            b = self.sin[k - 1] if k <= len(self.sin) else 0.0
            c, sn = _cos_sin_2pi_scalar(k * s)
            even, odd = a * c + b * sn, b * c - a * sn
            w = TWO_PI * k
            wn = 1.0
            for n in range(nmax + 1):
                base = even if n % 2 == 0 else odd
                out[n] += (-wn if n % 4 in (2, 3) else wn) * base
                wn *= w
        out[0] += self.a0
        return out

    def jet(self, s, nmax: int = 2) -> list[np.ndarray]:
        """Derivatives of orders ``0..nmax`` at ``s`` (any array shape)."""
        s = np.asarray(s, dtype=float)
        if s.ndim == 0:
            return [np.float64(v) for v in self._jet_scalar(float(s), nmax)]
        a, b = self._coefficients()
        out = []
        if a.size == 0:
            out.append(np.full(s.shape, self.a0))
            out.extend(np.zeros(s.shape) for _ in range(nmax))
            return out
        k = np.arange(1, a.size + 1)
        w = TWO_PI * k
        c, sn = _cos_sin_2pi(np.multiply.outer(s, k))
        ac, bs = c * a, sn * b
        as_, bc = sn * a, c * b
        even = ac + bs       # d^0, negated at d^2
        odd = bc - as_       # d^1, negated at d^3
        for n in range(nmax + 1):
            base = even if n % 2 == 0 else odd
            sign = -1.0 if n % 4 in (2, 3) else 1.0
            val = sign * (base @ w**n) if n else base.sum(-1)
            if n == 0:
                val = val + self.a0
            out.append(val)
        return out

    def __call__(self, s):
        return self.jet(s, 0)[0]

    def derivative_at(self, s: float, n: int) -> float:
        return float(self.jet(s, n)[n])

    def scaled(self, c: float) -> "TrigSeries":
        return TrigSeries(c * self.a0, tuple(c * v for v in self.cos),
                          tuple(c * v for v in self.sin))

    def to_dict(self) -> dict:
        return {"a0": self.a0, "cos": list(self.cos), "sin": list(self.sin)}

    @classmethod
    def from_dict(cls, d: dict) -> "TrigSeries":
        unknown = set(d) - {"a0", "cos", "sin"}
        if unknown:
            raise ValidationError(f"unknown series keys: {sorted(unknown)}")
        return cls(d.get("a0", 0.0), tuple(d.get("cos", ())), tuple(d.get("sin", ())))


class CriticalPointInfo(NamedTuple):
    s_crit: float
    x_value: float
    kind: str           # "minimum" | "maximum"
    second_deriv: float


class Geometry(NamedTuple):
    x: np.ndarray
    dx: np.ndarray
    ddx: np.ndarray
    dy: np.ndarray
    r: np.ndarray


class _MetricMixin:
    """Shared evaluation API for anything with an ``x`` and ``r`` profile."""

    def geometry(self, s) -> Geometry:
        x, dx, ddx, dy, _, r, _ = self.full_jet(s)
        return Geometry(x, dx, ddx, dy, r)

    def metric_diagonal(self, s):
        x, _, _, _, _, r, _ = self.full_jet(s)
        return 4 * np.pi**2 * x**2, r**2

    def area_density(self, s):
        """Riemannian area density ``2 pi x r`` in (phi, s) coordinates."""
        x, _, _, _, _, r, _ = self.full_jet(s)
        return TWO_PI * x * r


@dataclass(frozen=True)
class ProfileCurve(_MetricMixin):
    x_series: TrigSeries
    y_series: TrigSeries
    critical_points: tuple[CriticalPointInfo, ...] = field(default=())
    tolerance: float = 1e-13

    def full_jet(self, s):
        """``(x, x', x'', y', y'', r, r')`` at ``s``."""
        x, dx, ddx = self.x_series.jet(s, 2)
        _, dy, ddy = self.y_series.jet(s, 2)
        r = np.hypot(dx, dy)
        dr = (dx * ddx + dy * ddy) / r
        return x, dx, ddx, dy, ddy, r, dr

    def x(self, s):
        return self.x_series(s)

    @property
    def minimum(self) -> CriticalPointInfo:
        """The global minimum ``x_1`` of ``x``."""
        return self.critical_points[0]

    @property
    def x1(self) -> float:
        return self.critical_points[0].x_value

    def rho0(self, e: float = 0.5) -> float:
        """Upper end of the Clairaut interval J(e), ``2 pi sqrt(2e) x_1``."""
        return TWO_PI * np.sqrt(2 * e) * self.x1

    def scaled(self, c: float) -> "ProfileCurve":
        return make_profile(self.x_series.scaled(c), self.y_series.scaled(c),
                            self.tolerance)

    def to_config(self) -> dict:
        return {"x": self.x_series.to_dict(), "y": self.y_series.to_dict()}

    def meridian_length(self) -> float:
        from .quadrature import gauss_kronrod
        return float(gauss_kronrod(lambda s: self.full_jet(s)[5], 0.0, 1.0,
                                   rtol=1e-13)[0])

    def fundamental_volume(self) -> float:
        """Riemannian area of the fundamental domain ``[0, 1]^2``."""
        from .quadrature import gauss_kronrod
        return float(gauss_kronrod(self.area_density, 0.0, 1.0, rtol=1e-13)[0])


@dataclass(frozen=True)
class FlatTorus(_MetricMixin):
    """Flat metric ``diag(4 pi^2 a^2, b^2)``: constant ``x = a`` and ``r = b``.

    Not a torus of revolution; it exposes the same geometry API so the
    dynamics and distance code can run flat references.
    """

    a: float
    b: float

    @classmethod
    def from_metric(cls, g_phiphi: float, g_ss: float) -> "FlatTorus":
        return cls(np.sqrt(g_phiphi) / TWO_PI, np.sqrt(g_ss))

    def full_jet(self, s):
        s = np.asarray(s, dtype=float)
        one = np.ones(s.shape)
        zero = np.zeros(s.shape)
        return self.a * one, zero, zero, self.b * one, zero, self.b * one, zero

    def x(self, s):
        return self.a * np.ones(np.shape(s))

    def meridian_length(self) -> float:
        return float(self.b)

    def fundamental_volume(self) -> float:
        return float(TWO_PI * self.a * self.b)


def _critical_points(xs: TrigSeries, tolerance: float):
    grid = np.arange(SCAN_SAMPLES) / SCAN_SAMPLES
    dx = xs.jet(grid, 1)[1]
    scale = np.max(np.abs(dx))
    if scale == 0.0:
        raise NotMorse("x is constant")

    def f(s):
        return xs.derivative_at(s, 1)

    roots = []
    nxt = np.roll(dx, -1)
    for i in range(SCAN_SAMPLES):
        a, b = grid[i], grid[i] + 1.0 / SCAN_SAMPLES
        fa, fb = dx[i], nxt[i]
        if abs(fa) <= tolerance * scale:
            roots.append(a)
        elif fa * fb < 0 and abs(fb) > tolerance * scale:
            roots.append(brentq(f, a, b, xtol=1e-15, rtol=1e-15))
    # Newton polish, then fold into [0, 1) and deduplicate.
    refined = []
    for s in roots:
        for _ in range(3):
            d1, d2 = xs.jet(s, 2)[1:]
            if d2 == 0 or abs(d1) < 1e-300:
                break
            step = d1 / d2
            if abs(step) > 1.0 / SCAN_SAMPLES:
                break
            s = s - step
        s = float(np.mod(s, 1.0))
        if not any(min(abs(s - t), 1 - abs(s - t)) < 1e-9 for t in refined):
            refined.append(s)
    return refined, scale


def make_profile(x_series: TrigSeries, y_series: TrigSeries,
                 tolerance: float = 1e-13) -> ProfileCurve:
    """Validate a profile and locate the critical points of ``x``.

    Raises
    ------
    NotPositive, NotMorse, RepeatedCriticalValue, NotImmersed
    """
    if not tolerance > 0:
        raise ValidationError("tolerance must be positive")
    grid = np.arange(SCAN_SAMPLES) / SCAN_SAMPLES
    xv, dxv, ddxv = x_series.jet(grid, 2)

    roots, dscale = _critical_points(x_series, tolerance)
    if not roots:
        raise NotMorse("x' has no roots")
    info = []
    ddscale = np.max(np.abs(ddxv))
    for s in roots:
        x0, d1, d2 = x_series.jet(s, 2)
        if abs(d1) > max(tolerance, 1e-10) * dscale * 10:
            raise NotMorse(f"root refinement failed at s={s:.6g}")
        if abs(d2) < MORSE_THRESHOLD * ddscale:
            raise NotMorse(f"degenerate critical point at s={s:.6g}")
        info.append(CriticalPointInfo(s, float(x0), "minimum" if d2 > 0 else "maximum",
                                      float(d2)))
    info.sort(key=lambda c: c.x_value)

    xmin = min(float(xv.min()), info[0].x_value)
    if xmin <= 0:
        raise NotPositive(f"min x = {xmin:.6g} <= 0")

    spread = info[-1].x_value - info[0].x_value
    vals = [c.x_value for c in info]
    for u, v in zip(vals[:-1], vals[1:]):
        if v - u < SEPARATION_THRESHOLD * spread:
            raise RepeatedCriticalValue(
                f"critical values {u:.12g} and {v:.12g} are not separated")

    dy = y_series.jet(grid, 1)[1]
    r = np.hypot(dxv, dy)
    if r.min() <= 1e-12 * max(r.max(), 1e-300):
        raise NotImmersed(f"min r = {r.min():.3g}")
    return ProfileCurve(x_series, y_series, tuple(info), tolerance)


def canonical_profile() -> ProfileCurve:
    """``x = 2 + cos 2 pi s``, ``y = sin 2 pi s``: the standard round torus."""
    return make_profile(TrigSeries(2.0, (1.0,)), TrigSeries(0.0, (), (1.0,)))


def profile_from_config(cfg: dict) -> ProfileCurve:
    try:
        xs, ys = cfg["x"], cfg["y"]
    except (KeyError, TypeError):
        raise ValidationError('profile config needs keys "x" and "y"') from None
    return make_profile(TrigSeries.from_dict(xs), TrigSeries.from_dict(ys))


def load_profile(path) -> ProfileCurve:
    with open(path) as fh:
        cfg = json.load(fh)
    return profile_from_config(cfg.get("profile", cfg))


def random_profile(rng: np.random.Generator, harmonics: int = 2) -> ProfileCurve:
    """Draw a valid profile near the round torus (rejection sampling).

    Amplitudes are kept modest so hyperbolic Floquet multipliers stay below
    ~1e4 and every quadrature stays well conditioned.
    """
    for _ in range(1000):
        c1 = rng.uniform(0.5, 1.0)
        a0 = rng.uniform(2.0, 3.0)
        cos = [c1] + list(rng.uniform(-0.15, 0.15, harmonics - 1) * c1)
        sin = [0.0] + list(rng.uniform(-0.15, 0.15, harmonics - 1) * c1)
        ycos = [0.0] + list(rng.uniform(-0.1, 0.1, harmonics - 1))
        ysin = [rng.uniform(1.0, 1.5)] + list(rng.uniform(-0.1, 0.1, harmonics - 1))
        try:
            return make_profile(TrigSeries(a0, tuple(cos), tuple(sin)),
                                TrigSeries(0.0, tuple(ycos), tuple(ysin)))
        except ValidationError:
            continue
    raise RuntimeError("could not draw a valid profile")
