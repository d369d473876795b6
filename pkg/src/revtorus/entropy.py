"""Empirical polynomial entropy from separated-set counts.

Samples live on the energy level in ``(phi_bar, s_bar, theta)``. The ambient
distance is the max of the unit-torus distances of ``phi_bar``, ``s_bar`` and
``theta / 2 pi``; the dynamical distance ``d_t`` is its max over the stored
time grid. For every sample pair and every ``eps`` the kernel records the first
stored time at which the pair is ``eps``-apart, so the separated-set tables need
no second pass over the trajectories.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numba
import numpy as np
from scipy.stats import qmc

from .dynamics import level_vector_field
from .errors import InequalityViolated, Saturated, ValidationError

TWO_PI = 2.0 * np.pi
NEVER = np.iinfo(np.int16).max
DEFAULT_EPS = (0.4, 0.3, 0.2, 0.1)


@dataclass(frozen=True)
class FlowSampleSet:
    """Coarse trajectories ``(n_times, N, 3)`` in unit-torus coordinates."""

    times: np.ndarray
    coords: np.ndarray          # float64, each coordinate reduced mod 1
    label: str = ""

    @property
    def n(self) -> int:
        return self.coords.shape[1]


def sobol_states(n: int, seed: int) -> np.ndarray:
    """``n`` points of a scrambled Sobol sequence in ``[0, 1)^3``."""
    m = int(np.ceil(np.log2(max(n, 2))))
    pts = qmc.Sobol(3, scramble=True, seed=np.random.default_rng(seed)).random_base2(m)
    return pts[:n]


def _time_grid(t_max, dt, stride):
    n_steps = int(round(t_max / dt))
    if abs(n_steps * dt - t_max) > 1e-9 * t_max or n_steps % stride:
        raise ValidationError("t_max must be a multiple of dt * stride")
    return n_steps, np.arange(n_steps // stride + 1) * dt * stride


def sample_revolution(profile, n: int = 5000, t_max: float = 200.0, seed: int = 0,
                      dt: float = 0.05, stride: int = 10, e: float = 0.5) -> FlowSampleSet:
    """Classical RK4 of the level field from Sobol initial states, stored every ``stride`` steps."""
    n_steps, times = _time_grid(t_max, dt, stride)
    u = sobol_states(n, seed)
    y = np.column_stack([u[:, 0], u[:, 1], TWO_PI * u[:, 2]])
    out = np.empty((times.size, n, 3))

    def f(y):
        return np.column_stack(level_vector_field(profile, y[:, 1], y[:, 2], e))

    def store(k, y):
        out[k, :, 0] = np.mod(y[:, 0], 1.0)
        out[k, :, 1] = np.mod(y[:, 1], 1.0)
        out[k, :, 2] = np.mod(y[:, 2] / TWO_PI, 1.0)

    store(0, y)
    for step in range(1, n_steps + 1):
        k1 = f(y)
        k2 = f(y + 0.5 * dt * k1)
        k3 = f(y + 0.5 * dt * k2)
        k4 = f(y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if step % stride == 0:
            store(step // stride, y)
    return FlowSampleSet(times, out, "revolution")


def sample_linear(freq, n: int = 5000, t_max: float = 200.0, seed: int = 0,
                  dt: float = 0.05, stride: int = 10, label: str = "") -> FlowSampleSet:
    """Closed-form flow ``(a, b, theta) -> (a, b) + t freq(theta)`` with ``theta`` fixed."""
    _, times = _time_grid(t_max, dt, stride)
    u = sobol_states(n, seed)
    th = TWO_PI * u[:, 2]
    w = np.asarray(freq(th), dtype=float)          # (2, n)
    out = np.empty((times.size, n, 3))
    out[:, :, 0] = np.mod(u[None, :, 0] + times[:, None] * w[0][None], 1.0)
    out[:, :, 1] = np.mod(u[None, :, 1] + times[:, None] * w[1][None], 1.0)
    out[:, :, 2] = u[None, :, 2]
    return FlowSampleSet(times, out, label)


def flat_geodesic_flow(a: float = 1 / TWO_PI, b: float = 1.0, e: float = 0.5):
    """Level frequencies of the flat metric ``diag(4 pi^2 a^2, b^2)``."""
    k = np.sqrt(2 * e)
    return lambda th: (k * np.cos(th) / (TWO_PI * a), k * np.sin(th) / b)


def kronecker_flow(direction=(1.0, np.sqrt(2.0))):
    """One fixed frequency for every sample: the rank-0 family."""
    d = tuple(float(v) for v in direction)
    return lambda th: (np.full(th.shape, d[0]), np.full(th.shape, d[1]))


def rank_one_flow(base=(0.5, np.sqrt(2.0) / 4), slope: float = 0.25):
    """Action-angle family with frequency ``base + slope (sin theta, 0)`` (rank 1)."""
    return lambda th: (base[0] + slope * np.sin(th), np.full(th.shape, base[1]))


@numba.njit(cache=True)
def _tdist(a, b):
    d = abs(a - b)
    return min(d, 1.0 - d)


@numba.njit(cache=True)
def _ambient(P, i, j):
    d0 = _tdist(P[i, 0], P[j, 0])
    d1 = _tdist(P[i, 1], P[j, 1])
    d2 = _tdist(P[i, 2], P[j, 2])
    return max(d0, max(d1, d2))


def ambient_distance(a, b) -> np.ndarray:
    """Max of unit-torus distances; ``a`` and ``b`` broadcast on a trailing axis of 3."""
    d = np.abs(np.asarray(a) - np.asarray(b)) % 1.0
    return np.max(np.minimum(d, 1.0 - d), axis=-1)


def dyn_distance(samples: FlowSampleSet, i: int, j: int, t: float) -> float:
    """``d_t`` between samples ``i`` and ``j``: max over stored times ``<= t``."""
    if t > samples.times[-1] + 1e-12:
        raise ValidationError("t exceeds the stored horizon")
    k = int(np.searchsorted(samples.times, t + 1e-12, side="right"))
    return float(np.max(ambient_distance(samples.coords[:k, i], samples.coords[:k, j])))


@numba.njit(cache=True)
def _first_separation(coords, eps):
    """``first[p, e]``: first time index with ambient distance ``>= eps[e]``."""
    nt, n, _ = coords.shape
    ne = eps.shape[0]
    npair = n * (n - 1) // 2
    first = np.full((npair, ne), NEVER, dtype=np.int16)
    active = np.empty(npair, dtype=np.int64)
    ai = np.empty(npair, dtype=np.int32)
    aj = np.empty(npair, dtype=np.int32)
    p = 0
    for i in range(n):
        for j in range(i + 1, n):
            active[p] = p
            ai[p] = i
            aj[p] = j
            p += 1
    na = npair
    # eps sorted decreasing: the smallest eps is crossed first, the largest last.
    for k in range(nt):
        P = coords[k]
        w = 0
        for m in range(na):
            q = active[m]
            d = _ambient(P, ai[m], aj[m])
            done = True
            for e in range(ne):
                if first[q, e] == NEVER:
                    if d >= eps[e]:
                        first[q, e] = k
                    else:
                        done = False
            if not done:
                active[w] = q
                ai[w] = ai[m]
                aj[w] = aj[m]
                w += 1
        na = w
        if na == 0:
            break
    return first


@numba.njit(cache=True)
def _pair(i, j, n):
    if i > j:
        i, j = j, i
    return i * n - i * (i + 1) // 2 + (j - i - 1)


@numba.njit(cache=True)
def _greedy(first, e, k, n):
    """Greedy maximal separated set in sample order; returns accepted indices."""
    acc = np.empty(n, dtype=np.int64)
    na = 0
    for i in range(n):
        ok = True
        for a in range(na):
            if first[_pair(i, acc[a], n), e] > k:
                ok = False
                break
        if ok:
            acc[na] = i
            na += 1
    return acc[:na]


@numba.njit(cache=True)
def _pruned_cover(first, e, k, n, centers):
    """Drop redundant centers from an eps-cover of the samples (reverse order)."""
    nc = centers.shape[0]
    cov = np.zeros(n, dtype=np.int64)
    near = np.zeros((nc, n), dtype=np.bool_)
    for c in range(nc):
        ci = centers[c]
        for i in range(n):
            if i == ci or first[_pair(i, ci, n), e] > k:
                near[c, i] = True
                cov[i] += 1
    alive = nc
    for c in range(nc - 1, -1, -1):
        redundant = True
        for i in range(n):
            if near[c, i] and cov[i] < 2:
                redundant = False
                break
        if redundant:
            for i in range(n):
                if near[c, i]:
                    cov[i] -= 1
            alive -= 1
    return alive


@dataclass(frozen=True)
class SeparationTable:
    eps: np.ndarray
    t: np.ndarray
    counts: np.ndarray          # (n_eps, n_t) greedy separated counts
    n: int
    cover: np.ndarray | None = None   # pruned greedy cover counts

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["epsilon", "t", "count"])
            for a, e in enumerate(self.eps):
                for b, t in enumerate(self.t):
                    w.writerow([f"{e:.17e}", f"{t:.17e}", str(int(self.counts[a, b]))])


class SeparationIndex:
    """First-separation times of every sample pair for a fixed ``eps`` list."""

    def __init__(self, samples: FlowSampleSet, eps):
        eps = np.sort(np.asarray(eps, dtype=float))[::-1].copy()
        if np.any(eps <= 0):
            raise ValidationError("eps must be positive")
        if samples.times.size >= NEVER:
            raise ValidationError("too many stored times for the int16 index")
        self.samples = samples
        self.eps = eps
        self.first = _first_separation(samples.coords, eps)

    def _k(self, t):
        return int(np.searchsorted(self.samples.times, t + 1e-12, side="right")) - 1

    def _e(self, eps):
        hit = np.nonzero(np.isclose(self.eps, eps, rtol=1e-12, atol=0))[0]
        if not hit.size:
            raise ValidationError(f"eps = {eps} not indexed")
        return int(hit[0])

    def separated(self, t: float, eps: float) -> np.ndarray:
        return _greedy(self.first, self._e(eps), self._k(t), self.samples.n)

    def separated_count(self, t: float, eps: float) -> int:
        return int(self.separated(t, eps).size)

    def cover_count(self, t: float, eps: float) -> int:
        e, k = self._e(eps), self._k(t)
        centers = _greedy(self.first, e, k, self.samples.n)
        return int(_pruned_cover(self.first, e, k, self.samples.n, centers))

    def table(self, t_list, with_cover: bool = False) -> SeparationTable:
        t_list = np.asarray(t_list, dtype=float)
        C = np.array([[self.separated_count(t, e) for t in t_list] for e in self.eps])
        G = None
        if with_cover:
            G = np.array([[self.cover_count(t, e) for t in t_list] for e in self.eps])
        return SeparationTable(self.eps, t_list, C, self.samples.n, G)


def separated_count(samples: FlowSampleSet, t: float, eps: float) -> int:
    return SeparationIndex(samples, [eps]).separated_count(t, eps)


@dataclass(frozen=True)
class EntropyEstimate:
    eps: np.ndarray
    slopes: np.ndarray
    r2: np.ndarray
    saturated: np.ndarray       # count at window end >= N/4
    h_pol: float
    windows: tuple              # per-eps fitting window
    table: SeparationTable

    def write_summary_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["epsilon", "slope", "r2", "hPolEstimate"])
            for e, s, r in zip(self.eps, self.slopes, self.r2):
                w.writerow([f"{e:.17e}", f"{s:.17e}", f"{r:.17e}", f"{self.h_pol:.17e}"])


def default_times(t_max: float, t_min: float = 1.0, n: int = 32) -> np.ndarray:
    return np.geomspace(t_min, t_max, n)


def _fit(x, y):
    if np.ptp(y) == 0:
        return 0.0, 1.0         # constant counts: polyfit would leave roundoff
    c1, c0 = np.polyfit(x, y, 1)
    res = y - (c1 * x + c0)
    tot = np.sum((y - y.mean())**2)
    return float(c1), float(1.0 - np.sum(res**2) / tot) if tot > 0 else 1.0


def poly_entropy_estimate(index: SeparationIndex, t_window=None, t_list=None,
                          with_cover: bool = False, t_floor: float = 2.0) -> EntropyEstimate:
    """Per-eps log-log slopes of the separated counts and their max.

    With ``t_window = None`` each eps is fitted on its own last unsaturated
    decade ``[t_hi / 10, t_hi]``, ``t_hi`` being the largest tabulated time with
    count below ``N/4``; an eps whose decade would start below ``t_floor`` is
    marked saturated. With an explicit window, an eps is saturated when its
    count reaches ``N/4`` inside the window. ``Saturated`` is raised when no
    eps is usable.
    """
    s = index.samples
    t_end = s.times[-1]
    if t_window is not None and not 0 < t_window[0] < t_window[1] <= t_end + 1e-9:
        raise ValidationError("window outside the stored horizon")
    if t_list is None:
        t_list = default_times(t_end)
        if t_window is not None:
            t_list = np.r_[t_list, np.geomspace(*t_window, 12)]
    k = np.searchsorted(s.times, np.asarray(t_list) - 1e-9)
    times = np.unique(s.times[np.minimum(k, s.times.size - 1)])
    tab = index.table(times, with_cover)
    cap = s.n / 4
    slopes, r2, sat, wins = [], [], [], []
    for a in range(len(index.eps)):
        c = tab.counts[a].astype(float)
        if t_window is None:
            ok = np.nonzero(c < cap)[0]
            hi = times[ok[-1]] if ok.size and ok[0] == 0 else times[0]
            lo = hi / 10
            bad = lo < t_floor - 1e-9
        else:
            lo, hi = t_window
            m = (times >= lo - 1e-9) & (times <= hi + 1e-9)
            bad = bool(np.any(c[m] >= cap))
        m = (times >= lo - 1e-9) & (times <= hi + 1e-9)
        if m.sum() < 3:
            bad = True
            slope, rr = float("nan"), float("nan")
        else:
            slope, rr = _fit(np.log(times[m]), np.log(c[m]))
        slopes.append(slope)
        r2.append(rr)
        sat.append(bad)
        wins.append((float(lo), float(hi)))
    slopes, r2, sat = map(np.asarray, (slopes, r2, sat))
    if np.all(sat):
        raise Saturated(f"no eps has an unsaturated fitting window (N/4 = {cap:.0f})")
    h = float(np.max(slopes[~sat]))
    return EntropyEstimate(index.eps, slopes, r2, sat, h, tuple(wins), tab)


@dataclass(frozen=True)
class TheoremOneReport:
    tau_hat: float
    h_pol: float
    slack: float

    @property
    def margin(self) -> float:
        return self.h_pol + 1 + self.slack - self.tau_hat


def theorem_one_check(tau_hat: float, h_pol: float, slack: float = 0.3) -> TheoremOneReport:
    """``tau <= h_pol + 1`` up to ``slack``."""
    rep = TheoremOneReport(float(tau_hat), float(h_pol), slack)
    if rep.margin < 0:
        raise InequalityViolated(f"tau = {tau_hat:.3f} > h_pol + 1 + slack = "
                                 f"{h_pol + 1 + slack:.3f}")
    return rep
