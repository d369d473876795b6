"""Ball-volume growth on the universal cover and growth of ``Z^l``.

Distances solve the eikonal equation ``u_phi^2/(4 pi^2 x^2) + u_s^2/r^2 = 1``
with a first-order fast-marching method on a rectangular ``(phi, s)`` grid.
The spacings are chosen per axis so that ``1/h_phi`` and ``1/h_s`` are
integers: deck translations by ``(m, n)`` then map grid nodes to grid nodes.
"""

from __future__ import annotations

import csv
import heapq
import itertools
from dataclasses import dataclass
from math import gcd

import numba
import numpy as np

from .errors import (BoxTooSmall, DegenerateWindow, NoConvergenceTrend, NotGenerating,
                     ValidationError)

TWO_PI = 2.0 * np.pi


@numba.njit(cache=True)
def _fmm(Hphi, Hs, nphi, init_i, init_j, init_v, r_max):
    """Fast marching on an ``(n_s, n_phi)`` grid with row-dependent metric steps.

    ``Hphi[j]`` and ``Hs[j]`` are the metric lengths of one grid step in
    ``phi`` and ``s`` on row ``j``. Returns the distance array (``inf`` where
    not accepted) and a flag set when an accepted cell with value ``<= r_max``
    lies on the boundary.
    """
    ns = Hphi.shape[0]
    d = np.full((ns, nphi), np.inf)
    state = np.zeros((ns, nphi), dtype=np.uint8)    # 0 far, 1 trial, 2 accepted, 3 fixed
    heap = [(0.0, 0)]
    heap.pop()
    for k in range(init_i.shape[0]):
        i, j = init_i[k], init_j[k]
        d[j, i] = init_v[k]
        state[j, i] = 3
        heapq.heappush(heap, (init_v[k], j * nphi + i))
    hit = False
    di = np.array([1, -1, 0, 0])
    dj = np.array([0, 0, 1, -1])
    while len(heap) > 0:
        v, idx = heapq.heappop(heap)
        j = idx // nphi
        i = idx - j * nphi
        if state[j, i] == 2 or v > d[j, i]:
            continue
        if v > r_max:
            break
        state[j, i] = 2
        if i == 0 or j == 0 or i == nphi - 1 or j == ns - 1:
            hit = True
            break
        for k in range(4):
            ii = i + di[k]
            jj = j + dj[k]
            if state[jj, ii] >= 2:
                continue
            # Upwind neighbors along each axis.
            # One-sided at the box edge so boundary cells are reachable.
            a = np.inf
            if ii > 0:
                a = d[jj, ii - 1]
            if ii < nphi - 1:
                a = min(a, d[jj, ii + 1])
            b = np.inf
            if jj > 0:
                b = d[jj - 1, ii]
            if jj < ns - 1:
                b = min(b, d[jj + 1, ii])
            hp = Hphi[jj]
            hs = Hs[jj]
            if a == np.inf and b == np.inf:
                continue
            if a == np.inf:
                u = b + hs
            elif b == np.inf:
                u = a + hp
            else:
                # ((u-a)/hp)^2 + ((u-b)/hs)^2 = 1
                p2 = 1.0 / (hp * hp)
                q2 = 1.0 / (hs * hs)
                A = p2 + q2
                B = -2.0 * (a * p2 + b * q2)
                C = a * a * p2 + b * b * q2 - 1.0
                disc = B * B - 4.0 * A * C
                u = np.inf
                if disc >= 0:
                    u = (-B + np.sqrt(disc)) / (2.0 * A)
                if not (u >= a and u >= b):
                    u = min(a + hp, b + hs)
            if u < d[jj, ii]:
                d[jj, ii] = u
                state[jj, ii] = 1
                heapq.heappush(heap, (u, jj * nphi + ii))
    for j in range(ns):
        for i in range(nphi):
            if state[j, i] < 2:
                d[j, i] = np.inf
    return d, hit


def _run_fmm(Hphi, Hs, nphi, init_i, init_j, init_v, r_max):
    return _fmm(Hphi, Hs, np.int64(nphi), init_i, init_j, init_v, r_max)


@dataclass(frozen=True)
class DistanceField:
    h_phi: float
    h_s: float
    phi0: float
    s0: float
    i0: int                     # grid index of the source
    j0: int
    values: np.ndarray          # (n_s, n_phi)
    weight: np.ndarray          # (n_s,) area density 2 pi x r per row
    r_max: float

    @property
    def shape(self):
        return self.values.shape

    def at(self, m_phi: float, n_s: float) -> float:
        """Distance to the node at ``source + (m_phi, n_s)`` (must be a node)."""
        i = self.i0 + m_phi / self.h_phi
        j = self.j0 + n_s / self.h_s
        ii, jj = int(round(i)), int(round(j))
        if abs(i - ii) > 1e-9 or abs(j - jj) > 1e-9:
            raise ValidationError("offset is not a grid node")
        return float(self.values[jj, ii])

    def cell_areas(self) -> np.ndarray:
        return np.broadcast_to((self.weight * self.h_phi * self.h_s)[:, None], self.shape)


def _axis_steps(profile, h):
    s = np.linspace(0, 1, 2049)
    x, _, _, _, _, r, _ = profile.full_jet(s)
    n_phi = int(np.ceil(TWO_PI * float(np.max(x)) / h))
    n_s = int(np.ceil(float(np.max(r)) / h))
    return 1.0 / n_phi, 1.0 / n_s, float(np.min(TWO_PI * x)), float(np.min(r))


def distance_field(profile, source=None, r_max: float = 40.0, h: float = 0.1,
                   margin: float = 0.5, init_cells: int = 6) -> DistanceField:
    """Eikonal distance from ``source = (phi0, s0)`` up to ``r_max``.

    ``h`` bounds the metric length of each grid step. The ``init_cells``
    neighborhood of the source is initialized with the frozen-metric distance.
    """
    if not h > 0 or not r_max > 0:
        raise ValidationError("h and r_max must be positive")
    if source is None:
        cps = getattr(profile, "critical_points", None)
        source = (0.0, cps[0].s_crit if cps else 0.0)
    phi0, s0 = map(float, source)
    hp, hs, gmin, rmin = _axis_steps(profile, h)
    Lphi = r_max / gmin + margin
    Ls = r_max / rmin + margin
    Nphi = int(np.ceil(Lphi / hp))
    Ns = int(np.ceil(Ls / hs))
    s_rows = s0 + hs * np.arange(-Ns, Ns + 1)
    x, _, _, _, _, r, _ = profile.full_jet(s_rows)
    Hphi = TWO_PI * x * hp
    Hs = r * hs
    # Frozen-metric initialization around the source.
    gx, gr = TWO_PI * float(x[Ns]), float(r[Ns])
    k = init_cells
    ii, jj = np.meshgrid(np.arange(-k, k + 1), np.arange(-k, k + 1))
    keep = ii**2 + jj**2 <= k * k
    ii, jj = ii[keep], jj[keep]
    iv = np.hypot(gx * ii * hp, gr * jj * hs)
    vals, hit = _run_fmm(Hphi, Hs, 2 * Nphi + 1, (ii + Nphi).astype(np.int64),
                         (jj + Ns).astype(np.int64), iv.astype(np.float64), float(r_max))
    if hit:
        raise BoxTooSmall(f"front reached the box boundary below r_max = {r_max}")
    return DistanceField(hp, hs, phi0, s0, Nphi, Ns, vals, TWO_PI * x * r, float(r_max))


@dataclass(frozen=True)
class GrowthSeries:
    params: np.ndarray
    values: np.ndarray
    window: tuple | None = None
    exponent: float | None = None
    residual: float | None = None

    def __post_init__(self):
        p = np.asarray(self.params, dtype=float)
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "params", p)
        object.__setattr__(self, "values", v)
        if p.shape != v.shape:
            raise ValidationError("params and values differ in length")
        if np.any(np.diff(v) < 0):
            raise ValidationError("growth series must be nondecreasing")

    def fitted(self, window) -> "GrowthSeries":
        e, res = growth_exponent(self, window)
        return GrowthSeries(self.params, self.values, tuple(window), e, res)

    def write_csv(self, path, names=("param", "value"), extra=None) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(list(names) + ([extra[0]] if extra else []))
            for i, (p, v) in enumerate(zip(self.params, self.values)):
                row = [f"{p:.17e}" if names[0] != "k" else str(int(p)),
                       f"{v:.17e}" if names[1] != "count" else str(int(v))]
                if extra:
                    row.append(f"{extra[1][i]:.17e}")
                w.writerow(row)


def ball_volume(field: DistanceField, r_list) -> GrowthSeries:
    """``Vol B(x, r) = sum`` of cell areas with distance ``< r``."""
    r_list = np.asarray(r_list, dtype=float)
    if r_list.size and r_list.max() > field.r_max:
        raise ValidationError("radius exceeds the field's r_max")
    d = field.values.ravel()
    w = field.cell_areas().ravel()
    ok = np.isfinite(d)
    order = np.argsort(d[ok], kind="stable")
    ds = d[ok][order]
    cw = np.concatenate([[0.0], np.cumsum(w[ok][order])])
    vol = cw[np.searchsorted(ds, r_list, side="left")]
    return GrowthSeries(r_list, vol)


def growth_exponent(series: GrowthSeries, window) -> tuple[float, float]:
    """Least-squares slope of ``log value`` against ``log param`` on ``window``."""
    lo, hi = window
    m = (series.params >= lo) & (series.params <= hi)
    if m.sum() < 2 or np.any(series.values[m] <= 0) or np.any(series.params[m] <= 0):
        raise DegenerateWindow(f"window {window} has fewer than two positive points")
    x, y = np.log(series.params[m]), np.log(series.values[m])
    if np.ptp(x) == 0:
        raise DegenerateWindow("window spans a single parameter")
    c1, c0 = np.polyfit(x, y, 1)
    res = float(np.sqrt(np.mean((y - (c1 * x + c0))**2)))
    return float(c1), res


@dataclass(frozen=True)
class BuragoIvanovReport:
    v_g: float
    V_g: float
    r: np.ndarray
    ratio: np.ndarray           # Vol B / r^2
    spread: float               # over the last ten tabulated radii
    final_rel_gap: float

    @property
    def target(self) -> float:
        return self.v_g * self.V_g


def burago_ivanov_check(profile, V_g: float, field: DistanceField | None = None,
                        r_list=None, tol: float = 0.10, **field_kw) -> BuragoIvanovReport:
    """Compare ``Vol B(x, r) / r^2`` with ``v_g V_g``; ``V_g`` from the stable norm."""
    r_list = np.arange(1.0, 41.0) if r_list is None else np.asarray(r_list, dtype=float)
    if field is None:
        field = distance_field(profile, r_max=float(r_list.max()), **field_kw)
    ser = ball_volume(field, r_list)
    ratio = ser.values / r_list**2
    tail = ratio[-10:]
    spread = float((tail.max() - tail.min()) / tail[-1])
    v_g = profile.fundamental_volume()
    gap = abs(ratio[-1] - v_g * V_g) / (v_g * V_g)
    rep = BuragoIvanovReport(v_g, V_g, r_list, ratio, spread, float(gap))
    if spread >= tol or gap >= tol:
        raise NoConvergenceTrend(f"spread {spread:.3%}, final gap {gap:.3%}")
    return rep


# ---- Z^l ----

def _int_det(M) -> int:
    """Exact determinant of a small integer matrix (Bareiss)."""
    A = [list(map(int, row)) for row in M]
    n = len(A)
    sign, prev = 1, 1
    for k in range(n - 1):
        if A[k][k] == 0:
            for r in range(k + 1, n):
                if A[r][k] != 0:
                    A[k], A[r] = A[r], A[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i][j] = (A[i][j] * A[k][k] - A[i][k] * A[k][j]) // prev
        prev = A[k][k]
    return sign * A[n - 1][n - 1]


def generates(rank: int, generators) -> bool:
    """Whether the vectors generate ``Z^rank``: gcd of maximal minors is 1."""
    G = [tuple(int(v) for v in g) for g in generators]
    if any(len(g) != rank for g in G):
        raise ValidationError("generator length does not match the rank")
    g_all = 0
    for rows in itertools.combinations(G, rank):
        g_all = gcd(g_all, abs(_int_det(rows)))
        if g_all == 1:
            return True
    return False


def group_growth(rank: int, generators=None, k_max: int = 200) -> GrowthSeries:
    """Ball sizes ``beta(Z^l, S; k)`` for ``k = 0..k_max`` by BFS on the Cayley graph.

    ``S`` is symmetrized (inverses added).
    """
    if rank < 1 or k_max < 0:
        raise ValidationError("rank >= 1 and k_max >= 0 required")
    if generators is None:
        generators = [tuple(int(i == j) for j in range(rank)) for i in range(rank)]
    gens = np.array(generators, dtype=np.int64).reshape(-1, rank)
    if not generates(rank, gens.tolist()):
        raise NotGenerating("generators do not generate Z^rank")
    S = np.unique(np.vstack([gens, -gens]), axis=0)
    S = S[np.any(S != 0, axis=1)]
    R = k_max * int(np.abs(S).max()) + 1
    base = 2 * R + 1

    def enc(P):
        return np.ravel_multi_index(tuple((P + R).T), (base,) * rank)

    seen = np.zeros(0, dtype=np.int64)
    frontier = np.zeros((1, rank), dtype=np.int64)
    seen = enc(frontier)
    counts = [1]
    for _ in range(k_max):
        cand = (frontier[:, None, :] + S[None, :, :]).reshape(-1, rank)
        keys, idx = np.unique(enc(cand), return_index=True)
        new = ~np.isin(keys, seen, assume_unique=True)
        frontier = cand[idx[new]]
        seen = np.union1d(seen, keys[new])
        counts.append(seen.size)
    return GrowthSeries(np.arange(k_max + 1), np.array(counts, dtype=float))


def _floor_lookup(series: GrowthSeries, t):
    """Lower bound of a nondecreasing series at ``t``: floor value, 0 below range."""
    i = np.searchsorted(series.params, t, side="right") - 1
    out = np.where(i >= 0, series.values[np.clip(i, 0, None)], 0.0)
    return out


LAMBDAS = (1, 1.5, 2, 3, 5, 8)
CONSTANTS = (0, 1, 5, 20, 100)


def _dominated(a: GrowthSeries, b: GrowthSeries, lam, C) -> bool:
    t = a.params
    return bool(np.all(a.values <= lam * _floor_lookup(b, lam * t + C) + C))


def weak_equivalence_witness(s1: GrowthSeries, s2: GrowthSeries):
    """First ``(lambda, C)`` on a fixed grid with mutual domination, or ``None``.

    Lookups of the dominating series use floor values (clamped at the last
    sample), a lower bound for any nondecreasing extension.
    """
    for lam in LAMBDAS:
        for C in CONSTANTS:
            if _dominated(s1, s2, lam, C) and _dominated(s2, s1, lam, C):
                return (lam, C)
    return None
