"""The numbered verification criteria as functions returning measured values.

Each ``criterion_k`` computes its measurements and a pass flag against the
stated tolerance. ``verify-all`` and the acceptance tests share these; the
tests restate every threshold on the returned measurements.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import actions, dynamics, entropy, growth, orbits, stablenorm
from .errors import CheckFailure, RevTorusError
from .profile import FlatTorus, canonical_profile, random_profile

E_HALF = 0.5


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    measured: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        vals = ", ".join(f"{k}={_fmt(v)}" for k, v in self.measured.items()
                         if np.isscalar(v) or isinstance(v, (bool, str)))
        return (f"criterion {self.number:2d} {self.name}: {'PASS' if self.passed else 'FAIL'}"
                f" ({self.seconds:.1f}s) {vals}")


def _fmt(v):
    if isinstance(v, (bool, np.bool_, str)):
        return str(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.6g}"


def _timed(fn):
    def wrapper(*a, **kw):
        t0 = time.perf_counter()
        res = fn(*a, **kw)
        res.seconds = time.perf_counter() - t0
        return res
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def random_profiles(seed: int, n: int) -> list:
    rng = np.random.default_rng(seed)
    return [random_profile(rng) for _ in range(n)]


@_timed
def criterion_1(profile=None, seed: int = 0, n: int = 50, t_max: float = 100.0,
                tol: float = 1e-10) -> CriterionResult:
    """Energy and Clairaut conservation along random geodesics on ``e = 1/2``."""
    p = profile or canonical_profile()
    rng = np.random.default_rng(seed)
    dh = dp = 0.0
    for _ in range(n):
        ls = dynamics.LevelState(*rng.uniform(0, 1, 2), rng.uniform(0, 2 * np.pi), E_HALF)
        tr = dynamics.integrate(p, ls, t_max, tol=tol)
        dh = max(dh, float(np.max(np.abs(tr.energy - E_HALF))))
        dp = max(dp, tr.max_clairaut_drift)
    return CriterionResult(1, "conservation", dh < 1e-8 and dp < 1e-8,
                           {"max_energy_error": dh, "max_clairaut_drift": dp, "samples": n})


def _circle_ok(c):
    f = c.floquet
    if f.kind != c.kind:
        return False
    pair = [z for z in f.eigenvalues if abs(z - 1) > orbits.DEGENERACY_GAP]
    if c.kind == "hyperbolic":
        return all(abs(z.imag) == 0 for z in pair) and max(abs(z) for z in pair) > 1
    return all(abs(abs(z) - 1) < 1e-6 for z in pair)


@_timed
def criterion_2(profile=None, seed: int = 7, n_random: int = 20) -> CriterionResult:
    """Floquet classification of the critical circles."""
    p = profile or canonical_profile()
    circ = orbits.critical_circles(p, E_HALF)
    hyp = [c for c in circ if c.kind == "hyperbolic"]
    ok_main = bool(hyp) and all(_circle_ok(c) for c in circ)
    det_err = max(abs(c.floquet.determinant - 1) for c in circ)
    agree = 0
    for q in random_profiles(seed, n_random):
        cs = orbits.critical_circles(q, E_HALF)
        agree += all(c.kind == c.floquet.kind for c in cs)
        det_err = max(det_err, max(abs(c.floquet.determinant - 1) for c in cs))
    lam = max(hyp[0].floquet.eigenvalues, key=abs).real if hyp else float("nan")
    ok = ok_main and agree == n_random and det_err < 1e-6
    return CriterionResult(2, "orbit classification", ok,
                           {"hyperbolic_lambda": lam, "random_agree": agree,
                            "random_total": n_random, "max_det_error": det_err})


@_timed
def criterion_3(profile=None, n_rho: int = 20) -> CriterionResult:
    """Action-angle quadrature against the time-of-flight oracle."""
    p = profile or canonical_profile()
    r0 = actions.rho0(p, E_HALF)
    fr = np.linspace(-0.95, 0.95, n_rho)
    et = ep = 0.0
    for f in fr:
        tau, ph = actions.tau_phi(p, E_HALF, f * r0)
        to, po = actions.time_of_flight_oracle(p, E_HALF, f * r0)
        et = max(et, abs(tau - to) / to)
        ep = max(ep, abs(ph - po) / abs(po))
    # Flow factorization: after tau the state is translated by (phi_rho, 1).
    fact = 0.0
    for f in (-0.7, 0.3, 0.9):
        rho = f * r0
        tau, ph = actions.tau_phi(p, E_HALF, rho)
        g = p.geometry(0.0)
        ps = np.sqrt(2 * E_HALF - rho**2 / (4 * np.pi**2 * g.x**2)) * g.r
        z0 = dynamics.CotangentState(0.0, 0.0, rho, float(ps))
        tr = dynamics.integrate(p, z0, tau, tol=1e-12, sample_step=tau)
        z = tr.states[-1]
        fact = max(fact, float(np.max(np.abs(z - np.array([ph, 1.0, rho, ps])))))
    ok = et < 1e-7 and ep < 1e-7 and fact < 1e-6
    return CriterionResult(3, "action-angle oracle", ok,
                           {"max_rel_err_tau": et, "max_rel_err_phi": ep,
                            "factorization_error": fact})


@_timed
def criterion_4(profile=None) -> CriterionResult:
    """Hessian minors, superlinearity, and the concavity statements for f and f~."""
    p = profile or canonical_profile()
    conv = actions.verify_convexity(p, strict=False)
    sup = actions.verify_superlinearity(p)
    n_ft = int(np.sum(conv.ddf_tilde < 0))
    ok = conv.minors_positive and sup.holds and conv.f_increasing_concave and \
        conv.f_tilde_concave
    return CriterionResult(4, "convexity and superlinearity", ok,
                           {"minors_positive": conv.minors_positive,
                            "min_det": float(conv.det.min()),
                            "min_ddg": float(conv.ddg.min()),
                            "superlinear": sup.holds, "k": sup.k, "ratio_max": sup.ratio_max,
                            "f_increasing_concave": conv.f_increasing_concave,
                            "f_tilde_concave_points": n_ft,
                            "f_tilde_points": int(conv.ddf_tilde.size),
                            "identity_error": conv.identity_error})


@_timed
def criterion_5(profile=None) -> CriterionResult:
    """Log and pole laws near the separatrix and the ratio ``A'/A = X(rho0)``."""
    p = profile or canonical_profile()
    rep = stablenorm.verify_asymptotics(p, r2_min=0.0)
    end = stablenorm.extend_endpoint(stablenorm.rotation_curve(p))
    gap = abs(rep.ratio_phi_tau - end.value) / end.value
    r2 = min(f.r2 for f in rep.laws)
    m = {"min_r2": r2, "ratio_A_prime_A": rep.ratio_phi_tau, "endpoint": end.value,
         "ratio_gap": gap}
    for f in rep.laws:
        m[f"{f.law}_fitted"] = f.fitted
        m[f"{f.law}_printed_ratio"] = f.ratio
    return CriterionResult(5, "asymptotic laws", r2 > 0.999 and gap < 0.01, m)


def _doubly_symmetric(ball, tol=1e-9) -> bool:
    V = ball.vertices
    for refl in (np.array([-1.0, 1.0]), np.array([1.0, -1.0])):
        g = stablenorm.gauge_many(ball, V * refl)
        if np.max(np.abs(g - 1)) > tol:
            return False
    return True


def two_route_volume(p):
    curve = stablenorm.rotation_curve(p)
    end = stablenorm.extend_endpoint(curve)
    ball = stablenorm.stable_unit_ball(curve.with_endpoint(end.value))
    vol = stablenorm.asymptotic_volume(p, ball.area)
    return ball, vol


@_timed
def criterion_6(profile=None, seed: int = 7, n_random: int = 5) -> CriterionResult:
    """Asymptotic volume by quadrature and by the polygon area."""
    p = profile or canonical_profile()
    gaps, sym, convex = [], True, True
    vg = None
    for q in [p] + random_profiles(seed, n_random):
        try:
            ball, vol = two_route_volume(q)
        except CheckFailure:
            convex = False
            continue
        gaps.append(vol.rel_gap)
        sym &= _doubly_symmetric(ball)
        vg = vol if vg is None else vg
    worst = max(gaps) if gaps else float("nan")
    ok = convex and sym and len(gaps) == n_random + 1 and worst < 1e-3
    return CriterionResult(6, "two-route V_g", ok,
                           {"V_g_quadrature": vg.quadrature if vg else float("nan"),
                            "V_g_shoelace": vg.shoelace if vg else float("nan"),
                            "max_rel_gap": worst, "convex": convex, "doubly_symmetric": sym,
                            "profiles": len(gaps)})


def canonical_field(p, h: float = 0.1, r_max: float = 52.0):
    return growth.distance_field(p, r_max=r_max, h=h)


@_timed
def criterion_7(profile=None, field_=None, V_g=None) -> CriterionResult:
    """Ball volume over ``r^2`` against ``pi`` (flat) and ``v_g V_g`` (revolution)."""
    p = profile or canonical_profile()
    flat = FlatTorus(1 / (2 * np.pi), 1.0)
    ff = growth.distance_field(flat, source=(0.0, 0.0), r_max=20.0, h=0.02)
    fr = float(growth.ball_volume(ff, [20.0]).values[0] / 400.0)
    flat_gap = abs(fr - np.pi) / np.pi
    if V_g is None:
        V_g = two_route_volume(p)[1].quadrature
    fld = field_ or canonical_field(p)
    rep = growth.burago_ivanov_check(p, V_g, field=fld, tol=np.inf)
    ok = flat_gap < 0.02 and rep.final_rel_gap < 0.10 and rep.spread < 0.10
    return CriterionResult(7, "ball volume asymptotics", ok,
                           {"flat_ratio": fr, "flat_gap": flat_gap, "v_g": rep.v_g,
                            "target": rep.target, "ratio_r40": float(rep.ratio[-1]),
                            "rel_gap": rep.final_rel_gap, "spread": rep.spread})


@_timed
def criterion_8(profile=None, field_=None, ball=None) -> CriterionResult:
    """Eikonal translation distances per unit class against the stable norm."""
    p = profile or canonical_profile()
    fld = field_ or canonical_field(p)
    if ball is None:
        ball = two_route_volume(p)[0]
    m = {}
    ok = True
    for name, v in (("s", (0, 1)), ("phi", (1, 0))):
        d = fld.at(8 * v[0], 8 * v[1]) / 8
        n = stablenorm.stable_norm(ball, v)
        gap = abs(d - n) / n
        m[f"eikonal_{name}"] = d
        m[f"norm_{name}"] = n
        m[f"gap_{name}"] = gap
        ok &= gap < 0.02
    return CriterionResult(8, "stable-norm cross-check", bool(ok), m)


def _entropy(samples, eps):
    return entropy.poly_entropy_estimate(entropy.SeparationIndex(samples, eps))


@_timed
def criterion_9(profile=None, n: int = 5000, t_max: float = 200.0, seed: int = 0,
                eps=entropy.DEFAULT_EPS, tau_rev=None, tau_flat=None) -> CriterionResult:
    """Entropy slopes for flat, revolution and rank-0 flows, plus the inequality."""
    p = profile or canonical_profile()
    flat = entropy.sample_linear(entropy.flat_geodesic_flow(1.0, 2 * np.pi), n, t_max, seed)
    h_flat = _entropy(flat, eps).h_pol
    del flat
    kron = entropy.sample_linear(entropy.kronecker_flow((1 / (2 * np.pi),
                                                         np.sqrt(2) / (2 * np.pi))),
                                 n, t_max, seed)
    h_kron = _entropy(kron, eps).h_pol
    del kron
    rev = entropy.sample_revolution(p, n, t_max, seed)
    est = _entropy(rev, eps)
    h_rev = est.h_pol
    del rev
    if tau_rev is None:
        ser = growth.ball_volume(canonical_field(p, r_max=40.0), np.arange(1.0, 41.0))
        tau_rev = growth.growth_exponent(ser, (10, 40))[0]
    if tau_flat is None:
        ff = growth.distance_field(FlatTorus(1 / (2 * np.pi), 1.0), (0.0, 0.0), 20.0, 0.05)
        tau_flat = growth.growth_exponent(growth.ball_volume(ff, np.arange(1.0, 21.0)),
                                          (5, 20))[0]
    m1 = h_rev + 1.3 - tau_rev
    m2 = h_flat + 1.3 - tau_flat
    ok = (0.8 <= h_flat <= 1.2 and 1.6 <= h_rev <= 2.4 and h_kron < 0.3
          and m1 >= 0 and m2 >= 0)
    m = {"h_flat": h_flat, "h_revolution": h_rev, "h_rank0": h_kron,
         "tau_revolution": tau_rev, "tau_flat": tau_flat,
         "theorem1_margin_revolution": m1, "theorem1_margin_flat": m2}
    for e, s, sat in zip(est.eps, est.slopes, est.saturated):
        m[f"rev_slope_eps{e:g}"] = float("nan") if sat else s
    return CriterionResult(9, "entropy slopes", bool(ok), m)


@_timed
def criterion_10(profile=None, field_=None) -> CriterionResult:
    """Growth exponents of Z^2, Z^3 and the weak-equivalence witness."""
    p = profile or canonical_profile()
    e_std = growth.growth_exponent(growth.group_growth(2), (20, 200))[0]
    e_alt = growth.growth_exponent(growth.group_growth(2, [(1, 0), (1, 1)]), (20, 200))[0]
    e3 = growth.growth_exponent(growth.group_growth(3, k_max=60), (20, 60))[0]
    fld = field_ or canonical_field(p, r_max=40.0)
    cayley = growth.group_growth(2, k_max=40)
    balls = growth.ball_volume(fld, np.arange(0.0, 41.0))
    wit = growth.weak_equivalence_witness(cayley, balls)
    ok = abs(e_std - 2) <= 0.05 and abs(e_alt - 2) <= 0.05 and abs(e3 - 3) <= 0.1 and \
        wit is not None
    return CriterionResult(10, "group growth", bool(ok),
                           {"z2_standard": e_std, "z2_alternate": e_alt, "z3": e3,
                            "witness": str(wit)})


@_timed
def criterion_11(config_path=None, runs=None) -> CriterionResult:
    """Repeated seeded CLI runs give byte-identical CSV files."""
    import tempfile
    from pathlib import Path
    from .cli import main

    runs = runs or [["entropy", "--samples", "400", "--t-max", "40", "--seed", "3"],
                    ["ball-growth", "--r-max", "12", "--grid-h", "0.1"],
                    ["orbits"], ["stable-norm"]]
    same, files = True, 0
    with tempfile.TemporaryDirectory() as tmp:
        for k, args in enumerate(runs):
            outs = []
            for rep in range(2):
                d = Path(tmp) / f"{k}_{rep}"
                extra = ["--config", str(config_path)] if config_path else []
                code = main(args + extra + ["--out", str(d)])
                if code != 0:
                    same = False
                outs.append({f.name: f.read_bytes() for f in sorted(d.glob("*.csv"))})
            files += len(outs[0])
            same &= bool(outs[0]) and outs[0] == outs[1]
    return CriterionResult(11, "determinism", bool(same), {"commands": len(runs),
                                                           "csv_files": files})


def run_all(profile=None, config_path=None, seed: int = 0, entropy_kw=None):
    """All criteria in order; fields and the ball are shared between 7, 8 and 10."""
    p = profile or canonical_profile()
    out = []

    def guard(fn, *a, **kw):
        t0 = time.perf_counter()
        try:
            res = fn(*a, **kw)
        except RevTorusError as exc:
            res = CriterionResult(int(fn.__name__.split("_")[1]), fn.__name__, False,
                                  {"error": f"{type(exc).__name__}: {exc}"},
                                  time.perf_counter() - t0)
        out.append(res)
        return res

    guard(criterion_1, p, seed)
    guard(criterion_2, p)
    guard(criterion_3, p)
    guard(criterion_4, p)
    guard(criterion_5, p)
    guard(criterion_6, p)
    try:
        ball, vol = two_route_volume(p)
        fld = canonical_field(p)
    except RevTorusError:
        ball = vol = fld = None
    guard(criterion_7, p, fld, vol.quadrature if vol else None)
    guard(criterion_8, p, fld, ball)
    guard(criterion_9, p, seed=seed, **(entropy_kw or {}))
    guard(criterion_10, p, fld)
    guard(criterion_11, config_path)
    return out
