"""Numerical evidence for every place a printed formula was replaced.

Each block compares the implemented quantity against the printed variant
on the canonical profile and prints the measured discrepancy.
"""

import argparse
from dataclasses import dataclass

import numpy as np

from revtorus import actions, dynamics, orbits, stablenorm
from revtorus.profile import canonical_profile

TWO_PI = 2 * np.pi


@dataclass
class ConflictConfig:
    e: float = 0.5
    seed: int = 0


def theta_component(p, cfg):
    """Printed ``x'/(r x)`` vs the derived ``sqrt(2e) x' cos(theta)/(r x)``."""
    rng = np.random.default_rng(cfg.seed)
    worst_printed = worst_derived = 0.0
    for _ in range(50):
        ls = dynamics.LevelState(*rng.uniform(0, 1, 2), rng.uniform(0, TWO_PI), cfg.e)
        z = dynamics.embed_level(p, ls).as_array()
        X = dynamics.vector_field(p, z)
        h = 1e-6
        a = dynamics.level_of(p, dynamics.CotangentState.from_array(z + h * X))
        b = dynamics.level_of(p, dynamics.CotangentState.from_array(z - h * X))
        fd = np.angle(np.exp(1j * (a.theta - b.theta))) / (2 * h)
        x, dx, *_, r, _ = p.full_jet(ls.s_bar)
        derived = dynamics.level_vector_field(p, ls.s_bar, ls.theta, cfg.e)[2]
        worst_printed = max(worst_printed, abs(dx / (r * x) - fd))
        worst_derived = max(worst_derived, abs(derived - fd))
    print(f"theta component: printed max err {worst_printed:.3e}, derived {worst_derived:.3e}")


def periods(p, cfg):
    for c in orbits.critical_circles(p, cfg.e, floquet=False):
        t = orbits.return_time(p, c)
        print(f"period at s={c.s_crit:.3f}: return time {t:.12f}, 2 pi x/sqrt(2e) "
              f"{TWO_PI * c.x_value / np.sqrt(2 * cfg.e):.12f}, 2 pi x^2/sqrt(2e) "
              f"{TWO_PI * c.x_value**2 / np.sqrt(2 * cfg.e):.12f}")


def separatrix_argument(p, cfg):
    s = np.linspace(0, 1, 513)
    x = p.x(s)
    r0 = actions.rho0(p, cfg.e)
    for name, ratio in (("x1/x", p.x1 / x),
                        ("x1/(2 pi sqrt(2e) x)", p.x1 / (TWO_PI * np.sqrt(2 * cfg.e) * x))):
        pf = TWO_PI * np.sqrt(2 * cfg.e) * x * ratio
        print(f"separatrix arccos({name}): max |p_phi - rho0| = {np.max(np.abs(pf - r0)):.3e}")


def phi_integrand(p, cfg):
    rho = 0.5 * actions.rho0(p, cfg.e)
    tau, ph = actions.tau_phi(p, cfg.e, rho)
    _, pho = actions.time_of_flight_oracle(p, cfg.e, rho)
    print(f"phi advance: derived {ph:.12f}, oracle {pho:.12f}, "
          f"without 1/(4 pi^2) {ph * 4 * np.pi**2:.6f}")


def endpoint_and_volume(p):
    curve = stablenorm.rotation_curve(p)
    end = stablenorm.extend_endpoint(curve)
    ball = stablenorm.stable_unit_ball(curve.with_endpoint(end.value))
    vol = stablenorm.asymptotic_volume(p, ball.area)
    print(f"endpoint X(rho0): extrapolated {end.extrapolated:.8f}, orbit {end.orbit_frequency:.8f}, "
          f"printed {end.printed_value:.8f} (ratio {end.printed_ratio:.5f})")
    print(f"V_g: 4 int X'Y = {vol.quadrature:.8f}, 2 int X'Y = {vol.quadrature / 2:.8f}, "
          f"shoelace {ball.area:.8f}")


def law_constants(p):
    rep = stablenorm.verify_asymptotics(p)
    for f in rep.laws:
        print(f"{f.law}: fitted {f.fitted:.6f}, printed {f.printed:.6f}, ratio {f.ratio:.6f}, "
              f"R^2 {f.r2:.7f}")
    print(f"closed form log slope r1 sqrt(x1/gamma) = {rep.derived['A']:.6f}")


def f_tilde(p):
    q1 = actions.q1(p)
    for m in (1.2, 1.8, 2.0, 2.2, 5.0, 50.0):
        u = m * q1
        _, f1, f2 = actions.f_jet(p, u)
        print(f"f~'' at u = {m:5.1f} q1: {u * u * f2 + u * f1:+.6e}")


def superlinearity(p):
    (L,), _ = actions.moments(p, 1.0, 0.0, ((0, 0),))
    k = actions.superlinearity_constant(p)
    printed = max(2 * np.sqrt(2) * p.x1, L)
    rep = actions.verify_superlinearity(p)
    print(f"superlinearity: derived k {k:.6f}, printed k {printed:.6f}, "
          f"max ratio {rep.ratio_max:.6f}")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    cfg = ConflictConfig(seed=ap.parse_args(argv).seed)
    p = canonical_profile()
    theta_component(p, cfg)
    periods(p, cfg)
    separatrix_argument(p, cfg)
    phi_integrand(p, cfg)
    endpoint_and_volume(p)
    law_constants(p)
    f_tilde(p)
    superlinearity(p)


if __name__ == "__main__":
    main()
