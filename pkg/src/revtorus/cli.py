"""Command-line front end.

Every command reads an optional JSON config (a profile under ``"profile"`` or
top-level ``"x"``/``"y"``, plus parameters named like the long flags with
underscores), writes its CSV files to ``--out`` and a ``<command>.manifest.json``
next to them. Flags override config values.

Exit codes: 0 success, 1 validation error, 2 numerical failure, 3 a failed
criterion in ``verify-all``.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import platform
import sys
import time
from importlib import metadata
from pathlib import Path

import numpy as np

from . import actions, entropy, growth, orbits, stablenorm
from .errors import CheckFailure, NumericalError, ValidationError
from .profile import canonical_profile, profile_from_config

COMMANDS = ("validate-profile", "orbits", "actions", "stable-norm", "volume", "asymptotics",
            "ball-growth", "group-growth", "entropy", "verify-all")

DEFAULTS = {
    "e": 0.5,
    "seed": 0,
    "tol": 1e-12,
    "grid_h": 0.1,
    "r_max": 40.0,
    "source": None,
    "samples": 5000,
    "t_max": 200.0,
    "eps": list(entropy.DEFAULT_EPS),
    "flow": "revolution",
    "n_rho": 20,
    "rank": 2,
    "generators": None,
    "k_max": 200,
}


def _f(v) -> str:
    return f"{float(v):.17e}"


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _floats(text):
    return [float(v) for v in str(text).split(",") if v.strip()]


def _generators(text):
    if text is None:
        return None
    if isinstance(text, list):
        return [tuple(int(v) for v in g) for g in text]
    return [tuple(int(v) for v in g.split(",")) for g in text.split(";") if g.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run config")
    common.add_argument("--out", type=Path, default=Path("."), help="output directory")
    common.add_argument("--seed", type=int)
    common.add_argument("--tol", type=float, help="quadrature / integration tolerance")
    common.add_argument("--e", type=float, help="energy level (default 1/2)")

    ap = argparse.ArgumentParser(prog="revtorus", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name in ("ball-growth", "verify-all"):
            sp.add_argument("--grid-h", type=float)
            sp.add_argument("--r-max", type=float)
            sp.add_argument("--source", type=str, help="phi,s of the source point")
        if name in ("entropy", "verify-all"):
            sp.add_argument("--samples", type=int)
            sp.add_argument("--t-max", type=float)
            sp.add_argument("--eps", type=str, help="comma-separated list")
        if name == "entropy":
            sp.add_argument("--flow", choices=("revolution", "flat", "kronecker", "rank-one"))
        if name == "actions":
            sp.add_argument("--n-rho", type=int)
        if name == "group-growth":
            sp.add_argument("--rank", type=int)
            sp.add_argument("--k-max", type=int)
            sp.add_argument("--generators", type=str, help='e.g. "1,0;1,1"')
    return ap


def _load_config(args) -> tuple[dict, object]:
    raw = {}
    if args.config is not None:
        try:
            raw = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(raw, dict):
            raise ValidationError("config must be a JSON object")
    prof_cfg = raw.get("profile", {k: raw[k] for k in ("x", "y") if k in raw}) or None
    profile = canonical_profile() if prof_cfg is None else profile_from_config(prof_cfg)
    cfg = dict(DEFAULTS)
    for k, v in raw.items():
        if k in ("profile", "x", "y"):
            continue
        if k not in DEFAULTS:
            raise ValidationError(f"unknown config key {k!r}")
        cfg[k] = v
    for k in DEFAULTS:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    if isinstance(cfg["eps"], str):
        cfg["eps"] = _floats(cfg["eps"])
    if isinstance(cfg["source"], str):
        cfg["source"] = _floats(cfg["source"])
    cfg["generators"] = _generators(cfg["generators"])
    for k in ("tol", "grid_h", "r_max", "t_max", "e"):
        if not float(cfg[k]) > 0:
            raise ValidationError(f"{k} must be positive")
    cfg["profile"] = profile.to_config()
    return cfg, profile


def _versions() -> dict:
    out = {"python": platform.python_version()}
    for pkg in ("revtorus", "numpy", "scipy", "numba"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = "unknown"
    return out


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"), default=list)
    return hashlib.sha256(blob.encode()).hexdigest()


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if np.isfinite(v) else str(v)
    if isinstance(v, complex):
        return [v.real, v.imag]
    return v


# ---- commands: each returns (diagnostics, [written files]) ----

def cmd_validate_profile(p, cfg, out):
    path = out / "critical_points.csv"
    _write_rows(path, ["sCrit", "xValue", "kind", "secondDeriv"],
                [[_f(c.s_crit), _f(c.x_value), c.kind, _f(c.second_deriv)]
                 for c in p.critical_points])
    diag = {"critical_points": [c._asdict() for c in p.critical_points],
            "n_critical_points": len(p.critical_points), "x1": p.x1,
            "fundamental_volume": p.fundamental_volume()}
    return diag, [path]


def cmd_orbits(p, cfg, out):
    circ = orbits.critical_circles(p, cfg["e"], tol=cfg["tol"])
    path = out / "orbits.csv"
    orbits.write_orbits_csv(circ, path)
    diag = {"circles": [{"s_crit": c.s_crit, "theta": c.theta_branch, "kind": c.kind,
                         "floquet_kind": c.floquet.kind, "exponent": c.floquet.exponent,
                         "det_minus_one": c.floquet.determinant - 1} for c in circ]}
    return diag, [path]


def cmd_actions(p, cfg, out):
    e = cfg["e"]
    r0 = actions.rho0(p, e)
    n = int(cfg["n_rho"])
    if n < 1:
        raise ValidationError("n_rho must be positive")
    rows, worst = [], 0.0
    for fr in np.linspace(-0.95, 0.95, n):
        a = actions.action_sample(p, e, fr * r0, cfg["tol"])
        to, po = actions.time_of_flight_oracle(p, e, fr * r0)
        et = abs(a.tau - to) / to
        ep = abs(a.phi_advance - po) / abs(po) if po != 0 else abs(a.phi_advance)
        worst = max(worst, et, ep)
        rows.append([e, a.rho, a.i1, a.i2, a.tau, a.phi_advance, to, po, et, ep])
    path = out / "actions.csv"
    actions.write_actions_csv(rows, path)
    return {"rho0": r0, "max_rel_error": worst}, [path]


def _curve_and_ball(p):
    curve = stablenorm.rotation_curve(p)
    end = stablenorm.extend_endpoint(curve)
    curve = curve.with_endpoint(end.value)
    return curve, end, stablenorm.stable_unit_ball(curve)


def _need_half(cfg):
    if cfg["e"] != 0.5:
        raise ValidationError("the stable-norm commands work on the level e = 1/2")


def cmd_stable_norm(p, cfg, out):
    _need_half(cfg)
    curve, end, ball = _curve_and_ball(p)
    path = out / "stable_norm.csv"
    curve.write_csv(path)
    diag = {"endpoint": vars(end), "vertices": len(ball.vertices), "area": ball.area,
            "norm_phi": stablenorm.stable_norm(ball, (1, 0)),
            "norm_s": stablenorm.stable_norm(ball, (0, 1))}
    return diag, [path]


def cmd_volume(p, cfg, out):
    _need_half(cfg)
    _, _, ball = _curve_and_ball(p)
    vol = stablenorm.asymptotic_volume(p, ball.area)
    path = out / "volume.csv"
    _write_rows(path, ["Vg_quadrature", "Vg_shoelace", "relGap"],
                [[_f(vol.quadrature), _f(vol.shoelace), _f(vol.rel_gap)]])
    return {"tail": vol.tail, "cutoff_delta": vol.cutoff_delta}, [path]


def cmd_asymptotics(p, cfg, out):
    _need_half(cfg)
    rep = stablenorm.verify_asymptotics(p)
    path = out / "asymptotics.csv"
    stablenorm.write_asymptotics_csv(rep, path)
    return {"derived": rep.derived, "pole_spread": rep.pole_spread,
            "ratio_phi_tau": rep.ratio_phi_tau}, [path]


def cmd_ball_growth(p, cfg, out):
    src = cfg["source"]
    if src is not None and len(src) != 2:
        raise ValidationError("source must be phi,s")
    r_max = float(cfg["r_max"])
    fld = growth.distance_field(p, source=src, r_max=r_max, h=float(cfg["grid_h"]))
    r = np.arange(1.0, np.floor(r_max) + 1.0)
    ser = growth.ball_volume(fld, r)
    path = out / "ball_growth.csv"
    _write_rows(path, ["r", "volume", "volumeOverR2"],
                [[_f(a), _f(v), _f(v / a**2)] for a, v in zip(r, ser.values)])
    diag = {"grid": list(fld.shape), "h_phi": fld.h_phi, "h_s": fld.h_s,
            "source": [fld.phi0, fld.s0]}
    if r.size >= 4:
        lo = max(1.0, r_max / 4)
        diag["exponent"], diag["residual"] = growth.growth_exponent(ser, (lo, r_max))
        diag["window"] = [lo, r_max]
    return diag, [path]


def cmd_group_growth(p, cfg, out):
    ser = growth.group_growth(int(cfg["rank"]), cfg["generators"], int(cfg["k_max"]))
    path = out / "group_growth.csv"
    ser.write_csv(path, names=("k", "count"))
    diag = {}
    k = int(cfg["k_max"])
    if k >= 20:
        diag["window"] = [k / 10, k]
        diag["exponent"], diag["residual"] = growth.growth_exponent(ser, (k / 10, k))
    return diag, [path]


def _flow_samples(p, cfg):
    n, t_max, seed = int(cfg["samples"]), float(cfg["t_max"]), int(cfg["seed"])
    flow = cfg["flow"]
    if flow == "revolution":
        return entropy.sample_revolution(p, n, t_max, seed, e=cfg["e"])
    if flow == "flat":
        return entropy.sample_linear(entropy.flat_geodesic_flow(1.0, 2 * np.pi, cfg["e"]),
                                     n, t_max, seed, label="flat")
    if flow == "kronecker":
        w = (1 / (2 * np.pi), np.sqrt(2) / (2 * np.pi))
        return entropy.sample_linear(entropy.kronecker_flow(w), n, t_max, seed,
                                     label="kronecker")
    if flow == "rank-one":
        return entropy.sample_linear(entropy.rank_one_flow(), n, t_max, seed,
                                     label="rank-one")
    raise ValidationError(f"unknown flow {flow!r}")


def cmd_entropy(p, cfg, out):
    S = _flow_samples(p, cfg)
    idx = entropy.SeparationIndex(S, cfg["eps"])
    est = entropy.poly_entropy_estimate(idx)
    p1, p2 = out / "entropy_counts.csv", out / "entropy_summary.csv"
    est.table.write_csv(p1)
    est.write_summary_csv(p2)
    diag = {"flow": cfg["flow"], "h_pol": est.h_pol,
            "windows": {f"{e:g}": w for e, w in zip(est.eps, est.windows)},
            "saturated": {f"{e:g}": bool(s) for e, s in zip(est.eps, est.saturated)}}
    return diag, [p1, p2]


def cmd_verify_all(p, cfg, out, config_path=None):
    from . import checks
    ent = {"n": int(cfg["samples"]), "t_max": float(cfg["t_max"]), "eps": tuple(cfg["eps"])}
    res = checks.run_all(p, config_path=config_path, seed=int(cfg["seed"]), entropy_kw=ent)
    path = out / "verify_all.csv"
    _write_rows(path, ["criterion", "name", "status"],
                [[r.number, r.name, "PASS" if r.passed else "FAIL"] for r in res])
    for r in res:
        print(r.line())
    diag = {"criteria": [{"number": r.number, "name": r.name, "passed": r.passed,
                          "seconds": r.seconds, "measured": r.measured} for r in res],
            "all_passed": all(r.passed for r in res)}
    return diag, [path]


HANDLERS = {
    "validate-profile": cmd_validate_profile,
    "orbits": cmd_orbits,
    "actions": cmd_actions,
    "stable-norm": cmd_stable_norm,
    "volume": cmd_volume,
    "asymptotics": cmd_asymptotics,
    "ball-growth": cmd_ball_growth,
    "group-growth": cmd_group_growth,
    "entropy": cmd_entropy,
    "verify-all": cmd_verify_all,
}


def _manifest(out, command, cfg, diag, files, seconds, error=None):
    man = {"command": command, "config": cfg, "config_hash": config_hash(cfg),
           "versions": _versions(), "timings": {"total_seconds": seconds},
           "diagnostics": diag, "outputs": [f.name for f in files]}
    if error is not None:
        man["error"] = error
    path = out / f"{command}.manifest.json"
    path.write_text(json.dumps(_jsonable(man), indent=2, sort_keys=True) + "\n")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    cfg = None
    try:
        cfg, profile = _load_config(args)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "verify-all":
            diag, files = cmd_verify_all(profile, cfg, out, args.config)
        else:
            diag, files = HANDLERS[args.command](profile, cfg, out)
    except ValidationError as exc:
        return _fail(args, cfg, t0, exc, 1)
    except (NumericalError, CheckFailure) as exc:
        return _fail(args, cfg, t0, exc, 2)
    _manifest(out, args.command, cfg, diag, files, time.perf_counter() - t0)
    if args.command == "verify-all" and not diag["all_passed"]:
        return 3
    return 0


def _fail(args, cfg, t0, exc, code) -> int:
    msg = f"{type(exc).__name__}: {exc}"
    print(f"error: {msg}", file=sys.stderr)
    try:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _manifest(out, args.command, cfg or {}, {}, [], time.perf_counter() - t0, msg)
    except OSError:
        pass
    return code


if __name__ == "__main__":
    sys.exit(main())
