"""Run every acceptance criterion on one profile and write a summary CSV."""

import argparse
import csv
from dataclasses import dataclass
from pathlib import Path

from revtorus import checks
from revtorus.profile import canonical_profile, load_profile


@dataclass
class AcceptanceConfig:
    config: Path | None = None
    out: Path = Path("acceptance.csv")
    seed: int = 0
    samples: int = 5000
    t_max: float = 200.0


def parse(argv=None) -> AcceptanceConfig:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", type=Path)
    ap.add_argument("--out", type=Path, default=AcceptanceConfig.out)
    ap.add_argument("--seed", type=int, default=AcceptanceConfig.seed)
    ap.add_argument("--samples", type=int, default=AcceptanceConfig.samples)
    ap.add_argument("--t-max", type=float, default=AcceptanceConfig.t_max)
    a = ap.parse_args(argv)
    return AcceptanceConfig(a.config, a.out, a.seed, a.samples, a.t_max)


def main(argv=None) -> int:
    cfg = parse(argv)
    p = load_profile(cfg.config) if cfg.config else canonical_profile()
    results = checks.run_all(p, cfg.config, cfg.seed,
                             {"n": cfg.samples, "t_max": cfg.t_max})
    with open(cfg.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["criterion", "name", "passed", "seconds", "key", "value"])
        for r in results:
            print(r.line(), flush=True)
            for k, v in r.measured.items():
                w.writerow([r.number, r.name, r.passed, f"{r.seconds:.3f}", k, v])
    return 0 if all(r.passed for r in results) else 3


if __name__ == "__main__":
    raise SystemExit(main())
