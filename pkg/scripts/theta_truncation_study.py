"""How the certified box radius and the actual error move with lambda_min and tol.

For each (lambda_min, tol) pair the script evaluates theta at random points with the
certified box and with a box 4 wider, and prints the radius and the observed gap.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass

import numpy as np

from abhms.siegel import validate_siegel
from abhms.theta import LatticeBox, ThetaChar, ThetaRequest, _sum_box, truncation_radius


@dataclass(frozen=True)
class StudyConfig:
    g: int = 1
    lam_mins: tuple[float, ...] = (0.05, 0.2, 0.8, 3.0)
    tols: tuple[float, ...] = (1e-6, 1e-9, 1e-12)
    samples: int = 20
    seed: int = 0


def run(cfg: StudyConfig) -> list[dict]:
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    rows = []
    for lam in cfg.lam_mins:
        om = lam * np.eye(cfg.g)
        tau = validate_siegel(np.zeros((cfg.g, cfg.g)), om)
        for tol in cfg.tols:
            worst = 0.0
            radius = 0
            for _ in range(cfg.samples):
                ch = ThetaChar.of(rng.random(cfg.g), rng.random(cfg.g))
                z = rng.uniform(-1, 1, cfg.g) + 1j * rng.uniform(-0.3, 0.3, cfg.g)
                req = ThetaRequest(tau, z, ch, tol)
                box = truncation_radius(tau, ch, z, tol)
                radius = max(radius, box.radius)
                wide = LatticeBox(box.center, box.radius + 4, box.lo - 4)
                worst = max(worst, abs(_sum_box(req, box, True) - _sum_box(req, wide, True)))
            rows.append({"g": cfg.g, "lam_min": lam, "tol": tol, "radius": radius, "observed_error": worst})
    return rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--g", type=int, default=1)
    ap.add_argument("--samples", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rows = run(StudyConfig(g=args.g, samples=args.samples, seed=args.seed))
    w = csv.DictWriter(sys.stdout, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)


if __name__ == "__main__":
    main()
