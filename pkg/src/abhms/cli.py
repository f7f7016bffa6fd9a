"""Command-line front end: theta values, verification sweeps and tables.

Exit codes: 0 all checks pass, 1 a verification failed, 2 bad input, 3 truncation box too large.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from . import aside, bside, mirror
from .errors import BoxTooLarge, ValidationError
from .siegel import SiegelPoint, random_siegel
from .theta import DEFAULT_TOL, ThetaChar, ThetaRequest, theta_eval_with_box

log = logging.getLogger("abhms")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_BOX = 0, 1, 2, 3
SCENARIOS = ("product", "dims", "ring", "vertical", "cohomology")
DEFAULT_TOLS = {"product": 1e-8, "dims": 0.5, "ring": 1e-8, "vertical": 1e-9, "cohomology": 1e-12}
PRODUCT_TRIPLES = ((0, 1, 2), (0, 1, 3), (-1, 1, 2), (2, -1, 0), (3, 0, 2), (0, 2, -1), (1, 3, -2))
VERTICAL_PAIRS = ((0, 1), (0, 2), (1, 3))


@dataclass(frozen=True)
class RunConfig:
    command: str
    genera: tuple[int, ...]
    tau: dict | None = None
    seed: int = 0
    tol: float | None = None
    out: str | None = None
    jobs: int = 1
    slopes: tuple[int, ...] | None = None
    k_max: int | None = None
    a2_offset: float | None = None
    epsilon: float = 0.01
    draws: int = 2
    timing: bool = False
    extra: dict = field(default_factory=dict)


def _setup_logging() -> None:
    level = os.environ.get("ABHMS_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def _parse_json(text: str, what: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{what} is not valid JSON: {exc}") from None


def _parse_z(text: str | None, g: int) -> np.ndarray:
    """z as JSON: g numbers or [re, im] pairs, or a flat list of 2g numbers read as pairs."""
    if text is None:
        return np.zeros(g, dtype=complex)
    raw = _parse_json(text, "--z")
    if not isinstance(raw, list):
        raise ValidationError("--z must be a JSON list")
    if len(raw) == 2 * g and all(isinstance(x, (int, float)) for x in raw):
        raw = [raw[2 * i : 2 * i + 2] for i in range(g)]
    if len(raw) != g:
        raise ValidationError(f"--z needs {g} entries")
    out = []
    for x in raw:
        if isinstance(x, list) and len(x) == 2:
            out.append(complex(float(x[0]), float(x[1])))
        elif isinstance(x, (int, float)):
            out.append(complex(float(x)))
        else:
            raise ValidationError("--z entries must be numbers or [re, im] pairs")
    return np.array(out)


def _parse_vec(text: str | None, g: int, name: str) -> np.ndarray:
    if text is None:
        return np.zeros(g)
    raw = _parse_json(text, name)
    vec = np.atleast_1d(np.asarray(raw, dtype=float))
    if vec.shape != (g,):
        raise ValidationError(f"{name} needs {g} entries")
    return vec


def _load_tau(args: argparse.Namespace) -> dict | None:
    if args.tau and args.tau_file:
        raise ValidationError("give at most one of --tau and --tau-file")
    if args.tau:
        return _parse_json(args.tau, "--tau")
    if args.tau_file:
        try:
            with open(args.tau_file, encoding="utf-8") as fh:
                return _parse_json(fh.read(), "--tau-file")
        except OSError as exc:
            raise ValidationError(f"cannot read {args.tau_file}: {exc}") from None
    return None


def _tau_for(cfg_tau: dict | None, g: int, rng: np.random.Generator) -> SiegelPoint:
    if cfg_tau is not None:
        tau = SiegelPoint.from_json(cfg_tau)
        if tau.genus != g:
            raise ValidationError(f"--tau has genus {tau.genus} but g={g} was requested")
        return tau
    return random_siegel(rng, g)


def _rand_brane(rng: np.random.Generator, tau: SiegelPoint, slope: Any) -> aside.Brane:
    g = tau.genus
    return aside.brane(tau, slope, rng.random(g), rng.random(g))


# Scenario runners. Each takes (job, rng) and returns a VerificationReport.

def _run_product(job: dict, rng: np.random.Generator) -> mirror.VerificationReport:
    tau = _tau_for(job["tau"], job["g"], rng)
    branes = [_rand_brane(rng, tau, k) for k in job["slopes"]]
    return mirror.verify_product(tau, branes, job["tol"])


def _dims_pairs(rng: np.random.Generator, tau: SiegelPoint) -> list[tuple[aside.Brane, aside.Brane]]:
    g = tau.genus
    a, b = rng.random(g), rng.random(g)
    a2, b2 = rng.random(g), rng.random(g)
    k1, k2 = (int(x) for x in rng.choice(np.arange(-2, 5), size=2, replace=False))
    inf = aside.INFINITY
    mk = lambda k, x, y: aside.brane(tau, k, x, y)  # noqa: E731
    return [
        (mk(k1, a, b), mk(k2, a2, b2)),
        (mk(k1, a, b), mk(k1, a, b)),
        (mk(k1, a, b), mk(k1, a2, b)),
        (mk(k1, a, b), mk(k1, a, b2)),
        (mk(k1, a, b), mk(inf, a2, b2)),
        (mk(inf, a, b), mk(k2, a2, b2)),
        (mk(inf, a, b), mk(inf, a, b)),
        (mk(inf, a, b), mk(inf, a2, b2)),
    ]


def _run_dims(job: dict, rng: np.random.Generator) -> mirror.VerificationReport:
    tau = _tau_for(job["tau"], job["g"], rng)
    params = aside.PerturbationParams(job["epsilon"])
    reports = [mirror.verify_dims(tau, p, q, job["tol"], params) for p, q in _dims_pairs(rng, tau)]
    worst = max(r.max_residual for r in reports)
    info = {"kinds": [r.params["kind"] for r in reports],
            "hf": [r.params["hf"] for r in reports], "ext": [r.params["ext"] for r in reports]}
    return mirror.VerificationReport("dims", tau.genus, info, worst, job["tol"], worst < job["tol"])


def _run_ring(job: dict, rng: np.random.Generator) -> mirror.VerificationReport:
    tau = _tau_for(job["tau"], job["g"], rng)
    return mirror.seidel_ring(tau, job["k_max"], job["tol"]).report


def _run_vertical(job: dict, rng: np.random.Generator) -> mirror.VerificationReport:
    tau = _tau_for(job["tau"], job["g"], rng)
    k1, k2 = job["slopes"]
    b1, b2 = _rand_brane(rng, tau, k1), _rand_brane(rng, tau, k2)
    bv = _rand_brane(rng, tau, aside.INFINITY)
    return mirror.verify_vertical(tau, b1, b2, bv, job["tol"])


def _run_cohomology(job: dict, rng: np.random.Generator) -> mirror.VerificationReport:
    tau = _tau_for(job["tau"], job["g"], rng)
    g = tau.genus
    k = int(rng.integers(-2, 5))
    a1, b = rng.random(g), rng.random(g)
    offset = job["a2_offset"]
    if offset is None:
        a2 = a1 if job["variant"] == 0 else rng.random(g)
    else:
        a2 = a1 + offset
    b1 = aside.brane(tau, k, a1, b)
    b2 = aside.brane(tau, k, a2, b)
    return mirror.cohomology_report(tau, b1, b2, aside.PerturbationParams(job["epsilon"]), job["tol"])


RUNNERS: dict[str, Callable[[dict, np.random.Generator], mirror.VerificationReport]] = {
    "product": _run_product,
    "dims": _run_dims,
    "ring": _run_ring,
    "vertical": _run_vertical,
    "cohomology": _run_cohomology,
}


def build_jobs(cfg: RunConfig) -> list[dict]:
    """Deterministic list of scenario instances, each with its own child seed."""
    names = SCENARIOS if cfg.command == "all" else (cfg.command,)
    job_list: list[dict] = []
    for name in names:
        tol = cfg.tol if cfg.tol is not None else DEFAULT_TOLS[name]
        for g in cfg.genera:
            base = {"scenario": name, "g": g, "tau": cfg.tau, "tol": tol, "epsilon": cfg.epsilon}
            if name == "product":
                if cfg.slopes is not None:
                    if len(cfg.slopes) != 3 or mirror.product_pattern(*cfg.slopes) == "degree-mismatch":
                        raise ValidationError("--slopes needs three distinct slopes with positive product")
                    triples = [cfg.slopes]
                else:
                    triples = list(PRODUCT_TRIPLES)
                for t in triples:
                    for i in range(cfg.draws):
                        job_list.append({**base, "slopes": list(t), "draw": i})
            elif name == "vertical":
                pairs = [cfg.slopes] if cfg.slopes is not None else VERTICAL_PAIRS
                for p in pairs:
                    if len(p) != 2 or p[0] >= p[1]:
                        raise ValidationError("vertical --slopes needs k1 < k2")
                    for i in range(cfg.draws):
                        job_list.append({**base, "slopes": list(p), "draw": i})
            elif name == "ring":
                k_max = cfg.k_max if cfg.k_max is not None else {1: 4, 2: 3}.get(g, 2)
                job_list.append({**base, "k_max": k_max, "draw": 0})
            elif name == "cohomology":
                variants = (0,) if cfg.a2_offset is not None else (0, 1)
                for v in variants:
                    for i in range(cfg.draws):
                        job_list.append({**base, "a2_offset": cfg.a2_offset, "variant": v, "draw": i})
            else:
                for i in range(cfg.draws):
                    job_list.append({**base, "draw": i})
    children = np.random.SeedSequence(cfg.seed).spawn(len(job_list))
    for i, (job, child) in enumerate(zip(job_list, children)):
        job["index"] = i
        job["entropy"] = [int(x) for x in child.generate_state(4)]
        job["key"] = f"{job['scenario']}:g{job['g']}:{i:05d}"
    return job_list


def run_job(job: dict) -> dict:
    rng = np.random.Generator(np.random.PCG64(job["entropy"]))
    rep = RUNNERS[job["scenario"]](job, rng)
    out = rep.to_json()
    out["scenario"] = job["key"]
    out["params"] = {"draw": job["draw"], **out["params"]}
    log.info("%s residual=%.3e pass=%s", job["key"], out["max_residual"], out["pass"])
    return out


def run_verify(cfg: RunConfig) -> list[dict]:
    job_list = build_jobs(cfg)
    if cfg.jobs > 1 and len(job_list) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(run_job, job_list, chunksize=max(1, len(job_list) // (4 * cfg.jobs))))
    else:
        results = [run_job(s) for s in job_list]
    results.sort(key=lambda r: r["scenario"])
    if not cfg.timing:
        for r in results:
            r["seconds"] = 0.0
    return results


def _json_default(x: Any) -> Any:
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not serialisable: {type(x)!r}")


def dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, default=_json_default, allow_nan=False)


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_theta(args: argparse.Namespace) -> int:
    tau_json = _load_tau(args)
    if tau_json is None:
        raise ValidationError("theta needs --tau or --tau-file")
    tau = SiegelPoint.from_json(tau_json)
    g = args.g if args.g is not None else tau.genus
    if g != tau.genus:
        raise ValidationError(f"--g {g} does not match tau of genus {tau.genus}")
    z = _parse_z(args.z, g)
    char = ThetaChar.of(_parse_vec(args.c, g, "--c"), _parse_vec(args.d, g, "--d"))
    tol = args.tol if args.tol is not None else DEFAULT_TOL
    value, box = theta_eval_with_box(ThetaRequest(tau, z, char, tol), compensated=args.compensated)
    rec = {"value": {"re": value.real, "im": value.imag}, "box_radius": box.radius, "terms": box.terms}
    _emit(dumps(rec) + "\n", args.out)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    if args.jobs < 1:
        raise ValidationError("--jobs must be positive")
    if args.draws < 1:
        raise ValidationError("--draws must be positive")
    genera = (args.g,) if args.g is not None else ((1, 2) if args.scenario == "all" else (1,))
    if any(g < 1 or g > 8 for g in genera):
        raise ValidationError("g must lie in 1..8")
    slopes = None
    if args.slopes:
        try:
            slopes = tuple(int(x) for x in args.slopes.split(","))
        except ValueError:
            raise ValidationError("--slopes must be comma-separated integers") from None
    cfg = RunConfig(
        command=args.scenario,
        genera=genera,
        tau=_load_tau(args),
        seed=args.seed,
        tol=args.tol,
        out=args.out,
        jobs=args.jobs,
        slopes=slopes,
        k_max=args.k_max,
        a2_offset=args.a2_offset,
        epsilon=args.epsilon,
        draws=args.draws,
        timing=args.timing,
    )
    aside.PerturbationParams(cfg.epsilon)
    results = run_verify(cfg)
    _emit("".join(dumps(r) + "\n" for r in results), cfg.out)
    failed = [r["scenario"] for r in results if not r["pass"]]
    if failed:
        log.warning("%d of %d scenarios failed: %s", len(failed), len(results), ", ".join(failed))
        return EXIT_FAIL
    return EXIT_OK


def _table_ext(args: argparse.Namespace) -> str:
    g = args.g or 1
    lo, hi = (int(x) for x in args.k_range.split(","))
    if lo > hi:
        raise ValidationError("--k-range must be lo,hi with lo <= hi")
    rng = np.random.Generator(np.random.PCG64(args.seed))
    tau = _tau_for(_load_tau(args), g, rng)
    z = bside.torus_point(tau, np.zeros(g), np.zeros(g))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "kp"] + [f"ext{i}" for i in range(g + 1)])
    for k in range(lo, hi + 1):
        for kp in range(lo, hi + 1):
            w.writerow([k, kp] + bside.ext_dims(k, kp, z, z, g))
    return buf.getvalue()


def _table_ring(args: argparse.Namespace) -> str:
    g = args.g or 1
    rng = np.random.Generator(np.random.PCG64(args.seed))
    tau = _tau_for(_load_tau(args), g, rng)
    d_max = args.d_max
    tables = bside.ring_table(tau, d_max)
    lines = []
    for (d1, d2), tab in sorted(tables.items()):
        l1s, l2s, ls = (bside.index_box(d, g) for d in (d1, d2, d1 + d2))
        for i, l1 in enumerate(l1s):
            for j, l2 in enumerate(l2s):
                for m, lam in enumerate(ls):
                    c = complex(tab[i, j, m])
                    if c != 0:
                        lines.append(dumps({"d1": d1, "d2": d2, "lambda1": l1.tolist(), "lambda2": l2.tolist(),
                                            "lambda": lam.tolist(), "re": c.real, "im": c.imag}))
    return "".join(x + "\n" for x in lines)


def _table_intersections(args: argparse.Namespace) -> str:
    g = args.g or 1
    if not args.slopes:
        raise ValidationError("intersections needs --slopes k1,k2")
    k1, k2 = (int(x) for x in args.slopes.split(","))
    rng = np.random.Generator(np.random.PCG64(args.seed))
    tau = _tau_for(_load_tau(args), g, rng)
    zero = np.zeros(g)
    gens = aside.intersection_points(aside.brane(tau, k1, zero, zero), aside.brane(tau, k2, zero, zero))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["lambda", "degree"] + [f"r{i}" for i in range(g)] + [f"theta{i}" for i in range(g)])
    for gen in gens:
        w.writerow([" ".join(map(str, gen.key)), gen.degree] + [repr(float(x)) for x in gen.coords])
    return buf.getvalue()


def cmd_table(args: argparse.Namespace) -> int:
    makers = {"ext": _table_ext, "ring": _table_ring, "intersections": _table_intersections}
    _emit(makers[args.kind](args), args.out)
    return EXIT_OK


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--g", type=int, default=None, help="genus")
    p.add_argument("--tau", help='tau as JSON {"g":..,"B":[[..]],"Omega":[[..]]}')
    p.add_argument("--tau-file", help="file holding tau as JSON")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--out", help="output path (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="abhms", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("theta", help="evaluate one theta value")
    _add_common(p)
    p.add_argument("--z", help="argument as JSON list")
    p.add_argument("--c", help="characteristic c as JSON list")
    p.add_argument("--d", help="characteristic d as JSON list")
    p.add_argument("--compensated", action="store_true", help="use compensated summation")
    p.set_defaults(func=cmd_theta)

    p = sub.add_parser("verify", help="run verification scenarios")
    p.add_argument("scenario", choices=SCENARIOS + ("all",))
    _add_common(p)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--slopes", help="comma-separated slopes")
    p.add_argument("--k-max", type=int, default=None)
    p.add_argument("--a2-offset", type=float, default=None)
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--draws", type=int, default=2, help="random draws per scenario")
    p.add_argument("--timing", action="store_true", help="record wall time (output is then not reproducible)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("table", help="print deterministic tables")
    p.add_argument("kind", choices=("ext", "ring", "intersections"))
    _add_common(p)
    p.add_argument("--k-range", default="-2,3")
    p.add_argument("--d-max", type=int, default=3)
    p.add_argument("--slopes")
    p.set_defaults(func=cmd_table)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except BoxTooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BOX
    except (ValidationError, ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
