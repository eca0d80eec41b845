"""Batch front door: build games, run dynamics, write CSV/JSON artifacts.

Five subcommands cover the lab bench: ``enumerate`` (exact equilibria and
counting-law checks), ``simulate`` (replicator trajectories), ``lyapunov``
and ``poincare`` (chaos diagnostics), ``minority`` (agent-based runs and
volatility sweeps).  Every command writes its outputs as UTF-8 CSV or JSON
with a sidecar manifest recording the resolved configuration, seed, wall
time, and a sha256 checksum per output file, so reruns can be verified
bitwise.  Plotting is out of scope by design; the outputs feed external
tools.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    BoundsError,
    DegeneracyError,
    DimensionError,
    DomainError,
    InconclusiveError,
    SizeError,
    StiffnessError,
)
from .games import (
    BimatrixGame,
    MixedProfile,
    RpsParams,
    build_generalized_rps,
    game_from_json,
    identity_coordination_game,
    is_zero_sum,
)
from .enumeration import (
    RationalGame,
    enumerate_equilibria,
    random_nondegenerate_game,
    report_to_json,
    verify_counting_laws,
)
from .replicator import IntegratorConfig, Trajectory, integrate
from .chaos import (
    grid_occupancy,
    lyapunov_spectrum,
    poincare_section,
    residence_times,
)
from .minority import MinorityGameConfig, run as run_minority, sigma_vs_m_sweep

OUTPUT_DIR_ENV = "GAMELAB_OUTPUT_DIR"

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_BOUNDS = 3
EXIT_SIZE = 4
EXIT_DEGENERACY = 5
EXIT_ASSERTION = 6

EPILOG = """\
exit codes:
  0  success
  2  argument or config parse error
  3  bounds/domain/dimension violation
  4  problem size beyond the exact-arithmetic budget
  5  degeneracy or numerical failure (pivot ties, stiffness, no verdict)
  6  assertion requested via --assert-laws failed

sweep syntax:
  a:b:n   n evenly spaced floats from a to b inclusive (eps sweeps)
  a:b     integers a..b inclusive (memory sweeps)

Output directory resolution: --output-dir flag, else $GAMELAB_OUTPUT_DIR,
else the current directory.  Every output file gets a sidecar
<name>.manifest.json with the resolved config and sha256 checksums.
"""


@dataclass
class RunManifest:
    """Reproducibility sidecar written next to every output file."""

    command: str
    config: dict
    seed: int | None
    version: str
    outputs: dict
    duration_s: float
    stats: dict


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(base: Path, manifest: RunManifest):
    path = base.with_suffix(base.suffix + ".manifest.json")
    path.write_text(json.dumps(asdict(manifest), indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
    return path


def _finish(args, command, config, seed, outputs, t0, stats):
    """Checksum outputs, write the manifest, print a one-line summary."""
    checks = {str(p): _sha256(p) for p in outputs}
    manifest = RunManifest(
        command=command,
        config=config,
        seed=seed,
        version=__version__,
        outputs=checks,
        duration_s=time.perf_counter() - t0,
        stats=stats,
    )
    _write_manifest(outputs[0], manifest)
    for key, val in stats.items():
        print(f"{key}: {val}")
    for p in outputs:
        print(f"wrote {p}")


def _output_dir(args) -> Path:
    if args.output_dir is not None:
        d = Path(args.output_dir)
    elif os.environ.get(OUTPUT_DIR_ENV):
        d = Path(os.environ[OUTPUT_DIR_ENV])
    else:
        d = Path(".")
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write_csv(path: Path, header, rows):
    # repr() round-trips floats exactly, keeping reruns bitwise identical
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])


def _parse_float_sweep(text: str):
    parts = text.split(":")
    if len(parts) != 3:
        raise DomainError(f"float sweep must be a:b:n, got {text!r}")
    a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
    if n < 1:
        raise DomainError(f"sweep needs n >= 1, got {n}")
    return np.linspace(a, b, n)


def _parse_int_sweep(text: str):
    parts = text.split(":")
    if len(parts) != 2:
        raise DomainError(f"integer sweep must be a:b, got {text!r}")
    a, b = int(parts[0]), int(parts[1])
    if b < a:
        raise DomainError(f"empty sweep {text!r}")
    return list(range(a, b + 1))


def _parse_start(text: str) -> MixedProfile:
    if text == "uniform":
        u = np.full(3, 1.0 / 3.0)
        return MixedProfile(x=u, y=u.copy())
    vals = [float(v) for v in text.split(",")]
    if len(vals) != 6:
        raise DomainError(
            f"start must be 'uniform' or x1,x2,x3,y1,y2,y3; got {len(vals)} values"
        )
    return MixedProfile(x=np.array(vals[:3]), y=np.array(vals[3:]))


def _load_config(path: str) -> dict:
    text = Path(path).read_bytes()
    if path.endswith(".toml"):
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib
        return tomllib.loads(text.decode("utf-8"))
    return json.loads(text.decode("utf-8"))


def _merge_config(args, section_map):
    """Fill unset args from config-file sections; flags win over the file."""
    if args.config is None:
        return
    cfg = _load_config(args.config)
    for section, keys in section_map.items():
        block = cfg.get(section, {})
        for attr, key in keys:
            if getattr(args, attr, None) is None and key in block:
                setattr(args, attr, block[key])


# default start for the chaos commands: near the heteroclinic web, where
# eps=0 sits on a thin torus and eps=0.5 is inside the chaotic sea
DEFAULT_CHAOS_START = "0.5,0.04,0.46,0.5,0.46,0.04"


def _games_from_args(args) -> BimatrixGame:
    if args.game is not None:
        return game_from_json(Path(args.game).read_text(encoding="utf-8"))
    if args.identity is not None:
        return identity_coordination_game(args.identity)
    if args.rps is not None:
        return build_generalized_rps(RpsParams(eps_x=args.rps[0], eps_y=args.rps[1]))
    raise DomainError("one of --game/--identity/--rps/--random is required")


def cmd_enumerate(args) -> int:
    t0 = time.perf_counter()
    outdir = _output_dir(args)
    out = outdir / (args.out or "enumerate.json")

    if args.random is not None:
        rows, cols = (int(v) for v in args.random.lower().split("x"))
        rng = np.random.default_rng(args.seed)
        counts = []
        failures = []
        for trial in range(args.trials):
            game, report = random_nondegenerate_game(rows, cols, rng)
            counts.append(report.count)
            n = min(rows, cols)
            for law in verify_counting_laws(report, n):
                if law.applicable and law.passed is False:
                    failures.append({"trial": trial, "law": law.name,
                                     "detail": law.detail})
        summary = {
            "rows": rows, "cols": cols, "trials": args.trials,
            "seed": args.seed, "max_count": max(counts), "min_count": min(counts),
            "law_failures": failures,
        }
        out.write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
        stats = {"max_count": max(counts), "law_failures": len(failures)}
        _finish(args, "enumerate", summary, args.seed, [out], t0, stats)
        if args.assert_laws and failures:
            return EXIT_ASSERTION
        return EXIT_OK

    game = _games_from_args(args)
    report = enumerate_equilibria(RationalGame.from_bimatrix(game))
    out.write_text(report_to_json(report) + "\n", encoding="utf-8")
    laws = verify_counting_laws(report, min(game.rows, game.cols))
    violated = [law for law in laws if law.applicable and law.passed is False]
    for law in laws:
        status = "n/a" if not law.applicable else ("ok" if law.passed else "VIOLATED")
        print(f"law {law.name}: {status}")
    stats = {"count": report.count, "pure_count": report.pure_count,
             "degenerate": report.degenerate}
    config = {"game": {"rows": game.rows, "cols": game.cols},
              "assert_laws": args.assert_laws}
    _finish(args, "enumerate", config, None, [out], t0, stats)
    if args.assert_laws and violated:
        return EXIT_ASSERTION
    return EXIT_OK


def _integrator_from_args(args) -> IntegratorConfig:
    return IntegratorConfig(
        t_end=args.t_end,
        record_every=args.record_every,
        tol_rel=args.tol_rel,
        tol_abs=args.tol_abs,
        coords=args.mode,
    )


def _trajectory_rows(traj: Trajectory):
    has_h = traj.hamiltonian_series is not None
    header = ["t", "x1", "x2", "x3", "y1", "y2", "y3"] + (["H"] if has_h else [])
    rows = []
    for k in range(traj.ts.size):
        row = [float(traj.ts[k])]
        row += [float(v) for v in traj.xs[k]]
        row += [float(v) for v in traj.ys[k]]
        if has_h:
            row.append(float(traj.hamiltonian_series[k]))
        rows.append(row)
    return header, rows


def cmd_simulate(args) -> int:
    t0 = time.perf_counter()
    _merge_config(args, {
        "game": [("eps", "eps"), ("start", "start")],
        "integrator": [("t_end", "t_end"), ("record_every", "record_every"),
                       ("tol_rel", "tol_rel"), ("tol_abs", "tol_abs"),
                       ("mode", "mode")],
        "diagnostics": [("threshold", "threshold")],
    })
    _apply_defaults(args, t_end=1000.0, record_every=0.5, tol_rel=1e-10,
                    tol_abs=1e-10, mode="log_ratio", start="uniform",
                    threshold=0.9)
    if args.eps is None:
        raise DomainError("--eps EX EY is required (flag or config)")
    params = RpsParams(eps_x=float(args.eps[0]), eps_y=float(args.eps[1]))
    game = build_generalized_rps(params)
    start = _parse_start(args.start)
    traj = integrate(game, start, _integrator_from_args(args))

    outdir = _output_dir(args)
    out = outdir / (args.out or "trajectory.csv")
    header, rows = _trajectory_rows(traj)
    _write_csv(out, header, rows)
    outputs = [out]

    stats = {"samples": int(traj.ts.size), "escaped": traj.escaped}
    if traj.hamiltonian_series is not None:
        h = traj.hamiltonian_series
        stats["h_drift"] = float(np.max(np.abs(h - h[0])))
    if args.mode == "simplex":
        report = residence_times(traj, threshold=args.threshold)
        res_out = outdir / (args.out_residence or "residence.csv")
        _write_csv(res_out, ["corner", "entry_t", "duration"],
                   [[e.corner, float(e.entry_t), float(e.duration)]
                    for e in report.episodes])
        outputs.append(res_out)
        stats["episodes"] = len(report.episodes)

    config = {"eps": [params.eps_x, params.eps_y], "start": args.start,
              "t_end": args.t_end, "record_every": args.record_every,
              "tol_rel": args.tol_rel, "tol_abs": args.tol_abs,
              "mode": args.mode}
    _finish(args, "simulate", config, None, outputs, t0, stats)
    return EXIT_OK


def cmd_lyapunov(args) -> int:
    t0 = time.perf_counter()
    _merge_config(args, {
        "game": [("eps", "eps"), ("start", "start")],
        "diagnostics": [("t_total", "t_total"), ("qr_interval", "qr_interval"),
                        ("transient", "transient"), ("dt", "dt")],
    })
    _apply_defaults(args, t_total=5000.0, qr_interval=1.0, transient=500.0,
                    dt=0.01, start=DEFAULT_CHAOS_START)
    start = _parse_start(args.start)
    outdir = _output_dir(args)

    if args.eps_sweep is not None:
        eps_values = _parse_float_sweep(args.eps_sweep)
        if not args.zero_sum:
            raise DomainError("--eps-sweep requires --zero-sum")

        def one(eps: float):
            game = build_generalized_rps(RpsParams(eps_x=eps, eps_y=-eps))
            res = lyapunov_spectrum(game, start, t_total=args.t_total,
                                    qr_interval=args.qr_interval,
                                    transient=args.transient, dt=args.dt)
            return float(eps), float(res.exponents[0])

        with ThreadPoolExecutor(max_workers=min(4, len(eps_values))) as pool:
            table = sorted(pool.map(one, eps_values))
        out = outdir / (args.out or "lyapunov_sweep.csv")
        _write_csv(out, ["eps", "lambda1"], [list(r) for r in table])
        stats = {"lambda1_first": table[0][1], "lambda1_last": table[-1][1]}
        config = {"eps_sweep": args.eps_sweep, "zero_sum": True,
                  "start": args.start, "t_total": args.t_total,
                  "qr_interval": args.qr_interval, "transient": args.transient,
                  "dt": args.dt}
        _finish(args, "lyapunov", config, None, [out], t0, stats)
        return EXIT_OK

    if args.eps is None:
        raise DomainError("--eps EX EY or --eps-sweep is required")
    params = RpsParams(eps_x=float(args.eps[0]), eps_y=float(args.eps[1]))
    game = build_generalized_rps(params)
    res = lyapunov_spectrum(game, start, t_total=args.t_total,
                            qr_interval=args.qr_interval,
                            transient=args.transient, dt=args.dt)
    out = outdir / (args.out or "lyapunov.csv")
    dim = res.exponents.size
    header = ["t"] + [f"lambda{i + 1}" for i in range(dim)]
    rows = [[float(res.ts[k])] + [float(v) for v in res.convergence_series[k]]
            for k in range(res.ts.size)]
    _write_csv(out, header, rows)
    stats = {"exponents": [float(v) for v in res.exponents],
             "escaped": res.escaped}
    if args.check_pairs:
        lam = res.exponents
        residual = float(np.max(np.abs(lam + lam[::-1])))
        stats["pair_residual"] = residual
        stats["sum_residual"] = float(abs(lam.sum()))
    config = {"eps": [params.eps_x, params.eps_y], "start": args.start,
              "t_total": args.t_total, "qr_interval": args.qr_interval,
              "transient": args.transient, "dt": args.dt}
    _finish(args, "lyapunov", config, None, [out], t0, stats)
    return EXIT_OK


def cmd_poincare(args) -> int:
    t0 = time.perf_counter()
    _merge_config(args, {
        "game": [("eps", "eps"), ("start", "start")],
        "integrator": [("t_end", "t_end"), ("record_every", "record_every"),
                       ("tol_rel", "tol_rel"), ("tol_abs", "tol_abs")],
        "diagnostics": [("bins", "bins")],
    })
    _apply_defaults(args, t_end=5000.0, record_every=0.05, tol_rel=1e-10,
                    tol_abs=1e-10, start=DEFAULT_CHAOS_START, bins=50)
    if args.eps is None:
        raise DomainError("--eps EX EY is required (flag or config)")
    params = RpsParams(eps_x=float(args.eps[0]), eps_y=float(args.eps[1]))
    game = build_generalized_rps(params)
    start = _parse_start(args.start)
    cfg = IntegratorConfig(t_end=args.t_end, record_every=args.record_every,
                           tol_rel=args.tol_rel, tol_abs=args.tol_abs)
    traj = integrate(game, start, cfg)
    section = poincare_section(traj, game=game)

    outdir = _output_dir(args)
    out = outdir / (args.out or "section.csv")
    _write_csv(out, ["t", "x1", "x2", "y1", "y2", "direction"],
               [[float(p.t), float(p.coords[0]), float(p.coords[1]),
                 float(p.coords[2]), float(p.coords[3]), p.direction]
                for p in section.points])
    occ = grid_occupancy(section, bins=args.bins)
    stats = {"points": len(section.points), "occupancy": occ,
             "degenerate": section.degenerate}
    config = {"eps": [params.eps_x, params.eps_y], "start": args.start,
              "t_end": args.t_end, "record_every": args.record_every,
              "bins": args.bins}
    _finish(args, "poincare", config, None, [out], t0, stats)
    return EXIT_OK


def cmd_minority(args) -> int:
    t0 = time.perf_counter()
    _merge_config(args, {
        "minority": [("n", "n"), ("m", "m"), ("s", "s"), ("steps", "steps"),
                     ("seed", "seed"), ("m_sweep", "m_sweep"),
                     ("seeds", "seeds"), ("discard", "discard")],
    })
    _apply_defaults(args, s=2, steps=10000, seed=0)
    if args.n is None:
        raise DomainError("--n is required (flag or config)")
    outdir = _output_dir(args)

    if args.m_sweep is not None:
        m_values = _parse_int_sweep(args.m_sweep)
        n_seeds = args.seeds if args.seeds is not None else 5
        discard = args.discard if args.discard is not None else args.steps // 10

        def one(m: int):
            rows = sigma_vs_m_sweep(args.n, args.s, [m], args.steps,
                                    seeds=range(n_seeds), discard=discard).rows
            return rows[0]

        with ThreadPoolExecutor(max_workers=min(4, len(m_values))) as pool:
            rows = sorted(pool.map(one, m_values), key=lambda r: r.m)
        out = outdir / (args.out or "minority_sweep.csv")
        _write_csv(out, ["m", "sigma_mean", "sigma_stderr", "n_seeds"],
                   [[r.m, r.sigma_mean, r.sigma_stderr, r.n_seeds] for r in rows])
        best = min(rows, key=lambda r: r.sigma_mean)
        stats = {"argmin_m": best.m, "sigma_min": best.sigma_mean}
        config = {"n": args.n, "s": args.s, "steps": args.steps,
                  "m_sweep": args.m_sweep, "seeds": n_seeds, "discard": discard}
        _finish(args, "minority", config, None, [out], t0, stats)
        return EXIT_OK

    if args.m is None:
        raise DomainError("--m or --m-sweep is required")
    cfg = MinorityGameConfig(n_agents=args.n, m=args.m, s=args.s,
                             t_steps=args.steps, seed=args.seed)
    record = run_minority(cfg)
    out = outdir / (args.out or "minority_run.csv")
    _write_csv(out, ["t", "attendance", "minority_bit"],
               [[t, int(record.attendance[t]), int(record.minority_bits[t])]
                for t in range(record.attendance.size)])
    discard = args.discard if args.discard is not None else 0
    kept = record.attendance[discard:]
    stats = {"mean_attendance": float(kept.mean())}
    if kept.size >= 100:
        stats["sigma"] = float(np.std(kept, ddof=1))
    config = {"n": args.n, "m": args.m, "s": args.s, "steps": args.steps,
              "seed": args.seed, "discard": discard}
    _finish(args, "minority", config, cfg.seed, [out], t0, stats)
    return EXIT_OK


def _apply_defaults(args, **defaults):
    # config-file merge runs first, so only still-unset attrs fall back here
    for key, val in defaults.items():
        if getattr(args, key, None) is None:
            setattr(args, key, val)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gamelab",
        description=__doc__.splitlines()[0],
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON or TOML config file")
        p.add_argument("--output-dir", help=f"output directory "
                       f"(default ${OUTPUT_DIR_ENV} or cwd)")
        p.add_argument("--out", help="primary output file name")

    p = sub.add_parser("enumerate", help="exact Nash enumeration + law checks")
    common(p)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--game", help="game JSON file")
    src.add_argument("--identity", type=int, metavar="N",
                     help="n-strategy identity coordination game")
    src.add_argument("--rps", type=float, nargs=2, metavar=("EX", "EY"),
                     help="generalized rock-paper-scissors payoffs")
    src.add_argument("--random", metavar="RxC",
                     help="random nondegenerate integer games, e.g. 4x4")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--assert-laws", action="store_true",
                   help="exit 6 if any counting law fails")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("simulate", help="integrate coupled replicator dynamics")
    common(p)
    p.add_argument("--eps", type=float, nargs=2, metavar=("EX", "EY"))
    p.add_argument("--start", help="'uniform' or x1,x2,x3,y1,y2,y3")
    p.add_argument("--t-end", type=float)
    p.add_argument("--record-every", type=float)
    p.add_argument("--tol-rel", type=float)
    p.add_argument("--tol-abs", type=float)
    p.add_argument("--mode", choices=["log_ratio", "simplex"])
    p.add_argument("--threshold", type=float,
                   help="residence threshold for simplex-mode report")
    p.add_argument("--out-residence", help="residence CSV name (simplex mode)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("lyapunov", help="Lyapunov spectrum via tangent-space QR")
    common(p)
    p.add_argument("--eps", type=float, nargs=2, metavar=("EX", "EY"))
    p.add_argument("--eps-sweep", metavar="A:B:N",
                   help="sweep zero-sum eps over n values")
    p.add_argument("--zero-sum", action="store_true",
                   help="pair each sweep eps with -eps")
    p.add_argument("--start", help="'uniform' or x1,x2,x3,y1,y2,y3")
    p.add_argument("--t-total", type=float)
    p.add_argument("--qr-interval", type=float)
    p.add_argument("--transient", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--check-pairs", action="store_true",
                   help="report the +/- pair-symmetry residual")
    p.set_defaults(func=cmd_lyapunov)

    p = sub.add_parser("poincare", help="hyperplane section of a trajectory")
    common(p)
    p.add_argument("--eps", type=float, nargs=2, metavar=("EX", "EY"))
    p.add_argument("--start", help="'uniform' or x1,x2,x3,y1,y2,y3")
    p.add_argument("--t-end", type=float)
    p.add_argument("--record-every", type=float)
    p.add_argument("--tol-rel", type=float)
    p.add_argument("--tol-abs", type=float)
    p.add_argument("--bins", type=int, help="occupancy grid resolution")
    p.set_defaults(func=cmd_poincare)

    p = sub.add_parser("minority", help="minority-game runs and sigma sweeps")
    common(p)
    p.add_argument("--n", type=int, help="number of agents (odd)")
    p.add_argument("--m", type=int, help="memory bits")
    p.add_argument("--s", type=int, help="strategies per agent")
    p.add_argument("--steps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--m-sweep", metavar="A:B", help="memory sweep, integers")
    p.add_argument("--seeds", type=int, help="seeds per sweep point (>= 5)")
    p.add_argument("--discard", type=int, help="transient steps to drop")
    p.set_defaults(func=cmd_minority)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (BoundsError, DomainError, DimensionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BOUNDS
    except SizeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SIZE
    except (DegeneracyError, StiffnessError, InconclusiveError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERACY
    except json.JSONDecodeError as exc:
        print(f"error: cannot parse config: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
