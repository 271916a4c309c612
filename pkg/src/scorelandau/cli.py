"""Command-line entry point.

Subcommands:
  run       execute one configured experiment and write its artifacts
  sweep     particle-count or time-step convergence study (exact score)
  timing    score-phase / drift-phase wall-clock scaling study
  validate  parse and validate a config file, echo it as JSON
"""

import argparse
import json
import os
import sys

from . import backend
from .config import load_config, load_preset, preset_names
from .errors import ScoreLandauError
from .runner import (
    run_experiment,
    run_particle_count_sweep,
    run_timestep_sweep,
    run_timing_study,
)


def _add_source(parser):
    parser.add_argument("--config", help="path to an INI config file")
    parser.add_argument(
        "--preset",
        help=f"named preset ({', '.join(preset_names())})",
    )
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--out", help="output directory")
    parser.add_argument(
        "--deterministic",
        action="store_true",
        help="record deterministic-reduction mode in the manifest "
        "(all reductions run in a fixed order either way)",
    )
    parser.add_argument(
        "--lenient",
        action="store_true",
        help="warn on unknown config keys instead of failing",
    )
    parser.add_argument("--n-particles", type=int, help="override particle count")
    parser.add_argument("--t-end", type=float, help="override final time")


def _load(args):
    if bool(args.config) == bool(args.preset):
        raise ScoreLandauError("give exactly one of --config or --preset")
    if args.config:
        cfg = load_config(args.config, strict=not args.lenient)
    else:
        cfg = load_preset(args.preset, strict=not args.lenient)
    if args.seed is not None:
        cfg.seed = args.seed
    if getattr(args, "n_particles", None):
        cfg.n_particles = args.n_particles
    if getattr(args, "t_end", None) is not None:
        cfg.t_end = args.t_end
    return cfg.validate()


def _float_list(text):
    return [float(x) for x in text.split(",") if x.strip()]


def _int_list(text):
    return [int(x) for x in text.split(",") if x.strip()]


def cmd_run(args):
    cfg = _load(args)
    out = args.out or cfg.output_dir or f"runs/{cfg.name}"
    print(f"backend: {backend.BACKEND}; running {cfg.name} "
          f"(N={cfg.n_particles}, steps={cfg.n_steps})")
    result = run_experiment(
        cfg, out_dir=out, deterministic=args.deterministic,
        progress=args.progress,
    )
    mom = [result.metrics[f"momentum_{a + 1}"] for a in range(cfg.dim)]
    drift = max(float(abs(m - m[0]).max()) for m in mom)
    print(f"done: wrote {out}")
    print(f"  energy {result.metrics['energy'][0]:.6f} -> "
          f"{result.metrics['energy'][-1]:.6f}; max momentum drift {drift:.2e}")
    if result.init_history:
        print(f"  initial fit: {result.manifest['init_fit_iterations']} iters, "
              f"loss {result.manifest['init_fit_loss']:.3e}")
    return 0


def cmd_sweep(args):
    cfg = _load(args)
    cfg.density_tracking = True
    if cfg.score.provider != "analytic":
        print("note: sweep uses the analytic (exact) score provider")
        cfg.score.provider = "analytic"
    cfg.validate()
    out = args.out or cfg.output_dir or f"runs/{cfg.name}_sweep"
    os.makedirs(out, exist_ok=True)
    if args.mode == "particles":
        _, h_ref, (counts, errs), slope = run_particle_count_sweep(
            cfg, args.n_values, args.runs
        )
        path = os.path.join(out, "e_n.csv")
        with open(path, "w") as fh:
            fh.write("n,e_n\n")
            for n, e in zip(counts, errs):
                fh.write(f"{n},{e!r}\n")
        print(f"reference entropy {h_ref!r}")
        for n, e in zip(counts, errs):
            print(f"  N={n:>8d}  e_N={e:.6e}")
        print(f"fitted e_N slope: {slope:+.3f} (expected about -0.5)")
    else:
        _, (dts, errs), slope = run_timestep_sweep(cfg, args.dt_values)
        path = os.path.join(out, "e_dt.csv")
        with open(path, "w") as fh:
            fh.write("dt,e_dt\n")
            for dt, e in zip(dts, errs):
                fh.write(f"{dt!r},{e!r}\n")
        for dt, e in zip(dts, errs):
            print(f"  dt={dt:<8g}  e_dt={e:.6e}")
        print(f"fitted e_dt slope: {slope:+.3f} (expected about +1)")
    print(f"wrote {path}")
    return 0


def cmd_timing(args):
    cfg = _load(args)
    rows, slopes = run_timing_study(cfg, args.n_values)
    out = args.out or cfg.output_dir or f"runs/{cfg.name}_timing"
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, "timing.csv")
    with open(path, "w") as fh:
        fh.write("n,sec_learned_score,sec_blob_score,sec_drift\n")
        for r in rows:
            fh.write(
                f"{r['n']},{r['sec_learned']!r},{r['sec_blob']!r},"
                f"{r['sec_drift']!r}\n"
            )
    print(f"{'N':>8} {'learned[s]':>12} {'blob[s]':>12} {'drift[s]':>12}")
    for r in rows:
        print(f"{r['n']:>8d} {r['sec_learned']:>12.4f} {r['sec_blob']:>12.4f} "
              f"{r['sec_drift']:>12.4f}")
    print(
        f"slopes: learned {slopes['sec_learned']:+.2f} (expect ~1), "
        f"blob {slopes['sec_blob']:+.2f} (expect ~2), "
        f"drift {slopes['sec_drift']:+.2f} (expect ~2)"
    )
    print(f"wrote {path}")
    return 0


def cmd_validate(args):
    cfg = _load(args)
    print(cfg.to_json())
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="scorelandau",
        description="Score-based deterministic particle solver for the "
        "homogeneous Landau equation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one experiment")
    _add_source(p_run)
    p_run.add_argument(
        "--progress", type=int, default=None, metavar="K",
        help="print progress every K steps",
    )
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="convergence study (exact score)")
    _add_source(p_sweep)
    p_sweep.add_argument(
        "--mode", choices=("particles", "timestep"), default="particles"
    )
    p_sweep.add_argument(
        "--n-values", type=_int_list, default=[100, 1000, 10000],
        help="comma-separated particle counts (particles mode)",
    )
    p_sweep.add_argument(
        "--dt-values",
        type=_float_list,
        default=[0.0025, 0.005, 0.01, 0.02, 0.04],
        help="comma-separated time steps (timestep mode)",
    )
    p_sweep.add_argument(
        "--runs", type=int, default=20,
        help="independent runs per particle count",
    )
    p_sweep.set_defaults(func=cmd_sweep)

    p_time = sub.add_parser("timing", help="score/drift phase scaling study")
    _add_source(p_time)
    p_time.add_argument(
        "--n-values", type=_int_list, default=[1000, 3000, 10000, 30000]
    )
    p_time.set_defaults(func=cmd_timing)

    p_val = sub.add_parser("validate", help="validate a config, echo JSON")
    _add_source(p_val)
    p_val.set_defaults(func=cmd_validate)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScoreLandauError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
