"""Experiment runner: the full score-based particle method, end to end.

One run executes: seeded sampling of the initial law; the initial score fit
(learned provider); then per time step an implicit-score-matching training
burst (warm-started), the collision drift, the optional log-determinant /
density update, and the particle push.  Scalar metrics are recorded every
``metric_cadence`` steps and particle snapshots every ``snapshot_cadence``.

Also provides the particle-count and time-step convergence sweeps and the
score-phase timing study.
"""

import csv
import json
import math
import os
import subprocess
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__, backend
from .config import ExperimentConfig
from .density import DensityTracker
from .diagnostics import (
    KdeConfig,
    MeshSpec,
    dump_mesh_field,
    entropy_quadrature,
    fit_loglog_slope,
    kde_on_mesh,
    particle_count_errors,
    relative_l2_error,
    timestep_errors,
)
from .kernels import LandauKernel
from .optim import make_optimizer
from .particles import (
    ParticleEnsemble,
    compute_drift,
    entropy_decay_estimate,
    euler_step,
    midpoint_step,
    moments,
)
from .providers import AnalyticScore, BlobScore, LearnedScore
from .score import MlpArchitecture, ScoreModel
from .solutions import has_time_evolution, make_initial_law, make_rng
from .training import train_initial, train_step_ism


@dataclass
class RunResult:
    config: ExperimentConfig
    metrics: dict
    ensemble: ParticleEnsemble
    tracker: object = None
    model: object = None
    law: object = None
    init_history: list = field(default_factory=list)
    manifest: dict = field(default_factory=dict)
    out_dir: str = ""

    def column(self, name):
        return np.asarray(self.metrics[name])


def _git_hash():
    try:
        out = subprocess.run(
            ["git", "rev-parse", "HEAD"],
            capture_output=True,
            text=True,
            timeout=5,
            check=False,
        )
        return out.stdout.strip() or None
    except OSError:
        return None


def build_kernel(cfg):
    return LandauKernel(cfg.kernel.c_gamma, cfg.kernel.gamma, cfg.dim)


def build_model(cfg, rng):
    arch = MlpArchitecture(
        input_dim=cfg.dim,
        hidden_layers=cfg.score.hidden_layers,
        hidden_width=cfg.score.hidden_width,
        residual=cfg.score.residual,
        radial=cfg.score.radial,
    )
    return ScoreModel(arch, rng=rng)


def run_experiment(cfg, out_dir=None, deterministic=False, progress=None):
    """Execute one configured run; writes artifacts when out_dir is set."""
    cfg.validate()
    t_begin = time.time()
    law = make_initial_law(cfg.initial)
    kernel = build_kernel(cfg)
    seeds = np.random.SeedSequence(cfg.seed).spawn(2)
    rng_sample = make_rng(np.random.Generator(np.random.Philox(seeds[0])))
    rng_model = np.random.Generator(np.random.Philox(seeds[1]))

    v0 = law.sample(
        cfg.n_particles, rng_sample, t=cfg.t0, symmetry_fill=cfg.symmetry_fill
    )
    ensemble = ParticleEnsemble(v0, cfg.t0)
    tracker = None
    if cfg.density_tracking:
        tracker = DensityTracker(law.density(cfg.t0, v0))

    oracle = law if has_time_evolution(law) else None

    model = None
    optimizer = None
    init_history = []
    if cfg.score.provider == "learned":
        model = build_model(cfg, rng_model)
        optimizer = make_optimizer(cfg.score.optimizer, cfg.score.learning_rate)
        target = law.score(cfg.t0, v0)
        init_history = train_initial(
            model,
            v0,
            target,
            cfg.score.init_tolerance,
            optimizer,
            max_iters=cfg.score.max_init_iters,
            on_cap="warn" if cfg.score.allow_unconverged_init else "raise",
        )
        provider = LearnedScore(model)
    elif cfg.score.provider == "analytic":
        provider = AnalyticScore(law, cfg.t0)
    else:
        mesh = MeshSpec(cfg.score.blob_half_width, cfg.score.blob_cells, cfg.dim)
        provider = BlobScore(cfg.score.blob_bandwidth, mesh)

    columns = [
        "step",
        "t",
        *[f"momentum_{a + 1}" for a in range(cfg.dim)],
        "energy",
        "denergy",
        "mean_drift_sq",
        "max_drift_sq",
        "entropy_rate_estimate",
        "ism_loss",
        "rel_fisher",
        "entropy",
        "min_density",
        "sec_score",
        "sec_drift",
        "sec_density",
    ]
    metrics = {c: [] for c in columns}
    snapshots = []

    def record_state(step, t, s, jac, extra):
        _, mom, energy = moments(ensemble)
        row = {
            "step": step,
            "t": t,
            "energy": energy,
            **{f"momentum_{a + 1}": mom[a] for a in range(cfg.dim)},
        }
        v = ensemble.velocities
        ism = float((s * s).sum(axis=1).mean() + 2.0 * np.trace(
            jac, axis1=1, axis2=2
        ).mean())
        row["ism_loss"] = ism
        if oracle is not None:
            g = oracle.score(t, v)
            row["rel_fisher"] = float(((s - g) ** 2).sum() / (g * g).sum())
        else:
            row["rel_fisher"] = math.nan
        if tracker is not None:
            row["entropy"] = tracker.entropy()
            row["min_density"] = float(tracker.density.min())
        else:
            row["entropy"] = math.nan
            row["min_density"] = math.nan
        row.update(extra)
        for c in columns:
            metrics[c].append(row.get(c, math.nan))

    def snapshot(t):
        snap = {"t": t, "velocities": ensemble.velocities.copy()}
        if tracker is not None:
            snap["logdet"] = tracker.logdet.copy()
            snap["density"] = tracker.density.copy()
        snapshots.append(snap)

    n_steps = cfg.n_steps
    cadence = cfg.diagnostics.metric_cadence
    for n in range(n_steps):
        t = cfg.t0 + n * cfg.dt

        t0_score = time.perf_counter()
        if cfg.score.provider == "learned" and n > 0:
            train_step_ism(
                model, ensemble.velocities, cfg.score.ism_iters, optimizer
            )
        elif cfg.score.provider == "analytic":
            provider.time = t
        elif cfg.score.provider == "blob":
            provider.fit(ensemble.velocities)
        s = provider.scores(ensemble.velocities)
        jac = provider.jacobians(ensemble.velocities)
        sec_score = time.perf_counter() - t0_score

        t0_drift = time.perf_counter()
        drift = compute_drift(ensemble, kernel, provider, scores=s)
        sec_drift = time.perf_counter() - t0_drift
        g2 = (drift * drift).sum(axis=1)

        rate_est = entropy_decay_estimate(ensemble, kernel, provider, scores=s)

        recorded = n % cadence == 0 or n == n_steps - 1
        if recorded:
            record_state(
                n,
                t,
                s,
                jac,
                {
                    "mean_drift_sq": float(g2.mean()),
                    "max_drift_sq": float(g2.max()),
                    "entropy_rate_estimate": rate_est,
                    "sec_score": sec_score,
                    "sec_drift": sec_drift,
                },
            )
        if n % cfg.diagnostics.snapshot_cadence == 0:
            snapshot(t)

        if tracker is not None:
            t0_density = time.perf_counter()
            rates = tracker.increments(
                ensemble, kernel, provider, scores=s, jacobians=jac
            )
            tracker.advance(rates, cfg.dt)
            if recorded:
                metrics["sec_density"][-1] = time.perf_counter() - t0_density

        old_v = ensemble.velocities
        if cfg.integrator == "euler":
            ensemble = euler_step(ensemble, drift, cfg.dt)
        else:
            ensemble = midpoint_step(
                ensemble, kernel, provider, cfg.dt, cfg.fp_tol, cfg.fp_max_iters
            )
        if recorded:
            metrics["denergy"][-1] = float(
                ((ensemble.velocities**2).sum(axis=1)
                 - (old_v**2).sum(axis=1)).mean()
            )

        if progress is not None and (n + 1) % progress == 0:
            print(f"  step {n + 1}/{n_steps} t={ensemble.time:.3f}", flush=True)

    # final state row (no step quantities)
    t = cfg.t0 + n_steps * cfg.dt if n_steps else cfg.t0
    ensemble.time = t
    if cfg.score.provider == "analytic":
        provider.time = t
    elif cfg.score.provider == "blob":
        provider.fit(ensemble.velocities)
    s = provider.scores(ensemble.velocities)
    jac = provider.jacobians(ensemble.velocities)
    record_state(n_steps, t, s, jac, {})
    snapshot(t)

    manifest = {
        "name": cfg.name,
        "seed": cfg.seed,
        "version": __version__,
        "git_hash": _git_hash(),
        "backend": backend.BACKEND,
        "deterministic": bool(deterministic),
        "numpy_version": np.__version__,
        "n_steps": n_steps,
        "init_fit_iterations": max(0, len(init_history) - 1),
        "init_fit_loss": init_history[-1] if init_history else None,
        "runtime_seconds": time.time() - t_begin,
    }
    result = RunResult(
        config=cfg,
        metrics={k: np.asarray(v) for k, v in metrics.items()},
        ensemble=ensemble,
        tracker=tracker,
        model=model,
        law=law,
        init_history=init_history,
        manifest=manifest,
    )
    result.snapshots = snapshots
    if out_dir:
        write_outputs(result, out_dir)
    return result


def write_outputs(result, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    cfg = result.config
    metrics_path = os.path.join(out_dir, "metrics.csv")
    cols = list(result.metrics)
    with open(metrics_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for i in range(len(result.metrics["step"])):
            writer.writerow([repr(float(result.metrics[c][i])) for c in cols])
    with open(os.path.join(out_dir, "config.json"), "w") as fh:
        fh.write(cfg.to_json())
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(result.manifest, fh, indent=2)
    snap_path = os.path.join(out_dir, "snapshots.csv")
    with open(snap_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        head = ["t", "particle_id"] + [f"v_{a + 1}" for a in range(cfg.dim)]
        tracked = result.tracker is not None
        if tracked:
            head += ["logdet", "density"]
        writer.writerow(head)
        for snap in result.snapshots:
            v = snap["velocities"]
            for i in range(v.shape[0]):
                row = [repr(float(snap["t"])), i] + [repr(float(x)) for x in v[i]]
                if tracked:
                    row += [
                        repr(float(snap["logdet"][i])),
                        repr(float(snap["density"][i])),
                    ]
                writer.writerow(row)
    if result.model is not None:
        result.model.save(os.path.join(out_dir, "score_checkpoint.json"))
    mesh = MeshSpec(cfg.diagnostics.mesh_half_width, cfg.diagnostics.mesh_cells,
                    cfg.dim)
    field = kde_on_mesh(
        result.ensemble.velocities, mesh, KdeConfig(cfg.diagnostics.kde_bandwidth)
    )
    from .solutions import has_time_evolution

    reference = None
    if result.law is not None and has_time_evolution(result.law):
        reference = result.law.density(result.ensemble.time, mesh.centers())
    dump_mesh_field(os.path.join(out_dir, "mesh_field.csv"), mesh, field,
                    reference)
    result.out_dir = out_dir
    return out_dir


def kde_error_against_oracle(result, t=None):
    """Relative L2 error of the KDE field against the oracle density."""
    cfg = result.config
    law = result.law
    if not has_time_evolution(law):
        raise ValueError("no closed-form oracle for this initial law")
    t = result.ensemble.time if t is None else t
    mesh = MeshSpec(cfg.diagnostics.mesh_half_width, cfg.diagnostics.mesh_cells,
                    cfg.dim)
    field_kde = kde_on_mesh(
        result.ensemble.velocities, mesh, KdeConfig(cfg.diagnostics.kde_bandwidth)
    )
    reference = law.density(t, mesh.centers())
    return relative_l2_error(field_kde, reference)


def run_particle_count_sweep(base_cfg, n_values, n_seeds, quad_half_width=8.0,
                             quad_nodes=480):
    """Exact-score density runs over particle counts and seeds.

    Returns (entropy_by_count, reference_entropy, e_N table, slope).  Seeds
    derive from the base seed so every (N, j) run is independent but
    reproducible.
    """
    law = make_initial_law(base_cfg.initial)
    h_ref = entropy_quadrature(
        lambda v: law.density(base_cfg.t_end, v),
        base_cfg.dim,
        quad_half_width,
        quad_nodes,
    )
    entropy_by_count = {}
    child_seeds = iter(
        np.random.SeedSequence(base_cfg.seed).generate_state(
            len(n_values) * n_seeds
        )
    )
    for n in n_values:
        finals = []
        for _ in range(n_seeds):
            cfg = _clone(base_cfg, n_particles=int(n), seed=int(next(child_seeds)))
            run = run_experiment(cfg)
            finals.append(run.tracker.entropy())
        entropy_by_count[int(n)] = finals
    counts, errs = particle_count_errors(entropy_by_count, h_ref)
    slope = fit_loglog_slope(counts, errs)
    return entropy_by_count, h_ref, (counts, errs), slope


def run_timestep_sweep(base_cfg, dt_values):
    """Exact-score density runs over time steps at a fixed seed.

    Returns (entropy_by_dt, e_dt table, slope); the Richardson differences
    |H_dt - H_{dt/2}| isolate the time-discretization error because the
    initial sample is identical across runs.
    """
    entropy_by_dt = {}
    for dt in dt_values:
        cfg = _clone(base_cfg, dt=float(dt))
        run = run_experiment(cfg)
        entropy_by_dt[float(dt)] = run.tracker.entropy()
    dts, errs = timestep_errors(entropy_by_dt)
    slope = fit_loglog_slope(dts, errs)
    return entropy_by_dt, (dts, errs), slope


def run_timing_study(base_cfg, n_values, ism_iters=None):
    """Wall-clock scaling of the score phases and the drift phase.

    For each N: the learned-score phase is one implicit-score-matching
    training burst plus evaluation at the particles (O(N)); the blob-score
    phase evaluates the mollified-entropy score on a mesh whose cell count
    tracks N (O(N^2)); the drift phase is the direct pair sum (O(N^2)).
    Returns (rows, slopes) where rows have keys n, sec_learned, sec_blob,
    sec_drift.
    """
    law = make_initial_law(base_cfg.initial)
    kernel = build_kernel(base_cfg)
    iters = base_cfg.score.ism_iters if ism_iters is None else ism_iters
    rows = []
    for n in n_values:
        n = int(n)
        rng = make_rng(base_cfg.seed + n)
        v = law.sample(n, rng, t=base_cfg.t0)
        ensemble = ParticleEnsemble(v, base_cfg.t0)

        model = build_model(base_cfg, np.random.default_rng(base_cfg.seed))
        optimizer = make_optimizer(
            base_cfg.score.optimizer, base_cfg.score.learning_rate
        )
        t0 = time.perf_counter()
        train_step_ism(model, v, iters, optimizer)
        scores = model.scores(v)
        sec_learned = time.perf_counter() - t0

        cells = max(2, int(round(n ** (1.0 / base_cfg.dim))))
        mesh = MeshSpec(base_cfg.score.blob_half_width, cells, base_cfg.dim)
        blob = BlobScore(base_cfg.score.blob_bandwidth, mesh)
        t0 = time.perf_counter()
        blob.fit(v)
        blob.scores(v)
        sec_blob = time.perf_counter() - t0

        t0 = time.perf_counter()
        compute_drift(ensemble, kernel, LearnedScore(model), scores=scores)
        sec_drift = time.perf_counter() - t0

        rows.append(
            {
                "n": n,
                "sec_learned": sec_learned,
                "sec_blob": sec_blob,
                "sec_drift": sec_drift,
            }
        )
    ns = [r["n"] for r in rows]
    slopes = {
        key: fit_loglog_slope(ns, [r[key] for r in rows])
        for key in ("sec_learned", "sec_blob", "sec_drift")
    }
    return rows, slopes


def _clone(cfg, **overrides):
    from dataclasses import replace

    run_keys = {k: v for k, v in overrides.items() if hasattr(cfg, k)}
    return ExperimentConfig(
        **{
            **{k: getattr(cfg, k) for k in (
                "name", "initial", "n_particles", "dt", "t0", "t_end",
                "integrator", "density_tracking", "symmetry_fill", "seed",
                "output_dir", "fp_tol", "fp_max_iters",
            )},
            **run_keys,
            "kernel": replace(cfg.kernel),
            "score": replace(cfg.score),
            "diagnostics": replace(cfg.diagnostics),
        }
    ).validate()
