"""Declarative experiment configuration.

Config files are INI documents (flat key-value pairs grouped in sections);
every key is typed, validated, and defaulted against the schema below.
Unknown keys are an error in strict mode and a warning in lenient mode.
Shipped presets live under scorelandau/presets/.
"""

import configparser
import importlib.resources
import json
import warnings
from dataclasses import asdict, dataclass, field

from .errors import ConfigError

INITIAL_CHOICES = ("bkw2d", "bkw3d", "bimaxwellian", "rosenbluth")
PROVIDER_CHOICES = ("learned", "analytic", "blob")
OPTIMIZER_CHOICES = ("adamax", "adam")
INTEGRATOR_CHOICES = ("euler", "midpoint")

INITIAL_DIMS = {"bkw2d": 2, "bkw3d": 3, "bimaxwellian": 2, "rosenbluth": 3}
TIME_EVOLVING = ("bkw2d", "bkw3d")


@dataclass
class KernelConfig:
    c_gamma: float = 0.0625
    gamma: float = 0.0


@dataclass
class ScoreConfig:
    provider: str = "learned"
    hidden_layers: int = 3
    hidden_width: int = 32
    residual: bool = False
    radial: bool = False
    optimizer: str = "adamax"
    learning_rate: float = 1e-4
    init_tolerance: float = 5e-5
    max_init_iters: int = 200_000
    allow_unconverged_init: bool = False
    ism_iters: int = 25
    blob_bandwidth: float = 0.15
    blob_cells: int = 50
    blob_half_width: float = 4.0


@dataclass
class DiagnosticsConfig:
    mesh_half_width: float = 4.0
    mesh_cells: int = 100
    kde_bandwidth: float = 0.15
    metric_cadence: int = 1
    snapshot_cadence: int = 50


@dataclass
class ExperimentConfig:
    name: str = "run"
    initial: str = "bkw2d"
    n_particles: int = 2000
    dt: float = 0.01
    t0: float = 0.0
    t_end: float = 1.0
    integrator: str = "euler"
    density_tracking: bool = False
    symmetry_fill: bool = False
    seed: int = 0
    output_dir: str = ""
    fp_tol: float = 1e-10
    fp_max_iters: int = 100
    kernel: KernelConfig = field(default_factory=KernelConfig)
    score: ScoreConfig = field(default_factory=ScoreConfig)
    diagnostics: DiagnosticsConfig = field(default_factory=DiagnosticsConfig)

    @property
    def dim(self):
        return INITIAL_DIMS[self.initial]

    @property
    def n_steps(self):
        return int(round((self.t_end - self.t0) / self.dt))

    def validate(self):
        def bad(name, msg):
            raise ConfigError(f"{name}: {msg}")

        if self.initial not in INITIAL_CHOICES:
            bad("run.initial", f"must be one of {INITIAL_CHOICES}")
        if self.n_particles < 1:
            bad("run.n_particles", "must be >= 1")
        if self.dt <= 0:
            bad("run.dt", "must be positive")
        if self.t_end < self.t0:
            bad("run.t_end", "must be >= t0")
        if self.integrator not in INTEGRATOR_CHOICES:
            bad("run.integrator", f"must be one of {INTEGRATOR_CHOICES}")
        if self.seed < 0:
            bad("run.seed", "must be a nonnegative integer")
        if self.fp_tol <= 0 or self.fp_max_iters < 1:
            bad("run.fp_tol", "fixed-point controls must be positive")
        if self.kernel.c_gamma <= 0:
            bad("kernel.c_gamma", "must be positive")
        d = self.dim
        if not (-d - 1 <= self.kernel.gamma <= 1):
            bad("kernel.gamma", f"must lie in [{-d - 1}, 1] for d={d}")
        s = self.score
        if s.provider not in PROVIDER_CHOICES:
            bad("score.provider", f"must be one of {PROVIDER_CHOICES}")
        if s.provider == "analytic" and self.initial not in TIME_EVOLVING:
            bad(
                "score.provider",
                f"analytic provider needs a time-evolving solution, "
                f"not {self.initial!r}",
            )
        if s.optimizer not in OPTIMIZER_CHOICES:
            bad("score.optimizer", f"must be one of {OPTIMIZER_CHOICES}")
        for key in ("hidden_layers", "hidden_width", "ism_iters", "max_init_iters"):
            if getattr(s, key) < (0 if key == "ism_iters" else 1):
                bad(f"score.{key}", "must be positive")
        if s.learning_rate <= 0 or s.init_tolerance <= 0:
            bad("score.learning_rate", "rates and tolerances must be positive")
        if s.blob_bandwidth <= 0 or s.blob_cells < 1 or s.blob_half_width <= 0:
            bad("score.blob_bandwidth", "blob parameters must be positive")
        g = self.diagnostics
        if g.mesh_half_width <= 0 or g.mesh_cells < 1 or g.kde_bandwidth <= 0:
            bad("diagnostics.mesh_half_width", "mesh parameters must be positive")
        if g.metric_cadence < 1 or g.snapshot_cadence < 1:
            bad("diagnostics.metric_cadence", "cadences must be >= 1")
        if self.symmetry_fill and self.initial not in ("bkw2d", "bkw3d"):
            bad("run.symmetry_fill", "only valid for sign-symmetric laws")
        return self

    def to_dict(self):
        return asdict(self)

    def to_json(self, indent=2):
        return json.dumps(self.to_dict(), indent=indent)


_SECTIONS = {
    "run": (
        ExperimentConfig,
        {
            "name": str,
            "initial": str,
            "n_particles": int,
            "dt": float,
            "t0": float,
            "t_end": float,
            "integrator": str,
            "density_tracking": bool,
            "symmetry_fill": bool,
            "seed": int,
            "output_dir": str,
            "fp_tol": float,
            "fp_max_iters": int,
        },
    ),
    "kernel": (KernelConfig, {"c_gamma": float, "gamma": float}),
    "score": (
        ScoreConfig,
        {
            "provider": str,
            "hidden_layers": int,
            "hidden_width": int,
            "residual": bool,
            "radial": bool,
            "optimizer": str,
            "learning_rate": float,
            "init_tolerance": float,
            "max_init_iters": int,
            "allow_unconverged_init": bool,
            "ism_iters": int,
            "blob_bandwidth": float,
            "blob_cells": int,
            "blob_half_width": float,
        },
    ),
    "diagnostics": (
        DiagnosticsConfig,
        {
            "mesh_half_width": float,
            "mesh_cells": int,
            "kde_bandwidth": float,
            "metric_cadence": int,
            "snapshot_cadence": int,
        },
    ),
}


def _convert(section, key, raw, want):
    where = f"{section}.{key}"
    try:
        if want is bool:
            low = raw.strip().lower()
            if low in ("true", "yes", "on", "1"):
                return True
            if low in ("false", "no", "off", "0"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        return want(raw)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def parse_config(text, strict=True):
    parser = configparser.ConfigParser()
    parser.read_string(text)
    values = {"run": {}, "kernel": {}, "score": {}, "diagnostics": {}}
    for section in parser.sections():
        if section not in _SECTIONS:
            msg = f"unknown section [{section}]"
            if strict:
                raise ConfigError(msg)
            warnings.warn(msg)
            continue
        _, schema = _SECTIONS[section]
        for key, raw in parser.items(section):
            if key not in schema:
                msg = f"unknown key {section}.{key}"
                if strict:
                    raise ConfigError(msg)
                warnings.warn(msg)
                continue
            values[section][key] = _convert(section, key, raw, schema[key])
    cfg = ExperimentConfig(
        kernel=KernelConfig(**values["kernel"]),
        score=ScoreConfig(**values["score"]),
        diagnostics=DiagnosticsConfig(**values["diagnostics"]),
        **values["run"],
    )
    return cfg.validate()


def load_config(path, strict=True):
    with open(path) as fh:
        return parse_config(fh.read(), strict=strict)


def _format_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def config_to_ini(cfg):
    """Serialize to INI text; parse_config(config_to_ini(c)) == c."""
    parts = []
    groups = [
        ("run", {k: getattr(cfg, k) for k in _SECTIONS["run"][1]}),
        ("kernel", {k: getattr(cfg.kernel, k) for k in _SECTIONS["kernel"][1]}),
        ("score", {k: getattr(cfg.score, k) for k in _SECTIONS["score"][1]}),
        (
            "diagnostics",
            {k: getattr(cfg.diagnostics, k) for k in _SECTIONS["diagnostics"][1]},
        ),
    ]
    for section, mapping in groups:
        parts.append(f"[{section}]")
        for key, value in mapping.items():
            parts.append(f"{key} = {_format_value(value)}")
        parts.append("")
    return "\n".join(parts)


def save_config(cfg, path):
    with open(path, "w") as fh:
        fh.write(config_to_ini(cfg))


def preset_names():
    root = importlib.resources.files("scorelandau") / "presets"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".ini"))


def load_preset(name, strict=True):
    root = importlib.resources.files("scorelandau") / "presets"
    path = root / f"{name}.ini"
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise ConfigError(
            f"unknown preset {name!r}; available: {', '.join(preset_names())}"
        ) from None
    return parse_config(text, strict=strict)
