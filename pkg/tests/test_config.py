import warnings

import pytest

from scorelandau.config import (
    config_to_ini,
    load_preset,
    parse_config,
    preset_names,
    save_config,
)
from scorelandau.errors import ConfigError

MINIMAL_EXAMPLE1 = """
[run]
initial = bkw2d
n_particles = 22500
dt = 0.01
t_end = 5.0

[kernel]
c_gamma = 0.0625

[score]
init_tolerance = 5e-5
"""


def test_minimal_example1_parses_to_reference_values():
    cfg = parse_config(MINIMAL_EXAMPLE1)
    assert cfg.initial == "bkw2d"
    assert cfg.n_particles == 150**2
    assert cfg.dt == 0.01
    assert cfg.t0 == 0.0 and cfg.t_end == 5.0
    assert cfg.n_steps == 500
    assert cfg.kernel.c_gamma == 1.0 / 16.0 and cfg.kernel.gamma == 0.0
    assert cfg.score.provider == "learned"
    assert cfg.score.hidden_layers == 3 and cfg.score.hidden_width == 32
    assert cfg.score.optimizer == "adamax"
    assert cfg.score.learning_rate == 1e-4
    assert cfg.score.init_tolerance == 5e-5
    assert cfg.score.ism_iters == 25
    assert cfg.dim == 2


def test_roundtrip_is_lossless(tmp_path):
    cfg = load_preset("example4")
    path = tmp_path / "echo.ini"
    save_config(cfg, path)
    text = path.read_text()
    again = parse_config(text)
    assert again == cfg
    assert parse_config(config_to_ini(again)) == cfg


def test_validation_errors_name_the_field():
    with pytest.raises(ConfigError, match="run.dt"):
        parse_config(MINIMAL_EXAMPLE1.replace("dt = 0.01", "dt = -0.01"))
    with pytest.raises(ConfigError, match="kernel.gamma"):
        parse_config(MINIMAL_EXAMPLE1 + "\n[kernel]\ngamma = -7.0\n"
                     if "[kernel]" not in MINIMAL_EXAMPLE1
                     else MINIMAL_EXAMPLE1.replace(
                         "c_gamma = 0.0625", "c_gamma = 0.0625\ngamma = -7.0"))
    with pytest.raises(ConfigError, match="score.provider"):
        parse_config(
            MINIMAL_EXAMPLE1.replace("initial = bkw2d", "initial = rosenbluth")
            .replace("init_tolerance = 5e-5", "provider = analytic")
        )


def test_unknown_keys_strict_and_lenient():
    text = MINIMAL_EXAMPLE1 + "\nwarp_factor = 9\n"
    with pytest.raises(ConfigError, match="warp_factor"):
        parse_config(text)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        cfg = parse_config(text, strict=False)
    assert any("warp_factor" in str(w.message) for w in caught)
    assert cfg.n_particles == 22500
    with pytest.raises(ConfigError, match="unknown section"):
        parse_config(MINIMAL_EXAMPLE1 + "\n[plasma]\nq = 1\n")


def test_type_errors_name_the_field():
    with pytest.raises(ConfigError, match="run.n_particles"):
        parse_config(MINIMAL_EXAMPLE1.replace("22500", "many"))


def test_presets_all_load_and_validate():
    names = preset_names()
    assert {"example1", "example1_desk", "example2", "example3", "example4",
            "bkw2d_exact"} <= set(names)
    for name in names:
        cfg = load_preset(name)
        assert cfg.n_steps >= 0
    with pytest.raises(ConfigError, match="unknown preset"):
        load_preset("example99")


def test_full_scale_presets_carry_reference_settings():
    ex1 = load_preset("example1")
    assert (ex1.n_particles, ex1.dt, ex1.t_end) == (22500, 0.01, 5.0)
    assert ex1.score.init_tolerance == 5e-5
    assert ex1.score.ism_iters == 25 and ex1.score.optimizer == "adamax"
    ex4 = load_preset("example4")
    assert (ex4.n_particles, ex4.dt, ex4.t_end) == (27000, 0.2, 20.0)
    assert ex4.kernel.gamma == -3.0
    assert ex4.score.optimizer == "adam" and ex4.score.residual
    ex2 = load_preset("example2")
    assert ex2.t0 == 5.5 and ex2.initial == "bkw3d"
    ex3 = load_preset("example3")
    assert ex3.initial == "bimaxwellian" and ex3.dt == 0.1
