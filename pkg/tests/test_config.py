import json

import pytest

from rfc.config import BUNDLED, load_config, parse_config, with_value
from rfc.errors import ConfigError


def base():
    return json.loads(load_config("fig2d").model_dump_json())


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_configs_load(name):
    cfg = load_config(name)
    assert cfg.servo.J_m == 0.25 and cfg.environment.K_env == 1e4
    assert cfg.controller.C_f == 2.0


def test_bundled_caption_parameters():
    got = {n: (load_config(n).servo.J_mi, load_config(n).dob.bandwidth, load_config(n).rtob.bandwidth)
           for n in BUNDLED}
    assert got == {
        "fig2a": (0.25, 500, 500),
        "fig2b": (0.25, 500, 1000),
        "fig2c": (0.5, 500, 1000),
        "fig2d": (0.125, 500, 1000),
        "fig3": (0.125, 500, 500),
    }


def test_unknown_key_rejected():
    data = base()
    data["servo"]["J_x"] = 1.0
    with pytest.raises(ConfigError, match="servo.J_x"):
        parse_config(data)


def test_invalid_values_reported_with_path():
    data = base()
    data["servo"]["J_mi"] = -0.1
    with pytest.raises(ConfigError, match="servo.J_mi"):
        parse_config(data)
    data = base()
    data["analysis"]["gain_grid"] = [1.0, 0.5]
    with pytest.raises(ConfigError, match="ascending"):
        parse_config(data)


def test_observer_models():
    data = base()
    data["dob"]["model"] = {"periodic": {"omega": 30.0}}
    assert parse_config(data).design().dob.order == 2
    data["dob"]["model"] = {"custom": {"A": [[0.0, 1.0], [0.0, 0.0]], "C": [[0.0, 1.0]]}}
    with pytest.raises(ConfigError, match="observable"):
        parse_config(data)
    data["dob"]["model"] = "constant"
    data["dob"]["gain"] = [[0.0, 1.0, 2.0]]
    with pytest.raises(ConfigError):
        parse_config(data)


def test_json_syntax_error_has_position(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"servo": {\n  "J_m": 0.25,,\n}}')
    with pytest.raises(ConfigError, match="line 2 column"):
        load_config(p)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "none.json")


def test_with_value():
    cfg = load_config("fig2d")
    new = with_value(cfg, "servo.J_mi", 0.3)
    assert new.servo.J_mi == 0.3 and cfg.servo.J_mi == 0.125
    with pytest.raises(ConfigError, match="unknown"):
        with_value(cfg, "servo.nope", 1.0)
    with pytest.raises(ConfigError, match="not numeric"):
        with_value(cfg, "sim.tau_i_mode", 1.0)


def test_scenario_seed_override():
    data = base()
    data["sim"].update(noise_std=1e-3, seed=9)
    cfg = parse_config(data)
    assert cfg.scenario().noise.seed == 9
    assert cfg.scenario(seed=2).noise.seed == 2
    assert cfg.scenario().noise.velocity_noise_std == 1e-3
