import pytest

from ccastereo.config import PRESETS, Config, load_config, parse_lines, parse_overrides, preset
from ccastereo.errors import ConfigError


def test_defaults_are_dslr_a():
    cfg = load_config()
    assert cfg.preset == "dslr-a" and cfg.P == 3.2 and cfg.iterations == [3, 3, 2]


def test_phone_preset():
    cfg = preset("phone")
    assert cfg.window_std == 11.0 and cfg.scales == 2 and cfg.iterations == [4, 4]
    assert cfg.vignetting and cfg.subtraction_bilateral and cfg.sigma_xy == 8.0


def test_all_presets_validate():
    for name in PRESETS:
        preset(name).validate()


def test_iteration_length_rejected():
    with pytest.raises(ConfigError) as exc:
        load_config(overrides={"scales": "2"})
    assert exc.value.key == "iterations"


@pytest.mark.parametrize("text,key", [("bogus = 1", "bogus"), ("P = abc", "P"),
                                      ("vignetting = maybe", "vignetting"),
                                      ("metric = XYZ", "metric")])
def test_bad_values_name_key(text, key):
    with pytest.raises(ConfigError) as exc:
        load_config(text=text)
    assert exc.value.key == key and key in str(exc.value)


def test_precedence_and_round_trip():
    cfg = load_config(text="preset = phone\nP = 5.0\n", overrides={"P": "6.5"})
    assert cfg.preset == "phone" and cfg.P == 6.5
    again = load_config(text=cfg.to_text())
    assert again == cfg
    assert parse_lines("# c\n\nt_q = 3 # x\n") == {"t_q": 3.0}
    assert parse_overrides(["a=b=c"]) == {"a": "b=c"}
    with pytest.raises(ConfigError):
        parse_overrides(["novalue"])
    assert Config().validate() is not None
