import json

import pytest

from mipr3d.config import PlaneRules, load_config, parse_config
from mipr3d.errors import ConfigError

BASE = {
    "grid": {"n": 400, "pitch": 1.0, "wavelength": 0.532},
    "sample": {"generator": "letters", "glyphs": "ABCD"},
    "geometry": {"mode": "hologram", "detector_distance": 200},
    "noise": {"snr": 10, "seed": 1},
    "mipr": {"iterations": 1000},
    "constraints": {
        "default": {"support": "loose", "amplitude_max": 1, "phase_mode": "zero"},
        "planes": [{}, {}, {}, {"support": "none"}],
    },
    "z": {"list": [0, 50, 100, 150]},
}


def with_(path, value, base=BASE):
    d = json.loads(json.dumps(base))
    cur = d
    for k in path[:-1]:
        cur = cur[k]
    cur[path[-1]] = value
    return d


def test_parse_full_config():
    c = parse_config(BASE)
    assert c.grid.n == 400 and c.noise.snr == 10
    assert c.z.list == (0, 50, 100, 150)
    rules = c.rules_for(4)
    assert [r.support for r in rules] == ["loose", "loose", "loose", "none"]
    assert all(r.amplitude_max == 1 and r.phase_mode == "zero" for r in rules)


def test_round_trip_through_dict():
    c = parse_config(BASE)
    assert parse_config(json.loads(json.dumps(c.to_dict()))) == c


def test_defaults():
    c = parse_config({"grid": {"n": 64, "pitch": 1, "wavelength": 1}})
    assert c.sample is None and c.noise.snr is None
    assert c.mipr.iterations == 1000 and c.mipr.division_epsilon == 1e-8
    assert c.rules_for(3) == (PlaneRules(),) * 3


@pytest.mark.parametrize(
    "path, value, where",
    [
        (("bogus",), 1, "unknown key"),
        (("grid", "extra"), 1, "grid: unknown key"),
        (("grid", "n"), 401, "grid.n"),
        (("grid", "pitch"), -1, "grid.pitch"),
        (("grid", "n"), "400", "grid.n"),
        (("sample", "generator"), "cube", "sample.generator"),
        (("sample", "diameter"), 3, "sample: unknown key"),
        (("geometry", "mode"), "ptycho", "geometry.mode"),
        (("noise", "snr"), 0, "noise.snr"),
        (("mipr", "iterations"), 0, "mipr.iterations"),
        (("mipr", "iterations"), 2.5, "mipr.iterations"),
        (("mipr", "init_mode"), "zeros", "mipr.init_mode"),
        (("mipr", "workers"), 2, "mipr: unknown key"),
        (("constraints", "default", "phase_mode"), "clamp", "constraints.default"),
        (("constraints", "planes", 1, "scale"), 0.5, "constraints.planes.1.scale"),
        (("constraints", "planes", 2, "colour"), 1, "constraints.planes.2"),
        (("z", "list"), [0, 50, 10], "z.list"),
        (("z", "sweep"), {"start": 0, "stop": 1}, "z.sweep.step"),
    ],
)
def test_errors_name_the_key(path, value, where):
    with pytest.raises(ConfigError) as info:
        parse_config(with_(path, value))
    assert str(info.value).startswith(where)
    assert info.value.exit_code == 2


def test_plane_count_mismatch():
    c = parse_config(BASE)
    with pytest.raises(ConfigError, match="constraints.planes"):
        c.rules_for(3)


def test_sweep_values():
    c = parse_config(with_(("z",), {"sweep": {"start": 600, "stop": 800, "step": 20}}))
    v = c.z.sweep_values()
    assert v[0] == 600 and v[-1] == 800 and len(v) == 11


def test_experimental_geometry_accepted():
    # 550 um field; sphere layers 780 and 636 um in front of the detector
    d = {
        "grid": {"n": 1000, "pitch": 0.55, "wavelength": 0.532},
        "sample": {"generator": "file", "intensity": "hologram.png"},
        "geometry": {"mode": "hologram", "detector_distance": 636},
        "z": {"list": [0, 144], "sweep": {"start": -300, "stop": 300, "step": 4}},
        "constraints": {"default": {"support": "tight", "smooth": 1, "closing": 2}},
    }
    c = parse_config(d)
    assert c.sample.params["intensity"] == "hologram.png"
    assert c.geometry.detector_distance + c.z.list[-1] - c.z.list[0] == 780
    assert c.rules_for(2)[0].support == "tight"


def test_seed_override():
    c = parse_config(BASE).with_seed(42)
    assert c.noise.seed == 42 and c.mipr.seed == 42


def test_load_config_and_manifest(tmp_path):
    (tmp_path / "c.json").write_text(json.dumps(BASE))
    c = load_config(tmp_path / "c.json")
    (tmp_path / "m.json").write_text(json.dumps({"command": "simulate", "config": c.to_dict()}))
    assert load_config(tmp_path / "m.json") == c
    (tmp_path / "bad.json").write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "bad.json")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
