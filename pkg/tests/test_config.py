import json

import pytest

from legendre_hrma.config import ConfigError, RunSettings, builtin, load_config, parse_config
from legendre_hrma.toric import fubini_study


FS_CONFIG = {
    "polytope": {"interval": [-1, 1]},
    "u0": {"kind": "guillemin"},
    "udot0": {"kind": "polynomial", "coefficients": [0, 0, -1]},
}


def test_interval_config_equals_builtin():
    data, settings = parse_config(FS_CONFIG)
    assert data == fubini_study()
    assert settings == RunSettings()


def test_facets_form_and_settings():
    cfg = {
        "polytope": {"facets": [{"normal": [1], "offset": -1}, {"normal": [-1], "offset": -1}]},
        "udot0": {"kind": "fubini_study_quadratic"},
        "grid": 1025,
        "T": 2.5,
    }
    data, settings = parse_config(cfg)
    assert data == fubini_study()
    assert settings.grid == 1025 and settings.T == 2.5


def test_smooth_part_and_scale():
    cfg = dict(FS_CONFIG, u0={"kind": "guillemin_plus_smooth", "smooth": [0, 0, 0.5], "scale": 2.0})
    data, _ = parse_config(cfg)
    ax = data.axis
    assert ax.u0(0.5) == pytest.approx(2 * fubini_study().axis.u0(0.5) + 0.125)


def test_rectangle_with_axes():
    cfg = {
        "polytope": {"rectangle": [[-1, 1], [0, 2]]},
        "axes": [{"udot0": [0, 0, -1]}, {"udot0": [0, 0.5]}],
    }
    data, _ = parse_config(cfg)
    assert data.dimension == 2
    assert data.axes[1].bounds == (0.0, 2.0)


def test_builtin_key():
    data, _ = parse_config({"builtin": "p1xp1"})
    assert data.dimension == 2
    with pytest.raises(ConfigError, match="unknown builtin"):
        builtin("cp2")


@pytest.mark.parametrize("cfg,field", [
    ([], "config"),
    ({}, "polytope"),
    ({"polytope": {"ball": 1}, "udot0": [0]}, "polytope"),
    ({"polytope": {"interval": [1, -1]}, "udot0": [0]}, "polytope"),
    ({"polytope": {"interval": [-1]}, "udot0": [0]}, "polytope.interval"),
    (dict(FS_CONFIG, u0={"kind": "entropy"}), "u0.kind"),
    (dict(FS_CONFIG, u0={"kind": "guillemin", "scale": -1}), "u0.scale"),
    (dict(FS_CONFIG, udot0={"kind": "poly"}), "udot0.kind"),
    (dict(FS_CONFIG, udot0={"kind": "polynomial", "coefficients": []}), "udot0.coefficients"),
    (dict(FS_CONFIG, udot0={"kind": "polynomial", "coefficients": [0, "x"]}),
     "udot0.coefficients[1]"),
    ({"polytope": {"interval": [-1, 1]}}, "udot0"),
    (dict(FS_CONFIG, grid=10), "grid"),
    (dict(FS_CONFIG, raster=True), "raster"),
    (dict(FS_CONFIG, T=0), "T"),
    ({"polytope": {"rectangle": [[-1, 1], [-1, 1]]}, "axes": [{}]}, "axes"),
    ({"polytope": {"rectangle": [[-1, 1], [-1, 1]]}, "axes": [{"udot0": [0]}, {}]}, "axes[1].udot0"),
])
def test_errors_name_the_field(cfg, field):
    with pytest.raises(ConfigError) as info:
        parse_config(cfg)
    assert info.value.field == field
    assert str(info.value).startswith(field + ":")


def test_load_config(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps(FS_CONFIG))
    assert load_config(p)[0] == fubini_study()
    p.write_text("{not json")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_config(p)
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.json")
