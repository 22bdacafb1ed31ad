import pytest
from hypothesis import given
from hypothesis import strategies as st

from graphene_zeromodes.config import SCHEMA, load_config, parse_config
from graphene_zeromodes.errors import ConfigError

MINIMAL = "format = 1\n"


def test_minimal_config_fills_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg["profile.kind"] == "uniform"
    assert cfg["grid.N"] == 128
    assert cfg["run.j"] == (0, 1, 2, 3)
    assert set(cfg.defaulted) == {f"{s}.{k}" for s, keys in SCHEMA.items() for k in keys}
    echo = cfg.echo()
    assert echo["format"] == 1 and echo["defaulted"] == list(cfg.defaulted)


def test_sections_and_dotted_keys():
    cfg = parse_config("format = 1\nprofile.B0 = -2  # comment\n[grid]\nN = 64\n[run]\nj = 0, 2\ndense = yes\n")
    assert cfg["profile.B0"] == -2.0
    assert cfg["grid.N"] == 64
    assert cfg["run.j"] == (0, 2)
    assert cfg["run.dense"] is True
    assert "grid.N" not in cfg.defaulted and "grid.L" in cfg.defaulted


def test_bump_list_builds_profile():
    cfg = parse_config("format = 1\n[profile]\nkind = uniform\nB0 = 0.5\nbumps = 0, 0, 1, 0.5; 1, 2, -0.3, 0.7\n")
    prof = cfg.profile()
    assert prof.kind == "uniform-plus-bumps"
    assert [b.amplitude for b in prof.bumps] == [1.0, -0.3]


def test_seeded_bumps_follow_seed():
    text = "format = 1\n[profile]\nkind = uniform-plus-bumps\nbump_count = 3\nseed = 4\n"
    a = parse_config(text).profile()
    assert a == parse_config(text).profile()
    assert a != parse_config(text).with_seed(5).profile()


def test_antidot_needs_radius():
    with pytest.raises(ConfigError, match="missing profile.R"):
        parse_config("format = 1\n[profile]\nkind = antidot\n")


def test_grid_minimum_message():
    with pytest.raises(ConfigError, match="grid.N below minimum 16"):
        parse_config("format = 1\n[grid]\nN = 8\n")


def test_unknown_key_suggests_nearest():
    with pytest.raises(ConfigError, match="unknown key 'grid.NN'; nearest valid key is 'grid.N'"):
        parse_config("format = 1\n[grid]\nNN = 8\n")
    with pytest.raises(ConfigError, match="nearest valid section is \\[profile\\]"):
        parse_config("format = 1\n[profil]\n")


@pytest.mark.parametrize(
    "text",
    ["[grid]\nN = 64\n", "grid.N = 64\nformat = 1\n", "format = 2\n", "format = one\n"],
    ids=["absent", "late", "version", "garbage"],
)
def test_format_header_required(text):
    with pytest.raises(ConfigError):
        parse_config(text)


@pytest.mark.parametrize(
    "line",
    [
        "run.j = 1.5",
        "run.dense = maybe",
        "profile.bumps = 1, 2, 3",
        "lattice.flux_cap = 0.9",
        "profile.kind = solenoid",
        "run.window = -1",
        "grid = 3",
    ],
)
def test_bad_values_rejected(line):
    with pytest.raises(ConfigError):
        parse_config(MINIMAL + line + "\n")


def test_zero_field_without_bumps_rejected():
    with pytest.raises(ConfigError):
        parse_config("format = 1\nprofile.B0 = 0\n")


def test_config_error_is_value_error():
    assert issubclass(ConfigError, ValueError)


def test_load_from_file(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("format = 1\n[lattice]\nshape = rectangle\nsize = 12, 10\n", encoding="utf-8")
    cfg = load_config(p)
    assert cfg["lattice.size"] == (12.0, 10.0)


def test_magnetic_length():
    assert parse_config("format = 1\nprofile.B0 = 4\n").magnetic_length() == pytest.approx(0.5)
    cfg = parse_config("format = 1\nprofile.B0 = 0\nprofile.bumps = 0,0,0.25,1\n")
    assert cfg.magnetic_length() == pytest.approx(2.0)


@given(
    st.floats(-5, 5, allow_nan=False).filter(lambda v: abs(v) > 1e-3),
    st.integers(16, 4096),
    st.lists(st.integers(0, 9), min_size=1, max_size=5),
    st.floats(0.01, 0.49),
)
def test_round_trip_through_text(B0, N, js, cap):
    text = f"format = 1\n[profile]\nB0 = {B0!r}\n[grid]\nN = {N}\n[run]\nj = {', '.join(map(str, js))}\n[lattice]\nflux_cap = {cap!r}\n"
    cfg = parse_config(text)
    assert cfg["profile.B0"] == B0
    assert cfg["grid.N"] == N
    assert cfg["run.j"] == tuple(js)
    assert cfg["lattice.flux_cap"] == cap
