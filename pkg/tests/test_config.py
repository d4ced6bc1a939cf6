from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mallows_lab.config import load_config, parse_config, serialize_config
from mallows_lab.errors import ConfigError

CONFIGS = sorted((Path(__file__).resolve().parents[1] / "configs").glob("*.ini"))

BASE = """[model]
coupling = finite_range
J = 0.2
N = 64
R = 200

[analysis]
n = 4, 16
"""


def test_defaults_filled():
    cfg = parse_config(BASE)
    assert cfg.model["L"] == 1 and cfg.model["spins"] == "plus_minus"
    assert cfg.analysis["k"] == (0,) and cfg.analysis["r"] == (1.0, 2.0)
    assert cfg.output["formats"] == ("csv", "tsv")
    assert cfg.coupling_dict() == {"variant": "finite_range", "J": 0.2, "L": 1}


@pytest.mark.parametrize("path", CONFIGS, ids=lambda p: p.stem)
def test_shipped_configs_round_trip(path):
    cfg = load_config(path)
    again = parse_config(serialize_config(cfg))
    assert again == cfg
    assert serialize_config(again) == serialize_config(cfg)


@given(
    J=st.floats(0, 10, allow_nan=False),
    beta=st.floats(0, 1, allow_nan=False),
    ns=st.lists(st.integers(2, 10**6), min_size=1, max_size=6, unique=True),
    rs=st.lists(st.floats(1e-3, 50, allow_nan=False), min_size=1, max_size=4),
    delta=st.floats(1e-6, 0.2499, allow_nan=False),
    seed=st.integers(0, 2**63),
)
def test_round_trip_property(J, beta, ns, rs, delta, seed):
    text = (
        f"[model]\ncoupling = finite_range\nJ = {J!r}\nbeta = {beta!r}\nN = 10\nR = 2\nseed = {seed}\n"
        f"[analysis]\nn = {', '.join(map(str, sorted(ns)))}\nr = {', '.join(map(repr, rs))}\ndelta = {delta!r}\n"
    )
    cfg = parse_config(text)
    assert parse_config(serialize_config(cfg)) == cfg
    assert cfg.model["J"] == J and cfg.analysis["delta"] == delta


@pytest.mark.parametrize(
    "text, line, fragment",
    [
        (BASE.replace("J = 0.2", "J = abc"), 3, "model.J"),
        (BASE.replace("N = 64", "N = 0"), 4, "outside its domain"),
        (BASE.replace("n = 4, 16", "n = 16, 4"), 8, "outside its domain"),
        (BASE + "delta = 0.3\n", 9, "outside its domain"),
        (BASE.replace("R = 200", "Rx = 200"), 5, "unknown key"),
        (BASE + "[plots]\nx = 1\n", 9, "unknown section"),
        (BASE.replace("R = 200", "R = 200\nR = 300"), 6, "R"),
        (BASE.replace("J = 0.2", "J 0.2"), 3, "cannot parse"),
        ("N = 3\n" + BASE, 1, "outside of any"),
    ],
)
def test_errors_carry_line_numbers(text, line, fragment):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.lineno == line
    assert f"line {line}:" in str(info.value) and fragment in str(info.value)


def test_missing_keys():
    with pytest.raises(ConfigError, match="missing required key 'R'"):
        parse_config(BASE.replace("R = 200\n", ""))
    with pytest.raises(ConfigError, match="needs key 'J'"):
        parse_config(BASE.replace("J = 0.2\n", ""))
    with pytest.raises(ConfigError, match="only supported with the zero"):
        parse_config(BASE.replace("N = 64", "N = 64\nspins = real"))


def test_overrides_do_not_mutate():
    cfg = parse_config(BASE)
    new = cfg.with_overrides(seed=5, directory="elsewhere")
    assert new.model["seed"] == 5 and new.output["directory"] == "elsewhere"
    assert cfg.model["seed"] == 0 and cfg.output["directory"] == "out"


def test_unreadable_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "nope.ini")
