"""Experiment configuration files.

Flat INI-style text: ``[section]`` headers and ``key = value`` lines, ``#``
comments.  Lists are comma separated.  Three sections: ``model``,
``analysis`` and ``output``.  Floats are written back with 17 significant
digits so that parse -> serialize -> parse is the identity.

Example::

    [model]
    coupling = finite_range
    J = 0.2
    L = 1
    spins = interval
    N = 1024
    boundary = periodic
    burn_in = 50
    thin = 1
    R = 5000
    seed = 7

    [analysis]
    k = 0
    n = 16, 64, 256, 1024
    r = 1, 2, 3

    [output]
    directory = out
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field

from .errors import ConfigError

BOOLS = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}


def _fmt_float(x: float) -> str:
    return "%.17g" % x


def _int(text: str) -> int:
    return int(text.strip())


def _float(text: str) -> float:
    return float(text.strip())


def _bool(text: str) -> bool:
    try:
        return BOOLS[text.strip().lower()]
    except KeyError:
        raise ValueError(f"expected a boolean, got {text!r}") from None


def _str(text: str) -> str:
    s = text.strip()
    if not s:
        raise ValueError("empty value")
    return s


def _list(conv):
    def parse(text: str) -> tuple:
        items = [t for t in (p.strip() for p in text.split(",")) if t]
        if not items:
            raise ValueError("empty list")
        return tuple(conv(t) for t in items)

    return parse


@dataclass(frozen=True)
class Key:
    parse: object
    kind: str  # int, float, bool, str, ints, floats, strs
    default: object = None
    required: bool = False
    check: object = None
    doc: str = ""


def _positive(x):
    return x > 0


def _nonneg(x):
    return x >= 0


def _all(pred):
    return lambda xs: all(pred(x) for x in xs)


SCHEMA = {
    "model": {
        "coupling": Key(_str, "str", required=True, check=lambda s: s in ("zero", "finite_range", "long_range", "perturbed")),
        "J": Key(_float, "float", check=_nonneg, doc="finite_range strength"),
        "L": Key(_int, "int", 1, check=_positive, doc="finite_range range"),
        "beta": Key(_float, "float", check=_nonneg),
        "alpha": Key(_float, "float", check=lambda a: a > 1),
        "c1": Key(_float, "float", check=_nonneg),
        "c2": Key(_float, "float", check=_nonneg),
        "perturbation_seed": Key(_int, "int", check=_nonneg),
        "spins": Key(_str, "str", "plus_minus", check=lambda s: s in ("plus_minus", "interval", "real")),
        "dist": Key(_str, "str", "norm"),
        "params": Key(_list(_float), "floats", (0.0, 1.0)),
        "N": Key(_int, "int", required=True, check=_positive),
        "boundary": Key(_str, "str", "free", check=lambda s: s in ("free", "periodic")),
        "burn_in": Key(_int, "int", 100, check=_positive),
        "thin": Key(_int, "int", 1, check=_positive),
        "windows": Key(_int, "int", 1, check=_positive),
        "R": Key(_int, "int", required=True, check=lambda r: r >= 2),
        "seed": Key(_int, "int", 0, check=_nonneg),
        "R_cut": Key(_int, "int", check=_positive),
    },
    "analysis": {
        "name": Key(_str, "str"),
        "k": Key(_list(_int), "ints", (0,), check=_all(_nonneg)),
        "n": Key(_list(_int), "ints", required=True, check=lambda ns: all(n >= 2 for n in ns) and list(ns) == sorted(set(ns))),
        "r": Key(_list(_float), "floats", (1.0, 2.0), check=_all(_positive)),
        "delta": Key(_float, "float", 0.2, check=lambda d: 0 < d < 0.25),
        "centering": Key(_str, "str", "known_mean", check=lambda s: s in ("known_mean", "empirical_mean")),
        "scaling": Key(_str, "str", "empirical_sigma", check=lambda s: s in ("theoretical_sigma", "empirical_sigma")),
        "stationary": Key(_bool, "bool", True),
        "sigma": Key(_float, "float", check=_positive),
        "max_lag": Key(_int, "int", check=_positive),
        "blocks": Key(_bool, "bool", True),
    },
    "output": {
        "directory": Key(_str, "str", "out"),
        "formats": Key(_list(_str), "strs", ("csv", "tsv"), check=_all(lambda f: f in ("csv", "tsv"))),
    },
}

_REQUIRED_BY_COUPLING = {
    "zero": (),
    "finite_range": ("J",),
    "long_range": ("beta", "alpha"),
    "perturbed": ("alpha", "c1", "c2", "perturbation_seed"),
}


@dataclass
class ExperimentConfig:
    model: dict
    analysis: dict
    output: dict
    source: str | None = field(default=None, compare=False)

    def coupling_dict(self) -> dict:
        m = self.model
        out = {"variant": m["coupling"]}
        for key in _REQUIRED_BY_COUPLING[m["coupling"]] + (("L",) if m["coupling"] == "finite_range" else ()):
            out[key] = m[key]
        if m["coupling"] == "perturbed" and m.get("beta") is not None:
            out["beta"] = m["beta"]
        return out

    def spin_dict(self) -> dict:
        d = {"spins": self.model["spins"]}
        if d["spins"] == "real":
            d["dist"] = self.model["dist"]
            d["params"] = self.model["params"]
        return d

    def with_overrides(self, seed: int | None = None, directory: str | None = None) -> "ExperimentConfig":
        model = dict(self.model)
        output = dict(self.output)
        if seed is not None:
            model["seed"] = int(seed)
        if directory is not None:
            output["directory"] = str(directory)
        return ExperimentConfig(model, dict(self.analysis), output, self.source)


def _key_lines(text: str) -> dict:
    """Map ``(section, key)`` to the 1-based line where it is set."""
    where = {}
    section = None
    for i, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        m = re.match(r"^\[([^\]]+)\]$", line)
        if m:
            section = m.group(1).strip()
            where[(section, None)] = i
            continue
        if section and "=" in line and not line.startswith(("#", ";")):
            where[(section, line.split("=", 1)[0].strip())] = i
    return where


def parse_config(text: str, source: str | None = None) -> ExperimentConfig:
    """Parse and validate; every problem raises :class:`ConfigError` with a line number when one applies."""
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",), comment_prefixes=("#", ";"), inline_comment_prefixes=("#",))
    cp.optionxform = str  # keys are case sensitive (N vs n)
    try:
        cp.read_string(text, source=source or "<config>")
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("key outside of any [section]", exc.lineno) from None
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise ConfigError(exc.message.split(": ", 1)[-1] if hasattr(exc, "message") else str(exc), exc.lineno) from None
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raise ConfigError(f"cannot parse {line.strip()!r} (expected 'key = value')", lineno) from None
    lines = _key_lines(text)
    sections = {}
    for name in cp.sections():
        if name not in SCHEMA:
            raise ConfigError(f"unknown section [{name}]", lines.get((name, None)))
    for name, keys in SCHEMA.items():
        got = dict(cp[name]) if cp.has_section(name) else {}
        for key in got:
            if key not in keys:
                raise ConfigError(f"unknown key {key!r} in [{name}]", lines.get((name, key)))
        out = {}
        for key, spec in keys.items():
            if key not in got:
                if spec.required:
                    raise ConfigError(f"missing required key {key!r} in [{name}]", lines.get((name, None)))
                out[key] = spec.default
                continue
            lineno = lines.get((name, key))
            try:
                value = spec.parse(got[key])
            except ValueError as exc:
                raise ConfigError(f"{name}.{key}: {exc}", lineno) from None
            if spec.check is not None and not spec.check(value):
                raise ConfigError(f"{name}.{key} = {got[key].strip()} is outside its domain", lineno)
            out[key] = value
        sections[name] = out
    model = sections["model"]
    for key in _REQUIRED_BY_COUPLING[model["coupling"]]:
        if model[key] is None:
            raise ConfigError(f"coupling {model['coupling']!r} needs key {key!r}", lines.get(("model", "coupling")))
    if model["spins"] == "real" and model["coupling"] != "zero":
        raise ConfigError("real-valued spins are only supported with the zero coupling", lines.get(("model", "spins")))
    return ExperimentConfig(sections["model"], sections["analysis"], sections["output"], source)


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, str(path))


def _format(value, kind: str) -> str:
    if kind == "float":
        return _fmt_float(value)
    if kind == "floats":
        return ", ".join(_fmt_float(v) for v in value)
    if kind == "ints":
        return ", ".join(str(v) for v in value)
    if kind == "strs":
        return ", ".join(value)
    if kind == "bool":
        return "true" if value else "false"
    return str(value)


def serialize_config(cfg: ExperimentConfig) -> str:
    """Canonical text form; unset optional keys are omitted."""
    chunks = []
    for name, keys in SCHEMA.items():
        values = getattr(cfg, name)
        chunks.append(f"[{name}]")
        for key, spec in keys.items():
            v = values.get(key)
            if v is None:
                continue
            chunks.append(f"{key} = {_format(v, spec.kind)}")
        chunks.append("")
    return "\n".join(chunks)
