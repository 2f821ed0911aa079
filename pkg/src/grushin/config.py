"""Experiment configuration: a sectioned key-value file with a typed schema.

Example::

    [discretization]
    profile = desk1d
    K = 32

    [symbol]
    name = power-decay
    mode = G
    param.a = 0.5

    [experiment]
    seed = 7
    cv_tol = 0.1

    [output]
    dir = results

Errors are reported as ``path:line: message``.  The only environment
override is ``GRUSHIN_OUTPUT_DIR`` for the output directory.
"""

from __future__ import annotations

import configparser
import math
import os
import re
from dataclasses import dataclass

from .suite import DEFAULTS, PROFILE_DEFAULTS, PROFILES, Settings
from .symbols import BUILTINS

ENV_OUTPUT = "GRUSHIN_OUTPUT_DIR"
MODES = ("sqrtG", "G", "joint")


class ConfigError(ValueError):
    def __init__(self, message, path="<config>", line=None):
        self.path, self.line, self.message = path, line, message
        where = f"{path}:{line}" if line is not None else path
        super().__init__(f"{where}: {message}")


def _float(text):
    """Float literal, optionally times ``pi`` (``5*pi``, ``pi``, ``2.5pi``)."""
    t = text.strip().replace(" ", "")
    m = re.fullmatch(r"([-+0-9.eE]*)\*?pi", t)
    if m:
        coef = m.group(1)
        return (float(coef) if coef not in ("", "+", "-") else float(coef + "1")) * math.pi
    return float(t)


def _int(text):
    v = text.strip()
    if not re.fullmatch(r"[-+]?\d+", v):
        raise ValueError(f"expected an integer, got {v!r}")
    return int(v)


def _bool(text):
    v = text.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text.strip()!r}")


def _str(text):
    return text.strip()


def _number(text):
    try:
        return _int(text)
    except ValueError:
        return _float(text)


_DISC = {"profile": _str, "n1": _int, "n2": _int, "K": _int, "Lam": _int, "M1": _int, "M2": _int,
         "L1": _float, "L2": _float}
_SYMBOL = {"name": _str, "mode": _str, "sigma": _float, "rho": _float, "delta": _float, "N": _int}
_OUTPUT = {"dir": _str, "fields": _bool, "csv": _bool}


def _experiment_schema():
    out = {"seed": _int, "threads": _int, "input": _str}
    for key, val in DEFAULTS.items():
        if isinstance(val, bool):
            out[key] = _bool
        elif isinstance(val, int):
            out[key] = _int
        elif isinstance(val, float):
            out[key] = _float
        else:
            out[key] = _str
    return out


SCHEMA = {"discretization": _DISC, "symbol": _SYMBOL, "experiment": _experiment_schema(), "output": _OUTPUT}
REQUIRED = {"experiment": ("seed",)}


def _line_of(text, section, key=None):
    """1-based line of ``[section]`` or of ``key`` inside it."""
    current = None
    for i, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        m = re.fullmatch(r"\[([^\]]+)\]", line)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return i
            continue
        if current == section and key is not None:
            m = re.match(r"([^=:]+?)\s*[=:]", line)
            if m and m.group(1) == key:
                return i
    return None


@dataclass
class ExperimentConfig:
    """Parsed configuration: ``settings`` for the checks plus run options."""

    settings: Settings
    threads: int
    output_dir: str
    write_fields: bool
    write_csv: bool
    echo: dict
    path: str


def load_config(path=None, text=None, profile=None, seed=None, require_seed=True):
    """Parse and validate a configuration.

    ``profile`` and ``seed`` override the file (the command line passes them).
    With neither ``path`` nor ``text`` the defaults of ``profile`` are used
    and ``seed`` must be given.
    """
    name = path or "<config>"
    if text is None:
        if path is None:
            text = ""
        else:
            try:
                with open(path) as fh:
                    text = fh.read()
            except OSError as exc:
                raise ConfigError(f"cannot read config: {exc.strerror}", name) from None
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=name)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("key outside any section", name, exc.lineno) from None
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise ConfigError(exc.message.split(": ", 1)[-1] if hasattr(exc, "message") else str(exc), name,
                          exc.lineno) from None
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else None
        raise ConfigError("cannot parse line", name, lineno) from None

    values = {}
    for section in cp.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]", name, _line_of(text, section))
        schema = SCHEMA[section]
        for key, raw in cp.items(section):
            line = _line_of(text, section, key)
            if section == "symbol" and key.startswith("param."):
                parser = _number
            elif key in schema:
                parser = schema[key]
            else:
                raise ConfigError(f"unknown key {key!r} in [{section}]", name, line)
            try:
                values[(section, key)] = parser(raw)
            except ValueError as exc:
                raise ConfigError(f"[{section}] {key}: {exc}", name, line) from None

    if seed is not None:
        values[("experiment", "seed")] = int(seed)
    if require_seed:
        for section, keys in REQUIRED.items():
            for key in keys:
                if (section, key) not in values:
                    raise ConfigError(f"[{section}] {key} is required (runs must be reproducible)", name,
                                      _line_of(text, section))

    def err(section, key, msg):
        return ConfigError(f"[{section}] {key}: {msg}", name, _line_of(text, section, key))

    prof = profile or values.get(("discretization", "profile"), "desk1d")
    if prof not in PROFILES:
        raise err("discretization", "profile", f"unknown profile {prof!r}; known: {sorted(PROFILES)}")
    s = Settings.for_profile(prof, values.get(("experiment", "seed"), 0))
    for key in _DISC:
        if key != "profile" and ("discretization", key) in values:
            s.disc_params[key] = values[("discretization", key)]
    for key in ("n1", "n2", "K", "Lam", "M2"):
        if s.disc_params[key] < (0 if key == "n2" else 1):
            raise err("discretization", key, "must be positive")

    sym = values.get(("symbol", "name"), "constant")
    if sym not in BUILTINS:
        raise err("symbol", "name", f"unknown built-in {sym!r}; known: {sorted(BUILTINS)}")
    s.symbol = sym
    s.mode = values.get(("symbol", "mode"), "G")
    if s.mode not in MODES:
        raise err("symbol", "mode", f"expected one of {MODES}")
    s.symbol_params = {k[len("param."):]: v for (sec, k), v in values.items()
                       if sec == "symbol" and k.startswith("param.")}
    for k in ("sigma", "rho", "delta", "N"):
        if ("symbol", k) in values:
            s.class_params[k] = values[("symbol", k)]
    try:
        s.make_symbol()
    except TypeError as exc:
        raise err("symbol", "name", f"bad parameters for {sym!r}: {exc}") from None

    for key in DEFAULTS:
        if ("experiment", key) in values:
            s.tol[key] = values[("experiment", key)]
    for key, val in s.tol.items():
        if isinstance(val, (int, float)) and not isinstance(val, bool) and key != "decay_slope_max" and val <= 0:
            raise err("experiment", key, "must be > 0")
    if s.tol["nonconvergence"] not in ("warn", "fail"):
        raise err("experiment", "nonconvergence", "expected 'warn' or 'fail'")
    if ("experiment", "input") in values:
        s.input_field = values[("experiment", "input")]

    threads = values.get(("experiment", "threads"), 1)
    if threads < 1:
        raise err("experiment", "threads", "must be at least 1")
    out_dir = os.environ.get(ENV_OUTPUT) or values.get(("output", "dir"), "grushin-out")
    echo = {
        "profile": prof,
        "discretization": dict(s.disc_params),
        "symbol": {"name": s.symbol, "mode": s.mode, "params": dict(s.symbol_params),
                   "class": dict(s.class_params)},
        "experiment": dict(s.tol),
        "input": s.input_field,
    }
    return ExperimentConfig(s, threads, out_dir, values.get(("output", "fields"), True),
                            values.get(("output", "csv"), True), echo, name)


def default_config_text(profile="desk1d", seed=0):
    """A complete config file with every default spelled out."""
    lines = ["[discretization]", f"profile = {profile}"]
    lines += [f"{k} = {v}" for k, v in PROFILES[profile].items()]
    lines += ["", "[symbol]", "name = constant", "mode = G", "param.value = 1.0", "",
              "[experiment]", f"seed = {seed}", "threads = 1"]
    tol = dict(DEFAULTS)
    tol.update(PROFILE_DEFAULTS[profile])
    lines += [f"{k} = {str(v).lower() if isinstance(v, bool) else v}" for k, v in tol.items()]
    lines += ["", "[output]", "dir = grushin-out", "fields = true", "csv = true", ""]
    return "\n".join(lines)
