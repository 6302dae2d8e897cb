"""Flat ``key = value`` experiment configuration.

One assignment per line, ``#`` starts a comment, lists are comma separated.
Unknown keys are rejected so that a typo cannot silently change a sweep.
"""

import dataclasses
from dataclasses import dataclass, field, fields

from ..beacon import BeaconMode
from ..channel import AntennaConfig
from ..sharing import Scheme

CONFIG_BEGIN = "# --- config ---"
CONFIG_END = "# --- end config ---"
# keys that never influence results and are kept out of output headers
NON_RESULT_KEYS = ("output_path", "workers")


class ConfigError(ValueError):
    pass


def _floats(v):
    return tuple(float(x) for x in v)


def _ints(v):
    return tuple(int(x) for x in v)


@dataclass(frozen=True)
class ExperimentConfig:
    t1: int = 4
    r1: int = 2
    t2: int = 4
    r2: int = 2
    snr_db_grid: tuple = (0.0, 10.0, 20.0, 30.0, 40.0)
    learn_snr_db: float = 30.0
    interference_gain_db: float = -10.5
    beacon: str = "ideal"
    cycle_length: int = 1
    alpha: float = 1.0
    trials: int = 100
    seed: int = 1
    schemes: tuple = ("SCS", "FDD", "NoMitigation", "PartialSCS")
    partial_extra: int = 1
    sweep: str = "snr"
    t_grid: tuple = (2, 3, 4, 5, 6, 7, 8)
    tx_power: float = 1.0
    fdd_power_boost: bool = False
    null_tol: float = 1e-8
    output_path: str = "results.csv"
    workers: int = field(default=1)

    def __post_init__(self):
        for name in ("t1", "r1", "t2", "r2", "cycle_length", "trials"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.seed < 0 or self.seed >= 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if not self.snr_db_grid:
            raise ConfigError("snr_db_grid must not be empty")
        if not self.alpha > 0:
            raise ConfigError("alpha must be positive")
        if self.tx_power <= 0:
            raise ConfigError("tx_power must be positive")
        if self.partial_extra < 0:
            raise ConfigError("partial_extra must be >= 0")
        if not 0 < self.null_tol < 1:
            raise ConfigError("null_tol must lie in (0, 1)")
        try:
            BeaconMode(self.beacon)
        except ValueError:
            raise ConfigError(f"unknown beacon mode {self.beacon!r}; use one of {[m.value for m in BeaconMode]}") from None
        for s in self.schemes:
            if s not in ("SCS", "FDD", "NoMitigation", "PartialSCS"):
                raise ConfigError(f"unknown scheme {s!r}")
        if self.sweep not in ("snr", "antennas"):
            raise ConfigError(f"sweep must be 'snr' or 'antennas', got {self.sweep!r}")
        if self.sweep == "antennas" and (not self.t_grid or min(self.t_grid) < 1):
            raise ConfigError("t_grid must hold positive antenna counts")

    @property
    def antennas(self):
        return AntennaConfig(self.t1, self.r1, self.t2, self.r2)

    @property
    def beacon_mode(self):
        return BeaconMode(self.beacon)

    @property
    def scheme_set(self):
        return tuple(Scheme(s) for s in self.schemes)

    def replace(self, **changes):
        try:
            return dataclasses.replace(self, **changes)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_text(self, include_all=True):
        lines = []
        for f in fields(self):
            if not include_all and f.name in NON_RESULT_KEYS:
                continue
            lines.append(f"{f.name} = {_format(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"


def _format(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ", ".join(_format(x) for x in v)
    return str(v)


def _parse_bool(s):
    s = s.strip().lower()
    if s in ("true", "yes", "1", "on"):
        return True
    if s in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _split(s):
    return [x.strip() for x in s.split(",") if x.strip()]


_CONVERTERS = {
    "snr_db_grid": lambda s: _floats(_split(s)),
    "t_grid": lambda s: _ints(_split(s)),
    "schemes": lambda s: tuple(_split(s)),
    "fdd_power_boost": _parse_bool,
}


def _convert(name, raw, default):
    if name in _CONVERTERS:
        return _CONVERTERS[name](raw)
    if isinstance(default, bool):
        return _parse_bool(raw)
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return raw.strip()


def parse_config_text(text):
    known = {f.name: f.default for f in fields(ExperimentConfig)}
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line.strip()!r}")
        key, raw = (part.strip() for part in body.split("=", 1))
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = _convert(key, raw, known[key])
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
    return ExperimentConfig(**values)


def extract_header_config(text):
    """Config text embedded in an output file's ``#`` header, or None."""
    lines = text.splitlines()
    if CONFIG_BEGIN not in lines:
        return None
    start = lines.index(CONFIG_BEGIN) + 1
    try:
        stop = lines.index(CONFIG_END, start)
    except ValueError:
        raise ConfigError("config header is not terminated") from None
    return "\n".join(line[2:] if line.startswith("# ") else line.lstrip("#") for line in lines[start:stop])


def load_config(path):
    """Read a config file, or the header of a previous run's output CSV."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    embedded = extract_header_config(text)
    return parse_config_text(embedded if embedded is not None else text)
