"""Flat key=value experiment configuration with section headers.

The format is trivially parseable and diff-friendly:

    [run]
    seed = 7
    threads = 1

    [grid]
    s = 1
    m = 1.0

Unknown keys are rejected with the offending name; every physical
parameter is validated where positivity is required, and a seed is
mandatory for randomized batteries.
"""

from __future__ import annotations

import os


class ConfigError(ValueError):
    pass


def parse_config_text(text):
    """Parse key=value lines with [section] headers into nested dicts."""
    out = {}
    section = "run"
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            out.setdefault(section, {})
            continue
        if "=" not in line:
            raise ConfigError("line %d is not key = value: %r"
                              % (lineno, raw))
        key, val = line.split("=", 1)
        key = key.strip()
        val = val.strip()
        sect = out.setdefault(section, {})
        if key in sect:
            raise ConfigError("duplicate key '%s' in [%s]" % (key, section))
        sect[key] = val
    return out


def _convert(raw, kind):
    if kind is bool:
        low = raw.lower()
        if low in ("true", "1", "yes", "on"):
            return True
        if low in ("false", "0", "no", "off"):
            return False
        raise ConfigError("expected a boolean, got %r" % raw)
    try:
        return kind(raw)
    except ValueError:
        raise ConfigError("cannot parse %r as %s" % (raw, kind.__name__))


# (section, key) -> (type, default, must_be_positive)
COMMON_SCHEMA = {
    ("run", "seed"): (int, None, False),
    ("run", "threads"): (int, 1, True),
    ("run", "figures"): (bool, True, False),
    ("run", "out"): (str, None, False),
    ("grid", "s"): (int, 1, True),
    ("grid", "m"): (float, 1.0, False),
    ("grid", "n_per_axis"): (int, None, True),
    ("grid", "half_width"): (float, None, True),
    ("fock", "modes"): (int, 3, True),
    ("fock", "n_max"): (int, 4, True),
    ("fock", "energy"): (float, 3.0, True),
}


class ExperimentConfig:
    """Validated configuration for one named experiment."""

    def __init__(self, experiment, raw_sections, extra_schema,
                 randomized=True, raw_text=""):
        self.experiment = experiment
        self.raw_text = raw_text
        schema = dict(COMMON_SCHEMA)
        schema.update(extra_schema)
        known = {}
        for (section, key), (kind, default, positive) in schema.items():
            known[(section, key)] = (kind, default, positive)
        values = {}
        for section, entries in raw_sections.items():
            for key, raw in entries.items():
                if (section, key) not in known:
                    raise ConfigError("unknown key '%s' in section [%s]"
                                      % (key, section))
                kind, _, positive = known[(section, key)]
                val = _convert(raw, kind)
                if positive and isinstance(val, (int, float)) and val <= 0:
                    raise ConfigError("key '%s' must be positive" % key)
                values[(section, key)] = val
        for (section, key), (kind, default, positive) in known.items():
            values.setdefault((section, key), default)
        if randomized and values[("run", "seed")] is None:
            raise ConfigError("randomized experiment '%s' requires a seed"
                              % experiment)
        self.values = values

    def get(self, section, key):
        return self.values[(section, key)]

    def echo(self):
        """Stable textual echo of every resolved value."""
        lines = ["experiment = %s" % self.experiment]
        for (section, key) in sorted(self.values):
            lines.append("%s.%s = %r" % (section, key,
                                         self.values[(section, key)]))
        return "\n".join(lines)


def load_config(path, experiment, extra_schema, randomized=True):
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    sections = parse_config_text(text)
    return ExperimentConfig(experiment, sections, extra_schema,
                            randomized=randomized, raw_text=text)


def resolve_out_dir(cli_out, config):
    env = os.environ.get("FOCKSCOPE_OUT")
    if env:
        return env
    if cli_out:
        return cli_out
    cfg = config.get("run", "out")
    if cfg:
        return cfg
    raise ConfigError("no output directory: pass --out, set FOCKSCOPE_OUT "
                      "or the [run] out key")
