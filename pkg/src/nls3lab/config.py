"""Line-oriented ``key = value`` run configurations.

Blank lines and ``#`` comments are ignored. Rationals are written ``p/q`` and kept
exact. Every problem in a file is collected before a :class:`ConfigError` is raised.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable

from .errors import ConfigError

COMMANDS = ("simulate", "resonance-scan", "normal-form", "measure", "smoothing", "ramer", "verify-all")


def _int(raw: str) -> int:
    return int(raw)


def _real(raw: str) -> float:
    if "/" in raw:
        return float(Fraction(raw))
    return float(raw)


def _rational(raw: str) -> Fraction | float:
    if "/" in raw:
        return Fraction(raw.replace(" ", ""))
    return float(raw)


def _str(raw: str) -> str:
    if not raw:
        raise ValueError("empty string")
    return raw


def _int_list(raw: str) -> tuple[int, ...]:
    vals = tuple(int(x) for x in raw.replace(" ", "").split(",") if x)
    if not vals:
        raise ValueError("empty list")
    return vals


def _str_list(raw: str) -> tuple[str, ...]:
    vals = tuple(x.strip() for x in raw.split(",") if x.strip())
    if not vals:
        raise ValueError("empty list")
    return vals


@dataclass(frozen=True)
class Key:
    parse: Callable[[str], Any]
    kind: str
    default: Any = None
    check: Callable[[Any], bool] | None = None
    rule: str = ""
    choices: tuple | None = None


def _pos(x):
    return x > 0


def _nonneg(x):
    return x >= 0


def _all_pos(xs):
    return all(x > 0 for x in xs)


COMMON = {
    "command": Key(_str, "string", None, choices=COMMANDS),
    "output": Key(_str, "string", "out"),
    "seed": Key(_int, "integer", 0, lambda x: 0 <= x < 2 ** 64, "must be a 64-bit unsigned integer"),
    "beta": Key(_rational, "rational", Fraction(21, 10)),
    "s": Key(_real, "real", 0.8, lambda x: x > 0.5, "must exceed 1/2"),
    "sigma": Key(_real, "real", None),
    "epsilon": Key(_real, "real", 0.05, _pos, "must be positive"),
}

_INIT = {
    "init": Key(_str, "string", "random", choices=("random", "analytic", "mu", "single", "file")),
    "init_file": Key(_str, "string", None),
    "decay": Key(_real, "real", 1.0, _nonneg, "must be nonnegative"),
    "norm": Key(_real, "real", 1.0, _pos, "must be positive"),
    "mode": Key(_int, "integer", 1),
    "amplitude": Key(_real, "real", 1.0),
}

SCHEMAS: dict[str, dict[str, Key]] = {
    "simulate": {
        "N": Key(_int, "integer", 16, _pos, "must be positive"),
        "kind": Key(_str, "string", "original", choices=("original", "renormalized", "v_form", "w_form")),
        "dt": Key(_real, "real", 1e-3, _pos, "must be positive"),
        "t_final": Key(_real, "real", 1.0, _nonneg, "must be nonnegative"),
        "snapshot_stride": Key(_int, "integer", 100, _pos, "must be positive"),
        "mass_tol": Key(_real, "real", 1e-8, _pos, "must be positive"),
        "energy_tol": Key(_real, "real", 1e-6, _pos, "must be positive"),
        **_INIT,
    },
    "resonance-scan": {
        "N": Key(_int, "integer", 16, _pos, "must be positive"),
        "c": Key(_real, "real", 0.125, _pos, "must be positive"),
    },
    "normal-form": {
        "N": Key(_int, "integer", 8, _pos, "must be positive"),
        "t": Key(_real, "real", 0.1, _nonneg, "must be nonnegative"),
        "dt": Key(_real, "real", 5e-4, _pos, "must be positive"),
        "side": Key(_str, "string", "both", choices=("v", "w", "both")),
        "tol": Key(_real, "real", 1e-6, _pos, "must be positive"),
        **_INIT,
    },
    "measure": {
        "N": Key(_int, "integer", 32, _pos, "must be positive"),
        "count": Key(_int, "integer", 10000, _pos, "must be positive"),
        "t": Key(_real, "real", 1.0),
        "alpha": Key(_real, "real", 0.01, lambda x: 0 < x < 1, "must lie in (0, 1)"),
        "maps": Key(_str_list, "string list", ("S(t)", "G_t", "J_t", "composition")),
        "calibration_runs": Key(_int, "integer", 10, _nonneg, "must be nonnegative"),
    },
    "smoothing": {
        "j": Key(_int, "integer", 1, lambda x: x in (0, 1), "must be 0 or 1"),
        "t": Key(_real, "real", 0.5, _nonneg, "must be nonnegative"),
        "N_list": Key(_int_list, "integer list", (16, 32), _all_pos, "entries must be positive"),
        "count": Key(_int, "integer", 50, _pos, "must be positive"),
        "nodes": Key(_int, "integer", 200, _pos, "must be positive"),
        "slack": Key(_real, "real", 0.2, _nonneg, "must be nonnegative"),
    },
    "ramer": {
        "j": Key(_int, "integer", 1, lambda x: x in (0, 1), "must be 0 or 1"),
        "t": Key(_real, "real", 0.2, _nonneg, "must be nonnegative"),
        "N_list": Key(_int_list, "integer list", (8, 16), _all_pos, "entries must be positive"),
        "count": Key(_int, "integer", 5, _pos, "must be positive"),
        "fd_step": Key(_real, "real", 1e-5, _pos, "must be positive"),
        "slack": Key(_real, "real", 0.2, _nonneg, "must be nonnegative"),
        "min_sv": Key(_real, "real", 0.5, _nonneg, "must be nonnegative"),
    },
    "verify-all": {
        "N": Key(_int, "integer", 8, _pos, "must be positive"),
        "count": Key(_int, "integer", 3, _pos, "must be positive"),
    },
}


@dataclass(frozen=True)
class RunConfig:
    command: str
    values: dict[str, Any] = field(default_factory=dict)
    output: Path = Path("out")
    seed: int = 0

    def __getitem__(self, key: str):
        return self.values[key]

    def get(self, key: str, default=None):
        return self.values.get(key, default)

    def describe(self) -> dict[str, Any]:
        """JSON-friendly view of every resolved key (rationals as ``p/q`` strings)."""
        out = {}
        for k, v in sorted(self.values.items()):
            if isinstance(v, Fraction):
                v = f"{v.numerator}/{v.denominator}"
            elif isinstance(v, tuple):
                v = list(v)
            out[k] = v
        return out


def _tokenize(text: str) -> tuple[dict[str, tuple[str, int]], list[str]]:
    entries: dict[str, tuple[str, int]] = {}
    problems: list[str] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            problems.append(f"line {lineno}: expected 'key = value', got {body!r}")
            continue
        key, raw = (x.strip() for x in body.split("=", 1))
        if not key:
            problems.append(f"line {lineno}: missing key")
            continue
        if key in entries:
            problems.append(f"line {lineno}: duplicate key {key!r} (first set on line {entries[key][1]})")
            continue
        entries[key] = (raw, lineno)
    return entries, problems


def parse_config(text: str, overrides: dict[str, str] | None = None) -> RunConfig:
    """Parse and validate a configuration; raises ConfigError listing every problem."""
    entries, problems = _tokenize(text)
    for k, raw in (overrides or {}).items():
        entries[k] = (raw, 0)
    command = entries.get("command", (None, 0))[0]
    if command is None:
        problems.append("missing required key 'command'")
        schema = {k: v for sch in SCHEMAS.values() for k, v in sch.items()}
    elif command not in SCHEMAS:
        problems.append(f"line {entries['command'][1]}: unknown command {command!r}; expected one of {list(COMMANDS)}")
        schema = {k: v for sch in SCHEMAS.values() for k, v in sch.items()}
    else:
        schema = SCHEMAS[command]
    schema = {**COMMON, **schema}
    values: dict[str, Any] = {}
    for key, (raw, lineno) in entries.items():
        where = f"line {lineno}" if lineno else "override"
        spec = schema.get(key)
        if spec is None:
            problems.append(f"{where}: unknown key {key!r}")
            continue
        try:
            val = spec.parse(raw)
        except (ValueError, ZeroDivisionError):
            problems.append(f"{where}: {key} expects {spec.kind}, got {raw!r}")
            continue
        if spec.choices is not None and val not in spec.choices:
            problems.append(f"{where}: {key} must be one of {list(spec.choices)}, got {raw!r}")
            continue
        if spec.check is not None and not spec.check(val):
            problems.append(f"{where}: {key} {spec.rule} (got {raw!r})")
            continue
        values[key] = val
    if values.get("init") == "file" and "init_file" not in values:
        problems.append("init = file requires init_file")
    if problems:
        raise ConfigError(problems)
    for key, spec in schema.items():
        if key not in values and spec.default is not None:
            values[key] = spec.default
    values.pop("command", None)
    return RunConfig(command, values, Path(values.pop("output")), values.pop("seed"))


def load_config(path, overrides: dict[str, str] | None = None) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError([f"cannot read config file {path}: {exc.strerror or exc}"]) from exc
    except UnicodeDecodeError as exc:
        raise ConfigError([f"config file {path} is not UTF-8"]) from exc
    return parse_config(text, overrides)
