"""
Run configuration files.

The format is sections of ``key = value`` lines::

    seed = 7

    [scenario]
    name = "perturbed_kasner"
    p = [0.6666666666666666, 0.6666666666666666, -0.3333333333333333]

    [grid]
    n = [64, 64, 32]
    h = [0.03225806451612903, 0.03225806451612903, 0.03225806451612903]
    periodic = [true, true, false]

Values are JSON literals. ``#`` starts a comment. Every problem found is
reported with its line number, not just the first one.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

SCENARIOS = ("minkowski", "kasner", "perturbed_kasner", "mms", "random_frame")
BOUNDARIES = ("none", "geodesic")

_SCHEMA = {
    "": {"seed": int},
    "scenario": {"name": str, "p": list, "t0": float, "amplitude": float, "profile": str,
                 "recipe": str, "recipe_amplitude": float, "modes": int},
    "grid": {"n": list, "h": list, "periodic": list},
    "time": {"cfl_factor": float, "t_end": float, "output_interval": float},
    "boundary": {"type": str},
    "fd": {"order": int, "dissipation": float},
    "output": {"directory": str, "snapshots": bool, "check_torsion": bool},
}


@dataclass
class ConfigIssue:
    line: int
    message: str

    def __str__(self):
        return f"line {self.line}: {self.message}" if self.line else self.message


class ConfigError(ValueError):
    def __init__(self, issues: list[ConfigIssue]):
        self.issues = issues
        super().__init__("\n".join(str(i) for i in issues))


@dataclass
class RunConfig:
    scenario: str = "kasner"
    p: tuple[float, float, float] = (2 / 3, 2 / 3, -1 / 3)
    t0: float = 1.0
    amplitude: float = 0.01
    profile: str = "sin8"
    recipe: str = "rotated_kasner"
    recipe_amplitude: float = 0.05
    modes: int = 1
    n: tuple[int, int, int] = (32, 32, 32)
    h: tuple[float, float, float] = (1 / 32, 1 / 32, 1 / 32)
    periodic: tuple[bool, bool, bool] = (True, True, True)
    cfl_factor: float = 0.25
    t_end: float = 2.0
    output_interval: float = 0.25
    boundary: str = "none"
    fd_order: int = 4
    dissipation: float = 0.0
    directory: str = "run"
    snapshots: bool = True
    check_torsion: bool = False
    seed: int = 0
    source_path: str | None = field(default=None, compare=False)

    def to_text(self) -> str:
        """Serialize in the same format; parsing the result gives an equal config."""
        d = asdict(self)
        sec = {
            "scenario": {"name": d["scenario"], "p": list(d["p"]), "t0": d["t0"],
                         "amplitude": d["amplitude"], "profile": d["profile"],
                         "recipe": d["recipe"], "recipe_amplitude": d["recipe_amplitude"],
                         "modes": d["modes"]},
            "grid": {"n": list(d["n"]), "h": list(d["h"]), "periodic": list(d["periodic"])},
            "time": {"cfl_factor": d["cfl_factor"], "t_end": d["t_end"],
                     "output_interval": d["output_interval"]},
            "boundary": {"type": d["boundary"]},
            "fd": {"order": d["fd_order"], "dissipation": d["dissipation"]},
            "output": {"directory": d["directory"], "snapshots": d["snapshots"],
                       "check_torsion": d["check_torsion"]},
        }
        lines = [f"seed = {json.dumps(d['seed'])}", ""]
        for name, items in sec.items():
            lines.append(f"[{name}]")
            lines += [f"{k} = {json.dumps(v)}" for k, v in items.items()]
            lines.append("")
        return "\n".join(lines)


def _coerce(kind, value):
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if kind is int and isinstance(value, bool):
        raise TypeError
    if not isinstance(value, kind):
        raise TypeError
    return value


def parse_config(text: str, source: str | None = None) -> RunConfig:
    """Parse and validate configuration text; raises :class:`ConfigError` listing all issues."""
    issues: list[ConfigIssue] = []
    values: dict[tuple[str, str], tuple[object, int]] = {}
    section = ""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                issues.append(ConfigIssue(lineno, f"malformed section header '{line}'"))
                continue
            section = line[1:-1].strip()
            if section not in _SCHEMA:
                issues.append(ConfigIssue(lineno, f"unknown section [{section}]"))
            continue
        if "=" not in line:
            issues.append(ConfigIssue(lineno, f"expected 'key = value', got '{line}'"))
            continue
        key, val = (x.strip() for x in line.split("=", 1))
        if section not in _SCHEMA:
            continue
        if key not in _SCHEMA[section]:
            where = f"[{section}]" if section else "top level"
            issues.append(ConfigIssue(lineno, f"unknown key '{key}' in {where}"))
            continue
        try:
            parsed = json.loads(val)
        except json.JSONDecodeError:
            issues.append(ConfigIssue(lineno, f"cannot parse value for '{key}': {val}"))
            continue
        kind = _SCHEMA[section][key]
        try:
            parsed = _coerce(kind, parsed)
        except TypeError:
            issues.append(ConfigIssue(lineno, f"'{key}' must be of type {kind.__name__}"))
            continue
        if (section, key) in values:
            issues.append(ConfigIssue(lineno, f"duplicate key '{key}'"))
        values[(section, key)] = (parsed, lineno)

    cfg = RunConfig(source_path=source)
    mapping = {
        ("", "seed"): "seed", ("scenario", "name"): "scenario", ("scenario", "p"): "p",
        ("scenario", "t0"): "t0", ("scenario", "amplitude"): "amplitude",
        ("scenario", "profile"): "profile", ("scenario", "recipe"): "recipe",
        ("scenario", "recipe_amplitude"): "recipe_amplitude", ("scenario", "modes"): "modes",
        ("grid", "n"): "n", ("grid", "h"): "h", ("grid", "periodic"): "periodic",
        ("time", "cfl_factor"): "cfl_factor", ("time", "t_end"): "t_end",
        ("time", "output_interval"): "output_interval", ("boundary", "type"): "boundary",
        ("fd", "order"): "fd_order", ("fd", "dissipation"): "dissipation",
        ("output", "directory"): "directory", ("output", "snapshots"): "snapshots",
        ("output", "check_torsion"): "check_torsion",
    }
    lines = {}
    for k, attr in mapping.items():
        if k in values:
            v, ln = values[k]
            if isinstance(v, list):
                v = tuple(v)
            setattr(cfg, attr, v)
            lines[attr] = ln
    issues += _validate(cfg, lines)
    if issues:
        raise ConfigError(sorted(issues, key=lambda i: i.line))
    return cfg


def _strip_comment(raw: str) -> str:
    out, quoted = [], False
    for ch in raw:
        if ch == '"':
            quoted = not quoted
        if ch == "#" and not quoted:
            break
        out.append(ch)
    return "".join(out).strip()


def _validate(cfg: RunConfig, lines: dict[str, int]) -> list[ConfigIssue]:
    out = []

    def bad(attr, msg):
        out.append(ConfigIssue(lines.get(attr, 0), msg))

    if cfg.scenario not in SCENARIOS:
        bad("scenario", f"unknown scenario '{cfg.scenario}', expected one of {list(SCENARIOS)}")
    if len(cfg.p) != 3 or not all(isinstance(x, (int, float)) for x in cfg.p):
        bad("p", "p needs three numbers")
    elif cfg.scenario in ("kasner", "perturbed_kasner"):
        s1, s2 = sum(cfg.p), sum(x * x for x in cfg.p)
        if abs(s1 - 1) > 1e-12 or abs(s2 - 1) > 1e-12:
            bad("p", f"Kasner exponents need sum p = sum p^2 = 1 (got {s1:.15g}, {s2:.15g})")
    if cfg.t0 <= 0 and cfg.scenario in ("kasner", "perturbed_kasner", "mms"):
        bad("t0", "t0 must be positive")
    grid_ok = True
    if len(cfg.n) != 3 or not all(isinstance(x, int) and not isinstance(x, bool) and x > 0 for x in cfg.n):
        bad("n", "n needs three positive integers")
        grid_ok = False
    if len(cfg.h) != 3 or not all(isinstance(x, (int, float)) and x > 0 for x in cfg.h):
        bad("h", "h needs three positive spacings")
    if len(cfg.periodic) != 3 or not all(isinstance(x, bool) for x in cfg.periodic):
        bad("periodic", "periodic needs three booleans")
        grid_ok = False
    if cfg.fd_order not in (2, 4):
        bad("fd_order", "fd order must be 2 or 4")
    elif grid_ok:
        for a in range(3):
            need = cfg.fd_order + 1 if cfg.periodic[a] else cfg.fd_order + 2
            if cfg.n[a] < need:
                bad("n", f"axis {a + 1} needs at least {need} points")
    if not 0 < cfg.cfl_factor <= 1:
        bad("cfl_factor", "cfl_factor must lie in (0, 1]")
    if cfg.t_end <= cfg.t0 and cfg.scenario != "minkowski":
        bad("t_end", "t_end must exceed t0")
    if cfg.output_interval <= 0:
        bad("output_interval", "output_interval must be positive")
    if cfg.dissipation < 0:
        bad("dissipation", "dissipation must be non-negative")
    if cfg.boundary not in BOUNDARIES:
        bad("boundary", f"boundary type must be one of {list(BOUNDARIES)}")
    elif grid_ok:
        if cfg.boundary == "geodesic" and all(cfg.periodic):
            bad("boundary", "geodesic boundary needs a bounded third axis, but the grid is fully periodic")
        elif cfg.boundary == "geodesic" and (cfg.periodic[2] or not all(cfg.periodic[:2])):
            bad("boundary", "geodesic boundary needs periodic first two axes and a bounded third axis")
        if cfg.boundary == "none" and not all(cfg.periodic):
            bad("periodic", "a bounded axis needs a boundary type other than 'none'")
    if cfg.scenario == "perturbed_kasner" and grid_ok and cfg.periodic[2]:
        bad("scenario", "perturbed_kasner needs a bounded third axis")
    if cfg.scenario in ("mms", "random_frame") and grid_ok and not all(cfg.periodic):
        bad("scenario", f"{cfg.scenario} needs a fully periodic grid")
    if cfg.scenario == "perturbed_kasner" and cfg.profile not in ("sin8", "sin6", "bump"):
        bad("profile", f"unknown profile '{cfg.profile}'")
    return out


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError([ConfigIssue(0, f"cannot read {path}: {exc}")]) from None
    return parse_config(text, str(path))
