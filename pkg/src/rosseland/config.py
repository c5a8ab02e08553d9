"""Line-oriented problem configuration files.

Sections in square brackets, ``key = value`` entries, ``#`` comments.  The
parser tracks line numbers so every rejection points at the offending line,
rejects unknown keys outright, and applies ``--set section.key=value``
overrides after the file values.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field

from .presets import robin_sides
from .problem import COEFFICIENTS, ProblemSpec, as_point_fn, make_source, validate_problem


class ConfigError(ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


# allowed keys per section
_SCHEMA = {
    "domain": {"extent", "divisions"},
    "coefficients": {"k", "b", "m", "epsilon", "lambda"},
    "boundary": {"robin", "alpha", "u_b", "u_gas"},
    "source": {"s", "sigma"},
    "interval": {"T_min", "T_max", "T_star"},
    "solver": {"damping", "update_tol", "residual_tol", "max_steps",
               "cg_tol", "cg_max_iterations", "safety"},
    "mms": {"offset", "amplitude", "divisions", "oracle_resolution", "linear"},
    "sweep": {"eps", "resolve_factor"},
    "probe": {"n_starts", "lambda_ladder"},
    "gradient": {"eps", "margin", "resolve_factor"},
    "oracle1d": {"n_points", "fem_divisions"},
}

_REQUIRED = [("domain", "extent"), ("domain", "divisions"),
             ("coefficients", "k"), ("coefficients", "b"),
             ("coefficients", "m"), ("coefficients", "epsilon"),
             ("interval", "T_min"), ("interval", "T_max")]


@dataclass
class Settings:
    """Everything outside the ProblemSpec: discretization and driver knobs
    plus per-subcommand experiment parameters."""

    divisions: tuple = (16, 16)
    damping: float = 1.0
    update_tol: float = 1e-8
    residual_tol: float = 1e-8
    max_steps: int = 50
    cg_tol: float = 1e-10
    cg_max_iterations: int = None
    safety: float = 2.0
    t_star_auto: bool = False
    mms: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    probe: dict = field(default_factory=dict)
    gradient: dict = field(default_factory=dict)
    oracle1d: dict = field(default_factory=dict)

    def solver_kwargs(self) -> dict:
        return {"damping": self.damping, "update_tol": self.update_tol,
                "residual_tol": self.residual_tol, "max_steps": self.max_steps,
                "cg_tol": self.cg_tol, "cg_max_iterations": self.cg_max_iterations}


def _read_entries(text: str) -> dict:
    entries = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SCHEMA:
                raise ConfigError(f"unknown section [{section}]; sections are "
                                  f"{sorted(_SCHEMA)}", lineno)
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
        if section is None:
            raise ConfigError("entry before any [section] header", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _SCHEMA[section]:
            raise ConfigError(f"unknown key {key!r} in [{section}]; allowed keys "
                              f"are {sorted(_SCHEMA[section])}", lineno)
        if (section, key) in entries:
            raise ConfigError(f"duplicate key {section}.{key}", lineno)
        entries[(section, key)] = (value, lineno)
    return entries


def _apply_overrides(entries: dict, overrides) -> dict:
    for item in overrides or ():
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override must look like section.key=value, got {item!r}")
        target, value = item.split("=", 1)
        section, key = target.strip().split(".", 1)
        section, key = section.strip(), key.strip()
        if section not in _SCHEMA:
            raise ConfigError(f"override names unknown section [{section}]")
        if key not in _SCHEMA[section]:
            raise ConfigError(f"override names unknown key {key!r} in [{section}]; "
                              f"allowed keys are {sorted(_SCHEMA[section])}")
        entries[(section, key)] = (value.strip(), None)
    return entries


class _Entries:
    def __init__(self, entries):
        self.entries = entries

    def get(self, section, key, parser, default=None, required=False):
        if (section, key) not in self.entries:
            if required:
                raise ConfigError(f"missing required key {section}.{key}")
            return default
        value, line = self.entries[(section, key)]
        try:
            return parser(value)
        except ConfigError:
            raise
        except Exception as exc:
            raise ConfigError(f"bad value for {section}.{key}: {exc}", line)


def _float(v):
    return float(v)


def _int(v):
    return int(v)


def _floats(v):
    out = tuple(float(t) for t in v.split())
    if not out:
        raise ValueError("empty list")
    return out


def _ints(v):
    return tuple(int(t) for t in v.split())


def _sides(v):
    return robin_sides(*v.split())


_COEFF_RE = re.compile(r"^([A-Za-z_]\w*)\s*(?:\((.*)\))?$")


def _coefficient(v):
    match = _COEFF_RE.match(v.strip())
    if not match:
        raise ValueError(f"expected name(args), got {v!r}")
    name, args = match.group(1), match.group(2)
    if name not in COEFFICIENTS:
        raise ValueError(f"unknown coefficient {name!r}; registered coefficients "
                         f"are {sorted(COEFFICIENTS)}")
    params = [float(a) for a in args.split(",")] if args and args.strip() else []
    return COEFFICIENTS[name](*params)


def config_hash(text: str, overrides, seed: int) -> str:
    digest = hashlib.sha256()
    digest.update(text.encode())
    for item in sorted(overrides or ()):
        digest.update(item.encode())
    digest.update(str(seed).encode())
    return digest.hexdigest()[:16]


def parse_config(path, overrides=()) -> tuple:
    """Parse and validate a configuration file into (ProblemSpec, Settings).

    Every problem invariant is checked here, so a returned spec is ready to
    solve; violations raise ConfigError naming the failing key.
    """
    with open(path) as fh:
        text = fh.read()
    return parse_config_text(text, overrides)


def parse_config_text(text: str, overrides=()) -> tuple:
    entries = _Entries(_apply_overrides(_read_entries(text), overrides))
    g = entries.get

    extent_flat = g("domain", "extent", _floats, required=True)
    if len(extent_flat) not in (2, 4) or len(extent_flat) % 2:
        raise ConfigError("domain.extent needs 'lo hi' per axis (2 or 4 numbers)")
    extent = tuple((extent_flat[i], extent_flat[i + 1])
                   for i in range(0, len(extent_flat), 2))
    for lo, hi in extent:
        if not hi > lo:
            raise ConfigError(f"domain.extent axis ({lo}, {hi}) is degenerate")
    divisions = g("domain", "divisions", _ints, required=True)
    if len(divisions) != len(extent) or any(d < 1 for d in divisions):
        raise ConfigError("domain.divisions needs one positive integer per axis")

    k = g("coefficients", "k", _coefficient, required=True)
    b = g("coefficients", "b", _coefficient, required=True)
    m = g("coefficients", "m", _float, required=True)
    epsilon = g("coefficients", "epsilon", _float, required=True)
    lam = g("coefficients", "lambda", _float, default=0.0)

    t_min = g("interval", "T_min", _float, required=True)
    t_max = g("interval", "T_max", _float, required=True)
    t_star_raw = g("interval", "T_star", str, default=None)
    t_star_auto = t_star_raw is not None and t_star_raw.strip() == "auto"
    if t_star_raw is None or t_star_auto:
        t_star = t_max
    else:
        try:
            t_star = float(t_star_raw)
        except ValueError:
            raise ConfigError("interval.T_star must be a number or 'auto'")
    if not 0 < t_min <= t_max <= t_star:
        raise ConfigError(
            "interval invariant violated at keys interval.T_min/T_max/T_star: "
            f"need 0 < T_min <= T_max <= T_star, got ({t_min}, {t_max}, {t_star})")

    robin = g("boundary", "robin", _sides, default=robin_sides("none"))
    alpha = g("boundary", "alpha", _float, default=0.0)
    u_b = g("boundary", "u_b", _float, default=t_min)
    u_gas = g("boundary", "u_gas", _float, default=t_min)
    if alpha < 0:
        raise ConfigError("boundary.alpha must be >= 0")

    s = g("source", "s", _float, default=0.0)
    sigma = g("source", "sigma", _float, default=0.0)
    if sigma < 0:
        raise ConfigError("source.sigma must be >= 0")

    try:
        f, f_bounds = make_source(s, sigma, (t_min, t_star))
        spec = ProblemSpec(
            extent=extent, k=k, b=b, m=m, epsilon=epsilon,
            f=f, f_bounds=f_bounds, alpha=alpha,
            u_gas=as_point_fn(u_gas), u_b=as_point_fn(u_b),
            robin_where=lambda p, _r=robin, _e=extent: _r(p, _e),
            lam=lam, T_min=t_min, T_max=t_max, T_star=t_star)
        validate_problem(spec)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc))

    settings = Settings(
        divisions=divisions,
        damping=g("solver", "damping", _float, default=1.0),
        update_tol=g("solver", "update_tol", _float, default=1e-8),
        residual_tol=g("solver", "residual_tol", _float, default=1e-8),
        max_steps=g("solver", "max_steps", _int, default=50),
        cg_tol=g("solver", "cg_tol", _float, default=1e-10),
        cg_max_iterations=g("solver", "cg_max_iterations", _int, default=None),
        safety=g("solver", "safety", _float, default=2.0),
        t_star_auto=t_star_auto,
        mms={
            "offset": g("mms", "offset", _float, default=1.5),
            "amplitude": g("mms", "amplitude", _float, default=0.25),
            "divisions": g("mms", "divisions", _ints, default=(16, 32, 64)),
            "oracle_resolution": g("mms", "oracle_resolution", _int, default=2048),
            "linear": bool(g("mms", "linear", _int, default=0)),
        },
        sweep={
            "eps": g("sweep", "eps", _floats, default=(0.25, 0.125, 0.0625, 0.03125)),
            "resolve_factor": g("sweep", "resolve_factor", _int, default=4),
        },
        probe={
            "n_starts": g("probe", "n_starts", _int, default=8),
            "lambda_ladder": g("probe", "lambda_ladder", _floats,
                               default=(0.0, 1.0, 10.0, 100.0)),
        },
        gradient={
            "eps": g("gradient", "eps", _floats, default=(0.25, 0.125, 0.0625)),
            "margin": g("gradient", "margin", _float, default=0.25),
            "resolve_factor": g("gradient", "resolve_factor", _int, default=4),
        },
        oracle1d={
            "n_points": g("oracle1d", "n_points", _int, default=8192),
            "fem_divisions": g("oracle1d", "fem_divisions", _int, default=256),
        },
    )
    if not 0 < settings.damping <= 1:
        raise ConfigError("solver.damping must be in (0, 1]")
    return spec, settings
