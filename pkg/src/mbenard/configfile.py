"""Plain-text run configuration.

Grammar: one ``key = value`` pair per line; ``#`` starts a comment; blank
lines are ignored.  Unknown keys, repeated keys and unparsable values are
configuration errors.  Example::

    dim = 2
    N = 64
    R = 21
    s = 3
    dt = 1e-3          # fixed step; omit for CFL control
    t_end = 1
    init = taylor_green
    b_amplitude = 0.5
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .dynamics import CflDt, FixedDt, SimConfig, alias_free
from .errors import ConfigurationError
from .integrate import InitialSpec
from .spectral import Grid


def _floats(v: str) -> tuple:
    return tuple(float(x) for x in v.split(","))


def _opt_int(v: str):
    return None if v.lower() == "none" else int(v)


def _opt_float(v: str):
    return None if v.lower() == "none" else float(v)


# key -> (parser, default); None default means "not set"
SCHEMA = {
    "dim": (int, 2),
    "N": (int, 64),
    "R": (float, None),
    "s": (float, 3.0),
    "buoyancy_axis": (_opt_int, None),
    "model": (str, "benard"),
    "dt": (_opt_float, None),
    "cfl": (float, 0.5),
    "dt_max": (float, 1e-2),
    "t_end": (float, 1.0),
    "workers": (int, 1),
    "init": (str, "taylor_green"),
    "theta_amplitude": (float, 0.0),
    "b_amplitude": (float, 0.0),
    "spectrum_exponent": (float, 3.0),
    "norm_targets": (_floats, (1.0, 0.0, 0.0)),
    "seed": (int, 0),
    "band": (_opt_float, None),
    "init_path": (str, None),
    "diag_every": (int, 1),
    "checkpoint_every": (int, 0),
    "norm_flavor": (str, "besov"),
    "out_dir": (str, "out"),
}


@dataclass(frozen=True)
class RunSettings:
    sim: SimConfig
    init: InitialSpec
    diag_every: int
    checkpoint_every: int
    norm_flavor: str
    out_dir: str

    def to_dict(self) -> dict:
        return {
            "config": self.sim.to_dict(),
            "init": self.init.to_dict(),
            "diag_every": self.diag_every,
            "checkpoint_every": self.checkpoint_every,
            "norm_flavor": self.norm_flavor,
            "out_dir": self.out_dir,
        }


def parse_text(text: str, source: str = "<config>") -> dict:
    """Parse the key-value document into typed values (no defaults filled in)."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, val = (x.strip() for x in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigurationError(f"{source}:{lineno}: unknown key {key!r}")
        if key in out:
            raise ConfigurationError(f"{source}:{lineno}: key {key!r} given twice")
        try:
            out[key] = SCHEMA[key][0](val)
        except ValueError as exc:
            raise ConfigurationError(f"{source}:{lineno}: bad value for {key!r}: {val!r}") from exc
    return out


def load(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    return parse_text(text, str(path))


def default_radius(n: int) -> float:
    """Largest integer radius that is dealias-safe on an ``n``-point grid."""
    R = n // 3
    while R > 1 and not alias_free(n, R):
        R -= 1
    return float(R)


def resolve(values: dict, **overrides) -> RunSettings:
    """Fill defaults, apply non-``None`` overrides and build the typed settings."""
    v = {k: d for k, (_, d) in SCHEMA.items()}
    v.update(values)
    v.update({k: x for k, x in overrides.items() if x is not None})
    unknown = set(v) - set(SCHEMA)
    if unknown:
        raise ConfigurationError(f"unknown keys {sorted(unknown)}")
    grid = Grid(v["dim"], v["N"])
    R = v["R"] if v["R"] is not None else default_radius(v["N"])
    policy = FixedDt(v["dt"]) if v["dt"] is not None else CflDt(v["cfl"], v["dt_max"])
    sim = SimConfig(grid, R, v["s"], v["buoyancy_axis"], dt_policy=policy, t_end=v["t_end"],
                    workers=v["workers"], model=v["model"])
    init = InitialSpec(
        kind=v["init"],
        theta_amplitude=v["theta_amplitude"],
        b_amplitude=v["b_amplitude"],
        spectrum_exponent=v["spectrum_exponent"],
        norm_targets=v["norm_targets"],
        seed=v["seed"],
        band=v["band"],
        path=v["init_path"],
    )
    return RunSettings(sim, init, v["diag_every"], v["checkpoint_every"], v["norm_flavor"], v["out_dir"])
