"""Initial data, RK4 stepping, CFL control and the run loop."""

from __future__ import annotations

import hashlib
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import scipy.fft as sfft

from . import spectral as sp
from .container import read_container, write_container
from .diagnostics import CSV_COLUMNS, DiagRecord, Monitor, format_row
from .dynamics import SimConfig, State, Tendency, check_state, rhs
from .errors import ConfigurationError, ContractViolation, InstabilityError, UsageError
from .spectral import Grid, SpectralScalar, SpectralVector

log = logging.getLogger(__name__)

CFL_EPS = 1e-12
BLOWUP_FACTOR = 1e6


@dataclass(frozen=True)
class InitialSpec:
    """How to build initial data.

    ``taylor_green``: the Taylor-Green vortex for ``u`` plus seeded random
    band-limited ``theta`` and ``b`` with L2 norms ``theta_amplitude`` and
    ``b_amplitude``.  ``random_band``: seeded fields with coefficient magnitude
    ``|k|^-spectrum_exponent`` on ``0 < |k| <= band``, rescaled so the H^s norms
    of ``(u, theta, b)`` equal ``norm_targets``.  ``from_checkpoint``: read ``path``.
    """

    kind: str = "taylor_green"
    theta_amplitude: float = 0.0
    b_amplitude: float = 0.0
    spectrum_exponent: float = 3.0
    norm_targets: tuple = (1.0, 0.0, 0.0)
    seed: int = 0
    band: float | None = None
    path: str | None = None

    def __post_init__(self):
        if self.kind not in ("taylor_green", "random_band", "from_checkpoint"):
            raise ConfigurationError(f"unknown initial data kind {self.kind!r}")
        if self.kind == "from_checkpoint" and not self.path:
            raise ConfigurationError("from_checkpoint needs a path")
        object.__setattr__(self, "norm_targets", tuple(float(x) for x in self.norm_targets))
        if len(self.norm_targets) != 3 or min(self.norm_targets) < 0:
            raise ConfigurationError("norm_targets must be three non-negative numbers (u, theta, b)")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["norm_targets"] = list(self.norm_targets)
        return d


# ---------------------------------------------------------------------------
# initial data

def _noise(grid: Grid, rng: np.random.Generator, components: int) -> np.ndarray:
    x = rng.standard_normal((components,) + grid.shape)
    return sp._fft(x, tuple(range(1, grid.dim + 1)))


def _shape_spectrum(c: np.ndarray, grid: Grid, a: float, band: float) -> np.ndarray:
    km = grid.kmag
    amp = np.where((km > 0) & (km <= band) & ~grid.nyquist_mask, np.power(km, -a, where=km > 0, out=np.zeros_like(km)), 0.0)
    # unit-modulus phases from the noise keep the prescribed |k|^-a magnitude
    mod = np.abs(c)
    phase = np.divide(c, mod, out=np.zeros_like(c), where=mod > 0)
    return amp * phase


def random_band_scalar(grid: Grid, a: float, band: float, rng: np.random.Generator) -> SpectralScalar:
    """Mean-zero real scalar with coefficient magnitude ``|k|^-a`` on ``0 < |k| <= band``."""
    return SpectralScalar(grid, _shape_spectrum(_noise(grid, rng, 1)[0], grid, a, band))


def random_band_vector(grid: Grid, a: float, band: float, rng: np.random.Generator) -> SpectralVector:
    """Mean-zero solenoidal vector field with spectrum ``|k|^-a`` before projection."""
    c = _shape_spectrum(_noise(grid, rng, grid.dim), grid, a, band)
    return sp.leray_project(SpectralVector(grid, c))


def _rescale(f, target: float, s: float, what: str):
    if target == 0.0:
        return 0.0 * f
    nrm = sp.hs_norm(f, s)
    if nrm == 0.0:
        raise ConfigurationError(f"cannot reach norm target {target} for {what}: spectrum is empty")
    return (target / nrm) * f


def _rescale_l2(f, target: float, what: str):
    if target == 0.0:
        return 0.0 * f
    nrm = sp.l2_norm(f)
    if nrm == 0.0:
        raise ConfigurationError(f"cannot reach amplitude {target} for {what}: spectrum is empty")
    return (target / nrm) * f


def taylor_green_velocity(grid: Grid) -> SpectralVector:
    x = grid.coords()
    if grid.dim == 2:
        comps = [np.sin(x[0]) * np.cos(x[1]), -np.cos(x[0]) * np.sin(x[1])]
    else:
        comps = [
            np.sin(x[0]) * np.cos(x[1]) * np.cos(x[2]),
            -np.cos(x[0]) * np.sin(x[1]) * np.cos(x[2]),
            np.zeros(grid.shape),
        ]
    return sp.forward_vector(np.array(comps), grid, solenoidal=True)


def _raw_fields(spec: InitialSpec, grid: Grid, band: float):
    rng = np.random.default_rng(spec.seed)
    a = spec.spectrum_exponent
    if spec.kind == "taylor_green":
        u = taylor_green_velocity(grid)
    else:
        u = random_band_vector(grid, a, band, rng)
    th = random_band_scalar(grid, a, band, rng)
    b = random_band_vector(grid, a, band, rng)
    return u, th, b


def _scaled(spec: InitialSpec, u, th, b, s: float):
    if spec.kind == "taylor_green":
        return u, _rescale_l2(th, spec.theta_amplitude, "theta"), _rescale_l2(b, spec.b_amplitude, "b")
    tu, tt, tb = spec.norm_targets
    return _rescale(u, tu, s, "u"), _rescale(th, tt, s, "theta"), _rescale(b, tb, s, "b")


def _assemble(grid: Grid, u, th, b, model: str) -> State:
    if model == "mhd":
        th = SpectralScalar.zeros(grid)
    return State(
        SpectralVector(grid, u.coeffs, solenoidal=True),
        th,
        SpectralVector(grid, b.coeffs, solenoidal=True),
        0.0,
    )


def make_initial(spec: InitialSpec, cfg: SimConfig) -> State:
    """Initial state ``(S_R u0, S_R theta0, S_R b0)`` with Leray-projected vectors.

    Amplitudes and norm targets apply to the truncated fields.
    """
    grid = cfg.grid
    if spec.kind == "from_checkpoint":
        state, _ = load_checkpoint(spec.path, expect_grid=grid)
        return state
    R = cfg.R
    band = R if spec.band is None else spec.band
    u, th, b = (_trunc(x, R) for x in _raw_fields(spec, grid, band))
    return _assemble(grid, *_scaled(spec, u, th, b, cfg.s), cfg.model)


def shared_initial(spec: InitialSpec, cfg: SimConfig) -> State:
    """Untruncated initial data on ``cfg.grid``, scaled before any truncation.

    The band defaults to the whole alias-free lattice ``|k| <= N/3``.  Feeding
    ``truncate_state(shared, R)`` to runs at several radii gives every member
    the same ``u0`` before truncation.
    """
    if spec.kind == "from_checkpoint":
        raise ConfigurationError("shared initial data cannot come from a checkpoint")
    grid = cfg.grid
    band = grid.n / 3 if spec.band is None else spec.band
    u, th, b = (_trunc(x, band) for x in _raw_fields(spec, grid, band))
    return _assemble(grid, *_scaled(spec, u, th, b, cfg.s), cfg.model)


def truncate_state(state: State, R: float) -> State:
    return State(_trunc(state.u, R), sp.truncate(state.theta, R), _trunc(state.b, R), state.t)


def _trunc(f, R: float):
    if isinstance(f, SpectralVector):
        return SpectralVector(f.grid, sp.leray_project(sp.truncate(f, R)).coeffs, solenoidal=True)
    return sp.truncate(f, R)


# ---------------------------------------------------------------------------
# stepping

RhsFn = Callable[[State, SimConfig], Tendency]


def step_rk4(state: State, dt: float, cfg: SimConfig, rhs_fn: RhsFn = rhs) -> State:
    """One classical fourth-order Runge-Kutta step of ``dX/dt = rhs(X)``."""
    if not dt > 0:
        raise UsageError(f"dt must be positive, got {dt}")
    grid = cfg.grid
    t0 = state.t
    x0 = state.pack()

    def f(x, t):
        return rhs_fn(State.unpack(grid, x, t), cfg).pack()

    k1 = f(x0, t0)
    k2 = f(x0 + (0.5 * dt) * k1, t0 + 0.5 * dt)
    k3 = f(x0 + (0.5 * dt) * k2, t0 + 0.5 * dt)
    k4 = f(x0 + dt * k3, t0 + dt)
    x1 = x0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(x1)):
        raise InstabilityError("non-finite coefficients after RK4 step", t0 + dt)
    try:
        return State.unpack(grid, x1, t0 + dt)
    except ContractViolation as exc:
        raise InstabilityError(f"step invariants lost: {exc}", t0 + dt) from exc


def max_speed(state: State) -> float:
    """``max_x (|u(x)| + |b(x)|)`` on the physical grid."""
    up = sp.inverse_transform(state.u)
    bp = sp.inverse_transform(state.b)
    return float(np.max(np.sqrt(np.sum(up**2, axis=0)) + np.sqrt(np.sum(bp**2, axis=0))))


def cfl_dt(state: State, cfg: SimConfig) -> float:
    pol = cfg.dt_policy
    if pol.kind != "cfl":
        raise UsageError("cfl_dt needs a CFL time-step policy")
    return min(pol.dt_max, pol.c_max * cfg.grid.dx / (max_speed(state) + CFL_EPS))


def state_hash(state: State) -> str:
    return hashlib.sha256(np.ascontiguousarray(state.pack()).tobytes()).hexdigest()[:16]


@dataclass(frozen=True)
class StepRecord:
    t: float
    dt: float
    state_hash: str
    cfl_speed: float


# ---------------------------------------------------------------------------
# checkpoints

def save_checkpoint(path, state: State, cfg: SimConfig, extra: dict | None = None) -> Path:
    meta = {
        "dim": cfg.grid.dim,
        "N": cfg.grid.n,
        "R": cfg.R,
        "s": cfg.s,
        "t": state.t,
        "config": cfg.to_dict(),
    }
    meta.update(extra or {})
    return write_container(path, {"u": state.u.coeffs, "theta": state.theta.coeffs, "b": state.b.coeffs}, meta)


def load_checkpoint(path, expect_grid: Grid | None = None) -> tuple[State, dict]:
    arrays, header = read_container(path)
    grid = Grid(int(header["dim"]), int(header["N"]))
    if expect_grid is not None and grid != expect_grid:
        raise ConfigurationError(f"checkpoint grid {grid} does not match configured grid {expect_grid}")
    for name in ("u", "theta", "b"):
        if name not in arrays:
            raise ConfigurationError(f"checkpoint lacks field {name!r}")
    state = State(
        SpectralVector(grid, arrays["u"], solenoidal=True),
        SpectralScalar(grid, arrays["theta"]),
        SpectralVector(grid, arrays["b"], solenoidal=True),
        float(header["t"]),
    )
    return state, header


# ---------------------------------------------------------------------------
# run loop

@dataclass
class RunReport:
    config: dict
    init: dict
    steps: int = 0
    wall_time: float = 0.0
    termination: str = "running"
    t_final: float = 0.0
    records: list = field(default_factory=list)
    step_records: list = field(default_factory=list)
    checkpoints: list = field(default_factory=list)
    events: list = field(default_factory=list)

    def to_dict(self, include_steps=False) -> dict:
        d = {
            "config": self.config,
            "init": self.init,
            "steps": self.steps,
            "wall_time": self.wall_time,
            "termination": self.termination,
            "t_final": self.t_final,
            "samples": len(self.records),
            "checkpoints": list(self.checkpoints),
            "events": list(self.events),
        }
        if include_steps:
            d["step_records"] = [asdict(r) for r in self.step_records]
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(**kw), indent=2, sort_keys=True)


class CsvSink:
    """Writes diagnostic rows; the resolved configuration leads the file as ``#`` lines."""

    def __init__(self, path, echo: dict, append=False):
        self.path = Path(path)
        fresh = not (append and self.path.exists())
        self._fh = open(self.path, "a" if not fresh else "w", encoding="utf-8")
        if fresh:
            for line in json.dumps(echo, sort_keys=True, indent=1).splitlines():
                self._fh.write(f"# {line}\n")
            self._fh.write(",".join(CSV_COLUMNS) + "\n")

    def on_sample(self, record: DiagRecord, state: State) -> None:
        self._fh.write(format_row(record.row()) + "\n")
        self._fh.flush()

    def close(self):
        self._fh.close()


def _notify(sinks, method, *args):
    for s in sinks:
        fn = getattr(s, method, None)
        if fn is not None:
            fn(*args)
        elif callable(s) and method == "on_sample":
            s(*args)


def run(
    cfg: SimConfig,
    init: InitialSpec,
    sinks: Sequence = (),
    *,
    diag_every: int = 1,
    checkpoint_every: int = 0,
    checkpoint_dir=None,
    norm_flavor: str = "besov",
    final_checkpoint: bool = False,
) -> tuple[State, RunReport]:
    """Advance from ``init`` to ``cfg.t_end``.

    Diagnostics are sampled every ``diag_every`` steps and at the final time;
    checkpoints every ``checkpoint_every`` steps (0 disables), plus one of the
    initial state of a fresh run whenever ``checkpoint_dir`` is given and one
    of the final state if ``final_checkpoint`` is set.  Under a fixed
    time step, ``t_n = t_origin + n*dt`` so resumed runs reproduce the original
    trajectory bit for bit.  On instability, the error is raised with the
    partial report attached as ``exc.report``.
    """
    if diag_every < 1 or checkpoint_every < 0:
        raise ConfigurationError("diag_every must be >= 1 and checkpoint_every >= 0")
    grid = cfg.grid
    report = RunReport(config=cfg.to_dict(), init=init.to_dict())
    wall0 = time.perf_counter()
    with sfft.set_workers(cfg.workers):
        if init.kind == "from_checkpoint":
            state, header = load_checkpoint(init.path, expect_grid=grid)
            resume = header.get("run", {})
            step = int(resume.get("step", 0))
            t_origin = float(resume.get("t_origin", state.t))
            hs_ref = resume.get("hs_ref")
            monitor = Monitor.from_dict(cfg, resume["monitor"]) if "monitor" in resume else Monitor(cfg, norm_flavor)
        else:
            state = make_initial(init, cfg)
            step, t_origin, hs_ref = 0, state.t, None
            monitor = Monitor(cfg, norm_flavor)
        check_state(state, cfg)
        if hs_ref is None:
            hs_ref = sp.hs_norm(state.u, cfg.s)
            if hs_ref == 0.0:
                from .diagnostics import energy_functionals

                hs_ref = math.sqrt(energy_functionals(state, cfg.s)[1])
        fixed = cfg.dt_policy.kind == "fixed"
        t_eps = 1e-12 * max(1.0, abs(cfg.t_end))
        ckdir = Path(checkpoint_dir) if checkpoint_dir is not None else None
        if ckdir is not None:
            ckdir.mkdir(parents=True, exist_ok=True)

        def emit_sample():
            rec = monitor.sample(state)
            report.records.append(rec)
            _notify(sinks, "on_sample", rec, state)

        def emit_checkpoint():
            path = ckdir / f"ckpt_{step:08d}.mbspec"
            if report.checkpoints and report.checkpoints[-1] == str(path):
                return
            extra = {
                "init": init.to_dict(),
                "run": {
                    "step": step,
                    "t_origin": t_origin,
                    "hs_ref": hs_ref,
                    "monitor": monitor.to_dict(),
                    "diag_every": diag_every,
                    "checkpoint_every": checkpoint_every,
                },
            }
            save_checkpoint(path, state, cfg, extra)
            report.checkpoints.append(str(path))
            _notify(sinks, "on_checkpoint", path, state)

        if monitor.acc.t_last is None or monitor.acc.t_last < state.t:
            emit_sample()
        if ckdir is not None and init.kind != "from_checkpoint":
            emit_checkpoint()
        try:
            while cfg.t_end - state.t > t_eps:
                if fixed:
                    h = cfg.dt_policy.dt
                    t_next = t_origin + (step + 1) * h
                    if t_next > cfg.t_end + t_eps:
                        t_next = cfg.t_end
                        h = cfg.t_end - state.t
                else:
                    h = min(cfl_dt(state, cfg), cfg.t_end - state.t)
                    t_next = state.t + h
                new = step_rk4(state, h, cfg)
                state = State(new.u, new.theta, new.b, t_next)
                step += 1
                hs_u = sp.hs_norm(state.u, cfg.s)
                if hs_u > BLOWUP_FACTOR * hs_ref:
                    raise InstabilityError(f"|u|_Hs grew past {BLOWUP_FACTOR:g} x initial", state.t)
                report.step_records.append(StepRecord(state.t, h, state_hash(state), max_speed(state)))
                final = cfg.t_end - state.t <= t_eps
                if step % diag_every == 0 or final:
                    emit_sample()
                if ckdir is not None and checkpoint_every and step % checkpoint_every == 0:
                    emit_checkpoint()
        except InstabilityError as exc:
            report.termination = "instability"
            report.events.append({"event": "instability", "t": exc.t, "message": str(exc)})
            report.steps = step
            report.t_final = state.t
            report.wall_time = time.perf_counter() - wall0
            exc.report = report
            log.warning("run stopped: %s", exc)
            raise
        if ckdir is not None and final_checkpoint and not (checkpoint_every and step % checkpoint_every == 0):
            emit_checkpoint()
        report.termination = "t_end"
        report.steps = step
        report.t_final = state.t
        report.wall_time = time.perf_counter() - wall0
    return state, report
