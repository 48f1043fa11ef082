"""Right-hand side of the Fourier-truncated ideal magnetic Benard system.

Unknowns are velocity ``u``, temperature ``theta`` and magnetic field ``b``,
all supported in the closed ball ``|k| <= R``.  The tendencies are::

    du     = P( -S_R[(u.grad)u] + S_R[(b.grad)b] + S_R[theta e_n] )
    dtheta = -S_R[(u.grad)theta] + S_R[u.e_n]
    db     = -S_R[(u.grad)b] + S_R[(b.grad)u]

with ``P`` the Leray projector standing in for the pressure gradient.  Every
product is formed pointwise on the grid, transformed back, passed through the
two-thirds mask and then truncated to the ball.

``model="mhd"`` switches the thermal equation off (theta frozen at zero, no
buoyancy, no ``u.e_n`` source): the ideal MHD reduction, which conserves the
L2 energy exactly.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Union

import numpy as np

from . import spectral as sp
from .errors import ConfigurationError, ContractViolation, UsageError
from .spectral import Grid, SpectralScalar, SpectralVector


@dataclass(frozen=True)
class FixedDt:
    dt: float

    kind = "fixed"

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigurationError(f"fixed dt must be positive, got {self.dt}")


@dataclass(frozen=True)
class CflDt:
    c_max: float = 0.5
    dt_max: float = 1e-2

    kind = "cfl"

    def __post_init__(self):
        if not (self.c_max > 0 and self.dt_max > 0):
            raise ConfigurationError("CFL policy needs c_max > 0 and dt_max > 0")


DtPolicy = Union[FixedDt, CflDt]


MODELS = ("benard", "mhd")


def alias_free(n: int, R: float) -> bool:
    """True when quadratic products of ball-``R`` fields alias only outside the ball."""
    return n - 2 * math.floor(R) > R


@dataclass(frozen=True)
class SimConfig:
    grid: Grid
    R: float
    s: float
    buoyancy_axis: int | None = None
    dealias: str = "two-thirds"
    dt_policy: DtPolicy = field(default_factory=CflDt)
    t_end: float = 1.0
    workers: int = 1
    model: str = "benard"

    def __post_init__(self):
        dim = self.grid.dim
        if self.model not in MODELS:
            raise ConfigurationError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.buoyancy_axis is None:
            object.__setattr__(self, "buoyancy_axis", dim - 1)
        if not 0 <= self.buoyancy_axis < dim:
            raise ConfigurationError(f"buoyancy axis must be in [0, {dim}), got {self.buoyancy_axis}")
        if not self.s > dim / 2 + 1:
            raise ConfigurationError(f"Sobolev index must exceed dim/2 + 1 = {dim / 2 + 1}, got {self.s}")
        if not self.R > 0:
            raise ConfigurationError(f"truncation radius must be positive, got {self.R}")
        if self.dealias != "two-thirds":
            raise ConfigurationError(f"unsupported dealias rule {self.dealias!r}")
        if self.R > self.grid.n / 3 or not alias_free(self.grid.n, self.R):
            raise ConfigurationError(
                f"R={self.R} is not dealias-safe for N={self.grid.n} (need R <= N/3 and N - 2*floor(R) > R)"
            )
        if self.t_end < 0:
            raise ConfigurationError("t_end must be non-negative")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")

    @property
    def e_n(self) -> np.ndarray:
        e = np.zeros(self.grid.dim)
        e[self.buoyancy_axis] = 1.0
        return e

    def with_(self, **changes) -> "SimConfig":
        d = {f: getattr(self, f) for f in self.__dataclass_fields__}
        d.update(changes)
        return SimConfig(**d)

    def to_dict(self) -> dict:
        return {
            "dim": self.grid.dim,
            "N": self.grid.n,
            "R": self.R,
            "s": self.s,
            "buoyancy_axis": self.buoyancy_axis,
            "dealias": self.dealias,
            "dt_policy": {"kind": self.dt_policy.kind, **asdict(self.dt_policy)},
            "t_end": self.t_end,
            "workers": self.workers,
            "model": self.model,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        pol = dict(d["dt_policy"])
        kind = pol.pop("kind")
        policy = FixedDt(**pol) if kind == "fixed" else CflDt(**pol)
        return cls(
            grid=Grid(int(d["dim"]), int(d["N"])),
            R=d["R"],
            s=d["s"],
            buoyancy_axis=d.get("buoyancy_axis"),
            dealias=d.get("dealias", "two-thirds"),
            dt_policy=policy,
            t_end=d.get("t_end", 1.0),
            workers=d.get("workers", 1),
            model=d.get("model", "benard"),
        )


@dataclass(frozen=True, eq=False)
class State:
    u: SpectralVector
    theta: SpectralScalar
    b: SpectralVector
    t: float = 0.0

    @property
    def grid(self) -> Grid:
        return self.theta.grid

    def pack(self) -> np.ndarray:
        """All coefficients stacked as ``(2*dim + 1, *shape)``: u, theta, b."""
        return np.concatenate([self.u.coeffs, self.theta.coeffs[None], self.b.coeffs])

    @classmethod
    def unpack(cls, grid: Grid, arr: np.ndarray, t: float, certify=True) -> "State":
        d = grid.dim
        return cls(
            SpectralVector(grid, arr[:d], solenoidal=certify),
            SpectralScalar(grid, arr[d]),
            SpectralVector(grid, arr[d + 1 :], solenoidal=certify),
            t,
        )

    @classmethod
    def zeros(cls, grid: Grid, t: float = 0.0) -> "State":
        return cls(SpectralVector.zeros(grid), SpectralScalar.zeros(grid), SpectralVector.zeros(grid), t)


@dataclass(frozen=True, eq=False)
class Tendency:
    du: SpectralVector
    dtheta: SpectralScalar
    db: SpectralVector

    def pack(self) -> np.ndarray:
        return np.concatenate([self.du.coeffs, self.dtheta.coeffs[None], self.db.coeffs])


def check_state(state: State, cfg: SimConfig) -> None:
    """Raise :class:`ContractViolation` unless the state sits in the truncated spaces."""
    if state.grid != cfg.grid:
        raise ContractViolation("state grid differs from the configured grid")
    for name, f in (("u", state.u), ("b", state.b)):
        if sp.solenoidal_defect(f) > sp.SOLENOIDAL_TOL:
            raise ContractViolation(f"{name} is not solenoidal")
    if cfg.model == "mhd" and np.any(state.theta.coeffs != 0):
        raise ContractViolation("the mhd model needs theta identically zero")
    outside = ~sp.ball_mask(cfg.grid, cfg.R)
    if np.any(state.pack()[:, outside] != 0):
        raise ContractViolation(f"state has Fourier content outside the ball |k| <= {cfg.R}")


# ---------------------------------------------------------------------------
# pseudo-spectral products

def _grad_phys(g) -> np.ndarray:
    """Physical-space gradient: ``(dim, ...)`` for scalars, ``(dim_i, dim_j, ...)`` for vectors."""
    if isinstance(g, SpectralVector):
        return sp._ifft(sp.jacobian(g), g.grid.dim)
    return sp._ifft(1j * g.grid.k_deriv * g.coeffs, g.grid.dim)


def _dot_grad(v_phys: np.ndarray, grad_phys: np.ndarray, vector: bool) -> np.ndarray:
    """``sum_j v_j d_j g`` with a fixed left-to-right summation order."""
    dim = v_phys.shape[0]
    if vector:
        out = v_phys[0] * grad_phys[:, 0]
        for j in range(1, dim):
            out = out + v_phys[j] * grad_phys[:, j]
    else:
        out = v_phys[0] * grad_phys[0]
        for j in range(1, dim):
            out = out + v_phys[j] * grad_phys[j]
    return out


def _to_spectral(x: np.ndarray, grid: Grid, vector: bool):
    if vector:
        return SpectralVector(grid, sp._fft(x, tuple(range(1, grid.dim + 1))))
    return SpectralScalar(grid, sp._fft(x, tuple(range(grid.dim))))


def _project_product(x: np.ndarray, grid: Grid, vector: bool, R: float | None):
    f = sp.dealias(_to_spectral(x, grid, vector))
    return f if R is None else sp.truncate(f, R)


def _require_solenoidal(v: SpectralVector) -> None:
    if not isinstance(v, SpectralVector):
        raise UsageError("advecting field must be a vector")
    if not v.solenoidal and sp.solenoidal_defect(v) > sp.SOLENOIDAL_TOL:
        raise ContractViolation("advecting velocity is not solenoidal")


def advect(v: SpectralVector, g, cfg: SimConfig):
    """``S_R[(v.grad) g]`` for a solenoidal ``v`` and scalar or vector ``g``."""
    _require_solenoidal(v)
    if v.grid != cfg.grid or g.grid != cfg.grid:
        raise UsageError("operands must live on the configured grid")
    vector = isinstance(g, SpectralVector)
    prod = _dot_grad(sp.inverse_transform(v), _grad_phys(g), vector)
    return _project_product(prod, cfg.grid, vector, cfg.R)


def advect_divergence_form(v: SpectralVector, g, cfg: SimConfig):
    """``S_R[div(v (x) g)]``; equals :func:`advect` for solenoidal ``v``."""
    grid = cfg.grid
    vp = sp.inverse_transform(v)
    gp = sp.inverse_transform(g)
    kd = grid.k_deriv
    axes = tuple(range(1, grid.dim + 1))
    if isinstance(g, SpectralVector):
        # flux[i, j] = g_i v_j ; result_i = sum_j d_j flux[i, j]
        flux = sp._fft(gp[:, None] * vp[None, :], tuple(a + 1 for a in axes))
        res = np.sum(1j * kd[None] * flux, axis=1)
        f = SpectralVector(grid, res)
    else:
        flux = sp._fft(gp[None] * vp, axes)
        f = SpectralScalar(grid, np.sum(1j * kd * flux, axis=0))
    return sp.truncate(sp.dealias(f), cfg.R)


def buoyancy(theta: SpectralScalar, cfg: SimConfig) -> SpectralVector:
    """``S_R[theta e_n]``."""
    c = np.zeros((cfg.grid.dim,) + cfg.grid.shape, dtype=np.complex128)
    c[cfg.buoyancy_axis] = theta.coeffs
    return sp.truncate(SpectralVector(cfg.grid, c), cfg.R)


def rhs(state: State, cfg: SimConfig) -> Tendency:
    """Tendencies of the truncated system at ``state``."""
    u, th, b = state.u, state.theta, state.b
    _require_solenoidal(u)
    _require_solenoidal(b)
    grid = cfg.grid
    R = cfg.R
    up = sp.inverse_transform(u)
    bp = sp.inverse_transform(b)
    gu = _grad_phys(u)
    gb = _grad_phys(b)
    gt = _grad_phys(th)

    a_uu = _project_product(_dot_grad(up, gu, True), grid, True, R)
    a_bb = _project_product(_dot_grad(bp, gb, True), grid, True, R)
    a_ut = _project_product(_dot_grad(up, gt, False), grid, False, R)
    a_ub = _project_product(_dot_grad(up, gb, True), grid, True, R)
    a_bu = _project_product(_dot_grad(bp, gu, True), grid, True, R)

    if cfg.model == "mhd":
        du = sp.leray_project(-a_uu + a_bb)
        dtheta = SpectralScalar.zeros(grid)
    else:
        du = sp.leray_project(-a_uu + a_bb + buoyancy(th, cfg))
        un = SpectralScalar(grid, u.coeffs[cfg.buoyancy_axis])
        dtheta = -a_ut + sp.truncate(un, R)
    db = sp.certify(grid, (a_bu - a_ub).coeffs, max(float(np.max(np.abs(a_bu.coeffs))), float(np.max(np.abs(a_ub.coeffs)))))
    return Tendency(du, dtheta, db)


def forcing_power(state: State, cfg: SimConfig) -> float:
    """``(theta e_n, u) + (u.e_n, theta)``: the only non-cancelling energy exchange."""
    if cfg.model == "mhd":
        return 0.0
    un = SpectralScalar(cfg.grid, state.u.coeffs[cfg.buoyancy_axis])
    return sp.inner(state.theta, un) + sp.inner(un, state.theta)


# ---------------------------------------------------------------------------
# commutator

def dealias_safe(f, n: int) -> bool:
    return 3 * sp.support_cube(f) < n


def commutator_js(f, g, s: float, cfg: SimConfig | None = None):
    """Evaluate ``[J^s, f] grad g = J^s((f.grad) g) - (f.grad)(J^s g)``.

    A scalar ``f`` gives the multiplicative form ``J^s(f g) - f J^s g``.  Both
    products pass through the same two-thirds mask and no ball truncation is
    applied.  Operands must be supported in ``|k_i| < N/3`` so the masked
    products are exact.
    """
    grid = f.grid
    if g.grid != grid or (cfg is not None and cfg.grid != grid):
        raise UsageError("operands must share a grid")
    for name, x in (("f", f), ("g", g)):
        if not dealias_safe(x, grid.n):
            raise ContractViolation(f"{name} exceeds the dealias-safe support |k_i| < N/3")
    vector = isinstance(g, SpectralVector)
    fp = sp.inverse_transform(f)
    jg = sp.bessel_potential(g, s)
    if isinstance(f, SpectralVector):
        first = _dot_grad(fp, _grad_phys(g), vector)
        second = _dot_grad(fp, _grad_phys(jg), vector)
    else:
        first = fp * sp.inverse_transform(g)
        second = fp * sp.inverse_transform(jg)
    a = sp.bessel_potential(_project_product(first, grid, vector, None), s)
    return a - _project_product(second, grid, vector, None)
