"""Fourier-space foundation on the periodic torus [0, 2*pi)^dim.

Fields are stored as complex Fourier coefficients on the full mode lattice in
FFT storage order (index ``i`` along an axis holds wavenumber ``i`` for
``i < N/2`` and ``i - N`` otherwise).  Coefficients use the normalized torus
measure, so a field is recovered as ``f(x) = sum_k c_k exp(i k.x)``; a constant
``c`` has ``c_0 = c`` and ``||f||_{L2}^2 = sum_k |c_k|^2 = mean(f^2)``.

All reductions go through :func:`_sum`, which flattens to a contiguous array
and lets numpy's pairwise summation run in a fixed order.  FFTs are routed
through :mod:`scipy.fft`; use ``scipy.fft.set_workers`` to parallelise them,
results are bitwise independent of the worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Union

import numpy as np
import scipy.fft as sfft

from .errors import ConfigurationError, ContractViolation, DataValidationError, UsageError

SOLENOIDAL_TOL = 1e-10


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid with ``n`` points per axis in ``dim`` dimensions."""

    dim: int
    n: int

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ConfigurationError(f"dim must be 2 or 3, got {self.dim}")
        if not isinstance(self.n, (int, np.integer)) or self.n < 8 or self.n % 2:
            raise ConfigurationError(f"points per axis must be an even integer >= 8, got {self.n}")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def dx(self) -> float:
        return 2.0 * math.pi / self.n

    @cached_property
    def k(self) -> np.ndarray:
        """Integer wavenumbers, shape ``(dim, *shape)``, as float64."""
        k1 = np.fft.fftfreq(self.n, d=1.0 / self.n)
        return np.array(np.meshgrid(*([k1] * self.dim), indexing="ij"))

    @cached_property
    def k_deriv(self) -> np.ndarray:
        """Wavenumbers for differentiation: Nyquist components set to zero."""
        kd = self.k.copy()
        kd[np.abs(kd) == self.n // 2] = 0.0
        return kd

    @cached_property
    def ksq(self) -> np.ndarray:
        return np.sum(self.k**2, axis=0)

    @cached_property
    def kmag(self) -> np.ndarray:
        return np.sqrt(self.ksq)

    @cached_property
    def nyquist_mask(self) -> np.ndarray:
        return np.any(np.abs(self.k) == self.n // 2, axis=0)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """Two-thirds rule: keep modes with every ``|k_i| <= N/3``."""
        return np.all(np.abs(self.k) <= self.n / 3.0, axis=0)

    def coords(self) -> np.ndarray:
        x1 = np.arange(self.n) * self.dx
        return np.array(np.meshgrid(*([x1] * self.dim), indexing="ij"))


def _readonly(arr: np.ndarray) -> np.ndarray:
    view = arr.view()
    view.flags.writeable = False
    return view


@dataclass(frozen=True, eq=False)
class SpectralScalar:
    """Fourier coefficients of a real scalar field."""

    grid: Grid
    coeffs: np.ndarray

    rank = 0

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.shape != self.grid.shape:
            raise DataValidationError(f"coefficient shape {c.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "coeffs", _readonly(c))

    def _new(self, coeffs):
        return SpectralScalar(self.grid, coeffs)

    def __add__(self, other):
        _check_same(self, other)
        return self._new(self.coeffs + other.coeffs)

    def __sub__(self, other):
        _check_same(self, other)
        return self._new(self.coeffs - other.coeffs)

    def __neg__(self):
        return self._new(-self.coeffs)

    def __mul__(self, a):
        if not np.isscalar(a):
            return NotImplemented
        return self._new(a * self.coeffs)

    __rmul__ = __mul__

    @classmethod
    def zeros(cls, grid: Grid) -> "SpectralScalar":
        return cls(grid, np.zeros(grid.shape, dtype=np.complex128))


@dataclass(frozen=True, eq=False)
class SpectralVector:
    """A ``dim``-component vector field; ``coeffs`` has shape ``(dim, *shape)``.

    Setting ``solenoidal=True`` is a certificate: construction fails with
    :class:`ContractViolation` unless ``max|k.v(k)| <= 1e-10 max|v(k)|``.
    """

    grid: Grid
    coeffs: np.ndarray
    solenoidal: bool = False

    rank = 1

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.shape != (self.grid.dim,) + self.grid.shape:
            raise DataValidationError(
                f"vector coefficient shape {c.shape} does not match grid {(self.grid.dim,) + self.grid.shape}"
            )
        object.__setattr__(self, "coeffs", _readonly(c))
        if self.solenoidal:
            defect = solenoidal_defect(self)
            if defect > SOLENOIDAL_TOL:
                raise ContractViolation(f"solenoidal certificate failed: relative divergence {defect:.3e}")

    @property
    def components(self) -> tuple[SpectralScalar, ...]:
        return tuple(SpectralScalar(self.grid, c) for c in self.coeffs)

    @classmethod
    def from_components(cls, comps, solenoidal=False) -> "SpectralVector":
        comps = list(comps)
        return cls(comps[0].grid, np.stack([c.coeffs for c in comps]), solenoidal=solenoidal)

    @classmethod
    def zeros(cls, grid: Grid, solenoidal=True) -> "SpectralVector":
        return cls(grid, np.zeros((grid.dim,) + grid.shape, dtype=np.complex128), solenoidal=solenoidal)

    def _new(self, coeffs, solenoidal=False):
        return SpectralVector(self.grid, coeffs, solenoidal=solenoidal)

    def __add__(self, other):
        _check_same(self, other)
        return self._new(self.coeffs + other.coeffs, self.solenoidal and other.solenoidal)

    def __sub__(self, other):
        _check_same(self, other)
        return self._new(self.coeffs - other.coeffs, self.solenoidal and other.solenoidal)

    def __neg__(self):
        return self._new(-self.coeffs, self.solenoidal)

    def __mul__(self, a):
        if not np.isscalar(a):
            return NotImplemented
        return self._new(a * self.coeffs, self.solenoidal)

    __rmul__ = __mul__


Field = Union[SpectralScalar, SpectralVector]


def _check_same(a, b):
    if type(a) is not type(b):
        raise UsageError(f"cannot combine {type(a).__name__} with {type(b).__name__}")
    if a.grid != b.grid:
        raise UsageError("operands live on different grids")


def _like(f: Field, coeffs: np.ndarray, solenoidal: bool | None = None) -> Field:
    if isinstance(f, SpectralVector):
        return SpectralVector(f.grid, coeffs, solenoidal=f.solenoidal if solenoidal is None else solenoidal)
    return SpectralScalar(f.grid, coeffs)


def _sum(x: np.ndarray) -> float:
    return float(np.sum(np.ascontiguousarray(x).ravel()))


# ---------------------------------------------------------------------------
# transforms

def _mirror(c: np.ndarray, axes: tuple[int, ...]) -> np.ndarray:
    """Return ``c[-k]`` on the periodic lattice along ``axes``."""
    return np.roll(np.flip(c, axis=axes), 1, axis=axes)


def _fft(x: np.ndarray, axes: tuple[int, ...]) -> np.ndarray:
    c = sfft.fftn(x, axes=axes, norm="forward")
    # exact Hermitian symmetry: (a + conj(b))/2 is bitwise conj of (b + conj(a))/2
    return 0.5 * (c + np.conj(_mirror(c, axes)))


def _ifft(c: np.ndarray, dim: int) -> np.ndarray:
    n = c.shape[-1]
    axes = tuple(range(c.ndim - dim, c.ndim))
    return sfft.irfftn(c[..., : n // 2 + 1], s=(n,) * dim, axes=axes, norm="forward")


def forward_transform(samples, grid: Grid | None = None) -> SpectralScalar:
    """Physical samples of a real scalar on the ``N^dim`` grid -> coefficients."""
    x = np.asarray(samples, dtype=np.float64)
    if grid is None:
        if x.ndim not in (2, 3) or len(set(x.shape)) != 1:
            raise DataValidationError(f"cannot infer a grid from sample shape {x.shape}")
        grid = Grid(x.ndim, x.shape[0])
    if x.shape != grid.shape:
        raise DataValidationError(f"sample shape {x.shape} does not match grid {grid.shape}")
    if not np.all(np.isfinite(x)):
        raise DataValidationError("samples contain non-finite values")
    return SpectralScalar(grid, _fft(x, tuple(range(grid.dim))))


def forward_vector(samples, grid: Grid | None = None, solenoidal=False) -> SpectralVector:
    x = np.asarray(samples, dtype=np.float64)
    if grid is None:
        grid = Grid(x.ndim - 1, x.shape[-1])
    if x.shape != (grid.dim,) + grid.shape:
        raise DataValidationError(f"vector sample shape {x.shape} does not match grid")
    if not np.all(np.isfinite(x)):
        raise DataValidationError("samples contain non-finite values")
    return SpectralVector(grid, _fft(x, tuple(range(1, grid.dim + 1))), solenoidal=solenoidal)


def inverse_transform(f: Field) -> np.ndarray:
    """Coefficients -> real physical samples (shape ``(*shape)`` or ``(dim, *shape)``)."""
    return _ifft(np.asarray(f.coeffs), f.grid.dim)


def hermitian_defect(f: Field) -> float:
    """``max |c(-k) - conj(c(k))|``; zero for every field this module produces."""
    c = np.asarray(f.coeffs)
    axes = tuple(range(c.ndim - f.grid.dim, c.ndim))
    return float(np.max(np.abs(_mirror(c, axes) - np.conj(c))))


# ---------------------------------------------------------------------------
# Fourier multipliers

def bessel_potential(f: Field, s: float) -> Field:
    """``J^s f``: multiply each mode by ``(1 + |k|^2)^(s/2)``."""
    return _like(f, f.coeffs * (1.0 + f.grid.ksq) ** (0.5 * s))


def ball_mask(grid: Grid, R: float) -> np.ndarray:
    return grid.ksq <= R * R


def truncate(f: Field, R: float) -> Field:
    """``S_R f``: keep modes in the closed ball ``|k| <= R``."""
    if not R > 0:
        raise ConfigurationError(f"truncation radius must be positive, got {R}")
    return _like(f, np.where(ball_mask(f.grid, R), f.coeffs, 0.0))


def dealias(f: Field) -> Field:
    return _like(f, np.where(f.grid.dealias_mask, f.coeffs, 0.0))


def leray_project(v: SpectralVector) -> SpectralVector:
    """Project onto divergence-free fields: ``v - k (k.v)/|k|^2``; mode 0 untouched."""
    if not isinstance(v, SpectralVector):
        raise UsageError("leray_project needs a vector field")
    g = v.grid
    k = g.k_deriv
    ksq = np.sum(k**2, axis=0)
    kdotv = np.sum(k * v.coeffs, axis=0)
    inv = np.divide(1.0, ksq, out=np.zeros_like(ksq), where=ksq > 0)
    out = v.coeffs - k * (kdotv * inv)
    # modes carrying a Nyquist component have no divergence-free representation
    out[:, g.nyquist_mask] = 0.0
    return certify(g, out, float(np.max(np.abs(v.coeffs))))


def certify(grid: Grid, coeffs: np.ndarray, scale: float) -> SpectralVector:
    """Solenoidal vector whose divergence is checked against ``max(scale, max|c|)``.

    For results of exact cancellations (projected gradients, differences of
    nearly equal terms) the output can be pure rounding noise; ``scale`` is then
    the magnitude of the inputs that produced it.
    """
    v = SpectralVector(grid, coeffs)
    c = np.asarray(v.coeffs)
    ref = max(float(scale), float(np.max(np.abs(c))))
    if ref > 0.0:
        defect = float(np.max(np.abs(np.sum(grid.k * c, axis=0)))) / ref
        if defect > SOLENOIDAL_TOL:
            raise ContractViolation(f"solenoidal certificate failed: relative divergence {defect:.3e}")
    object.__setattr__(v, "solenoidal", True)
    return v


def solenoidal_defect(v: SpectralVector) -> float:
    """``max_k |k.v(k)| / max_k |v(k)|`` (zero for the zero field)."""
    c = np.asarray(v.coeffs)
    vmax = float(np.max(np.abs(c)))
    if vmax == 0.0:
        return 0.0
    return float(np.max(np.abs(np.sum(v.grid.k * c, axis=0)))) / vmax


# ---------------------------------------------------------------------------
# differential operators

def gradient(f: SpectralScalar) -> SpectralVector:
    if not isinstance(f, SpectralScalar):
        raise UsageError("gradient needs a scalar field")
    return SpectralVector(f.grid, 1j * f.grid.k_deriv * f.coeffs)


def divergence(v: SpectralVector) -> SpectralScalar:
    if not isinstance(v, SpectralVector):
        raise UsageError("divergence needs a vector field")
    return SpectralScalar(v.grid, np.sum(1j * v.grid.k_deriv * v.coeffs, axis=0))


def curl(v: SpectralVector) -> Field:
    """Curl of a vector field; scalar vorticity ``d1 v2 - d2 v1`` in 2D."""
    if not isinstance(v, SpectralVector):
        raise UsageError("curl needs a vector field")
    k = v.grid.k_deriv
    c = v.coeffs
    if v.grid.dim == 2:
        return SpectralScalar(v.grid, 1j * (k[0] * c[1] - k[1] * c[0]))
    out = np.stack(
        [
            1j * (k[1] * c[2] - k[2] * c[1]),
            1j * (k[2] * c[0] - k[0] * c[2]),
            1j * (k[0] * c[1] - k[1] * c[0]),
        ]
    )
    return SpectralVector(v.grid, out)


def jacobian(v: SpectralVector) -> np.ndarray:
    """Spectral coefficients of ``d_j v_i``, shape ``(dim, dim, *shape)``."""
    return 1j * v.grid.k_deriv[None, :] * v.coeffs[:, None]


def directional(f: Field, direction) -> Field:
    """``(c . grad) f`` for a constant vector ``c``."""
    c = np.asarray(direction, dtype=np.float64)
    if c.shape != (f.grid.dim,):
        raise UsageError(f"direction must have {f.grid.dim} components")
    mult = 1j * np.tensordot(c, f.grid.k_deriv, axes=1)
    return _like(f, mult * f.coeffs)


_DIFFERENTIALS = {"gradient": gradient, "divergence": divergence, "curl": curl}


def differential(f: Field, op: str, direction=None) -> Field:
    if op == "directional":
        if direction is None:
            raise UsageError("directional derivative needs a direction")
        return directional(f, direction)
    try:
        fn = _DIFFERENTIALS[op]
    except KeyError:
        raise UsageError(f"unknown differential operator {op!r}") from None
    return fn(f)


# ---------------------------------------------------------------------------
# Littlewood-Paley blocks

def lp_max_index(grid: Grid) -> int:
    kmax = float(np.max(grid.kmag))
    return max(-1, math.ceil(math.log2(kmax)) - 1) if kmax > 1 else -1


def lp_mask(grid: Grid, j: int) -> np.ndarray:
    if j < -1:
        raise UsageError(f"block index must be >= -1, got {j}")
    km = grid.kmag
    if j == -1:
        return km <= 1.0
    return (km > 2.0**j) & (km <= 2.0 ** (j + 1))


def lp_block(f: Field, j: int) -> Field:
    """Sharp dyadic block: ``|k| <= 1`` for ``j = -1``, else ``2^j < |k| <= 2^(j+1)``."""
    return _like(f, np.where(lp_mask(f.grid, j), f.coeffs, 0.0))


def lp_blocks(f: Field) -> list[Field]:
    return [lp_block(f, j) for j in range(-1, lp_max_index(f.grid) + 1)]


# ---------------------------------------------------------------------------
# norms

def inner(f: Field, g: Field) -> float:
    """Real L2 inner product ``sum_k Re(f(k) conj(g(k)))``."""
    _check_same(f, g)
    return _sum(np.real(f.coeffs * np.conj(g.coeffs)))


def l2_norm(f: Field) -> float:
    return math.sqrt(_sum(np.abs(f.coeffs) ** 2))


def hs_norm(f: Field, s: float) -> float:
    w = (1.0 + f.grid.ksq) ** s
    a2 = np.abs(f.coeffs) ** 2
    if isinstance(f, SpectralVector):
        a2 = np.sum(a2, axis=0)
    return math.sqrt(_sum(w * a2))


def _magnitude(x: np.ndarray, rank: int) -> np.ndarray:
    return np.sqrt(np.sum(x**2, axis=0)) if rank else np.abs(x)


def _rank(f: Field) -> int:
    return 1 if isinstance(f, SpectralVector) else 0


def linf_norm(f: Field) -> float:
    return float(np.max(_magnitude(inverse_transform(f), _rank(f))))


def lp_norm(f: Field, p: float) -> float:
    if not p >= 1:
        raise ConfigurationError(f"Lp exponent must be >= 1, got {p}")
    if math.isinf(p):
        return linf_norm(f)
    m = _magnitude(inverse_transform(f), _rank(f))
    return _sum(m**p / m.size) ** (1.0 / p)


def besov0_inf_inf(f: Field) -> float:
    """``sup_j ||Delta_j f||_{L^inf}`` over the sharp dyadic blocks."""
    return max(linf_norm(b) for b in lp_blocks(f))


def dyadic_levels(grid: Grid) -> list[int]:
    """Levels ``m`` whose aligned cubes have an integer side of at least 2 points."""
    levels = []
    m = 0
    while grid.n % (2**m) == 0 and grid.n // 2**m >= 2:
        levels.append(m)
        m += 1
    return levels


def bmo_approx(f: Field) -> float:
    """Largest mean oscillation over the aligned dyadic cube hierarchy.

    The global mean is removed first (BMO is modulo constants); cube sides are
    ``2*pi/2^m`` and each cube's oscillation is ``mean |f - f_Q|`` with the
    Euclidean magnitude for vector fields.
    """
    rank = _rank(f)
    x = inverse_transform(f)
    if rank:
        x = x - x.mean(axis=tuple(range(1, x.ndim)), keepdims=True)
    else:
        x = x[None] - x.mean()
    g = f.grid
    best = 0.0
    for m in dyadic_levels(g):
        q, side = 2**m, g.n // 2**m
        split = (x.shape[0],) + (q, side) * g.dim
        cell_axes = tuple(2 + 2 * i for i in range(g.dim))
        xs = x.reshape(split)
        dev = xs - xs.mean(axis=cell_axes, keepdims=True)
        osc = np.sqrt(np.sum(dev**2, axis=0)).mean(axis=tuple(a - 1 for a in cell_axes))
        best = max(best, float(np.max(osc)))
    return best


def norm_suite(f: Field, kind: str, *, s: float | None = None, p: float | None = None) -> float:
    """Evaluate one of ``l2, hs, lp, linf, besov, bmo`` on ``f``."""
    kind = kind.lower()
    if kind == "l2":
        return l2_norm(f)
    if kind == "hs":
        if s is None:
            raise UsageError("hs norm needs s")
        return hs_norm(f, s)
    if kind == "lp":
        if p is None:
            raise UsageError("lp norm needs p")
        return lp_norm(f, p)
    if kind == "linf":
        return linf_norm(f)
    if kind == "besov":
        return besov0_inf_inf(f)
    if kind == "bmo":
        return bmo_approx(f)
    raise UsageError(f"unknown norm {kind!r}")


def support_radius(f: Field) -> float:
    """Largest ``|k|`` carrying a nonzero coefficient (0 for the zero field)."""
    c = np.asarray(f.coeffs)
    nz = np.abs(c) > 0
    if c.ndim > f.grid.dim:
        nz = np.any(nz, axis=0)
    return float(np.max(f.grid.kmag[nz])) if np.any(nz) else 0.0


def support_cube(f: Field) -> int:
    """Largest ``|k_i|`` carrying a nonzero coefficient."""
    c = np.asarray(f.coeffs)
    nz = np.abs(c) > 0
    if c.ndim > f.grid.dim:
        nz = np.any(nz, axis=0)
    if not np.any(nz):
        return 0
    return int(np.max(np.abs(f.grid.k[:, nz])))
