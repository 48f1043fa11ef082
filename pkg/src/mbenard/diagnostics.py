"""Energy functionals, blow-up integrals and inequality probes.

``Y`` is the L2 energy ``|u|^2 + |theta|^2 + |b|^2`` and ``X`` the H^s energy.
The BKM accumulator integrates, with the trapezoidal rule, the critical norms
of vorticity, current and temperature gradient in three flavors: sampled
``L^inf``, the Besov ``B^0_{inf,inf}`` proxy and the dyadic BMO surrogate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import spectral as sp
from .dynamics import SimConfig, State, forcing_power, rhs
from .errors import ContractViolation, DataValidationError, UsageError

FLAVORS = ("linf", "besov", "bmo")
CSV_COLUMNS = (
    "t",
    "Y",
    "X",
    "vort_linf",
    "vort_besov",
    "vort_bmo",
    "current_linf",
    "current_besov",
    "current_bmo",
    "gradtheta_linf",
    "gradtheta_besov",
    "gradtheta_bmo",
    "bkm_full",
    "bkm_relaxed",
    "residual",
)
BLOWN = "blown"


@dataclass(frozen=True)
class NormTriple:
    linf: float
    besov: float
    bmo: float

    def get(self, flavor: str) -> float:
        return getattr(self, flavor)

    @classmethod
    def of(cls, f) -> "NormTriple":
        return cls(sp.linf_norm(f), sp.besov0_inf_inf(f), sp.bmo_approx(f))


@dataclass(frozen=True)
class BkmSample:
    t: float
    vort: NormTriple
    current: NormTriple
    gradtheta: NormTriple


@dataclass(frozen=True)
class DiagRecord:
    t: float
    Y: float
    X: float
    vort: NormTriple
    current: NormTriple
    gradtheta: NormTriple
    gradu_linf: float
    bkm_full: dict
    bkm_relaxed: dict
    energy_identity_residual: float
    flavor: str = "besov"

    def row(self) -> list[float]:
        vals = [self.t, self.Y, self.X]
        for tr in (self.vort, self.current, self.gradtheta):
            vals += [tr.linf, tr.besov, tr.bmo]
        vals += [self.bkm_full[self.flavor], self.bkm_relaxed[self.flavor], self.energy_identity_residual]
        return vals

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "Y": self.Y,
            "X": self.X,
            "vort": vars(self.vort),
            "current": vars(self.current),
            "gradtheta": vars(self.gradtheta),
            "gradu_linf": self.gradu_linf,
            "bkm_full": dict(self.bkm_full),
            "bkm_relaxed": dict(self.bkm_relaxed),
            "energy_identity_residual": self.energy_identity_residual,
            "flavor": self.flavor,
        }


def format_row(values) -> str:
    return ",".join(f"{v:.17g}" for v in values)


# ---------------------------------------------------------------------------
# energies

def energy_functionals(state: State, s: float) -> tuple[float, float]:
    Y = sp.l2_norm(state.u) ** 2 + sp.l2_norm(state.theta) ** 2 + sp.l2_norm(state.b) ** 2
    X = sp.hs_norm(state.u, s) ** 2 + sp.hs_norm(state.theta, s) ** 2 + sp.hs_norm(state.b, s) ** 2
    return Y, X


def energy_identity_residual(state: State, cfg: SimConfig) -> float:
    """``(du,u) + (dtheta,theta) + (db,b) - (theta e_n, u) - (u.e_n, theta)``."""
    tend = rhs(state, cfg)
    power = sp.inner(tend.du, state.u) + sp.inner(tend.dtheta, state.theta) + sp.inner(tend.db, state.b)
    return power - forcing_power(state, cfg)


@dataclass(frozen=True)
class Verdict:
    passed: bool
    worst_margin: float
    detail: dict = field(default_factory=dict)


def l2_growth_bound_check(ts, Ys, tol: float = 1e-6) -> Verdict:
    """Check ``Y(t) <= Y(0) exp(2t) (1 + tol)`` at every sample.

    ``worst_margin`` is ``max Y(t) / (Y(0) exp(2t)) - 1``; the check passes when
    it does not exceed ``tol``.
    """
    ts = np.asarray(ts, dtype=float)
    Ys = np.asarray(Ys, dtype=float)
    if ts.size == 0 or ts.size != Ys.size:
        raise UsageError("need matching, non-empty time and energy samples")
    Y0 = Ys[0]
    if Y0 == 0.0:
        ok = bool(np.all(Ys == 0.0))
        return Verdict(ok, 0.0 if ok else math.inf)
    ratio = Ys / (Y0 * np.exp(2.0 * (ts - ts[0])))
    margin = float(np.max(ratio) - 1.0)
    return Verdict(margin <= tol, margin, {"tol": tol, "t_worst": float(ts[int(np.argmax(ratio))])})


def bihari_bound(X0: float, C: float, t: float):
    """Upper bound on the H^s energy from the Bihari inequality, or ``"blown"``."""
    if t < 0:
        raise UsageError("time must be non-negative")
    if X0 < 0 or not C > 0:
        raise UsageError("need X0 >= 0 and C > 0")
    a = 1.5 * C * C + X0
    denom = 1.0 - a * (1.5 + C) * t
    if denom <= 0:
        return BLOWN
    return a / denom


def bihari_pole(X0: float, C: float) -> float:
    return 1.0 / ((1.5 * C * C + X0) * (1.5 + C))


# ---------------------------------------------------------------------------
# BKM integrands and accumulation

def bkm_fields(state: State):
    """Vorticity, current and temperature gradient as spectral fields."""
    return sp.curl(state.u), sp.curl(state.b), sp.gradient(state.theta)


def bkm_integrands(state: State) -> BkmSample:
    w, j, gt = bkm_fields(state)
    return BkmSample(state.t, NormTriple.of(w), NormTriple.of(j), NormTriple.of(gt))


@dataclass(frozen=True)
class BkmAccumulator:
    """Trapezoidal time integrals of the full and relaxed BKM integrands per flavor."""

    t_last: float | None = None
    last_full: dict = field(default_factory=dict)
    last_relaxed: dict = field(default_factory=dict)
    integral_full: dict = field(default_factory=lambda: {f: 0.0 for f in FLAVORS})
    integral_relaxed: dict = field(default_factory=lambda: {f: 0.0 for f in FLAVORS})

    def to_dict(self) -> dict:
        return {
            "t_last": self.t_last,
            "last_full": dict(self.last_full),
            "last_relaxed": dict(self.last_relaxed),
            "integral_full": dict(self.integral_full),
            "integral_relaxed": dict(self.integral_relaxed),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BkmAccumulator":
        return cls(**{k: (dict(v) if isinstance(v, dict) else v) for k, v in d.items()})


def _integrands(sample: BkmSample) -> tuple[dict, dict]:
    full, relaxed = {}, {}
    for fl in FLAVORS:
        w, j, g = sample.vort.get(fl), sample.current.get(fl), sample.gradtheta.get(fl)
        relaxed[fl] = w + j
        full[fl] = w + g + j
    return full, relaxed


def bkm_accumulate(acc: BkmAccumulator, sample: BkmSample) -> BkmAccumulator:
    full, relaxed = _integrands(sample)
    if acc.t_last is None:
        return replace(acc, t_last=sample.t, last_full=full, last_relaxed=relaxed)
    if not sample.t > acc.t_last:
        raise UsageError(f"sample time {sample.t} does not advance past {acc.t_last}")
    h = sample.t - acc.t_last
    int_full = {fl: acc.integral_full[fl] + 0.5 * h * (acc.last_full[fl] + full[fl]) for fl in FLAVORS}
    int_rel = {fl: acc.integral_relaxed[fl] + 0.5 * h * (acc.last_relaxed[fl] + relaxed[fl]) for fl in FLAVORS}
    return BkmAccumulator(sample.t, full, relaxed, int_full, int_rel)


def trapezoid_integral(ts, values) -> float:
    """Running trapezoid through :func:`bkm_accumulate`'s update rule (final value)."""
    total = 0.0
    for i in range(1, len(ts)):
        total += 0.5 * (ts[i] - ts[i - 1]) * (values[i - 1] + values[i])
    return total


# ---------------------------------------------------------------------------
# monitor

class Monitor:
    """Produces :class:`DiagRecord` samples in time order and owns the BKM accumulator."""

    def __init__(self, cfg: SimConfig, flavor: str = "besov", acc: BkmAccumulator | None = None):
        if flavor not in FLAVORS:
            raise UsageError(f"norm flavor must be one of {FLAVORS}, got {flavor!r}")
        self.cfg = cfg
        self.flavor = flavor
        self.acc = acc or BkmAccumulator()

    def sample(self, state: State) -> DiagRecord:
        Y, X = energy_functionals(state, self.cfg.s)
        bk = bkm_integrands(state)
        self.acc = bkm_accumulate(self.acc, bk)
        gradu = sp.jacobian(state.u)
        gradu_phys = sp._ifft(gradu, state.grid.dim)
        gradu_linf = float(np.max(np.sqrt(np.sum(gradu_phys**2, axis=(0, 1)))))
        return DiagRecord(
            t=state.t,
            Y=Y,
            X=X,
            vort=bk.vort,
            current=bk.current,
            gradtheta=bk.gradtheta,
            gradu_linf=gradu_linf,
            bkm_full=dict(self.acc.integral_full),
            bkm_relaxed=dict(self.acc.integral_relaxed),
            energy_identity_residual=energy_identity_residual(state, self.cfg),
            flavor=self.flavor,
        )

    def to_dict(self) -> dict:
        return {"flavor": self.flavor, "acc": self.acc.to_dict()}

    @classmethod
    def from_dict(cls, cfg: SimConfig, d: dict) -> "Monitor":
        return cls(cfg, d["flavor"], BkmAccumulator.from_dict(d["acc"]))


def gradtheta_bootstrap_check(records, k_max: float = 1e3) -> Verdict:
    """Fit ``K`` in ``|grad theta(t)|_inf <= K |grad theta_0|_inf exp(int_0^t |grad u|_inf)``."""
    if len(records) < 1:
        raise UsageError("need at least one diagnostic sample")
    ts = [r.t for r in records]
    g = np.array([r.gradtheta.linf for r in records])
    gu = [r.gradu_linf for r in records]
    expo = np.array([trapezoid_integral(ts[: i + 1], gu[: i + 1]) for i in range(len(ts))])
    g0 = g[0]
    if g0 == 0.0:
        if np.all(g == 0.0):
            return Verdict(True, 1.0, {"K": 1.0})
        return Verdict(False, math.inf, {"K": math.inf, "note": "grad theta_0 vanishes but grad theta does not"})
    K = float(np.max(g / (g0 * np.exp(expo))))
    return Verdict(K < k_max, K, {"K": K, "k_max": k_max})


# ---------------------------------------------------------------------------
# inequality probes

def _mean_zero(f, tol=1e-12) -> bool:
    c = np.asarray(f.coeffs)
    c0 = c[(...,) + (0,) * f.grid.dim]
    scale = float(np.max(np.abs(c))) if c.size else 0.0
    return bool(np.all(np.abs(c0) <= tol * max(scale, 1e-300)))


def log_plus(a: float) -> float:
    return math.log(a) if a >= 1.0 else 0.0


def probe_log_sobolev(f, s: float, p: float) -> float:
    """``|f|_inf / (1 + |f|_BMO (1 + log+ |J^s f|_{L^p}))`` for mean-zero ``f``."""
    if not s * p > f.grid.dim:
        raise UsageError(f"need s*p > dim, got s={s}, p={p}")
    if sp.l2_norm(f) == 0.0:
        raise DataValidationError("ratio undefined for the zero field")
    if not _mean_zero(f):
        raise ContractViolation("log-Sobolev probe needs a mean-zero field")
    wsp = sp.lp_norm(sp.bessel_potential(f, s), p)
    return sp.linf_norm(f) / (1.0 + sp.bmo_approx(f) * (1.0 + log_plus(wsp)))


def _pointwise_max(x: np.ndarray, lead: int) -> float:
    axes = tuple(range(lead))
    return float(np.max(np.sqrt(np.sum(x**2, axis=axes)))) if lead else float(np.max(np.abs(x)))


def kato_ponce_terms(f, g, s: float):
    """Commutator norm and the two product terms of the Kato-Ponce bound."""
    from .dynamics import commutator_js

    comm = sp.l2_norm(commutator_js(f, g, s))
    if isinstance(f, sp.SpectralVector):
        gf = sp._ifft(sp.jacobian(f), f.grid.dim)
        grad_f_inf = _pointwise_max(gf, 2)
    else:
        grad_f_inf = sp.linf_norm(sp.gradient(f))
    if isinstance(g, sp.SpectralVector):
        jac = sp.jacobian(g)
        grad_g = jac
        lead = 2
    else:
        grad_g = 1j * g.grid.k_deriv * g.coeffs
        lead = 1
    w = (1.0 + g.grid.ksq) ** (0.5 * (s - 1))
    js1_grad_g = math.sqrt(sp._sum(np.abs(w * grad_g) ** 2))
    grad_g_inf = _pointwise_max(sp._ifft(grad_g, g.grid.dim), lead)
    return comm, grad_f_inf * js1_grad_g, sp.hs_norm(f, s) * grad_g_inf


def probe_kato_ponce(f, g, s: float) -> float:
    """``|[J^s,f] grad g|_2 / (|grad f|_inf |J^{s-1} grad g|_2 + |J^s f|_2 |grad g|_inf)``."""
    comm, a, b = kato_ponce_terms(f, g, s)
    if a + b == 0.0:
        raise DataValidationError("Kato-Ponce denominator vanishes")
    return comm / (a + b)


def probe_interpolation(f, s: float, s_prime: float) -> float:
    """``|f|_{H^s'} / (|f|_2^{1-s'/s} |f|_{H^s}^{s'/s})``; never exceeds 1."""
    if not 0 < s_prime < s:
        raise UsageError("need 0 < s' < s")
    th = s_prime / s
    den = sp.l2_norm(f) ** (1 - th) * sp.hs_norm(f, s) ** th
    if den == 0.0:
        raise DataValidationError("ratio undefined for the zero field")
    return sp.hs_norm(f, s_prime) / den


def gn_exponents(dim: int, p: float) -> tuple[float, float]:
    """Exponents ``(L2, H3)`` in ``|grad g|_p <= C |g|_2^a |g|_{H^3}^b`` (j=1, m=3, q=r=2)."""
    if dim == 2:
        return (2 + p) / (3 * p), (2 * p - 2) / (3 * p)
    return (6 + p) / (6 * p), (5 * p - 6) / (6 * p)


def probe_gagliardo_nirenberg(g: sp.SpectralScalar, p: float) -> float:
    if not p >= 2:
        raise UsageError("need p >= 2")
    a, b = gn_exponents(g.grid.dim, p)
    den = sp.l2_norm(g) ** a * sp.hs_norm(g, 3.0) ** b
    if den == 0.0:
        raise DataValidationError("ratio undefined for the zero field")
    return sp.lp_norm(sp.gradient(g), p) / den
