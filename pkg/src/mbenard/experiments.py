"""Desk-scale studies: convergence in the truncation radius, truncation decay,
blow-up monitoring campaigns and inequality probe ensembles.

Every study can write its outputs under one directory: ``manifest.json``
(the resolved inputs), one CSV per member run and ``summary.json``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy.fft as sfft

from . import diagnostics as dg
from . import spectral as sp
from .dynamics import SimConfig, State
from .errors import ConfigurationError, InstabilityError, UsageError
from .integrate import CsvSink, InitialSpec, random_band_scalar, random_band_vector, run, shared_initial, step_rk4, truncate_state
from .spectral import Grid, SpectralScalar

EXACT = "exact"
SATISFIED = "continuation criterion satisfied on [0, t_end]"
FLAGGED = "numerical blow-up flagged before t_end"


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.generic):
        return x.item()
    return x


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _write_csv(path, echo: dict, header, rows) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for line in json.dumps(_jsonable(echo), sort_keys=True, indent=1).splitlines():
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in r])
    return path


def fit_power_law(xs, ys):
    """Least-squares slope of ``log y`` against ``log x`` over the positive ``y``."""
    pts = [(math.log(x), math.log(y)) for x, y in zip(xs, ys) if y > 0]
    if len(pts) < 2:
        return None
    lx, ly = np.array(pts).T
    return float(np.polyfit(lx, ly, 1)[0])


# ---------------------------------------------------------------------------
# convergence in R

@dataclass
class ConvergenceReport:
    R_list: list
    sample_times: list
    sample_every: int
    pairs: list            # consecutive (R_i, R_{i+1})
    D: list                # sup_t of summed L2 differences per pair
    D_fields: list         # per pair {"u", "theta", "b"} sup_t L2 differences
    D_hs_prime: list       # per pair sup_t H^{s'} difference, measured
    D_hs_prime_bound: list  # per pair sup_t interpolation bound |d|_2^{1-s'/s} |d|_{H^s}^{s'/s}
    s: float
    s_prime: float
    epsilon_hat: object    # float, or "exact" when every D vanishes
    admissible_epsilon: tuple
    config: dict = field(default_factory=dict)
    init: dict = field(default_factory=dict)

    @property
    def monotone_decreasing(self) -> bool:
        return all(b < a for a, b in zip(self.D, self.D[1:]))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["monotone_decreasing"] = self.monotone_decreasing
        return d


def _trajectory(cfg: SimConfig, state: State, sample_every: int) -> list[State]:
    """Fixed-step RK4 from ``state`` to ``cfg.t_end``; every ``sample_every``-th state plus the last."""
    dt = cfg.dt_policy.dt
    nsteps = max(0, round(cfg.t_end / dt))
    if not math.isclose(nsteps * dt, cfg.t_end, rel_tol=1e-12, abs_tol=1e-15):
        raise ConfigurationError(f"t_end={cfg.t_end} is not a whole number of steps dt={dt}")
    out = [state]
    with sfft.set_workers(cfg.workers):
        for n in range(1, nsteps + 1):
            new = step_rk4(state, dt, cfg)
            state = State(new.u, new.theta, new.b, n * dt)
            if n % sample_every == 0 or n == nsteps:
                out.append(state)
    return out


def convergence_study(
    cfg: SimConfig,
    R_list,
    init: InitialSpec,
    *,
    sample_every: int = 1,
    s_prime: float = 1.0,
    out_dir=None,
) -> ConvergenceReport:
    """Run shared initial data at each radius in ``R_list`` on ``cfg.grid``.

    The untruncated data is built once (band defaults to ``N/3``) and each
    member starts from its ``S_R`` truncation.  ``D`` compares consecutive
    radii, ``sup_t (|u^R - u^R'|_2 + |theta^R - theta^R'|_2 + |b^R - b^R'|_2)``
    over the shared sample times.  Needs a fixed time step.
    """
    R_list = [float(r) for r in R_list]
    if len(R_list) < 2:
        raise ConfigurationError("need at least two radii")
    if any(b < a for a, b in zip(R_list, R_list[1:])):
        raise ConfigurationError(f"R_list must be non-decreasing, got {R_list}")
    if cfg.dt_policy.kind != "fixed":
        raise ConfigurationError("convergence study needs a fixed time step so samples coincide")
    if sample_every < 1:
        raise ConfigurationError("sample_every must be >= 1")
    if not 0 < s_prime < cfg.s:
        raise ConfigurationError(f"need 0 < s' < s, got s'={s_prime}")
    members = {R: cfg.with_(R=R) for R in R_list}  # validates every radius against the grid
    u0 = shared_initial(init, cfg)
    trajs = {}
    for R in dict.fromkeys(R_list):
        trajs[R] = _trajectory(members[R], truncate_state(u0, R), sample_every)
    times = [st.t for st in trajs[R_list[0]]]

    pairs, D, D_fields, D_sp, D_bd = [], [], [], [], []
    th = s_prime / cfg.s
    for Ra, Rb in zip(R_list, R_list[1:]):
        sup_tot, sup_sp, sup_bd = 0.0, 0.0, 0.0
        sup_f = {"u": 0.0, "theta": 0.0, "b": 0.0}
        for xa, xb in zip(trajs[Ra], trajs[Rb]):
            diffs = {"u": xa.u - xb.u, "theta": xa.theta - xb.theta, "b": xa.b - xb.b}
            l2 = {k: sp.l2_norm(v) for k, v in diffs.items()}
            for k in sup_f:
                sup_f[k] = max(sup_f[k], l2[k])
            sup_tot = max(sup_tot, l2["u"] + l2["theta"] + l2["b"])
            sup_sp = max(sup_sp, sum(sp.hs_norm(v, s_prime) for v in diffs.values()))
            sup_bd = max(sup_bd, sum(l2[k] ** (1 - th) * sp.hs_norm(v, cfg.s) ** th for k, v in diffs.items()))
        pairs.append([Ra, Rb])
        D.append(sup_tot)
        D_fields.append(sup_f)
        D_sp.append(sup_sp)
        D_bd.append(sup_bd)

    if all(d == 0.0 for d in D):
        eps = EXACT
    else:
        slope = fit_power_law([p[0] for p in pairs], D)
        eps = None if slope is None else -slope
    rep = ConvergenceReport(
        R_list=R_list,
        sample_times=times,
        sample_every=sample_every,
        pairs=pairs,
        D=D,
        D_fields=D_fields,
        D_hs_prime=D_sp,
        D_hs_prime_bound=D_bd,
        s=cfg.s,
        s_prime=s_prime,
        epsilon_hat=eps,
        admissible_epsilon=(0.0, cfg.s - 1.0),
        config=cfg.to_dict(),
        init=init.to_dict(),
    )
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        echo = {"study": "convergence", "config": rep.config, "init": rep.init, "R_list": R_list,
                "sample_every": sample_every, "s_prime": s_prime}
        write_json(out / "manifest.json", echo)
        for R in dict.fromkeys(R_list):
            rows = []
            for st in trajs[R]:
                rows.append([st.t, sp.l2_norm(st.u), sp.l2_norm(st.theta), sp.l2_norm(st.b),
                             sp.hs_norm(st.u, cfg.s), sp.support_radius(st.u)])
            _write_csv(out / f"run_R{R:g}.csv", {**echo, "R": R},
                       ["t", "u_l2", "theta_l2", "b_l2", "u_hs", "u_support"], rows)
        write_json(out / "summary.json", {"manifest": echo, "report": rep.to_dict()})
    return rep


# ---------------------------------------------------------------------------
# truncation decay

@dataclass
class DecayReport:
    a: float | None
    s: float
    k: float
    R_list: list
    errors: list            # |S_R f - f|_{H^s} / |f|_{H^{s+k}}
    fitted_order: object    # float, "exact" or None
    bound_constant: float   # max_R error * R^k
    dim: int
    N: int

    def to_dict(self) -> dict:
        return asdict(self)


def truncation_decay_study(
    a: float | None,
    s: float,
    k: float,
    R_list,
    grid: Grid = Grid(2, 256),
    *,
    seed: int = 0,
    f: SpectralScalar | None = None,
    out_dir=None,
) -> DecayReport:
    """Measure ``|S_R f - f|_{H^s} / |f|_{H^{s+k}}`` and fit its order in ``R``.

    ``f`` defaults to a seeded scalar with coefficient magnitude ``|k|^-a`` on
    the whole lattice; ``a`` must exceed ``s + k + dim/2`` so that ``f`` stays
    in ``H^{s+k}`` as the lattice grows.
    """
    R_list = [float(r) for r in R_list]
    if f is None:
        if a is None or a <= s + k + grid.dim / 2:
            raise ConfigurationError(
                f"spectrum exponent a={a} gives a divergent H^(s+k) norm; need a > s + k + dim/2 = {s + k + grid.dim / 2}"
            )
        f = random_band_scalar(grid, a, grid.n * math.sqrt(grid.dim), np.random.default_rng(seed))
    else:
        grid = f.grid
    ref = sp.hs_norm(f, s + k)
    if ref == 0.0:
        raise ConfigurationError("the zero field has no decay to measure")
    errs = [sp.hs_norm(f - sp.truncate(f, R), s) / ref for R in R_list]
    if all(e == 0.0 for e in errs):
        order = EXACT
    else:
        slope = fit_power_law(R_list, errs)
        order = None if slope is None else -slope
    rep = DecayReport(a, s, k, R_list, errs, order, max(e * R**k for e, R in zip(errs, R_list)), grid.dim, grid.n)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        echo = {"study": "truncation_decay", "a": a, "s": s, "k": k, "R_list": R_list, "dim": grid.dim,
                "N": grid.n, "seed": seed}
        write_json(out / "manifest.json", echo)
        _write_csv(out / "decay.csv", echo, ["R", "error", "error_times_R_k"],
                   [[R, e, e * R**k] for R, e in zip(R_list, errs)])
        write_json(out / "summary.json", {"manifest": echo, "report": rep.to_dict()})
    return rep


# ---------------------------------------------------------------------------
# blow-up campaigns

@dataclass
class CampaignReport:
    verdict: str
    satisfied: bool
    termination: str
    flavor: str
    t_end: float
    t_reached: float
    blowup_time: float | None
    integrals_finite: bool
    bkm_profile: list       # [t, full, relaxed] per sample, headline flavor
    final_integrals: dict
    events: list            # time-ordered
    l2_growth: dict
    bootstrap: dict
    config: dict
    init: dict
    run: dict

    def to_dict(self) -> dict:
        return asdict(self)


def blowup_study(cfg: SimConfig, init: InitialSpec, flavor: str = "besov", *, out_dir=None,
                 diag_every: int = 1) -> CampaignReport:
    """Run with BKM accumulation and turn the outcome into a continuation verdict.

    Numerical blow-up is recorded in the report instead of propagating.
    """
    if flavor not in dg.FLAVORS:
        raise UsageError(f"norm flavor must be one of {dg.FLAVORS}, got {flavor!r}")
    sinks = []
    echo = {"study": "blowup", "config": cfg.to_dict(), "init": init.to_dict(), "flavor": flavor,
            "diag_every": diag_every}
    out = None
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / "manifest.json", echo)
        sinks.append(CsvSink(out / "run.csv", echo))
    blow_t = None
    try:
        _, report = run(cfg, init, sinks, diag_every=diag_every, norm_flavor=flavor)
    except InstabilityError as exc:
        report = exc.report
        blow_t = exc.t
    finally:
        for s in sinks:
            s.close()
    recs = report.records
    prof = [[r.t, r.bkm_full[flavor], r.bkm_relaxed[flavor]] for r in recs]
    finite = all(math.isfinite(v) for _, a, b in prof for v in (a, b))
    ok = report.termination == "t_end" and finite
    events = [{"event": "start", "t": recs[0].t if recs else 0.0}]
    if recs:
        events.append({"event": "last_sample", "t": recs[-1].t})
    events += [dict(e) for e in report.events]
    events.append({"event": "stop", "t": report.t_final, "termination": report.termination})
    events.sort(key=lambda e: e["t"])
    l2 = dg.l2_growth_bound_check([r.t for r in recs], [r.Y for r in recs]) if recs else None
    boot = dg.gradtheta_bootstrap_check(recs) if recs else None
    rep = CampaignReport(
        verdict=SATISFIED if ok else FLAGGED,
        satisfied=ok,
        termination=report.termination,
        flavor=flavor,
        t_end=cfg.t_end,
        t_reached=report.t_final,
        blowup_time=blow_t,
        integrals_finite=finite,
        bkm_profile=prof,
        final_integrals={"full": recs[-1].bkm_full, "relaxed": recs[-1].bkm_relaxed} if recs else {},
        events=events,
        l2_growth=asdict(l2) if l2 else {},
        bootstrap=asdict(boot) if boot else {},
        config=cfg.to_dict(),
        init=init.to_dict(),
        run=report.to_dict(),
    )
    if out is not None:
        write_json(out / "summary.json", {"manifest": echo, "report": rep.to_dict()})
    return rep


# ---------------------------------------------------------------------------
# inequality probe ensembles

@dataclass
class ProbeReport:
    probe: str
    params: dict
    by_n: dict              # N -> {"max", "min", "mean", "count"}
    growth: float | None    # max ratio at the largest N over the smallest, minus 1
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["by_n"] = {str(k): v for k, v in self.by_n.items()}
        return d


def _stats(r) -> dict:
    r = np.asarray(r, dtype=float)
    return {"max": float(r.max()), "min": float(r.min()), "mean": float(r.mean()), "count": int(r.size)}


def _growth(by_n: dict):
    ns = sorted(by_n)
    if len(ns) < 2:
        return None
    return by_n[ns[-1]]["max"] / by_n[ns[0]]["max"] - 1.0


def safe_band(n: int) -> int:
    """Largest integer band whose fields keep ``3 * max|k_i| < N``."""
    return (n - 1) // 3


def kato_ponce_ensemble(dim: int = 2, n_list=(16, 32), count: int = 50, s: float = 3.0,
                        a: float = 1.0, seed: int = 0) -> ProbeReport:
    """Max of ``|[J^s, f.grad] g|_2 / (|grad f|_inf |J^{s-1} grad g|_2 + |J^s f|_2 |grad g|_inf)``.

    ``f`` is a solenoidal vector field and ``g`` a scalar, both seeded with
    spectrum ``|k|^-a`` up to the dealias-safe band of each grid.
    """
    by_n = {}
    for n in n_list:
        grid = Grid(dim, n)
        band = safe_band(n)
        rng = np.random.default_rng(seed)
        ratios = []
        for _ in range(count):
            f = random_band_vector(grid, a, band, rng)
            g = random_band_scalar(grid, a, band, rng)
            ratios.append(dg.probe_kato_ponce(f, g, s))
        by_n[n] = _stats(ratios)
    return ProbeReport("kato_ponce", {"dim": dim, "n_list": list(n_list), "count": count, "s": s, "a": a,
                                      "seed": seed, "band": "floor((N-1)/3)"}, by_n, _growth(by_n))


def log_sobolev_ensemble(dim: int = 2, n_list=(16, 32), count: int = 100, s: float = 2.0, p: float = 2.0,
                         a: float = 1.0, seed: int = 0) -> ProbeReport:
    """Max log-Sobolev ratio over seeded mean-zero fields with band ``N/3``."""
    by_n = {}
    for n in n_list:
        grid = Grid(dim, n)
        rng = np.random.default_rng(seed)
        ratios = [dg.probe_log_sobolev(random_band_scalar(grid, a, n / 3, rng), s, p) for _ in range(count)]
        by_n[n] = _stats(ratios)
    return ProbeReport("log_sobolev", {"dim": dim, "n_list": list(n_list), "count": count, "s": s, "p": p,
                                       "a": a, "seed": seed, "band": "N/3"}, by_n, _growth(by_n))


def log_sobolev_amplitude_sweep(f: SpectralScalar, s: float = 2.0, p: float = 2.0,
                                exponents=range(-4, 9)) -> list:
    """``[(2^e, ratio(2^e f))]`` over the amplitude sweep."""
    return [(2.0**e, dg.probe_log_sobolev((2.0**e) * f, s, p)) for e in exponents]


def random_lattice_scalar(grid: Grid, rng: np.random.Generator) -> SpectralScalar:
    """Real field with independent Gaussian coefficients times a random power law and random sparsity."""
    a = rng.uniform(0.0, 4.0)
    keep = rng.uniform(0.05, 1.0)
    x = rng.standard_normal(grid.shape)
    c = sp._fft(x[None], tuple(range(1, grid.dim + 1)))[0]
    w = np.power(1.0 + grid.ksq, -0.5 * a)
    mask = rng.random(grid.shape) < keep
    mask = mask | sp._mirror(mask[None], tuple(range(1, grid.dim + 1)))[0]
    return SpectralScalar(grid, np.where(mask, c * w, 0.0))


def interpolation_ensemble(count: int = 10_000, dims=(2, 3), n: int = 8, s: float = 3.0, s_prime: float = 1.0,
                           seed: int = 0) -> ProbeReport:
    """Ratio ``|f|_{H^s'} / (|f|_2^{1-s'/s} |f|_{H^s}^{s'/s})`` over random lattice fields.

    Also checks every single lattice mode (with its Hermitian partner), where the
    ratio equals 1 when the modes share ``|k|``.
    """
    rng = np.random.default_rng(seed)
    ratios = []
    per = {d: count // len(dims) + (1 if i < count % len(dims) else 0) for i, d in enumerate(dims)}
    single = []
    for d in dims:
        grid = Grid(d, n)
        drawn = 0
        while drawn < per[d]:
            f = random_lattice_scalar(grid, rng)
            if sp.l2_norm(f) > 0:  # sparse draws can come out empty
                ratios.append(dg.probe_interpolation(f, s, s_prime))
                drawn += 1
        for idx in np.ndindex(grid.shape):
            c = np.zeros(grid.shape, complex)
            c[idx] = 1.0
            mirror = sp._mirror(c[None], tuple(range(1, d + 1)))[0]
            f = SpectralScalar(grid, c + mirror if mirror[idx] == 0 else c)
            single.append(abs(dg.probe_interpolation(f, s, s_prime) - 1.0))
    by_n = {n: _stats(ratios)}
    return ProbeReport("interpolation", {"dims": list(dims), "n": n, "count": count, "s": s, "s_prime": s_prime,
                                         "seed": seed}, by_n, None,
                       {"single_mode_max_deviation": float(max(single)), "single_modes": len(single)})


def gagliardo_nirenberg_ensemble(dim: int = 2, n_list=(16, 32), count: int = 50, p_list=(2.0, 4.0, 8.0),
                                 a: float = 1.0, seed: int = 0) -> ProbeReport:
    """Empirical constants in ``|grad g|_p <= C |g|_2^alpha |g|_{H^3}^beta``."""
    by_n = {}
    per_p = {}
    for n in n_list:
        grid = Grid(dim, n)
        rng = np.random.default_rng(seed)
        fields = [random_band_scalar(grid, a, n / 3, rng) for _ in range(count)]
        allr = []
        for p in p_list:
            r = [dg.probe_gagliardo_nirenberg(g, p) for g in fields]
            per_p[f"N={n},p={p:g}"] = _stats(r)
            allr += r
        by_n[n] = _stats(allr)
    return ProbeReport("gagliardo_nirenberg", {"dim": dim, "n_list": list(n_list), "count": count,
                                               "p_list": list(p_list), "a": a, "seed": seed}, by_n,
                       _growth(by_n), {"per_p": per_p})


# ---------------------------------------------------------------------------
# re-analysis of stored checkpoints

@dataclass
class Analysis:
    records: list
    paths: list
    flavor: str
    config: dict
    bkm_consistent: bool      # recomputed integrals equal the stored accumulator wherever both exist
    bkm_mismatches: list
    max_relative_residual: float
    max_divergence: float
    l2_growth: dict
    bootstrap: dict

    def to_dict(self) -> dict:
        d = asdict(self)
        d["records"] = [r.to_dict() for r in self.records]
        return d


def analyze_checkpoints(paths, flavor: str | None = None) -> Analysis:
    """Recompute diagnostic records from checkpoints of one run, in time order.

    BKM integrals are re-accumulated from the first checkpoint on.  When the
    first checkpoint is the initial state of a fresh run, every value is
    recomputed from scratch; otherwise the first record takes its integrals
    from the stored accumulator.  With checkpoints at every diagnostic sample
    the records equal the run's own, bit for bit.
    """
    from .integrate import load_checkpoint

    loaded = []
    for p in paths:
        state, header = load_checkpoint(p)
        loaded.append((state.t, str(p), state, header))
    if not loaded:
        raise UsageError("no checkpoints to analyze")
    loaded.sort(key=lambda x: x[0])
    cfg = SimConfig.from_dict(loaded[0][3]["config"])
    for _, p, st, h in loaded:
        if SimConfig.from_dict(h["config"]).with_(t_end=cfg.t_end) != cfg:
            raise ConfigurationError(f"{p} belongs to a different configuration")
    run0 = loaded[0][3].get("run", {})
    stored0 = run0.get("monitor")
    fl = flavor or (stored0["flavor"] if stored0 else "besov")
    records, mismatches = [], []
    monitor = None
    max_res, max_div = 0.0, 0.0
    with sfft.set_workers(cfg.workers):
        for i, (t, p, state, header) in enumerate(loaded):
            stored = header.get("run", {}).get("monitor")
            stored_acc = dg.BkmAccumulator.from_dict(stored["acc"]) if stored else None
            if monitor is None:
                fresh = header.get("run", {}).get("step", None) == 0 or stored_acc is None
                if fresh:
                    monitor = dg.Monitor(cfg, fl)
                    rec = monitor.sample(state)
                elif stored_acc.t_last is not None and stored_acc.t_last < t:
                    monitor = dg.Monitor(cfg, fl, stored_acc)
                    rec = monitor.sample(state)
                else:
                    monitor = dg.Monitor(cfg, fl)
                    rec = monitor.sample(state)
                    monitor.acc = stored_acc
                    rec = dg.DiagRecord(**{**rec.__dict__, "bkm_full": dict(stored_acc.integral_full),
                                           "bkm_relaxed": dict(stored_acc.integral_relaxed)})
            else:
                rec = monitor.sample(state)
            if stored_acc is not None and stored_acc.t_last == t:
                if stored_acc.integral_full != rec.bkm_full or stored_acc.integral_relaxed != rec.bkm_relaxed:
                    mismatches.append({"path": p, "t": t})
            records.append(rec)
            if rec.X > 0:
                max_res = max(max_res, abs(rec.energy_identity_residual) / rec.X)
            max_div = max(max_div, sp.solenoidal_defect(state.u), sp.solenoidal_defect(state.b))
    return Analysis(
        records=records,
        paths=[x[1] for x in loaded],
        flavor=fl,
        config=cfg.to_dict(),
        bkm_consistent=not mismatches,
        bkm_mismatches=mismatches,
        max_relative_residual=max_res,
        max_divergence=max_div,
        l2_growth=asdict(dg.l2_growth_bound_check([r.t for r in records], [r.Y for r in records])),
        bootstrap=asdict(dg.gradtheta_bootstrap_check(records)),
    )


PROBES = {
    "kato_ponce": kato_ponce_ensemble,
    "log_sobolev": log_sobolev_ensemble,
    "interpolation": interpolation_ensemble,
    "gagliardo_nirenberg": gagliardo_nirenberg_ensemble,
}


def probe_study(names, out_dir=None, **params) -> dict:
    """Run the named ensembles; ``params`` maps probe name to keyword overrides."""
    reports = {}
    for name in names:
        if name not in PROBES:
            raise UsageError(f"unknown probe {name!r}; choose from {sorted(PROBES)}")
        reports[name] = PROBES[name](**params.get(name, {}))
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        echo = {"study": "probe", "probes": list(names), "params": params}
        write_json(out / "manifest.json", echo)
        for name, rep in reports.items():
            rows = [[n, v["count"], v["min"], v["mean"], v["max"]] for n, v in sorted(rep.by_n.items())]
            _write_csv(out / f"{name}.csv", {**echo, "probe": name, "resolved": rep.params},
                       ["N", "count", "min", "mean", "max"], rows)
        write_json(out / "summary.json", {"manifest": echo, "reports": {k: v.to_dict() for k, v in reports.items()}})
    return reports


__all__ = [
    "ConvergenceReport", "DecayReport", "CampaignReport", "ProbeReport", "EXACT", "SATISFIED", "FLAGGED",
    "convergence_study", "truncation_decay_study", "analyze_checkpoints", "Analysis", "blowup_study", "kato_ponce_ensemble", "log_sobolev_ensemble",
    "log_sobolev_amplitude_sweep", "interpolation_ensemble", "gagliardo_nirenberg_ensemble", "probe_study",
    "fit_power_law", "write_json",
]
