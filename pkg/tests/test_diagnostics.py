import math

import numpy as np
import pytest

from conftest import band_scalar, band_vector
from mbenard import diagnostics as dg
from mbenard import dynamics as dy
from mbenard import integrate as it
from mbenard import spectral as sp
from mbenard.errors import ContractViolation, DataValidationError, UsageError

G = sp.Grid(2, 32)
CFG = dy.SimConfig(G, 10, 3.0, dt_policy=dy.FixedDt(1e-2), t_end=0.2)


def test_energy_zero_state():
    assert dg.energy_functionals(dy.State.zeros(G), 3.0) == (0.0, 0.0)
    assert dg.energy_identity_residual(dy.State.zeros(G), CFG) == 0.0


def test_energy_single_velocity_mode():
    # u = a (e^{ik.x} + c.c.) e_2 with k = (1, 0): two Hermitian partners
    a, s = 0.3, 3.0
    c = np.zeros((2,) + G.shape, complex)
    c[1, 1, 0] = c[1, -1, 0] = a
    u = sp.SpectralVector(G, c, solenoidal=True)
    st = dy.State(u, sp.SpectralScalar.zeros(G), sp.SpectralVector.zeros(G), 0.0)
    Y, X = dg.energy_functionals(st, s)
    assert Y == pytest.approx(2 * a * a, rel=1e-15)
    assert X == pytest.approx(Y * 2.0**s, rel=1e-15)


def test_X_dominates_Y(rng):
    st = it.make_initial(it.InitialSpec("random_band", norm_targets=(1, 1, 1)), CFG)
    Y, X = dg.energy_functionals(st, 3.0)
    assert X >= Y > 0


def test_residual_small_for_random_state():
    st = it.make_initial(it.InitialSpec("random_band", norm_targets=(1, 1, 1), seed=4), CFG)
    _, X = dg.energy_functionals(st, 3.0)
    assert abs(dg.energy_identity_residual(st, CFG)) < 1e-10 * X


def test_l2_growth_check():
    assert dg.l2_growth_bound_check([0.0], [2.0]).passed
    ts = np.linspace(0, 1, 11)
    assert dg.l2_growth_bound_check(ts, np.ones_like(ts)).passed
    bad = np.exp(2.1 * ts)
    v = dg.l2_growth_bound_check(ts, bad)
    assert not v.passed and v.worst_margin > 0
    with pytest.raises(UsageError):
        dg.l2_growth_bound_check([], [])


def test_bihari_examples():
    assert dg.bihari_bound(1.0, 1.0, 0.0) == 2.5
    assert dg.bihari_bound(1.0, 1.0, 0.1) == pytest.approx(2.5 / 0.375, rel=1e-15)
    pole = dg.bihari_pole(1.0, 1.0)
    assert pole == pytest.approx(1 / 6.25)
    assert dg.bihari_bound(1.0, 1.0, pole) == dg.BLOWN
    assert dg.bihari_bound(1.0, 1.0, pole * (1 - 1e-9)) > 1e8
    vals = [dg.bihari_bound(0.5, 2.0, t) for t in np.linspace(0, 0.9 * dg.bihari_pole(0.5, 2.0), 20)]
    assert all(b > a for a, b in zip(vals, vals[1:])) and vals[0] >= 0.5
    with pytest.raises(UsageError):
        dg.bihari_bound(1.0, 1.0, -1.0)


def test_bkm_integrands_examples(rng):
    zero = dg.bkm_integrands(dy.State.zeros(G))
    for tr in (zero.vort, zero.current, zero.gradtheta):
        assert (tr.linf, tr.besov, tr.bmo) == (0.0, 0.0, 0.0)
    phi = band_scalar(G, rng, 6)
    grad = sp.SpectralVector(G, sp.gradient(phi).coeffs)
    assert sp.linf_norm(sp.curl(grad)) < 1e-13
    st = it.make_initial(it.InitialSpec("taylor_green"), CFG)
    assert dg.bkm_integrands(st).vort.linf == pytest.approx(2.0, abs=1e-14)


def _sample(t, v):
    tr = dg.NormTriple(v, v, v)
    return dg.BkmSample(t, tr, tr, dg.NormTriple(0.0, 0.0, 0.0))


def test_bkm_accumulate_constant_and_zero():
    acc = dg.bkm_accumulate(dg.BkmAccumulator(), _sample(1.0, 2.0))
    acc = dg.bkm_accumulate(acc, _sample(1.25, 2.0))
    assert acc.integral_relaxed["besov"] == pytest.approx(2 * 2.0 * 0.25)
    z = dg.bkm_accumulate(dg.bkm_accumulate(dg.BkmAccumulator(), _sample(0.0, 0.0)), _sample(1.0, 0.0))
    assert z.integral_full == {f: 0.0 for f in dg.FLAVORS}
    with pytest.raises(UsageError):
        dg.bkm_accumulate(acc, _sample(1.25, 2.0))
    assert dg.BkmAccumulator.from_dict(acc.to_dict()) == acc


def test_trapezoid_linear_exact_and_second_order():
    f_lin = lambda t: 3.0 * t + 1.0
    ts = np.linspace(0, 2, 41)
    assert dg.trapezoid_integral(ts, f_lin(ts)) == pytest.approx(8.0, abs=1e-13)
    errs = []
    for n in (20, 40, 80):
        ts = np.linspace(0, 1, n + 1)
        errs.append(abs(dg.trapezoid_integral(ts, np.exp(ts)) - (math.e - 1)))
    orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert all(abs(o - 2) < 0.05 for o in orders)


def test_monitor_round_trip():
    m = dg.Monitor(CFG, "bmo")
    st = it.make_initial(it.InitialSpec("taylor_green", theta_amplitude=0.1), CFG)
    rec = m.sample(st)
    assert rec.flavor == "bmo" and len(rec.row()) == len(dg.CSV_COLUMNS)
    m2 = dg.Monitor.from_dict(CFG, m.to_dict())
    assert m2.acc == m.acc
    with pytest.raises(UsageError):
        dg.Monitor(CFG, "sup")


def test_bootstrap_check_examples():
    c = CFG
    th = sp.truncate(band_scalar(G, np.random.default_rng(1), 5), 10)
    # u = 0: theta only sees u.e_n = 0, so grad theta stays put
    st = dy.State(sp.SpectralVector.zeros(G), th, sp.SpectralVector.zeros(G), 0.0)
    m = dg.Monitor(c)
    recs = [m.sample(st), m.sample(dy.State(st.u, st.theta, st.b, 0.5))]
    v = dg.gradtheta_bootstrap_check(recs)
    assert v.passed and v.detail["K"] == pytest.approx(1.0)
    zero = dy.State.zeros(G)
    m = dg.Monitor(c)
    assert dg.gradtheta_bootstrap_check([m.sample(zero)]).passed
    with pytest.raises(UsageError):
        dg.gradtheta_bootstrap_check([])


def test_log_sobolev_probe():
    x = G.coords()
    f = sp.forward_transform(np.cos(x[0]))
    r = dg.probe_log_sobolev(f, 2.0, 2.0)
    assert 0 < r < math.inf
    with pytest.raises(DataValidationError):
        dg.probe_log_sobolev(sp.SpectralScalar.zeros(G), 2.0, 2.0)
    with pytest.raises(ContractViolation):
        dg.probe_log_sobolev(sp.forward_transform(np.cos(x[0]) + 1.0), 2.0, 2.0)
    with pytest.raises(UsageError):
        dg.probe_log_sobolev(f, 0.5, 2.0)


def test_log_sobolev_amplitude_sweep_bounded():
    from mbenard.experiments import log_sobolev_amplitude_sweep

    f = band_scalar(G, np.random.default_rng(2), 8)
    sweep = log_sobolev_amplitude_sweep(f)
    ratios = [r for _, r in sweep]
    assert len(ratios) == 13 and all(0 < r < 10 for r in ratios)


def test_log_plus():
    assert dg.log_plus(0.5) == 0.0 and dg.log_plus(1.0) == 0.0
    assert dg.log_plus(math.e) == pytest.approx(1.0)


def test_interpolation_probe():
    c = np.zeros(G.shape, complex)
    c[3, 2] = c[-3, -2] = 1.0
    assert dg.probe_interpolation(sp.SpectralScalar(G, c), 3.0, 1.2) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(UsageError):
        dg.probe_interpolation(sp.SpectralScalar(G, c), 3.0, 3.0)


def test_gn_exponents_scaling():
    # exponents sum to one and balance derivative counting in each dimension
    for dim in (2, 3):
        for p in (2.0, 4.0, 10.0):
            a, b = dg.gn_exponents(dim, p)
            assert a + b == pytest.approx(1.0)
            assert 1 - dim / p == pytest.approx(-dim / 2 * a + (3 - dim / 2) * b)


def test_gn_and_kato_ponce_probes(rng):
    g = band_scalar(G, rng, 8)
    assert 0 < dg.probe_gagliardo_nirenberg(g, 4.0) < math.inf
    f = band_vector(G, rng, 8)
    assert 0 < dg.probe_kato_ponce(f, g, 3.0) < math.inf
    comm, a, b = dg.kato_ponce_terms(f, g, 3.0)
    assert comm >= 0 and a > 0 and b > 0
