import numpy as np
import pytest

from conftest import band_scalar, band_vector
from mbenard import dynamics as dy
from mbenard import spectral as sp
from mbenard.errors import ConfigurationError, ContractViolation, UsageError
from oracles import convolve_advect, convolve_commutator

G2 = sp.Grid(2, 8)
G3 = sp.Grid(3, 8)


def cfg_for(grid, R=2.0, **kw):
    return dy.SimConfig(grid, R, 3.0, **kw)


def random_state(grid, rng, R, theta=True):
    u = sp.leray_project(sp.truncate(band_vector(grid, rng, R), R))
    b = sp.leray_project(sp.truncate(band_vector(grid, rng, R), R))
    th = band_scalar(grid, rng, R) if theta else sp.SpectralScalar.zeros(grid)
    return dy.State(u, th, b, 0.0)


# -- configuration ----------------------------------------------------------

def test_config_validation():
    g = sp.Grid(2, 32)
    with pytest.raises(ConfigurationError):
        dy.SimConfig(g, 10, 2.0)  # s must exceed dim/2 + 1
    with pytest.raises(ConfigurationError):
        dy.SimConfig(g, 11, 3.0)  # beyond N/3
    with pytest.raises(ConfigurationError):
        dy.SimConfig(g, 0, 3.0)
    with pytest.raises(ConfigurationError):
        dy.SimConfig(g, 10, 3.0, buoyancy_axis=2)
    with pytest.raises(ConfigurationError):
        dy.SimConfig(g, 10, 3.0, model="navier")
    with pytest.raises(ConfigurationError):
        dy.FixedDt(0.0)
    cfg = dy.SimConfig(g, 10, 3.0)
    assert cfg.buoyancy_axis == 1
    assert dy.SimConfig.from_dict(cfg.to_dict()) == cfg


def test_alias_free_rule():
    assert dy.alias_free(64, 21)
    assert dy.alias_free(8, 2)
    assert not dy.alias_free(9, 3)


# -- advection --------------------------------------------------------------

@pytest.mark.parametrize("grid", [G2, G3])
def test_advect_matches_convolution(grid, rng):
    cfg = cfg_for(grid)
    v = sp.truncate(band_vector(grid, rng, 2), 2)
    v = sp.leray_project(v)
    g = sp.truncate(band_scalar(grid, rng, 2), 2)
    w = sp.leray_project(sp.truncate(band_vector(grid, rng, 2), 2))
    for target in (g, w):
        got = np.asarray(dy.advect(v, target, cfg).coeffs)
        ref = convolve_advect(np.asarray(v.coeffs), np.asarray(target.coeffs), grid.dim, 2.0)
        assert np.max(np.abs(got - ref)) < 1e-12


def test_advect_zero_and_constant():
    g = sp.Grid(2, 16)
    cfg = cfg_for(g, 5)
    f = sp.SpectralScalar(g, np.where((g.k[0] == 2) & (g.k[1] == 1), 1.0 + 0j, 0.0)
                          + np.where((g.k[0] == -2) & (g.k[1] == -1), 1.0 + 0j, 0.0))
    assert np.max(np.abs(dy.advect(sp.SpectralVector.zeros(g), f, cfg).coeffs)) == 0.0
    cvec = np.zeros((2,) + g.shape, complex)
    cvec[:, 0, 0] = [0.3, -0.7]
    v = sp.SpectralVector(g, cvec, solenoidal=True)
    got = np.asarray(dy.advect(v, f, cfg).coeffs)
    ref = 1j * (0.3 * g.k[0] - 0.7 * g.k[1]) * np.asarray(f.coeffs)
    assert np.max(np.abs(got - ref)) < 1e-14


def test_advect_requires_solenoidal(rng):
    v = band_vector(G2, rng, 2, solenoidal=False)
    with pytest.raises(ContractViolation):
        dy.advect(v, band_scalar(G2, rng, 2), cfg_for(G2))


def test_divergence_form_agrees(rng):
    g = sp.Grid(3, 16)
    cfg = cfg_for(g, 5)
    st = random_state(g, rng, 5)
    for target in (st.theta, st.b):
        a = dy.advect(st.u, target, cfg)
        b = dy.advect_divergence_form(st.u, target, cfg)
        scale = np.max(np.abs(a.coeffs))
        assert np.max(np.abs(a.coeffs - b.coeffs)) < 1e-12 * scale


# -- right-hand side --------------------------------------------------------

def test_rhs_buoyancy_only(rng):
    g = sp.Grid(2, 16)
    cfg = cfg_for(g, 5)
    th = sp.truncate(band_scalar(g, rng, 5), 5)
    st = dy.State(sp.SpectralVector.zeros(g), th, sp.SpectralVector.zeros(g), 0.0)
    t = dy.rhs(st, cfg)
    e = np.zeros((2,) + g.shape, complex)
    e[1] = np.asarray(th.coeffs)
    ref = sp.leray_project(sp.SpectralVector(g, e))
    assert np.max(np.abs(t.du.coeffs - ref.coeffs)) < 1e-15
    assert np.max(np.abs(t.dtheta.coeffs)) == 0.0
    assert np.max(np.abs(t.db.coeffs)) == 0.0


def test_rhs_euler_restriction(rng):
    g = sp.Grid(2, 16)
    st = random_state(g, rng, 5)
    st = dy.State(st.u, sp.SpectralScalar.zeros(g), sp.SpectralVector.zeros(g), 0.0)
    # Bénard coupling sources theta through u.e_n; the MHD model freezes it
    t = dy.rhs(st, cfg_for(g, 5, model="mhd"))
    assert np.max(np.abs(t.db.coeffs)) == 0.0 and np.max(np.abs(t.dtheta.coeffs)) == 0.0
    ref = sp.leray_project(-dy.advect(st.u, st.u, cfg_for(g, 5)))
    assert np.max(np.abs(t.du.coeffs - ref.coeffs)) < 1e-15
    tb = dy.rhs(st, cfg_for(g, 5))
    assert np.max(np.abs(tb.dtheta.coeffs - sp.truncate(st.u.components[1], 5).coeffs)) < 1e-15


def test_rhs_structure(rng):
    g = sp.Grid(3, 16)
    cfg = cfg_for(g, 5)
    st = random_state(g, rng, 5)
    t = dy.rhs(st, cfg)
    for f in (t.du, t.dtheta, t.db):
        assert np.array_equal(np.asarray(sp.truncate(f, 5).coeffs), np.asarray(f.coeffs))
        assert sp.hermitian_defect(f) == 0.0
    assert sp.solenoidal_defect(t.du) < 1e-10 and sp.solenoidal_defect(t.db) < 1e-10


def test_trilinear_cancellations(rng):
    for g, R in ((sp.Grid(2, 16), 5), (sp.Grid(3, 16), 5)):
        cfg = cfg_for(g, R)
        st = random_state(g, rng, R)
        for a, b in ((st.u, st.u), (st.u, st.theta), (st.u, st.b)):
            val = sp.inner(dy.advect(a, b, cfg), b)
            assert abs(val) < 1e-10 * sp.l2_norm(b) ** 2 * sp.linf_norm(sp.gradient(b) if b.rank == 0 else sp.curl(b))
        anti = sp.inner(dy.advect(st.b, st.b, cfg), st.u) + sp.inner(dy.advect(st.b, st.u, cfg), st.b)
        assert abs(anti) < 1e-12


def test_check_state(rng):
    g = sp.Grid(2, 16)
    cfg = cfg_for(g, 4)
    st = random_state(g, rng, 6)
    with pytest.raises(ContractViolation):
        dy.check_state(st, cfg)
    dy.check_state(random_state(g, rng, 4, theta=False), cfg_for(g, 4, model="mhd"))
    with pytest.raises(ContractViolation):
        dy.check_state(random_state(g, rng, 4), cfg_for(g, 4, model="mhd"))


def test_state_pack_round_trip(rng):
    st = random_state(G3, rng, 2)
    back = dy.State.unpack(G3, st.pack(), 0.5)
    assert np.array_equal(back.pack(), st.pack()) and back.t == 0.5


# -- commutator -------------------------------------------------------------

def test_commutator_matches_convolution(rng):
    f = band_vector(G2, rng, 2.9, solenoidal=False)
    f = sp.SpectralVector(G2, np.where(np.all(np.abs(G2.k) <= 2, axis=0), f.coeffs, 0))
    g = sp.SpectralScalar(G2, np.where(np.all(np.abs(G2.k) <= 2, axis=0), band_scalar(G2, rng, 3).coeffs, 0))
    got = np.asarray(dy.commutator_js(f, g, 2.5).coeffs)
    ref = convolve_commutator(np.asarray(f.coeffs), np.asarray(g.coeffs), 2, 2.5)
    assert np.max(np.abs(got - ref)) < 1e-12
    fs = g
    got = np.asarray(dy.commutator_js(fs, g, 1.5).coeffs)
    ref = convolve_commutator(np.asarray(fs.coeffs), np.asarray(g.coeffs), 2, 1.5)
    assert np.max(np.abs(got - ref)) < 1e-12


def test_commutator_trivial_cases(rng):
    g = sp.Grid(2, 16)
    f = band_vector(g, rng, 4)
    h = band_scalar(g, rng, 4)
    assert np.max(np.abs(dy.commutator_js(f, h, 0.0).coeffs)) < 1e-14
    c = np.zeros((2,) + g.shape, complex)
    c[:, 0, 0] = [1.0, 2.0]
    assert np.max(np.abs(dy.commutator_js(sp.SpectralVector(g, c), h, 3.0).coeffs)) < 1e-12
    # bilinear
    a = dy.commutator_js(2.0 * f, h, 2.0)
    b = dy.commutator_js(f, h, 2.0)
    assert np.max(np.abs(a.coeffs - 2.0 * b.coeffs)) < 1e-12


def test_commutator_support_contract(rng):
    g = sp.Grid(2, 16)
    with pytest.raises(ContractViolation):
        dy.commutator_js(band_vector(g, rng, 7), band_scalar(g, rng, 2), 2.0)
    with pytest.raises(UsageError):
        dy.commutator_js(band_vector(g, rng, 2), band_scalar(sp.Grid(2, 8), rng, 2), 2.0)
