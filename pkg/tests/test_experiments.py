import json
import math

import numpy as np
import pytest

from mbenard import dynamics as dy
from mbenard import experiments as ex
from mbenard import integrate as it
from mbenard import spectral as sp
from mbenard.errors import ConfigurationError, UsageError

G = sp.Grid(2, 32)


def cfg(**kw):
    base = dict(dt_policy=dy.FixedDt(0.02), t_end=0.1)
    base.update(kw)
    return dy.SimConfig(G, 10, 3.0, **base)


RB = it.InitialSpec("random_band", norm_targets=(1.0, 0.5, 0.5), seed=2)


# -- convergence ------------------------------------------------------------

def test_convergence_zero_data_is_exact():
    rep = ex.convergence_study(cfg(), [2, 4, 8], it.InitialSpec("random_band", norm_targets=(0, 0, 0)))
    assert rep.D == [0.0, 0.0] and rep.epsilon_hat == ex.EXACT


def test_convergence_identical_radius_gives_zero():
    rep = ex.convergence_study(cfg(), [4, 4, 8], RB)
    assert rep.D[0] == 0.0 and rep.D[1] > 0


def test_convergence_report_and_outputs(tmp_path):
    rep = ex.convergence_study(cfg(), [3, 6, 9], RB, sample_every=2, out_dir=tmp_path)
    assert rep.sample_times == pytest.approx([0.0, 0.04, 0.08, 0.1])
    assert all(d >= 0 for d in rep.D)
    for a, b in zip(rep.D_hs_prime, rep.D_hs_prime_bound):
        assert a <= b * (1 + 1e-12)
    assert (tmp_path / "manifest.json").exists() and (tmp_path / "run_R3.csv").exists()
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["report"]["D"] == rep.D
    assert (tmp_path / "run_R6.csv").read_text().startswith("# {")


def test_convergence_errors():
    with pytest.raises(ConfigurationError):
        ex.convergence_study(cfg(), [8, 4], RB)
    with pytest.raises(ConfigurationError):
        ex.convergence_study(cfg(), [4, 12], RB)  # 12 is not dealias-safe on N = 32
    with pytest.raises(ConfigurationError):
        ex.convergence_study(cfg(dt_policy=dy.CflDt()), [4, 8], RB)
    with pytest.raises(ConfigurationError):
        ex.convergence_study(cfg(), [4, 8], RB, s_prime=3.0)


def test_convergence_deterministic():
    a = ex.convergence_study(cfg(), [3, 6], RB)
    b = ex.convergence_study(cfg(), [3, 6], RB)
    assert a.D == b.D


# -- truncation decay -------------------------------------------------------

def test_decay_support_inside_smallest_ball():
    c = np.zeros(G.shape, complex)
    c[1, 1] = c[-1, -1] = 1.0
    rep = ex.truncation_decay_study(None, 2.0, 1.0, [2, 4, 8], f=sp.SpectralScalar(G, c))
    assert rep.errors == [0.0, 0.0, 0.0] and rep.fitted_order == ex.EXACT


def test_decay_single_high_mode():
    g = sp.Grid(2, 64)
    c = np.zeros(g.shape, complex)
    c[20, 0] = c[-20, 0] = 1.0
    s, k = 2.0, 1.0
    rep = ex.truncation_decay_study(None, s, k, [2, 4, 8, 16], f=sp.SpectralScalar(g, c))
    weight = (1 + 400.0) ** (-k / 2)  # |f|_{H^s} / |f|_{H^{s+k}}
    assert rep.errors == pytest.approx([weight] * 4, rel=1e-14)
    assert rep.bound_constant == pytest.approx(weight * 16**k, rel=1e-14)


def test_decay_divergent_spectrum_rejected():
    with pytest.raises(ConfigurationError):
        ex.truncation_decay_study(5.0, 3.0, 1.0, [4, 8])


def test_decay_outputs(tmp_path):
    rep = ex.truncation_decay_study(3 + 1 + 1 + 0.51, 3.0, 1.0, [4, 8, 16], sp.Grid(2, 64), out_dir=tmp_path)
    assert rep.fitted_order >= 0.9
    assert (tmp_path / "decay.csv").exists()


# -- blow-up campaigns ------------------------------------------------------

def test_blowup_zero_data(tmp_path):
    rep = ex.blowup_study(cfg(), it.InitialSpec("random_band", norm_targets=(0, 0, 0)), out_dir=tmp_path)
    assert rep.satisfied and rep.verdict == ex.SATISFIED
    assert all(v == 0.0 for v in rep.final_integrals["full"].values())
    assert (tmp_path / "run.csv").exists() and (tmp_path / "summary.json").exists()


def test_blowup_resolved_run():
    rep = ex.blowup_study(cfg(t_end=0.2), it.InitialSpec("taylor_green", theta_amplitude=0.1, band=4))
    assert rep.satisfied and rep.integrals_finite and rep.blowup_time is None
    prof = np.array(rep.bkm_profile)
    assert np.all(np.diff(prof[:, 1]) >= 0) and np.all(prof[:, 2] <= prof[:, 1])


def test_blowup_under_resolved_run_is_flagged():
    c0 = cfg(dt_policy=dy.CflDt())
    init = it.InitialSpec("taylor_green", theta_amplitude=0.1, b_amplitude=0.1, band=4)
    dt = it.cfl_dt(it.make_initial(init, c0), c0)
    rep = ex.blowup_study(cfg(dt_policy=dy.FixedDt(10 * dt), t_end=20.0), init)
    assert not rep.satisfied and rep.termination == "instability"
    assert rep.blowup_time < 20.0
    ts = [e["t"] for e in rep.events]
    assert ts == sorted(ts) and rep.events[-1]["termination"] == "instability"
    assert rep.events[-2]["event"] == "instability"


def test_blowup_rejects_flavor():
    with pytest.raises(UsageError):
        ex.blowup_study(cfg(), RB, "sup")


# -- probes -----------------------------------------------------------------

def test_fit_power_law():
    xs = [1.0, 2.0, 4.0]
    assert ex.fit_power_law(xs, [x**-1.5 for x in xs]) == pytest.approx(-1.5)
    assert ex.fit_power_law(xs, [0.0, 0.0, 1.0]) is None


def test_probe_study_outputs(tmp_path):
    reps = ex.probe_study(
        ["kato_ponce", "interpolation"],
        out_dir=tmp_path,
        kato_ponce={"count": 3},
        interpolation={"count": 20, "dims": (2,)},
    )
    assert reps["interpolation"].by_n[8]["count"] == 20
    assert reps["kato_ponce"].growth is not None
    assert (tmp_path / "kato_ponce.csv").exists()
    with pytest.raises(UsageError):
        ex.probe_study(["nope"])


def test_gn_ensemble_runs():
    rep = ex.gagliardo_nirenberg_ensemble(count=4, n_list=(16,))
    assert 0 < rep.by_n[16]["max"] < math.inf
