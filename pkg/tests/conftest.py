import numpy as np
import pytest

from mbenard import spectral as sp

_ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(n, title): acceptance criterion n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    n, title = mark.args
    detail = dict(item.user_properties).get("detail", "")
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        status = "PASS" if rep.passed else ("SKIP" if rep.skipped else "FAIL")
        _ACCEPTANCE[n] = (status, title, detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        status, title, detail = _ACCEPTANCE[n]
        line = f"[{status}] criterion {n:2d}: {title}"
        if detail:
            line += f" | {detail}"
        terminalreporter.write_line(line)


def band_scalar(grid, rng, radius, mean=False):
    """Real scalar with Gaussian coefficients on ``0 < |k| <= radius`` (plus the mean if asked)."""
    c = sp._fft(rng.standard_normal(grid.shape)[None], tuple(range(1, grid.dim + 1)))[0]
    keep = (grid.kmag <= radius) & ~grid.nyquist_mask
    if not mean:
        keep &= grid.kmag > 0
    return sp.SpectralScalar(grid, np.where(keep, c, 0.0))


def band_vector(grid, rng, radius, solenoidal=True):
    comps = [band_scalar(grid, rng, radius).coeffs for _ in range(grid.dim)]
    v = sp.SpectralVector(grid, np.array(comps))
    return sp.leray_project(v) if solenoidal else v


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
