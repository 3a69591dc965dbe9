import math

import mpmath
import numpy as np
import pytest
import scipy.special as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from hardylab.errors import DomainError
from hardylab.extension import (ExtendedField, ExtensionProfile, HomogeneousField, NoSource,
                                PowerLaw, SelfSource, cylinder_energy, eval_extended,
                                eval_extended_grad, extension_residual, h_flux, h_profile,
                                h_profile_deriv, neumann_constant, smooth_test_functions,
                                weak_form_residual)
from hardylab.params import ProblemParams
from hardylab.spectrum import SpectralField, fractional_apply, hs_norm, radial_catalog


def test_profile_half_order_is_exponential():
    assert h_profile(math.pi ** 2, 0.5, 1.0) == pytest.approx(math.exp(-math.pi), rel=1e-14)
    y = np.linspace(0.01, 2, 50)
    assert np.allclose(h_profile_deriv(math.pi ** 2, 0.5, y), -math.pi * np.exp(-math.pi * y),
                       rtol=1e-13)


@given(st.floats(min_value=0.1, max_value=1e4), st.floats(min_value=0.02, max_value=0.98))
def test_profile_boundary_value(mu, s):
    assert h_profile(mu, s, 0.0) == pytest.approx(1.0, rel=1e-14)
    # near y = 0, 1 - h ~ Gamma(1-s)/Gamma(1+s) (sqrt(mu) y / 2)^{2s}, so the
    # distance to 1 at y = 1e-8 is set by s; compare with an mpmath oracle
    y = 1e-8
    a = mpmath.sqrt(mu) * y
    ref = float(2 ** (1 - s) / mpmath.gamma(s) * a ** s * mpmath.besselk(s, a))
    assert abs(h_profile(mu, s, y) - ref) <= 1e-14
    if s >= 0.5 and mu <= 100:
        assert abs(h_profile(mu, s, y) - 1.0) <= 1e-6


@given(st.floats(min_value=0.1, max_value=400.0), st.floats(min_value=0.02, max_value=0.98),
       st.floats(min_value=0.01, max_value=3.0))
@settings(max_examples=60)
def test_profile_matches_scipy(mu, s, y):
    a = math.sqrt(mu) * y
    ref = 2 ** (1 - s) / sp.gamma(s) * a ** s * sp.kv(s, a)
    assert h_profile(mu, s, y) == pytest.approx(ref, rel=1e-12, abs=1e-300)


def test_profile_ode_residual():
    mu, s, y, d = 4.0, 0.25, 0.3, 1e-3
    h = lambda x: float(h_profile(mu, s, x))
    h2 = (-h(y + 2 * d) + 16 * h(y + d) - 30 * h(y) + 16 * h(y - d) - h(y - 2 * d)) / (12 * d * d)
    h1 = float(h_profile_deriv(mu, s, y))
    assert abs(h2 + (1 - 2 * s) / y * h1 - mu * h(y)) <= 1e-6 * mu


def test_profile_derivative_fd():
    mu, s, y, d = math.pi ** 2, 0.3, 0.5, 1e-5
    fd = (h_profile(mu, s, y + d) - h_profile(mu, s, y - d)) / (2 * d)
    assert abs(h_profile_deriv(mu, s, y) - fd) <= 1e-7


def test_neumann_limit_half_order():
    assert -1e-6 ** 0 * h_flux(math.pi ** 2, 0.5, 1e-6) == pytest.approx(math.pi, abs=1e-5)


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
@pytest.mark.parametrize("mu", [1.0, math.pi ** 2, 100.0])
def test_neumann_flux_limit(mu, s):
    assert -h_flux(mu, s, 0.0) == pytest.approx(neumann_constant(s) * mu ** s, rel=1e-13)


def test_profile_validation_and_underflow():
    with pytest.raises(DomainError):
        h_profile(-1.0, 0.5, 1.0)
    with pytest.raises(DomainError):
        h_profile(1.0, 0.5, -1.0)
    with pytest.raises(DomainError):
        h_profile_deriv(1.0, 0.5, 0.0)
    prof = ExtensionProfile(1e4, 0.5)
    assert prof.underflows(1e4, 8.0) and prof(8.0) == 0.0


def _field(c, N=3, s=0.5, alpha=0.0):
    cat = radial_catalog(ProblemParams(N=N, s=s, alpha=alpha, modes=len(c)))
    return ExtendedField(SpectralField(cat, np.asarray(c, dtype=float)))


def test_single_mode_trace_and_decay():
    f = _field([1.0, 0.0, 0.0])
    t = np.linspace(0.05, 1.0, 20)
    md = f.spectral.catalog.modes[0]
    assert np.allclose(f.value(t, 0.0), md.radial(t), rtol=1e-14)
    assert np.all(np.abs(f.value(t, 30.0)) <= 1e-30)


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_normal_derivative_is_fractional_power(s):
    f = _field([0.7, -0.4, 0.2], s=s)
    t = np.array([0.5])
    _, _, fy = f.evaluate(t, np.array([0.0]))
    ref = neumann_constant(s) * fractional_apply(f.spectral, s).evaluate(t)
    assert -fy[0] == pytest.approx(ref[0], rel=1e-5)


def test_eval_at_axis():
    reg = _field([1.0, 0.5], alpha=0.0)      # t exponent 0
    sing = _field([1.0, 0.5], alpha=0.15)    # t exponent < 0
    van = _field([1.0, 0.5], alpha=-0.75)    # t exponent > 0
    assert np.isfinite(eval_extended(reg, 0.0, 0.1))
    assert eval_extended(sing, 0.0, 0.1) == np.inf
    assert eval_extended(van, 0.0, 0.1) == 0.0


def test_gradient_matches_fd():
    f = _field([0.3, 1.0, -0.2], s=0.3, alpha=-0.5)
    t, y, d = np.array([0.4]), np.array([0.2]), 1e-6
    ut, uy = eval_extended_grad(f, t, y)
    assert ut[0] == pytest.approx(((f.value(t + d, y) - f.value(t - d, y)) / (2 * d))[0], rel=1e-7)
    assert uy[0] == pytest.approx(((f.value(t, y + d) - f.value(t, y - d)) / (2 * d))[0], rel=1e-7)


def test_cylinder_energy_single_mode():
    assert cylinder_energy(_field([1.0])) == pytest.approx(math.pi, rel=1e-8)


def test_cylinder_energy_zero():
    assert cylinder_energy(_field([0.0, 0.0])) == 0.0


def test_cylinder_energy_parseval():
    for s, alpha in ((0.3, 0.0), (0.7, -0.75)):
        f = _field([0.6, -1.1], s=s, alpha=alpha)
        mu = f.spectral.catalog.mu
        ref = neumann_constant(s) * (mu[0] ** s * 0.36 + mu[1] ** s * 1.21)
        assert cylinder_energy(f) == pytest.approx(ref, rel=1e-6)
        assert f.energy_exact() == pytest.approx(neumann_constant(s) * hs_norm(f.spectral, s) ** 2)


def test_cylinder_energy_rejects_short_cut():
    with pytest.raises(DomainError):
        cylinder_energy(_field([1.0]), y_max=0.5)


@pytest.mark.parametrize("s,alpha", [(0.5, 0.0), (0.25, -0.75), (0.75, 0.15)])
def test_extension_residual_small(s, alpha):
    f = _field([1.0, -0.5, 0.25, 0.1], s=s, alpha=alpha)
    t = np.array([0.2, 0.5, 0.8])
    y = np.array([0.1, 0.3, 0.05])
    assert np.max(extension_residual(f, t, y)) <= 1e-8


def test_weak_form_detects_wrong_constant():
    f = _field([1.0, -0.5, 0.25], s=0.3)
    tests = smooth_test_functions(5, seed=4)
    good = weak_form_residual(f, tests)
    bad = weak_form_residual(f, tests, c_s=1.01 * neumann_constant(0.3))
    assert good <= 1e-8
    assert bad >= 100 * good


def test_homogeneous_field_weak_form():
    p = ProblemParams(N=3, s=0.4, alpha=-0.5)
    V = HomogeneousField(p, [1.0, -0.3, 0.2])
    assert weak_form_residual(V, smooth_test_functions(5, seed=1), NoSource()) <= 1e-8
    assert np.allclose(V.gammas, V.Z[0].d + 2 * np.arange(3))


def test_sources():
    f = _field([1.0, 0.3])
    t = np.linspace(0.1, 0.9, 5)
    pl = PowerLaw(2.0, 0.3)
    g = 2.0 * t ** (-1.0 + 0.3)
    assert np.allclose(pl.trace_density(f, t), g * f.trace(t) ** 2)
    assert np.allclose(pl.v2_density(f, t), 0.3 * g * f.trace(t) ** 2)
    assert pl.rescaled(0.5, 0.25).amp == pytest.approx(2.0 * 0.25 ** 0.3)
    assert pl.scaled(2.0).amp == 4.0
    ss = SelfSource()
    assert np.allclose(ss.flux_density(f, t), f.source(t))
    assert np.all(NoSource().trace_density(f, t) == 0.0)


def test_samples_csv(tmp_path):
    f = _field([1.0])
    f.samples_to_csv(tmp_path / "s.csv", [0.5, 0.5], [0.0, 0.5])
    assert (tmp_path / "s.csv").read_text().startswith("t,y,U,dUdt,dUdy")
