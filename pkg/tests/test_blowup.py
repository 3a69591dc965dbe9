import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hardylab.almgren import height, sphere_moments
from hardylab.blowup import (BetaResult, ExponentFit, asymptotic_check, beta_coefficients,
                             blowup_analysis, convergence_check, dyadic_lambdas, exponent_fit,
                             fourier_coefficient, match_class, rescaled_field, theta_grid,
                             unique_continuation_probe, upsilon)
from hardylab.errors import DomainError
from hardylab.extension import HomogeneousField, NoSource, smooth_test_functions, weak_form_residual
from hardylab.params import ProblemParams
from hardylab.sphere import ClassEigenfunction

from conftest import mode_field

P = ProblemParams(N=3, s=0.5, alpha=-0.75, r0=0.5)


def test_dyadic_grid():
    lams = dyadic_lambdas(0.5)
    assert lams[-1] == 0.125 and lams[0] >= 1e-4 * 0.5
    assert np.allclose(lams[1:] / lams[:-1], 2.0)
    assert len(dyadic_lambdas(0.2, 1e-4, 10)) >= 10


def test_rescaled_homogeneous_is_invariant(homogeneous):
    t = np.array([0.3, 0.7])
    y = np.array([0.2, 0.5])
    for lam in (0.01, 0.3):
        V = rescaled_field(homogeneous, lam)
        assert np.allclose(V.value(t, y), homogeneous.value(t, y), rtol=1e-12)


def test_rescaled_normalization(mode):
    assert sphere_moments(rescaled_field(mode, 0.01), 1.0).U2 == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(DomainError):
        rescaled_field(mode, 0.9)


def test_rescaled_solves_rescaled_problem(galerkin):
    V = rescaled_field(galerkin, 0.05)
    assert weak_form_residual(V, smooth_test_functions(5, seed=7), V.default_source) <= 1e-5


@given(st.floats(min_value=-0.9, max_value=3.0), st.floats(min_value=0.1, max_value=10.0))
@settings(max_examples=30)
def test_exponent_fit_power_law(gamma, K):
    lams = dyadic_lambdas(0.5)
    fit = exponent_fit(lams, K * lams ** (2 * gamma))
    assert abs(fit.gamma - gamma) <= 1e-10


def test_exponent_fit_validation():
    with pytest.raises(DomainError):
        exponent_fit(np.geomspace(1e-3, 1e-1, 5), np.ones(5))
    with pytest.raises(DomainError):
        exponent_fit(np.geomspace(1e-3, 1e-1, 12), -np.ones(12))


@pytest.mark.parametrize("alpha,gamma", [(-0.75, 0.5), (0.1875, -0.25)])
def test_exponent_fit_modes(alpha, gamma):
    f = mode_field(alpha=alpha)
    lams = dyadic_lambdas(0.5)
    fit = exponent_fit(lams, [height(f, lam) for lam in lams])
    assert abs(fit.gamma - gamma) <= 1e-3
    m = match_class(f.params, fit)
    assert m.index == 0 and not m.ambiguous
    assert m.gamma_predicted == pytest.approx(gamma, abs=1e-4)


def test_fourier_coefficient_homogeneous(homogeneous):
    Z1 = homogeneous.Z[1]
    Z0 = ClassEigenfunction(3, 0.5, 0.75, 0)
    for lam in (0.01, 0.2):
        assert fourier_coefficient(homogeneous, Z1, lam) == pytest.approx(lam ** 2.5, rel=1e-12)
        assert abs(fourier_coefficient(homogeneous, Z0, lam)) <= 1e-12 * lam ** 2.5
    th = theta_grid(homogeneous, 0.2)
    assert fourier_coefficient(homogeneous, (th, Z1(th)), 0.2) == pytest.approx(0.2 ** 2.5, rel=1e-12)
    with pytest.raises(DomainError):
        fourier_coefficient(homogeneous, (th[:-1], Z1(th[:-1])), 0.2)


def test_fourier_orthogonal_class_vanishes(mode):
    Z1 = ClassEigenfunction(3, 0.5, 0.75, 1)
    lams = np.array([1e-1, 1e-2, 1e-3])
    q = [abs(fourier_coefficient(mode, Z1, lam)) / math.sqrt(height(mode, lam)) for lam in lams]
    assert q[2] < q[1] < q[0]


def test_single_mode_beta_and_asymptotics(mode):
    Z = ClassEigenfunction(3, 0.5, 0.75, 0)
    src = NoSource()
    lams = dyadic_lambdas(0.5)
    phi = np.array([fourier_coefficient(mode, Z, lam) for lam in lams])
    beta = beta_coefficients(mode, Z, [0.01, 0.02], 0.5, src)
    assert np.allclose(beta.values, phi[[0, 0]] * 0 + np.array(
        [fourier_coefficient(mode, Z, r) / r ** 0.5 for r in (0.01, 0.02)]), rtol=1e-14)
    ratio = phi / lams ** 0.5
    assert abs(ratio[0] - ratio[1]) < abs(ratio[-1] - ratio[-2])
    rep = asymptotic_check(lams, phi, 0.5, float(ratio[0] + (ratio[0] - ratio[1])), 1.0)
    assert rep.slope >= 0.5 + 0.8 * 2 * 0.5 - 0.1


def test_upsilon_zero_and_linear(galerkin):
    Z = ClassEigenfunction(3, 0.5, 0.0, 0)
    lams = np.array([1e-3, 1e-2, 1e-1])
    assert np.all(upsilon(galerkin, Z, lams, NoSource()) == 0)
    src = galerkin.target_source
    a = upsilon(galerkin, Z, lams, src)
    b = upsilon(galerkin, Z, lams, src.scaled(3.0))
    assert np.allclose(b, 3.0 * a, rtol=1e-12)
    # |Ups| <= C lam^{N - 2s + gamma + eps}
    lg = np.geomspace(1e-4, 1e-2, 6)
    slope = np.polyfit(np.log(lg), np.log(np.abs(upsilon(galerkin, Z, lg, src))), 1)[0]
    assert slope >= 3 - 1 + 0 + 0.9 * 0.3


def test_beta_homogeneous(homogeneous):
    Z1 = homogeneous.Z[1]
    Z0 = ClassEigenfunction(3, 0.5, 0.75, 0)
    r = [0.1, 0.3, 0.5]
    assert beta_coefficients(homogeneous, Z1, r, 2.5).mean == pytest.approx(1.0, rel=1e-12)
    assert abs(beta_coefficients(homogeneous, Z0, r, 0.5).mean) <= 1e-12


def test_convergence_homogeneous(homogeneous):
    Z1 = homogeneous.Z[1]
    eL2, eH1 = convergence_check(homogeneous, [0.01, 0.1], Z1, 2.5, 1.0)
    assert np.all(eL2 <= 1e-10) and np.all(eH1 <= 1e-10)


def test_convergence_single_mode_rate(mode):
    Z = ClassEigenfunction(3, 0.5, 0.75, 0)
    lams = np.array([1e-3, 1e-2])
    beta = fourier_coefficient(mode, Z, 1e-4) / 1e-4 ** 0.5
    eL2, _ = convergence_check(mode, lams, Z, 0.5, beta)
    slope = math.log(eL2[1] / eL2[0]) / math.log(10.0)
    assert slope == pytest.approx(2 * 0.5, abs=0.1)


def test_certificate():
    r = np.geomspace(1e-4, 1e-1, 10)
    assert unique_continuation_probe(r, r ** 1.0, 0.5).passed
    bad = unique_continuation_probe(r, r ** 1.2, 0.5)
    assert not bad.passed and "drifts" in bad.diagnosis
    with pytest.raises(DomainError):
        unique_continuation_probe(r, np.zeros(10), 0.5)


def test_blowup_homogeneous(homogeneous):
    rep = blowup_analysis(homogeneous)
    assert rep.fit.gamma == pytest.approx(2.5, abs=1e-10)
    assert rep.match.index == 1
    assert rep.beta.mean == pytest.approx(1.0, rel=1e-10)
    assert rep.asymptotic.passed
    assert rep.certificate.passed and rep.certificate.variation <= 1e-10


def test_blowup_single_mode(mode, tmp_path):
    rep = blowup_analysis(mode)
    assert abs(rep.fit.gamma - 0.5) <= 1e-3
    assert rep.beta.spread <= 1e-3
    assert rep.certificate.passed
    assert np.max(np.abs(rep.normalization - 1)) <= 1e-10
    assert rep.err_L2[0] < rep.err_L2[-1] and rep.err_L2[0] <= 1e-3
    rep.write_json(tmp_path / "b.json")
    rep.to_csv(tmp_path / "b.csv")
    assert (tmp_path / "b.csv").read_text().startswith("lambda,H,phi_0,upsilon_0,err_L2,err_H1")


def test_blowup_galerkin(galerkin):
    rep = blowup_analysis(galerkin)
    assert abs(rep.fit.gamma - rep.match.gamma_predicted) <= 2e-2
    assert rep.beta.spread <= 1e-3
    assert rep.asymptotic.passed
    assert rep.certificate.passed
    tail = rep.err_L2[:5]
    assert np.all(np.diff(tail) > 0)


def test_blowup_rejects_zero_field():
    with pytest.raises(DomainError):
        blowup_analysis(HomogeneousField(P, [0.0]))
