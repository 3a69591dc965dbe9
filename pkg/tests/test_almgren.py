import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from hardylab.almgren import (check_hprime, default_radii, doubling_audit, energy, frequency,
                              frequency_profile, frequency_upper_bound, hardy_boundary_audit,
                              height, height_bounds, pohozaev_residual, sphere_moments,
                              v2_bound_audit, _PowerField, _boundary_hardy_ratio)
from hardylab.errors import DomainError
from hardylab.extension import HomogeneousField, NoSource, PowerLaw
from hardylab.params import ProblemParams

from conftest import galerkin_field, mode_field

P = ProblemParams(N=3, s=0.5, alpha=-0.75, r0=0.5)


def test_homogeneous_height_and_frequency(homogeneous):
    r = default_radii(0.5, 20)
    prof = frequency_profile(homogeneous, r)
    g = homogeneous.gamma
    assert np.allclose(prof.H, r ** (2 * g), rtol=1e-12)
    assert np.max(np.abs(prof.N - g)) <= 1e-8
    assert check_hprime(homogeneous, profile=prof) <= 1e-6
    assert np.max(prof.pohozaev_residuals()) <= 1e-8
    assert v2_bound_audit(prof, 0.3).C_fit == 0.0


def test_height_of_mode_against_adaptive_quadrature(mode):
    r = 0.5
    # s = 1/2: the weight is 1 and H = r^{-3} |S^2| r^3 int sin^2 U^2 dtheta
    f = lambda th: math.sin(th) ** 2 * float(mode.value(np.array([r * math.sin(th)]),
                                                         np.array([r * math.cos(th)]))[0]) ** 2
    ref = 4 * math.pi * quad(f, 0, math.pi / 2, epsabs=0, epsrel=1e-13, limit=200)[0]
    assert height(mode, r) == pytest.approx(ref, rel=1e-9)


def test_height_domain(mode):
    with pytest.raises(DomainError):
        height(mode, 0.8)


def test_energy_positive_without_source():
    f = mode_field(alpha=0.0)
    assert energy(f, 0.5, source=NoSource()) > 0


def test_mode_frequency_limit(mode):
    assert abs(frequency(mode, 1e-3) - 0.5) <= 5e-3


def test_mode_identities(mode):
    r = default_radii(0.5, 20)
    prof = frequency_profile(mode, r)
    assert check_hprime(mode, profile=prof) <= 1e-5
    assert pohozaev_residual(mode, 0.5) <= 1e-6
    assert prof.v1.min() >= -1e-10
    assert prof.N.min() > -prof.half_gap


@given(st.integers(min_value=0, max_value=10 ** 6))
@settings(max_examples=5, deadline=None)
def test_mixture_monotone(seed):
    rng = np.random.default_rng(seed)
    V = HomogeneousField(P, rng.standard_normal(3))
    prof = frequency_profile(V, default_radii(0.5, 40))
    assert np.all(np.diff(prof.N) >= -1e-8)
    assert prof.N.min() > -prof.half_gap
    assert prof.v1.min() >= -1e-10
    assert np.max(np.abs(prof.v2)) == 0.0


def test_galerkin_identities(galerkin, galerkin_profile):
    assert check_hprime(galerkin, profile=galerkin_profile) <= 1e-4
    assert np.max(galerkin_profile.pohozaev_residuals()) <= 1e-6
    assert galerkin_profile.v1.min() >= -1e-10


def test_galerkin_energy_self_converged(galerkin):
    a = energy(galerkin, 0.2)
    b = float(frequency_profile(galerkin, [0.05, 0.1, 0.2]).D[-1])
    assert a == pytest.approx(b, rel=1e-7)


def test_v2_linear_in_potential(galerkin):
    r = default_radii(0.2, 12)
    src = galerkin.target_source
    a = frequency_profile(galerkin, r, source=src)
    b = frequency_profile(galerkin, r, source=src.scaled(2.0))
    assert np.allclose(b.v2, 2.0 * a.v2, rtol=1e-6)


def test_v2_bound_power_law(galerkin):
    prof = frequency_profile(galerkin, source=galerkin.target_source)
    audit = v2_bound_audit(prof, 0.3)
    assert math.isfinite(audit.C_fit) and audit.drift < 0.2
    C1 = frequency_upper_bound(prof, audit.C_fit, 0.3)
    assert C1 >= prof.N.max()


def test_doubling(homogeneous, mode, galerkin):
    rep = doubling_audit(homogeneous)
    assert rep.violations == 0
    assert np.allclose(rep.ratios, np.array(rep.factors)[None, :] ** (2 * homogeneous.gamma),
                       rtol=1e-10)
    assert doubling_audit(mode).violations == 0
    assert doubling_audit(galerkin).violations == 0


def test_height_bounds(homogeneous):
    prof = frequency_profile(homogeneous, default_radii(0.5, 20))
    hb = height_bounds(prof, homogeneous.gamma)
    assert hb.K == pytest.approx(1.0, rel=1e-12)
    assert hb.tail_variation <= 1e-12


def test_boundary_hardy_audit():
    rep = hardy_boundary_audit(ProblemParams(N=3, s=0.5), 100, seed=3)
    assert rep.violations == 0
    fam = np.array(rep.family_ratios)
    assert np.all(np.diff(fam) > 0) and np.all(fam < 1)
    assert 1 - fam[-1] <= 0.05
    # k < N: the averaged potential factor is used, no family
    rep = hardy_boundary_audit(ProblemParams(N=5, k=3, s=0.3), 100, seed=3)
    assert rep.violations == 0 and rep.family_ratios == ()


def test_boundary_hardy_constant_field():
    assert _boundary_hardy_ratio(_PowerField(3, 0.5, 0.0), 0.5, 3) < 1.0


def test_profile_outputs(tmp_path, homogeneous):
    prof = frequency_profile(homogeneous, default_radii(0.5, 10))
    prof.to_csv(tmp_path / "p.csv")
    prof.write_json(tmp_path / "p.json")
    assert (tmp_path / "p.csv").read_text().startswith("r,H,D,N,v1,v2")
    assert '"N_min"' in (tmp_path / "p.json").read_text()


def test_zero_field_rejected():
    V = HomogeneousField(P, [0.0])
    assert height(V, 0.3) == 0.0
    with pytest.raises(DomainError):
        frequency_profile(V, [0.3])
