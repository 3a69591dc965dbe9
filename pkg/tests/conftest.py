import numpy as np
import pytest

from hardylab.extension import ExtendedField, HomogeneousField
from hardylab.params import ProblemParams
from hardylab.spectrum import SpectralField, galerkin_hardy_solve, radial_catalog


def galerkin_field(M=32, s=0.5, eps=0.3, r0=0.2, N=3, alpha=0.0):
    p = ProblemParams(N=N, s=s, alpha=alpha, g_eps=eps, r0=r0, modes=M)
    sol = galerkin_hardy_solve(radial_catalog(p), 1.0, eps)
    return ExtendedField(sol.field)


def mode_field(N=3, s=0.5, alpha=-0.75, M=8, index=0, r0=0.5):
    p = ProblemParams(N=N, s=s, alpha=alpha, r0=r0, modes=M)
    c = np.zeros(M)
    c[index] = 1.0
    return ExtendedField(SpectralField(radial_catalog(p), c))


@pytest.fixture(scope="session")
def galerkin():
    return galerkin_field()


@pytest.fixture(scope="session")
def galerkin_profile(galerkin):
    from hardylab.almgren import frequency_profile
    return frequency_profile(galerkin)


@pytest.fixture(scope="session")
def mode():
    return mode_field()


@pytest.fixture(scope="session")
def homogeneous():
    return HomogeneousField.single(ProblemParams(N=3, s=0.5, alpha=-0.75, r0=0.5), 1)


# ------------------------------------------------------ acceptance summary

ACCEPTANCE = {}


def record_criterion(number, title, passed, detail):
    """Store and print one acceptance line."""
    line = f"[{number:2d}] {'PASS' if passed else 'FAIL'}  {title}: {detail}"
    ACCEPTANCE[number] = line
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
