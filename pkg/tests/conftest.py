"""Shared fixtures: the reference configuration used across the suite."""

import pytest

from wrilab import Geometry, Wavelet, make_experiment


@pytest.fixture(scope="session")
def geo():
    """Reference geometry: unit domain, offset 0.5, velocity range [0.5, 2]."""
    return Geometry(z_min=0.0, z_max=1.0, z_s=0.3, z_r=0.8, T=1.5,
                    rho=1.0, c_min=0.5, c_max=2.0)


@pytest.fixture(scope="session")
def exp02(geo):
    """Consistent-data experiment with a width-0.02 bump pulse."""
    return make_experiment(geo, 1.0, Wavelet.bump(0.02))


@pytest.fixture(scope="session")
def exp04(geo):
    """Consistent-data experiment with a width-0.04 bump pulse."""
    return make_experiment(geo, 1.0, Wavelet.bump(0.04))


@pytest.fixture(scope="session")
def exp01(geo):
    """Consistent-data experiment with a width-0.01 bump pulse."""
    return make_experiment(geo, 1.0, Wavelet.bump(0.01))
