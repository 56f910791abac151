import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shockrefl import GasModel
from shockrefl.errors import DomainError, VacuumError


@pytest.mark.parametrize("gamma", [1.0, 0.5, -2.0, float("nan")])
def test_rejects_gamma_not_above_one(gamma):
    with pytest.raises(DomainError):
        GasModel(gamma)


def test_rejects_nonpositive_rho0():
    with pytest.raises(DomainError):
        GasModel(1.4, 0.0)


def test_enthalpy_values():
    assert GasModel(1.4).enthalpy(1.0) == 0.0
    assert GasModel(2.0).enthalpy(2.0) == pytest.approx(1.0, abs=1e-15)
    ref = float((mp.mpf(2) ** mp.mpf("0.4") - 1) / mp.mpf("0.4"))
    # high-precision evaluation of (2**0.4 - 1)/0.4 = 0.79876977...
    assert GasModel(1.4).enthalpy(2.0) == pytest.approx(ref, abs=1e-14)
    assert ref == pytest.approx(0.7987698, abs=1e-7)


def test_enthalpy_rejects_nonpositive_density():
    with pytest.raises(DomainError):
        GasModel(1.4).enthalpy(0.0)


def test_sound_speed_values():
    assert GasModel(1.4).sound_speed(1.0) == 1.0
    assert GasModel(2.0).sound_speed(4.0) == pytest.approx(2.0, abs=1e-15)
    assert GasModel(1.4).sound_speed(2.0) == pytest.approx(float(mp.mpf(2) ** mp.mpf("0.2")), abs=1e-15)


def test_density_from_bernoulli_values():
    assert GasModel(1.4).density_from_bernoulli(0.0, 0.0) == pytest.approx(1.0, abs=1e-15)
    assert GasModel(2.0).density_from_bernoulli(0.0, 0.5) == pytest.approx(0.5, abs=1e-15)


def test_density_from_bernoulli_vacuum():
    with pytest.raises(VacuumError):
        GasModel(2.0).density_from_bernoulli(0.0, 1.5)


def test_density_from_bernoulli_rejects_negative_speed():
    with pytest.raises(DomainError):
        GasModel(2.0).density_from_bernoulli(-1.0, 0.0)


def test_critical_speed_values():
    assert GasModel(1.4).critical_speed(0.0) == pytest.approx(math.sqrt(2 / 2.4), abs=1e-15)
    assert GasModel(3.0).critical_speed(0.5) == 0.0
    assert GasModel(2.0).critical_speed(0.0) == pytest.approx(0.816497, abs=1e-6)


def test_critical_speed_negative_radicand():
    with pytest.raises(DomainError):
        GasModel(2.0).critical_speed(2.0)


def test_is_elliptic_examples():
    ok, margin = GasModel(1.4).is_elliptic((0.0, 0.0), 0.0)
    assert ok and margin == pytest.approx(0.912871, abs=1e-6)
    ok, margin = GasModel(2.0).is_elliptic((1.0, 0.0), 0.0)
    assert not ok and margin == pytest.approx(-0.183503, abs=1e-6)


def test_sonic_state_is_not_elliptic():
    gas = GasModel(3.0)
    # pseudo-speed equal to the computed threshold itself
    cs = gas.critical_speed(0.0)
    ok, margin = gas.is_elliptic((cs, 0.0), 0.0)
    assert not ok and margin == 0.0


def test_vectorized_density():
    gas = GasModel(1.4)
    q = np.linspace(0.0, 1.0, 7)
    rho = gas.density_from_bernoulli(q, np.zeros_like(q))
    assert rho.shape == q.shape
    assert np.all(np.diff(rho) < 0.0)


def _non_vacuum_samples(rng, n):
    gamma = rng.uniform(1.05, 4.0, n)
    rho0 = rng.uniform(0.2, 5.0, n)
    q = rng.uniform(0.0, 3.0, n)
    g1 = gamma - 1.0
    # choose phi so that the Bernoulli argument lands in (0.01, 2) rho0^(g-1)
    arg = rho0**g1 * rng.uniform(0.01, 2.0, n)
    phi = (rho0**g1 - arg) / g1 - 0.5 * q * q
    return gamma, rho0, q, phi


def test_sonic_criteria_equivalent_on_random_samples():
    rng = np.random.default_rng(20240601)
    gamma, rho0, q, phi = _non_vacuum_samples(rng, 10_000)
    for g, r0, qq, ph in zip(gamma, rho0, q, phi):
        gas = GasModel(g, r0)
        rho = gas.density_from_bernoulli(qq * qq, ph)
        lhs = qq * qq - gas.sound_speed(rho) ** 2
        csq = gas.critical_speed_sq(ph)
        rhs = qq - math.sqrt(csq)
        if abs(lhs) > 1e-12 and abs(rhs) > 1e-12:
            assert math.copysign(1, lhs) == math.copysign(1, rhs)


@settings(max_examples=300, deadline=None)
@given(
    gamma=st.floats(1.05, 4.0),
    rho0=st.floats(0.2, 5.0),
    q=st.floats(0.0, 3.0),
    frac=st.floats(0.01, 2.0),
)
def test_bernoulli_inversion(gamma, rho0, q, frac):
    gas = GasModel(gamma, rho0)
    g1 = gamma - 1.0
    phi = (rho0**g1 * (1.0 - frac)) / g1 - 0.5 * q * q
    rho = gas.density_from_bernoulli(q * q, phi)
    total = gas.enthalpy(rho) + 0.5 * q * q + phi
    ref = gas.enthalpy(rho0)
    assert abs(total - ref) <= 1e-12 * max(1.0, abs(ref), abs(phi), 0.5 * q * q)


@settings(max_examples=200, deadline=None)
@given(
    gamma=st.floats(1.05, 4.0),
    q=st.floats(0.0, 1.0),
    phi=st.floats(-1.0, 0.2),
    dq=st.floats(1e-3, 0.5),
    dphi=st.floats(1e-3, 0.2),
)
def test_density_decreasing_in_speed_and_potential(gamma, q, phi, dq, dphi):
    gas = GasModel(gamma, 1.0)
    try:
        base = gas.density_from_bernoulli(q * q, phi)
        faster = gas.density_from_bernoulli((q + dq) ** 2, phi)
        higher = gas.density_from_bernoulli(q * q, phi + dphi)
    except VacuumError:
        return
    assert faster < base
    assert higher < base
