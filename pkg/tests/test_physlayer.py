import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from purecav import fusion, physlayer, spinchain
from purecav.physlayer import (
    DriveParams,
    ParameterError,
    distributed_pair,
    distribution_fidelity,
    effective_A,
    effective_C,
    full_hamiltonian_A,
    full_hamiltonian_C,
    j2_of,
    j3_of,
    verify_effective,
)


@pytest.fixture(params=["A", "C"])
def full_model(request):
    if request.param == "A":
        return full_hamiltonian_A(DriveParams.appendix_a(omega=5.0, delta=10.0), n_max=3)
    return full_hamiltonian_C(DriveParams.appendix_c(), n_max=2)


def test_full_model_dimensions():
    assert full_hamiltonian_A(DriveParams.appendix_a(), n_max=4).dim == 9 * 5
    assert full_hamiltonian_C(DriveParams.appendix_c(), n_max=3).dim == 27 * 4


@pytest.mark.parametrize("t", [0.0, 0.13, 1.7])
def test_full_hamiltonian_hermitian(full_model, t):
    h = full_model(t)
    assert np.allclose(h, h.conj().T)


def test_oscillating_terms_average_out(full_model):
    period = 2 * math.pi / abs(full_model.frequency)
    ts = np.linspace(0, period, 400, endpoint=False)
    avg = np.mean([full_model(t) for t in ts], axis=0)
    assert np.max(np.abs(avg - full_model.constant)) < 1e-12


def test_without_drive_only_cavity_terms_remain():
    p = DriveParams.appendix_a(omega=0.0, delta=10.0)
    m = full_hamiltonian_A(p, n_max=2)
    # with no laser nothing moves population in or out of level |1>
    labels = np.indices(m.dims).reshape(3, -1)
    n1 = np.diag(((labels[:2] == 1).sum(axis=0)).astype(float))
    assert np.allclose(m.raising @ n1, n1 @ m.raising)
    assert np.any(m.raising != 0)
    driven = full_hamiltonian_A(DriveParams.appendix_a(omega=3.0, delta=10.0), n_max=2)
    assert not np.allclose(driven.raising @ n1, n1 @ driven.raising)


def test_static_generator_matches_frame_solution():
    m = full_hamiltonian_C(DriveParams.appendix_c(), n_max=1)
    assert np.allclose(m.static(), m.static().conj().T)
    assert m.frame_phases(0.0) == pytest.approx(np.ones(m.dim))


def test_j2_example_and_scaling():
    p = DriveParams.appendix_a(g=1.0, omega=8.0, delta=2.0)
    assert j2_of(p) == pytest.approx(1.0)
    assert j2_of(DriveParams.appendix_a(g=2.0, omega=8.0, delta=2.0)) == pytest.approx(2.0)
    assert j2_of(p.scaled(2)) == pytest.approx(0.5)


def test_effective_A_delegates_to_fusion():
    p = DriveParams.appendix_a(g=1.0, omega=8.0, delta=2.0)
    eff = effective_A(p, n_max=3)
    assert np.allclose(eff.core, fusion.build_fusion_hamiltonian(1.0, 3))
    assert np.max(np.abs(eff.core @ eff.commuting - eff.commuting @ eff.core)) < 1e-12


def test_j3_example():
    p = DriveParams.appendix_c(g=1.0, omega=1.0, delta_l=10.0, delta=5.0)
    assert j3_of(p) == pytest.approx(1 / 8000)


def test_effective_C_ring():
    p = DriveParams.appendix_c()
    eff = effective_C(p)
    assert np.allclose(eff.core, spinchain.build_xy(j3_of(p)).matrix)
    assert eff.sign == -1.0
    assert spinchain.gate_time(0, eff.coupling) * eff.coupling == pytest.approx(math.pi / 3)


@pytest.mark.parametrize("kwargs", [dict(delta=-1.0), dict(delta=0.0)])
def test_appendix_C_rejects_bad_detuning(kwargs):
    with pytest.raises(ParameterError):
        effective_C(DriveParams.appendix_c(**kwargs))


def test_parameter_consistency_checks():
    with pytest.raises(ParameterError):
        full_hamiltonian_A(DriveParams(1.0, 20.0, 200.0, delta_l=-100.0))
    with pytest.raises(ParameterError):
        full_hamiltonian_A(DriveParams(1.0, 20.0, 200.0, omega_c=1.0, omega_p=2.0))
    with pytest.raises(ParameterError):
        full_hamiltonian_A(DriveParams(-1.0, 20.0, 200.0))
    with pytest.raises(ParameterError):
        full_hamiltonian_C(DriveParams(1.0, 1.0, 10.0, delta_l=20.0, delta_c=5.0))
    with pytest.raises(ParameterError):
        full_hamiltonian_C(DriveParams(1.0, 1.0, 10.0, delta_l=20.0, omega_e=10.0, omega_1=0.0, omega_l=5.0))
    ok = DriveParams(1.0, 1.0, 10.0, delta_l=20.0, delta_c=10.0, omega_e=100.0, omega_1=0.0, omega_l=80.0)
    full_hamiltonian_C(ok, n_max=1)


def test_guard_predicates():
    assert physlayer.strong_driving(DriveParams.appendix_a())
    assert not physlayer.strong_driving(DriveParams.appendix_a(omega=5.0))
    assert physlayer.dispersive(DriveParams.appendix_c())
    assert not physlayer.dispersive(DriveParams.appendix_c(delta_l=5.0))


def test_guard_warning():
    with pytest.warns(RuntimeWarning):
        physlayer.appendix_c_run(DriveParams.appendix_c(delta_l=5.0, delta=2.0), n_max=2)


def test_frame_and_ode_agree():
    p = DriveParams.appendix_c()
    full = full_hamiltonian_C(p, n_max=2)
    eff = effective_C(p)
    psi0 = physlayer._psi_basis((1, 0, 0), None)
    t = 5.0
    a = verify_effective(full, eff, psi0, t, method="frame", samples=20)
    b = verify_effective(full, eff, psi0, t, method="ode", samples=20)
    assert a.trace_distance == pytest.approx(b.trace_distance, abs=1e-7)
    assert a.excited_population_max == pytest.approx(b.excited_population_max, abs=1e-7)


def test_verify_method_and_size_checks():
    p = DriveParams.appendix_c()
    full = full_hamiltonian_C(p, n_max=1)
    eff = effective_C(p)
    psi0 = physlayer._psi_basis((1, 0, 0), None)
    with pytest.raises(ValueError):
        verify_effective(full, eff, psi0, 1.0, method="euler")
    with pytest.raises(ValueError):
        verify_effective(full_hamiltonian_A(DriveParams.appendix_a(), n_max=1),
                         eff, psi0, 1.0)


def test_report_ranges():
    r = physlayer.appendix_c_run(DriveParams.appendix_c())
    assert 0 <= r.trace_distance <= 0.05
    assert 0 <= r.excited_population_max <= 1


def test_ladder_needs_multipliers():
    with pytest.raises(ValueError):
        physlayer.ladder("C", [])
    with pytest.raises(ValueError):
        physlayer.ladder("B", [1])


@pytest.mark.slow
def test_detuning_ladder_improves_C():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        reps = physlayer.ladder("C", (1, 2))
    assert reps[1].trace_distance < reps[0].trace_distance
    assert reps[1].excited_population_max < reps[0].excited_population_max


def test_distribution_examples():
    assert distribution_fidelity(0.5, 100.0, math.acos(0.99)) == pytest.approx((1 + math.exp(-0.5)) / 2, abs=1e-12)
    assert distribution_fidelity(0.5, 100.0, math.acos(0.99)) == pytest.approx(0.80327, abs=1e-5)
    assert distribution_fidelity(1.0, 50.0, 2.0) == 1.0
    assert distribution_fidelity(0.2, 50.0, 0.0) == 1.0
    with pytest.raises(ValueError):
        distribution_fidelity(0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        distribution_fidelity(0.5, -1.0, 1.0)


@given(st.floats(0.01, 1.0), st.floats(0.0, 10.0), st.floats(-math.pi, math.pi))
def test_distribution_range(eta, a2, theta):
    f = distribution_fidelity(eta, a2, theta)
    assert 0.5 < f <= 1.0
    assert distributed_pair(eta, a2, theta).f == f
