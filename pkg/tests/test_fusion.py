import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from purecav import fusion
from purecav.fusion import (
    LindbladGenerator,
    LindbladModel,
    TruncationError,
    analytic_steady_state,
    build_fusion_hamiltonian,
    coherent_ket,
    condition_on_vacuum,
    default_n_max,
    destroy,
    evolve,
    joint_evolve,
    limit_probability,
    node_conditional_map,
    sequential_fusion,
    with_vacuum,
)
from purecav.qcore import (
    IDENTITY2,
    SIGMA_X,
    DensityOperator,
    partial_trace,
    permute_subsystems,
    product_ket,
    projector,
    tensor,
    trace_distance,
)
from purecav.states import fused_state, fused_state_appB, pair_product

PLUS = np.array([1, 1]) / np.sqrt(2)
MINUS = np.array([1, -1]) / np.sqrt(2)


def atoms(ket):
    return DensityOperator(projector(ket), (2, 2))


def test_model_defaults_and_validation():
    m = LindbladModel(1.5, 1.0)
    assert m.alpha_ss == pytest.approx(3j)
    assert m.n_max == default_n_max(3.0) == 31
    assert m.dims == (2, 2, 32)
    with pytest.raises(ValueError):
        LindbladModel(1.0, 0.0)
    with pytest.raises(ValueError):
        LindbladModel(-1.0, 1.0)
    with pytest.raises(ValueError):
        LindbladModel(1.0, 1.0, n_max=0)


def test_strong_coupling_flag():
    assert LindbladModel(2.0, 1.0).strong_coupling
    assert not LindbladModel(0.5, 1.0).strong_coupling
    assert LindbladModel(0.5, 1.0, min_ratio=0.1).strong_coupling


def test_hamiltonian_structure():
    h = build_fusion_hamiltonian(0.7, 5)
    assert np.allclose(h, h.conj().T)
    nc = 6
    ket1 = np.kron(np.kron(PLUS, PLUS), np.eye(nc)[1])
    ket0 = np.kron(np.kron(PLUS, PLUS), np.eye(nc)[0])
    assert ket1.conj() @ h @ ket0 == pytest.approx(0.7)
    mixed = np.kron(np.kron(PLUS, MINUS), np.eye(nc)[0])
    assert np.allclose(h @ mixed, 0)


def test_hamiltonian_conserves_atomic_x():
    h = build_fusion_hamiltonian(1.0, 4)
    sx = np.kron(np.kron(SIGMA_X, IDENTITY2), np.eye(5))
    assert np.max(np.abs(h @ sx - sx @ h)) < 1e-12
    with pytest.raises(ValueError):
        build_fusion_hamiltonian(1.0, 0)


def test_destroy_matrix():
    a = destroy(3).toarray()
    assert np.allclose(np.diag(a, 1), np.sqrt([1, 2, 3]))


def test_generator_preserves_trace(rng=np.random.default_rng(5)):
    model = LindbladModel(0.8, 1.0, n_max=3)
    gen = LindbladGenerator(model)
    d = model.dim
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = a @ a.conj().T
    assert abs(np.trace(gen.apply(rho))) < 1e-10


def test_pure_decay():
    model = LindbladModel(0.0, 2.0, n_max=3)
    nc = 4
    m = np.kron(projector(product_ket([0, 0])), projector(np.eye(nc)[1]))
    out = evolve(model, DensityOperator(m, model.dims), 0.7)
    p1 = out.matrix[1, 1].real
    assert p1 == pytest.approx(math.exp(-2.0 * 0.7), abs=1e-8)


def test_evolve_input_checks():
    model = LindbladModel(1.0, 1.0, n_max=2)
    with pytest.raises(TypeError):
        evolve(model, np.eye(12) / 12, 1.0)
    with pytest.raises(ValueError):
        evolve(model, DensityOperator(np.eye(16) / 16, (2, 2, 2, 2)), 1.0)
    rho = with_vacuum(atoms(np.kron(PLUS, PLUS)), model)
    with pytest.raises(ValueError):
        evolve(model, rho, -1.0)


def test_truncation_guard():
    model = LindbladModel(2.0, 1.0, n_max=3)
    rho = with_vacuum(atoms(np.kron(PLUS, PLUS)), model)
    with pytest.raises(TruncationError):
        evolve(model, rho, 10.0)


def test_plus_plus_reaches_coherent_state():
    model = LindbladModel(0.25, 1.0)
    rho = evolve(model, with_vacuum(atoms(np.kron(PLUS, PLUS)), model), 40.0)
    cav = partial_trace(rho, [2]).matrix
    a = destroy(model.n_max).toarray()
    assert np.trace(cav @ a) == pytest.approx(-model.alpha_ss, abs=1e-6)
    target = analytic_steady_state(atoms(np.kron(PLUS, PLUS)), model)
    assert trace_distance(rho, target) < 1e-6


def test_evolve_richardson_option():
    model = LindbladModel(0.25, 1.0)
    rho0 = with_vacuum(atoms(np.kron(PLUS, MINUS)), model)
    out = evolve(model, rho0, 2.0, richardson=True, richardson_tol=1e-6)
    assert abs(out.trace - 1) < 1e-12


def test_steady_state_vacuum_probability():
    model = LindbladModel(1.0, 1.0)  # |alpha| = 2
    ss = analytic_steady_state(atoms(np.kron(PLUS, PLUS)), model)
    res = condition_on_vacuum(ss, 2, model.alpha_ss)
    assert res.no_photon_probability == pytest.approx(math.exp(-4), abs=1e-10)


def test_zero_u_input_is_untouched():
    model = LindbladModel(1.5, 1.0)
    ket = (np.kron(PLUS, MINUS) - np.kron(MINUS, PLUS)) / np.sqrt(2)
    ss = analytic_steady_state(atoms(ket), model)
    res = condition_on_vacuum(ss)
    assert res.no_photon_probability == pytest.approx(1.0, abs=1e-12)
    assert trace_distance(res.conditional_state, atoms(ket)) < 1e-12


def test_coherent_ket_normalised():
    k = coherent_ket(1.5j, 40)
    assert np.vdot(k, k).real == pytest.approx(1.0, abs=1e-12)
    assert k[0] == pytest.approx(math.exp(-1.125))


def test_with_vacuum_places_cavity_third():
    model = LindbladModel(0.5, 1.0, n_max=2)
    rho = with_vacuum(pair_product(0.8), model)
    assert rho.dims == (2, 2, 3, 2, 2)
    assert trace_distance(partial_trace(rho, [0, 1, 3, 4]), pair_product(0.8)) < 1e-14


def test_closed_map_matches_steady_state_route():
    model = LindbladModel(1.0, 1.0, n_max=40)
    rho = pair_product(0.7)
    ss = analytic_steady_state(rho, model)
    res = condition_on_vacuum(ss)
    out, p = node_conditional_map(rho.matrix, abs(model.alpha_ss) ** 2, 4)
    assert p == pytest.approx(res.no_photon_probability, abs=1e-10)
    assert np.max(np.abs(out / p - res.conditional_state.matrix)) < 1e-10


@given(st.floats(0.55, 1.0))
def test_sequential_fusion_large_amplitude_limit(f):
    state, prob = sequential_fusion(f, LindbladModel(3.0, 1.0, n_max=1))
    assert trace_distance(state, fused_state(f)) < 1e-6
    assert prob == pytest.approx(limit_probability(f), abs=1e-6)


def test_sequential_distance_decreases_with_amplitude():
    d = [trace_distance(sequential_fusion(0.75, LindbladModel(a / 2, 1.0, n_max=1))[0], fused_state_appB(0.75))
         for a in (2.0, 3.0, 4.0)]
    assert d[0] > d[1] > d[2]
    assert d[0] == pytest.approx(0.03, abs=0.01)
    assert d[2] < 1e-6


def test_sequential_fusion_method_check():
    with pytest.raises(ValueError):
        sequential_fusion(0.8, LindbladModel(1.0, 1.0), method="magic")


@pytest.mark.slow
def test_lindblad_fusion_matches_closed_map():
    model = LindbladModel(0.75, 1.0)
    a, pa = sequential_fusion(0.8, model, method="lindblad", t_final=20.0)
    b, pb = sequential_fusion(0.8, model, method="closed")
    assert trace_distance(a, b) < 1e-4
    assert pa == pytest.approx(pb, abs=1e-4)


def test_joint_evolution_equals_node_by_node():
    model = LindbladModel(0.1, 1.0, n_max=4)
    nc = model.n_max + 1
    vac = projector(np.eye(nc)[0])
    order = (0, 1, 4, 2, 3, 5)
    dims = (2, 2, 2, 2, nc, nc)
    m = permute_subsystems(tensor(pair_product(0.8).matrix, vac, vac), order, dims)
    rho0 = DensityOperator(m, tuple(dims[i] for i in order))
    joint = joint_evolve(model, rho0, 0.5)
    # node A with node B as spectator, then node B with node A as spectator
    step = evolve(model, rho0, 0.5)
    swap = (3, 4, 5, 0, 1, 2)
    step = evolve(model, DensityOperator(permute_subsystems(step.matrix, swap, step.dims), step.dims), 0.5)
    step = permute_subsystems(step.matrix, swap, step.dims)
    assert np.max(np.abs(joint.matrix - step)) < 1e-8
