from __future__ import annotations

import numpy as np
import pytest
import scipy.linalg as sla
import scipy.sparse as sps
from hypothesis import given, settings
from hypothesis import strategies as st

from dressed_cnot.dynamics import (
    IntegratorConfig,
    build_gate_model,
    compute_process_map,
    compute_transfer_matrix,
    evolve_density,
    evolve_state,
    hamiltonian_segments,
    model_basis,
    propagate_states,
    time_nodes,
)
from dressed_cnot.errors import IntegratorAccuracyError, OutOfWindowError
from dressed_cnot.hamiltonians import DriveChannel, SystemParams, TimeDependentHamiltonian
from dressed_cnot.hilbert import BasisSet, DensityOperator, StateVector, ket
from dressed_cnot.pulses import PulseParams

SP = SystemParams()
P = PulseParams()


def _two_level(static=None, channels=(), window=(0.0, 5.0)):
    basis = BasisSet((ket("g0g0"), ket("g0e")), 1)
    static = sps.csr_matrix((2, 2), dtype=complex) if static is None else sps.csr_matrix(static)
    return basis, TimeDependentHamiltonian(static, channels, window, basis)


def test_rabi_oscillation_matches_analytic():
    omega = 1.3
    up = sps.csr_matrix(([1.0 + 0j], ([1], [0])), shape=(2, 2))
    basis, h = _two_level(channels=(DriveChannel(lambda t: omega * np.ones_like(t), up),))
    psi, rec = evolve_state(StateVector.from_label(basis, "g0g0"), h, cfg=IntegratorConfig(dt=1e-3, record_stride=100))
    np.testing.assert_allclose(rec["g0e|000"], np.sin(omega * rec.times) ** 2, atol=1e-10)
    assert np.max(np.abs(rec["norm"] - 1)) < 1e-10


def test_static_propagation_matches_expm():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    h = (a + a.conj().T) / 2
    ham = TimeDependentHamiltonian(sps.csr_matrix(h), (), (0.0, 2.0))
    x0 = np.eye(6, dtype=complex)
    x = propagate_states(x0, ham, cfg=IntegratorConfig(dt=1e-3))
    np.testing.assert_allclose(x, sla.expm(-2j * h), atol=1e-9)


def test_spontaneous_decay_matches_exponential():
    gamma = 0.7
    basis, h = _two_level()
    jump = sps.csr_matrix(([np.sqrt(gamma)], ([0], [1])), shape=(2, 2))
    plus = StateVector(basis, np.array([1, 1]) / np.sqrt(2)).density()
    rho, rec = evolve_density(plus, h, [jump], cfg=IntegratorConfig(dt=1e-3, record_stride=100))
    np.testing.assert_allclose(rec["g0e|000"], 0.5 * np.exp(-gamma * rec.times), atol=1e-11)
    assert rho.matrix[0, 1] == pytest.approx(0.5 * np.exp(-gamma * 5.0 / 2), abs=1e-11)
    assert np.max(np.abs(rec["trace"] - 1)) < 1e-12


@settings(max_examples=60, deadline=None)
@given(st.floats(-50, 50), st.floats(1e-3, 30), st.floats(1e-3, 1.0))
def test_time_nodes_cover_span(t_a, span, dt):
    nodes = time_nodes(t_a, t_a + span, dt)
    assert nodes[0] == t_a and nodes[-1] == t_a + span
    steps = np.diff(nodes)
    assert np.all(steps > 0)
    assert np.all(steps <= dt * (1 + 1e-9))


def test_segments_must_be_contiguous():
    hams = build_gate_model(SP, P).hamiltonians
    assert [seg[:2] for seg in hamiltonian_segments(hams, (10.0, 45.0))] == [(10.0, 20.0), (20.0, 40.0), (40.0, 45.0)]
    with pytest.raises(OutOfWindowError):
        hamiltonian_segments(hams, (10.0, 70.0))
    with pytest.raises(OutOfWindowError):
        hamiltonian_segments((hams[0], hams[2]), (0.0, 60.0))


def test_closure_sizes():
    assert model_basis(SP, "closure").dim == 15
    assert model_basis(SystemParams(gamma=0.1, kappa=0.1), "closure", open_system=True).dim == 19
    assert model_basis(SP, "full").dim == 200
    with pytest.raises(ValueError):
        model_basis(SP, "tiny")


def test_coarse_step_raises_accuracy_error():
    model = build_gate_model(SP, P)
    with pytest.raises(IntegratorAccuracyError):
        evolve_state(StateVector.from_label(model.basis, "g1g1"), model.hamiltonians, cfg=IntegratorConfig(dt=0.05))


def test_zero_drives_give_identity_on_logical_kets():
    M = compute_transfer_matrix(SP, P, IntegratorConfig(dt=5e-3), drives=False)
    np.testing.assert_allclose(M.extended, np.eye(5), atol=1e-12)


def test_step_one_population_transfer():
    model = build_gate_model(SP, P)
    psi, rec = evolve_state(
        StateVector.from_label(model.basis, "g0g1"), model.hamiltonians, (0.0, 20.0), IntegratorConfig(dt=2e-3)
    )
    assert psi.population("g0a|000") >= 0.98
    assert rec["norm"][-1] == pytest.approx(1.0, abs=1e-6)


@pytest.fixture(scope="module")
def short_noisy_map():
    sp = SystemParams(gamma=0.1, kappa=0.1)
    return sp, compute_process_map(sp, P, IntegratorConfig(dt=2e-3), span=(0.0, 20.0))


def test_process_map_linearity_matches_direct_evolution(short_noisy_map):
    sp, pm = short_noisy_map
    c = np.array([0.3, -0.5j, 0.6, 0.1 + 0.2j])
    c = c / np.linalg.norm(c)
    model = build_gate_model(sp, P)
    psi0 = np.zeros(model.basis.dim, dtype=complex)
    for amp, s in zip(c, pm.inputs):
        psi0[model.basis.index(s)] = amp
    rho, rec = evolve_density(
        StateVector(model.basis, psi0).density(), model.hamiltonians, model.collapse, (0.0, 20.0), IntegratorConfig(dt=2e-3)
    )
    assert pm.apply(c).trace_distance(rho) < 1e-10
    assert np.min(rec["min_eigenvalue"]) >= -1e-8


def test_process_map_symmetry_shortcut(short_noisy_map):
    sp, pm = short_noisy_map
    full = compute_process_map(sp, P, IntegratorConfig(dt=2e-3), span=(0.0, 20.0), use_symmetry=False)
    np.testing.assert_allclose(pm.images, full.images, atol=1e-12)


def test_process_map_images_are_trace_preserving(short_noisy_map):
    _, pm = short_noisy_map
    for i in range(4):
        img = DensityOperator(pm.basis, pm.images[i, i])
        assert img.trace == pytest.approx(1.0, abs=1e-9)
        assert img.hermiticity_error() < 1e-10
        assert img.min_eigenvalue() >= -1e-8
