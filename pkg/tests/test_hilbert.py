from __future__ import annotations

import itertools

import numpy as np
import pytest
import scipy.sparse as sps
from hypothesis import given
from hypothesis import strategies as st

from dressed_cnot.errors import InvalidTruncationError, LabelParseError
from dressed_cnot.hamiltonians import hamiltonian_terms
from dressed_cnot.hilbert import (
    COMPUTATIONAL_KETS,
    LOGICAL_KETS,
    AtomLevel,
    BasisState,
    DensityOperator,
    StateVector,
    build_atomic_op,
    build_full_basis,
    build_mode_op,
    dagger,
    embedding,
    ket,
    reachable_closure,
)
from dressed_cnot.hamiltonians import SystemParams

levels = st.sampled_from(list(AtomLevel))
photons = st.integers(0, 1)


@pytest.mark.parametrize("n_max", [1, 2, 3])
def test_full_basis_dimension(n_max):
    assert build_full_basis(n_max).dim == 25 * (n_max + 1) ** 3


@pytest.mark.parametrize("n_max", [0, 4, -1])
def test_truncation_bounds(n_max):
    with pytest.raises(InvalidTruncationError):
        build_full_basis(n_max)


def test_basis_order_is_lexicographic():
    b = build_full_basis(1)
    assert b.lookup(0).label == "aa|000"
    assert b.lookup(1).label == "aa|001"
    assert b.lookup(b.dim - 1).label == "ee|111"
    assert b.index("g0g1|000") == ((3 * 5 + 1) * 8)


@given(levels, levels, photons, photons, photons)
def test_label_round_trip(la, lb, na, nf, nb):
    s = BasisState(la, lb, na, nf, nb)
    assert BasisState.parse(s.label) == s


def test_label_without_photons_means_vacuum():
    assert ket("g0a") == ket("g0a|000")


@pytest.mark.parametrize("bad", ["", "g3g1|000", "g0g1|00", "x|000", "g0g1|0a0", "g0"])
def test_bad_labels(bad):
    with pytest.raises(LabelParseError):
        ket(bad)


def test_index_of_missing_state_raises():
    sub = reachable_closure(["g1g1|000"], [], build_full_basis(1))
    with pytest.raises(LabelParseError):
        sub.index("g0g1|000")


def _dense_atomic(atom, upper, lower, n_max):
    # oracle: explicit Kronecker product in (atomA, atomB, nA, nF, nB) order
    proj = np.zeros((5, 5))
    proj[upper, lower] = 1.0
    eye5 = np.eye(5)
    field = np.eye((n_max + 1) ** 3)
    a, b = (proj, eye5) if atom == "A" else (eye5, proj)
    return np.kron(np.kron(a, b), field)


@pytest.mark.parametrize("atom", ["A", "B"])
@pytest.mark.parametrize("upper,lower", [(AtomLevel.e, AtomLevel.g0), (AtomLevel.e, AtomLevel.a), (AtomLevel.g1, AtomLevel.e)])
def test_atomic_op_matches_kron_oracle(atom, upper, lower):
    b = build_full_basis(1)
    op = build_atomic_op(atom, upper, lower, b).toarray()
    np.testing.assert_array_equal(op, _dense_atomic(atom, upper, lower, 1))


@pytest.mark.parametrize("mode,slot", [("cavA", 0), ("fiber", 1), ("cavB", 2)])
@pytest.mark.parametrize("n_max", [1, 2])
def test_mode_op_matches_kron_oracle(mode, slot, n_max):
    b = build_full_basis(n_max)
    n = n_max + 1
    a = np.diag(np.sqrt(np.arange(1, n)), 1)
    factors = [np.eye(n)] * 3
    factors[slot] = a
    dense = np.kron(np.eye(25), np.kron(np.kron(factors[0], factors[1]), factors[2]))
    np.testing.assert_allclose(build_mode_op(mode, b).toarray(), dense, atol=1e-15)


def test_commutator_below_truncation():
    b = build_full_basis(2)
    a = build_mode_op("fiber", b)
    comm = (a @ dagger(a) - dagger(a) @ a).toarray()
    below = [i for i, s in enumerate(b.states) if s.n_f < 2]
    np.testing.assert_allclose(comm[np.ix_(below, below)], np.eye(len(below)), atol=1e-12)


def test_closure_is_closed_and_sorted_seed_independent():
    full = build_full_basis(1)
    sp = SystemParams()
    gens = [g for k in (1, 2, 3) for g in hamiltonian_terms(k, sp, full)]
    sub = reachable_closure(list(LOGICAL_KETS), gens, full)
    again = reachable_closure(list(reversed(LOGICAL_KETS)), gens, full)
    assert sub.states == again.states
    assert sub.dim == 15
    members = {full.index(s) for s in sub}
    for g in gens:
        g = sps.csc_matrix(g)
        for j in members:
            rows = g.indices[g.indptr[j] : g.indptr[j + 1]]
            assert set(rows.tolist()) <= members


def test_closure_needs_a_seed():
    with pytest.raises(ValueError):
        reachable_closure([], [], build_full_basis(1))


def test_embedding_is_isometry():
    full = build_full_basis(1)
    sub = reachable_closure(list(COMPUTATIONAL_KETS), [], full)
    emb = embedding(sub, full)
    np.testing.assert_array_equal((emb.T @ emb).toarray(), np.eye(sub.dim))


def test_state_and_density_helpers():
    b = build_full_basis(1)
    psi = StateVector(b, (b.vector("g0g1|000") + b.vector("g0g2|000")) / np.sqrt(2))
    assert psi.is_physical()
    assert psi.population("g0g1|000") == pytest.approx(0.5)
    rho = psi.density()
    assert rho.is_physical()
    assert rho.min_eigenvalue() > -1e-12
    other = DensityOperator.from_label(b, "g0g1|000")
    # trace distance between a pure state and one of its halves: sqrt(1 - 1/2)
    assert rho.trace_distance(other) == pytest.approx(np.sqrt(0.5), abs=1e-12)
    with pytest.raises(ValueError):
        StateVector(b, np.zeros(3))


@given(st.lists(st.tuples(levels, levels), min_size=1, max_size=6, unique=True))
def test_closure_without_generators_is_the_seed_set(pairs):
    full = build_full_basis(1)
    seeds = [BasisState(a, b) for a, b in pairs]
    sub = reachable_closure(seeds, [], full)
    assert set(sub.states) == set(seeds)
    assert [full.index(s) for s in sub] == sorted(full.index(s) for s in seeds)


def test_logical_kets_are_vacuum_product_states():
    for s in LOGICAL_KETS:
        assert (s.n_a, s.n_f, s.n_b) == (0, 0, 0)
    assert [s.label for s in COMPUTATIONAL_KETS] == ["g1g1|000", "g1g2|000", "g0g1|000", "g0g2|000"]
    assert len(set(itertools.chain(LOGICAL_KETS))) == 5
