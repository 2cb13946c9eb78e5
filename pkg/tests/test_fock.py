import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bhdimer import fock


def test_basis_small():
    b = fock.build_basis(1)
    assert b.states == ((0, 0), (1, 0), (0, 1))
    assert b.dim == 3
    assert fock.build_basis(0).states == ((0, 0),)
    assert fock.build_basis(20).dim == 231


def test_basis_rejects_negative():
    with pytest.raises(ValueError):
        fock.build_basis(-1)


@given(st.integers(0, 25))
def test_basis_ordering(n_max):
    b = fock.build_basis(n_max)
    assert b.dim == (n_max + 1) * (n_max + 2) // 2
    assert len(set(b.states)) == b.dim
    keys = [(n1 + n2, -n1) for n1, n2 in b.states]
    assert keys == sorted(keys)
    for n in range(n_max + 1):
        s = b.block(n)
        assert s.stop - s.start == n + 1
        assert all(sum(b.states[i]) == n for i in range(s.start, s.stop))
    assert all(b.index[st_] == i for i, st_ in enumerate(b.states))


def test_annihilation_elements():
    b = fock.build_basis(3)
    a1 = fock.annihilation(b, 1)
    a2 = fock.annihilation(b, 2)
    i = b.index
    assert a1[i[0, 0], i[1, 0]] == 1
    assert a1[i[1, 0], i[2, 0]] == pytest.approx(math.sqrt(2))
    for n in range(4):
        assert np.all(a2[:, i[n, 0]] == 0)
    with pytest.raises(ValueError):
        fock.annihilation(b, 3)


def test_number_operators():
    b = fock.build_basis(2)
    i = b.index
    assert fock.number_operator(b, 1)[i[2, 0], i[2, 0]] == 2
    assert fock.number_operator(b, 2)[i[2, 0], i[2, 0]] == 0
    b1 = fock.build_basis(1)
    assert np.trace(fock.total_number(b1)).real == 2


@pytest.mark.parametrize("n_max", [2, 5, 8])
def test_commutator_interior(n_max):
    b = fock.build_basis(n_max)
    for mode in (1, 2):
        a = fock.annihilation(b, mode)
        comm = a @ a.conj().T - a.conj().T @ a
        interior = [k for k, (n1, n2) in enumerate(b.states) if n1 + n2 <= n_max - 1]
        np.testing.assert_allclose(comm[np.ix_(interior, interior)], np.eye(len(interior)), atol=1e-14)


def test_hopping_block():
    b = fock.build_basis(2)
    J = 0.7
    H = fock.hamiltonian(b, 0.0, J, 0.0, 0.0)
    np.testing.assert_allclose(H[b.block(1), b.block(1)], [[0, -J / 2], [-J / 2, 0]])


def _termwise(b, delta, J, U, omega):
    """Independent element-by-element builder."""
    H = np.zeros((b.dim, b.dim), dtype=complex)
    for k, (n1, n2) in enumerate(b.states):
        H[k, k] = -delta * (n1 + n2) + 0.5 * U * (n1 * (n1 - 1) + n2 * (n2 - 1))
        if n1 >= 1 and (n1 - 1, n2 + 1) in b.index:
            # a2^+ a1 |n1,n2> = sqrt(n1 (n2+1)) |n1-1,n2+1>
            m = b.index[n1 - 1, n2 + 1]
            H[m, k] += -0.5 * J * math.sqrt(n1 * (n2 + 1))
            H[k, m] += -0.5 * J * math.sqrt(n1 * (n2 + 1))
        if (n1 + 1, n2) in b.index:
            m = b.index[n1 + 1, n2]
            H[m, k] += 0.5 * omega * math.sqrt(n1 + 1)
            H[k, m] += 0.5 * omega * math.sqrt(n1 + 1)
    return H


def test_hamiltonian_diagonal_element():
    b = fock.build_basis(4)
    H = fock.hamiltonian(b, 1.5, 0.5, 0.25, 1 / math.sqrt(2))
    # detuning enters as -delta * N
    assert H[b.index[2, 0], b.index[2, 0]].real == pytest.approx(-2 * 1.5 + 0.25)


@settings(max_examples=30, deadline=None)
@given(
    n_max=st.integers(1, 6),
    delta=st.floats(-3, 3),
    J=st.floats(0, 2),
    U=st.floats(0, 1),
    omega=st.floats(0, 2),
)
def test_hamiltonian_matches_termwise(n_max, delta, J, U, omega):
    b = fock.build_basis(n_max)
    H = fock.hamiltonian(b, delta, J, U, omega)
    np.testing.assert_allclose(H, _termwise(b, delta, J, U, omega), atol=1e-13)
    assert np.array_equal(H, H.conj().T)


def test_hamiltonian_block_diagonal_without_drive():
    b = fock.build_basis(6)
    H = fock.hamiltonian(b, 0.3, 0.5, 0.25, 0.0)
    for n in range(7):
        for m in range(7):
            if n != m:
                assert np.all(H[b.block(n), b.block(m)] == 0)


def test_hamiltonian_rejects_negative_U():
    with pytest.raises(ValueError):
        fock.hamiltonian(fock.build_basis(2), 0, 0.5, -0.1, 0)


def test_current_operator():
    b = fock.build_basis(5)
    j = fock.current_operator(b)
    assert np.array_equal(j, j.conj().T)
    assert np.all(np.diag(j) == 0)
    Ntot = fock.total_number(b)
    np.testing.assert_allclose(j @ Ntot - Ntot @ j, 0, atol=1e-14)
    blk = j[b.block(1), b.block(1)]
    np.testing.assert_allclose(blk, [[0, -1 / 2j], [1 / 2j, 0]], atol=1e-15)
    np.testing.assert_allclose(np.linalg.eigvalsh(blk), [-0.5, 0.5])
