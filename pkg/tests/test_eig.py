import numpy as np
import numpy.testing as npt
import pytest

from fermicorr.eig import EigResult, davidson_lowest, dense_lowest
from fermicorr.errors import CapacityError, ConvergenceError, DomainError
from fermicorr.fock import CiVector, enumerate_basis
from fermicorr.hamio import build_hubbard, hamiltonian_action

from conftest import random_hermitian


class MatrixAction:
    """Hermitian test action from an explicit matrix."""

    def __init__(self, matrix):
        self.matrix = np.asarray(matrix)

    def __call__(self, psi):
        return CiVector(psi.basis, self.matrix @ psi.amplitudes)

    def diagonal(self):
        return np.diag(self.matrix).real


def trivial_basis(dim):
    """An index space of exactly `dim` determinants for matrix actions."""
    if dim <= 64:
        return enumerate_basis(dim, 1)
    for d in range(4, 64):
        if d * (d - 1) // 2 == dim:
            return enumerate_basis(d, 2)
        for n in range(3, d):
            from math import comb
            if comb(d, n) == dim:
                return enumerate_basis(d, n)
    raise ValueError(f"no sector of size {dim}")


class TestDenseLowest:
    def test_one_by_one(self):
        basis = trivial_basis(1)
        res = dense_lowest(MatrixAction([[3.0]]), basis)
        assert res.energy == 3.0
        npt.assert_allclose(res.vector.amplitudes, [1.0])

    @pytest.mark.parametrize("u,expected", [
        (0.0, -2.0), (4.0, 2.0 - 2.0 * np.sqrt(2.0)),
    ])
    def test_hubbard_dimer(self, u, expected):
        ints = build_hubbard(2, 1.0, u)
        basis = enumerate_basis(4, 2, 0)
        res = dense_lowest(hamiltonian_action(ints, basis), basis)
        npt.assert_allclose(res.energy, expected, atol=1e-12)
        assert res.residual_norm < 1e-10

    def test_refuses_large(self):
        basis = enumerate_basis(16, 8)  # 12870 > 4096
        with pytest.raises(CapacityError):
            dense_lowest(MatrixAction(np.eye(basis.size)), basis)

    def test_phase_convention(self):
        basis = trivial_basis(3)
        m = random_hermitian(3, 0)
        res = dense_lowest(MatrixAction(m), basis)
        first = next(a for a in res.vector.amplitudes if abs(a) > 1e-12)
        assert first.real > 0 and abs(first.imag) < 1e-12


class TestDavidsonLowest:
    @pytest.mark.parametrize("seed,dim", [(0, 8), (1, 40), (2, 91)])
    def test_matches_dense(self, seed, dim):
        basis = trivial_basis(dim)
        m = random_hermitian(dim, seed)
        action = MatrixAction(m)
        dense = dense_lowest(action, basis)
        dav = davidson_lowest(action, basis, tol=1e-10)
        npt.assert_allclose(dav.energy, dense.energy, atol=1e-9)
        assert dav.residual_norm <= 1e-10

    def test_hubbard_l6_sector(self):
        ints = build_hubbard(6, 1.0, 4.0)
        basis = enumerate_basis(12, 6, 0)
        assert basis.size == 400
        action = hamiltonian_action(ints, basis)
        dense = dense_lowest(action, basis)
        dav = davidson_lowest(action, basis, tol=1e-9)
        npt.assert_allclose(dav.energy, dense.energy, atol=1e-9)

    def test_exact_guess_converges_immediately(self):
        basis = trivial_basis(30)
        m = random_hermitian(30, 3)
        action = MatrixAction(m)
        exact = dense_lowest(action, basis)
        res = davidson_lowest(action, basis, guess=exact.vector, tol=1e-9)
        assert res.iterations == 1

    def test_variational_history(self):
        basis = trivial_basis(60)
        m = random_hermitian(60, 4)
        res = davidson_lowest(MatrixAction(m), basis, tol=1e-10)
        final = res.ritz_history[-1]
        assert all(theta >= final - 1e-12 for theta in res.ritz_history)

    def test_phase_convention(self):
        basis = trivial_basis(20)
        m = random_hermitian(20, 5)
        res = davidson_lowest(MatrixAction(m), basis, tol=1e-10)
        first = next(a for a in res.vector.amplitudes if abs(a) > 1e-12)
        assert first.real > 0 and abs(first.imag) < 1e-12

    def test_nonconvergence_carries_best_estimate(self):
        basis = trivial_basis(78)
        m = random_hermitian(78, 6)
        with pytest.raises(ConvergenceError) as err:
            davidson_lowest(MatrixAction(m), basis, tol=1e-14, max_iter=2)
        assert err.value.best_energy is not None
        assert err.value.residual_norm is not None

    def test_near_degeneracy_flag(self):
        basis = trivial_basis(4)
        m = np.diag([0.0, 1e-8, 1.0, 2.0])
        res = davidson_lowest(MatrixAction(m), basis, tol=1e-10)
        assert res.near_degenerate
        res = dense_lowest(MatrixAction(np.diag([0.0, 0.5, 1.0, 2.0])), basis)
        assert not res.near_degenerate

    def test_invalid_tolerance(self):
        basis = trivial_basis(4)
        with pytest.raises(DomainError):
            davidson_lowest(MatrixAction(np.eye(4)), basis, tol=0.0)

    def test_subspace_restart_still_converges(self):
        # dim big enough to force at least one restart at the 24-vector cap
        basis = trivial_basis(120)
        m = random_hermitian(120, 9) + np.diag(np.linspace(0, 1, 120) * 0.01)
        action = MatrixAction(m)
        dense = dense_lowest(action, basis)
        dav = davidson_lowest(action, basis, tol=1e-9, max_iter=400)
        npt.assert_allclose(dav.energy, dense.energy, atol=1e-9)


def test_result_is_civector():
    basis = enumerate_basis(4, 2, 0)
    ints = build_hubbard(2, 1.0, 1.0)
    res = davidson_lowest(hamiltonian_action(ints, basis), basis)
    assert isinstance(res, EigResult)
    assert res.vector.basis is basis
    npt.assert_allclose(np.linalg.norm(res.vector.amplitudes), 1.0, atol=1e-12)
