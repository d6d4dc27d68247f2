import numpy as np
import numpy.testing as npt
import pytest

from fermicorr.corr import (ci_entropy, nonfreeness,
                            total_orbital_correlation)
from fermicorr.errors import DomainError
from fermicorr.fock import basis_state, enumerate_basis, inner
from fermicorr.hamio import (antisymmetrized_two_body, build_hubbard,
                             hamiltonian_action, spin_one_body)
from fermicorr.rdm import natural_orbitals, one_rdm
from fermicorr.rot import (BasisRotation, haar_orthogonal,
                           minimize_total_correlation,
                           natural_basis_rotation, natural_pair_weights,
                           near_identity_orthogonal, occupations_in_basis,
                           pair_coefficients, paired_state, rotate_state,
                           rotate_two_electron_coeffs, spin_expanded,
                           state_from_pair_coefficients,
                           total_correlation_in_basis)

from conftest import random_state


def haar_unitary(dim, seed):
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((dim, dim))
         + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return BasisRotation(q * (d / np.abs(d)))


class TestHaarOrthogonal:
    def test_orthogonality(self):
        for seed in range(5):
            u = haar_orthogonal(6, seed).u
            npt.assert_allclose(u.conj().T @ u, np.eye(6), atol=1e-12)
            assert np.max(np.abs(u.imag)) == 0

    def test_deterministic_per_seed(self):
        npt.assert_array_equal(haar_orthogonal(5, 123).u,
                               haar_orthogonal(5, 123).u)
        assert not np.array_equal(haar_orthogonal(5, 123).u,
                                  haar_orthogonal(5, 124).u)

    def test_uniformity_diagnostic(self):
        # first-entry-squared of a Haar column has mean 1/dim
        dim, n_samples = 4, 10_000
        vals = np.array([haar_orthogonal(dim, [77, i]).u[0, 0] ** 2
                         for i in range(n_samples)])
        assert abs(vals.mean() - 1 / dim) < 0.01
        # sign symmetry: first entry is positive about half the time
        signs = np.array([haar_orthogonal(dim, [78, i]).u[0, 0] > 0
                          for i in range(n_samples)])
        assert abs(signs.mean() - 0.5) < 0.03


class TestNearIdentityOrthogonal:
    def test_orthogonality(self):
        u = near_identity_orthogonal(6, 0.1, 1).u
        npt.assert_allclose(u.conj().T @ u, np.eye(6), atol=1e-12)

    def test_small_scale_approaches_identity(self):
        dist_small = np.linalg.norm(near_identity_orthogonal(6, 1e-4, 2).u
                                    - np.eye(6))
        dist_large = np.linalg.norm(near_identity_orthogonal(6, 0.3, 2).u
                                    - np.eye(6))
        assert dist_small < 1e-3 < dist_large

    def test_concentration_scaling(self):
        dists = {}
        for scale in (0.02, 0.2):
            samples = [np.linalg.norm(
                near_identity_orthogonal(4, scale, [5, i]).u - np.eye(4))
                for i in range(200)]
            dists[scale] = np.mean(samples)
        assert dists[0.02] < dists[0.2] / 5

    def test_rejects_bad_scale(self):
        with pytest.raises(DomainError):
            near_identity_orthogonal(4, 0.0, 0)


class TestRotateState:
    def test_identity(self):
        psi = random_state(enumerate_basis(6, 3), 0)
        out = rotate_state(psi, BasisRotation(np.eye(6)))
        npt.assert_allclose(out.amplitudes, psi.amplitudes, atol=1e-12)

    def test_bonding_to_natural_determinant(self, bonding_state):
        # atomic -> bonding/antibonding transform maps the four-term state
        # onto a single determinant occupying the first two new modes
        ub = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2)
        out = rotate_state(bonding_state, BasisRotation(spin_expanded(ub)))
        target = basis_state(out.basis, 0b0011)
        npt.assert_allclose(out.amplitudes, target.amplitudes, atol=1e-10)

    @pytest.mark.parametrize("seed", range(4))
    def test_agrees_with_coefficient_oracle(self, seed):
        psi = paired_state(_random_pairs(3, seed))
        c = pair_coefficients(psi)
        rot = haar_orthogonal(6, seed + 50)
        via_state = rotate_state(psi, rot)
        via_coeffs = state_from_pair_coefficients(
            rotate_two_electron_coeffs(c, rot))
        npt.assert_allclose(via_state.amplitudes, via_coeffs.amplitudes,
                            atol=1e-10)

    def test_agrees_with_coefficient_oracle_complex(self):
        psi = paired_state(_random_pairs(2, 9))
        rot = haar_unitary(4, 3)
        via_state = rotate_state(psi, rot)
        via_coeffs = state_from_pair_coefficients(
            rotate_two_electron_coeffs(pair_coefficients(psi), rot))
        npt.assert_allclose(via_state.amplitudes, via_coeffs.amplitudes,
                            atol=1e-10)

    def test_reflection_branch(self):
        # det = -1 orthogonal: reflection factored out explicitly
        psi = random_state(enumerate_basis(4, 2), 5)
        u = haar_orthogonal(4, 11).u
        if np.linalg.det(u) > 0:
            u = u.copy()
            u[:, [0, 1]] = u[:, [1, 0]]
        assert np.linalg.det(u) < 0
        out = rotate_state(psi, BasisRotation(u))
        npt.assert_allclose(np.linalg.norm(out.amplitudes), 1.0, atol=1e-10)
        npt.assert_allclose(one_rdm(out), u.conj().T @ one_rdm(psi) @ u,
                            atol=1e-9)

    def test_norm_preserved(self):
        psi = random_state(enumerate_basis(6, 3), 6)
        out = rotate_state(psi, haar_orthogonal(6, 7))
        npt.assert_allclose(np.linalg.norm(out.amplitudes), 1.0, atol=1e-12)

    @pytest.mark.parametrize("seed", range(3))
    def test_one_rdm_covariance(self, seed):
        psi = random_state(enumerate_basis(6, 3), seed + 20)
        rot = haar_orthogonal(6, seed + 30)
        gamma_rotated = one_rdm(rotate_state(psi, rot))
        npt.assert_allclose(gamma_rotated,
                            rot.u.conj().T @ one_rdm(psi) @ rot.u, atol=1e-9)

    def test_spectrum_invariance(self):
        psi = random_state(enumerate_basis(6, 3), 40)
        lam0, _ = natural_orbitals(one_rdm(psi))
        lam1, _ = natural_orbitals(one_rdm(rotate_state(psi,
                                                        haar_orthogonal(6, 41))))
        npt.assert_allclose(lam1, lam0, atol=1e-9)

    def test_nonfreeness_invariance(self):
        psi = random_state(enumerate_basis(6, 3), 42)
        n0 = nonfreeness(psi)
        for seed in range(3):
            rotated = rotate_state(psi, haar_orthogonal(6, seed + 70))
            assert nonfreeness(rotated) == pytest.approx(n0, abs=1e-9)

    def test_sz_restricted_spin_conserving_stays(self):
        psi = random_state(enumerate_basis(6, 3, 1), 43)
        us = haar_orthogonal(3, 44).u
        out = rotate_state(psi, BasisRotation(spin_expanded(us)))
        assert out.basis.sz_twice == 1

    def test_sz_restricted_spin_mixing_embeds(self):
        psi = random_state(enumerate_basis(6, 3, 1), 45)
        out = rotate_state(psi, haar_orthogonal(6, 46))
        assert out.basis.sz_twice is None
        assert out.basis.n_particles == 3

    def test_composition(self):
        psi = random_state(enumerate_basis(4, 2), 47)
        r1 = haar_orthogonal(4, 48)
        r2 = haar_orthogonal(4, 49)
        seq = rotate_state(rotate_state(psi, r1), r2)
        combined = rotate_state(psi, r1.compose(r2))
        npt.assert_allclose(seq.amplitudes, combined.amplitudes, atol=1e-10)

    def test_energy_invariance(self):
        # rotate both state and integrals: <H'> equals <H>
        ints = build_hubbard(2, 1.0, 4.0)
        basis = enumerate_basis(4, 2, 0)
        action = hamiltonian_action(ints, basis)
        from fermicorr.eig import dense_lowest
        ground = dense_lowest(action, basis)
        e0 = ground.energy

        rot = haar_orthogonal(4, 50)
        psi_rot = rotate_state(ground.vector, rot)
        h_spin = spin_one_body(ints)
        w = antisymmetrized_two_body(ints)
        u = rot.u
        h_rot = u.conj().T @ h_spin @ u
        w_rot = np.einsum("ap,bq,abcd,cr,ds->pqrs",
                          u.conj(), u.conj(), w, u, u)
        from fermicorr.fock import apply_one_body, apply_two_body
        h_psi = apply_one_body(psi_rot, h_rot)
        w_psi = apply_two_body(psi_rot, w_rot)  # carries the 1/4 convention
        energy = (inner(psi_rot, h_psi) + inner(psi_rot, w_psi)).real
        assert energy + ints.e_core == pytest.approx(e0, abs=1e-8)


def _random_pairs(k, seed):
    rng = np.random.default_rng(seed)
    p = rng.standard_normal(k)
    return p / np.linalg.norm(p)


class TestTwoElectronCoeffs:
    def test_extraction_round_trip(self):
        psi = paired_state(_random_pairs(3, 1))
        back = state_from_pair_coefficients(pair_coefficients(psi))
        npt.assert_allclose(back.amplitudes, psi.amplitudes, atol=1e-12)

    def test_identity(self):
        c = pair_coefficients(paired_state(_random_pairs(2, 2)))
        npt.assert_allclose(rotate_two_electron_coeffs(
            c, BasisRotation(np.eye(4))), c, atol=1e-12)

    def test_composition(self):
        c = pair_coefficients(paired_state(_random_pairs(3, 3)))
        r1 = haar_orthogonal(6, 4)
        r2 = haar_orthogonal(6, 5)
        seq = rotate_two_electron_coeffs(rotate_two_electron_coeffs(c, r1), r2)
        joint = rotate_two_electron_coeffs(c, r1.compose(r2))
        npt.assert_allclose(seq, joint, atol=1e-12)

    def test_antisymmetry_preserved(self):
        c = pair_coefficients(random_state(enumerate_basis(6, 2), 6))
        cp = rotate_two_electron_coeffs(c, haar_orthogonal(6, 7))
        npt.assert_allclose(cp, -cp.T, atol=1e-14)

    def test_natural_transform_gives_paired_blocks(self):
        # rotating into the natural basis block-diagonalizes c into
        # 2x2 antisymmetric blocks (the compact two-electron form)
        psi = random_state(enumerate_basis(6, 2), 8, real=True)
        c = pair_coefficients(psi)
        rot = natural_basis_rotation(psi)
        cp = rotate_two_electron_coeffs(c, rot)
        mask = np.ones((6, 6), dtype=bool)
        for blk in range(3):
            mask[2 * blk: 2 * blk + 2, 2 * blk: 2 * blk + 2] = False
        assert np.max(np.abs(cp[mask])) < 1e-8

    def test_natural_pair_weights_match_occupations(self):
        psi = random_state(enumerate_basis(6, 2), 9)
        weights = natural_pair_weights(pair_coefficients(psi))
        lam, _ = natural_orbitals(one_rdm(psi))
        npt.assert_allclose(np.repeat(weights, 2), lam, atol=1e-9)
        assert weights.sum() == pytest.approx(1.0, abs=1e-10)


class TestNaturalBasisRotation:
    def test_determinant_flagged_degenerate(self):
        basis = enumerate_basis(4, 2)
        rot = natural_basis_rotation(basis_state(basis, 0b0011))
        assert rot.degenerate_occupations

    def test_diagonalizes_one_rdm(self):
        psi = random_state(enumerate_basis(6, 3), 10)
        rotated = rotate_state(psi, natural_basis_rotation(psi))
        gamma = one_rdm(rotated)
        off_diag = gamma - np.diag(np.diag(gamma))
        assert np.max(np.abs(off_diag)) < 1e-9

    def test_bonding_state(self, bonding_state):
        rot = natural_basis_rotation(bonding_state)
        out = rotate_state(bonding_state, rot)
        assert ci_entropy(out) == pytest.approx(0.0, abs=1e-9)


class TestMinimizeTotalCorrelation:
    def test_determinant(self):
        basis = enumerate_basis(4, 2)
        res = minimize_total_correlation(basis_state(basis, 0b0101))
        assert res.i_min_bits == pytest.approx(0.0, abs=1e-10)

    def test_uniform_two_electron(self):
        psi = paired_state([1 / np.sqrt(2), 1 / np.sqrt(2)])
        res = minimize_total_correlation(psi)
        assert res.i_min_bits == pytest.approx(4.0, abs=1e-9)

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_nonfreeness_closed_form(self, seed):
        psi = random_state(enumerate_basis(6, 2), seed + 80)
        res = minimize_total_correlation(psi)
        assert res.i_min_bits == pytest.approx(nonfreeness(psi), abs=1e-7)
        assert res.i_min_bits >= nonfreeness(psi) - 1e-9
        assert res.converged

    def test_rotating_by_result_reaches_minimum(self):
        psi = random_state(enumerate_basis(6, 3), 90)
        res = minimize_total_correlation(psi)
        rotated = rotate_state(psi, res.rotation)
        assert total_orbital_correlation(rotated) == pytest.approx(
            res.i_min_bits, abs=1e-8)


class TestSampledLowerBound:
    @pytest.mark.parametrize("seed", range(3))
    def test_every_sampled_basis_dominates_nonfreeness(self, seed):
        psi = random_state(enumerate_basis(6, 3), seed + 100)
        gamma = one_rdm(psi)
        floor = nonfreeness(psi)
        for i in range(200):
            rot = haar_orthogonal(6, [seed, i])
            assert total_correlation_in_basis(gamma, rot) >= floor - 1e-9

    def test_occupations_in_basis_matches_rotate_state(self):
        psi = random_state(enumerate_basis(6, 3), 110)
        rot = haar_orthogonal(6, 111)
        from fermicorr.rdm import one_rdm_diagonal
        direct = one_rdm_diagonal(rotate_state(psi, rot))
        fast = occupations_in_basis(one_rdm(psi), rot)
        npt.assert_allclose(fast, direct, atol=1e-9)

    @pytest.mark.parametrize("seed", range(3))
    def test_two_electron_ci_entropy_conjecture(self, seed):
        psi = paired_state(_random_pairs(3, seed + 200))
        c = pair_coefficients(psi)
        h_min = float(sum(-w * np.log2(w)
                          for w in natural_pair_weights(c) if w > 1e-16))
        for i in range(300):
            cp = rotate_two_electron_coeffs(c, haar_orthogonal(6, [seed, i]))
            weights = np.abs(cp[np.triu_indices(6, k=1)]) ** 2
            h = float(sum(-w * np.log2(w) for w in weights if w > 1e-16))
            assert h_min <= h + 1e-9
