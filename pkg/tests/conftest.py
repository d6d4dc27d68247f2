"""Shared fixtures and independent oracles.

The dense-operator builders here assemble matrices element by element
from single apply_ladder steps; they deliberately share nothing with the
grouped/scattered loops inside the library so that agreement between the
two is a real check.
"""

import os

import numpy as np
import pytest

from fermicorr.fock import (CiVector, apply_ladder, basis_state,
                            enumerate_basis)

FIXTURES_DIR = os.path.join(os.path.dirname(__file__), "..", "fixtures")


def ladder_chain_matrix(basis, ops):
    """Dense matrix of a product of ladder operators on one sector.

    ``ops`` is a sequence of (mode, kind) applied right to left, i.e. the
    last list entry acts on the ket first.
    """
    dim = basis.size
    mat = np.zeros((dim, dim), dtype=complex)
    for col, det in enumerate(basis.dets):
        cur = det
        sign = 1
        dead = False
        for mode, kind in reversed(ops):
            step = apply_ladder(cur, mode, kind, basis.d)
            if step is None:
                dead = True
                break
            cur, s = step
            sign *= s
        if dead or cur not in basis.index:
            continue
        mat[basis.index[cur], col] += sign
    return mat


def dense_one_body(basis, h):
    """sum_pq h_pq f_p^+ f_q assembled from apply_ladder."""
    dim = basis.size
    mat = np.zeros((dim, dim), dtype=complex)
    for p in range(basis.d):
        for q in range(basis.d):
            if h[p, q] != 0:
                mat += h[p, q] * ladder_chain_matrix(
                    basis, [(p, "create"), (q, "annihilate")])
    return mat


def dense_two_body(basis, w):
    """sum_{p<q, r<s} w[p,q,r,s] f_p^+ f_q^+ f_s f_r from apply_ladder."""
    dim = basis.size
    mat = np.zeros((dim, dim), dtype=complex)
    d = basis.d
    for p in range(d):
        for q in range(p + 1, d):
            for r in range(d):
                for s in range(r + 1, d):
                    if w[p, q, r, s] == 0:
                        continue
                    mat += w[p, q, r, s] * ladder_chain_matrix(
                        basis, [(p, "create"), (q, "create"),
                                (s, "annihilate"), (r, "annihilate")])
    return mat


def random_state(basis, seed, real=False):
    rng = np.random.default_rng(seed)
    amps = rng.standard_normal(basis.size)
    if not real:
        amps = amps + 1j * rng.standard_normal(basis.size)
    return CiVector(basis, amps / np.linalg.norm(amps))


def random_hermitian(d, seed, real=False):
    rng = np.random.default_rng(seed)
    m = rng.standard_normal((d, d))
    if not real:
        m = m + 1j * rng.standard_normal((d, d))
    return (m + m.conj().T) / 2


def random_antisymmetric_tensor(d, seed):
    """Random two-body tensor with the declared symmetries."""
    rng = np.random.default_rng(seed)
    w = rng.standard_normal((d, d, d, d)) + 1j * rng.standard_normal((d, d, d, d))
    w = w - w.transpose(1, 0, 2, 3)
    w = w - w.transpose(0, 1, 3, 2)
    w = w + w.transpose(2, 3, 0, 1).conj()
    return w


@pytest.fixture
def bonding_state():
    """Two electrons in the bonding combination of two orbitals, expressed
    in the atomic basis: the four-term state with amplitudes +-1/2."""
    basis = enumerate_basis(4, 2, 0)
    amps = {
        0b0011: 0.5,    # up, down on orbital i
        0b1001: 0.5,    # i up, j down
        0b0110: -0.5,   # j up, i down (reordering sign)
        0b1100: 0.5,    # up, down on orbital j
    }
    vec = np.zeros(basis.size, dtype=complex)
    for det, a in amps.items():
        vec[basis.index[det]] = a
    return CiVector(basis, vec)
