"""Reduced density matrices, natural orbitals, and free states.

Conventions:

* 1RDM: ``gamma[i, j] = <Psi| f_j^+ f_i |Psi>`` (trace N, eigenvalues in
  [0, 1]).
* 2RDM: ``D[i][j][k][l] = <Psi| f_l^+ f_k^+ f_i f_j |Psi>``, stored over
  ordered pairs (i<j, k<l) as a C(d,2) x C(d,2) Hermitian matrix with the
  antisymmetry implicit; the pair trace equals N(N-1)/2.
* Free states are kept spectrally as (natural basis U, occupations
  lambda); they are never expanded over 2^d configurations except on the
  d <= 20 enumeration path.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import CapacityError, DomainError
from .fock import CiVector, occupied_modes, parity_below

EIG_CLAMP_TOL = 1e-10
FREE_STATE_ENUMERATION_CAP = 20


@lru_cache(maxsize=None)
def mode_pairs(d: int) -> tuple[tuple[int, int], ...]:
    """Ordered mode pairs (i < j) in row-major order."""
    return tuple((i, j) for i in range(d) for j in range(i + 1, d))


@lru_cache(maxsize=None)
def pair_index_map(d: int) -> dict:
    return {pq: a for a, pq in enumerate(mode_pairs(d))}


def validate_one_rdm(gamma: np.ndarray, n_particles: int | None = None) -> None:
    gamma = np.asarray(gamma)
    if gamma.ndim != 2 or gamma.shape[0] != gamma.shape[1]:
        raise DomainError("1RDM must be a square matrix")
    if np.max(np.abs(gamma - gamma.conj().T)) > 1e-10:
        raise DomainError("1RDM is not Hermitian within 1e-10")
    evals = np.linalg.eigvalsh(gamma)
    if evals.min() < -EIG_CLAMP_TOL or evals.max() > 1 + EIG_CLAMP_TOL:
        raise DomainError("1RDM eigenvalues leave [0, 1] beyond tolerance")
    if n_particles is not None and abs(np.trace(gamma).real - n_particles) > 1e-10:
        raise DomainError("1RDM trace does not match the particle number")


def one_rdm(psi: CiVector) -> np.ndarray:
    """gamma[i, j] = <Psi| f_j^+ f_i |Psi> in the vector's mode basis."""
    basis = psi.basis
    d = basis.d
    gamma = np.zeros((d, d), dtype=complex)
    index = basis.index
    for n, det in enumerate(basis.dets):
        amp = psi.amplitudes[n]
        if amp == 0:
            continue
        w = abs(amp) ** 2
        occ = occupied_modes(det)
        for p in occ:
            gamma[p, p] += w
            det1 = det ^ (1 << p)
            s1 = parity_below(det, p)
            # f_q^+ f_p contributes to gamma[p, q]; missing targets are
            # exact zeros of the restricted sector, not an error.
            for q in range(d):
                if q == p or (det1 >> q) & 1:
                    continue
                m = index.get(det1 | (1 << q))
                if m is None:
                    continue
                sign = s1 * parity_below(det1, q)
                gamma[p, q] += sign * np.conj(psi.amplitudes[m]) * amp
    return gamma


def one_rdm_diagonal(psi: CiVector) -> np.ndarray:
    """Mode occupations <n_i>; the diagonal of :func:`one_rdm`."""
    basis = psi.basis
    diag = np.zeros(basis.d)
    probs = np.abs(psi.amplitudes) ** 2
    for n, det in enumerate(basis.dets):
        if probs[n] == 0:
            continue
        for p in occupied_modes(det):
            diag[p] += probs[n]
    return diag


def natural_orbitals(gamma: np.ndarray):
    """Diagonalize a 1RDM: occupations sorted descending and unitary U.

    ``gamma = U diag(lam) U^+`` with eigenvalues clamped to [0, 1].
    Degenerate clusters are canonicalized deterministically: eigenvectors
    are re-mixed to diagonalize the mode-index operator inside the cluster
    (this keeps natural orbitals spin-pure whenever gamma is
    spin-block-diagonal), then ordered lexicographically on rounded
    components with a fixed phase.
    """
    gamma = np.asarray(gamma, dtype=complex)
    validate_one_rdm(gamma)
    d = gamma.shape[0]
    evals, evecs = np.linalg.eigh(gamma)
    evals = evals[::-1].copy()
    evecs = evecs[:, ::-1].copy()

    tie_breaker = np.arange(d, dtype=float)
    i = 0
    while i < d:
        j = i + 1
        while j < d and abs(evals[j] - evals[i]) < EIG_CLAMP_TOL:
            j += 1
        if j - i > 1:
            block = evecs[:, i:j]
            w = block.conj().T @ (tie_breaker[:, None] * block)
            w = 0.5 * (w + w.conj().T)
            w_evals, mix = np.linalg.eigh(w)
            block = _fix_column_phases(block @ mix)
            # primary key: mode-index expectation (keeps spin-pure vectors
            # in the interleaved up/down order); lexicographic fallback
            order = sorted(
                range(j - i),
                key=lambda c: (np.round(w_evals[c], 8),)
                + tuple(np.round(block[:, c].real, 8))
                + tuple(np.round(block[:, c].imag, 8)),
            )
            evecs[:, i:j] = block[:, order]
        i = j

    evecs = _fix_column_phases(evecs)
    return np.clip(evals, 0.0, 1.0), evecs


def _fix_column_phases(m: np.ndarray) -> np.ndarray:
    m = m.copy()
    for k in range(m.shape[1]):
        col = m[:, k]
        idx = int(np.argmax(np.abs(col)))
        ph = col[idx]
        if abs(ph) > 1e-14:
            m[:, k] = col * (abs(ph) / ph)
    return m


@dataclass(frozen=True)
class TwoRdm:
    """2RDM over ordered pairs; see the module docstring for conventions."""

    d: int
    matrix: np.ndarray

    def __post_init__(self):
        n_pair = len(mode_pairs(self.d))
        if self.matrix.shape != (n_pair, n_pair):
            raise DomainError("pair matrix has the wrong shape")

    def element(self, i: int, j: int, k: int, l: int) -> complex:
        """D[i][j][k][l] with the antisymmetry applied on the fly."""
        if i == j or k == l:
            return 0.0
        sign = 1.0
        if i > j:
            i, j, sign = j, i, -sign
        if k > l:
            k, l, sign = l, k, -sign
        pidx = pair_index_map(self.d)
        return sign * self.matrix[pidx[(i, j)], pidx[(k, l)]]

    def pair_trace(self) -> float:
        """sum_{i<j} D[i][j][i][j]; equals N(N-1)/2 for an N-particle state."""
        return float(np.trace(self.matrix).real)

    def dense(self) -> np.ndarray:
        """Full d^4 tensor (test and diagnostics path)."""
        d = self.d
        out = np.zeros((d, d, d, d), dtype=complex)
        pairs = mode_pairs(d)
        for a, (i, j) in enumerate(pairs):
            for b, (k, l) in enumerate(pairs):
                v = self.matrix[a, b]
                out[i, j, k, l] = v
                out[j, i, k, l] = -v
                out[i, j, l, k] = -v
                out[j, i, l, k] = v
        return out

    def contract_to_one_body(self) -> np.ndarray:
        """sum_k D[i][k][j][k]; equals (N-1) gamma for an N-particle state."""
        d = self.d
        out = np.zeros((d, d), dtype=complex)
        for i in range(d):
            for j in range(d):
                out[i, j] = sum(self.element(i, k, j, k) for k in range(d))
        return out


def two_rdm(psi: CiVector) -> TwoRdm:
    """D[i][j][k][l] = <Psi| f_l^+ f_k^+ f_i f_j |Psi>."""
    basis = psi.basis
    d = basis.d
    pairs = mode_pairs(d)
    pidx = pair_index_map(d)
    m = np.zeros((len(pairs), len(pairs)), dtype=complex)
    index = basis.index
    amps = psi.amplitudes
    for n, det in enumerate(basis.dets):
        amp = amps[n]
        if amp == 0:
            continue
        occ = occupied_modes(det)
        for a, i in enumerate(occ):
            for j in occ[a + 1:]:
                # f_l^+ f_k^+ f_i f_j right to left: j out, i out, k in, l in
                s0 = parity_below(det, j)
                det1 = det ^ (1 << j)
                s0 *= parity_below(det1, i)
                det1 ^= 1 << i
                col = pidx[(i, j)]
                base = s0 * amp
                empties = [k for k in range(d) if not (det1 >> k) & 1]
                for b, k in enumerate(empties):
                    det2 = det1 | (1 << k)
                    s1 = parity_below(det1, k)
                    for l in empties[b + 1:]:
                        target = index.get(det2 | (1 << l))
                        if target is None:
                            continue
                        sign = s1 * parity_below(det2, l)
                        m[col, pidx[(k, l)]] += np.conj(amps[target]) * sign * base
    return TwoRdm(d, m)


def free_state_two_rdm(gamma: np.ndarray) -> TwoRdm:
    """Wick 2RDM of the free state with the given 1RDM.

    D[i][j][k][l] = gamma_ik gamma_jl - gamma_il gamma_jk; this is the
    Hartree-Fock 2RDM functional evaluated on gamma, and it equals the
    exact 2RDM whenever gamma is idempotent.
    """
    gamma = np.asarray(gamma, dtype=complex)
    validate_one_rdm(gamma)
    d = gamma.shape[0]
    pairs = mode_pairs(d)
    ii = np.array([p[0] for p in pairs])
    jj = np.array([p[1] for p in pairs])
    m = (gamma[ii[:, None], ii[None, :]] * gamma[jj[:, None], jj[None, :]]
         - gamma[ii[:, None], jj[None, :]] * gamma[jj[:, None], ii[None, :]])
    return TwoRdm(d, m)


@dataclass(frozen=True)
class FreeState:
    """Spectral representation (U, lambda) of a free state.

    Columns of ``natural_basis`` are the natural spin-orbitals; the state
    itself is diagonal in the induced occupation basis with product
    weights prod_i lam_i^{n_i} (1-lam_i)^{1-n_i}.
    """

    natural_basis: np.ndarray
    occupations: np.ndarray

    def __post_init__(self):
        u = self.natural_basis
        if np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) > 1e-10:
            raise DomainError("natural basis is not unitary within 1e-10")
        lam = np.asarray(self.occupations)
        if lam.min() < -EIG_CLAMP_TOL or lam.max() > 1 + EIG_CLAMP_TOL:
            raise DomainError("occupations leave [0, 1]")

    @property
    def d(self) -> int:
        return self.natural_basis.shape[0]

    def one_rdm(self) -> np.ndarray:
        u = self.natural_basis
        return u @ np.diag(self.occupations) @ u.conj().T

    def mean_particle_number(self) -> float:
        return float(np.sum(self.occupations))


def free_state_from_one_rdm(gamma: np.ndarray) -> FreeState:
    lam, u = natural_orbitals(gamma)
    return FreeState(u, lam)


def occupations_to_csv(lam) -> str:
    """Natural-occupation spectrum as CSV: columns index, occupation."""
    lines = ["index,occupation"]
    for i, value in enumerate(np.asarray(lam, dtype=float)):
        lines.append(f"{i},{float(value)!r}")
    return "\n".join(lines) + "\n"


def free_state_occupation_weights(lam, configs=None) -> np.ndarray:
    """Product weights of configurations under a free state's occupations.

    ``configs`` is an iterable of packed determinants; by default all 2^d
    configurations are enumerated, which is refused above d = 20 (use the
    spectral representation instead).
    """
    lam = np.clip(np.asarray(lam, dtype=float), 0.0, 1.0)
    d = len(lam)
    if configs is None:
        if d > FREE_STATE_ENUMERATION_CAP:
            raise CapacityError(
                f"full enumeration over 2^{d} configurations refused; "
                "use the spectral representation")
        configs = range(1 << d)
    weights = []
    for det in configs:
        w = 1.0
        for i in range(d):
            w *= lam[i] if (det >> i) & 1 else 1.0 - lam[i]
        weights.append(w)
    return np.array(weights)
