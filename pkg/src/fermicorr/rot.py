"""Orbital-basis machinery: random rotations, exact CI-vector rotation,
the two-electron coefficient oracle, and minimization of total orbital
correlation over bases.

Rotation convention: a BasisRotation ``u`` lists the new modes as columns
in the old basis (for real orthogonal u the new annihilation operators
are ``a_p = sum_q u[q, p] f_q``). ``rotate_state`` returns the amplitudes
of the unchanged physical state re-expressed in the new mode basis, so
the 1RDM transforms as ``gamma -> u^+ gamma u``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from math import ceil, log2

import numpy as np
from scipy.linalg import expm, schur

from .corr import binary_entropy_sum, total_correlation_from_occupations
from .errors import DomainError, FermicorrError
from .fock import (CiVector, enumerate_basis, full_sector_embedding,
                   occupied_modes, parity_below)
from .rdm import natural_orbitals, one_rdm

TAYLOR_TERM_CUTOFF = 1e-14
DEGENERACY_FLAG_GAP = 1e-8


@dataclass
class BasisRotation:
    """One-particle basis change; columns of u are the new modes."""

    u: np.ndarray
    degenerate_occupations: bool | None = None

    def __post_init__(self):
        u = np.asarray(self.u, dtype=complex)
        if u.ndim != 2 or u.shape[0] != u.shape[1]:
            raise DomainError("rotation must be a square matrix")
        if np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) > 1e-10:
            raise DomainError("rotation is not unitary within 1e-10")
        self.u = u

    @property
    def dim(self) -> int:
        return self.u.shape[0]

    def is_real(self) -> bool:
        return bool(np.max(np.abs(self.u.imag)) < 1e-12)

    def compose(self, other: "BasisRotation") -> "BasisRotation":
        """Rotation equivalent to applying self first, then other."""
        return BasisRotation(self.u @ other.u)


def haar_orthogonal(dim: int, rng_seed) -> BasisRotation:
    """Haar-distributed real orthogonal matrix (QR with sign fix)."""
    if dim < 1:
        raise DomainError("dimension must be positive")
    rng = np.random.default_rng(rng_seed)
    m = rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(m)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return BasisRotation(q * signs)


def near_identity_orthogonal(dim: int, scale: float, rng_seed) -> BasisRotation:
    """exp of a random antisymmetric matrix, entries ~ Gaussian(0, scale^2)."""
    if scale <= 0:
        raise DomainError("scale must be positive")
    rng = np.random.default_rng(rng_seed)
    g = rng.standard_normal((dim, dim)) * scale
    a = np.triu(g, 1)
    return BasisRotation(expm(a - a.T))


def spin_expanded(u_spatial: np.ndarray) -> np.ndarray:
    """Spatial rotation acting identically on both spins (interleaved)."""
    return np.kron(np.asarray(u_spatial), np.eye(2))


def _is_spin_block_diagonal(u: np.ndarray) -> bool:
    return bool(np.max(np.abs(u[0::2, 1::2])) < 1e-14
                and np.max(np.abs(u[1::2, 0::2])) < 1e-14)


def _schur_log_unitary(u: np.ndarray) -> np.ndarray:
    """Principal anti-Hermitian logarithm of a unitary matrix."""
    t, z = schur(u.astype(complex), output="complex")
    lam = np.diag(t)
    lam = lam / np.abs(lam)
    kappa = z @ np.diag(1j * np.angle(lam)) @ z.conj().T
    return 0.5 * (kappa - kappa.conj().T)


def _log_unitary(u: np.ndarray) -> np.ndarray:
    """Logarithm with verification; spin blocks are logged separately so a
    spin-conserving rotation never acquires a spin-mixing generator."""
    if _is_spin_block_diagonal(u) and u.shape[0] % 2 == 0:
        kappa = np.zeros_like(u, dtype=complex)
        kappa[0::2, 0::2] = _schur_log_unitary(u[0::2, 0::2])
        kappa[1::2, 1::2] = _schur_log_unitary(u[1::2, 1::2])
    else:
        kappa = _schur_log_unitary(u)
    if np.max(np.abs(expm(kappa) - u)) > 1e-10:
        # retry once with a documented 1e-12 perturbing rotation
        d = u.shape[0]
        eps = np.triu(np.full((d, d), 1e-12), 1)
        u2 = u @ expm(eps - eps.T)
        kappa = _schur_log_unitary(u2)
        if np.max(np.abs(expm(kappa) - u2)) > 1e-9:
            raise DomainError("matrix logarithm of the rotation failed")
    return kappa


class _GeneratorAction:
    """Scatter tables for applying a one-body generator to a CI vector."""

    def __init__(self, basis, kappa: np.ndarray):
        self.diag_coeff = np.zeros(basis.size, dtype=complex)
        occ_matrix = np.zeros((basis.size, basis.d))
        for i, det in enumerate(basis.dets):
            for p in range(basis.d):
                if (det >> p) & 1:
                    occ_matrix[i, p] = 1.0
        self.diag_coeff = occ_matrix @ np.diag(kappa).astype(complex)
        self.tables = []
        index = basis.index
        for p in range(basis.d):
            for q in range(basis.d):
                if p == q or abs(kappa[p, q]) < 1e-15:
                    continue
                src, dst, signs = [], [], []
                for i, det in enumerate(basis.dets):
                    if not (det >> q) & 1 or (det >> p) & 1:
                        continue
                    det1 = det ^ (1 << q)
                    j = index.get(det1 | (1 << p))
                    if j is None:
                        raise DomainError(
                            "generator leaves the basis sector; embed the "
                            "state in the unrestricted N sector first")
                    src.append(i)
                    dst.append(j)
                    signs.append(parity_below(det, q) * parity_below(det1, p))
                if src:
                    self.tables.append(
                        (kappa[p, q], np.array(src), np.array(dst),
                         np.array(signs, dtype=float)))

    def __call__(self, x: np.ndarray) -> np.ndarray:
        out = self.diag_coeff * x
        for coeff, src, dst, signs in self.tables:
            out[dst] += coeff * signs * x[src]
        return out


def _apply_exp_generator(basis, kappa: np.ndarray, amps: np.ndarray) -> np.ndarray:
    """exp(kappa_hat) on amplitudes by scaling-and-squaring the CI vector:
    the Taylor series of exp(kappa_hat / 2^s) is applied 2^s times,
    truncating each series when the term norm drops below 1e-14."""
    gen = _GeneratorAction(basis, kappa)
    norm_bound = basis.n_particles * np.linalg.norm(kappa, 2)
    s = max(0, ceil(log2(max(norm_bound, 1.0))))
    steps = 1 << s
    x = amps.astype(complex)
    for _ in range(steps):
        term = x.copy()
        acc = x.copy()
        k = 0
        while np.linalg.norm(term) > TAYLOR_TERM_CUTOFF and k < 80:
            k += 1
            term = gen(term) / (k * steps)
            acc += term
        x = acc
    return x


def rotate_state(psi: CiVector, rot: BasisRotation) -> CiVector:
    """Re-express a CI vector in a rotated one-particle basis.

    A real rotation with det = -1 is handled by factoring out a reflection
    of the first new mode (an explicit amplitude sign flip) and rotating
    by the remaining special-orthogonal part. An Sz-restricted vector is
    embedded into the unrestricted N sector first whenever the rotation
    mixes spins.
    """
    u = rot.u
    basis = psi.basis
    if u.shape[0] != basis.d:
        raise DomainError(f"rotation dimension {u.shape[0]} != d={basis.d}")

    reflect_first_mode = False
    if rot.is_real() and np.linalg.det(u.real) < 0:
        u = u.copy()
        u[:, 0] = -u[:, 0]
        reflect_first_mode = True

    if basis.sz_twice is not None and not _is_spin_block_diagonal(u):
        psi = full_sector_embedding(psi)
        basis = psi.basis

    kappa = _log_unitary(u)
    # passive transform: amplitudes in the new basis are exp(-kappa_hat)|psi>
    amps = _apply_exp_generator(basis, -kappa, psi.amplitudes)

    if reflect_first_mode:
        for i, det in enumerate(basis.dets):
            if det & 1:
                amps[i] = -amps[i]

    drift = abs(np.linalg.norm(amps) - np.linalg.norm(psi.amplitudes))
    if drift > 1e-8:
        raise FermicorrError(f"rotation failed to preserve the norm ({drift:.2e})")
    amps *= np.linalg.norm(psi.amplitudes) / np.linalg.norm(amps)
    return CiVector(basis, amps)


# ---------------------------------------------------------------------------
# Two-electron coefficient-matrix oracle
# ---------------------------------------------------------------------------

def pair_coefficients(psi: CiVector) -> np.ndarray:
    """Antisymmetric coefficient matrix of a two-electron state.

    |Psi> = sum_{j<k} c[j, k] f_j^+ f_k^+ |0>, extended antisymmetrically.
    """
    basis = psi.basis
    if basis.n_particles != 2:
        raise DomainError("pair coefficients exist only for N = 2")
    c = np.zeros((basis.d, basis.d), dtype=complex)
    for i, det in enumerate(basis.dets):
        j, k = occupied_modes(det)
        c[j, k] = psi.amplitudes[i]
        c[k, j] = -psi.amplitudes[i]
    return c


def state_from_pair_coefficients(c: np.ndarray, sz_twice: int | None = None) -> CiVector:
    """Inverse of :func:`pair_coefficients` (basis enumerated on demand)."""
    c = np.asarray(c, dtype=complex)
    if np.max(np.abs(c + c.T)) > 1e-10:
        raise DomainError("coefficient matrix must be antisymmetric")
    d = c.shape[0]
    basis = enumerate_basis(d, 2, sz_twice)
    amps = np.zeros(basis.size, dtype=complex)
    for i, det in enumerate(basis.dets):
        j, k = occupied_modes(det)
        amps[i] = c[j, k]
    return CiVector(basis, amps)


def paired_state(p, d: int | None = None) -> CiVector:
    """|Psi> = sum_i p_i f^+_{2i} f^+_{2i+1} |0>: the compact two-electron
    form whose mode pairs are the natural spin-orbitals."""
    p = np.asarray(p, dtype=complex)
    if d is None:
        d = 2 * len(p)
    if 2 * len(p) > d:
        raise DomainError("more pair amplitudes than mode pairs")
    if abs(np.linalg.norm(p) - 1.0) > 1e-10:
        raise DomainError("pair amplitudes must be normalized")
    c = np.zeros((d, d), dtype=complex)
    for i, val in enumerate(p):
        c[2 * i, 2 * i + 1] = val
        c[2 * i + 1, 2 * i] = -val
    return state_from_pair_coefficients(c)


def rotate_two_electron_coeffs(c: np.ndarray, rot: BasisRotation) -> np.ndarray:
    """Coefficient-matrix form of rotate_state for N = 2: c' = u^T c u for
    real orthogonal u (u^+ c conj(u) in general); antisymmetry is exact."""
    c = np.asarray(c, dtype=complex)
    if np.max(np.abs(c + c.T)) > 1e-10:
        raise DomainError("coefficient matrix must be antisymmetric")
    u = rot.u
    cp = u.conj().T @ c @ u.conj()
    return 0.5 * (cp - cp.T)


def natural_pair_weights(c: np.ndarray) -> np.ndarray:
    """Squared pair amplitudes |p_i|^2 of the compact form, via the paired
    singular values of the antisymmetric coefficient matrix."""
    c = np.asarray(c, dtype=complex)
    if np.max(np.abs(c + c.T)) > 1e-10:
        raise DomainError("coefficient matrix must be antisymmetric")
    s = np.linalg.svd(c, compute_uv=False)
    return s[0::2] ** 2


# ---------------------------------------------------------------------------
# Natural basis and the total-correlation minimizer
# ---------------------------------------------------------------------------

def natural_basis_rotation(psi: CiVector) -> BasisRotation:
    """Rotation onto the natural spin-orbitals of the state's 1RDM.

    Degenerate occupations are flagged: within a degenerate multiplet the
    natural basis (and hence any measure that is not a function of the
    spectrum alone) is not unique.
    """
    lam, u = natural_orbitals(one_rdm(psi))
    gaps = np.abs(np.diff(lam))
    degenerate = bool(gaps.size and gaps.min() < DEGENERACY_FLAG_GAP)
    return BasisRotation(u, degenerate_occupations=degenerate)


def occupations_in_basis(gamma: np.ndarray, rot: BasisRotation) -> np.ndarray:
    """Diagonal of u^+ gamma u: mode occupations after rotate_state."""
    u = rot.u
    return np.real(np.einsum("ip,ij,jp->p", u.conj(), gamma, u))


def total_correlation_in_basis(gamma: np.ndarray, rot: BasisRotation) -> float:
    """I_B of a pure state with 1RDM gamma after rotating into rot's basis."""
    return total_correlation_from_occupations(
        np.clip(occupations_in_basis(gamma, rot), 0.0, 1.0))


@dataclass
class MinimizeResult:
    rotation: BasisRotation
    i_min_bits: float
    sweeps: int
    converged: bool


def _binary_entropy_pair(x: float, y: float) -> float:
    out = 0.0
    for v in (x, y):
        v = min(max(v, 0.0), 1.0)
        if 0.0 < v < 1.0:
            out -= v * np.log2(v) + (1.0 - v) * np.log2(1.0 - v)
    return out


def _golden_section(f, lo: float, hi: float, tol: float) -> float:
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def minimize_total_correlation(psi: CiVector, max_sweeps: int = 60,
                               tol: float = 1e-10) -> MinimizeResult:
    """Minimize I_B over one-particle bases by Jacobi pairwise descent.

    The objective depends on the state only through its 1RDM (I_B of a
    pure state is the binary-entropy sum over the rotated diagonal), so
    the sweeps rotate gamma directly: each mode pair gets a
    golden-section line search over the Givens angle, repeated until the
    per-sweep improvement falls below ``tol`` bits. Initialized at the
    natural basis, which the closed form proves optimal; the certificate
    I_min >= nonfreeness - 1e-9 is enforced on exit.
    """
    gamma0 = one_rdm(psi)
    start = natural_basis_rotation(psi)
    u = start.u.copy()
    gamma = u.conj().T @ gamma0 @ u
    d = gamma.shape[0]

    def objective() -> float:
        return total_correlation_from_occupations(
            np.clip(np.diag(gamma).real, 0.0, 1.0))

    current = objective()
    sweeps = 0
    converged = False
    for sweeps in range(1, max_sweeps + 1):
        improvement = 0.0
        for p in range(d):
            for q in range(p + 1, d):
                gpp = gamma[p, p].real
                gqq = gamma[q, q].real
                re_pq = gamma[p, q].real

                def pair_objective(theta):
                    c, s = np.cos(theta), np.sin(theta)
                    new_p = c * c * gpp + s * s * gqq + 2 * c * s * re_pq
                    new_q = s * s * gpp + c * c * gqq - 2 * c * s * re_pq
                    return _binary_entropy_pair(new_p, new_q)

                before = pair_objective(0.0)
                theta = _golden_section(pair_objective, -np.pi / 4, np.pi / 4,
                                        1e-7)
                gain = before - pair_objective(theta)
                if gain <= 1e-15:
                    continue
                improvement += gain
                c, s = np.cos(theta), np.sin(theta)
                g = np.array([[c, -s], [s, c]])
                gamma[:, [p, q]] = gamma[:, [p, q]] @ g
                gamma[[p, q], :] = g.T @ gamma[[p, q], :]
                u[:, [p, q]] = u[:, [p, q]] @ g
        current = objective()
        if improvement < tol:
            converged = True
            break

    floor = binary_entropy_sum(natural_orbitals(gamma0)[0])
    if current < floor - 1e-9:
        raise FermicorrError(
            f"minimizer reached {current} below the nonfreeness floor {floor}")
    if not converged:
        warnings.warn("total-correlation minimizer stopped at the sweep "
                      "limit without converging", stacklevel=2)
    return MinimizeResult(
        BasisRotation(u, degenerate_occupations=start.degenerate_occupations),
        float(current), sweeps, converged)
