"""Correlation-measure suite.

Entropies are in bits (log2) throughout. Orbital subsystems follow the
occupation-number mapping: a subset A of modes induces a local Fock space
of dimension 2^|A| whose configurations are packed with the first subset
mode in the least significant bit. Signs are fixed by permuting the
subset modes to the front of the creation-operator product (parity of the
permutation applied per determinant amplitude) before tracing out the
complement.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, DomainError, FermicorrError
from .fock import CiVector, occupied_modes
from .rdm import natural_orbitals, one_rdm, one_rdm_diagonal

REDUCED_STATE_MODE_CAP = 12


# ---------------------------------------------------------------------------
# Entropies
# ---------------------------------------------------------------------------

def _clamped_spectrum(values, tol: float = 1e-8) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.min() < -tol or values.max() > 1 + tol:
        raise DomainError(f"spectrum leaves [0, 1] beyond {tol:g}")
    return np.clip(values, 0.0, 1.0)


def _entropy_bits(p: np.ndarray) -> float:
    p = p[p > 0.0]
    if p.size == 0:
        return 0.0
    return float(-np.sum(p * np.log2(p)))


def von_neumann_entropy(spectrum_or_matrix) -> float:
    """S = -sum lam log2 lam, with 0 log 0 = 0.

    Accepts a probability spectrum (1-d) or a density matrix (2-d); a
    density matrix whose trace deviates from 1 by more than 1e-8 is
    rejected.
    """
    arr = np.asarray(spectrum_or_matrix)
    if arr.ndim == 1:
        return _entropy_bits(_clamped_spectrum(arr.real))
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DomainError("expected a spectrum or a square density matrix")
    if abs(np.trace(arr).real - 1.0) > 1e-8:
        raise DomainError("density matrix trace deviates from 1 by more than 1e-8")
    if np.max(np.abs(arr - arr.conj().T)) > 1e-8:
        raise DomainError("density matrix is not Hermitian")
    return _entropy_bits(_clamped_spectrum(np.linalg.eigvalsh(arr)))


def binary_entropy(x: float) -> float:
    """b(x) = -x log2 x - (1-x) log2 (1-x) in bits."""
    if not -1e-10 <= x <= 1 + 1e-10:
        raise DomainError(f"binary entropy argument {x} outside [0, 1]")
    x = float(np.clip(x, 0.0, 1.0))
    return _entropy_bits(np.array([x, 1.0 - x]))


def binary_entropy_sum(values) -> float:
    """sum_i b(v_i) for a vector of occupations."""
    v = _clamped_spectrum(values, tol=1e-8)
    return _entropy_bits(v) + _entropy_bits(1.0 - v)


# ---------------------------------------------------------------------------
# Scalar measures of a CI vector
# ---------------------------------------------------------------------------

def _require_normalized(psi: CiVector):
    n = np.linalg.norm(psi.amplitudes)
    if abs(n - 1.0) > 1e-8:
        raise DomainError(f"state is not normalized (norm {n})")


def nonfreeness(psi: CiVector) -> float:
    """Relative-entropy distance to the free states, sum_i b(lam_i) bits.

    The minimizing free state shares the 1RDM of psi, so the measure
    reduces to the binary-entropy sum over natural occupations (the
    S(rho) term vanishes for pure states).
    """
    _require_normalized(psi)
    lam, _ = natural_orbitals(one_rdm(psi))
    return binary_entropy_sum(lam)


def total_orbital_correlation(psi: CiVector) -> float:
    """I_B = sum_i b(gamma_ii) bits in the state's current mode basis."""
    _require_normalized(psi)
    return binary_entropy_sum(one_rdm_diagonal(psi))


def total_correlation_from_occupations(diag) -> float:
    """I_B from precomputed mode occupations (pure-state S(rho) = 0)."""
    return binary_entropy_sum(diag)


def ci_entropy(psi: CiVector) -> float:
    """Shannon entropy of squared CI coefficients, in bits."""
    _require_normalized(psi)
    p = np.abs(psi.amplitudes) ** 2
    return _entropy_bits(p[p >= 1e-16])


def ci_entropy_of_weights(weights) -> float:
    w = np.asarray(weights, dtype=float)
    return _entropy_bits(w[w >= 1e-16])


# ---------------------------------------------------------------------------
# Orbital-subset reduced states
# ---------------------------------------------------------------------------

def _check_subset(modes, d: int) -> tuple[int, ...]:
    modes = tuple(modes)
    if len(set(modes)) != len(modes):
        raise DomainError("subset modes must be distinct")
    if any(not 0 <= m < d for m in modes):
        raise DomainError(f"subset modes must lie in [0, {d})")
    return modes


def _permutation_sign(sorted_seq, target_seq) -> int:
    """Parity of the permutation taking sorted_seq to target_seq."""
    rank = {m: r for r, m in enumerate(sorted_seq)}
    perm = [rank[m] for m in target_seq]
    inversions = sum(
        1 for a in range(len(perm)) for b in range(a + 1, len(perm))
        if perm[a] > perm[b]
    )
    return -1 if inversions & 1 else 1


def _local_vectors(psi: CiVector, modes: tuple[int, ...]):
    """Map |Psi> onto the local Fock space of ``modes`` (in that order).

    Returns {environment config -> local amplitude vector}; stacking the
    vectors gives the coefficient matrix whose Gram matrices are the
    reduced states of the subset and of its complement.
    """
    basis = psi.basis
    k = len(modes)
    comp = [m for m in range(basis.d) if m not in set(modes)]
    order = list(modes) + comp
    pos_of = {m: j for j, m in enumerate(modes)}
    comp_pos = {m: j for j, m in enumerate(comp)}
    env_vectors: dict[int, np.ndarray] = {}
    for i, det in enumerate(basis.dets):
        amp = psi.amplitudes[i]
        if amp == 0:
            continue
        occ = occupied_modes(det)
        target_seq = [m for m in order if (det >> m) & 1]
        sign = _permutation_sign(occ, target_seq)
        alpha = 0
        beta = 0
        for m in occ:
            j = pos_of.get(m)
            if j is not None:
                alpha |= 1 << j
            else:
                beta |= 1 << comp_pos[m]
        if beta not in env_vectors:
            env_vectors[beta] = np.zeros(1 << k, dtype=complex)
        env_vectors[beta][alpha] += sign * amp
    return env_vectors


def _reduced_matrix(psi: CiVector, modes: tuple[int, ...]) -> np.ndarray:
    if len(modes) > REDUCED_STATE_MODE_CAP:
        raise CapacityError(
            f"reduced states are materialized only up to "
            f"{REDUCED_STATE_MODE_CAP} modes, got {len(modes)}")
    rho = np.zeros((1 << len(modes), 1 << len(modes)), dtype=complex)
    for vec in _local_vectors(psi, modes).values():
        rho += np.outer(vec, vec.conj())
    return rho


@dataclass(frozen=True)
class LocalDensityMatrix:
    """Reduced state on the local Fock space of an ordered mode subset."""

    modes: tuple[int, ...]
    matrix: np.ndarray

    def __post_init__(self):
        m = self.matrix
        if m.shape != (1 << len(self.modes),) * 2:
            raise DomainError("local matrix dimension is not 2^|subset|")
        if np.max(np.abs(m - m.conj().T)) > 1e-10:
            raise DomainError("local density matrix is not Hermitian")
        if abs(np.trace(m).real - 1.0) > 1e-10:
            raise DomainError("local density matrix trace deviates from 1")
        if np.linalg.eigvalsh(m).min() < -1e-10:
            raise DomainError("local density matrix is not positive semidefinite")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def particle_sectors(self) -> tuple[int, ...]:
        """Local particle numbers carrying weight (block-structure tag)."""
        diag = np.abs(np.diag(self.matrix).real)
        return tuple(sorted({x.bit_count() for x in range(self.dim)
                             if diag[x] > 1e-12}))

    def entropy(self) -> float:
        return von_neumann_entropy(self.matrix)


def orbital_reduced_state(psi: CiVector, subset) -> LocalDensityMatrix:
    """Partial trace onto a mode subset (kept in ascending mode order)."""
    _require_normalized(psi)
    modes = tuple(sorted(_check_subset(subset, psi.basis.d)))
    return LocalDensityMatrix(modes, _reduced_matrix(psi, modes))


def spatial_orbital_modes(orbital: int) -> tuple[int, int]:
    """The (up, down) mode pair of a spatial orbital."""
    return (2 * orbital, 2 * orbital + 1)


# ---------------------------------------------------------------------------
# Parity superselection
# ---------------------------------------------------------------------------

def _parities(dim: int, mask: int) -> np.ndarray:
    return np.array([(x & mask).bit_count() & 1 for x in range(dim)])


def _pinch(matrix: np.ndarray, masks) -> np.ndarray:
    """Zero all coherences between different local-parity sectors."""
    dim = matrix.shape[0]
    keep = np.ones((dim, dim), dtype=bool)
    for mask in masks:
        par = _parities(dim, mask)
        keep &= par[:, None] == par[None, :]
    return np.where(keep, matrix, 0.0)


def parity_superselect(rho: LocalDensityMatrix, split: tuple[int, int]) -> LocalDensityMatrix:
    """Apply the parity pinching for a two-factor split of a local state.

    ``split`` gives the mode counts of factors A (the first modes of the
    subset) and B (the rest); the result keeps only matrix elements
    between configurations of equal local parity on each factor.
    """
    ka, kb = split
    if ka < 0 or kb < 0 or (1 << (ka + kb)) != rho.dim:
        raise DomainError(f"split {split} inconsistent with dimension {rho.dim}")
    mask_a = (1 << ka) - 1
    mask_b = ((1 << kb) - 1) << ka
    return LocalDensityMatrix(rho.modes, _pinch(rho.matrix, [mask_a, mask_b]))


# ---------------------------------------------------------------------------
# Mutual information and entanglement
# ---------------------------------------------------------------------------

def mutual_information(psi: CiVector, subset_a, subset_b,
                       superselected: bool = False) -> float:
    """I = S(rho_A) + S(rho_B) - S(rho_AB) between two mode subsets.

    With ``superselected`` the joint state is parity-pinched across the
    A/B split and the marginals are pinched to their local parity blocks
    (a no-op for particle-number conserving global states) before the
    entropies are taken.
    """
    _require_normalized(psi)
    d = psi.basis.d
    a = tuple(sorted(_check_subset(subset_a, d)))
    b = tuple(sorted(_check_subset(subset_b, d)))
    if set(a) & set(b):
        raise DomainError("subsets overlap")
    if len(a) + len(b) > REDUCED_STATE_MODE_CAP:
        raise CapacityError("joint subset exceeds the reduced-state cap")
    rho_ab = _reduced_matrix(psi, a + b)
    rho_a = _reduced_matrix(psi, a)
    rho_b = _reduced_matrix(psi, b)
    if superselected:
        ka, kb = len(a), len(b)
        rho_ab = _pinch(rho_ab, [(1 << ka) - 1, ((1 << kb) - 1) << ka])
        rho_a = _pinch(rho_a, [(1 << ka) - 1])
        rho_b = _pinch(rho_b, [(1 << kb) - 1])
    return (von_neumann_entropy(rho_a) + von_neumann_entropy(rho_b)
            - von_neumann_entropy(rho_ab))


def pure_bipartite_entanglement(psi: CiVector, subset_a) -> float:
    """E = S(rho_A) for the bipartition A vs complement of a pure state.

    Both marginal entropies are computed independently (via the two Gram
    matrices of the coefficient matrix) and must agree to 1e-9.
    """
    _require_normalized(psi)
    a = tuple(sorted(_check_subset(subset_a, psi.basis.d)))
    if len(a) > REDUCED_STATE_MODE_CAP:
        raise CapacityError("subset exceeds the reduced-state cap")
    env_vectors = _local_vectors(psi, a)
    m = np.array([vec for vec in env_vectors.values()])
    rho_a = np.einsum("ex,ey->xy", m, m.conj())
    rho_env = m @ m.conj().T
    s_a = von_neumann_entropy(rho_a)
    s_env = von_neumann_entropy(rho_env)
    if abs(s_a - s_env) > 1e-9:
        raise FermicorrError(
            f"marginal entropies disagree: {s_a} vs {s_env}")
    return s_a


# ---------------------------------------------------------------------------
# Correlation function and its mutual-information bound
# ---------------------------------------------------------------------------

def correlation_function(rho_ab: LocalDensityMatrix, o_a: np.ndarray,
                         o_b: np.ndarray):
    """C = <O_A x O_B> - <O_A><O_B> and its normalized bound ratio.

    The ratio is |C| / (||O_A||_F ||O_B||_F) divided by sqrt(2 I); it can
    never exceed 1, and a violation beyond 1e-9 raises.
    """
    o_a = np.asarray(o_a, dtype=complex)
    o_b = np.asarray(o_b, dtype=complex)
    for name, o in (("O_A", o_a), ("O_B", o_b)):
        if np.max(np.abs(o - o.conj().T)) > 1e-10:
            raise DomainError(f"{name} is not Hermitian")
        if np.linalg.norm(o) < 1e-12:
            raise DomainError(f"{name} has zero Frobenius norm")
    dim_a, dim_b = o_a.shape[0], o_b.shape[0]
    if dim_a * dim_b != rho_ab.dim:
        raise DomainError("observable dimensions do not factor the joint state")

    rho = rho_ab.matrix
    # local index packs factor A into the low bits: x = alpha + beta * dim_a
    joint = np.kron(o_b, o_a)
    r4 = rho.reshape(dim_b, dim_a, dim_b, dim_a)
    rho_a = np.einsum("iaib->ab", r4)
    rho_b = np.einsum("iaja->ij", r4)
    mean_ab = np.trace(rho @ joint).real
    mean_a = np.trace(rho_a @ o_a).real
    mean_b = np.trace(rho_b @ o_b).real
    c_value = mean_ab - mean_a * mean_b

    info = (von_neumann_entropy(rho_a) + von_neumann_entropy(rho_b)
            - von_neumann_entropy(rho))
    numerator = abs(c_value) / (np.linalg.norm(o_a) * np.linalg.norm(o_b))
    denominator = np.sqrt(2.0 * max(info, 0.0))
    if numerator < 1e-12:
        ratio = 0.0
    elif denominator == 0.0:
        ratio = np.inf
    else:
        ratio = numerator / denominator
    if ratio > 1 + 1e-9:
        raise FermicorrError(
            f"correlation bound violated: ratio {ratio} for C={c_value}")
    return c_value, ratio


# ---------------------------------------------------------------------------
# Aggregated report
# ---------------------------------------------------------------------------

@dataclass
class CorrelationReport:
    """All measures of one state in one basis, ready for serialization."""

    basis_label: str
    nonfreeness_bits: float
    total_orbital_correlation_bits: float
    ci_entropy_bits: float
    natural_occupations: list[float]
    pairwise_mutual_information_bits: np.ndarray
    pairwise_mutual_information_ssr_bits: np.ndarray

    def __post_init__(self):
        for name in ("nonfreeness_bits", "total_orbital_correlation_bits",
                     "ci_entropy_bits"):
            if getattr(self, name) < -1e-9:
                raise FermicorrError(f"{name} is negative beyond tolerance")
        if (self.total_orbital_correlation_bits
                < self.nonfreeness_bits - 1e-9):
            raise FermicorrError(
                "total orbital correlation fell below nonfreeness")

    def to_json_dict(self) -> dict:
        return {
            "basis_label": self.basis_label,
            "nonfreeness_bits": self.nonfreeness_bits,
            "total_orbital_correlation_bits": self.total_orbital_correlation_bits,
            "ci_entropy_bits": self.ci_entropy_bits,
            "natural_occupations": list(map(float, self.natural_occupations)),
            "pairwise_mutual_information_bits":
                self.pairwise_mutual_information_bits.tolist(),
            "pairwise_mutual_information_ssr_bits":
                self.pairwise_mutual_information_ssr_bits.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)

    def csv_rows(self):
        """Flattened pairwise matrices: orbital_i, orbital_j, raw, ssr."""
        k = self.pairwise_mutual_information_bits.shape[0]
        for i in range(k):
            for j in range(k):
                yield (self.basis_label, i, j,
                       float(self.pairwise_mutual_information_bits[i, j]),
                       float(self.pairwise_mutual_information_ssr_bits[i, j]))


def build_report(psi: CiVector, basis_label: str) -> CorrelationReport:
    """Aggregate every measure for one state in its current basis."""
    _require_normalized(psi)
    d = psi.basis.d
    if d % 2:
        raise DomainError("reports assume interleaved spin-orbitals (even d)")
    n_spatial = d // 2
    lam, _ = natural_orbitals(one_rdm(psi))
    raw = np.zeros((n_spatial, n_spatial))
    ssr = np.zeros((n_spatial, n_spatial))
    for i in range(n_spatial):
        for j in range(i + 1, n_spatial):
            a = spatial_orbital_modes(i)
            b = spatial_orbital_modes(j)
            raw[i, j] = raw[j, i] = mutual_information(psi, a, b)
            ssr[i, j] = ssr[j, i] = mutual_information(psi, a, b,
                                                       superselected=True)
    return CorrelationReport(
        basis_label=basis_label,
        nonfreeness_bits=nonfreeness(psi),
        total_orbital_correlation_bits=total_orbital_correlation(psi),
        ci_entropy_bits=ci_entropy(psi),
        natural_occupations=[float(x) for x in lam],
        pairwise_mutual_information_bits=raw,
        pairwise_mutual_information_ssr_bits=ssr,
    )
