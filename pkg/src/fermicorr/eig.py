"""Lowest-eigenpair solvers: dense oracle and Davidson iteration."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, ConvergenceError, DomainError
from .fock import BasisMap, CiVector

DENSE_DIM_CAP = 4096
NEAR_DEGENERACY_GAP = 1e-6
SUBSPACE_CAP = 24


@dataclass
class EigResult:
    """Converged lowest eigenpair of a Hermitian action."""

    energy: float
    vector: CiVector
    residual_norm: float
    iterations: int
    near_degenerate: bool = False
    ritz_history: list[float] = field(default_factory=list)


def _fix_phase(vec: np.ndarray) -> np.ndarray:
    """Make the first nonzero amplitude positive real (deterministic gauge)."""
    for a in vec:
        if abs(a) > 1e-12:
            return vec * (abs(a) / a)
    return vec


def _as_matrix_action(action, basis: BasisMap):
    def mv(x: np.ndarray) -> np.ndarray:
        return action(CiVector(basis, x)).amplitudes
    return mv


def dense_lowest(action, basis: BasisMap) -> EigResult:
    """Exact lowest eigenpair via full matrix assembly (oracle path).

    The matrix is assembled column by column from the action; refuses
    sectors above the dense cap.
    """
    dim = basis.size
    if dim > DENSE_DIM_CAP:
        raise CapacityError(
            f"dimension {dim} exceeds the dense cap {DENSE_DIM_CAP}; "
            "use davidson_lowest")
    mv = _as_matrix_action(action, basis)
    h = np.zeros((dim, dim), dtype=complex)
    e = np.zeros(dim, dtype=complex)
    for j in range(dim):
        e[j] = 1.0
        h[:, j] = mv(e)
        e[j] = 0.0
    if np.max(np.abs(h - h.conj().T)) > 1e-8:
        raise DomainError("assembled matrix is not Hermitian")
    evals, evecs = np.linalg.eigh(h)
    vec = _fix_phase(evecs[:, 0])
    energy = float(evals[0])
    residual = float(np.linalg.norm(h @ vec - energy * vec))
    gap = float(evals[1] - evals[0]) if dim > 1 else np.inf
    return EigResult(energy, CiVector(basis, vec), residual, 1,
                     near_degenerate=gap < NEAR_DEGENERACY_GAP,
                     ritz_history=[energy])


def davidson_lowest(action, basis: BasisMap, guess: CiVector | None = None,
                    tol: float = 1e-9, max_iter: int = 200) -> EigResult:
    """Davidson iteration for the lowest eigenpair of a Hermitian action.

    Diagonal preconditioner with a 1e-8 denominator floor; the subspace is
    capped at 24 vectors and restarted from the best Ritz vector. Default
    guess is the lowest-diagonal determinant (Hartree-Fock-like
    configuration). Raises ConvergenceError carrying the best estimate if
    max_iter is exhausted.
    """
    if tol <= 0:
        raise DomainError("tolerance must be positive")
    dim = basis.size
    mv = _as_matrix_action(action, basis)
    diag = action.diagonal() if hasattr(action, "diagonal") else _probe_diagonal(mv, dim)

    if guess is not None:
        if not guess.basis.compatible(basis):
            raise DomainError("guess lives in a different sector")
        v0 = guess.amplitudes.astype(complex)
    else:
        v0 = np.zeros(dim, dtype=complex)
        v0[int(np.argmin(diag))] = 1.0
    v0 = v0 / np.linalg.norm(v0)

    vs = [v0]                      # orthonormal subspace basis
    ws = [mv(v0)]                  # action on each subspace vector
    history: list[float] = []
    best_energy, best_vec, best_residual = np.inf, v0, np.inf
    near_degenerate = False

    for iteration in range(1, max_iter + 1):
        m = len(vs)
        sub = np.empty((m, m), dtype=complex)
        for a in range(m):
            for b in range(m):
                sub[a, b] = np.vdot(vs[a], ws[b])
        sub = 0.5 * (sub + sub.conj().T)
        evals, evecs = np.linalg.eigh(sub)
        theta = float(evals[0])
        history.append(theta)
        y = evecs[:, 0]
        x = sum(y[a] * vs[a] for a in range(m))
        hx = sum(y[a] * ws[a] for a in range(m))
        residual = hx - theta * x
        rnorm = float(np.linalg.norm(residual))
        if rnorm < best_residual:
            best_energy, best_vec, best_residual = theta, x, rnorm
        if rnorm <= tol:
            if m > 1:
                gap = float(evals[1] - evals[0])
            else:
                gap = _probe_gap(mv, diag, x, theta)
            near_degenerate = gap < NEAR_DEGENERACY_GAP
            vec = _fix_phase(x / np.linalg.norm(x))
            return EigResult(theta, CiVector(basis, vec), rnorm, iteration,
                             near_degenerate=near_degenerate,
                             ritz_history=history)

        if m >= min(SUBSPACE_CAP, dim):
            # restart from the best Ritz vector
            vs = [x / np.linalg.norm(x)]
            ws = [mv(vs[0])]
            continue

        denom = diag - theta
        denom = np.where(np.abs(denom) < 1e-8,
                         np.where(denom < 0, -1e-8, 1e-8), denom)
        t = residual / denom
        for v in vs:
            t = t - np.vdot(v, t) * v
        tn = np.linalg.norm(t)
        if tn < 1e-12:
            # preconditioned residual is inside the subspace; expand randomly
            rng = np.random.default_rng(iteration)
            t = rng.standard_normal(dim) + 0j
            for v in vs:
                t = t - np.vdot(v, t) * v
            tn = np.linalg.norm(t)
            if tn < 1e-12:
                break
        t = t / tn
        vs.append(t)
        ws.append(mv(t))

    raise ConvergenceError(
        f"Davidson did not converge in {max_iter} iterations "
        f"(best residual {best_residual:.3e})",
        best_energy=best_energy, residual_norm=best_residual)


def _probe_gap(mv, diag: np.ndarray, ground: np.ndarray, theta: float) -> float:
    """Ritz estimate of the spectral gap when convergence left a 1-vector
    subspace (e.g. an exact guess). The estimate is an upper bound on the
    true gap, so the near-degeneracy flag is best-effort here; dense_lowest
    reports the exact gap."""
    dim = ground.shape[0]
    if dim < 2:
        return np.inf
    order = np.argsort(diag)
    t = None
    for idx in order:
        cand = np.zeros(dim, dtype=complex)
        cand[idx] = 1.0
        cand = cand - np.vdot(ground, cand) * ground
        if np.linalg.norm(cand) > 1e-6:
            t = cand / np.linalg.norm(cand)
            break
    if t is None:
        return np.inf
    vs = [ground, t]
    ws = [mv(ground), mv(t)]
    sub = np.array([[np.vdot(a, b) for b in ws] for a in vs])
    sub = 0.5 * (sub + sub.conj().T)
    evals = np.linalg.eigvalsh(sub)
    return float(evals[1] - evals[0])


def _probe_diagonal(mv, dim: int) -> np.ndarray:
    diag = np.zeros(dim)
    e = np.zeros(dim, dtype=complex)
    for j in range(dim):
        e[j] = 1.0
        diag[j] = mv(e)[j].real
        e[j] = 0.0
    return diag
