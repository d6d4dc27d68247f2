"""Determinant-level Fock-space engine.

Conventions, used consistently by every module in this package:

* Spin-orbitals ("modes") are indexed ``0 .. d-1`` and interleaved per
  spatial orbital: mode ``2*p`` is spatial orbital ``p`` with spin up,
  mode ``2*p + 1`` the same orbital with spin down.
* A determinant is a d-bit occupation word with mode ``i`` stored in
  bit ``i`` (lowest mode = least significant bit), ``d <= 64``.
* Kets are ordered operator products
  ``|n> = (f_0^+)^{n_0} (f_1^+)^{n_1} ... (f_{d-1}^+)^{n_{d-1}} |vac>``,
  so a ladder operator acting on mode ``m`` picks up the parity of the
  occupied modes strictly below ``m``.

All values are immutable after construction; every operation here is a
pure function of its inputs.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import DomainError

MAX_MODES = 64

# Amplitudes smaller than this are dropped when writing FCIVEC files.
FCIVEC_AMPLITUDE_CUTOFF = 1e-14


def det_from_modes(modes) -> int:
    """Pack an iterable of occupied mode indices into a determinant word."""
    det = 0
    for m in modes:
        det |= 1 << m
    return det


def occupied_modes(det: int) -> list[int]:
    """Occupied mode indices of a determinant, ascending."""
    modes = []
    i = 0
    while det:
        if det & 1:
            modes.append(i)
        det >>= 1
        i += 1
    return modes


def bitstring(det: int, d: int) -> str:
    """Occupation string with the lowest mode leftmost."""
    return "".join("1" if (det >> i) & 1 else "0" for i in range(d))


def det_from_bitstring(s: str) -> int:
    """Inverse of :func:`bitstring`."""
    det = 0
    for i, c in enumerate(s):
        if c == "1":
            det |= 1 << i
        elif c != "0":
            raise DomainError(f"invalid occupation character {c!r}")
    return det


def sz_twice_of(det: int) -> int:
    """2*Sz of a determinant under the interleaved spin convention."""
    up = det & 0x5555555555555555
    down = det & 0xAAAAAAAAAAAAAAAA
    return up.bit_count() - down.bit_count()


def parity_below(det: int, mode: int) -> int:
    """+1 or -1 for the occupied modes strictly below `mode`."""
    return -1 if (det & ((1 << mode) - 1)).bit_count() & 1 else 1


def apply_ladder(det: int, mode: int, kind: str, d: int = MAX_MODES):
    """Apply a single creation or annihilation operator to a determinant.

    Returns ``(new_det, sign)`` with sign in {+1, -1}, or ``None`` when the
    action annihilates the ket (Pauli exclusion / empty mode).
    """
    if not 0 <= mode < d:
        raise DomainError(f"mode {mode} out of range for d={d}")
    if kind == "create":
        if (det >> mode) & 1:
            return None
    elif kind == "annihilate":
        if not (det >> mode) & 1:
            return None
    else:
        raise DomainError(f"kind must be 'create' or 'annihilate', got {kind!r}")
    return det ^ (1 << mode), parity_below(det, mode)


@dataclass(frozen=True)
class BasisMap:
    """Indexed determinant basis of a fixed (N, Sz) sector.

    Determinants are unique and sorted ascending by packed word value, so
    basis order is a total order shared by every consumer.
    """

    d: int
    n_particles: int
    sz_twice: int | None
    dets: tuple[int, ...]
    index: dict[int, int] = field(repr=False)

    @property
    def size(self) -> int:
        return len(self.dets)

    def compatible(self, other: "BasisMap") -> bool:
        return (
            self.d == other.d
            and self.n_particles == other.n_particles
            and self.sz_twice == other.sz_twice
        )


def enumerate_basis(d: int, n: int, sz_twice: int | None = None) -> BasisMap:
    """Enumerate all determinants of the (n, sz) sector in d modes."""
    if not 0 <= n <= d <= MAX_MODES:
        raise DomainError(f"need 0 <= n <= d <= {MAX_MODES}, got d={d}, n={n}")
    if sz_twice is not None:
        if d % 2:
            raise DomainError("spin sectors require an even mode count")
        if (n + sz_twice) % 2 or abs(sz_twice) > n:
            raise DomainError(f"no Sz sector 2Sz={sz_twice} with {n} particles")
        n_up = (n + sz_twice) // 2
        n_down = (n - sz_twice) // 2
        if n_up > d // 2 or n_down > d // 2:
            raise DomainError(f"sector (n={n}, 2Sz={sz_twice}) empty for d={d}")
        up_modes = range(0, d, 2)
        down_modes = range(1, d, 2)
        dets = sorted(
            det_from_modes(up) | det_from_modes(dn)
            for up in combinations(up_modes, n_up)
            for dn in combinations(down_modes, n_down)
        )
    else:
        dets = sorted(det_from_modes(c) for c in combinations(range(d), n))
    dets = tuple(dets)
    return BasisMap(d, n, sz_twice, dets, {det: i for i, det in enumerate(dets)})


@dataclass
class CiVector:
    """Amplitude vector over a BasisMap; represents the pure state |Psi>."""

    basis: BasisMap
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.basis.size,):
            raise DomainError(
                f"amplitude vector has length {amps.shape}, basis size {self.basis.size}"
            )
        self.amplitudes = amps

    def copy(self) -> "CiVector":
        return CiVector(self.basis, self.amplitudes.copy())

    def normalized(self) -> "CiVector":
        n = np.linalg.norm(self.amplitudes)
        if n < 1e-14:
            raise DomainError("cannot normalize a zero vector")
        return CiVector(self.basis, self.amplitudes / n)


def basis_state(basis: BasisMap, det: int) -> CiVector:
    """Unit CI vector on a single determinant."""
    if det not in basis.index:
        raise DomainError(f"determinant {det:#x} not in basis")
    amps = np.zeros(basis.size, dtype=complex)
    amps[basis.index[det]] = 1.0
    return CiVector(basis, amps)


def inner(psi1: CiVector, psi2: CiVector) -> complex:
    """Sesquilinear inner product <psi1|psi2> (conjugate on the first slot)."""
    if not psi1.basis.compatible(psi2.basis):
        raise DomainError("inner product between incompatible bases")
    return complex(np.vdot(psi1.amplitudes, psi2.amplitudes))


def norm(psi: CiVector) -> float:
    return float(np.linalg.norm(psi.amplitudes))


def _check_hermitian(m: np.ndarray, tol: float, what: str):
    if np.max(np.abs(m - m.conj().T)) > tol:
        raise DomainError(f"{what} is not Hermitian within {tol:g}")


def apply_one_body(psi: CiVector, h: np.ndarray) -> CiVector:
    """Apply sum_ij h_ij f_i^+ f_j to a CI vector (result unnormalized).

    Targets must stay inside the vector's sector; a spin-mixing h on an
    Sz-restricted basis raises instead of silently dropping amplitude.
    """
    basis = psi.basis
    h = np.asarray(h)
    if h.shape != (basis.d, basis.d):
        raise DomainError(f"one-body matrix shape {h.shape} does not match d={basis.d}")
    _check_hermitian(h, 1e-10, "one-body matrix")

    terms = [(p, q, h[p, q]) for p in range(basis.d) for q in range(basis.d)
             if abs(h[p, q]) > 1e-14]
    out = np.zeros(basis.size, dtype=complex)
    index = basis.index
    for i, det in enumerate(basis.dets):
        amp = psi.amplitudes[i]
        if amp == 0:
            continue
        for p, q, hpq in terms:
            if not (det >> q) & 1:
                continue
            if p == q:
                out[i] += hpq * amp
                continue
            if (det >> p) & 1:
                continue
            det1 = det ^ (1 << q)
            sign = parity_below(det, q) * parity_below(det1, p)
            j = index.get(det1 | (1 << p))
            if j is None:
                raise DomainError(
                    "one-body action leaves the basis sector; "
                    "use a basis without Sz restriction"
                )
            out[j] += sign * hpq * amp
    return CiVector(basis, out)


def _check_two_body_tensor(w: np.ndarray, d: int):
    if w.shape != (d, d, d, d):
        raise DomainError(f"two-body tensor shape {w.shape} does not match d={d}")
    if np.max(np.abs(w + w.transpose(1, 0, 2, 3))) > 1e-10:
        raise DomainError("two-body tensor not antisymmetric in the first index pair")
    if np.max(np.abs(w + w.transpose(0, 1, 3, 2))) > 1e-10:
        raise DomainError("two-body tensor not antisymmetric in the second index pair")
    if np.max(np.abs(w - w.transpose(2, 3, 0, 1).conj())) > 1e-10:
        raise DomainError("two-body tensor is not Hermitian")


def apply_two_body(psi: CiVector, w: np.ndarray) -> CiVector:
    """Apply (1/4) sum_pqrs w[p,q,r,s] f_p^+ f_q^+ f_s f_r (unnormalized).

    ``w`` is an antisymmetrized spin-orbital tensor: antisymmetric under
    p<->q and r<->s, Hermitian under (pq)<->(rs) with conjugation.
    """
    basis = psi.basis
    w = np.asarray(w)
    _check_two_body_tensor(w, basis.d)
    groups = _two_body_groups(w, basis.d)
    return CiVector(basis, _apply_two_body_groups(psi, groups))


def _two_body_groups(w: np.ndarray, d: int):
    """Nonzero ordered-pair elements of ``w`` grouped by annihilated pair."""
    pairs = [(r, s) for r in range(d) for s in range(r + 1, d)]
    groups = {}
    for r, s in pairs:
        entries = [(p, q, w[p, q, r, s]) for p, q in pairs if abs(w[p, q, r, s]) > 1e-14]
        if entries:
            groups[(r, s)] = entries
    return groups


def _apply_two_body_groups(psi: CiVector, groups) -> np.ndarray:
    basis = psi.basis
    index = basis.index
    out = np.zeros(basis.size, dtype=complex)
    for i, det in enumerate(basis.dets):
        amp = psi.amplitudes[i]
        if amp == 0:
            continue
        occ = occupied_modes(det)
        for a, r in enumerate(occ):
            for s in occ[a + 1:]:
                entries = groups.get((r, s))
                if entries is None:
                    continue
                # f_p^+ f_q^+ f_s f_r acts right to left: r, s out, then q, p in.
                sign0 = parity_below(det, r)
                det1 = det ^ (1 << r)
                sign0 *= parity_below(det1, s)
                det1 ^= 1 << s
                base = sign0 * amp
                for p, q, val in entries:
                    if (det1 >> q) & 1 or (det1 >> p) & 1:
                        continue
                    det2 = det1 | (1 << q)
                    sign = parity_below(det1, q) * parity_below(det2, p)
                    j = index.get(det2 | (1 << p))
                    if j is None:
                        raise DomainError("two-body action leaves the basis sector")
                    out[j] += sign * val * base
    return out


# ---------------------------------------------------------------------------
# FCIVEC v1 text format
# ---------------------------------------------------------------------------

def write_fcivec(psi: CiVector, path_or_file) -> None:
    """Write a CI vector in the FCIVEC v1 text format.

    Header ``FCIVEC 1 d=<d> n=<N> sz2=<sz|none>``, then one line per
    amplitude above 1e-14: occupation bitstring (lowest mode leftmost),
    real part, imaginary part.
    """
    basis = psi.basis
    sz = "none" if basis.sz_twice is None else str(basis.sz_twice)
    lines = [f"FCIVEC 1 d={basis.d} n={basis.n_particles} sz2={sz}"]
    for i, det in enumerate(basis.dets):
        a = psi.amplitudes[i]
        if abs(a) < FCIVEC_AMPLITUDE_CUTOFF:
            continue
        lines.append(f"{bitstring(det, basis.d)} {float(a.real)!r} {float(a.imag)!r}")
    text = "\n".join(lines) + "\n"
    if hasattr(path_or_file, "write"):
        path_or_file.write(text)
    else:
        with open(path_or_file, "w") as f:
            f.write(text)


def read_fcivec(path_or_file) -> CiVector:
    """Read a CI vector written by :func:`write_fcivec`."""
    if hasattr(path_or_file, "read"):
        text = path_or_file.read()
    else:
        with open(path_or_file) as f:
            text = f.read()
    lines = text.splitlines()
    if not lines:
        raise DomainError("empty FCIVEC input")
    head = lines[0].split()
    if len(head) != 5 or head[0] != "FCIVEC" or head[1] != "1":
        raise DomainError(f"not an FCIVEC v1 header: {lines[0]!r}")
    fields = dict(tok.split("=", 1) for tok in head[2:])
    d = int(fields["d"])
    n = int(fields["n"])
    sz = None if fields["sz2"] == "none" else int(fields["sz2"])
    basis = enumerate_basis(d, n, sz)
    amps = np.zeros(basis.size, dtype=complex)
    for line in lines[1:]:
        if not line.strip():
            continue
        bits, re_s, im_s = line.split()
        det = det_from_bitstring(bits)
        if det not in basis.index:
            raise DomainError(f"determinant {bits} outside sector (n={n}, sz2={sz})")
        amps[basis.index[det]] = float(re_s) + 1j * float(im_s)
    return CiVector(basis, amps)


def dump_fcivec(psi: CiVector) -> str:
    buf = io.StringIO()
    write_fcivec(psi, buf)
    return buf.getvalue()


def full_sector_embedding(psi: CiVector) -> CiVector:
    """Re-express an Sz-restricted CI vector in the unrestricted N sector."""
    basis = psi.basis
    if basis.sz_twice is None:
        return psi
    full = enumerate_basis(basis.d, basis.n_particles, None)
    amps = np.zeros(full.size, dtype=complex)
    for i, det in enumerate(basis.dets):
        amps[full.index[det]] = psi.amplitudes[i]
    return CiVector(full, amps)
