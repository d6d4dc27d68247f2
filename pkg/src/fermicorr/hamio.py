"""Hamiltonian ingestion and construction.

FCIDUMP files follow the Molpro convention: a ``&FCI ... &END`` (or ``/``)
namelist with NORB, NELEC, MS2, then whitespace-separated records
``value i j k l`` with 1-based orbital indices. Two-electron records are
chemist-notation ``(ij|kl)`` integrals with 8-fold permutation symmetry;
``i j 0 0`` is a one-body element, ``0 0 0 0`` the core energy. Fortran
``D`` exponents are accepted. ORBSYM/ISYM are parsed and ignored (no
point-group machinery here), as are ``i 0 0 0`` orbital-energy records.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParseError
from .fock import (BasisMap, CiVector, _apply_two_body_groups,
                   _two_body_groups, occupied_modes, parity_below)


def _pair_index(p: int, q: int) -> int:
    """Compound index for p >= q."""
    return p * (p + 1) // 2 + q


def _canonical_eri_slot(i: int, j: int, k: int, l: int) -> int:
    """Canonical storage slot of (ij|kl) under the 8 permutations (0-based)."""
    ij = _pair_index(max(i, j), min(i, j))
    kl = _pair_index(max(k, l), min(k, l))
    return _pair_index(max(ij, kl), min(ij, kl))


@dataclass(frozen=True)
class MolecularIntegrals:
    """One- and two-body coefficients h, V plus core energy.

    ``eri`` stores one value per canonical (ij|kl) slot, so the 8-fold
    permutation symmetry holds by construction.
    """

    n_spatial: int
    n_elec: int
    ms2: int
    h_core: np.ndarray
    eri: np.ndarray
    e_core: float

    def __post_init__(self):
        if self.n_elec > 2 * self.n_spatial:
            raise DomainError("more electrons than spin-orbitals")
        if np.max(np.abs(self.h_core - self.h_core.T)) > 1e-10:
            raise DomainError("h_core is not symmetric within 1e-10")

    def eri_value(self, i: int, j: int, k: int, l: int) -> float:
        """Chemist-notation (ij|kl), 0-based indices."""
        return float(self.eri[_canonical_eri_slot(i, j, k, l)])

    @property
    def n_modes(self) -> int:
        return 2 * self.n_spatial


def _empty_eri(n_spatial: int) -> np.ndarray:
    n_pair = n_spatial * (n_spatial + 1) // 2
    return np.zeros(n_pair * (n_pair + 1) // 2)


def make_integrals(n_spatial, n_elec, ms2=0, h_core=None, eri_entries=(),
                   e_core=0.0) -> MolecularIntegrals:
    """Assemble integrals from explicit entries; used by builders and tests."""
    h = np.zeros((n_spatial, n_spatial)) if h_core is None else np.asarray(h_core, float)
    eri = _empty_eri(n_spatial)
    for (i, j, k, l), v in eri_entries:
        eri[_canonical_eri_slot(i, j, k, l)] = v
    return MolecularIntegrals(n_spatial, n_elec, ms2, h, eri, float(e_core))


# ---------------------------------------------------------------------------
# FCIDUMP parsing and serialization
# ---------------------------------------------------------------------------

_NAMELIST_INT_FIELDS = {"NORB", "NELEC", "MS2", "ISYM", "IUHF", "NROOT"}


def parse_fcidump(source) -> MolecularIntegrals:
    """Parse FCIDUMP text (str, bytes, or readable stream)."""
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        source = source.decode("ascii")
    lines = source.splitlines()

    header, body_start = _split_namelist(lines)
    fields = _parse_namelist(header)
    if "NORB" not in fields:
        raise ParseError("namelist is missing NORB")
    if "NELEC" not in fields:
        raise ParseError("namelist is missing NELEC")
    n_spatial = fields["NORB"]
    n_elec = fields["NELEC"]
    ms2 = fields.get("MS2", 0)
    if n_spatial < 1:
        raise ParseError(f"NORB={n_spatial} is not positive")

    h_core = np.zeros((n_spatial, n_spatial))
    h_seen = {}
    eri = _empty_eri(n_spatial)
    eri_seen = {}
    e_core = 0.0
    e_core_seen = None

    for lineno, raw in enumerate(lines[body_start:], start=body_start + 1):
        tokens = raw.split()
        if not tokens:
            continue
        if len(tokens) % 5:
            raise ParseError(f"record is not value+4 indices: {raw!r}", lineno)
        for off in range(0, len(tokens), 5):
            val_tok, *idx_toks = tokens[off:off + 5]
            try:
                value = float(val_tok.replace("D", "E").replace("d", "e"))
                i, j, k, l = (int(t) for t in idx_toks)
            except ValueError:
                raise ParseError(f"unreadable record {tokens[off:off+5]}", lineno) from None
            for idx in (i, j, k, l):
                if idx < 0 or idx > n_spatial:
                    raise ParseError(f"orbital index {idx} out of range 1..{n_spatial}",
                                     lineno)
            if i == j == k == l == 0:
                if e_core_seen is not None and abs(e_core_seen - value) > 1e-12:
                    raise ParseError("conflicting duplicate core-energy records", lineno)
                e_core, e_core_seen = value, value
            elif k == 0 and l == 0:
                if j == 0:
                    continue  # orbital-energy record; no consumer here
                slot = (max(i, j), min(i, j))
                if slot in h_seen and abs(h_seen[slot] - value) > 1e-12:
                    raise ParseError(f"conflicting duplicate h({i},{j}) records", lineno)
                h_seen[slot] = value
                h_core[i - 1, j - 1] = value
                h_core[j - 1, i - 1] = value
            elif 0 in (i, j, k, l):
                raise ParseError(f"malformed index pattern ({i},{j},{k},{l})", lineno)
            else:
                slot = _canonical_eri_slot(i - 1, j - 1, k - 1, l - 1)
                if slot in eri_seen and abs(eri_seen[slot] - value) > 1e-12:
                    raise ParseError(
                        f"conflicting duplicate ({i}{j}|{k}{l}) records", lineno)
                eri_seen[slot] = value
                eri[slot] = value

    return MolecularIntegrals(n_spatial, n_elec, ms2, h_core, eri, e_core)


def _split_namelist(lines):
    """Return (namelist text, index of first body line)."""
    buf = []
    for ln, raw in enumerate(lines):
        if ln == 0 and not raw.lstrip().startswith("&"):
            raise ParseError("input does not start with an &FCI namelist", 1)
        end = re.search(r"&END|/", raw, flags=re.IGNORECASE)
        if end:
            buf.append(raw[:end.start()])
            return " ".join(buf), ln + 1
        buf.append(raw)
    raise ParseError("namelist is never terminated by &END or /", len(lines))


def _parse_namelist(text: str) -> dict:
    text = re.sub(r"^\s*&\w+", "", text)
    fields = {}
    for m in re.finditer(r"([A-Za-z0-9_]+)\s*=\s*([^=]*?)(?=(?:[,\s]+[A-Za-z0-9_]+\s*=)|$)",
                         text):
        key = m.group(1).upper()
        value = m.group(2).strip().rstrip(",")
        if key in _NAMELIST_INT_FIELDS:
            try:
                fields[key] = int(value)
            except ValueError:
                raise ParseError(f"namelist field {key} is not an integer: {value!r}",
                                 1) from None
        else:
            fields[key] = value  # ORBSYM and friends: kept verbatim, unused
    return fields


def serialize_fcidump(ints: MolecularIntegrals) -> str:
    """Write the canonical integral set back out as FCIDUMP text.

    parse(serialize(parse(x))) reproduces the canonical set exactly;
    values are printed with 17 significant digits to round-trip float64.
    """
    ns = ints.n_spatial
    orbsym = ",".join("1" for _ in range(ns))
    out = [f"&FCI NORB={ns},NELEC={ints.n_elec},MS2={ints.ms2},",
           f" ORBSYM={orbsym},", " ISYM=1,", "&END"]
    emitted = set()
    for i in range(ns):
        for j in range(i + 1):
            for k in range(ns):
                for l in range(k + 1):
                    if _pair_index(i, j) < _pair_index(k, l):
                        continue
                    slot = _canonical_eri_slot(i, j, k, l)
                    if slot in emitted or ints.eri[slot] == 0.0:
                        continue
                    emitted.add(slot)
                    out.append(f"{ints.eri[slot]:.17g} {i+1} {j+1} {k+1} {l+1}")
    for i in range(ns):
        for j in range(i + 1):
            if ints.h_core[i, j] != 0.0:
                out.append(f"{ints.h_core[i, j]:.17g} {i+1} {j+1} 0 0")
    out.append(f"{ints.e_core:.17g} 0 0 0 0")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Built-in Hubbard chain
# ---------------------------------------------------------------------------

def build_hubbard(sites: int, t: float, u: float, periodic: bool = False,
                  n_elec: int | None = None) -> MolecularIntegrals:
    """Hubbard chain as molecular integrals: -t hopping, on-site (ii|ii)=U.

    Defaults to half filling (n_elec = sites); the wrap-around bond is added
    only for periodic chains with more than two sites.
    """
    if sites < 1:
        raise DomainError("need at least one site")
    h = np.zeros((sites, sites))
    for i in range(sites - 1):
        h[i, i + 1] = h[i + 1, i] = -t
    if periodic and sites > 2:
        h[0, sites - 1] = h[sites - 1, 0] = -t
    eri_entries = [((i, i, i, i), u) for i in range(sites)] if u else []
    n_elec = sites if n_elec is None else n_elec
    return make_integrals(sites, n_elec, ms2=n_elec % 2, h_core=h,
                          eri_entries=eri_entries, e_core=0.0)


# ---------------------------------------------------------------------------
# Hamiltonian action on CI vectors
# ---------------------------------------------------------------------------

def spin_one_body(ints: MolecularIntegrals) -> np.ndarray:
    """Expand h_core to the interleaved spin-orbital basis."""
    d = ints.n_modes
    h = np.zeros((d, d))
    for sigma in (0, 1):
        h[sigma::2, sigma::2] = ints.h_core
    return h


def antisymmetrized_two_body(ints: MolecularIntegrals) -> np.ndarray:
    """Spin-orbital tensor <PQ||RS> from the chemist-notation spatial ERIs.

    Convention: W = (1/4) sum w[P,Q,R,S] f_P^+ f_Q^+ f_S f_R reproduces
    the physical two-body interaction of the molecular Hamiltonian.
    """
    ns = ints.n_spatial
    chem = np.zeros((ns, ns, ns, ns))
    for i in range(ns):
        for j in range(ns):
            for k in range(ns):
                for l in range(ns):
                    chem[i, j, k, l] = ints.eri_value(i, j, k, l)
    # physicist <pq|rs> = (pr|qs); spin expansion keeps sigma(P)=sigma(R) etc.
    phys = chem.transpose(0, 2, 1, 3)
    eye2 = np.eye(2)
    direct = np.einsum("pqrs,ac,bd->paqbrcsd", phys, eye2, eye2)
    direct = direct.reshape(2 * ns, 2 * ns, 2 * ns, 2 * ns)
    return direct - direct.transpose(0, 1, 3, 2)


class HamiltonianAction:
    """Matrix-free H applied to CI vectors of one basis sector.

    Callable CiVector -> CiVector (full H, core energy included); also
    exposes the diagonal <n|H|n> for preconditioning. Pure and reentrant.
    """

    def __init__(self, ints: MolecularIntegrals, basis: BasisMap):
        if basis.d != ints.n_modes:
            raise DomainError(
                f"basis has {basis.d} modes, integrals define {ints.n_modes}")
        if basis.n_particles != ints.n_elec:
            raise DomainError(
                f"basis holds {basis.n_particles} particles, integrals declare "
                f"{ints.n_elec} electrons")
        self.basis = basis
        self.e_core = ints.e_core
        self.h_spin = spin_one_body(ints)
        self._w = antisymmetrized_two_body(ints)
        self._one_body_terms = [
            (p, q, self.h_spin[p, q])
            for p in range(basis.d) for q in range(basis.d)
            if abs(self.h_spin[p, q]) > 1e-14
        ]
        self._groups = _two_body_groups(self._w, basis.d)

    @property
    def dim(self) -> int:
        return self.basis.size

    def diagonal(self) -> np.ndarray:
        diag = np.zeros(self.basis.size)
        for i, det in enumerate(self.basis.dets):
            occ = occupied_modes(det)
            e = self.e_core
            for p in occ:
                e += self.h_spin[p, p]
            for a, p in enumerate(occ):
                for q in occ[a + 1:]:
                    e += self._w[p, q, p, q].real
            diag[i] = e
        return diag

    def __call__(self, psi: CiVector) -> CiVector:
        if not psi.basis.compatible(self.basis):
            raise DomainError("CI vector sector does not match the Hamiltonian")
        basis = self.basis
        index = basis.index
        out = self.e_core * psi.amplitudes.copy()
        for i, det in enumerate(basis.dets):
            amp = psi.amplitudes[i]
            if amp == 0:
                continue
            for p, q, hpq in self._one_body_terms:
                if not (det >> q) & 1:
                    continue
                if p == q:
                    out[i] += hpq * amp
                    continue
                if (det >> p) & 1:
                    continue
                det1 = det ^ (1 << q)
                sign = parity_below(det, q) * parity_below(det1, p)
                out[index[det1 | (1 << p)]] += sign * hpq * amp
        out += _apply_two_body_groups(psi, self._groups)
        return CiVector(basis, out)


def hamiltonian_action(ints: MolecularIntegrals, basis: BasisMap) -> HamiltonianAction:
    """Operator closure computing H|psi> for the given sector."""
    return HamiltonianAction(ints, basis)
