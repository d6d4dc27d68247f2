#!/usr/bin/env python3
"""Generate the H2 FCIDUMP fixture set shipped under fixtures/.

Integrals are computed analytically for contracted s-type Gaussians
(overlap, kinetic, nuclear attraction, and two-electron repulsion in the
closed forms valid for s functions), then expressed in the
Loewdin-orthogonalized AO basis. FCI results are invariant under the
choice of orthonormal molecular basis, so no SCF step is needed. Outputs
are deterministic; provenance is recorded in fixtures/manifest.json.

Run from the repository root:  python3 tools/gen_h2_fixtures.py
"""

import json
import math
import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from fermicorr.hamio import make_integrals, serialize_fcidump  # noqa: E402

ANGSTROM_TO_BOHR = 1.8897259886

# exponents / contraction coefficients for hydrogen (normalized primitives)
BASIS_SETS = {
    "sto3g": [
        ([3.425250914, 0.6239137298, 0.1688554040],
         [0.1543289673, 0.5353281423, 0.4446345422]),
    ],
    "631g": [
        ([18.73113696, 2.825394365, 0.6401216923],
         [0.03349460434, 0.2347269535, 0.8137573261]),
        ([0.1612777588], [1.0]),
    ],
}

R_GRID_ANGSTROM = [0.5, 0.75, 1.0, 1.25, 1.5, 2.0, 2.5, 3.0]


def boys_f0(t):
    if t < 1e-12:
        return 1.0 - t / 3.0
    return 0.5 * math.sqrt(math.pi / t) * math.erf(math.sqrt(t))


def prim_norm(alpha):
    return (2.0 * alpha / math.pi) ** 0.75


def overlap_prim(a, b, ra, rb):
    p = a + b
    ab2 = np.dot(ra - rb, ra - rb)
    return (math.pi / p) ** 1.5 * math.exp(-a * b / p * ab2)


def kinetic_prim(a, b, ra, rb):
    p = a + b
    ab2 = np.dot(ra - rb, ra - rb)
    return (a * b / p * (3.0 - 2.0 * a * b / p * ab2)
            * (math.pi / p) ** 1.5 * math.exp(-a * b / p * ab2))


def nuclear_prim(a, b, ra, rb, rc, charge):
    p = a + b
    ab2 = np.dot(ra - rb, ra - rb)
    rp = (a * ra + b * rb) / p
    pc2 = np.dot(rp - rc, rp - rc)
    return (-2.0 * math.pi / p * charge
            * math.exp(-a * b / p * ab2) * boys_f0(p * pc2))


def eri_prim(a, b, c, d, ra, rb, rc, rd):
    p = a + b
    q = c + d
    ab2 = np.dot(ra - rb, ra - rb)
    cd2 = np.dot(rc - rd, rc - rd)
    rp = (a * ra + b * rb) / p
    rq = (c * rc + d * rd) / q
    pq2 = np.dot(rp - rq, rp - rq)
    return (2.0 * math.pi ** 2.5 / (p * q * math.sqrt(p + q))
            * math.exp(-a * b / p * ab2 - c * d / q * cd2)
            * boys_f0(p * q / (p + q) * pq2))


def contracted(shells, centers):
    """Expand (exps, coefs, center) triples for every AO of the molecule."""
    aos = []
    for center in centers:
        for exps, coefs in shells:
            aos.append(([(e, c * prim_norm(e)) for e, c in zip(exps, coefs)],
                        np.asarray(center, dtype=float)))
    return aos


def ao_integrals(aos, centers, charges):
    n = len(aos)
    s = np.zeros((n, n))
    h = np.zeros((n, n))
    for i, (pi, ri) in enumerate(aos):
        for j, (pj, rj) in enumerate(aos):
            for a, ca in pi:
                for b, cb in pj:
                    w = ca * cb
                    s[i, j] += w * overlap_prim(a, b, ri, rj)
                    h[i, j] += w * kinetic_prim(a, b, ri, rj)
                    for rc, z in zip(centers, charges):
                        h[i, j] += w * nuclear_prim(a, b, ri, rj,
                                                    np.asarray(rc, float), z)
    eri = np.zeros((n, n, n, n))
    for i, (pi, ri) in enumerate(aos):
        for j, (pj, rj) in enumerate(aos):
            for k, (pk, rk) in enumerate(aos):
                for l, (pl, rl) in enumerate(aos):
                    val = 0.0
                    for a, ca in pi:
                        for b, cb in pj:
                            for c, cc in pk:
                                for d, cd in pl:
                                    val += (ca * cb * cc * cd
                                            * eri_prim(a, b, c, d, ri, rj, rk, rl))
                    eri[i, j, k, l] = val
    return s, h, eri


def loewdin(s):
    evals, evecs = np.linalg.eigh(s)
    return evecs @ np.diag(evals ** -0.5) @ evecs.T


def h2_integrals(basis_name, r_angstrom):
    r_bohr = r_angstrom * ANGSTROM_TO_BOHR
    centers = [np.array([0.0, 0.0, 0.0]), np.array([0.0, 0.0, r_bohr])]
    charges = [1.0, 1.0]
    aos = contracted(BASIS_SETS[basis_name], centers)
    s, h_ao, eri_ao = ao_integrals(aos, centers, charges)
    x = loewdin(s)
    h = x.T @ h_ao @ x
    eri = np.einsum("ap,bq,cr,ds,abcd->pqrs", x, x, x, x, eri_ao)
    n = h.shape[0]
    entries = []
    seen = set()
    for i in range(n):
        for j in range(i + 1):
            for k in range(n):
                for l in range(k + 1):
                    key = tuple(sorted([(i, j), (k, l)]))
                    if key in seen:
                        continue
                    seen.add(key)
                    if abs(eri[i, j, k, l]) > 1e-16:
                        entries.append(((i, j, k, l), eri[i, j, k, l]))
    return make_integrals(n, 2, ms2=0, h_core=h, eri_entries=entries,
                          e_core=1.0 / r_bohr)


def main():
    root = os.path.join(os.path.dirname(__file__), "..")
    outdir = os.path.join(root, "fixtures")
    os.makedirs(outdir, exist_ok=True)
    manifests = {}
    for basis_name in ("631g", "sto3g"):
        geometries = []
        for r in R_GRID_ANGSTROM:
            ints = h2_integrals(basis_name, r)
            name = f"h2_{basis_name}_r{r:.2f}.fcidump"
            with open(os.path.join(outdir, name), "w") as f:
                f.write(serialize_fcidump(ints))
            geometries.append({"path": name, "r_angstrom": r})
            print(f"wrote {name}")
        manifests[basis_name] = geometries

    manifest = {
        "system": "H2",
        "basis": "6-31G (s functions), Loewdin-orthogonalized AO basis",
        "units": "bond lengths in Angstrom, integrals in Hartree",
        "generator": "tools/gen_h2_fixtures.py (analytic s-type Gaussian integrals)",
        "geometries": manifests["631g"],
    }
    with open(os.path.join(outdir, "manifest.json"), "w") as f:
        json.dump(manifest, f, indent=2)
        f.write("\n")
    manifest_sto = dict(manifest)
    manifest_sto["basis"] = "STO-3G, Loewdin-orthogonalized AO basis"
    manifest_sto["geometries"] = manifests["sto3g"]
    with open(os.path.join(outdir, "manifest_sto3g.json"), "w") as f:
        json.dump(manifest_sto, f, indent=2)
        f.write("\n")
    print("wrote manifest.json / manifest_sto3g.json")


if __name__ == "__main__":
    main()
