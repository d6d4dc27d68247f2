"""Command-line driver and experiment harness.

Commands: solve, report, sample-bases, dissociation, selftest. Every
output artifact embeds the exact configuration and seed that produced it
(CSV/SVG as '#'-prefixed header lines, JSON as a "config" field). Exit
codes: 0 ok, 1 numerical failure, 2 input error.
"""

from __future__ import annotations

import argparse
import dataclasses
import glob as glob_module
import json
import os
import re
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .corr import (build_report, ci_entropy, ci_entropy_of_weights,
                   nonfreeness, total_correlation_from_occupations,
                   total_orbital_correlation)
from .eig import davidson_lowest, dense_lowest
from .errors import (CapacityError, ConvergenceError, DomainError,
                     FermicorrError, ParseError)
from .fock import enumerate_basis, read_fcivec, write_fcivec
from .hamio import build_hubbard, hamiltonian_action, parse_fcidump
from .rdm import one_rdm
from .rot import (BasisRotation, haar_orthogonal, natural_basis_rotation,
                  natural_pair_weights, near_identity_orthogonal,
                  occupations_in_basis, pair_coefficients, paired_state,
                  rotate_state, rotate_two_electron_coeffs, spin_expanded)

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_INPUT = 2


def _fmt(x) -> str:
    """Shortest float repr that round-trips (plain Python float)."""
    return repr(float(x))


# ---------------------------------------------------------------------------
# Config plumbing
# ---------------------------------------------------------------------------

def _load_config_file(path: str) -> dict:
    """key=value per line, '#' comments; values parsed as JSON when possible."""
    out = {}
    with open(path) as f:
        for raw in f:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError(f"config line without '=': {raw.strip()!r}")
            key, value = line.split("=", 1)
            key = key.strip().replace("-", "_")
            value = value.strip()
            try:
                out[key] = json.loads(value)
            except json.JSONDecodeError:
                out[key] = value
    return out


def _resolve_config(args: argparse.Namespace, defaults: dict) -> dict:
    """Explicit flags win; config-file values fill in untouched defaults."""
    if getattr(args, "config", None):
        file_values = _load_config_file(args.config)
        for key, value in file_values.items():
            if hasattr(args, key) and getattr(args, key) == defaults.get(key):
                setattr(args, key, value)
    # workers do not influence any output value, so they are kept out of
    # the embedded config: byte-identical artifacts across worker counts
    config = {k: v for k, v in sorted(vars(args).items())
              if k not in ("func", "config", "workers")}
    return config


def _header_lines(config: dict, no_timestamp: bool) -> list[str]:
    lines = [f"# fermicorr {__version__}",
             f"# config {json.dumps(config, sort_keys=True, default=str)}"]
    if not no_timestamp:
        lines.append(f"# generated {time.strftime('%Y-%m-%dT%H:%M:%S')}")
    return lines


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------

def _parse_hubbard_spec(spec: str):
    parts = [p.strip() for p in spec.split(",")]
    if len(parts) not in (3, 4):
        raise DomainError(f"--hubbard expects L,t,U[,pbc], got {spec!r}")
    sites = int(parts[0])
    t = float(parts[1])
    u = float(parts[2])
    periodic = len(parts) == 4 and parts[3].lower() in ("pbc", "true", "1")
    return sites, t, u, periodic


def _load_integrals(args):
    if getattr(args, "fcidump", None):
        with open(args.fcidump) as f:
            ints = parse_fcidump(f.read())
    elif getattr(args, "hubbard", None):
        ints = build_hubbard(*_parse_hubbard_spec(args.hubbard))
    else:
        raise DomainError("need --fcidump or --hubbard")
    n_elec = args.nelec if args.nelec is not None else ints.n_elec
    ms2 = args.sz2 if args.sz2 is not None else ints.ms2
    if n_elec != ints.n_elec or ms2 != ints.ms2:
        ints = dataclasses.replace(ints, n_elec=n_elec, ms2=ms2)
    return ints


def _solve_ground_state(ints, tol: float):
    basis = enumerate_basis(ints.n_modes, ints.n_elec, ints.ms2)
    action = hamiltonian_action(ints, basis)
    return davidson_lowest(action, basis, tol=tol)


def cmd_solve(args, defaults) -> int:
    config = _resolve_config(args, defaults)
    ints = _load_integrals(args)
    result = _solve_ground_state(ints, args.tol)
    write_fcivec(result.vector, args.out + ".fcivec")
    sidecar = {
        "energy": float(result.energy),
        "residual_norm": float(result.residual_norm),
        "iterations": result.iterations,
        "near_degenerate": result.near_degenerate,
        "config": config,
        "version": __version__,
    }
    with open(args.out + ".json", "w") as f:
        json.dump(sidecar, f, indent=2, sort_keys=True)
        f.write("\n")
    print(f"energy {_fmt(result.energy)}  residual {result.residual_norm:.2e}  "
          f"-> {args.out}.fcivec")
    return EXIT_OK


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

def cmd_report(args, defaults) -> int:
    config = _resolve_config(args, defaults)
    psi = read_fcivec(args.state).normalized()
    stored = build_report(psi, "stored")
    psi_nat = rotate_state(psi, natural_basis_rotation(psi))
    natural = build_report(psi_nat, "natural")
    payload = {
        "stored_basis": stored.to_json_dict(),
        "natural_basis": natural.to_json_dict(),
        "config": config,
        "version": __version__,
    }
    with open(args.out + ".json", "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
    lines = _header_lines(config, args.no_timestamp)
    lines.append("basis,orbital_i,orbital_j,mi_bits,mi_ssr_bits")
    for report in (stored, natural):
        for label, i, j, raw, ssr in report.csv_rows():
            lines.append(f"{label},{i},{j},{_fmt(raw)},{_fmt(ssr)}")
    with open(args.out + ".csv", "w") as f:
        f.write("\n".join(lines) + "\n")
    print(f"report -> {args.out}.json / {args.out}.csv")
    return EXIT_OK


# ---------------------------------------------------------------------------
# sample-bases
# ---------------------------------------------------------------------------

def _sample_rotation(mode: str, dim: int, scale: float, seed, sample_id: int,
                     restricted: bool) -> BasisRotation:
    rng_seed = [seed, sample_id]
    sample_dim = dim // 2 if restricted else dim
    if mode == "global":
        rot = haar_orthogonal(sample_dim, rng_seed)
    elif mode == "near-identity":
        rot = near_identity_orthogonal(sample_dim, scale, rng_seed)
    else:
        raise DomainError(f"unknown sampling mode {mode!r}")
    if restricted:
        return BasisRotation(spin_expanded(rot.u))
    return rot


def _sample_rows(psi, args):
    """Per-sample (I_B, CI entropy); deterministic in (seed, sample_id)."""
    gamma = one_rdm(psi)
    d = psi.basis.d
    two_electron = psi.basis.n_particles == 2
    coeffs = pair_coefficients(psi) if two_electron else None

    def one_sample(sample_id: int):
        rot = _sample_rotation(args.mode, d, args.scale, args.seed, sample_id,
                               args.restricted)
        occ = np.clip(occupations_in_basis(gamma, rot), 0.0, 1.0)
        i_b = total_correlation_from_occupations(occ)
        if two_electron:
            cp = rotate_two_electron_coeffs(coeffs, rot)
            weights = np.abs(cp[np.triu_indices(d, k=1)]) ** 2
            h = ci_entropy_of_weights(weights)
        else:
            h = ci_entropy(rotate_state(psi, rot))
        return sample_id, i_b, h

    ids = range(args.n_samples)
    if args.workers > 1:
        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(one_sample, ids))
    else:
        rows = [one_sample(i) for i in ids]
    rows.sort(key=lambda r: r[0])
    return rows


def _natural_ci_entropy(psi) -> float:
    if psi.basis.n_particles == 2:
        return ci_entropy_of_weights(natural_pair_weights(pair_coefficients(psi)))
    return ci_entropy(rotate_state(psi, natural_basis_rotation(psi)))


def cmd_sample_bases(args, defaults) -> int:
    config = _resolve_config(args, defaults)
    psi = read_fcivec(args.state).normalized()
    rows = _sample_rows(psi, args)
    min_i = nonfreeness(psi)
    min_h = _natural_ci_entropy(psi)

    lines = _header_lines(config, args.no_timestamp)
    lines.append("sample_id,I_B_bits,ci_entropy_bits")
    for sample_id, i_b, h in rows:
        lines.append(f"{sample_id},{_fmt(i_b)},{_fmt(h)}")
    lines.append(f"MIN_I,{_fmt(min_i)}")
    lines.append(f"MIN_H,{_fmt(min_h)}")
    with open(args.out, "w") as f:
        f.write("\n".join(lines) + "\n")
    if args.svg:
        svg = _svg_scatter([(i_b, h) for _, i_b, h in rows], min_i, min_h,
                           config, args.no_timestamp)
        with open(args.svg, "w") as f:
            f.write(svg)
    print(f"{len(rows)} samples -> {args.out}")
    return EXIT_OK


def _svg_scatter(points, min_i, min_h, config, no_timestamp) -> str:
    """Static 800x600 scatter of (I_B, CI entropy) with red minima lines."""
    width, height = 800, 600
    margin = 60
    xs = [p[0] for p in points] + [min_i]
    ys = [p[1] for p in points] + [min_h]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    x_pad = 0.05 * (x_hi - x_lo) or 0.5
    y_pad = 0.05 * (y_hi - y_lo) or 0.5
    x_lo, x_hi = x_lo - x_pad, x_hi + x_pad
    y_lo, y_hi = y_lo - y_pad, y_hi + y_pad

    def sx(x):
        return margin + (x - x_lo) / (x_hi - x_lo) * (width - 2 * margin)

    def sy(y):
        return height - margin - (y - y_lo) / (y_hi - y_lo) * (height - 2 * margin)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {width} {height}">']
    header = json.dumps(config, sort_keys=True, default=str)
    parts.append(f"<!-- fermicorr {__version__} config {header} -->")
    if not no_timestamp:
        parts.append(f"<!-- generated {time.strftime('%Y-%m-%dT%H:%M:%S')} -->")
    parts.append(f'<rect width="{width}" height="{height}" fill="white"/>')
    # axes
    parts.append(f'<line x1="{margin}" y1="{height-margin}" x2="{width-margin}" '
                 f'y2="{height-margin}" stroke="black"/>')
    parts.append(f'<line x1="{margin}" y1="{margin}" x2="{margin}" '
                 f'y2="{height-margin}" stroke="black"/>')
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        xv = x_lo + frac * (x_hi - x_lo)
        yv = y_lo + frac * (y_hi - y_lo)
        parts.append(f'<line x1="{sx(xv):.1f}" y1="{height-margin}" '
                     f'x2="{sx(xv):.1f}" y2="{height-margin+5}" stroke="black"/>')
        parts.append(f'<text x="{sx(xv):.1f}" y="{height-margin+20}" '
                     f'font-size="11" text-anchor="middle">{xv:.3g}</text>')
        parts.append(f'<line x1="{margin-5}" y1="{sy(yv):.1f}" '
                     f'x2="{margin}" y2="{sy(yv):.1f}" stroke="black"/>')
        parts.append(f'<text x="{margin-8}" y="{sy(yv)+4:.1f}" font-size="11" '
                     f'text-anchor="end">{yv:.3g}</text>')
    parts.append(f'<text x="{width/2:.0f}" y="{height-15}" font-size="13" '
                 f'text-anchor="middle">total orbital correlation I_B (bits)</text>')
    parts.append(f'<text x="18" y="{height/2:.0f}" font-size="13" text-anchor="middle" '
                 f'transform="rotate(-90 18 {height/2:.0f})">CI entropy (bits)</text>')
    # minima as red lines
    parts.append(f'<line x1="{sx(min_i):.1f}" y1="{margin}" x2="{sx(min_i):.1f}" '
                 f'y2="{height-margin}" stroke="red" stroke-width="1.2"/>')
    parts.append(f'<line x1="{margin}" y1="{sy(min_h):.1f}" x2="{width-margin}" '
                 f'y2="{sy(min_h):.1f}" stroke="red" stroke-width="1.2"/>')
    for x, y in points:
        parts.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="1.5" '
                     f'fill="steelblue" fill-opacity="0.5"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# ---------------------------------------------------------------------------
# dissociation
# ---------------------------------------------------------------------------

_R_PATTERN = re.compile(r"[_-]r(\d+(?:\.\d+)?)")


def _dissociation_inputs(args):
    """(R, fcidump path) pairs from a manifest file or a filename glob."""
    entries = []
    if args.manifest:
        with open(args.manifest) as f:
            manifest = json.load(f)
        base = os.path.dirname(os.path.abspath(args.manifest))
        for item in manifest["geometries"]:
            path = item["path"]
            if not os.path.isabs(path):
                path = os.path.join(base, path)
            entries.append((float(item["r_angstrom"]), path))
    elif args.glob:
        for path in sorted(glob_module.glob(args.glob)):
            m = _R_PATTERN.search(path)
            if not m:
                raise DomainError(
                    f"cannot read a bond length from {path!r}; use a manifest")
            entries.append((float(m.group(1)), path))
    else:
        raise DomainError("need --manifest or --glob")
    if not entries:
        raise DomainError("no geometries found")
    return sorted(entries)


def cmd_dissociation(args, defaults) -> int:
    config = _resolve_config(args, defaults)
    rows = []
    for r, path in _dissociation_inputs(args):
        with open(path) as f:
            ints = parse_fcidump(f.read())
        result = _solve_ground_state(ints, args.tol)
        psi = result.vector
        rows.append((r, result.energy, nonfreeness(psi), _natural_ci_entropy(psi)))
    lines = _header_lines(config, args.no_timestamp)
    lines.append("R,energy,nonfreeness_bits,ci_entropy_natural_bits")
    for r, energy, nf, h in rows:
        lines.append(f"{r!r},{_fmt(energy)},{_fmt(nf)},{_fmt(h)}")
    with open(args.out, "w") as f:
        f.write("\n".join(lines) + "\n")
    print(f"{len(rows)} geometries -> {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# selftest
# ---------------------------------------------------------------------------

def cmd_selftest(args, defaults) -> int:
    del defaults
    checks = []

    def check(name, value, expected, tol):
        ok = abs(value - expected) <= tol
        checks.append(ok)
        print(f"{'PASS' if ok else 'FAIL'} {name}: {value!r} "
              f"(expected {expected!r} +- {tol:g})")

    dimer0 = _solve_ground_state(build_hubbard(2, 1.0, 0.0), 1e-10)
    check("hubbard dimer U=0 energy", dimer0.energy, -2.0, 1e-9)
    dimer4 = _solve_ground_state(build_hubbard(2, 1.0, 4.0), 1e-10)
    check("hubbard dimer U=4 energy", dimer4.energy, 2 - 2 * np.sqrt(2), 1e-9)
    bonding = rotate_state(
        paired_state([1.0], d=4),
        BasisRotation(spin_expanded(np.array([[1, 1], [1, -1]]) / np.sqrt(2))))
    check("bonding state nonfreeness", nonfreeness(bonding), 0.0, 1e-9)
    check("bonding state atomic-basis I_B",
          total_orbital_correlation(bonding), 4.0, 1e-9)
    return EXIT_OK if all(checks) else EXIT_NUMERICAL


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key=value config file (flags win)")
    p.add_argument("--no-timestamp", action="store_true",
                   help="suppress the timestamp header line")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fermicorr",
        description="correlation measures for fermionic wave functions")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    defaults_by_command = {}

    def register(name, p):
        defaults_by_command[name] = {
            a.dest: a.default for a in p._actions if a.dest != "help"
        }

    p = sub.add_parser("solve", help="ground state of an FCIDUMP or Hubbard chain")
    p.add_argument("--fcidump", help="FCIDUMP file path")
    p.add_argument("--hubbard", help="L,t,U[,pbc] chain parameters")
    p.add_argument("--nelec", type=int, default=None)
    p.add_argument("--sz2", type=int, default=None)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--out", required=True, help="output stem (.fcivec/.json)")
    _add_common(p)
    p.set_defaults(func=cmd_solve)
    register("solve", p)

    p = sub.add_parser("report", help="correlation report of a stored state")
    p.add_argument("--state", required=True, help="FCIVEC file")
    p.add_argument("--out", required=True, help="output stem (.json/.csv)")
    _add_common(p)
    p.set_defaults(func=cmd_report)
    register("report", p)

    p = sub.add_parser("sample-bases",
                       help="I_B and CI entropy over random orbital bases")
    p.add_argument("--state", required=True, help="FCIVEC file")
    p.add_argument("--n-samples", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=["global", "near-identity"],
                   default="global")
    p.add_argument("--scale", type=float, default=0.1,
                   help="width of the near-identity distribution")
    p.add_argument("--restricted", action="store_true",
                   help="sample spatial rotations acting identically on spins")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True, help="output CSV")
    p.add_argument("--svg", default=None, help="optional SVG scatter")
    _add_common(p)
    p.set_defaults(func=cmd_sample_bases)
    register("sample-bases", p)

    p = sub.add_parser("dissociation",
                       help="nonfreeness and CI entropy along a bond scan")
    p.add_argument("--manifest", help="JSON manifest of FCIDUMP geometries")
    p.add_argument("--glob", help="filename glob with _r<R> bond lengths")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--out", required=True, help="output CSV")
    _add_common(p)
    p.set_defaults(func=cmd_dissociation)
    register("dissociation", p)

    p = sub.add_parser("selftest", help="run built-in sanity checks")
    p.set_defaults(func=cmd_selftest)
    register("selftest", p)

    return parser, defaults_by_command


def main(argv=None) -> int:
    parser, defaults_by_command = build_parser()
    args = parser.parse_args(argv)
    defaults = defaults_by_command.get(args.command, {})
    try:
        return args.func(args, defaults)
    except (ParseError, DomainError, CapacityError, FileNotFoundError,
            json.JSONDecodeError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ConvergenceError, FermicorrError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
