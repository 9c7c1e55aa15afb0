"""Command line experiments over trees, buildings, Bohr sets, and lattices.

Thirteen subcommands bind the library modules into reproducible reports.
Every report is one JSON document with sorted keys and two-space indents;
all randomness is drawn from generators derived from --seed, so identical
flags produce byte-identical output.

Exit codes: 0 = success, 1 = a verified property failed, 2 = invalid input.
A verify-style command whose hypothesis is not met verified nothing; it
reports that and exits 0.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from . import bohr_lab, building_calc, padic, spherical_lab, tree_lab
from .errors import ConsistencyError, InputError
from .root_system import (
    Coweight,
    build_root_datum,
    datum_to_dict,
    height_two_rho,
    rho_coweight,
    sphere_size,
)

_VIOLATION_CAP = 20


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that determines a report: subcommand, parameters, format."""

    subcommand: str
    parameters: dict
    fmt: str = "json"

    def to_dict(self) -> dict:
        return {
            "subcommand": self.subcommand,
            "parameters": self.parameters,
            "format": self.fmt,
        }


# ---------------------------------------------------------------------------
# parsing and emission helpers


def _parse_fraction(text: str, field: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"{field} must be a fraction like 1/5, got {text!r}") from exc


def _parse_ints(text: str, field: str) -> tuple[int, ...]:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise InputError(f"{field} must be a comma-separated list of integers")
    try:
        return tuple(int(p) for p in parts)
    except ValueError as exc:
        raise InputError(f"{field} must be a comma-separated list of integers, got {text!r}") from exc


def _parse_chains(text: str, field: str) -> tuple[tuple[int, ...], ...]:
    chains = [c.strip() for c in text.split(";") if c.strip()]
    if not chains:
        raise InputError(f"{field} must be semicolon-separated distance lists")
    return tuple(_parse_ints(c, field) for c in chains)


def _frs(x: Fraction) -> str:
    return str(Fraction(x))


def _emit_json(report: dict, out: str | None) -> None:
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _resolve_threads(requested: int | None) -> int:
    if requested is None:
        env = os.environ.get("BUILDING_RAMSEY_THREADS")
        if env is not None:
            try:
                requested = int(env)
            except ValueError as exc:
                raise InputError("BUILDING_RAMSEY_THREADS must be an integer") from exc
        else:
            requested = os.cpu_count() or 1
    if requested < 1:
        raise InputError("threads must be a positive integer")
    return requested


def _coweight_arg(datum, text: str) -> Coweight:
    coords = _parse_ints(text, "coweight")
    if len(coords) != datum.rank:
        raise InputError(f"coweight needs {datum.rank} coordinates for {datum.label}")
    return Coweight(coords)


# ---------------------------------------------------------------------------
# shared tree plumbing


def _add_source_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--set", metavar="FILE", help="vertex-set JSON file")
    sub.add_argument(
        "--full-spheres",
        metavar="LEVELS",
        help="comma list of levels; the set is the union of those full spheres",
    )
    sub.add_argument(
        "--one-child-n",
        metavar="N",
        type=int,
        help="build a one-child filtered subset of sphere N (needs --one-child-blocked)",
    )
    sub.add_argument(
        "--one-child-blocked",
        metavar="DISTS",
        help="comma list of distances t blocked by the one-child filter",
    )
    sub.add_argument(
        "--keep",
        type=float,
        default=1.0,
        help="survival probability for final-level thinning of the one-child set",
    )


def _resolve_ball_and_set(args) -> tuple[tree_lab.TreeBall, tree_lab.VertexSet, dict]:
    """Build (ball, set, source echo) from exactly one of the source flags."""
    chosen = [
        flag
        for flag, value in (
            ("--set", args.set),
            ("--full-spheres", args.full_spheres),
            ("--one-child-n", args.one_child_n),
        )
        if value is not None
    ]
    if len(chosen) != 1:
        raise InputError(
            "choose exactly one vertex-set source: --set, --full-spheres, or --one-child-n"
        )

    if args.set is not None:
        xs = tree_lab.load_vertex_set(args.set)
        ball = xs.ball
        if args.q is not None and args.q != ball.q:
            raise InputError(f"--q {args.q} disagrees with the file's q {ball.q}")
        if args.depth is not None and args.depth != ball.depth:
            raise InputError(f"--depth {args.depth} disagrees with the file's depth {ball.depth}")
        return ball, xs, {"kind": "file", "path": args.set}

    if args.q is None or args.depth is None:
        raise InputError("--q and --depth are required unless --set provides them")
    ball = tree_lab.TreeBall(q=args.q, depth=args.depth)

    if args.full_spheres is not None:
        levels = _parse_ints(args.full_spheres, "full-spheres")
        xs = tree_lab.VertexSet.full_spheres(ball, levels)
        return ball, xs, {"kind": "full-spheres", "levels": sorted(set(levels))}

    if args.one_child_blocked is None:
        raise InputError("--one-child-n needs --one-child-blocked")
    blocked = _parse_ints(args.one_child_blocked, "one-child-blocked")
    xs = tree_lab.one_child_filter_set(
        ball, args.one_child_n, blocked, seed=args.seed, keep=args.keep
    )
    return ball, xs, {
        "kind": "one-child",
        "n": args.one_child_n,
        "blocked": sorted(blocked),
        "keep": args.keep,
        "seed": args.seed,
    }


def _set_summary(xs: tree_lab.VertexSet) -> dict:
    return {
        "total": len(xs),
        "levels": {str(n): xs.count(n) for n in xs.levels},
    }


def _density_block(ball: tree_lab.TreeBall, xs: tree_lab.VertexSet, csv_path: str | None) -> dict:
    report = tree_lab.upper_density(ball, xs)
    if csv_path:
        _write_text(csv_path, report.to_csv())
    return {
        "estimate": _frs(report.estimate),
        "estimate_float": float(report.estimate),
    }


# ---------------------------------------------------------------------------
# subcommand handlers


def _cmd_rootsys_info(args) -> int:
    datum = build_root_datum(args.type)
    include_order = args.allow_large or datum.rank <= 6
    config = ExperimentConfig(
        "rootsys-info", {"type": args.type, "allow_large": args.allow_large}
    )
    report = {
        "config": config.to_dict(),
        "datum": datum_to_dict(datum, include_weyl_order=include_order),
    }
    _emit_json(report, args.out)
    return 0


def _cmd_sphere_size(args) -> int:
    datum = build_root_datum(args.type)
    lam = _coweight_arg(datum, args.lam)
    value = sphere_size(datum, lam, args.q, allow_large=args.allow_large)
    config = ExperimentConfig(
        "sphere-size",
        {"type": args.type, "lambda": list(lam.coords), "q": args.q},
    )
    report = {
        "config": config.to_dict(),
        "type": args.type,
        "coweight": list(lam.coords),
        "q": args.q,
        "height": height_two_rho(datum, lam),
        "formula": "W(1/q) / W_lambda(1/q) * q^h(lambda)",
        "value": value,
    }
    _emit_json(report, args.out)
    return 0


def _cmd_tree_star_search(args) -> int:
    ball, xs, source = _resolve_ball_and_set(args)
    spec = tree_lab.StarSpec(
        t=_parse_ints(args.t, "t"), r=_parse_ints(args.r, "r")
    )
    star = tree_lab.find_balanced_star(ball, xs, spec)
    config = ExperimentConfig(
        "tree-star-search",
        {
            "q": ball.q,
            "depth": ball.depth,
            "source": source,
            "t": list(spec.t),
            "r": list(spec.r),
            "seed": args.seed,
            "brute_force": args.brute_force,
        },
    )
    report = {
        "config": config.to_dict(),
        "set": _set_summary(xs),
        "spec": {"t": list(spec.t), "r": list(spec.r)},
        "found": star is not None,
        "star": None,
        "smallest_level_with_star": None,
        "density": _density_block(ball, xs, args.density_csv),
    }
    if star is not None:
        report["star"] = {
            "level": star.level,
            "center": star.center,
            "tiers": [list(tier) for tier in star.tiers],
        }
        report["smallest_level_with_star"] = star.level
        report["reverified"] = tree_lab.verify_star(ball, star)
        if not report["reverified"]:
            raise ConsistencyError("returned star failed re-verification")
    if args.brute_force:
        oracle = tree_lab.brute_force_star_search(ball, xs, spec)
        report["brute_force_agrees"] = oracle == star
        if not report["brute_force_agrees"]:
            raise ConsistencyError("search disagrees with the brute-force oracle")
    _emit_json(report, args.out)
    return 0


def _cmd_tree_verify_claim1(args) -> int:
    ball, xs, source = _resolve_ball_and_set(args)
    if args.v is not None:
        scan = {args.v: tree_lab.check_atom_hit_bound(ball, xs, args.t1, args.v, args.t, args.n)}
    else:
        scan = tree_lab.atom_hit_scan(ball, xs, args.t1, args.t, args.n)

    hypothesis_ok = all(rep.hypothesis_ok for rep in scan.values())
    message = next((rep.message for rep in scan.values() if rep.message), "")
    worst_cone = max(scan, key=lambda v: (scan[v].proportion, v))
    violations = sorted(v for v, rep in scan.items() if rep.proportion > rep.bound)
    ok = hypothesis_ok and not violations

    config = ExperimentConfig(
        "tree-verify-claim1",
        {
            "q": ball.q,
            "depth": ball.depth,
            "source": source,
            "t1": args.t1,
            "t": args.t,
            "n": args.n,
            "v": args.v,
            "seed": args.seed,
        },
    )
    report = {
        "config": config.to_dict(),
        "set": _set_summary(xs),
        "cones_scanned": len(scan),
        "hypothesis_ok": hypothesis_ok,
        "message": message,
        "bound": _frs(next(iter(scan.values())).bound),
        "max_proportion": _frs(scan[worst_cone].proportion),
        "worst_cone": worst_cone,
        "violations": violations[:_VIOLATION_CAP],
        "violation_count": len(violations),
        "ok": ok,
    }
    _emit_json(report, args.out)
    return 1 if hypothesis_ok and violations else 0


def _cmd_tree_verify_lemma2(args) -> int:
    ball, xs, source = _resolve_ball_and_set(args)
    r_vec = _parse_ints(args.r, "r")
    chains = [
        tree_lab.StarSpec(t=chain, r=r_vec)
        for chain in _parse_chains(args.chains, "chains")
    ]
    result = tree_lab.check_density_bound(ball, xs, chains, args.n)
    config = ExperimentConfig(
        "tree-verify-lemma2",
        {
            "q": ball.q,
            "depth": ball.depth,
            "source": source,
            "chains": [list(spec.t) for spec in chains],
            "r": list(r_vec),
            "n": args.n,
            "seed": args.seed,
        },
    )
    report = {
        "config": config.to_dict(),
        "set": _set_summary(xs),
        "hypothesis_ok": result.hypothesis_ok,
        "message": result.message,
        "lhs": _frs(result.lhs),
        "lhs_float": float(result.lhs),
        "rhs": _frs(result.rhs),
        "rhs_float": float(result.rhs),
        "ok": result.ok,
    }
    _emit_json(report, args.out)
    return 1 if result.hypothesis_ok and not result.ok else 0


def _cmd_tree_embed(args) -> int:
    ball, xs, source = _resolve_ball_and_set(args)
    tree = tree_lab.WeightedTree(
        parents=_parse_ints(args.parents, "parents"),
        weights=_parse_ints(args.weights, "weights"),
    )
    tree.check_well_ordered()
    emb = tree_lab.embed_weighted_tree(ball, xs, tree)
    config = ExperimentConfig(
        "tree-embed",
        {
            "q": ball.q,
            "depth": ball.depth,
            "source": source,
            "parents": list(tree.parents),
            "weights": list(tree.weights),
            "seed": args.seed,
        },
    )
    spec = tree.star_spec()
    report = {
        "config": config.to_dict(),
        "set": _set_summary(xs),
        "tree": {"parents": list(tree.parents), "weights": list(tree.weights)},
        "spec": {"t": list(spec.t), "r": list(spec.r)},
        "found": emb is not None,
        "assignment": None,
        "verified": None,
    }
    if emb is not None:
        verified = tree_lab.verify_embedding(ball, emb)
        if not verified:
            raise ConsistencyError("embedding failed distance re-verification")
        report["assignment"] = list(emb.assignment)
        report["verified"] = verified
        report["level"] = emb.star.level
    _emit_json(report, args.out)
    return 0


def _cmd_bohr_report(args) -> int:
    epsilon = _parse_fraction(args.epsilon, "epsilon")
    bohr = bohr_lab.bohr_membership(epsilon, args.horizon, theta_square=args.theta_square)
    members = bohr.window()
    density_a = bohr_lab.natural_density(members)
    window = args.sumset_window if args.sumset_window is not None else args.horizon
    sumset = bohr_lab.double_difference_sumset(bohr, window)
    density_s = bohr_lab.natural_density(sumset)
    config = ExperimentConfig(
        "bohr-report",
        {
            "epsilon": _frs(epsilon),
            "horizon": args.horizon,
            "theta_square": args.theta_square,
            "sumset_window": window,
        },
    )
    report = {
        "config": config.to_dict(),
        "epsilon": _frs(epsilon),
        "theta_square": args.theta_square,
        "N": args.horizon,
        "density_A": _frs(density_a.density),
        "density_A_float": float(density_a.density),
        "uncertain_count": bohr.uncertain_count,
        "dyadic_A": [
            {"half_width": hw, "density": _frs(d)} for hw, d in density_a.dyadic
        ],
        "sumset_window": window,
        "density_sumset": _frs(density_s.density),
        "density_sumset_float": float(density_s.density),
        "uncertain_sumset": sumset.uncertain_count,
        "dyadic_sumset": [
            {"half_width": hw, "density": _frs(d)} for hw, d in density_s.dyadic
        ],
    }
    if args.rle_out:
        payload = {
            "epsilon": _frs(epsilon),
            "theta_square": args.theta_square,
            "A": members.rle(),
            "sumset": sumset.rle(),
        }
        _write_text(args.rle_out, json.dumps(payload, indent=2, sort_keys=True) + "\n")
        report["rle_written"] = True
    _emit_json(report, args.out)
    return 0


def _cmd_bohr_avoidance(args) -> int:
    epsilon = _parse_fraction(args.epsilon, "epsilon")
    result = bohr_lab.verify_avoidance(
        epsilon,
        args.horizon,
        args.k_max,
        args.floor_t,
        sample_pairs=args.samples,
        tree_depth=args.tree_depth,
        seed=args.seed,
        theta_square=args.theta_square,
        scan_limit=args.scan_limit,
    )
    config = ExperimentConfig(
        "bohr-avoidance",
        {
            "epsilon": _frs(epsilon),
            "horizon": args.horizon,
            "k_max": args.k_max,
            "floor_t": args.floor_t,
            "samples": args.samples,
            "tree_depth": args.tree_depth,
            "seed": args.seed,
            "theta_square": args.theta_square,
            "scan_limit": args.scan_limit,
        },
    )
    report = {
        "config": config.to_dict(),
        "epsilon": _frs(result.epsilon),
        "theta_square": result.theta_square,
        "N": result.horizon,
        "density_A": _frs(result.density_members),
        "density_A_float": float(result.density_members),
        "density_sumset": _frs(result.density_sumset),
        "density_sumset_float": float(result.density_sumset),
        "uncertain_count": result.uncertain_members,
        "uncertain_sumset": result.uncertain_sumset,
        "witnesses": [
            {"k": w.k, "t": w.t, "value": w.value, "window_state": w.window_state}
            for w in result.witnesses
        ],
        "missing_k": list(result.missing_k),
        "sampled_pairs": result.sampled_pairs,
        "sampled_distance_failures": result.sampled_distance_failures,
        "uniformity": [
            {"modulus": m, "residue": r, "density": _frs(d), "density_float": float(d)}
            for m, r, d in result.uniformity
        ],
    }
    _emit_json(report, args.out)
    return 1 if result.sampled_distance_failures > 0 else 0


def _cmd_spherical_noise_check(args) -> int:
    cx = spherical_lab.build_complex(args.complex)
    threads = _resolve_threads(args.threads)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            summary = spherical_lab.noise_summary(cx, map_fn=pool.map)
    else:
        summary = spherical_lab.noise_summary(cx)
    if args.csv:
        _write_text(args.csv, spherical_lab.pair_counts_csv(cx, summary=summary))
    config = ExperimentConfig(
        "spherical-noise-check", {"complex": args.complex, "threads": threads}
    )
    report = {"config": config.to_dict(), **summary}
    _emit_json(report, args.out)
    passed = (
        summary["opposite_count_ok"]
        and summary["double_opposite_ok"]
        and summary["projection_uniqueness_ok"]
    )
    return 0 if passed else 1


def _cmd_calc_atoms(args) -> int:
    datum = build_root_datum(args.type)
    lam = _coweight_arg(datum, args.lam)
    counts = building_calc.atom_cardinalities(datum, args.q, lam)
    mu = _coweight_arg(datum, args.mu) if args.mu else rho_coweight(datum.rank)
    identity_ok = building_calc.atom_partition_identity(
        datum, args.q, lam, mu, allow_large=args.allow_large
    )
    config = ExperimentConfig(
        "calc-atoms",
        {"type": args.type, "lambda": list(lam.coords), "q": args.q, "mu": list(mu.coords)},
    )
    report = {
        "config": config.to_dict(),
        "formula": {"O": "q^l(w0)", "atom": "q^(h(lambda) - l(w0))"},
        "inputs": {"type": args.type, "lambda": list(lam.coords), "q": args.q},
        "O": counts.opposite,
        "atom": counts.atom,
        "value": {
            "O": counts.opposite,
            "atom": counts.atom,
            "opposite_exponent": counts.opposite_exponent,
            "atom_exponent": counts.atom_exponent,
            "height": counts.opposite_exponent + counts.atom_exponent,
        },
        "cross_checks": [
            {
                "name": "partition identity |S_mu| * O * atom == |S_{lambda+mu}|",
                "mu": list(mu.coords),
                "ok": identity_ok,
            }
        ],
    }
    _emit_json(report, args.out)
    return 0 if identity_ok else 1


def _cmd_calc_bound(args) -> int:
    datum = build_root_datum(args.type)
    lam11 = _coweight_arg(datum, args.lambda11)
    value = building_calc.density_bound_rhs(datum, args.q, args.ell, args.r, lam11)
    noise = building_calc.kappa(datum, args.q)
    deeper = building_calc.density_bound_rhs(datum, args.q, args.ell + 1, args.r, lam11)
    larger = building_calc.density_bound_rhs(
        datum, args.q, args.ell, args.r, lam11 + rho_coweight(datum.rank)
    )
    checks = [
        {"name": "monotone decreasing in ell", "ok": deeper < value},
        {"name": "monotone decreasing in lambda_{1,1}", "ok": larger < value},
    ]
    config = ExperimentConfig(
        "calc-bound",
        {
            "type": args.type,
            "q": args.q,
            "ell": args.ell,
            "r": args.r,
            "lambda11": list(lam11.coords),
        },
    )
    report = {
        "config": config.to_dict(),
        "formula": "(1 - kappa)^ell + r * q^(l(w0) - h(lambda11))",
        "inputs": {
            "type": args.type,
            "q": args.q,
            "ell": args.ell,
            "r": args.r,
            "lambda11": list(lam11.coords),
        },
        "value": _frs(value),
        "value_float": float(value),
        "components": {
            "kappa": _frs(noise.kappa),
            "kappa_float": float(noise.kappa),
            "end_chamber_bound": noise.end_chamber_bound,
            "l_w0": datum.num_positive_roots,
            "height": height_two_rho(datum, lam11),
        },
        "cross_checks": checks,
    }
    _emit_json(report, args.out)
    return 0 if all(c["ok"] for c in checks) else 1


def _cmd_conjecture_witness(args) -> int:
    datum = build_root_datum(args.type)
    if datum.family != "A" or datum.rank < 2:
        raise InputError("type must be A_n with n >= 2 for the doubled-coweight witness")
    result = building_calc.conjecture_witness(datum, args.n_max)
    config = ExperimentConfig(
        "conjecture-witness", {"type": args.type, "n_max": args.n_max}
    )
    report = {
        "config": config.to_dict(),
        "type": result.label,
        "n_max": args.n_max,
        "entries": [
            {
                "N": e.n_scale,
                "coords": list(e.coords),
                "coroot_coords": list(e.coroot_coords),
                "in_coroot_lattice": e.in_coroot_lattice,
            }
            for e in result.entries
        ],
        "all_outside": result.all_outside,
        "control_two_rho_inside": result.control_two_rho_inside,
        "residue": result.residue,
    }
    _emit_json(report, args.out)
    return 0 if result.all_outside and result.control_two_rho_inside else 1


def _load_matrix(path: str) -> padic.Matrix:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed matrix JSON in {path}: {exc}") from exc
    return padic.parse_matrix(payload)


def _cmd_padic_cartan(args) -> int:
    g = _load_matrix(args.matrix)
    coords = padic.cartan_coordinates(g, args.p)
    oracle = padic.cartan_from_minors(g, args.p)
    det_val = padic.valuation(padic.determinant(g), args.p)
    config = ExperimentConfig(
        "padic-cartan",
        {"p": args.p, "matrix": args.matrix, "second": args.second},
    )
    report = {
        "config": config.to_dict(),
        "p": args.p,
        "matrix": padic.matrix_to_json(g),
        "lambda": list(coords),
        "det_valuation": det_val,
        "oracle_agrees": coords == oracle,
    }
    if args.second:
        h = _load_matrix(args.second)
        report["second"] = padic.matrix_to_json(h)
        report["pair_lambda"] = list(padic.vector_distance_cosets(g, h, args.p))
    _emit_json(report, args.out)
    return 0 if report["oracle_agrees"] else 1


# ---------------------------------------------------------------------------
# parser


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="building-ramsey",
        description="Desk-scale verification of density Ramsey statements on trees and buildings.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    def common(sub, seed: bool = False) -> None:
        sub.add_argument("--out", metavar="FILE", help="write the JSON report here instead of stdout")
        if seed:
            sub.add_argument("--seed", type=int, default=0, help="seed for any randomized generation")

    sub = subs.add_parser("rootsys-info", help="export a root datum as JSON")
    sub.add_argument("--type", required=True, metavar="LABEL", help="e.g. A2, C3, G2")
    sub.add_argument("--allow-large", action="store_true", help="permit Weyl enumeration above rank 6")
    common(sub)
    sub.set_defaults(handler=_cmd_rootsys_info)

    sub = subs.add_parser("sphere-size", help="vertices at a given coweight distance")
    sub.add_argument("--type", required=True, metavar="LABEL")
    sub.add_argument("--lambda", dest="lam", required=True, metavar="C1,..,CN", help="dominant coweight coordinates")
    sub.add_argument("--q", type=int, required=True)
    sub.add_argument("--allow-large", action="store_true")
    common(sub)
    sub.set_defaults(handler=_cmd_sphere_size)

    def tree_common(sub) -> None:
        sub.add_argument("--q", type=int, help="tree thickness (every vertex has q+1 neighbours)")
        sub.add_argument("--depth", type=int, help="ball radius")
        _add_source_flags(sub)
        common(sub, seed=True)

    sub = subs.add_parser("tree-star-search", help="find a balanced star inside a vertex set")
    tree_common(sub)
    sub.add_argument("--t", required=True, metavar="T1,..,TK", help="half-distances, strictly increasing")
    sub.add_argument("--r", required=True, metavar="R1,..,RK", help="tier multiplicities")
    sub.add_argument("--brute-force", action="store_true", help="cross-check against the all-tuples oracle")
    sub.add_argument("--density-csv", metavar="FILE", help="write per-level densities as CSV (n, a_n, b_n)")
    sub.set_defaults(handler=_cmd_tree_star_search)

    sub = subs.add_parser(
        "tree-verify-claim1",
        help="sparse-atom bound: cones meeting X are at most a 1/q proportion",
    )
    tree_common(sub)
    sub.add_argument("--t1", type=int, required=True)
    sub.add_argument("--t", type=int, required=True)
    sub.add_argument("--n", type=int, required=True)
    sub.add_argument("--v", metavar="CODE", help="single cone vertex at level n - t (default: scan all)")
    sub.set_defaults(handler=_cmd_tree_verify_claim1)

    sub = subs.add_parser(
        "tree-verify-lemma2",
        help="star-free density bound |X cap S_n| / |S_n| < q^-ell + r q^(1 - t11)",
    )
    tree_common(sub)
    sub.add_argument("--chains", required=True, metavar="T11,T12;T21,T22", help="semicolon-separated distance chains")
    sub.add_argument("--r", required=True, metavar="R1,..,RK", help="multiplicities shared by every chain")
    sub.add_argument("--n", type=int, required=True)
    sub.set_defaults(handler=_cmd_tree_verify_lemma2)

    sub = subs.add_parser("tree-embed", help="embed a well-ordered weighted tree into a vertex set")
    tree_common(sub)
    sub.add_argument("--parents", required=True, metavar="P1,..,PN", help="parent index of each non-root vertex")
    sub.add_argument("--weights", required=True, metavar="W1,..,WN", help="edge weight of each non-root vertex")
    sub.set_defaults(handler=_cmd_tree_embed)

    sub = subs.add_parser("bohr-report", help="densities of the Bohr set and its double difference sumset")
    sub.add_argument("--epsilon", required=True, help="fractional-part threshold, e.g. 1/5")
    sub.add_argument("--horizon", type=int, required=True, metavar="N")
    sub.add_argument("--theta-square", type=int, default=2, help="theta = sqrt of this non-square")
    sub.add_argument("--sumset-window", type=int, help="half-width of the reported sumset window (default N)")
    sub.add_argument("--rle-out", metavar="FILE", help="write run-length-encoded indicators here")
    common(sub)
    sub.set_defaults(handler=_cmd_bohr_report)

    sub = subs.add_parser("bohr-avoidance", help="witnesses kt outside the sumset plus sampled distance checks")
    sub.add_argument("--epsilon", required=True)
    sub.add_argument("--horizon", type=int, required=True, metavar="N")
    sub.add_argument("--k-max", type=int, required=True)
    sub.add_argument("--floor-t", type=int, required=True, metavar="K", help="witnesses must have t >= K")
    sub.add_argument("--samples", type=int, default=0, help="sampled member pairs whose distance must lie in the sumset")
    sub.add_argument("--tree-depth", type=int, default=0, help="depth of the pruned tree used for sampling")
    sub.add_argument("--theta-square", type=int, default=2)
    sub.add_argument("--scan-limit", type=int, default=20000, help="how far above K to scan for witnesses")
    common(sub, seed=True)
    sub.set_defaults(handler=_cmd_bohr_avoidance)

    sub = subs.add_parser("spherical-noise-check", help="exhaustive opposition census of a small flag complex")
    sub.add_argument("--complex", required=True, choices=("fano", "gq22"))
    sub.add_argument("--csv", metavar="FILE", help="write per-pair double-opposite counts as CSV")
    sub.add_argument("--threads", type=int, help="worker pool size (default: BUILDING_RAMSEY_THREADS or logical cores)")
    common(sub)
    sub.set_defaults(handler=_cmd_spherical_noise_check)

    sub = subs.add_parser("calc-atoms", help="opposite-chamber and atom cardinalities at a coweight")
    sub.add_argument("--type", required=True, metavar="LABEL")
    sub.add_argument("--lambda", dest="lam", required=True, metavar="C1,..,CN", help="strongly dominant coweight")
    sub.add_argument("--q", type=int, required=True)
    sub.add_argument("--mu", metavar="C1,..,CN", help="strongly dominant coweight for the partition cross-check (default rho)")
    sub.add_argument("--allow-large", action="store_true")
    common(sub)
    sub.set_defaults(handler=_cmd_calc_atoms)

    sub = subs.add_parser("calc-bound", help="star-free density bound (1 - kappa)^ell + r q^(l(w0) - h)")
    sub.add_argument("--type", required=True, metavar="LABEL")
    sub.add_argument("--q", type=int, required=True)
    sub.add_argument("--ell", type=int, required=True)
    sub.add_argument("--r", type=int, required=True)
    sub.add_argument("--lambda11", required=True, metavar="C1,..,CN", help="first chain coweight lambda_{1,1}")
    common(sub)
    sub.set_defaults(handler=_cmd_calc_bound)

    sub = subs.add_parser("conjecture-witness", help="doubled coweights 2(omega_1 + N rho) outside the coroot lattice")
    sub.add_argument("--type", required=True, metavar="LABEL", help="A_n with n >= 2")
    sub.add_argument("--n-max", type=int, required=True, metavar="NMAX")
    common(sub)
    sub.set_defaults(handler=_cmd_conjecture_witness)

    sub = subs.add_parser("padic-cartan", help="valuation coordinates of an invertible rational matrix")
    sub.add_argument("--p", type=int, required=True, help="prime")
    sub.add_argument("--matrix", required=True, metavar="FILE", help="JSON rows of integers or fraction strings")
    sub.add_argument("--second", metavar="FILE", help="second matrix h: also report lambda(g^-1 h)")
    common(sub)
    sub.set_defaults(handler=_cmd_padic_cartan)

    return parser


def run(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.handler(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConsistencyError as exc:
        print(f"internal consistency failure: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
