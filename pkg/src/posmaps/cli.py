"""Command-line front end: JSON in, JSON out.

Exit codes: 0 success, 2 certified-negative verdict (a check failed with
proof), 1 usage or input errors.  Output is deterministic for a fixed
(argv, seed); wall time goes to stderr so stdout stays byte-identical.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import gallery, m3family, merging, opmaps, witness
from .linalg import (
    DEFAULT_TOL,
    SpaceLayout,
    matrix_from_json,
    matrix_to_json,
    vector_from_json,
)
from .opmaps import LinearMapRep

SCHEMA = "posmaps.report/1"


@dataclass(frozen=True)
class RunReport:
    command: list[str]
    seed: int
    tol: float
    results: dict
    wall_time_s: float  # reported on stderr only; stdout stays deterministic


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; 2 is reserved for certified-negative
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit_(1, f"error: {message}")


class SystemExit_(Exception):
    def __init__(self, code, message=""):
        super().__init__(message)
        self.code = code
        self.message = message


def _round_sig(x: float, sig: int = 12) -> float:
    if x == 0 or not np.isfinite(x):
        return float(x)
    return float(f"{x:.{sig}g}")


def _jsonable(obj):
    """Recursively convert to JSON-safe values, floats at 12 significant digits."""
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _round_sig(float(obj))
    if isinstance(obj, complex):
        return [_round_sig(obj.real), _round_sig(obj.imag)]
    if isinstance(obj, np.ndarray):
        return _jsonable(matrix_to_json(obj if obj.ndim == 2 else obj.reshape(-1, 1)))
    return obj


def _load_json_arg(text: str):
    if text.startswith("@"):
        with open(text[1:], "r", encoding="utf-8") as fh:
            return json.load(fh)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SystemExit_(1, f"error: malformed JSON argument: {exc}")


def _parse_gallery_uri(ref: str) -> gallery.GallerySpec:
    body = ref[len("gallery:"):]
    if "?" in body:
        name, query = body.split("?", 1)
        params = {}
        for item in query.split("&"):
            if not item:
                continue
            key, _, val = item.partition("=")
            try:
                params[key] = json.loads(val)
            except json.JSONDecodeError:
                params[key] = val
    else:
        name, params = body, {}
    return gallery.GallerySpec(name, params)


def load_map(ref: str) -> LinearMapRep:
    """Map reference: gallery:<name>?<params>, @file, or inline JSON (either a
    serialized map or a constructor spec)."""
    if ref.startswith("gallery:"):
        return gallery.build(_parse_gallery_uri(ref))
    obj = _load_json_arg(ref)
    if "choi" in obj:
        return LinearMapRep.from_json(obj)
    if "kind" in obj:
        return opmaps.std_map_from_json(obj)
    raise SystemExit_(1, "error: map reference must contain 'choi' or 'kind'")


def load_matrix(ref: str) -> np.ndarray:
    return matrix_from_json(_load_json_arg(ref))


def _psd_dict(rep) -> dict:
    return {"is_psd": rep.is_psd, "min_eig": rep.min_eig, "norm": rep.norm}


def _emit_map(m: LinearMapRep, emit: str) -> dict:
    if emit == "choi":
        return m.to_json()
    if emit == "blocks":
        blocks = m.choi_blocks
        return {
            "dK": m.dK,
            "dH": m.dH,
            "blocks": [[matrix_to_json(blocks[i, :, j, :]) for j in range(m.dK)] for i in range(m.dK)],
        }
    return {"dK": m.dK, "dH": m.dH}


def _build_parser() -> _Parser:
    p = _Parser(prog="posmaps", description=__doc__)
    p.add_argument("--tol", type=float, default=None, help="PSD tolerance (env POSMAP_TOL)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=100000)
    p.add_argument("--out", type=str, default=None, help="also write the JSON report to a file")
    # the same flags are accepted after the subcommand; SUPPRESS keeps the
    # top-level defaults when they are not repeated there
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--samples", type=int, default=argparse.SUPPRESS)
    common.add_argument("--out", type=str, default=argparse.SUPPRESS)
    sub = p.add_subparsers(dest="cmd", required=True)

    def add_parser(name, **kw):
        return sub.add_parser(name, parents=[common], **kw)

    g = add_parser("gallery", help="named map constructors")
    gsub = g.add_subparsers(dest="gallery_cmd", required=True)
    gsub.add_parser("list", parents=[common])
    gb = gsub.add_parser("build", parents=[common])
    gb.add_argument("--name", required=True)
    gb.add_argument("--params", default="{}")
    gb.add_argument("--emit", choices=["choi", "blocks", "report"], default="report")

    ch = add_parser("choi", help="emit the Choi matrix of a map")
    ch.add_argument("--map", required=True)

    ap = add_parser("apply", help="apply a map to a matrix")
    ap.add_argument("--map", required=True)
    ap.add_argument("--x", required=True)

    mg = add_parser("merge", help="merge two maps from an ingredients object")
    mg.add_argument("--ingredients", required=True)
    mg.add_argument("--emit", choices=["choi", "blocks", "report"], default="choi")

    cm = add_parser("canonical-merge", help="canonical merging of two maps")
    cm.add_argument("--spec", required=True, help='{"phi1":…,"phi2":…,"xi1"?,"xi2"?,"x1"?,"x2"?}')
    cm.add_argument("--emit", choices=["choi", "ingredients", "report"], default="report")

    ck = add_parser("check", help="positivity checks")
    ck.add_argument("mode", choices=["pos", "kpos", "merging"])
    ck.add_argument("--map", default=None)
    ck.add_argument("--ingredients", default=None)
    ck.add_argument("--k", type=int, default=2)

    w = add_parser("witness", help="witness constructors and evaluation")
    w.add_argument("mode", choices=["canonical", "omega", "m3", "eval"])
    w.add_argument("--map", default=None)
    w.add_argument("--z", default=None)
    w.add_argument("--params", default=None)
    w.add_argument("--gamma", type=float, default=None)
    w.add_argument("--lam1", type=float, default=1.0)
    w.add_argument("--lam2", type=float, default=1.0)
    w.add_argument("--k1", type=int, default=1)
    w.add_argument("--k2", type=int, default=1)
    w.add_argument("--l1", type=int, default=None)
    w.add_argument("--l2", type=int, default=None)
    w.add_argument("--emit", choices=["z", "report"], default="report")

    st = add_parser("state", help="normalize a PPT operator into a state")
    st.add_argument("--z", required=True)
    st.add_argument("--dims", required=True, help="dK,dH")
    st.add_argument("--maps", default="", help="comma-separated candidate map refs")

    zs = add_parser("zeroset", help="zero pairs of a supported gallery map")
    zs.add_argument("--name", required=True)
    zs.add_argument("--params", required=True)
    zs.add_argument("--max-pairs", type=int, default=None)

    m3 = add_parser("m3", help="the 3x3 family")
    m3.add_argument("mode", choices=["classify"])
    m3.add_argument("--params", required=True)

    add_parser("report", help="run the standard reproducibility battery")
    return p


def _cmd_gallery(args, tol) -> tuple[dict, int]:
    if args.gallery_cmd == "list":
        return {"names": gallery.list_names()}, 0
    spec = gallery.GallerySpec(args.name, _decode_gallery_params(_load_json_arg(args.params)))
    m = gallery.build(spec)
    return {"name": args.name, **_emit_map(m, args.emit)}, 0


def _decode_gallery_params(params: dict) -> dict:
    out = dict(params)
    for key in ("A1", "A2"):
        if key in out and isinstance(out[key], dict):
            out[key] = matrix_from_json(out[key])
    return out


def _cmd_check(args, tol, seed, samples) -> tuple[dict, int]:
    if args.mode in ("pos", "kpos"):
        if args.map is None:
            raise SystemExit_(1, "error: check pos/kpos needs --map")
        m = load_map(args.map)
        k = 1 if args.mode == "pos" else args.k
        rep = opmaps.sampled_k_positivity(m, k=k, n_samples=samples, seed=seed, tol=tol)
        res = {
            "k": rep.k,
            "n_samples": rep.n_samples,
            "min_sampled": rep.min_sampled,
            "min_value": rep.min_value,
            "verdict": rep.verdict,
        }
        if rep.violating_pair is not None:
            res["violating_pair"] = {
                "w": matrix_to_json(rep.violating_pair[0].reshape(-1, 1)),
                "v": matrix_to_json(rep.violating_pair[1].reshape(-1, 1)),
            }
        return res, 0 if rep.verdict == "pass" else 2
    if args.ingredients is None:
        raise SystemExit_(1, "error: check merging needs --ingredients")
    ing = merging.MergingIngredients.from_json(_load_json_arg(args.ingredients))
    cert = merging.certify_positive(ing, n_samples=samples, seed=seed, tol=tol)
    res = {
        "omega_psd": [_psd_dict(cert.omega_psd[0]), _psd_dict(cert.omega_psd[1])],
        "eps_le_mu_min": cert.eps_le_mu_min,
        "criterion_min": cert.criterion_min,
        "refined_min": cert.refined_min,
        "n_samples": cert.n_samples,
        "seed": cert.seed,
        "verdict": cert.verdict,
    }
    if cert.violating_pair is not None:
        res["violating_pair"] = {
            "eta": matrix_to_json(cert.violating_pair[0].reshape(-1, 1)),
            "y": matrix_to_json(cert.violating_pair[1].reshape(-1, 1)),
            "value": cert.violating_value,
        }
    return res, 0 if cert.verdict == "pass" else 2


def _witness_report_dict(rep: witness.WitnessReport, include_z: bool) -> dict:
    out = {
        "pairing": rep.pairing,
        "z_psd": _psd_dict(rep.z_psd),
        "zgamma_psd": _psd_dict(rep.zgamma_psd),
        "verdict": rep.verdict,
    }
    if include_z:
        out["Z"] = matrix_to_json(rep.Z)
    return out


def _cmd_witness(args, tol) -> tuple[dict, int]:
    if args.mode == "eval":
        if args.map is None or args.z is None:
            raise SystemExit_(1, "error: witness eval needs --map and --z")
        m = load_map(args.map)
        rep = witness.evaluate(m, load_matrix(args.z), tol)
        return _witness_report_dict(rep, include_z=False), 0
    if args.mode == "omega":
        Z = witness.omega_witness(args.k1, args.k2)
        m = gallery.build(gallery.GallerySpec("omega_general", {"k1": args.k1, "k2": args.k2}))
        rep = witness.evaluate(m, Z, tol)
        return _witness_report_dict(rep, include_z=(args.emit == "z")), 0
    if args.mode == "canonical":
        l1 = args.l1 if args.l1 is not None else args.k1
        l2 = args.l2 if args.l2 is not None else args.k2
        Z = witness.canonical_witness(
            args.lam1, args.lam2, SpaceLayout(args.k1, args.k2), SpaceLayout(l1, l2)
        )
        out = {"lam1": args.lam1, "lam2": args.lam2, "Z": matrix_to_json(Z)}
        if args.map is not None:
            rep = witness.evaluate(load_map(args.map), Z, tol)
            out.update(_witness_report_dict(rep, include_z=False))
        return out, 0
    # m3 witness
    if args.params is None:
        raise SystemExit_(1, "error: witness m3 needs --params")
    p = m3family.M3Params.from_json(_load_json_arg(args.params))
    Z = witness.m3_witness(p, args.gamma)
    rep = witness.evaluate(m3family.to_map(p), Z, tol)
    return _witness_report_dict(rep, include_z=(args.emit == "z")), 0


def _cmd_m3_classify(args, tol) -> tuple[dict, int]:
    p = m3family.M3Params.from_json(_load_json_arg(args.params))
    positive, margin = m3family.is_positive(p, tol)
    res: dict = {"positive": positive, "margin": margin}
    if not positive:
        return res, 2
    status = m3family.cp_status(p, tol)
    res.update(
        {
            "cp": status.cp,
            "ccp": status.ccp,
            "two_pos": status.two_pos,
            "two_copos": status.two_copos,
            "choi_min_eig": status.choi_min_eig,
            "choi_gamma_min_eig": status.choi_gamma_min_eig,
        }
    )
    cross = abs(abs(p.b1) * abs(p.c2) - abs(p.b2) * abs(p.c1))
    dependent = cross <= tol * (float(np.linalg.norm(p.bvec) * np.linalg.norm(p.cvec)) + 1.0)
    decomposability = "unknown"
    if dependent:
        cp_parts, ccp_parts = m3family.decompose_dependent(p, tol)
        decomposability = "decomposable"
        res["decomposable_certificate"] = {
            "n_cp_parts": len(cp_parts),
            "n_ccp_parts": len(ccp_parts),
            "min_part_eig": m3family.min_part_eig(cp_parts + ccp_parts),
            "reassembly_error": m3family.reassembly_error(p, cp_parts, ccp_parts),
        }
    elif np.linalg.norm(p.bvec) > tol and np.linalg.norm(p.cvec) > tol:
        flag, rep = m3family.nondec_sufficient(p, tol)
        if flag:
            decomposability = "nondecomposable"
            res["nondecomposable_certificate"] = _witness_report_dict(rep, include_z=False)
    res["decomposability"] = decomposability
    verdict, failed = m3family.extremality(p, tol)
    res["extremal"] = verdict == "exposed"
    res["exposed"] = verdict == "exposed"
    res["failed_conditions"] = failed
    return res, 0


def _cmd_report(args, tol, seed, samples) -> tuple[dict, int]:
    """A fixed reproducibility battery over the bundled examples."""
    results: dict = {}
    m = gallery.build(gallery.GallerySpec("mo", {}))
    rep = opmaps.sampled_k_positivity(m, k=1, n_samples=min(samples, 20000), seed=seed, tol=tol)
    results["mo_positivity"] = {"min_value": rep.min_value, "verdict": rep.verdict}
    results["mo_cp"] = _psd_dict(opmaps.is_cp(m, tol))
    results["mo_ccp"] = _psd_dict(opmaps.is_ccp(m, tol))
    wrep = witness.evaluate(
        gallery.build(gallery.GallerySpec("omega_general", {"k1": 2, "k2": 3})),
        witness.omega_witness(2, 3),
        tol,
    )
    results["omega_2_3"] = _witness_report_dict(wrep, include_z=False)
    p = m3family.mo_params()
    _, m3res = _cmd_m3_classify_params(p, tol)
    results["mo_classify"] = m3res
    code = 0 if rep.verdict == "pass" else 2
    return results, code


def _cmd_m3_classify_params(p, tol):
    class _A:
        params = None

    args = _A()
    args.params = json.dumps(
        {
            "b": [[p.b1.real, p.b1.imag], [p.b2.real, p.b2.imag]],
            "c": [[p.c1.real, p.c1.imag], [p.c2.real, p.c2.imag]],
            "sigma": [p.sigma1, p.sigma2],
            "delta": [p.delta1, p.delta2],
        }
    )
    res, code = _cmd_m3_classify(args, tol)
    return code, res


def run(argv: Optional[list[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    t0 = time.perf_counter()
    try:
        args = parser.parse_args(argv)
        tol = args.tol
        if tol is None:
            tol = float(os.environ.get("POSMAP_TOL", DEFAULT_TOL))

        if args.cmd == "gallery":
            results, code = _cmd_gallery(args, tol)
        elif args.cmd == "choi":
            results, code = load_map(args.map).to_json(), 0
        elif args.cmd == "apply":
            m = load_map(args.map)
            results, code = matrix_to_json(opmaps.apply(m, load_matrix(args.x))), 0
        elif args.cmd == "merge":
            ing = merging.MergingIngredients.from_json(_load_json_arg(args.ingredients))
            results, code = _emit_map(merging.merge(ing), args.emit), 0
        elif args.cmd == "canonical-merge":
            spec = _load_json_arg(args.spec)
            phi1 = load_map(json.dumps(spec["phi1"]) if isinstance(spec["phi1"], dict) else spec["phi1"])
            phi2 = load_map(json.dumps(spec["phi2"]) if isinstance(spec["phi2"], dict) else spec["phi2"])
            kw = {}
            for key in ("xi1", "xi2", "x1", "x2"):
                if key in spec and spec[key] is not None:
                    kw[key] = vector_from_json(spec[key])
            ing, lam1, lam2 = merging.canonical_merge(phi1, phi2, tol=tol, **kw)
            results = {"lam1": lam1, "lam2": lam2}
            if args.emit in ("choi", "report"):
                results["merged"] = _emit_map(merging.merge(ing), "choi" if args.emit == "choi" else "report")
            if args.emit == "ingredients":
                results["ingredients"] = _jsonable(ing.to_json())
            code = 0
        elif args.cmd == "check":
            results, code = _cmd_check(args, tol, args.seed, args.samples)
        elif args.cmd == "witness":
            results, code = _cmd_witness(args, tol)
        elif args.cmd == "state":
            dK, dH = (int(x) for x in args.dims.split(","))
            cands = []
            for i, ref in enumerate(r for r in args.maps.split(",") if r):
                cands.append((ref, load_map(ref)))
            st = witness.ppt_state(load_matrix(args.z), dK, dH, cands, tol)
            results = {
                "rho": matrix_to_json(st.rho),
                "dims": [st.dK, st.dH],
                "certificate": (
                    {"map": st.witness_name, "value": st.witness_value}
                    if st.has_certificate
                    else None
                ),
                "flag": None if st.has_certificate else "no entanglement certificate",
            }
            code = 0
        elif args.cmd == "zeroset":
            pairs = gallery.zero_set(
                args.name, _load_json_arg(args.params), max_pairs=args.max_pairs, tol=tol
            )
            results = {
                "n_pairs": len(pairs),
                "pairs": [
                    {
                        "case": pr.case_label,
                        "eta": matrix_to_json(pr.eta.to_vector().reshape(-1, 1)),
                        "y": matrix_to_json(pr.y.to_vector().reshape(-1, 1)),
                        "residual": pr.residual,
                    }
                    for pr in pairs
                ],
            }
            code = 0
        elif args.cmd == "m3":
            results, code = _cmd_m3_classify(args, tol)
        elif args.cmd == "report":
            results, code = _cmd_report(args, tol, args.seed, args.samples)
        else:  # pragma: no cover
            raise SystemExit_(1, f"error: unknown command {args.cmd!r}")

        report = RunReport(
            command=argv, seed=args.seed, tol=tol, results=results,
            wall_time_s=time.perf_counter() - t0,
        )
        payload = {
            "schema": SCHEMA,
            "command": report.command,
            "seed": report.seed,
            "tol": _round_sig(report.tol),
            "results": _jsonable(report.results),
        }
        text = json.dumps(payload, sort_keys=True)
        print(text)
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        print(f"wall_time_s={report.wall_time_s:.3f}", file=sys.stderr)
        return code
    except SystemExit_ as exc:
        if exc.message:
            print(exc.message, file=sys.stderr)
        return exc.code
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    raise SystemExit(run())


if __name__ == "__main__":
    main()
