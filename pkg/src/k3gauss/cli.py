"""``k3gauss`` command line.

Exit codes are a stable contract::

    0  success / Pass / Certified
    1  mathematical Fail or Refused
    2  Pass that rests on a non-certified (searched) bound
    3  coverage caps did not stabilize
    4  input error

Every report file carries a run manifest; ``k3gauss replay FILE`` re-runs it
and diffs the result, ignoring the wall-time field.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

from . import __version__
from .acceptance import AcceptanceContext, run_all
from .certify import canonical_json, certificate_document, certify, recheck
from .coverage import (
    CoverageCaps,
    CoverageReport,
    closed_form_coverage,
    product_family_coverage,
    rank5_family_coverage,
    theorem_coverage,
    to_intervals,
)
from .enumerate import EnumerationError, WorkLimitError
from .lattice import (
    DivisorClass,
    LatticeError,
    PicardLattice,
    format_class,
    inspect_lattice_file,
    make_rank2_lattice,
    make_rank5_lattice,
    parse_class,
    read_lattice_file,
)
from .positivity import (
    Effectivity,
    PositivityError,
    PositivityReport,
    check_ample_realizable,
    check_base_point_free,
    check_nef_and_ample,
    check_very_ample,
    classify_effectivity,
    morphism_report,
    morphism_type,
)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_UNCERTIFIED = 2
EXIT_CAP = 3
EXIT_INPUT = 4

TIMING_FIELDS = ("wall_time",)


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors, which would collide with "non-certified"
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


# --------------------------------------------------------------- manifest


@dataclass
class RunManifest:
    command: str
    arguments: list[str]
    input_hashes: dict[str, str] = field(default_factory=dict)
    tool_version: str = __version__
    wall_time: float = 0.0
    outcome: str = ""
    # files to write once the run is timed: (path, build(manifest_dict) -> document)
    outputs: list[tuple[str, Callable[[dict], dict]]] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("outputs")
        return d

    def emit(self, path: str, body: dict, key: str = "report") -> None:
        self.outputs.append((path, lambda m: {"manifest": m, key: body}))

    def flush(self) -> None:
        for path, build in self.outputs:
            Path(path).write_text(canonical_json(build(self.to_dict())))


def sha256_file(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _strip_timing(obj):
    if isinstance(obj, dict):
        return {k: _strip_timing(v) for k, v in obj.items() if k not in TIMING_FIELDS}
    if isinstance(obj, list):
        return [_strip_timing(v) for v in obj]
    return obj


# ------------------------------------------------------------------ inputs


def _int_list(text: str, n: int | None = None) -> tuple[int, ...]:
    try:
        vals = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise InputError(f"expected comma-separated integers, got {text!r}") from None
    if n is not None and len(vals) != n:
        raise InputError(f"expected {n} comma-separated integers, got {len(vals)}")
    return vals


def _genus_set(text: str) -> set[int]:
    """``"321"``, ``"100-120,321"`` or empty."""
    out: set[int] = set()
    for part in filter(None, (p.strip() for p in text.split(","))):
        lo, _, hi = part.partition("-")
        try:
            a, b = int(lo), int(hi or lo)
        except ValueError:
            raise InputError(f"bad genus list entry {part!r}") from None
        out.update(range(a, b + 1))
    return out


def _add_lattice_args(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--lattice", metavar="FILE", help="lattice JSON file")
    g.add_argument("--family", metavar="H,K,J,L,M", help="rank-5 family lattice diag(2h,-2k,-2j,-2l,-2m)")
    g.add_argument("--rank2", action="store_true", help="the rank-2 lattice [[4,7],[7,2]]")


def _load_lattice(args, manifest: RunManifest) -> PicardLattice:
    if args.lattice:
        _, gram, checks = inspect_lattice_file(args.lattice)
        bad = next((msg for _, ok, msg in checks if not ok), None)
        if bad:
            raise LatticeError(bad)
        manifest.input_hashes[args.lattice] = sha256_file(args.lattice)
        return read_lattice_file(args.lattice)
    if args.family:
        return make_rank5_lattice(_int_list(args.family, 5))
    return make_rank2_lattice()


# ---------------------------------------------------------------- commands


def cmd_lattice(args, manifest: RunManifest) -> int:
    manifest.input_hashes[args.file] = sha256_file(args.file)
    data, gram, checks = inspect_lattice_file(args.file)
    rank = len(gram)
    print(f"lattice {data.get('name') or Path(args.file).stem}: rank {rank}")
    for name, ok, msg in checks:
        print(f"  {'ok  ' if ok else 'FAIL'} {name}: {msg}")
    failed = [msg for _, ok, msg in checks if not ok]
    body = {"file": Path(args.file).name, "rank": rank, "checks": [{"name": n, "ok": ok, "message": m} for n, ok, m in checks]}
    if failed:
        print(f"error: {failed[0]}", file=sys.stderr)
        manifest.outcome = "invalid"
        code = EXIT_INPUT
    else:
        lattice = PicardLattice(tuple(map(tuple, gram)), name=str(data.get("name", "")), basis_labels=tuple(data.get("basis_labels") or ()))
        pos, neg = lattice.signature()[:2]
        print(f"signature ({pos},{neg}), even, nondegenerate")
        print(f"determinant {lattice.determinant()}")
        D = lattice.basis(0)
        pre = [
            ("first basis class has positive square", lattice.square(D) > 0),
        ]
        if lattice.square(D) > 0:
            rep = check_ample_realizable(lattice, D)
            pre.append(("no root orthogonal to the first basis class", rep.passed))
            body["ample_realizable_witness"] = None if rep.witness is None else list(rep.witness)
        for text, ok in pre:
            print(f"  {'ok  ' if ok else 'FAIL'} realizability precondition: {text}")
        body.update(
            {
                "signature": [pos, neg],
                "determinant": lattice.determinant(),
                "lattice_id": lattice.lattice_id,
                "realizability_preconditions": [{"check": t, "ok": ok} for t, ok in pre],
            }
        )
        manifest.outcome = "valid"
        code = EXIT_OK
    if args.out:
        manifest.emit(args.out, body)
    return code


CRITERIA_CHOICES = ("ample-realizable", "nef", "base-point-free", "very-ample", "morphism-type", "effectivity")


def render_report(rep: PositivityReport, labels: Sequence[str]) -> str:
    lines = [
        f"criterion: {rep.criterion.value}",
        f"class: {format_class_coords(rep.cls, labels)}",
        f"verdict: {rep.verdict} ({rep.bound_provenance})",
    ]
    if rep.witness is not None:
        lines.append(f"witness: {format_class_coords(rep.witness, labels)} = {list(rep.witness)}")
    if rep.evidence:
        lines.append("evidence:")
        lines.append("  sigma  slice-class           degrees      bound  provenance  solutions  nodes  note")
        for e in rep.evidence:
            rng = f"[{e.t_range[0]}, {e.t_range[1]}]"
            lines.append(
                f"  {e.sigma:>5}  {format_class_coords(e.degree_class, labels):<20}  {rng:<11}  {str(e.bound):>5}  "
                f"{e.provenance:<10}  {e.solutions:>9}  {e.nodes:>5}  {e.note}"
            )
    return "\n".join(lines)


def format_class_coords(coords: Sequence[int], labels: Sequence[str]) -> str:
    return format_class(DivisorClass(tuple(coords)), labels)


def _positivity_exit(rep: PositivityReport) -> int:
    if not rep.passed:
        return EXIT_FAIL
    return EXIT_OK if rep.certified else EXIT_UNCERTIFIED


def cmd_positivity(args, manifest: RunManifest) -> int:
    lattice = _load_lattice(args, manifest)
    labels = lattice.basis_labels
    N = parse_class(args.cls, labels)
    D = parse_class(args.ample_ref, labels) if args.ample_ref else lattice.basis(0)
    body: dict = {"lattice": lattice.to_dict(), "class": N.to_list(), "ample_ref": D.to_list(), "criterion": args.criterion}
    try:
        if args.criterion == "ample-realizable":
            rep = check_ample_realizable(lattice, N)
        elif args.criterion == "nef":
            rep = check_nef_and_ample(lattice, D, N, args.search_bound)
        elif args.criterion == "base-point-free":
            rep = check_base_point_free(lattice, D, N)
        elif args.criterion == "very-ample":
            rep = check_very_ample(lattice, D, N, args.search_bound)
        elif args.criterion == "effectivity":
            eff = classify_effectivity(lattice, D, N)
            print(f"effectivity: {eff.value}")
            body["effectivity"] = eff.value
            manifest.outcome = eff.value
            if args.out:
                manifest.emit(args.out, body)
            return EXIT_OK if eff is not Effectivity.ANTI_EFFECTIVE else EXIT_FAIL
        else:
            kind = morphism_type(lattice, D, N)
            rep = morphism_report(lattice, D, N)
            print(f"morphism type: {kind.value}")
            body["morphism_type"] = kind.value
    except PositivityError as exc:
        if exc.report is None:
            raise InputError(str(exc)) from None
        rep = exc.report
        print(f"precondition failed: {exc}")
        body["precondition_failure"] = str(exc)
    print(render_report(rep, labels))
    body["report"] = rep.to_dict()
    code = _positivity_exit(rep)
    manifest.outcome = rep.verdict if code != EXIT_UNCERTIFIED else "Pass (non-certified)"
    if args.out:
        manifest.emit(args.out, body)
    return code


def cmd_certify(args, manifest: RunManifest) -> int:
    lattice = _load_lattice(args, manifest)
    Htilde = parse_class(args.cls, lattice.basis_labels)
    cert = certify(lattice, Htilde)
    manifest.outcome = cert.status
    manifest.outputs.append((args.out, lambda m: certificate_document(cert, m)))
    expr = format_class(Htilde, lattice.basis_labels)
    if cert.certified:
        dec = cert.decomposition
        labels = lattice.basis_labels
        print(f"{expr} on {lattice.name}: Certified, genus {cert.genus} ({cert.marker})")
        print(f"  A = {', '.join(format_class(a, labels) for a in dec.A)}; B = {format_class(dec.B, labels)}")
        print(f"  certificate written to {args.out}")
        return EXIT_OK
    print(f"{expr} on {lattice.name}: Refused", file=sys.stderr)
    print(f"  reason: {cert.reason}", file=sys.stderr)
    return EXIT_FAIL


def cmd_recheck(args, manifest: RunManifest) -> int:
    manifest.input_hashes[args.file] = sha256_file(args.file)
    try:
        res = recheck(args.file)
    except (KeyError, json.JSONDecodeError) as exc:
        raise InputError(f"{args.file}: not a certificate file ({exc})") from None
    manifest.outcome = res.status
    same = "identical" if res.identical else f"differs at {res.first_difference!r}"
    print(f"recorded {res.recorded_status}, recomputed {res.status}, {same}")
    return EXIT_OK if res.ok else EXIT_FAIL


def _coverage_report(args) -> CoverageReport:
    caps = CoverageCaps(args.cap_h, args.cap_param, args.cap_g1, args.cap_g2, args.cap_d)
    stab = not args.no_stability
    if args.family == "rank5":
        return rank5_family_coverage(args.min, args.max, caps, primitivity=args.primitivity, jobs=args.jobs, check_stability=stab)
    if args.family == "product":
        return product_family_coverage(args.min, args.max, caps, check_stability=stab)
    if args.family == "closed-forms":
        return closed_form_coverage(args.min, args.max)
    return theorem_coverage(args.min, args.max, caps, jobs=args.jobs, check_stability=stab)


def cmd_coverage(args, manifest: RunManifest) -> int:
    expected = _genus_set(args.expect_missing)
    try:
        rep = _coverage_report(args)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    missing = rep.missing
    print(f"family {rep.family}, range [{rep.g_min}, {rep.g_max}]")
    print(f"  achieved {len(rep.achieved)} genera; missing {to_intervals(missing)}")
    for g, ok in sorted(rep.exclusion_certified.items()):
        print(f"  exclusion of {g}: {'certified' if ok else 'not certified'}")
    if rep.stabilized is not None:
        print(f"  stabilized under halved caps: {rep.stabilized}")
    for w in rep.warnings:
        print(f"  warning: {w}", file=sys.stderr)
    if args.provenance is not None:
        prov = rep.achieved.get(args.provenance)
        print(f"  provenance of {args.provenance}: {json.dumps(prov, sort_keys=True) if prov else 'not achieved'}")
    if rep.stabilized is False:
        code = EXIT_CAP
    elif set(missing) != expected:
        extra, absent = sorted(set(missing) - expected), sorted(expected - set(missing))
        print(f"  missing set differs from expected: unexpected {to_intervals(extra)}, not missing {to_intervals(absent)}")
        code = EXIT_FAIL
    else:
        code = EXIT_OK
    manifest.outcome = {EXIT_OK: "as expected", EXIT_FAIL: "missing set differs", EXIT_CAP: "cap-too-small"}[code]
    if args.out:
        manifest.emit(args.out, rep.to_dict(provenance=True))
    return code


def cmd_verify_paper(args, manifest: RunManifest) -> int:
    ctx = AcceptanceContext(jobs=args.jobs)
    if args.gram_typo:
        ctx.gram_typo = _int_list(args.gram_typo, 3)
    if args.rank2_gram:
        a, b, c = _int_list(args.rank2_gram, 3)
        ctx.rank2_gram = ((a, b), (b, c))
    echo = None if args.json else print
    outcomes = run_all(ctx, echo=echo)
    failed = [o for o in outcomes if not o.passed]
    summary = {
        "passed": not failed,
        "criteria": [o.to_dict() for o in outcomes],
        "first_failure": failed[0].number if failed else None,
    }
    if args.json:
        print(canonical_json(summary), end="")
    else:
        print(f"{len(outcomes) - len(failed)}/{len(outcomes)} checks pass")
        if failed:
            first = failed[0]
            print(f"first failure: criterion {first.number} ({first.title}): {first.detail}")
            if first.evidence:
                print("evidence: " + json.dumps(first.evidence, sort_keys=True)[:2000])
    manifest.outcome = "all pass" if not failed else f"failed: {[o.number for o in failed]}"
    if args.out:
        manifest.emit(args.out, summary)
    return EXIT_OK if not failed else EXIT_FAIL


def cmd_replay(args, manifest: RunManifest) -> int:
    manifest.input_hashes[args.file] = sha256_file(args.file)
    doc = json.loads(Path(args.file).read_text())
    try:
        old = doc["manifest"]
        argv = list(old["arguments"])
    except (KeyError, TypeError):
        raise InputError(f"{args.file}: no run manifest") from None
    if "--out" not in argv:
        raise InputError("recorded run did not write a report")
    for path, digest in old.get("input_hashes", {}).items():
        if not Path(path).exists() or sha256_file(path) != digest:
            print(f"warning: input {path} changed since the recorded run", file=sys.stderr)
    out_at = argv.index("--out") + 1
    with tempfile.TemporaryDirectory() as tmp:
        argv[out_at] = str(Path(tmp) / "replay.json")
        code = main(argv, quiet=True)
        new = json.loads(Path(argv[out_at]).read_text())
    # the output path is the one argument allowed to differ
    for d in (doc, new):
        d["manifest"]["arguments"][out_at] = "<out>"
    same = _strip_timing(doc) == _strip_timing(new)
    manifest.outcome = "identical" if same else "differs"
    print(f"replayed {old['command']}: exit {code}, report {'identical' if same else 'differs'} (timing ignored)")
    return EXIT_OK if same else EXIT_FAIL


# -------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="k3gauss", description="Exact lattice certificates for curves on K3 surfaces.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("lattice", help="validate a lattice file and print its invariants")
    s.add_argument("file")
    s.add_argument("--out", metavar="FILE")

    s = sub.add_parser("positivity", help="run one positivity criterion on a class")
    _add_lattice_args(s)
    s.add_argument("--class", dest="cls", required=True, metavar="EXPR", help='e.g. "D+L" or "1,1,0,0,0"')
    s.add_argument("--criterion", choices=CRITERIA_CHOICES, required=True)
    s.add_argument("--ample-ref", metavar="EXPR", help="ample reference class (default: first basis class)")
    s.add_argument("--search-bound", type=int, default=1000, help="degree cap when no bound can be derived")
    s.add_argument("--out", metavar="FILE")

    s = sub.add_parser("certify", help="certify a polarisation and write the certificate")
    _add_lattice_args(s)
    s.add_argument("--class", dest="cls", required=True, metavar="EXPR")
    s.add_argument("--out", metavar="FILE", default="certificate.json")

    s = sub.add_parser("recheck", help="recompute a certificate from file and compare")
    s.add_argument("file")

    s = sub.add_parser("coverage", help="which genera a family reaches")
    s.add_argument("--family", choices=("rank5", "product", "closed-forms", "theorem"), required=True)
    s.add_argument("--min", type=int, required=True)
    s.add_argument("--max", type=int, required=True)
    s.add_argument("--expect-missing", default="", metavar="LIST", help='e.g. "321" or "100-120,321"')
    defaults = CoverageCaps()
    for name in ("h", "param", "g1", "g2", "d"):
        s.add_argument(f"--cap-{name}", type=int, default=getattr(defaults, name))
    s.add_argument("--primitivity", choices=("full", "tail"), default="full")
    s.add_argument("--no-stability", action="store_true", help="skip the halved-caps stabilization run")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--provenance", type=int, metavar="G", help="print how genus G is achieved")
    s.add_argument("--out", metavar="FILE")

    s = sub.add_parser("verify-paper", help="run the whole acceptance suite")
    s.add_argument("--json", action="store_true")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--gram-typo", metavar="ROW,COL,VALUE", help="fault injection into every rank-5 family Gram matrix")
    s.add_argument("--rank2-gram", metavar="A,B,C", help="replace the rank-2 Gram matrix by [[A,B],[B,C]]")
    s.add_argument("--out", metavar="FILE")

    s = sub.add_parser("replay", help="re-run the manifest embedded in a report and diff the output")
    s.add_argument("file")
    return p


COMMANDS = {
    "lattice": cmd_lattice,
    "positivity": cmd_positivity,
    "certify": cmd_certify,
    "recheck": cmd_recheck,
    "coverage": cmd_coverage,
    "verify-paper": cmd_verify_paper,
    "replay": cmd_replay,
}


def main(argv: Sequence[str] | None = None, quiet: bool = False) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    manifest = RunManifest(args.command, argv)
    start = time.perf_counter()
    saved = sys.stdout
    try:
        if quiet:
            sys.stdout = open(os.devnull, "w")
        code = COMMANDS[args.command](args, manifest)
    except WorkLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNCERTIFIED
    except (InputError, LatticeError, EnumerationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    finally:
        if quiet:
            sys.stdout.close()
            sys.stdout = saved
    manifest.wall_time = round(time.perf_counter() - start, 3)
    manifest.flush()
    return code


if __name__ == "__main__":
    sys.exit(main())
