"""The acceptance suite: ten exact checks, run in order.

Each check returns a :class:`CriterionOutcome`. Shared state lives in an
:class:`AcceptanceContext`: certificates emitted by the coverage and example
checks are rechecked from file at the end, and every certified degree bound
used along the way is stress-tested by brute force.
"""

from __future__ import annotations

import random
import tempfile
import time
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path
from typing import Callable, Iterator

import numpy as np

from .certify import SurjectivityCertificate, certify, decomposable_mask, recheck, write_certificate
from .coverage import (
    CoverageCaps,
    closed_form_coverage,
    product_family_coverage,
    rank5_family_coverage,
    recertify,
    theorem_coverage,
    to_intervals,
)
from .enumerate import (
    SliceQuery,
    WorkLimitError,
    brute_force_oracle,
    enumerate_slice,
    majorant_box,
    slice_majorant_value,
)
from .lattice import (
    DivisorClass,
    LatticeError,
    PicardLattice,
    make_rank2_lattice,
    make_rank5_lattice,
    min_genus_for_expected_surjectivity,
)
from .positivity import (
    MorphismType,
    PositivityError,
    check_ample_realizable,
    check_base_point_free,
    check_nef_and_ample,
    check_very_ample,
    morphism_type,
)

ORACLE_SEED = 20240601
ORACLE_LATTICES = 200
QUERIES_PER_LATTICE = 5


@dataclass
class CriterionOutcome:
    number: int
    title: str
    passed: bool
    detail: str
    elapsed: float
    budget: float | None = None
    evidence: dict = field(default_factory=dict)

    @property
    def over_budget(self) -> bool:
        return self.budget is not None and self.elapsed > self.budget

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        timing = f"{self.elapsed:.1f}s"
        if self.budget is not None:
            timing += f" (budget {self.budget:g}s{', over' if self.over_budget else ''})"
        return f"[{mark}] criterion {self.number}: {self.title} -- {self.detail} [{timing}]"

    def to_dict(self) -> dict:
        return {
            "number": self.number,
            "title": self.title,
            "passed": self.passed,
            "detail": self.detail,
            "budget_seconds": self.budget,
            "evidence": self.evidence,
        }


@dataclass
class AcceptanceContext:
    """Shared state plus knobs for fault injection and parallelism.

    ``gram_typo`` is ``(row, col, value)``; it overwrites that entry (and its
    mirror) in every rank-5 family lattice the suite builds.
    """

    jobs: int = 1
    caps: CoverageCaps = field(default_factory=CoverageCaps)
    gram_typo: tuple[int, int, int] | None = None
    rank2_gram: tuple[tuple[int, int], tuple[int, int]] | None = None
    workdir: Path | None = None
    certificates: dict[tuple, SurjectivityCertificate] = field(default_factory=dict)
    bounds: dict[tuple, tuple[PicardLattice, dict]] = field(default_factory=dict)

    def rank5(self, params: tuple[int, ...]) -> PicardLattice:
        lattice = make_rank5_lattice(params)
        if self.gram_typo is None:
            return lattice
        r, c, v = self.gram_typo
        gram = [list(row) for row in lattice.gram]
        gram[r][c] = gram[c][r] = v
        return PicardLattice(tuple(map(tuple, gram)), name=lattice.name + "+typo", basis_labels=lattice.basis_labels)

    def rank2(self) -> PicardLattice:
        if self.rank2_gram is None:
            return make_rank2_lattice()
        return PicardLattice(self.rank2_gram, name="rank2(custom)", basis_labels=("D", "L"))

    def add_certificate(self, cert: SurjectivityCertificate) -> None:
        self.certificates.setdefault((cert.lattice.fingerprint, cert.Htilde.coords), cert)

    def add_bounds(self, lattice: PicardLattice, tree) -> None:
        for d in _bound_records(tree):
            if d.get("bound") is None:
                continue
            key = (lattice.fingerprint, tuple(d["D"]), tuple(d["N"]), d["sigma"], d["tau"])
            self.bounds.setdefault(key, (lattice, d))


def _bound_records(tree) -> Iterator[dict]:
    """Every degree-bound derivation nested anywhere in a report tree."""
    if isinstance(tree, dict):
        for b in tree.get("bounds", ()):
            yield b
        for k, v in tree.items():
            if k != "bounds":
                yield from _bound_records(v)
    elif isinstance(tree, (list, tuple)):
        for v in tree:
            yield from _bound_records(v)


def family_grid() -> list[tuple[int, int, int, int, int]]:
    """``2 <= k,j,l,m <= 5`` and ``max+1 <= h <= max+3``: 768 parameter tuples."""
    out = []
    for kjlm in product(range(2, 6), repeat=4):
        top = max(kjlm)
        for h in range(top + 1, top + 4):
            out.append((h, *kjlm))
    return out


# --------------------------------------------------------------- criteria


def criterion_1(ctx: AcceptanceContext) -> tuple[bool, str, dict]:
    failures: list[str] = []
    grid = family_grid()
    kinds = {MorphismType.VERY_AMPLE.value: 0, MorphismType.TWO_TO_ONE_PLANE.value: 0}
    for params in grid:
        try:
            lattice = ctx.rank5(params)
        except LatticeError as exc:
            failures.append(f"{params}: lattice rejected: {exc}")
            break
        D = lattice.basis(0)
        amp = check_ample_realizable(lattice, D)
        if not amp.passed:
            failures.append(f"{params}: realizability fails, root {list(amp.witness)} orthogonal to D")
            break
        try:
            va = check_very_ample(lattice, D, D)
            ctx.add_bounds(lattice, [check_nef_and_ample(lattice, D, D).to_dict(), va.to_dict()])
            if not va.passed or not va.certified:
                failures.append(f"{params}: D not very ample (witness {va.witness}, {va.bound_provenance})")
                continue
            for i in range(1, 5):
                N = D + lattice.basis(i)
                bpf = check_base_point_free(lattice, D, N)
                if not bpf.passed:
                    failures.append(f"{params}: {lattice.basis_labels[i]}+D not base point free, witness {list(bpf.witness)}")
                    continue
                kind = morphism_type(lattice, D, N)
                kinds[kind.value] += 1
                reports = [check_nef_and_ample(lattice, D, N).to_dict(), bpf.to_dict()]
                if lattice.square(N) >= 4:
                    reports.append(check_very_ample(lattice, D, N).to_dict())
                ctx.add_bounds(lattice, reports)
        except PositivityError as exc:
            failures.append(f"{params}: {exc}")
    if failures:
        return False, f"{len(failures)} failure(s); first: {failures[0]}", {"failures": failures[:20]}
    return True, f"{len(grid)} lattices; D very ample; D+X morphism kinds {kinds}", {"lattices": len(grid), "kinds": kinds}


def criterion_2(ctx: AcceptanceContext) -> tuple[bool, str, dict]:
    lattice = ctx.rank2()
    D, L = lattice.basis(0), lattice.basis(1)
    problems = []
    try:
        va = check_very_ample(lattice, D, D)
        ctx.add_bounds(lattice, [va.to_dict(), check_nef_and_ample(lattice, D, D).to_dict()])
        if not va.passed:
            problems.append(f"D not very ample, witness {list(va.witness)}")
        kind = morphism_type(lattice, D, L)
        ctx.add_bounds(lattice, [check_nef_and_ample(lattice, D, L).to_dict()])
        if kind is not MorphismType.TWO_TO_ONE_PLANE:
            problems.append(f"L morphism type {kind.value}")
    except PositivityError as exc:
        problems.append(str(exc))
    Htilde = lattice.cls("11D+L")
    cert = certify(lattice, Htilde)
    ctx.add_bounds(lattice, cert.to_dict())
    HL = None
    if cert.certified:
        ctx.add_certificate(cert)
        HL = lattice.pair(cert.decomposition.H, L)
        if HL != 28 or HL < 12:
            problems.append(f"H.L = {HL}, expected 28")
        if cert.genus != 321:
            problems.append(f"genus {cert.genus}, expected 321")
    else:
        problems.append(f"11D+L refused: {cert.reason}")
    detail = "; ".join(problems) or f"D very ample, L TwoToOnePlane, H.L = {HL}, 11D+L Certified with genus {cert.genus}"
    return not problems, detail, {"genus": cert.genus, "status": cert.status, "H.L": HL}


def criterion_3(ctx: AcceptanceContext) -> tuple[bool, str, dict]:
    rep = closed_form_coverage(621, 2000)
    missing = rep.missing
    if missing:
        return False, f"missing in [621, 2000]: {to_intervals(missing)}", {"missing": missing}
    return True, "every integer in [621, 2000] is represented", {}


def _collect_coverage_certificates(ctx: AcceptanceContext, achieved: dict[int, dict]) -> list[int]:
    bad = []
    for g, prov in achieved.items():
        cert = recertify(prov)
        if cert is None:
            continue
        if not cert.certified or cert.genus != g:
            bad.append(g)
        else:
            ctx.add_certificate(cert)
    return bad


def criterion_4(ctx: AcceptanceContext) -> tuple[bool, str, dict]:
    rep = rank5_family_coverage(281, 1000, ctx.caps, jobs=ctx.jobs)
    bad = _collect_coverage_certificates(ctx, rep.achieved)
    problems = []
    if rep.missing != [321]:
        problems.append(f"missing {to_intervals(rep.missing)}, expected [321]")
    if not rep.exclusion_certified.get(321):
        problems.append("exclusion of 321 not certified")
    if bad:
        problems.append(f"provenance does not recertify at {bad[:10]}")
    if rep.stabilized is False:
        problems.append("; ".join(rep.warnings))
    ex = rep.exclusions.get(321, {})
    detail = "; ".join(problems) or (
        f"missing exactly [321]; exclusion certified with h bounds {ex.get('h_bounds')}; stabilized={rep.stabilized}"
    )
    return not problems, detail, {"missing": rep.missing, "exclusion": ex}


def criterion_5(ctx: AcceptanceContext) -> tuple[bool, str, dict]:
    prod = product_family_coverage(153, 280, ctx.caps)
    thm = theorem_coverage(153, 1000, ctx.caps, jobs=ctx.jobs)
    bad = _collect_coverage_certificates(ctx, thm.achieved)
    problems = []
    if prod.missing:
        problems.append(f"product family misses {to_intervals(prod.missing)}")
    if thm.missing:
        problems.append(f"combined coverage misses {to_intervals(thm.missing)}")
    if bad:
        problems.append(f"provenance does not recertify at {bad[:10]}")
    regimes: dict[int, int] = {}
    for prov in prod.achieved.values():
        regimes[prov["regime"]] = regimes.get(prov["regime"], 0) + 1
    detail = "; ".join(problems) or (
        f"[153, 280] covered by products (regime counts {dict(sorted(regimes.items()))}); [153, 1000] fully covered"
    )
    return not problems, detail, {"product_missing": prod.missing, "theorem_missing": thm.missing}


def criterion_6(ctx: AcceptanceContext) -> tuple[bool, str, dict]:
    g = min_genus_for_expected_surjectivity()
    return g == 18, f"smallest genus with quadrics >= quartic differentials is {g}", {"genus": g}


def random_even_lattice(rng: random.Random, rank: int) -> PicardLattice:
    """Rejection-sample an even Gram matrix with entries in ``[-10, 10]`` and signature ``(1, rank-1)``."""
    while True:
        gram = [[0] * rank for _ in range(rank)]
        for i in range(rank):
            gram[i][i] = 2 * rng.randint(-5, 5)
            for j in range(i + 1, rank):
                gram[i][j] = gram[j][i] = rng.randint(-10, 10)
        try:
            return PicardLattice(tuple(map(tuple, gram)), name=f"random-rank{rank}")
        except LatticeError:
            continue


def random_positive_class(rng: random.Random, lattice: PicardLattice) -> DivisorClass:
    # small coordinates first; widen when the positive cone is thin near the origin
    radius, tries = 2, 0
    while True:
        M = DivisorClass(tuple(rng.randint(-radius, radius) for _ in range(lattice.rank)))
        if lattice.square(M) > 0:
            return M
        tries += 1
        if tries % 50 == 0:
            radius *= 2


def criterion_7(ctx: AcceptanceContext, *, n_lattices: int = ORACLE_LATTICES, seed: int = ORACLE_SEED) -> tuple[bool, str, dict]:
    rng = random.Random(seed)
    mismatches, queries, solutions, resampled = [], 0, 0, 0
    for _ in range(n_lattices):
        lattice = random_even_lattice(rng, rng.randint(1, 4))
        done = 0
        while done < QUERIES_PER_LATTICE:
            M = random_positive_class(rng, lattice)
            sigma = rng.choice((-2, 0, 2))
            t = rng.randint(-6, 6)
            box = majorant_box(lattice, M, slice_majorant_value(lattice, M, abs(t), sigma))
            try:
                oracle = brute_force_oracle(
                    lattice, box, lambda sq, p, s=sigma, tt=t: (sq == s) & (p == tt), [M], work_cap=2 * 10**6
                )
            except WorkLimitError:
                resampled += 1
                continue
            fast = list(enumerate_slice(SliceQuery(lattice, M, t, sigma)).solutions)
            queries += 1
            done += 1
            solutions += len(fast)
            if fast != oracle:
                mismatches.append({"gram": [list(r) for r in lattice.gram], "M": M.to_list(), "t": t, "sigma": sigma})
    detail = f"{n_lattices} lattices, {queries} queries, {solutions} solutions, {len(mismatches)} mismatches"
    if resampled:
        detail += f" ({resampled} queries redrawn: oracle box too large)"
    return not mismatches, detail, {"mismatches": mismatches[:10], "queries": queries}


def bound_counterexamples(lattice: PicardLattice, derivation: dict) -> list[DivisorClass]:
    """Brute force over degrees ``(b, 2b+2]`` for classes the bound says cannot exist."""
    b = derivation["bound"]
    D = DivisorClass(tuple(derivation["D"]))
    N = DivisorClass(tuple(derivation["N"]))
    sigma, tau = derivation["sigma"], derivation["tau"]
    hi = 2 * b + 2
    box = majorant_box(lattice, D, slice_majorant_value(lattice, D, hi, sigma))

    def violating(sq, deg, pn):
        return (sq == sigma) & (deg > b) & (deg <= hi) & (pn <= tau)

    return brute_force_oracle(lattice, box, violating, [D, N])


def criterion_8(ctx: AcceptanceContext) -> tuple[bool, str, dict]:
    found = []
    for (lattice, d) in ctx.bounds.values():
        for F in bound_counterexamples(lattice, d):
            found.append({"lattice": lattice.name, "bound": d["bound"], "class": F.to_list()})
    if not ctx.bounds:
        return False, "no certified bounds were collected (run criteria 1-2 first)", {}
    return not found, f"{len(ctx.bounds)} certified bounds, {len(found)} counterexamples", {"counterexamples": found[:10]}


def parity_rule(a: int, coeffs: tuple[int, ...]) -> bool:
    """``s+t+v+r <= a-2`` and at most ``a-8`` odd coefficients."""
    return sum(coeffs) <= a - 2 and sum(c % 2 for c in coeffs) <= a - 8


def rule_domain(a: int) -> list[tuple[int, int, int, int]]:
    # a little wider than s+t+v+r <= a-2 so the sum constraint is tested too
    return [c for c in product(range(a + 2), repeat=4) if sum(c) <= a + 1]


def criterion_9(ctx: AcceptanceContext) -> tuple[bool, str, dict]:
    grid = family_grid()
    classes = [DivisorClass((a,) + c) for a in (9, 10, 11) for c in rule_domain(a)]
    expected = np.array([parity_rule(F[0], F.coords[1:]) for F in classes])
    mismatches = []
    for params in grid:
        try:
            lattice = ctx.rank5(params)
        except LatticeError as exc:
            return False, f"{params}: lattice rejected: {exc}", {}
        got_mask = decomposable_mask(lattice, classes)
        for idx in np.flatnonzero(got_mask != expected):
            mismatches.append(
                {"params": list(params), "Htilde": classes[idx].to_list(), "decomposable": bool(got_mask[idx]), "rule": bool(expected[idx])}
            )
    n = len(grid) * len(classes)
    detail = f"{len(grid)} lattices x {len(classes)} classes ({n} comparisons), {len(mismatches)} mismatches"
    return not mismatches, detail, {"mismatches": mismatches[:10]}


def criterion_10(ctx: AcceptanceContext) -> tuple[bool, str, dict]:
    if not ctx.certificates:
        return False, "no certificates were emitted by criteria 1-5", {}
    failures = []
    with tempfile.TemporaryDirectory() as tmp:
        root = ctx.workdir or Path(tmp)
        root.mkdir(parents=True, exist_ok=True)
        for i, cert in enumerate(ctx.certificates.values()):
            path = root / f"cert_{i:04d}.json"
            write_certificate(cert, path)
            res = recheck(path)
            if not res.ok:
                failures.append({"file": path.name, "status": res.status, "difference": res.first_difference})
    detail = f"{len(ctx.certificates)} certificates rechecked from file, {len(failures)} failures"
    return not failures, detail, {"failures": failures[:10]}


CRITERIA: list[tuple[int, str, Callable[[AcceptanceContext], tuple[bool, str, dict]], float]] = [
    (1, "realizability and positivity on the rank-5 family", criterion_1, 60),
    (2, "rank-2 example, genus 321", criterion_2, 10),
    (3, "closed-form coverage of [621, 2000]", criterion_3, 10),
    (4, "rank-5 coverage of [281, 1000] misses exactly 321", criterion_4, 600),
    (5, "product and combined coverage from 153", criterion_5, 60),
    (6, "dimension-count genus threshold", criterion_6, 1),
    (7, "slice enumeration agrees with brute force", criterion_7, 300),
    (8, "certified degree bounds are sound", criterion_8, 300),
    (9, "decomposability matches the parity rules", criterion_9, 120),
    (10, "certificate recheck round-trip", criterion_10, 60),
]


def run_criterion(number: int, ctx: AcceptanceContext) -> CriterionOutcome:
    num, title, fn, budget = CRITERIA[number - 1]
    start = time.perf_counter()
    try:
        passed, detail, evidence = fn(ctx)
    except Exception as exc:  # surfaced as a failing line, not a crash
        passed, detail, evidence = False, f"error: {type(exc).__name__}: {exc}", {}
    return CriterionOutcome(num, title, passed, detail, time.perf_counter() - start, budget, evidence)


def run_all(ctx: AcceptanceContext | None = None, *, echo: Callable[[str], None] | None = None) -> list[CriterionOutcome]:
    ctx = ctx or AcceptanceContext()
    out = []
    for num, *_ in CRITERIA:
        outcome = run_criterion(num, ctx)
        if echo is not None:
            echo(outcome.line())
        out.append(outcome)
    return out
