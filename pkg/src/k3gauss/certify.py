"""Surjectivity certificates built from a four-factor decomposition.

A polarisation ``Htilde`` is written as ``2(A1 + A2 + A3 + A4) + B`` with
``A1 = D`` and each ``A_i`` drawn from a verified generator set, ``B`` a
nonnegative combination of the same generators. The certificate records the
factor hypotheses (base point free, square at least 2, ``A1`` very ample,
the others very ample or 2:1 onto the plane, degree at least 12 against
square-2 factors), very ampleness of ``Htilde``, the genus and primitivity.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations_with_replacement
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .arith import determinant, solve_rational
from .lattice import (
    DivisorClass,
    PicardLattice,
    family_params,
    format_class,
    genus_of_class,
    is_primitive,
)
from .positivity import (
    Effectivity,
    MorphismType,
    PositivityError,
    check_ample_realizable,
    check_base_point_free,
    check_nef_and_ample,
    check_very_ample,
    classify_effectivity,
    clear_cache,
    morphism_type,
)

THEOREM_MIN_GENUS = 281
SECTION_MIN_GENUS = 13
CERTIFICATE_FORMAT = "k3gauss-certificate/1"


class NoDecomposition(ValueError):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool | None  # None: skipped because an earlier check failed
    detail: str = ""
    evidence: tuple = field(default=(), compare=False)

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail, "evidence": list(self.evidence)}


@dataclass(frozen=True)
class Decomposition:
    A: tuple[DivisorClass, DivisorClass, DivisorClass, DivisorClass]
    B: DivisorClass
    H: DivisorClass
    Htilde: DivisorClass
    A_indices: tuple[int, int, int, int]
    B_coefficients: tuple[int, ...]
    generators: tuple[DivisorClass, ...]

    def to_dict(self, labels: Sequence[str]) -> dict:
        return {
            "A": [a.to_list() for a in self.A],
            "A_expr": [format_class(a, labels) for a in self.A],
            "B": self.B.to_list(),
            "B_expr": format_class(self.B, labels),
            "H": self.H.to_list(),
            "Htilde": self.Htilde.to_list(),
            "generators": [g.to_list() for g in self.generators],
            "generator_expr": [format_class(g, labels) for g in self.generators],
            "A_indices": list(self.A_indices),
            "B_coefficients": list(self.B_coefficients),
        }


def default_generators(lattice: PicardLattice) -> tuple[DivisorClass, ...]:
    """``D, D+L, D+R, D+S, D+T`` on the rank-5 family, the basis otherwise."""
    D = lattice.basis(0)
    if family_params(lattice) is not None:
        return (D,) + tuple(D + lattice.basis(i) for i in range(1, 5))
    return tuple(lattice.basis(i) for i in range(lattice.rank))


@lru_cache(maxsize=None)
def _generator_adjugate(generators: tuple[DivisorClass, ...]) -> tuple[tuple[tuple[int, ...], ...], int] | None:
    """``(adj, det)`` of the matrix with the generators as columns, or ``None`` if singular."""
    n = len(generators)
    cols = [[g[r] for g in generators] for r in range(n)] if n == len(generators[0]) else None
    if cols is None:
        return None
    det = determinant(cols)
    if det == 0:
        return None
    adj = []
    for i in range(n):
        e = [int(r == i) for r in range(n)]
        col = solve_rational(cols, e)
        adj.append([int(x * det) for x in col])
    # adj currently holds columns of det * inverse; transpose into rows
    return tuple(tuple(adj[c][r] for c in range(n)) for r in range(n)), det


def check_cilomi(lattice: PicardLattice, D: DivisorClass, A: Sequence[DivisorClass]) -> list[CheckResult]:
    """Evaluate the five factor hypotheses; failures are recorded, not raised."""
    A = list(A)
    squares = [lattice.square(a) for a in A]
    sq_ok = all(s >= 2 for s in squares)
    sq_check = CheckResult(
        "(2) A_i^2 >= 2",
        sq_ok,
        "squares " + ", ".join(map(str, squares)),
    )
    if not sq_ok:
        skip = CheckResult("(1) A_i base point free", None, "skipped: some A_i^2 < 2")
        return [
            skip,
            sq_check,
            CheckResult("(3) A_1 very ample", None, "skipped"),
            CheckResult("(4) A_2..A_4 very ample or 2:1 onto P^2", None, "skipped"),
            CheckResult("(5) (A_1+A_2+A_3+A_4).A_j >= 12 when A_j^2 = 2", None, "skipped"),
        ]
    results = []

    bpf_ev, bpf_fail = [], None
    for i, a in enumerate(A):
        try:
            rep = check_base_point_free(lattice, D, a)
        except PositivityError as exc:
            bpf_fail = f"A_{i + 1}: {exc}"
            if exc.report is not None:
                bpf_ev.append(exc.report.to_dict())
            break
        bpf_ev.append(rep.to_dict())
        if not rep.passed:
            bpf_fail = f"A_{i + 1} fails, witness {list(rep.witness)}"
            break
    results.append(CheckResult("(1) A_i base point free", bpf_fail is None, bpf_fail or "all pass", tuple(bpf_ev)))
    results.append(sq_check)

    if squares[0] < 4:
        results.append(CheckResult("(3) A_1 very ample", False, f"A_1^2 = {squares[0]} < 4"))
    elif bpf_fail is not None:
        results.append(CheckResult("(3) A_1 very ample", None, "skipped: base point freeness failed"))
    else:
        rep = check_very_ample(lattice, D, A[0])
        results.append(
            CheckResult(
                "(3) A_1 very ample",
                rep.passed,
                "pass" if rep.passed else f"witness {list(rep.witness)}",
                (rep.to_dict(),),
            )
        )

    if bpf_fail is not None:
        results.append(CheckResult("(4) A_2..A_4 very ample or 2:1 onto P^2", None, "skipped"))
    else:
        kinds, fail = [], None
        for i, a in enumerate(A[1:], start=2):
            try:
                kinds.append(morphism_type(lattice, D, a).value)
            except PositivityError as exc:
                fail = f"A_{i}: {exc}"
                break
        results.append(CheckResult("(4) A_2..A_4 very ample or 2:1 onto P^2", fail is None, fail or ", ".join(kinds)))

    H = A[0] + A[1] + A[2] + A[3]
    degs = [(j + 1, lattice.pair(H, a)) for j, a in enumerate(A) if squares[j] == 2]
    ok = all(d >= 12 for _, d in degs)
    detail = ", ".join(f"H.A_{j} = {d}" for j, d in degs) or "vacuous: no A_j with square 2"
    results.append(CheckResult("(5) (A_1+A_2+A_3+A_4).A_j >= 12 when A_j^2 = 2", ok, detail))
    return results


def _combos(n_generators: int) -> list[tuple[int, int, int]]:
    return list(combinations_with_replacement(range(n_generators), 3))


@dataclass
class _Table:
    gens: tuple[DivisorClass, ...]
    combos: list[tuple[int, int, int]]
    factors: list[tuple[DivisorClass, ...]]
    Hs: list[DivisorClass]
    integral: np.ndarray
    coeff: np.ndarray
    usable: np.ndarray
    combo_ok: np.ndarray
    combo_why: list[str]

    @property
    def good(self) -> np.ndarray:
        return self.usable & self.combo_ok[None, :]


def _decomposition_table(
    lattice: PicardLattice, Htildes: Sequence[DivisorClass], gens: tuple[DivisorClass, ...]
) -> _Table | None:
    inv = _generator_adjugate(gens)
    if inv is None:
        return None
    adj, det = inv
    D = lattice.basis(0)
    combos = _combos(len(gens))
    factors = [(D,) + tuple(gens[i] for i in c) for c in combos]
    Hs = [a[0] + a[1] + a[2] + a[3] for a in factors]

    big = max([abs(x) for F in Htildes for x in F.coords] + [1]) > 10**6
    dtype = object if big else np.int64
    htab = np.array([F.coords for F in Htildes], dtype=dtype).reshape(len(Htildes), lattice.rank)
    twoH = np.array([(H * 2).coords for H in Hs], dtype=dtype)
    resid = htab[:, None, :] - twoH[None, :, :]
    num = resid @ np.array(adj, dtype=dtype).T
    integral = (num % det == 0).all(axis=-1)
    coeff = num // det
    usable = integral & (coeff >= 0).all(axis=-1)

    # factor checks depend only on the combo; evaluate those some class can use
    combo_ok = np.zeros(len(combos), dtype=bool)
    combo_why = [""] * len(combos)
    for ci in np.flatnonzero(usable.any(axis=0)):
        checks = check_cilomi(lattice, D, factors[ci])
        failed = next((c for c in checks if not c.passed), None)
        combo_ok[ci] = failed is None
        if failed is not None:
            combo_why[ci] = f"{combos[ci]}: {failed.name} {failed.detail}"
    return _Table(gens, combos, factors, Hs, integral, coeff, usable, combo_ok, combo_why)


def decomposable_mask(
    lattice: PicardLattice,
    Htildes: Sequence[DivisorClass],
    generators: Sequence[DivisorClass] | None = None,
) -> np.ndarray:
    """Boolean array: which classes :func:`decompose` would succeed on."""
    table = _decomposition_table(lattice, Htildes, tuple(generators or default_generators(lattice)))
    if table is None:
        return np.zeros(len(Htildes), dtype=bool)
    return table.good.any(axis=1)


def decompose_many(
    lattice: PicardLattice,
    Htildes: Sequence[DivisorClass],
    generators: Sequence[DivisorClass] | None = None,
) -> list[Decomposition | NoDecomposition]:
    """Batch form of :func:`decompose`; failures are returned, not raised.

    For each ``Htilde`` the multisets ``(A2, A3, A4)`` are scanned in
    lexicographic index order; the residual ``B = Htilde - 2H`` is expressed
    in the generator basis with the integer adjugate, and the first candidate
    with nonnegative integer coefficients whose factor checks pass wins.
    """
    gens = tuple(generators or default_generators(lattice))
    table = _decomposition_table(lattice, Htildes, gens)
    if table is None:
        err = NoDecomposition("generators do not form a basis; residual not unique")
        return [err for _ in Htildes]
    combos, factors, Hs = table.combos, table.factors, table.Hs
    integral, coeff, usable, combo_why = table.integral, table.coeff, table.usable, table.combo_why
    good = table.good
    has = good.any(axis=1)
    first_good = good.argmax(axis=1)
    first_usable = usable.argmax(axis=1)

    out: list[Decomposition | NoDecomposition] = []
    for i, Htilde in enumerate(Htildes):
        if has[i]:
            found = int(first_good[i])
            coeffs = tuple(int(c) for c in coeff[i, found])
            B = Htilde - Hs[found] * 2
            out.append(Decomposition(factors[found], B, Hs[found], Htilde, (0,) + combos[found], coeffs, gens))
            continue
        if usable[i].any():
            reason = combo_why[int(first_usable[i])]
        else:
            c0 = combos[0]
            if not integral[i, 0]:
                reason = f"{c0}: residual not an integer combination"
            else:
                neg = next(k for k in range(len(gens)) if coeff[i, 0, k] < 0)
                reason = f"{c0}: negative residual coefficient {int(coeff[i, 0, neg])} on generator {neg}"
            if Htilde[0] < 8 and family_params(lattice) is not None:
                reason = f"D-coefficient {Htilde[0]} < 8 (2H alone contributes 8D); " + reason
        out.append(NoDecomposition(reason))
    return out


def decompose(
    lattice: PicardLattice, Htilde: DivisorClass, generators: Sequence[DivisorClass] | None = None
) -> Decomposition:
    """First decomposition in canonical order whose factor checks all pass."""
    res = decompose_many(lattice, [Htilde], generators)[0]
    if isinstance(res, NoDecomposition):
        raise res
    return res


def decomposable_structurally(coeffs: Sequence[int], a: int) -> bool:
    """Rank-5 family: does ``aD + sL + tR + vS + rT`` admit nonnegative ``B``?

    Lattice independent: picks how many ``D+X`` factors of each kind go into
    ``H``. Used to pre-filter coverage candidates before :func:`decompose`.
    """
    for combo in combinations_with_replacement(range(5), 3):
        counts = [0] * 5
        for i in combo:
            counts[i] += 1
        ms = [coeffs[i] - 2 * counts[i + 1] for i in range(4)]
        if min(ms) < 0:
            continue
        if a - 8 - sum(ms) >= 0:
            return True
    return False


# ------------------------------------------------------------ certificates


@dataclass(frozen=True)
class SurjectivityCertificate:
    lattice: PicardLattice
    Htilde: DivisorClass
    decomposition: Decomposition | None
    checks: tuple[CheckResult, ...]
    genus: int | None
    primitive: bool
    status: str  # "Certified" or "Refused"
    reason: str = ""
    marker: str = ""

    @property
    def certified(self) -> bool:
        return self.status == "Certified"

    def to_dict(self) -> dict:
        labels = self.lattice.basis_labels
        return {
            "lattice": self.lattice.to_dict(),
            "Htilde": self.Htilde.to_list(),
            "Htilde_expr": format_class(self.Htilde, labels),
            "decomposition": None if self.decomposition is None else self.decomposition.to_dict(labels),
            "checks": [c.to_dict() for c in self.checks],
            "genus": self.genus,
            "primitive": self.primitive,
            "status": self.status,
            "reason": self.reason,
            "marker": self.marker,
        }


def _marker(lattice: PicardLattice, genus: int) -> str:
    if lattice.rank == 2:
        return f"rank-2 g={genus} route"
    if genus < THEOREM_MIN_GENUS:
        return "below-theorem-threshold example"
    return "theorem range"


def certify(lattice: PicardLattice, Htilde: DivisorClass) -> SurjectivityCertificate:
    D = lattice.basis(0)
    checks: list[CheckResult] = []
    primitive = not Htilde.is_zero() and is_primitive(Htilde)

    def refuse(reason: str, decomposition=None, genus=None) -> SurjectivityCertificate:
        return SurjectivityCertificate(
            lattice, Htilde, decomposition, tuple(checks), genus, primitive, "Refused", reason
        )

    amp = check_ample_realizable(lattice, D)
    checks.append(CheckResult("ample reference D", amp.passed, "no root orthogonal to D" if amp.passed else f"root {list(amp.witness)}", (amp.to_dict(),)))
    if not amp.passed:
        return refuse("ample reference D: " + checks[-1].detail)

    gens = default_generators(lattice)
    gen_fail = None
    gen_ev = []
    for g in gens:
        try:
            eff = classify_effectivity(lattice, D, g)
            kind = morphism_type(lattice, D, g)
        except PositivityError as exc:
            gen_fail = f"{format_class(g, lattice.basis_labels)}: {exc}"
            break
        if eff is not Effectivity.EFFECTIVE:
            gen_fail = f"{format_class(g, lattice.basis_labels)} is not effective"
            break
        gen_ev.append(
            {
                "generator": g.to_list(),
                "nef": check_nef_and_ample(lattice, D, g).to_dict(),
                "base_point_free": check_base_point_free(lattice, D, g).to_dict(),
                "morphism": kind.value,
            }
        )
    checks.append(CheckResult("generators nef, effective, base point free", gen_fail is None, gen_fail or "all generators verified", tuple(gen_ev)))
    if gen_fail:
        return refuse("generators: " + gen_fail)

    try:
        dec = decompose(lattice, Htilde, gens)
    except NoDecomposition as exc:
        checks.append(CheckResult("decomposition", False, exc.reason))
        return refuse("NoDecomposition: " + exc.reason)
    checks.append(CheckResult("decomposition", True, f"A indices {list(dec.A_indices)}, B coefficients {list(dec.B_coefficients)}"))
    checks.extend(check_cilomi(lattice, D, dec.A))

    b_ok = all(c >= 0 for c in dec.B_coefficients)
    checks.append(CheckResult("B nef and effective", b_ok, "nonnegative combination of verified generators"))
    if not b_ok:
        return refuse("B has a negative generator coefficient", dec)

    sq = lattice.square(Htilde)
    if sq < 4:
        checks.append(CheckResult("Htilde very ample", False, f"Htilde^2 = {sq} < 4"))
        return refuse("Htilde very ample: square too small", dec)
    try:
        va = check_very_ample(lattice, D, Htilde)
    except PositivityError as exc:
        ev = (exc.report.to_dict(),) if exc.report is not None else ()
        checks.append(CheckResult("Htilde very ample", False, str(exc), ev))
        return refuse(f"Htilde very ample: {exc}", dec)
    ev = tuple(
        r.to_dict()
        for r in (check_nef_and_ample(lattice, D, Htilde), check_base_point_free(lattice, D, Htilde), va)
    )
    checks.append(CheckResult("Htilde very ample", va.passed, "pass" if va.passed else f"witness {list(va.witness)}", ev))
    if not va.passed:
        return refuse(f"Htilde very ample: witness {list(va.witness)}", dec)

    genus = genus_of_class(lattice, Htilde)
    g_ok = genus >= SECTION_MIN_GENUS
    checks.append(CheckResult(f"genus >= {SECTION_MIN_GENUS}", g_ok, f"genus {genus}"))
    if not g_ok:
        return refuse(f"genus {genus} < {SECTION_MIN_GENUS}", dec, genus)
    checks.append(CheckResult("primitive", None, "gcd of coordinates is 1" if primitive else "Htilde is divisible"))

    failed = next((c for c in checks if c.passed is False), None)
    if failed is not None:
        return refuse(f"{failed.name}: {failed.detail}", dec, genus)
    return SurjectivityCertificate(
        lattice, Htilde, dec, tuple(checks), genus, primitive, "Certified", "", _marker(lattice, genus)
    )


# ------------------------------------------------------------------- files


def certificate_document(cert: SurjectivityCertificate, manifest: dict | None = None) -> dict:
    return {
        "format": CERTIFICATE_FORMAT,
        "tool_version": __version__,
        "manifest": manifest or {},
        "certificate": cert.to_dict(),
    }


def canonical_json(data) -> str:
    return json.dumps(data, sort_keys=True, indent=2) + "\n"


def write_certificate(cert: SurjectivityCertificate, path: str | Path, manifest: dict | None = None) -> None:
    Path(path).write_text(canonical_json(certificate_document(cert, manifest)))


@dataclass(frozen=True)
class RecheckResult:
    identical: bool
    status: str
    recorded_status: str
    first_difference: str = ""

    @property
    def ok(self) -> bool:
        return self.identical and self.status == "Certified"


def recheck(path: str | Path, *, fresh: bool = True) -> RecheckResult:
    """Re-run :func:`certify` from the lattice and class stored in a certificate file.

    With ``fresh`` the positivity cache is dropped first so every check is
    recomputed from scratch.
    """
    doc = json.loads(Path(path).read_text())
    body = doc["certificate"]
    lattice = PicardLattice.from_dict(body["lattice"])
    Htilde = DivisorClass(tuple(body["Htilde"]))
    if fresh:
        clear_cache()
    redo = json.loads(canonical_json(certify(lattice, Htilde).to_dict()))
    identical = redo == body
    diff = ""
    if not identical:
        diff = next((k for k in sorted(set(redo) | set(body)) if redo.get(k) != body.get(k)), "")
    return RecheckResult(identical, redo["status"], body["status"], diff)
