"""Numerical positivity criteria for classes on a K3 with a given Picard lattice.

Every criterion reduces to finitely many slice enumerations:

* ample reference ``D``: no root ``F`` (``F^2 = -2``) with ``F.D = 0``;
* ``N`` nef and ample: no root with ``F.D >= 1`` and ``F.N <= 0``;
* base point free: no decomposition ``N = aF + G`` with ``F^2 = 0``,
  ``G^2 = -2``, ``F.G = 1``, ``a >= 2``;
* very ample (``N^2 >= 4``): no isotropic ``F`` with ``F.N`` in ``{1, 2}``.

Lattice data cannot see irreducibility, so each search runs over all classes
meeting the numerical conditions. A Pass is therefore sound; a Fail names a
class that violates the inequalities but need not be an actual curve.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from enum import Enum

from .enumerate import SliceQuery, derive_degree_bound, enumerate_slice
from .lattice import DivisorClass, LatticeError, PicardLattice

DEFAULT_SEARCH_BOUND = 1000


class Criterion(str, Enum):
    AMPLE_REALIZABLE = "ample-realizable"
    NEF = "nef"
    BASE_POINT_FREE = "base-point-free"
    VERY_AMPLE = "very-ample"
    TWO_TO_ONE_PLANE = "two-to-one-plane"


class MorphismType(str, Enum):
    TWO_TO_ONE_PLANE = "TwoToOnePlane"
    VERY_AMPLE = "VeryAmple"


class Effectivity(str, Enum):
    EFFECTIVE = "Effective"
    ANTI_EFFECTIVE = "AntiEffective"
    ZERO = "Zero"


class PositivityError(LatticeError):
    """Precondition failure, or a Fail surfaced where a Pass was required."""

    def __init__(self, message: str, report: "PositivityReport | None" = None):
        super().__init__(message)
        self.report = report


class InconsistencyError(PositivityError):
    pass


@dataclass(frozen=True)
class Evidence:
    sigma: int
    degree_class: tuple[int, ...]
    t_range: tuple[int, int]
    bound: int | None
    provenance: str
    solutions: int = 0
    nodes: int = 0
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "sigma": self.sigma,
            "degree_class": list(self.degree_class),
            "t_range": list(self.t_range),
            "bound": self.bound,
            "provenance": self.provenance,
            "solutions": self.solutions,
            "nodes": self.nodes,
            "note": self.note,
        }


@dataclass(frozen=True)
class PositivityReport:
    lattice_id: str
    cls: tuple[int, ...]
    criterion: Criterion
    passed: bool
    witness: tuple[int, ...] | None = None
    evidence: tuple[Evidence, ...] = ()
    bound_provenance: str = "certified"
    bounds: tuple[dict, ...] = field(default=(), compare=False)

    @property
    def certified(self) -> bool:
        return self.bound_provenance == "certified"

    @property
    def verdict(self) -> str:
        return "Pass" if self.passed else "Fail"

    def to_dict(self) -> dict:
        return {
            "lattice_id": self.lattice_id,
            "class": list(self.cls),
            "criterion": self.criterion.value,
            "verdict": self.verdict,
            "witness": None if self.witness is None else list(self.witness),
            "bound_provenance": self.bound_provenance,
            "evidence": [e.to_dict() for e in self.evidence],
            "bounds": list(self.bounds),
        }


def _report(lattice, N, criterion, passed, witness=None, evidence=(), provenance="certified", bounds=()):
    return PositivityReport(
        lattice.lattice_id,
        N.coords,
        criterion,
        passed,
        None if witness is None else witness.coords,
        tuple(evidence),
        provenance,
        tuple(bounds),
    )


# Caching is keyed on hashable (lattice, classes, knobs); lru_cache is thread-safe.
_cache = functools.lru_cache(maxsize=None)


def clear_cache() -> None:
    for fn in (
        _ample_realizable,
        _nef_and_ample,
        _base_point_free,
        _very_ample,
    ):
        fn.cache_clear()


def check_ample_realizable(lattice: PicardLattice, D: DivisorClass) -> PositivityReport:
    """Pass iff no root is orthogonal to ``D``.

    The slice ``F.D = 0`` sits in the negative definite complement of ``D``,
    so this search is always finite and the verdict always certified. A Pass
    means some K3 with this Picard lattice has ``D`` ample.
    """
    if lattice.square(D) <= 0:
        raise PositivityError(f"ample reference needs positive square, got {lattice.square(D)}")
    return _ample_realizable(lattice, D)


@_cache
def _ample_realizable(lattice: PicardLattice, D: DivisorClass) -> PositivityReport:
    res = enumerate_slice(SliceQuery(lattice, D, 0, -2))
    ev = Evidence(-2, D.coords, (0, 0), None, "certified", len(res), res.nodes, "roots orthogonal to D")
    # roots come in pairs +-F; report the one with positive leading coordinate
    witness = res.solutions[-1] if res.solutions else None
    return _report(lattice, D, Criterion.AMPLE_REALIZABLE, witness is None, witness, [ev])


def _require_ample_reference(lattice: PicardLattice, D: DivisorClass) -> None:
    rep = check_ample_realizable(lattice, D)
    if not rep.passed:
        raise PositivityError(
            f"reference class {list(D.coords)} is not ample-realizable (root {list(rep.witness)} is orthogonal)",
            rep,
        )


def classify_effectivity(lattice: PicardLattice, D: DivisorClass, F: DivisorClass) -> Effectivity:
    sq = lattice.square(F)
    if sq < -2:
        raise PositivityError(f"effectivity is only decided for F^2 >= -2, got {sq}")
    _require_ample_reference(lattice, D)
    if F.is_zero():
        return Effectivity.ZERO
    deg = lattice.pair(F, D)
    if deg > 0:
        return Effectivity.EFFECTIVE
    if deg < 0:
        return Effectivity.ANTI_EFFECTIVE
    raise InconsistencyError(
        f"nonzero class {list(F.coords)} with F^2 = {sq} is orthogonal to the ample reference"
    )


def check_nef_and_ample(
    lattice: PicardLattice, D: DivisorClass, N: DivisorClass, search_bound: int = DEFAULT_SEARCH_BOUND
) -> PositivityReport:
    """Pass iff no effective root ``F`` has ``F.N <= 0``.

    Effective roots are those with ``F.D >= 1``; their degrees are bounded by
    :func:`derive_degree_bound`. Falls back to a search up to
    ``search_bound`` (non-certified) when no bound exists.
    """
    if lattice.square(N) <= 0:
        raise PositivityError(f"nef-and-ample check needs N^2 > 0, got {lattice.square(N)}")
    _require_ample_reference(lattice, D)
    if lattice.pair(N, D) <= 0:
        raise PositivityError("N lies in the opposite half of the positive cone from D")
    return _nef_and_ample(lattice, D, N, search_bound)


@_cache
def _nef_and_ample(lattice, D, N, search_bound) -> PositivityReport:
    db = derive_degree_bound(lattice, D, N, -2, 0)
    provenance = "certified" if db.certified else f"searched-up-to:{search_bound}"
    top = db.bound if db.certified else search_bound
    evidence = []
    for x in range(1, top + 1):
        res = enumerate_slice(SliceQuery(lattice, D, x, -2))
        bad = [F for F in res.solutions if lattice.pair(F, N) <= 0]
        if res.solutions:
            evidence.append(Evidence(-2, D.coords, (x, x), db.bound, provenance, len(res), res.nodes, "roots of this degree"))
        if bad:
            return _report(lattice, N, Criterion.NEF, False, bad[0], evidence, provenance, [db.derivation])
    evidence.insert(0, Evidence(-2, D.coords, (1, top), db.bound, provenance, 0, 0, "all degree slices scanned"))
    return _report(lattice, N, Criterion.NEF, True, None, evidence, provenance, [db.derivation])


def check_base_point_free(lattice: PicardLattice, D: DivisorClass, N: DivisorClass) -> PositivityReport:
    """Pass iff ``N`` is not ``aF + G`` with ``F^2 = 0, G^2 = -2, F.G = 1, a >= 2``.

    Such a decomposition forces ``F.N = 1`` and ``a = (N^2 + 2)/2``;
    conversely any isotropic ``F`` with ``F.N = 1`` yields one when
    ``N^2 >= 2``. Since ``N^2 > 0`` the slice ``F.N = 1`` is finite.
    """
    nef = check_nef_and_ample(lattice, D, N)
    if not nef.passed:
        raise PositivityError("base-point-freeness needs N nef and ample", nef)
    return _base_point_free(lattice, D, N)


@_cache
def _base_point_free(lattice, D, N) -> PositivityReport:
    if lattice.all_pairings_even():
        ev = Evidence(0, N.coords, (1, 1), None, "parity", 0, 0, "all pairings even, F.G = 1 impossible")
        return _report(lattice, N, Criterion.BASE_POINT_FREE, True, None, [ev])
    res = enumerate_slice(SliceQuery(lattice, N, 1, 0))
    ev = Evidence(0, N.coords, (1, 1), None, "certified", len(res), res.nodes, "isotropic F with F.N = 1")
    a = (lattice.square(N) + 2) // 2
    if res.solutions and a >= 2:
        return _report(lattice, N, Criterion.BASE_POINT_FREE, False, res.solutions[0], [ev])
    return _report(lattice, N, Criterion.BASE_POINT_FREE, True, None, [ev])


def check_very_ample(
    lattice: PicardLattice, D: DivisorClass, N: DivisorClass, search_bound: int = DEFAULT_SEARCH_BOUND
) -> PositivityReport:
    """Pass iff no isotropic ``F`` with ``F.D >= 1`` has ``F.N`` in ``{1, 2}``."""
    if lattice.square(N) < 4:
        raise PositivityError(
            f"square too small for very ampleness (N^2 = {lattice.square(N)}); use morphism_type"
        )
    bpf = check_base_point_free(lattice, D, N)
    if not bpf.passed:
        raise PositivityError("very ampleness needs N base point free", bpf)
    return _very_ample(lattice, D, N, search_bound)


@_cache
def _very_ample(lattice, D, N, search_bound) -> PositivityReport:
    db = derive_degree_bound(lattice, D, N, 0, 2)
    provenance = "certified" if db.certified else f"searched-up-to:{search_bound}"
    top = db.bound if db.certified else search_bound
    targets = (2,) if lattice.all_pairings_even() else (1, 2)
    evidence = []
    if targets == (2,):
        evidence.append(Evidence(0, N.coords, (1, 1), None, "parity", 0, 0, "F.N = 1 impossible, all pairings even"))
    for x in range(1, top + 1):
        res = enumerate_slice(SliceQuery(lattice, D, x, 0))
        bad = [F for F in res.solutions if lattice.pair(F, N) in targets]
        if res.solutions:
            evidence.append(Evidence(0, D.coords, (x, x), db.bound, provenance, len(res), res.nodes, "isotropic classes of this degree"))
        if bad:
            return _report(lattice, N, Criterion.VERY_AMPLE, False, bad[0], evidence, provenance, [db.derivation])
    evidence.insert(0, Evidence(0, D.coords, (1, top), db.bound, provenance, 0, 0, "all degree slices scanned"))
    return _report(lattice, N, Criterion.VERY_AMPLE, True, None, evidence, provenance, [db.derivation])


def check_very_ample_direct(lattice: PicardLattice, N: DivisorClass) -> list[DivisorClass]:
    """Isotropic classes with ``F.N`` in ``{1, 2}``, found by slicing against ``N`` itself.

    Second route for the very-ampleness obstruction: with ``N^2 > 0`` the
    slices ``F.N = t`` are already finite, so no degree bound is needed.
    """
    out: list[DivisorClass] = []
    for t in (1, 2):
        out.extend(enumerate_slice(SliceQuery(lattice, N, t, 0)).solutions)
    return out


def morphism_type(lattice: PicardLattice, D: DivisorClass, N: DivisorClass) -> MorphismType:
    sq = lattice.square(N)
    if sq <= 0:
        raise PositivityError(f"morphism type needs N^2 > 0, got {sq}")
    bpf = check_base_point_free(lattice, D, N)
    if not bpf.passed:
        raise PositivityError(f"{list(N.coords)} is not base point free; witness {list(bpf.witness)}", bpf)
    if sq == 2:
        return MorphismType.TWO_TO_ONE_PLANE
    va = check_very_ample(lattice, D, N)
    if not va.passed:
        raise PositivityError(f"{list(N.coords)} is not very ample; witness {list(va.witness)}", va)
    return MorphismType.VERY_AMPLE


def morphism_report(lattice: PicardLattice, D: DivisorClass, N: DivisorClass) -> PositivityReport:
    """``morphism_type`` as a report, so callers get evidence rows either way."""
    sq = lattice.square(N)
    bpf = check_base_point_free(lattice, D, N)
    if not bpf.passed or sq != 2:
        return bpf if not bpf.passed else check_very_ample(lattice, D, N)
    ev = Evidence(2, N.coords, (0, 0), None, "certified", 0, 0, "base point free with N^2 = 2")
    return _report(lattice, N, Criterion.TWO_TO_ONE_PLANE, True, None, list(bpf.evidence) + [ev])
