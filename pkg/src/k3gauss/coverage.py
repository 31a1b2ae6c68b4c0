"""Which genera do the certificate families reach?

Four sources of genera:

* the two closed forms ``170 + 45r + 44m + 81t`` and ``170 + 44n + 80a + 81b``
  obtained from ``Htilde = 9D + 6L + R`` on the rank-5 family;
* the full rank-5 family ``Htilde = aD + sL + tR + vS + rT``, every candidate
  admitted only through :func:`k3gauss.certify.certify`;
* the rank-2 lattice giving genus 321;
* curves on a product of two curves, genus
  ``1 + (g2-1) d1 + (g1-1) d2 + d1 d2`` under three parameter regimes.

For the rank-5 family the genus is ``1 + a^2 h - s^2 k - t^2 j - v^2 l - r^2 m``.
Achievable genera per ``(a, s, t, v, r, h)`` are computed as a sumset of
arithmetic progressions held in Python int bitsets; only then is one
parameter tuple per genus certified.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from itertools import combinations_with_replacement
from typing import Iterator, Sequence

from .arith import gcd_all
from .certify import certify, decomposable_structurally
from .lattice import DivisorClass, genus_of_class, make_rank2_lattice, make_rank5_lattice

A_RANGE = range(9, 15)
FIRST_FORM = (170, (45, 44, 81))
SECOND_FORM = (170, (44, 80, 81))


@dataclass(frozen=True)
class CoverageCaps:
    h: int = 200
    param: int = 50
    g1: int = 60
    g2: int = 60
    d: int = 600

    def halved(self) -> "CoverageCaps":
        return CoverageCaps(*(max(1, v // 2) for v in asdict(self).values()))

    def scaled(self, factor: int) -> "CoverageCaps":
        return CoverageCaps(*(v * factor for v in asdict(self).values()))


@dataclass
class CoverageReport:
    family: str
    g_min: int
    g_max: int
    achieved: dict[int, dict]
    caps: dict = field(default_factory=dict)
    stabilized: bool | None = None
    exclusion_certified: dict[int, bool] = field(default_factory=dict)
    exclusions: dict[int, dict] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    @property
    def missing(self) -> list[int]:
        return [g for g in range(self.g_min, self.g_max + 1) if g not in self.achieved]

    @property
    def achieved_set(self) -> set[int]:
        return set(self.achieved)

    def to_dict(self, provenance: bool = True) -> dict:
        out = {
            "family": self.family,
            "range": [self.g_min, self.g_max],
            "caps": self.caps,
            "achieved": to_intervals(sorted(self.achieved)),
            "missing": to_intervals(self.missing),
            "stabilized": self.stabilized,
            "exclusion_certified": {str(g): v for g, v in sorted(self.exclusion_certified.items())},
            "exclusions": {str(g): v for g, v in sorted(self.exclusions.items())},
            "warnings": self.warnings,
            "notes": self.notes,
        }
        if provenance:
            out["provenance"] = {str(g): self.achieved[g] for g in sorted(self.achieved)}
        return out


def to_intervals(values: Sequence[int]) -> list[list[int]]:
    runs: list[list[int]] = []
    for v in values:
        if runs and runs[-1][1] + 1 == v:
            runs[-1][1] = v
        else:
            runs.append([v, v])
    return runs


def _check_range(g_min: int, g_max: int) -> None:
    if g_min < 2 or g_max < g_min:
        raise ValueError(f"invalid genus range [{g_min}, {g_max}]")


# ------------------------------------------------------------ closed forms


def closed_form_genus(n: int, m: int, t: int) -> tuple[int, str, tuple[int, int, int]]:
    """Genus of ``9D+6L+R`` at ``h = n+3+t, k = n+2, j = m+2`` via the two closed forms."""
    if n >= m:
        rho = n - m
        return FIRST_FORM[0] + 45 * rho + 44 * m + 81 * t, "first", (rho, m, t)
    alpha = m - n
    if t < alpha:
        raise ValueError("h >= j + 1 requires t >= m - n")
    beta = t - alpha
    return SECOND_FORM[0] + 44 * n + 80 * alpha + 81 * beta, "second", (n, alpha, beta)


def closed_form_lattice_params(form: str, params: tuple[int, int, int]) -> tuple[int, int, int, int, int]:
    if form == "first":
        rho, m, t = params
        n = m + rho
    else:
        n, alpha, beta = params
        m, t = n + alpha, alpha + beta
    return (n + 3 + t, n + 2, m + 2, 2, 2)


def closed_form_coverage(g_min: int, g_max: int) -> CoverageReport:
    _check_range(g_min, g_max)
    achieved: dict[int, dict] = {}
    for form, (offset, gens) in (("first", FIRST_FORM), ("second", SECOND_FORM)):
        a, b, c = gens
        for x in range((g_max - offset) // a + 1):
            for y in range((g_max - offset - a * x) // b + 1):
                for z in range((g_max - offset - a * x - b * y) // c + 1):
                    g = offset + a * x + b * y + c * z
                    if g >= g_min and g not in achieved:
                        achieved[g] = {
                            "family": "closed-form",
                            "form": form,
                            "params": [x, y, z],
                            "lattice_params": list(closed_form_lattice_params(form, (x, y, z))),
                            "Htilde": [9, 6, 1, 0, 0],
                        }
    return CoverageReport("closed-forms", g_min, g_max, dict(sorted(achieved.items())))


def closed_form_representations(g: int) -> dict[str, list[tuple[int, int, int]]]:
    """Every representation of ``g`` by each closed form (used to report ``g = 620``)."""
    out: dict[str, list[tuple[int, int, int]]] = {}
    for form, (offset, (a, b, c)) in (("first", FIRST_FORM), ("second", SECOND_FORM)):
        rest = g - offset
        out[form] = [
            (x, y, (rest - a * x - b * y) // c)
            for x in range(max(rest, -1) // a + 1)
            for y in range((rest - a * x) // b + 1)
            if (rest - a * x - b * y) % c == 0
        ]
    return out


# ------------------------------------------------------------ rank-5 family


@dataclass(frozen=True)
class Cell:
    """One ``(a, coefficients, h)`` slab of the rank-5 family."""

    a: int
    coeffs: tuple[int, int, int, int]
    h: int
    upper: int  # largest allowed value of k, j, l, m in this slab

    @property
    def nonzero(self) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.coeffs) if c)


def _suffix_sets(cell: Cell, t_max: int) -> list[int]:
    """Bitsets of sums ``sum c_i^2 p_i`` over the trailing nonzero positions."""
    mask = (1 << (t_max + 1)) - 1
    pos = cell.nonzero
    sets = [0] * (len(pos) + 1)
    sets[-1] = 1
    for idx in range(len(pos) - 1, -1, -1):
        w = cell.coeffs[pos[idx]] ** 2
        acc = 0
        prev = sets[idx + 1]
        for p in range(2, cell.upper + 1):
            acc |= prev << (w * p)
        sets[idx] = acc & mask
    return sets


def _param_tuples(cell: Cell, target: int, t_max: int) -> Iterator[tuple[int, int, int, int]]:
    """All ``(k, j, l, m)`` in lexicographic order hitting ``target``; unused slots are 2."""
    sets = _suffix_sets(cell, t_max)
    pos = cell.nonzero
    params = [2, 2, 2, 2]

    def walk(idx: int, rest: int):
        if idx == len(pos):
            if rest == 0:
                yield tuple(params)
            return
        w = cell.coeffs[pos[idx]] ** 2
        for p in range(2, cell.upper + 1):
            r = rest - w * p
            if r < 0:
                break
            if (sets[idx + 1] >> r) & 1:
                params[pos[idx]] = p
                yield from walk(idx + 1, r)
        params[pos[idx]] = 2

    yield from walk(0, target)


def _coefficient_tuples(a: int, primitivity: str) -> list[tuple[int, int, int, int]]:
    """Sorted ``s >= t >= v >= r >= 0`` with ``s+t+v+r <= a-2``, primitive and decomposable.

    Permuting ``L, R, S, T`` together with ``k, j, l, m`` is an isometry of
    the family, so sorted tuples lose no genera.
    """
    out = []
    for combo in combinations_with_replacement(range(a - 1), 4):
        coeffs = tuple(sorted(combo, reverse=True))
        if sum(coeffs) > a - 2:
            continue
        g = gcd_all((a,) + coeffs) if primitivity == "full" else gcd_all(coeffs)
        if g != 1:
            continue
        if not decomposable_structurally(coeffs, a):
            continue
        out.append(coeffs)
    return sorted(set(out))


def _cells(g_min: int, g_max: int, caps: CoverageCaps, primitivity: str, h_bound=None):
    """Yield ``(cell, genera_bitset_info)`` for every slab that can reach the range."""
    for a in A_RANGE:
        h_cap = caps.h if h_bound is None else min(caps.h, h_bound(a))
        for coeffs in _coefficient_tuples(a, primitivity):
            Q = sum(c * c for c in coeffs)
            for h in range(3, h_cap + 1):
                upper = min(h - 1, caps.param)
                if upper < 2:
                    continue
                base = 1 + a * a * h
                if base - upper * Q > g_max:
                    break
                if base - 2 * Q < g_min:
                    continue
                yield Cell(a, coeffs, h, upper)


def _cell_genera(cell: Cell, g_min: int, g_max: int) -> list[int]:
    base = 1 + cell.a * cell.a * cell.h
    t_max = base - g_min
    bits = _suffix_sets(cell, t_max)[0]
    t_min = max(base - g_max, 0)
    out = []
    for T in range(t_min, t_max + 1):
        if (bits >> T) & 1:
            out.append(base - T)
    return out


def _candidate_map(g_min, g_max, caps, primitivity, h_bound=None) -> dict[int, list[Cell]]:
    cand: dict[int, list[Cell]] = {}
    for cell in _cells(g_min, g_max, caps, primitivity, h_bound):
        for g in _cell_genera(cell, g_min, g_max):
            cand.setdefault(g, []).append(cell)
    return cand


def _certify_genus(g: int, cells: Sequence[Cell], max_attempts: int = 200) -> dict | None:
    attempts = 0
    for cell in cells:
        base = 1 + cell.a * cell.a * cell.h
        for params in _param_tuples(cell, base - g, base):
            lattice = make_rank5_lattice((cell.h,) + params)
            Htilde = DivisorClass((cell.a,) + cell.coeffs)
            cert = certify(lattice, Htilde)
            attempts += 1
            if cert.certified:
                assert cert.genus == g == genus_of_class(lattice, Htilde)
                return {
                    "family": "rank5",
                    "lattice_params": [cell.h, *params],
                    "Htilde": list(Htilde.coords),
                    "A_indices": list(cert.decomposition.A_indices),
                    "B_coefficients": list(cert.decomposition.B_coefficients),
                }
            if attempts >= max_attempts:
                return None
    return None


def _certify_chunk(items: list[tuple[int, list[Cell]]]) -> list[tuple[int, dict | None]]:
    return [(g, _certify_genus(g, cells)) for g, cells in items]


def _certify_all(cand: dict[int, list[Cell]], jobs: int) -> dict[int, dict]:
    items = sorted(cand.items())
    if jobs <= 1 or len(items) < 2:
        results = _certify_chunk(items)
    else:
        chunks = [items[i::jobs] for i in range(jobs)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = [r for part in pool.map(_certify_chunk, chunks) for r in part]
    return {g: prov for g, prov in sorted(results) if prov is not None}


def rank5_family_coverage(
    g_min: int,
    g_max: int,
    caps: CoverageCaps | None = None,
    *,
    primitivity: str = "full",
    jobs: int = 1,
    check_stability: bool = True,
    certify_missing: bool = True,
) -> CoverageReport:
    _check_range(g_min, g_max)
    caps = caps or CoverageCaps()
    cand = _candidate_map(g_min, g_max, caps, primitivity)
    achieved = _certify_all(cand, jobs)
    report = CoverageReport("rank5", g_min, g_max, achieved, caps=asdict(caps))
    report.notes["primitivity"] = primitivity
    report.notes["arithmetic_candidates"] = len(cand)
    uncertified = sorted(set(cand) - set(achieved))
    if uncertified:
        report.warnings.append(f"arithmetic hits without a certificate: {to_intervals(uncertified)}")
    if check_stability:
        half = caps.halved()
        half_cand = _candidate_map(g_min, g_max, half, primitivity)
        half_achieved = set()
        for g in half_cand:
            prov = achieved.get(g)
            if prov is not None and _within(prov, half):
                half_achieved.add(g)
            elif _certify_genus(g, half_cand[g]) is not None:
                half_achieved.add(g)
        report.stabilized = half_achieved == set(achieved)
        if not report.stabilized:
            changed = sorted(set(achieved) ^ half_achieved)
            report.warnings.append(f"cap-too-small: achieved set changes when caps are halved at {to_intervals(changed)}")
    if certify_missing:
        for g in report.missing:
            ok, derivation = certify_exclusion(g, primitivity=primitivity)
            report.exclusion_certified[g] = ok
            report.exclusions[g] = derivation
    return report


def _within(prov: dict, caps: CoverageCaps) -> bool:
    h, *rest = prov["lattice_params"]
    return h <= caps.h and max(rest) <= caps.param


def exclusion_h_bound(g: int, a: int) -> int:
    """Largest ``h`` that can give genus ``g`` with leading coefficient ``a``.

    With ``k, j, l, m <= h - 1`` and ``s+t+v+r <= a-2``,
    ``g >= 1 + (4a - 4) h + (a - 2)^2``.
    """
    return (g - 1 - (a - 2) ** 2) // (4 * a - 4)


def certify_exclusion(g: int, *, primitivity: str = "full") -> tuple[bool, dict]:
    """Prove ``g`` is not reached by the rank-5 family, independent of caps.

    Returns ``(True, derivation)`` on a proof and ``(False, derivation)`` with
    a certified witness when ``g`` is in fact achievable.
    """
    bounds = {a: exclusion_h_bound(g, a) for a in A_RANGE}
    derivation = {
        "genus": g,
        "inequality": "g >= 1 + (4a-4) h + (a-2)^2",
        "h_bounds": {str(a): b for a, b in bounds.items()},
        "primitivity": primitivity,
    }
    big = max(max(bounds.values()), 3)
    caps = CoverageCaps(h=big, param=big)
    cand = _candidate_map(g, g, caps, primitivity, h_bound=lambda a: bounds[a])
    derivation["slabs_hitting_g"] = len(cand.get(g, []))
    if g in cand:
        witness = _certify_genus(g, cand[g], max_attempts=10**6)
        if witness is not None:
            derivation["witness"] = witness
            return False, derivation
    derivation["slabs_enumerated"] = sum(1 for _ in _cells(g, g, caps, primitivity, lambda a: bounds[a]))
    return True, derivation


# --------------------------------------------------------------- rank 2


@lru_cache(maxsize=None)
def rank2_provenance() -> tuple[int, dict]:
    lattice = make_rank2_lattice()
    Htilde = lattice.cls("11D+L")
    cert = certify(lattice, Htilde)
    if not cert.certified:
        raise AssertionError(f"rank-2 certificate refused: {cert.reason}")
    return cert.genus, {
        "family": "rank2",
        "gram": [list(r) for r in lattice.gram],
        "Htilde": list(Htilde.coords),
        "A_indices": list(cert.decomposition.A_indices),
        "B_coefficients": list(cert.decomposition.B_coefficients),
    }


# --------------------------------------------------------------- products


def product_genus(g1: int, g2: int, d1: int, d2: int) -> int:
    return 1 + (g2 - 1) * d1 + (g1 - 1) * d2 + d1 * d2


def product_regime(g1: int, g2: int, d1: int, d2: int) -> int | None:
    """Which of the three surjectivity regimes ``(g1, g2, d1, d2)`` falls in, if any."""
    if g1 >= 2 and g2 >= 2 and d1 >= 2 * g1 + 5 and d2 >= 2 * g2 + 5:
        return 1
    if g1 >= 2 and g2 == 1 and d1 >= 2 * g1 + 5 and d2 >= 7:
        return 2
    if g2 == 0 and d2 >= 7 and d2 * (g1 - 1) > 2 * d1 >= 4 * g1 + 10:
        return 3
    return None


def _product_candidates(g_max: int, caps: CoverageCaps) -> Iterator[tuple[int, int, int, int, int]]:
    for g1 in range(2, caps.g1 + 1):
        for g2 in range(0, caps.g2 + 1):
            d1_min = 2 * g1 + 5
            d2_min = 2 * g2 + 5 if g2 >= 2 else 7
            for d1 in range(d1_min, caps.d + 1):
                if product_genus(g1, g2, d1, d2_min) > g_max:
                    break
                for d2 in range(d2_min, caps.d + 1):
                    g = product_genus(g1, g2, d1, d2)
                    if g > g_max:
                        break
                    regime = product_regime(g1, g2, d1, d2)
                    if regime is not None:
                        yield g, regime, g1, g2, d1, d2


def product_family_coverage(
    g_min: int, g_max: int, caps: CoverageCaps | None = None, *, check_stability: bool = True
) -> CoverageReport:
    _check_range(g_min, g_max)
    caps = caps or CoverageCaps()

    def run(c: CoverageCaps) -> dict[int, dict]:
        found: dict[int, dict] = {}
        for g, regime, g1, g2, d1, d2 in _product_candidates(g_max, c):
            if g >= g_min and g not in found:
                found[g] = {"family": "product", "regime": regime, "g1": g1, "g2": g2, "d1": d1, "d2": d2}
        return dict(sorted(found.items()))

    achieved = run(caps)
    report = CoverageReport("product", g_min, g_max, achieved, caps=asdict(caps))
    if check_stability:
        report.stabilized = set(run(caps.halved())) == set(achieved)
        if not report.stabilized:
            report.warnings.append("cap-too-small: product coverage changes when caps are halved")
    return report


# ---------------------------------------------------------------- union


def theorem_coverage(
    g_min: int, g_max: int, caps: CoverageCaps | None = None, *, jobs: int = 1, check_stability: bool = True
) -> CoverageReport:
    """Union of the rank-5 family, the rank-2 genus-321 example and the product family.

    Provenance preference: the product family up to genus 280, the rank-2
    lattice for 321, the rank-5 family elsewhere.
    """
    _check_range(g_min, g_max)
    caps = caps or CoverageCaps()
    r5 = rank5_family_coverage(g_min, g_max, caps, jobs=jobs, check_stability=check_stability, certify_missing=False)
    prod = product_family_coverage(g_min, g_max, caps, check_stability=check_stability)
    g321, prov321 = rank2_provenance()
    achieved: dict[int, dict] = {}
    for g in range(g_min, g_max + 1):
        if g == g321:
            achieved[g] = prov321
        elif g <= 280 and g in prod.achieved:
            achieved[g] = prod.achieved[g]
        elif g in r5.achieved:
            achieved[g] = r5.achieved[g]
        elif g in prod.achieved:
            achieved[g] = prod.achieved[g]
    report = CoverageReport("theorem", g_min, g_max, achieved, caps=asdict(caps))
    report.warnings = r5.warnings + prod.warnings
    if check_stability:
        report.stabilized = bool(r5.stabilized and prod.stabilized)
    report.notes["components"] = {
        "rank5_missing": to_intervals(r5.missing),
        "product_missing": to_intervals(prod.missing),
        "rank2": g321,
    }
    return report


def reevaluate(prov: dict) -> int:
    """Recompute the genus named by a provenance record from scratch."""
    fam = prov["family"]
    if fam in ("rank5", "closed-form"):
        lattice = make_rank5_lattice(tuple(prov["lattice_params"]))
        return genus_of_class(lattice, DivisorClass(tuple(prov["Htilde"])))
    if fam == "rank2":
        lattice = make_rank2_lattice()
        return genus_of_class(lattice, DivisorClass(tuple(prov["Htilde"])))
    if fam == "product":
        if product_regime(prov["g1"], prov["g2"], prov["d1"], prov["d2"]) is None:
            raise ValueError("product provenance violates its regime")
        return product_genus(prov["g1"], prov["g2"], prov["d1"], prov["d2"])
    raise ValueError(f"unknown family {fam!r}")


def recertify(prov: dict):
    """The certificate behind a lattice provenance record (``None`` for products)."""
    fam = prov["family"]
    if fam == "rank5":
        lattice = make_rank5_lattice(tuple(prov["lattice_params"]))
    elif fam == "rank2":
        lattice = make_rank2_lattice()
    else:
        return None
    return certify(lattice, DivisorClass(tuple(prov["Htilde"])))


def primitivity_difference(g_min: int, g_max: int, caps: CoverageCaps | None = None) -> dict:
    """Compare the gcd-over-all reading of primitivity with gcd over ``(s,t,v,r)``."""
    full = rank5_family_coverage(g_min, g_max, caps, check_stability=False, certify_missing=False)
    tail = rank5_family_coverage(g_min, g_max, caps, primitivity="tail", check_stability=False, certify_missing=False)
    return {
        "full_only": sorted(full.achieved_set - tail.achieved_set),
        "tail_only": sorted(tail.achieved_set - full.achieved_set),
    }


__all__ = [
    "CoverageCaps",
    "CoverageReport",
    "certify_exclusion",
    "closed_form_coverage",
    "closed_form_genus",
    "closed_form_representations",
    "primitivity_difference",
    "product_family_coverage",
    "rank5_family_coverage",
    "reevaluate",
    "recertify",
    "theorem_coverage",
    "to_intervals",
]
