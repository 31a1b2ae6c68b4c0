"""Picard lattices, divisor classes and the intersection pairing.

A :class:`PicardLattice` is an immutable even hyperbolic lattice given by its
Gram matrix. Classes are integer coordinate vectors in the lattice basis.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .arith import determinant, gcd_all, inertia

MAX_K3_RANK = 20
FAMILY_LABELS = ("D", "L", "R", "S", "T")


class LatticeError(ValueError):
    """An input violates a lattice invariant; the message names it."""


@dataclass(frozen=True)
class DivisorClass:
    coords: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "coords", tuple(int(c) for c in self.coords))

    @classmethod
    def of(cls, *coords: int) -> "DivisorClass":
        return cls(coords)

    def __len__(self) -> int:
        return len(self.coords)

    def __iter__(self):
        return iter(self.coords)

    def __getitem__(self, i: int) -> int:
        return self.coords[i]

    def __add__(self, other: "DivisorClass") -> "DivisorClass":
        _check_same_length(self, other)
        return DivisorClass(tuple(a + b for a, b in zip(self.coords, other.coords)))

    def __sub__(self, other: "DivisorClass") -> "DivisorClass":
        _check_same_length(self, other)
        return DivisorClass(tuple(a - b for a, b in zip(self.coords, other.coords)))

    def __neg__(self) -> "DivisorClass":
        return DivisorClass(tuple(-a for a in self.coords))

    def __mul__(self, k: int) -> "DivisorClass":
        return DivisorClass(tuple(k * a for a in self.coords))

    __rmul__ = __mul__

    def is_zero(self) -> bool:
        return not any(self.coords)

    def to_list(self) -> list[int]:
        return list(self.coords)


def _check_same_length(F: DivisorClass, G: DivisorClass) -> None:
    if len(F) != len(G):
        raise LatticeError(f"dimension mismatch: {len(F)} vs {len(G)}")


@dataclass(frozen=True)
class PicardLattice:
    """Even lattice of signature ``(1, rank - 1)``, ``rank <= 20``.

    Construction validates every invariant and raises :class:`LatticeError`
    naming the first violated one. ``basis_labels`` is metadata only.
    """

    gram: tuple[tuple[int, ...], ...]
    name: str = ""
    basis_labels: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        gram = tuple(tuple(int(x) for x in row) for row in self.gram)
        object.__setattr__(self, "gram", gram)
        labels = tuple(self.basis_labels) or default_labels(len(gram))
        object.__setattr__(self, "basis_labels", labels)
        for verdict in check_gram(gram, labels):
            if not verdict[1]:
                raise LatticeError(verdict[2])

    @property
    def rank(self) -> int:
        return len(self.gram)

    @property
    def fingerprint(self) -> str:
        blob = json.dumps([list(r) for r in self.gram]).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    @property
    def lattice_id(self) -> str:
        return f"{self.name or 'lattice'}#{self.fingerprint}"

    def basis(self, i: int) -> DivisorClass:
        return DivisorClass(tuple(int(j == i) for j in range(self.rank)))

    def cls(self, expr: str | Sequence[int]) -> DivisorClass:
        """Build a class from coordinates or an expression like ``"9D+6L+R"``."""
        if isinstance(expr, str):
            return parse_class(expr, self.basis_labels)
        F = DivisorClass(tuple(expr))
        self._check(F)
        return F

    def _check(self, F: DivisorClass) -> None:
        if len(F) != self.rank:
            raise LatticeError(f"dimension mismatch: class has {len(F)} coordinates, lattice rank {self.rank}")

    def image(self, F: DivisorClass) -> list[int]:
        """The linear form ``G -> F.G`` as an integer row, i.e. ``gram @ F``."""
        self._check(F)
        return [sum(g * c for g, c in zip(row, F.coords)) for row in self.gram]

    def pair(self, F: DivisorClass, G: DivisorClass) -> int:
        self._check(F)
        self._check(G)
        return sum(a * b for a, b in zip(self.image(F), G.coords))

    def square(self, F: DivisorClass) -> int:
        return self.pair(F, F)

    def all_pairings_even(self) -> bool:
        return all(x % 2 == 0 for row in self.gram for x in row)

    def signature(self) -> tuple[int, int]:
        pos, neg, _ = inertia(self.gram)
        return pos, neg

    def determinant(self) -> int:
        return determinant(self.gram)

    def is_rank5_family(self) -> bool:
        return (
            self.rank == 5
            and self.basis_labels == FAMILY_LABELS
            and all(self.gram[i][j] == 0 for i in range(5) for j in range(5) if i != j)
        )

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "rank": self.rank,
            "gram": [x for row in self.gram for x in row],
            "basis_labels": list(self.basis_labels),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PicardLattice":
        rank, gram = _gram_from_fields(data)
        labels = data.get("basis_labels") or ()
        if labels and len(labels) != rank:
            raise LatticeError(f"basis_labels: expected {rank} labels, got {len(labels)}")
        return cls(gram, name=str(data.get("name", "")), basis_labels=tuple(labels))


def default_labels(rank: int) -> tuple[str, ...]:
    if rank <= len(FAMILY_LABELS):
        return FAMILY_LABELS[:rank]
    return ("D",) + tuple(f"E{i}" for i in range(1, rank))


def check_gram(gram: Sequence[Sequence[int]], labels: Sequence[str] | None = None) -> list[tuple[str, bool, str]]:
    """Evaluate every lattice invariant in order: ``(name, ok, message)``.

    Stops after the structural checks if the matrix is not square, since the
    later ones would be meaningless.
    """
    n = len(gram)
    labels = list(labels or default_labels(n))
    out: list[tuple[str, bool, str]] = []
    square = n > 0 and all(len(row) == n for row in gram)
    out.append(("square", square, "gram is square" if square else "gram must be a nonempty square matrix"))
    if not square:
        return out
    asym = [(i, j) for i in range(n) for j in range(i + 1, n) if gram[i][j] != gram[j][i]]
    out.append(
        (
            "symmetric",
            not asym,
            "gram is symmetric"
            if not asym
            else f"gram is not symmetric: entry ({asym[0][0]},{asym[0][1]})={gram[asym[0][0]][asym[0][1]]} "
            f"but ({asym[0][1]},{asym[0][0]})={gram[asym[0][1]][asym[0][0]]}",
        )
    )
    odd = [i for i in range(n) if gram[i][i] % 2]
    out.append(
        (
            "even",
            not odd,
            "even"
            if not odd
            else f"lattice is not even: diagonal entry {labels[odd[0]]}^2 = gram[{odd[0]}][{odd[0]}] = {gram[odd[0]][odd[0]]} is odd",
        )
    )
    if asym:
        return out
    det = determinant(gram)
    out.append(("nondegenerate", det != 0, f"determinant {det}" if det else "gram is degenerate (determinant 0)"))
    pos, neg, zero = inertia(gram)
    hyperbolic = pos == 1 and neg == n - 1
    out.append(
        (
            "signature",
            hyperbolic,
            f"signature ({pos},{neg})"
            if hyperbolic
            else f"signature ({pos},{neg}) with {zero} null directions; need (1,{n - 1})",
        )
    )
    out.append(
        (
            "rank",
            n <= MAX_K3_RANK,
            f"rank {n} <= {MAX_K3_RANK}" if n <= MAX_K3_RANK else f"rank {n} exceeds {MAX_K3_RANK}",
        )
    )
    return out


def _gram_from_fields(data: dict) -> tuple[int, list[list[int]]]:
    try:
        rank = int(data["rank"])
        flat = [int(x) for x in data["gram"]]
    except KeyError as exc:
        raise LatticeError(f"missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError):
        raise LatticeError("fields 'rank' and 'gram' must be an integer and a list of integers") from None
    if rank < 1 or len(flat) != rank * rank:
        raise LatticeError(f"gram: expected rank^2 = {rank * rank} entries, got {len(flat)}")
    return rank, [flat[i * rank : (i + 1) * rank] for i in range(rank)]


def read_lattice_file(path: str | Path) -> PicardLattice:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise LatticeError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return PicardLattice.from_dict(data)


def inspect_lattice_file(path: str | Path) -> tuple[dict, list[list[int]], list[tuple[str, bool, str]]]:
    """Parse a lattice file without validating it: ``(fields, gram, checks)``.

    Only malformed JSON or a missing/ill-shaped ``gram`` raise; invariant
    violations come back as failed checks so they can all be reported.
    """
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise LatticeError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise LatticeError(f"{path}: expected a JSON object with fields 'rank' and 'gram'")
    rank, gram = _gram_from_fields(data)
    labels = data.get("basis_labels") or None
    if labels is not None and len(labels) != rank:
        raise LatticeError(f"basis_labels: expected {rank} labels, got {len(labels)}")
    return data, gram, check_gram(gram, labels)


def write_lattice_file(lattice: PicardLattice, path: str | Path) -> None:
    Path(path).write_text(json.dumps(lattice.to_dict(), indent=2) + "\n")


_TERM = re.compile(r"\s*([+-]?)\s*(\d*)\s*\*?\s*([A-Za-z]\w*)\s*")


def parse_class(text: str, labels: Sequence[str]) -> DivisorClass:
    """Parse a linear expression such as ``"11D+L"`` or a list ``"9,6,1,0,0"``."""
    text = text.strip()
    if re.fullmatch(r"-?\d+(\s*,\s*-?\d+)*", text):
        coords = tuple(int(x) for x in text.split(","))
        if len(coords) != len(labels):
            raise LatticeError(f"dimension mismatch: class has {len(coords)} coordinates, lattice rank {len(labels)}")
        return DivisorClass(coords)
    coords = [0] * len(labels)
    pos = 0
    while pos < len(text):
        m = _TERM.match(text, pos)
        if not m or m.end() == pos or (pos > 0 and not m.group(1)):
            raise LatticeError(f"cannot parse class expression {text!r} at offset {pos}")
        sign, coef, label = m.groups()
        if label not in labels:
            raise LatticeError(f"unknown basis label {label!r}; known: {', '.join(labels)}")
        k = int(coef) if coef else 1
        coords[list(labels).index(label)] += -k if sign == "-" else k
        pos = m.end()
    return DivisorClass(tuple(coords))


def format_class(F: DivisorClass, labels: Sequence[str]) -> str:
    parts = []
    for c, lab in zip(F.coords, labels):
        if c == 0:
            continue
        mag = "" if abs(c) == 1 else str(abs(c))
        parts.append(("-" if c < 0 else "+") + mag + lab)
    if not parts:
        return "0"
    s = "".join(parts)
    return s[1:] if s[0] == "+" else s


# ---------------------------------------------------------------- families


@dataclass(frozen=True)
class DiagonalFamilyParams:
    h: int
    k: int
    j: int
    l: int
    m: int

    def __post_init__(self) -> None:
        for name in ("k", "j", "l", "m"):
            if getattr(self, name) < 2:
                raise LatticeError(f"constraint violated: {name} >= 2 (got {name}={getattr(self, name)})")
        for name in ("k", "j", "l", "m"):
            if self.h < getattr(self, name) + 1:
                raise LatticeError(
                    f"constraint violated: h >= {name}+1 (got h={self.h}, {name}={getattr(self, name)})"
                )

    def as_tuple(self) -> tuple[int, int, int, int, int]:
        return (self.h, self.k, self.j, self.l, self.m)


def make_rank5_lattice(params: DiagonalFamilyParams | Iterable[int]) -> PicardLattice:
    """``diag(2h, -2k, -2j, -2l, -2m)`` with basis ``D, L, R, S, T``."""
    if not isinstance(params, DiagonalFamilyParams):
        params = DiagonalFamilyParams(*params)
    h, k, j, l, m = params.as_tuple()
    diag = (2 * h, -2 * k, -2 * j, -2 * l, -2 * m)
    gram = tuple(tuple(diag[i] if i == c else 0 for c in range(5)) for i in range(5))
    return PicardLattice(gram, name=f"rank5({h},{k},{j},{l},{m})", basis_labels=FAMILY_LABELS)


def make_rank2_lattice() -> PicardLattice:
    """The lattice ``D^2 = 4, L^2 = 2, D.L = 7`` used for genus 321."""
    return PicardLattice(((4, 7), (7, 2)), name="rank2(4,7,2)", basis_labels=("D", "L"))


def family_params(lattice: PicardLattice) -> tuple[int, int, int, int, int] | None:
    if not lattice.is_rank5_family():
        return None
    g = lattice.gram
    return (g[0][0] // 2, -g[1][1] // 2, -g[2][2] // 2, -g[3][3] // 2, -g[4][4] // 2)


# ------------------------------------------------------------- invariants


def pair(lattice: PicardLattice, F: DivisorClass, G: DivisorClass) -> int:
    return lattice.pair(F, G)


class NegativeSquareError(LatticeError):
    pass


def genus_of_class(lattice: PicardLattice, Htilde: DivisorClass) -> int:
    """Arithmetic genus ``1 + H^2/2`` of curves in ``|H|``; requires ``H^2 >= 0``."""
    sq = lattice.square(Htilde)
    if sq < 0:
        raise NegativeSquareError(f"class has negative square {sq}; not a curve class")
    assert sq % 2 == 0, "odd square in an even lattice"
    return 1 + sq // 2


def is_primitive(Htilde: DivisorClass) -> bool:
    if Htilde.is_zero():
        raise LatticeError("zero class has no primitivity")
    return gcd_all(Htilde.coords) == 1


def quadrics_through_canonical_curve(g: int) -> int:
    """``dim I_2(K_C) = dim S^2 H^0(K_C) - dim H^0(2K_C)`` for a non-hyperelliptic curve."""
    return g * (g + 1) // 2 - (3 * g - 3)


def quartic_differentials(g: int) -> int:
    """``dim H^0(4K_C) = 7g - 7``."""
    return 7 * g - 7


def min_genus_for_expected_surjectivity() -> int:
    """Least genus where the source of the second Gaussian map is at least as big as its target."""
    g = 2
    while quadrics_through_canonical_curve(g) < quartic_differentials(g):
        g += 1
    return g
