"""Exact solution of ``F^2 = sigma, F.M = t`` on a hyperbolic lattice.

When ``M^2 > 0`` the affine slice ``{F : F.M = t}`` meets the quadric
``F^2 = sigma`` in finitely many lattice points: the form is negative definite
on the kernel of ``F -> F.M``. We parametrise the slice as ``F0 + K y``
(``K`` a kernel basis from a unimodular column reduction), complete the
square, and run a Fincke-Pohst style search on the rational LDL factorisation
of the negated restricted form.

The brute-force scanner at the bottom of this module is the test oracle for
the slice search and for :func:`derive_degree_bound`.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil, floor, isqrt
from typing import Callable, Sequence

import numpy as np

from .arith import dot, floor_sqrt, ldl, mat_mul, mat_vec, row_hermite_1xn, solve_rational, transpose
from .lattice import DivisorClass, LatticeError, PicardLattice

DEFAULT_WORK_CAP = 10**8
WORK_CAP_ENV = "K3GAUSS_WORK_CAP"


def default_work_cap() -> int:
    raw = os.environ.get(WORK_CAP_ENV)
    return int(raw) if raw else DEFAULT_WORK_CAP


class EnumerationError(LatticeError):
    pass


class WorkLimitError(EnumerationError):
    """Raised when a search exceeds its node budget."""


@dataclass(frozen=True)
class SliceQuery:
    lattice: PicardLattice
    M: DivisorClass
    t: int
    sigma: int

    def __post_init__(self) -> None:
        if self.lattice.square(self.M) <= 0:
            raise EnumerationError(f"slice class must have positive square, got M^2 = {self.lattice.square(self.M)}")


@dataclass(frozen=True)
class EnumerationResult:
    solutions: tuple[DivisorClass, ...]
    exhaustive: bool = True
    nodes: int = 0
    wall_time: float = field(default=0.0, compare=False)

    def __len__(self) -> int:
        return len(self.solutions)

    def __iter__(self):
        return iter(self.solutions)


def enumerate_slice(
    query: SliceQuery | None = None,
    *,
    lattice: PicardLattice | None = None,
    M: DivisorClass | None = None,
    t: int | None = None,
    sigma: int | None = None,
    work_cap: int | None = None,
) -> EnumerationResult:
    """All classes ``F`` with ``F.M = t`` and ``F^2 = sigma``, lexicographically sorted."""
    if query is None:
        query = SliceQuery(lattice, M, t, sigma)
    cap = default_work_cap() if work_cap is None else work_cap
    start = time.perf_counter()
    sols, nodes = _slice_search(query.lattice, query.M, query.t, query.sigma, cap)
    return EnumerationResult(tuple(sorted(sols, key=lambda F: F.coords)), True, nodes, time.perf_counter() - start)


def _slice_search(lattice: PicardLattice, M: DivisorClass, t: int, sigma: int, cap: int):
    G = lattice.gram
    w = lattice.image(M)
    g, U = row_hermite_1xn(w)
    if t % g:
        return [], 0
    rho = lattice.rank
    F0 = [(t // g) * U[r][0] for r in range(rho)]
    K = [[U[r][c] for c in range(1, rho)] for r in range(rho)]
    n = rho - 1

    def build(y: Sequence[int]) -> DivisorClass:
        return DivisorClass(tuple(F0[r] + sum(K[r][c] * y[c] for c in range(n)) for r in range(rho)))

    f0sq = dot(F0, mat_vec(G, F0))
    if n == 0:
        return ([DivisorClass(tuple(F0))] if f0sq == sigma else []), 1

    Kt = transpose(K)
    GK = mat_mul(G, K)
    Q = [[-x for x in row] for row in mat_mul(Kt, GK)]
    c = mat_vec(Kt, mat_vec(G, F0))
    # F^2 = f0sq + 2 c.y - y^T Q y, so F^2 = sigma  <=>  (y - y*)^T Q (y - y*) = R
    try:
        L, d = ldl(Q)
    except ZeroDivisionError:
        raise EnumerationError("form restricted to the slice is degenerate; lattice is not hyperbolic") from None
    if any(x <= 0 for x in d):
        raise EnumerationError("form restricted to the slice is not negative definite; lattice is not hyperbolic")
    ystar = solve_rational(Q, c)
    R = Fraction(f0sq - sigma) + dot(c, ystar)
    if R < 0:
        return [], 0

    sols: list[DivisorClass] = []
    y = [0] * n
    u = [Fraction(0)] * n
    nodes = 0

    def level(i: int, rem: Fraction) -> None:
        nonlocal nodes
        center = ystar[i] - sum((L[k][i] * u[k] for k in range(i + 1, n)), Fraction(0))
        r2 = rem / d[i]
        a = floor_sqrt(r2)
        lo = floor(center) - a - 1
        hi = ceil(center) + a + 1
        for yi in range(lo, hi + 1):
            delta = yi - center
            sq = delta * delta
            if sq > r2:
                continue
            nodes += 1
            if nodes > cap:
                raise WorkLimitError(f"work-limit: slice search exceeded {cap} nodes")
            y[i] = yi
            u[i] = yi - ystar[i]
            left = rem - d[i] * sq
            if i == 0:
                if left == 0:
                    F = build(y)
                    if lattice.square(F) != sigma or lattice.pair(F, M) != t:
                        raise AssertionError("slice search produced an invalid point")
                    sols.append(F)
            else:
                level(i - 1, left)

    level(n - 1, R)
    return sols, nodes


# ------------------------------------------------------------------ bounds


@dataclass(frozen=True)
class DegreeBound:
    """``bound is None`` means Unbounded; otherwise every class ``F`` with
    ``F^2 = sigma``, ``F.D = x >= 1`` and ``F.N <= tau`` has ``x <= bound``."""

    bound: int | None
    derivation: dict

    @property
    def certified(self) -> bool:
        return self.bound is not None


def derive_degree_bound(
    lattice: PicardLattice, D: DivisorClass, N: DivisorClass, sigma: int, tau: int
) -> DegreeBound:
    """Cauchy-Schwarz bound on ``F.D`` on the negative definite complement of ``D``.

    Write ``F = (x/d) D + F'`` and ``N = (n/d) D + N'`` with ``d = D^2``,
    ``n = N.D`` and primes orthogonal to ``D``, and let ``q = -(form)`` on the
    complement. Then ``F.N = x n/d - q(F', N')`` and ``q(F') = x^2/d - sigma``,
    so ``F.N <= tau`` forces either ``x n/d <= tau`` or

        (x n/d - tau)^2 <= (x^2/d - sigma) q(N').

    The ``x^2`` coefficient of the resulting quadratic is ``N^2/d``, so the
    bound is finite exactly when ``N^2 > 0`` and ``N.D > 0``.
    """
    d = lattice.square(D)
    if d <= 0:
        raise EnumerationError(f"reference class must have positive square, got {d}")
    n = lattice.pair(N, D)
    N2 = lattice.square(N)
    qN = Fraction(n * n, d) - N2
    record = {
        "D": D.to_list(),
        "N": N.to_list(),
        "sigma": sigma,
        "tau": tau,
        "D2": d,
        "ND": n,
        "N2": N2,
        "q_perp_N": str(qN),
    }
    if N2 <= 0 or n <= 0:
        return DegreeBound(None, {**record, "reason": "N is not in the positive cone of D"})
    A = Fraction(N2, d)
    B = Fraction(2 * tau * n, d)
    C = Fraction(tau * tau) + sigma * qN
    # quadratic A x^2 - B x + C <= 0 for violating x with x n/d > tau
    linear = floor(Fraction(tau * d, n))
    disc = B * B - 4 * A * C
    if disc < 0:
        root = None
        bound = linear
    else:
        root = _floor_upper_root(A, B, C)
        bound = max(linear, root)
    bound = max(bound, 0)
    record.update(
        {
            "inequality": "(x*ND/D2 - tau)^2 <= (x^2/D2 - sigma) * q_perp_N",
            "quadratic": [str(A), str(-B), str(C)],
            "linear_branch": linear,
            "root_floor": root,
            "bound": bound,
        }
    )
    return DegreeBound(bound, record)


def _floor_upper_root(A: Fraction, B: Fraction, C: Fraction) -> int:
    """``floor`` of the larger root of ``A x^2 - B x + C`` (``A > 0``, real roots)."""

    def f(x: int) -> Fraction:
        return A * x * x - B * x + C

    disc = B * B - 4 * A * C
    s = isqrt(disc.numerator // disc.denominator) + 1
    x = ceil((B + s) / (2 * A))
    vertex = B / (2 * A)
    # f(x) > 0 above the root; walk down to the last integer with f <= 0
    while x - 1 >= vertex and f(x) > 0:
        x -= 1
    if f(x) > 0:
        x -= 1
    return x


# ------------------------------------------------------------------ oracle

DEFAULT_ORACLE_CAP = 5 * 10**7

Box = int | Sequence[int] | Sequence[tuple[int, int]]


def _box_ranges(box: Box, rank: int) -> list[tuple[int, int]]:
    if isinstance(box, int):
        if box < 1:
            raise ValueError("box radius must be >= 1")
        return [(-box, box)] * rank
    box = list(box)
    if len(box) != rank:
        raise LatticeError(f"box has {len(box)} ranges for rank {rank}")
    return [(-b, b) if isinstance(b, int) else (int(b[0]), int(b[1])) for b in box]


def brute_force_oracle(
    lattice: PicardLattice,
    box_radius: Box,
    predicate: Callable[..., "np.ndarray | bool"],
    against: Sequence[DivisorClass] = (),
    *,
    exclude_zero: bool = False,
    work_cap: int = DEFAULT_ORACLE_CAP,
) -> list[DivisorClass]:
    """Scan every coordinate vector in a box and keep those passing ``predicate``.

    ``predicate(sq, *pairings)`` receives ``F^2`` and ``F.M_i`` for each class
    in ``against``, as numpy arrays over a chunk of the box, and must return a
    boolean mask. ``box_radius`` is a radius or one ``(lo, hi)`` per coordinate.
    """
    ranges = _box_ranges(box_radius, lattice.rank)
    sizes = [hi - lo + 1 for lo, hi in ranges]
    if any(s <= 0 for s in sizes):
        return []
    volume = int(np.prod([float(s) for s in sizes]))
    if volume > work_cap:
        raise WorkLimitError(f"work-limit: oracle box has {volume} points, cap {work_cap}")
    G = np.array(lattice.gram, dtype=object)
    amax = max(max(abs(lo), abs(hi)) for lo, hi in ranges)
    gmax = max(abs(x) for row in lattice.gram for x in row)
    mmax = max([gmax] + [max(map(abs, lattice.image(M))) for M in against])
    wide = lattice.rank**2 * amax * amax * gmax >= 2**62 or lattice.rank * amax * mmax >= 2**62
    dtype = object if wide else np.int64
    G = G.astype(dtype)
    images = [np.array(lattice.image(M), dtype=dtype) for M in against]
    axes = [np.arange(lo, hi + 1, dtype=np.int64) for lo, hi in ranges]
    out: list[DivisorClass] = []
    # chunk over the first coordinate to bound memory
    for first in axes[0]:
        grids = np.meshgrid(np.array([first]), *axes[1:], indexing="ij")
        pts = np.stack([gr.ravel() for gr in grids], axis=1).astype(dtype)
        sq = np.einsum("ij,jk,ik->i", pts, G, pts) if not wide else np.array([p @ G @ p for p in pts])
        pairings = [pts @ im for im in images]
        mask = np.asarray(predicate(sq, *pairings), dtype=bool)
        if exclude_zero:
            mask &= np.any(pts != 0, axis=1)
        for row in pts[mask]:
            out.append(DivisorClass(tuple(int(v) for v in row)))
    out.sort(key=lambda F: F.coords)
    return out


def majorant_box(lattice: PicardLattice, M: DivisorClass, max_value: Fraction | int) -> list[tuple[int, int]]:
    """Coordinate box containing every ``F`` with ``2 (F.M)^2 / M^2 - F^2 <= max_value``.

    The form ``P(F) = 2 (F.M)^2 / M^2 - F^2`` is positive definite on a
    hyperbolic lattice, and ``|F_i| <= sqrt(max_value * (P^-1)_ii)`` by
    Cauchy-Schwarz. This is independent of the slice search and is what the
    oracle uses to size its boxes.
    """
    m2 = lattice.square(M)
    w = lattice.image(M)
    rho = lattice.rank
    if max_value < 0:
        return [(1, 0)] * rho  # P is nonnegative, so nothing qualifies
    P = [[Fraction(2 * w[i] * w[j], m2) - lattice.gram[i][j] for j in range(rho)] for i in range(rho)]
    out = []
    for i in range(rho):
        e = [int(r == i) for r in range(rho)]
        inv_col = solve_rational(P, e)
        r = floor_sqrt(Fraction(max_value) * inv_col[i]) + 1
        out.append((-r, r))
    return out


def slice_majorant_value(lattice: PicardLattice, M: DivisorClass, t_max: int, sigma: int) -> Fraction:
    """Upper bound of the majorant on the slices ``|F.M| <= t_max`` of ``F^2 = sigma``."""
    return Fraction(2 * t_max * t_max, lattice.square(M)) - sigma
