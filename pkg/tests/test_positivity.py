from __future__ import annotations

from itertools import combinations_with_replacement

import pytest

from k3gauss.enumerate import SliceQuery, brute_force_oracle, enumerate_slice, majorant_box
from k3gauss.lattice import DivisorClass, PicardLattice, make_rank5_lattice
from k3gauss.positivity import (
    Criterion,
    Effectivity,
    InconsistencyError,
    MorphismType,
    PositivityError,
    check_ample_realizable,
    check_base_point_free,
    check_nef_and_ample,
    check_very_ample,
    check_very_ample_direct,
    classify_effectivity,
    clear_cache,
    morphism_report,
    morphism_type,
)


def test_ample_realizable_examples(r5, r2, diag_2_m2):
    assert check_ample_realizable(r5, r5.basis(0)).passed
    assert check_ample_realizable(r2, r2.basis(0)).passed
    rep = check_ample_realizable(diag_2_m2, diag_2_m2.basis(0))
    assert not rep.passed and rep.witness == (0, 1)
    assert rep.certified


def test_ample_realizable_needs_positive_square(r5):
    with pytest.raises(PositivityError):
        check_ample_realizable(r5, r5.basis(1))


def test_effectivity(r5):
    D, L = r5.basis(0), r5.basis(1)
    assert classify_effectivity(r5, D, D + L) is Effectivity.EFFECTIVE
    assert classify_effectivity(r5, D, -(D + L)) is Effectivity.ANTI_EFFECTIVE
    assert classify_effectivity(r5, D, DivisorClass((0,) * 5)) is Effectivity.ZERO
    with pytest.raises(PositivityError):
        classify_effectivity(r5, D, L)  # L^2 = -4 < -2


def test_effectivity_inconsistency():
    # D is not ample-realizable here, so the orthogonal root is refused up front
    lat = PicardLattice(((2, 0), (0, -2)))
    with pytest.raises(PositivityError):
        classify_effectivity(lat, lat.basis(0), lat.basis(1))
    assert issubclass(InconsistencyError, PositivityError)


def test_nef_examples(r5):
    D, L = r5.basis(0), r5.basis(1)
    rep = check_nef_and_ample(r5, D, D + L)
    assert rep.passed and rep.certified and rep.bounds[0]["bound"] == 4
    assert check_nef_and_ample(r5, D, D).passed
    big = make_rank5_lattice((9, 8, 2, 2, 2))
    rep = check_nef_and_ample(big, big.basis(0), big.basis(0) + big.basis(1))
    assert rep.passed and rep.bounds[0]["bound"] == 16


def test_nef_cross_checked_by_brute_force():
    big = make_rank5_lattice((9, 8, 2, 2, 2))
    D, N = big.basis(0), big.basis(0) + big.basis(1)
    # effective roots with F.N <= 0, any degree up to 40
    hits = brute_force_oracle(
        big, majorant_box(big, D, 2 * 40 * 40 / 18 + 2), lambda sq, x, n: (sq == -2) & (x >= 1) & (x <= 40) & (n <= 0), [D, N]
    )
    assert hits == []


def test_nef_fail_has_witness(r5):
    D = r5.basis(0)
    with pytest.raises(PositivityError, match="not ample-realizable"):
        check_nef_and_ample(PicardLattice(((2, 0), (0, -2))), DivisorClass((1, 0)), DivisorClass((1, 0)))
    N = DivisorClass((2, -1, 0, 0, 2))
    assert r5.square(N) == 4
    rep = check_nef_and_ample(r5, D, N)
    assert not rep.passed and rep.certified
    F = DivisorClass(rep.witness)
    assert r5.square(F) == -2 and r5.pair(F, D) >= 1 and r5.pair(F, N) <= 0


def test_base_point_free_examples(r5, r2):
    D = r5.basis(0)
    for i in range(1, 5):
        rep = check_base_point_free(r5, D, D + r5.basis(i))
        assert rep.passed and rep.evidence[0].provenance == "parity"
    rep = check_base_point_free(r2, r2.basis(0), r2.cls("11D+L"))
    assert rep.passed
    # independent: no isotropic F with F.N = 1 in a radius-50 box
    N = r2.cls("11D+L")
    assert brute_force_oracle(r2, 50, lambda sq, n: (sq == 0) & (n == 1), [N]) == []


def test_base_point_free_detects_elliptic_pencil(hyperbolic_plane):
    # [[2,1],[1,-2]] has discriminant -5 and no nonzero isotropic classes, so
    # we build N = 3F + G on the hyperbolic plane: F = e1 isotropic, G = e2 - e1 a root
    U = hyperbolic_plane
    D = N = DivisorClass((2, 1))
    assert brute_force_oracle(PicardLattice(((2, 1), (1, -2))), 30, lambda sq: sq == 0, []) == [DivisorClass((0, 0))]
    rep = check_base_point_free(U, D, N)
    assert not rep.passed
    F = DivisorClass(rep.witness)
    a = (U.square(N) + 2) // 2
    G = N - F * a
    assert U.square(F) == 0 and U.square(G) == -2 and U.pair(F, G) == 1 and a >= 2
    with pytest.raises(PositivityError, match="not base point free"):
        morphism_type(U, D, N)


def test_very_ample_examples(r5, r2):
    assert check_very_ample(r5, r5.basis(0), r5.basis(0)).passed
    assert check_very_ample(r2, r2.basis(0), r2.basis(0)).passed
    lat = make_rank5_lattice((9, 2, 2, 2, 2))
    D, L = lat.basis(0), lat.basis(1)
    assert lat.square(D + L) == 14
    assert check_very_ample(lat, D, D + L).passed
    with pytest.raises(PositivityError, match="square too small"):
        check_very_ample(r5, r5.basis(0), r5.basis(0) + r5.basis(1))


def test_very_ample_second_route_agrees():
    for params in [(3, 2, 2, 2, 2), (9, 2, 2, 2, 2), (6, 5, 3, 2, 4)]:
        lat = make_rank5_lattice(params)
        D = lat.basis(0)
        for N in [D] + [D + lat.basis(i) for i in range(1, 5)]:
            if lat.square(N) < 4:
                continue
            direct = [F for F in check_very_ample_direct(lat, N) if lat.pair(F, D) >= 1]
            assert check_very_ample(lat, D, N).passed == (not direct)


def test_very_ample_fail_on_hyperelliptic():
    # rank-2 lattice with an elliptic curve E, E.H = 2: H^2 = 4, H.E = 2
    lat = PicardLattice(((4, 2), (2, 0)), basis_labels=("H", "E"))
    H = lat.basis(0)
    rep = check_very_ample(lat, H, H)
    assert not rep.passed
    F = DivisorClass(rep.witness)
    assert lat.square(F) == 0 and lat.pair(F, H) in (1, 2)


def test_morphism_type(r5, r2):
    D = r5.basis(0)
    assert morphism_type(r5, D, D + r5.basis(1)) is MorphismType.TWO_TO_ONE_PLANE
    assert morphism_type(r2, r2.basis(0), r2.basis(1)) is MorphismType.TWO_TO_ONE_PLANE
    lat = make_rank5_lattice((9, 2, 2, 2, 2))
    assert morphism_type(lat, lat.basis(0), lat.basis(0) + lat.basis(1)) is MorphismType.VERY_AMPLE
    assert morphism_report(r5, D, D + r5.basis(1)).criterion is Criterion.TWO_TO_ONE_PLANE


def test_monotonicity_on_generators():
    for params in [(3, 2, 2, 2, 2), (6, 5, 2, 3, 4), (8, 5, 5, 5, 5)]:
        lat = make_rank5_lattice(params)
        D = lat.basis(0)
        gens = [D] + [D + lat.basis(i) for i in range(1, 5)]
        assert all(check_nef_and_ample(lat, D, g).passed for g in gens)
        for a, b in combinations_with_replacement(gens, 2):
            assert check_nef_and_ample(lat, D, a + b).passed


def test_parity_shortcut_matches_enumeration():
    for params in [(3, 2, 2, 2, 2), (5, 4, 3, 2, 2)]:
        lat = make_rank5_lattice(params)
        D = lat.basis(0)
        for N in [D + lat.basis(i) for i in range(1, 5)] + [D * 2 + lat.basis(1)]:
            assert check_base_point_free(lat, D, N).evidence[0].provenance == "parity"
            assert enumerate_slice(SliceQuery(lat, N, 1, 0)).solutions == ()


def test_cache_is_transparent(r5):
    D = r5.basis(0)
    first = check_very_ample(r5, D, D)
    clear_cache()
    assert check_very_ample(r5, D, D) == first
