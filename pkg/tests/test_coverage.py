from __future__ import annotations

import pytest
from hypothesis import given, settings, strategies as st

from k3gauss.coverage import (
    CoverageCaps,
    certify_exclusion,
    closed_form_coverage,
    closed_form_genus,
    closed_form_lattice_params,
    closed_form_representations,
    exclusion_h_bound,
    product_family_coverage,
    product_genus,
    product_regime,
    rank2_provenance,
    rank5_family_coverage,
    recertify,
    reevaluate,
    to_intervals,
)
from k3gauss.lattice import genus_of_class, make_rank5_lattice


GRID = [(n, m, t) for n in range(13) for m in range(13) for t in range(13) if n >= m or t >= m - n]


@pytest.mark.parametrize("n,m,t", GRID[::7])
def test_closed_form_matches_lattice(n, m, t):
    g, form, params = closed_form_genus(n, m, t)
    lattice = make_rank5_lattice(closed_form_lattice_params(form, params))
    assert genus_of_class(lattice, lattice.cls("9D+6L+R")) == g


def test_closed_form_base_point():
    assert closed_form_genus(0, 0, 0) == (170, "first", (0, 0, 0))
    lattice = make_rank5_lattice((3, 2, 2, 2, 2))
    assert genus_of_class(lattice, lattice.cls("9D+6L+R")) == 170


def test_closed_form_gaps():
    rep = closed_form_coverage(170, 700)
    assert 170 in rep.achieved and 621 in rep.missing
    # 620 is reachable; its representations are reported rather than pinned
    reps = closed_form_representations(620)
    assert any(reps.values())
    for form, triples in reps.items():
        offset, coeffs = (170, (45, 44, 81)) if form == "first" else (170, (44, 80, 81))
        assert all(offset + sum(c * x for c, x in zip(coeffs, tr)) == 620 for tr in triples)


def test_product_examples():
    assert product_genus(2, 2, 9, 9) == 100
    assert product_regime(2, 2, 9, 9) == 1
    assert product_regime(2, 2, 8, 9) is None  # d1 < 2 g1 + 5
    rep = product_family_coverage(150, 300)
    assert all(reevaluate(p) == g for g, p in rep.achieved.items())
    assert all(product_regime(p["g1"], p["g2"], p["d1"], p["d2"]) for p in rep.achieved.values())


@settings(max_examples=200, deadline=None)
@given(g1=st.integers(2, 10), g2=st.integers(0, 10), d1=st.integers(0, 40), d2=st.integers(0, 40))
def test_product_regimes_need_large_degrees(g1, g2, d1, d2):
    regime = product_regime(g1, g2, d1, d2)
    if regime is not None:
        assert d1 >= 2 * g1 + 5 and d2 >= 7


def test_rank5_witness_for_322():
    rep = rank5_family_coverage(322, 322, CoverageCaps(h=20, param=20), check_stability=False)
    prov = rep.achieved[322]
    assert reevaluate(prov) == 322
    cert = recertify(prov)
    assert cert.certified and cert.genus == 322


def test_321_is_excluded_and_sound():
    ok, derivation = certify_exclusion(321)
    assert ok and derivation["slabs_hitting_g"] == 0
    # independent: caps well past the derived h bound still find nothing
    big = 4 * max(exclusion_h_bound(321, a) for a in range(9, 15))
    rep = rank5_family_coverage(321, 321, CoverageCaps(h=big, param=big), check_stability=False, certify_missing=False)
    assert 321 not in rep.achieved


def test_exclusion_refuses_reachable_genus():
    ok, derivation = certify_exclusion(170)
    assert not ok
    assert reevaluate(derivation["witness"]) == 170


def test_rank2_provenance():
    g, prov = rank2_provenance()
    assert g == 321 == reevaluate(prov)
    assert recertify(prov).certified


def test_cap_monotonicity():
    small = rank5_family_coverage(170, 260, CoverageCaps(h=6, param=5), check_stability=False, certify_missing=False)
    large = rank5_family_coverage(170, 260, CoverageCaps(h=12, param=10), check_stability=False, certify_missing=False)
    assert small.achieved_set <= large.achieved_set


def test_provenance_rechecks():
    rep = rank5_family_coverage(300, 330, CoverageCaps(h=20, param=20), check_stability=False)
    assert rep.missing == [321]
    assert rep.exclusion_certified == {321: True}
    for g, prov in rep.achieved.items():
        assert reevaluate(prov) == g
    for g in (300, 330):
        assert recertify(rep.achieved[g]).genus == g


def test_intervals():
    assert to_intervals([1, 2, 3, 5, 7, 8]) == [[1, 3], [5, 5], [7, 8]]
    assert to_intervals([]) == []


def test_invalid_range():
    with pytest.raises(ValueError):
        closed_form_coverage(10, 5)
