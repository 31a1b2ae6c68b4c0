from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from k3gauss.certify import (
    NoDecomposition,
    certify,
    check_cilomi,
    decomposable_mask,
    decompose,
    decompose_many,
    decomposable_structurally,
    default_generators,
    recheck,
    write_certificate,
)
from k3gauss.lattice import DivisorClass, genus_of_class, make_rank5_lattice


def test_rank2_example(r2):
    cert = certify(r2, r2.cls("11D+L"))
    assert cert.certified and cert.genus == 321
    assert cert.decomposition.B_coefficients == (3, 1)
    assert all(c.passed is not False for c in cert.checks)


def test_rank5_example(r5):
    H = r5.cls("9D+6L+R")
    cert = certify(r5, H)
    assert cert.certified and cert.genus == 170 == genus_of_class(r5, H)
    dec = cert.decomposition
    assert dec.A_indices == (0, 1, 1, 1)
    assert dec.B_coefficients == (0, 0, 1, 0, 0)


@pytest.mark.parametrize("expr", ["3D", "2D"])
def test_refused_small_multiples(r5, expr):
    cert = certify(r5, r5.cls(expr))
    assert not cert.certified and cert.status == "Refused"
    assert "NoDecomposition" in cert.reason and "< 8" in cert.reason
    with pytest.raises(NoDecomposition):
        decompose(r5, r5.cls(expr))


def test_cilomi_rank2(r2):
    D = r2.basis(0)
    checks = check_cilomi(r2, D, [D, D, D, D])
    assert all(c.passed for c in checks)
    assert "vacuous" in checks[-1].detail or "H.A_" in checks[-1].detail


def test_cilomi_rank5(r5):
    D = r5.basis(0)
    A = [D, D + r5.basis(1), D + r5.basis(2), D + r5.basis(3)]
    checks = check_cilomi(r5, D, A)
    assert all(c.passed for c in checks)
    H = A[0] + A[1] + A[2] + A[3]
    assert r5.pair(H, A[1]) == 20
    assert "H.A_2 = 20" in checks[-1].detail


def test_cilomi_reports_failure_without_raising(r5):
    D = r5.basis(0)
    checks = check_cilomi(r5, D, [D, r5.basis(1), D, D])
    named = {c.name[:3]: c for c in checks}
    assert named["(2)"].passed is False
    assert named["(1)"].passed is None


def test_recomposition_property(r5):
    D = r5.basis(0)
    gens = default_generators(r5)
    for expr in ["9D+6L+R", "12D+2L+2R+2S", "20D+3T", "10D"]:
        H = r5.cls(expr)
        dec = decompose(r5, H)
        assert dec.A[0] == D
        assert dec.A[0] * 2 + dec.A[1] * 2 + dec.A[2] * 2 + dec.A[3] * 2 + dec.B == H
        assert sum((g * c for g, c in zip(gens, dec.B_coefficients)), DivisorClass((0,) * 5)) == dec.B
        assert min(dec.B_coefficients) >= 0


def test_certify_is_deterministic(r5):
    H = r5.cls("12D+2L+2R+2S")
    assert certify(r5, H).to_dict() == certify(r5, H).to_dict()


coeff_vectors = st.tuples(*[st.integers(0, 6) for _ in range(4)])


@settings(max_examples=40, deadline=None)
@given(
    params=st.integers(3, 7).flatmap(lambda h: st.tuples(st.just(h), *[st.integers(2, h - 1)] * 4)),
    a=st.integers(0, 16),
    rest=st.lists(coeff_vectors, min_size=1, max_size=6),
)
def test_mask_agrees_with_decompose_many(params, a, rest):
    lat = make_rank5_lattice(params)
    Hs = [DivisorClass((a,) + r) for r in rest]
    mask = decomposable_mask(lat, Hs)
    many = decompose_many(lat, Hs)
    assert list(mask) == [not isinstance(m, NoDecomposition) for m in many]
    for H, ok in zip(Hs, mask):
        assert bool(ok) == decomposable_structurally(H.coords[1:], a)


@pytest.mark.parametrize("a", range(9, 15))
def test_family_completeness(a):
    # small grid; every class passing the parity rule must certify
    lat = make_rank5_lattice((3, 2, 2, 2, 2))
    hits = 0
    for s in range(0, 4):
        for t in range(0, 3):
            H = DivisorClass((a, s, t, 0, 0))
            if s + t <= a - 2 and (s % 2) + (t % 2) <= a - 8:
                cert = certify(lat, H)
                assert cert.certified, cert.reason
                hits += 1
    assert hits > 0


def test_recheck_round_trip(tmp_path, r5):
    cert = certify(r5, r5.cls("9D+6L+R"))
    path = tmp_path / "cert.json"
    write_certificate(cert, path, {"command": "certify"})
    res = recheck(path)
    assert res.ok and res.identical and res.status == "Certified"

    doc = json.loads(path.read_text())
    doc["certificate"]["genus"] = 171
    path.write_text(json.dumps(doc))
    res = recheck(path)
    assert not res.identical and res.first_difference == "genus"


def test_refused_certificate_rechecks_as_refused(tmp_path, r5):
    path = tmp_path / "c.json"
    write_certificate(certify(r5, r5.cls("3D")), path)
    res = recheck(path)
    assert res.identical and not res.ok and res.status == "Refused"


def test_mask_returns_bool_array(r5):
    mask = decomposable_mask(r5, [r5.cls("9D+6L+R"), r5.cls("3D")])
    assert isinstance(mask, np.ndarray) and mask.tolist() == [True, False]
