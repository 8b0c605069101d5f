import math
import struct

import numpy as np
import pytest

import catgrad


def test_top_t_ties_prefer_smaller_index():
    q = catgrad.top_t([1.0, -3.0, 3.0, 0.5], 2)
    assert q["indices"] == [1, 2]
    assert q["values"] == [-3.0, 3.0]
    assert catgrad.top_t([0.0, 2.0, 0.0], 3)["indices"] == [1]


def test_measures_match_numpy():
    rng = np.random.default_rng(3)
    for _ in range(50):
        g = rng.standard_t(2, size=int(rng.integers(2, 40)))
        mags = np.sort(np.abs(g))[::-1]
        d = len(g)
        for t in range(1, d + 1):
            assert catgrad.alpha(g.tolist(), t) == pytest.approx((mags[:t] ** 2).sum() / (g**2).sum(), rel=1e-12)
            assert catgrad.beta(g.tolist(), t) == pytest.approx(mags[:t].sum() ** 2 / (t * (g**2).sum()), rel=1e-12)
        assert catgrad.curve(g.tolist())[-1] == pytest.approx(1.0)


def test_uniform_gradient_omega_and_probabilities():
    assert catgrad.optimal_probabilities([1, 1, 1, 1], 2) == [0.5] * 4
    assert catgrad.omega([1, 1, 1, 1], 2) == pytest.approx(0.5)


def test_payload_formulas():
    d = 1000
    b = math.ceil(math.log2(d))
    assert catgrad.payload_bits(d, 7, "sparse", 32) == 7 * (b + 32)
    assert catgrad.payload_bits(d, 7, "sq", 32) == 32 + 7 * b
    assert catgrad.cost("affine:c1=2,c0=5", d, 3) == 2 * 3 * (b + 64) + 5


def test_payload_cost_selects_one():
    g = np.random.default_rng(5).normal(size=64).tolist()
    r = catgrad.select_t(g, "alpha", "payload")
    assert r["budget"] == 1
    assert r["efficiency"] == pytest.approx(r["improvement"] / r["cost"])


def test_frame_round_trip():
    g = [0.0, -2.5, 1.0, 4.0, 0.25]
    frame = catgrad.encode_frame(g, 2, kind="top-t", iteration=9, worker=3, fpp=64)
    magic, it, worker, scheme, entries, fpp = struct.unpack(">4sIHBIB", frame[:16])
    assert (magic, it, worker, scheme, entries, fpp) == (b"CAT\x01", 9, 3, 0, 2, 64)
    out = catgrad.decode_frame(frame, len(g))
    assert out["dense"] == [0.0, -2.5, 0.0, 4.0, 0.0]

    sq = catgrad.decode_frame(catgrad.encode_frame(g, 2, kind="sq"), len(g))
    assert sq["indices"] == [1, 3]
    assert sq["negative"] == [True, False]
    assert sq["magnitude"] == pytest.approx(np.linalg.norm(g))

    with pytest.raises(catgrad.CorruptFrame):
        catgrad.decode_frame(b"XYZ" + frame[3:], len(g))


def test_errors_map_to_python():
    with pytest.raises(catgrad.InvalidBudget):
        catgrad.top_t([1.0, 2.0], 3)
    with pytest.raises(catgrad.ZeroGradient):
        catgrad.sparsify_quantize([0.0, 0.0], 1)
    with pytest.raises(catgrad.ParseError):
        catgrad.scheme_name("sgd")
    assert issubclass(catgrad.ParseError, catgrad.CatgradError)


def test_run_isotropic_quadratic():
    r = catgrad.run(problem="quad-iso:L=1,d=16", scheme="cat-sparse", cost="payload", eps=1e-10, iters=1000)
    assert r["status"] == "target_reached"
    assert r["records"][-1]["budgets"] == []
    assert r["records"][-1]["grad_norm_sq"] <= 1e-10
    bits = [rec["cum_bits"] for rec in r["records"]]
    assert bits == sorted(bits)
