import json
import math

import numpy as np
from hypothesis import given, settings, strategies as st

from ctrlstop.generator import (
    build_v,
    eval_du,
    eval_du_array,
    eval_u,
    eval_u_array,
    generator_from_dict,
    generator_to_dict,
    second_derivative,
)
from ctrlstop.kink import KinkParams, classify_regime_II
from ctrlstop.quadratic import QuadParams, classify_regime_I

XS = np.linspace(-8.0, 8.0, 501)


def _sample_generators():
    gens = []
    for delta, lam in [(0.5, 1.0), (0.5, 1.5), (0.5, 10.0)]:
        r = classify_regime_II(KinkParams(delta, lam))
        gens.append((r.generator, KinkParams(delta, lam).model()))
    r = classify_regime_I(QuadParams(1.0, 1.0, 0.5, 0.0))
    gens.append((r.generator, QuadParams(1.0, 1.0, 0.5, 0.0).model()))
    return gens


def test_even_symmetry():
    for gen, _ in _sample_generators():
        u = eval_u_array(gen, XS)
        assert np.allclose(u, eval_u_array(gen, -XS), rtol=0, atol=1e-13)
        # derivative is odd away from kinks (one-sided there)
        off = np.ones_like(XS, dtype=bool)
        for c in gen.regions.kinks:
            off &= np.abs(np.abs(XS) - abs(c)) > 1e-12
        du = eval_du_array(gen, XS)[off]
        assert np.allclose(du, -eval_du_array(gen, -XS)[off], rtol=0, atol=1e-13)


def test_scalar_matches_array():
    for gen, _ in _sample_generators():
        u = eval_u_array(gen, XS)
        for i in range(0, len(XS), 50):
            assert eval_u(gen, float(XS[i])) == u[i]


def test_continuity_defect_small():
    for gen, _ in _sample_generators():
        assert gen.continuity_defect() < 1e-10


def test_kink_side_derivatives():
    # case B: parabola meets the slope -1 chord at beta
    r = classify_regime_II(KinkParams(0.5, 1.5))
    beta = r.beta
    assert abs(eval_du(r.generator, beta, "right") + 1.0) < 1e-12
    assert abs(eval_du(r.generator, beta, "left") + 2.0 * 1.5 * beta) < 1e-12
    # case C: symmetric kink at the origin
    rc = classify_regime_II(KinkParams(0.5, 10.0))
    assert abs(eval_du(rc.generator, 0.0, "right") + 1.0) < 1e-12
    assert abs(eval_du(rc.generator, 0.0, "left") - 1.0) < 1e-12


def test_second_derivative_finite_difference():
    gen, _ = _sample_generators()[0]
    for x in (0.1, 0.2, 1.2, 2.0):
        h = 1e-5
        fd = (eval_u(gen, x + h) - 2 * eval_u(gen, x) + eval_u(gen, x - h)) / h**2
        assert abs(second_derivative(gen, x) - fd) < 1e-4


def test_build_v_is_pointwise_max():
    for gen, model in _sample_generators():
        v = build_v(gen, model)
        want = np.maximum(eval_u_array(gen, XS), model.g(XS))
        got = eval_u_array(v, XS)
        assert np.max(np.abs(got - want)) < 1e-12


def test_json_round_trip_exact():
    for gen, _ in _sample_generators():
        blob = json.dumps(generator_to_dict(gen))
        back = generator_from_dict(json.loads(blob))
        assert np.array_equal(eval_u_array(gen, XS), eval_u_array(back, XS))
        assert back.regime == gen.regime
        assert back.regions.kinks == gen.regions.kinks


@given(delta=st.floats(0.1, 5.0), lam=st.floats(0.05, 30.0))
@settings(max_examples=60, deadline=None)
def test_kink_generator_properties(delta, lam):
    r = classify_regime_II(KinkParams(delta, lam))
    gen = r.generator
    # u positive, even, decaying, with |u'| <= 1 + tol away from kinks
    xs = np.linspace(0.0, 6.0, 301)
    u = eval_u_array(gen, xs)
    assert (u > 0).all()
    assert u[-1] < u[0] + 1e-12
    off = np.ones_like(xs, dtype=bool)
    for c in gen.regions.kinks:
        off &= np.abs(xs - c) > 1e-3
    assert np.max(np.abs(eval_du_array(gen, xs)[off])) <= 1.0 + 1e-9
    # round trip preserves samples bit-for-bit
    back = generator_from_dict(json.loads(json.dumps(generator_to_dict(gen))))
    assert np.array_equal(u, eval_u_array(back, xs))


@given(delta=st.floats(0.2, 4.0), kappa=st.floats(0.2, 4.0),
       lam=st.floats(0.05, 4.0), mu=st.floats(0.0, 2.0))
@settings(max_examples=60, deadline=None)
def test_quadratic_generator_properties(delta, kappa, lam, mu):
    r = classify_regime_I(QuadParams(delta, kappa, lam, mu))
    gen = r.generator
    xs = np.linspace(0.0, max(r.alpha, r.beta) + 4.0, 301)
    u = eval_u_array(gen, xs)
    assert np.isfinite(u).all()
    # beyond the control boundary the slope is exactly +1
    far = xs > r.beta + 1e-9
    assert np.max(np.abs(eval_du_array(gen, xs)[far] - 1.0)) < 1e-12
    assert gen.continuity_defect() < 1e-10
