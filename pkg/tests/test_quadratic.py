import math

import numpy as np
import pytest

from ctrlstop.errors import InvalidModel, RegimeGap, RegimeOverlap
from ctrlstop.generator import eval_u, eval_du
from ctrlstop.quadratic import (
    CASE1,
    CASE2,
    CASE3,
    CASE4,
    QuadParams,
    classify_regime_I,
    solve_case1,
    solve_case2,
    solve_case4,
)

# frozen oracle for delta=1, kappa=1, lam=0.5, mu=0: bisection on the
# reflection boundary equation with step halving down to 1e-15
BETA_I1 = 1.1551949767221508
ALPHA_I1 = 2.165573213077531
U0_I1 = 0.6239161197869267


def _case1_eq(p, b):
    # independent transcription of the reflection-boundary equation
    r = math.sqrt(2.0 * p.delta)
    return math.tanh(r * b) - p.delta * (2.0 * p.kappa * b - p.delta) / (p.kappa * r)


def _case2_eq(p, a):
    r = math.sqrt(2.0 * p.delta)
    dl = p.delta * p.lam - p.kappa
    den = p.delta * dl * a * a - (p.kappa + p.delta * p.mu)
    return math.tanh(r * a) - r * dl * a / den


def _case3_eq(p, a):
    r = math.sqrt(2.0 * p.delta)
    dl = p.delta * p.lam - p.kappa
    den = p.delta * dl * a * a - (p.kappa + p.delta * p.mu)
    return math.tanh(r * a) - p.delta * (p.delta - 2.0 * p.kappa * a) / (r * den)


def test_case1_frozen_oracle():
    p = QuadParams(1.0, 1.0, 0.5, 0.0)
    r = classify_regime_I(p)
    assert r.tag == CASE1
    assert abs(r.beta - BETA_I1) < 1e-12
    assert abs(r.alpha - ALPHA_I1) < 1e-11
    assert abs(eval_u(r.generator, 0.0) - U0_I1) < 1e-12
    assert abs(_case1_eq(p, r.beta)) < 1e-12
    assert max(r.residuals.values()) < 1e-12


def test_case1_structure():
    p = QuadParams(1.0, 1.0, 0.5, 0.0)
    r = classify_regime_I(p)
    # order fences and unit-slope tail beyond the reflection boundary
    assert r.beta > p.delta / (2.0 * p.kappa)
    assert r.alpha > max(r.beta, 1.0 / (2.0 * p.lam))
    assert abs(eval_du(r.generator, r.beta + 1.0) - 1.0) < 1e-14
    # stopping boundary: u crosses the obstacle exactly there
    assert abs(eval_u(r.generator, r.alpha) - p.lam * r.alpha**2) < 1e-12


def test_case2_targeted():
    p = QuadParams(9.9, 1.7, 0.8, 0.2)
    r = classify_regime_I(p)
    assert r.tag == CASE2
    assert abs(_case2_eq(p, r.alpha)) < 1e-12
    assert p.s_star < r.alpha <= 1.0 / (2.0 * p.lam) * (1 + 1e-12)
    # beyond 1/(2 lam) the generator is the affine |x| - 1/(2 lam) + 1/(4 lam)
    half = 1.0 / (2.0 * p.lam)
    for x in (half + 0.3, half + 2.0):
        want = x - half + 1.0 / (4.0 * p.lam)
        assert abs(eval_u(r.generator, x) - want) < 1e-12
    # obstacle contact on the stop-from-waiting band
    mid = 0.5 * (r.alpha + half)
    assert abs(eval_u(r.generator, mid) - p.lam * mid * mid) < 1e-12


def test_case3_targeted():
    p = QuadParams(1.0, 0.4, 1.0, 0.0)
    r = classify_regime_I(p)
    assert r.tag == CASE3
    assert r.alpha == r.beta
    assert abs(_case3_eq(p, r.alpha)) < 1e-12
    t = p.delta / (2.0 * p.kappa)
    s = p.s_star
    lo, hi = (t, s) if t < s else (s, t)
    assert lo < r.alpha < hi
    if t < s:
        assert 1.0 / (2.0 * p.lam) < t
    else:
        assert r.alpha > 1.0 / (2.0 * p.lam)


def test_boundary_dl_zero_mu_zero():
    # delta*lam = kappa with mu = 0: the bridged-case residual degenerates
    # to the reflection-boundary equation and u touches the obstacle exactly
    # at the single boundary alpha = beta
    p = QuadParams(4.0, 0.25, 0.0625, 0.0)
    r = classify_regime_I(p)
    assert r.tag == CASE3 and r.alpha == r.beta
    assert abs(_case1_eq(p, r.alpha)) < 1e-12
    assert abs(eval_u(r.generator, r.alpha) - p.lam * r.alpha**2) < 1e-12
    # the map is continuous across the boundary
    for lam in (0.0625 * (1 - 1e-9), 0.0625 * (1 + 1e-9)):
        rr = classify_regime_I(QuadParams(4.0, 0.25, lam, 0.0))
        assert abs(rr.alpha - r.alpha) < 1e-6
    # with mu > 0 the control-dominant case owns delta*lam = kappa
    assert classify_regime_I(QuadParams(4.0, 0.25, 0.0625, 0.5)).tag == CASE1


def test_case4_knife_edge():
    d, k = 1.0, 1.0
    t = d / (2.0 * k)
    lam = k / d + k / (d * d * t * t)
    p = QuadParams(d, k, lam, 0.0)
    r = classify_regime_I(p)
    assert r.tag == CASE4
    assert r.alpha == r.beta == t
    # explicit generator: u(x) = (kappa/delta) x^2 + (kappa + delta mu)/delta^2 inside
    assert abs(eval_u(r.generator, 0.2) - (k / d * 0.04 + k / (d * d))) < 1e-12


def _draw(rng, case):
    if case == CASE1:
        delta = rng.uniform(0.3, 3.0)
        kappa = rng.uniform(0.3, 3.0)
        lam = rng.uniform(0.05, 0.9) * kappa / delta  # dl < 0 favours case 1
        mu = rng.uniform(0.0, 1.0)
    elif case == CASE2:
        delta = rng.uniform(8.0, 12.0)
        kappa = rng.uniform(1.2, 2.2)
        lam = rng.uniform(0.6, 1.0)
        mu = rng.uniform(0.05, 0.4)
    else:
        delta = rng.uniform(0.6, 2.0)
        kappa = rng.uniform(0.2, 0.8)
        lam = rng.uniform(0.8, 2.0)
        mu = rng.uniform(0.0, 0.3)
    return QuadParams(delta, kappa, lam, mu)


@pytest.mark.parametrize("case,eq", [(CASE1, _case1_eq), (CASE2, _case2_eq),
                                     (CASE3, _case3_eq)])
def test_random_in_regime_residuals(case, eq):
    rng = np.random.default_rng(hash(case) % 2**32)
    found = 0
    for _ in range(2000):
        p = _draw(rng, case)
        r = classify_regime_I(p)
        if r.tag != case:
            continue
        found += 1
        root = r.beta if case == CASE1 else r.alpha
        assert abs(eq(p, root)) < 1e-12
        if case == CASE1:
            assert r.beta > p.delta / (2.0 * p.kappa)
            assert r.alpha > 1.0 / (2.0 * p.lam)
        elif case == CASE2:
            assert p.s_star < r.alpha <= (1.0 / (2.0 * p.lam)) * (1 + 1e-12)
        if found >= 25:
            break
    assert found >= 25, "sampler failed to reach regime %s" % case


def test_classification_is_exclusive():
    rng = np.random.default_rng(7)
    for _ in range(300):
        p = QuadParams(rng.uniform(0.2, 10.0), rng.uniform(0.2, 4.0),
                       rng.uniform(0.05, 4.0), rng.uniform(0.0, 2.0))
        r = classify_regime_I(p)  # raises RegimeGap/RegimeOverlap on failure
        assert r.tag in (CASE1, CASE2, CASE3, CASE4)


def test_not_applicable_branches():
    # dl <= 0 rules out case 2
    assert solve_case2(QuadParams(1.0, 2.0, 1.0, 0.0)) is None
    # params well inside case 3 are rejected by case 1's applicability test
    assert solve_case1(QuadParams(1.0, 0.4, 1.0, 0.0)) is None
    # knife edge detection rejects generic parameters
    assert solve_case4(QuadParams(1.0, 1.0, 0.5, 0.0)) is None


def test_invalid_params():
    with pytest.raises(InvalidModel):
        QuadParams(0.0, 1.0, 1.0)
    with pytest.raises(InvalidModel):
        QuadParams(1.0, 1.0, 1.0, -0.1)
