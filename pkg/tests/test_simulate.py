import math

import numpy as np
import pytest

from ctrlstop.errors import StepTooLarge, UnverifiedGenerator
from ctrlstop.generator import eval_u
from ctrlstop.kink import KinkParams, classify_regime_II
from ctrlstop.quadratic import QuadParams, classify_regime_I
from ctrlstop.simulate import (
    collect_jump_events,
    estimate_value,
    payoff,
    simulate_path,
    strategy_from_generator,
    u_bounded_off_stop,
)

II_B = classify_regime_II(KinkParams(0.5, 1.5))
II_B_MODEL = KinkParams(0.5, 1.5).model()
II_C = classify_regime_II(KinkParams(0.5, 10.0))
II_C_MODEL = KinkParams(0.5, 10.0).model()
I_1 = classify_regime_I(QuadParams(1.0, 1.0, 0.5, 0.0))
I_1_MODEL = QuadParams(1.0, 1.0, 0.5, 0.0).model()


def _in_int_control(rs, x, slack=1e-9):
    return any(a + slack < x < b - slack for a, b in rs.control)


@pytest.mark.parametrize("result,model,x0", [
    (I_1, I_1_MODEL, 2.0 * I_1.beta),
    (II_B, II_B_MODEL, 0.3),
    (II_C, II_C_MODEL, 0.3),
])
def test_jump_accounting(result, model, x0):
    gen = result.generator
    strat = strategy_from_generator(gen)
    events = collect_jump_events(strat, model, x0, "U", n_paths=50, dt=1e-3,
                                 seed=11)
    assert events, "expected at least one jump"
    for _, _, x_from, x_to in events:
        drop = eval_u(gen, x_to) - eval_u(gen, x_from)
        assert abs(drop + abs(x_to - x_from)) < 1e-10
        assert not _in_int_control(gen.regions, x_to)


def test_reseeding_bit_identical():
    strat = strategy_from_generator(II_B.generator)
    a = simulate_path(strat, II_B_MODEL, 0.05, 1e-3, seed=5, flavor="U")
    b = simulate_path(strat, II_B_MODEL, 0.05, 1e-3, seed=5, flavor="U")
    assert np.array_equal(a.states, b.states)
    assert np.array_equal(a.dxi_plus, b.dxi_plus)
    assert a.jumps == b.jumps
    e1 = estimate_value(strat, II_B_MODEL, 1.4, "U", 500, 1e-3, seed=5)
    e2 = estimate_value(strat, II_B_MODEL, 1.4, "U", 500, 1e-3, seed=5)
    assert e1.mean == e2.mean and e1.stderr == e2.stderr
    e3 = estimate_value(strat, II_B_MODEL, 1.4, "U", 500, 1e-3, seed=6)
    assert e3.mean != e1.mean


def test_engine_matches_single_path_record():
    strat = strategy_from_generator(II_B.generator)
    for k in range(4):
        est = estimate_value(strat, II_B_MODEL, 1.4, "V", 1, 1e-3, seed=40 + k)
        rec = simulate_path(strat, II_B_MODEL, 1.4, 1e-3, seed=40 + k, flavor="V")
        assert abs(est.mean - payoff(rec, II_B_MODEL, "V")) < 1e-12


def test_x0_in_stop_set_is_exact():
    strat = strategy_from_generator(II_B.generator)
    x0 = 0.03  # inside the stop band
    est = estimate_value(strat, II_B_MODEL, x0, "V", 100, 1e-3, seed=0)
    assert abs(est.mean - float(II_B_MODEL.g(x0))) < 1e-12
    assert est.stderr < 1e-12


def test_flavor_first_move_in_control_interior():
    # starting inside the control region: stopper first (V) collects g at
    # the pre-jump state; controller first (U) jumps to alpha, pays the
    # jump, and the stopper collects g(alpha)
    strat = strategy_from_generator(II_B.generator)
    alpha = II_B.alpha
    x0 = 0.3
    ev = estimate_value(strat, II_B_MODEL, x0, "V", 10, 1e-3, seed=1)
    assert ev.mean == float(II_B_MODEL.g(x0))
    rec = simulate_path(strat, II_B_MODEL, x0, 1e-3, seed=1, flavor="U")
    assert rec.jumps and rec.jumps[0][0] == 0.0
    assert abs(rec.jumps[0][2] - alpha) < 1e-12
    eu = estimate_value(strat, II_B_MODEL, x0, "U", 10, 1e-3, seed=1)
    want = (alpha - x0) + float(II_B_MODEL.g(alpha))
    assert abs(eu.mean - want) < 1e-12


def test_case_I_confinement():
    # control reflects inside [-beta, beta]; the stop set |x| >= alpha is
    # unreachable after the initial jump
    strat = strategy_from_generator(I_1.generator)
    beta = I_1.beta
    for seed in range(5):
        rec = simulate_path(strat, I_1_MODEL, 2.0 * beta, 1e-2, seed=seed,
                            flavor="U")
        assert rec.truncated and rec.stop_time is None
        assert np.max(np.abs(rec.states)) <= beta + 1e-9


def test_total_variation_bookkeeping():
    strat = strategy_from_generator(II_B.generator)
    rec = simulate_path(strat, II_B_MODEL, 0.05, 1e-3, seed=2, flavor="U")
    tv = rec.total_variation()
    parts = (float(np.sum(rec.dxi_plus)) + float(np.sum(rec.dxi_minus))
             + sum(abs(b - a) for _, a, b in rec.jumps))
    assert abs(tv - parts) < 1e-12
    assert np.all(np.diff(rec.Lambda) >= 0)


def test_step_too_large():
    strat = strategy_from_generator(II_B.generator)
    with pytest.raises(StepTooLarge):
        simulate_path(strat, II_B_MODEL, 0.5, 1.0, seed=0)


def test_unverified_generator_rejected():
    import dataclasses
    bare = dataclasses.replace(II_B.generator, regions=None)
    with pytest.raises(UnverifiedGenerator):
        strategy_from_generator(bare)


def test_u_bounded_off_stop():
    import dataclasses
    assert u_bounded_off_stop(II_B.generator)   # exponential tail
    assert u_bounded_off_stop(I_1.generator)    # complement of S is bounded
    assert not u_bounded_off_stop(dataclasses.replace(II_B.generator,
                                                      regions=None))
