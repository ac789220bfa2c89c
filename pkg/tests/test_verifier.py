import dataclasses

import pytest

from helpers import mutated_generators

from ctrlstop.errors import GridTooCoarse
from ctrlstop.kink import KinkParams, classify_regime_II
from ctrlstop.quadratic import QuadParams, classify_regime_I
from ctrlstop.verify import verify

GRID = 2e-4  # coarser than production for unit-test speed


def _kink(lam):
    p = KinkParams(0.5, lam)
    return classify_regime_II(p).generator, p.model()


def _quad(*args):
    p = QuadParams(*args)
    return classify_regime_I(p).generator, p.model()


CLOSED_FORMS = [
    _kink(1.0), _kink(1.5), _kink(10.0),
    _quad(1.0, 1.0, 0.5, 0.0),        # control-dominant
    _quad(9.9, 1.7, 0.8, 0.2),        # stop-dominant
    _quad(1.0, 0.4, 1.0, 0.0),        # bridged
]


@pytest.mark.parametrize("gen,model", CLOSED_FORMS)
def test_closed_forms_pass(gen, model):
    report = verify(gen, model, grid_step=GRID)
    assert report.verdict, [c.condition_id for c in report.failed()]
    assert not report.failed()


def test_report_serializes():
    gen, model = CLOSED_FORMS[0]
    d = verify(gen, model, grid_step=GRID).to_dict()
    assert d["verdict"] == "pass"
    assert {c["condition"] for c in d["checks"]} >= {
        "continuity", "gradient_bound", "ode_waiting", "ode_control_free",
        "ode_stop_wait", "stop_wait_identity", "kink_slopes",
        "region_structure", "region_definitions"}
    assert "measure zero" in d["footer"]


def test_mutations_all_caught():
    gen, model = _kink(1.5)  # has parabola, chord, tail, kinks
    for name, bad in mutated_generators(gen, seed=3):
        report = verify(bad, model, grid_step=GRID)
        assert not report.verdict, "mutation %r slipped through" % name
        assert report.failed(), name


def test_mutation_targets_expected_condition():
    gen, model = _kink(1.5)
    hits = {}
    for name, bad in mutated_generators(gen, seed=3):
        hits[name] = {c.condition_id for c in verify(bad, model, grid_step=GRID).failed()}
    assert "gradient_bound" in hits["slope_tilt"]
    assert "kink_slopes" in hits["kink_shift"]
    assert "region_definitions" in hits["obstacle_cross"]
    assert "ode_waiting" in hits["ode_perturb"]


def test_grid_too_coarse():
    gen, model = _kink(1.0)
    with pytest.raises(GridTooCoarse):
        verify(gen, model, grid_step=0.25)


def test_extent_must_cover_breakpoints():
    gen, model = _kink(1.0)
    with pytest.raises(ValueError):
        verify(gen, model, grid_step=GRID, extent=1.0)


def test_unclaimed_obstacle_violation_detected():
    # declare an empty stop region for a generator that dips below g
    gen, model = _kink(10.0)
    rs = gen.regions
    bad = dataclasses.replace(
        gen, regions=dataclasses.replace(rs, stop_control=(), kinks=(),
                                         control=(), waiting=((-1e9, 1e9),),
                                         boundary_tags={}))
    report = verify(bad, model, grid_step=GRID)
    assert not report.verdict
    assert {c.condition_id for c in report.failed()} & {
        "region_definitions", "ode_waiting"}
