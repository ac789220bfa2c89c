"""Shared test utilities: seeded generator mutations that a correct
verifier must reject, plus small parameter samplers."""

import dataclasses
import math

import numpy as np

from ctrlstop.generator import (
    AffineAbs,
    Exponential,
    Generator,
    Piece,
    Quadratic,
)


def _replace_piece(gen, idx, form):
    pieces = list(gen.pieces)
    p = pieces[idx]
    pieces[idx] = Piece(p.lo, p.hi, form)
    return dataclasses.replace(gen, pieces=tuple(pieces))


def _find_piece(gen, cls):
    for i, p in enumerate(gen.pieces):
        if isinstance(p.form, cls):
            return i, p.form
    raise AssertionError("no %s piece in generator" % cls.__name__)


def mutated_generators(gen, seed=0):
    """Six labelled corruptions of a case-B style generator (parabola +
    chord + exponential tail with a kink set)."""
    rng = np.random.default_rng(seed)
    eps = float(1e-3 * (1.0 + 0.5 * rng.random()))
    out = []

    # 1. value shift: break continuity/obstacle contact on the first piece
    i, form = _find_piece(gen, Quadratic)
    out.append(("value_shift", _replace_piece(gen, i, dataclasses.replace(form, c=form.c + eps))))

    # 2. slope tilt: violate the unit gradient bound on the chord
    i, form = _find_piece(gen, AffineAbs)
    out.append(("slope_tilt", _replace_piece(gen, i, dataclasses.replace(form, slope=1.05 * form.slope))))

    # 3. region mislabel: swap waiting and stop-from-waiting
    rs = gen.regions
    swapped = dataclasses.replace(rs, waiting=rs.stop_wait, stop_wait=rs.waiting)
    out.append(("region_mislabel", dataclasses.replace(gen, regions=swapped)))

    # 4. kink shift: claim the kinks sit slightly off their true location
    moved = dataclasses.replace(rs, kinks=tuple(c + 0.01 for c in rs.kinks))
    out.append(("kink_shift", dataclasses.replace(gen, regions=moved)))

    # 5. obstacle crossing: lower the tail so u dips below g outside S_C
    i, form = _find_piece(gen, Exponential)
    out.append(("obstacle_cross", _replace_piece(
        gen, i, dataclasses.replace(form, big_a=form.big_a * (1.0 - eps)))))

    # 6. ODE perturbation: change the tail decay rate but keep continuity,
    # so only the operator condition in the waiting region breaks
    i, form = _find_piece(gen, Exponential)
    alpha = gen.pieces[i].lo
    d2 = form.delta * 1.02
    a2 = form.big_a * math.exp((math.sqrt(2.0 * d2) - math.sqrt(2.0 * form.delta)) * alpha)
    out.append(("ode_perturb", _replace_piece(gen, i, Exponential(a2, d2))))

    return out
