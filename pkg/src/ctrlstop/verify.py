"""Grid audit of a candidate generator against the region-wise operator
conditions, the gradient bound, and the kink slope patterns.

Gating checks (they decide the verdict):
  continuity, gradient_bound, ode_waiting, ode_control_free, ode_stop_wait,
  stop_wait_identity, kink_slopes, region_structure, region_definitions.
The four-regime sign table from the heuristic derivation is reported as
informative rows only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GridTooCoarse
from .generator import (
    Generator,
    RegionSet,
    eval_du,
    eval_du_array,
    eval_d2u_array,
    eval_u_array,
    extract_regions,
    in_interior,
    in_intervals,
    _merge_intervals,
)
from .model import GameModel

FOOTER = ("Almost-everywhere conditions are audited on a finite grid; "
          "violations on sets of measure zero are undetectable in principle.")


@dataclass(frozen=True)
class ConditionCheck:
    condition_id: str
    region: str
    worst_residual: float
    worst_location: float
    passed: bool
    gating: bool = True
    note: str = ""


@dataclass(frozen=True)
class VerificationReport:
    checks: tuple
    grid_step: float
    extent: float
    tol: float
    verdict: bool
    footer: str = FOOTER

    def failed(self):
        return [c for c in self.checks if c.gating and not c.passed]

    def to_dict(self):
        return {
            "verdict": "pass" if self.verdict else "fail",
            "grid": {"step": self.grid_step, "extent": self.extent, "tol": self.tol},
            "checks": [
                {"condition": c.condition_id, "region": c.region,
                 "worst_residual": c.worst_residual,
                 "worst_location": c.worst_location,
                 "passed": bool(c.passed), "gating": c.gating, "note": c.note}
                for c in self.checks
            ],
            "footer": self.footer,
        }


def _interval_difference(minuend, subtrahend):
    """Set difference of interval unions (closed-interval bookkeeping)."""
    out = list(minuend)
    for sa, sb in subtrahend:
        nxt = []
        for a, b in out:
            if sb <= a or sa >= b:
                nxt.append((a, b))
                continue
            if sa > a:
                nxt.append((a, sa))
            if sb < b:
                nxt.append((sb, b))
        out = nxt
    return tuple((a, b) for a, b in out if b > a)


def _worst(mask, xs, values):
    """Largest |value| over the mask with its location; (0, nan) if empty."""
    if not mask.any():
        return 0.0, float("nan")
    vals = values[mask]
    k = int(np.argmax(np.abs(vals)))
    return float(np.abs(vals[k])), float(xs[mask][k])


def verify(gen: Generator, model: GameModel, grid_step: float = 1e-4,
           extent: float = None, tol: float = None,
           fd_sourced: bool = False) -> VerificationReport:
    if grid_step <= 0:
        raise ValueError("grid_step must be positive")
    finite_bps = [abs(v) for v in gen.breakpoints.values() if math.isfinite(v)]
    needed = (max(finite_bps) if finite_bps else 0.0) + 3.0
    if extent is None:
        extent = needed
    if extent < needed - 1e-12:
        raise ValueError("extent %g does not cover breakpoints + 3 (%g)"
                         % (extent, needed))

    regions = gen.regions if gen.regions is not None else extract_regions(gen, model)

    n = int(round(2 * extent / grid_step)) + 1
    xs = np.linspace(-extent, extent, n)
    u = eval_u_array(gen, xs)
    du = eval_du_array(gen, xs)
    d2u = eval_d2u_array(gen, xs)
    g = model.g(xs)
    lu_h = model.apply_L(xs, u, du, d2u) + model.h(xs)
    lg_h = model.apply_L(xs, g, model.dg(xs), model.d2g(xs)) + model.h(xs)
    scale = 1.0 + float(np.max(np.abs(u)))

    if tol is None:
        tol = 50.0 * grid_step * grid_step * scale if fd_sourced else 1e-8

    # clip regions to the grid window for coverage accounting
    def clip(ivs):
        return tuple((max(a, -extent), min(b, extent)) for a, b in ivs
                     if b > -extent and a < extent)

    stop = regions.stop
    control_minus_stop = _interval_difference(regions.control, stop)

    named = {
        "waiting": clip(regions.waiting),
        "control": clip(regions.control),
        "stop_wait": clip(regions.stop_wait),
        "stop_control": clip(regions.stop_control),
    }
    for name, ivs in named.items():
        for a, b in ivs:
            count = int(np.count_nonzero((xs >= a) & (xs <= b)))
            if count < 8:
                raise GridTooCoarse(
                    "region %s interval [%g, %g] holds only %d grid points"
                    % (name, a, b, count))

    margin = grid_step  # open-interval rows are checked at interior points
    kink_margin = max(grid_step, 1e-12)
    off_kinks = np.ones_like(xs, dtype=bool)
    for c in regions.kinks:
        off_kinks &= np.abs(xs - c) > kink_margin

    checks = []

    # continuity at breakpoints
    cont = gen.continuity_defect()
    checks.append(ConditionCheck("continuity", "breakpoints", cont, float("nan"),
                                 cont <= 1e-10))

    # global gradient bound off the kink set
    grad_excess = np.abs(du) - 1.0
    wr, wl = _worst(off_kinks, xs, np.maximum(grad_excess, 0.0))
    checks.append(ConditionCheck("gradient_bound", "off kinks", wr, wl, wr <= tol))

    # operator rows
    m_wait = in_interior(clip(regions.waiting), xs, margin)
    wr, wl = _worst(m_wait, xs, lu_h)
    checks.append(ConditionCheck("ode_waiting", "int W", wr, wl, wr <= tol))

    m_cfree = in_interior(clip(control_minus_stop), xs, margin)
    neg = np.maximum(-lu_h, 0.0)
    wr, wl = _worst(m_cfree, xs, neg)
    checks.append(ConditionCheck("ode_control_free", "int (C \\ S)", wr, wl, wr <= tol))

    m_sw = in_interior(clip(regions.stop_wait), xs, margin)
    pos = np.maximum(lu_h, 0.0)
    wr, wl = _worst(m_sw, xs, pos)
    checks.append(ConditionCheck("ode_stop_wait", "int S_W", wr, wl, wr <= tol))

    wr_id, wl_id = _worst(m_sw, xs, lu_h - lg_h)
    wr_ug, wl_ug = _worst(m_sw, xs, u - g)
    wr2 = max(wr_id, wr_ug)
    checks.append(ConditionCheck("stop_wait_identity", "int S_W", wr2,
                                 wl_id if wr_id >= wr_ug else wl_ug,
                                 wr2 <= tol * scale))

    m_sc = in_interior(clip(regions.stop_control), xs, margin) & off_kinks
    if m_sc.any():
        note = "Lu+h range [%.3g, %.3g] (unconstrained)" % (
            float(np.min(lu_h[m_sc])), float(np.max(lu_h[m_sc])))
    else:
        note = "empty"
    checks.append(ConditionCheck("stop_control_free", "int S_C \\ B", 0.0,
                                 float("nan"), True, gating=False, note=note))

    # kink slope patterns: either u'-(c)=1, u'+(c)<1 or u'-(c)>-1, u'+(c)=-1
    worst_kink, worst_c, ok = 0.0, float("nan"), True
    for c in regions.kinks:
        dl = eval_du(gen, c, "left")
        dr = eval_du(gen, c, "right")
        pat_a = abs(dl - 1.0) <= tol and dr < 1.0 - tol
        pat_b = abs(dr + 1.0) <= tol and dl > -1.0 + tol
        if not (pat_a or pat_b):
            ok = False
            mism = min(abs(dl - 1.0), abs(dr + 1.0))
            if mism > worst_kink:
                worst_kink, worst_c = mism, c
    checks.append(ConditionCheck("kink_slopes", "B", worst_kink, worst_c, ok))

    # region structure: B inside S_C inside C, finite unions, full cover
    ok = True
    worst_loc = float("nan")
    for c in regions.kinks:
        if not in_intervals(regions.stop_control, np.array([c]), slack=tol)[0]:
            ok, worst_loc = False, c
    for a, b in regions.stop_control:
        pts = np.array([max(a, -extent), min(b, extent)])
        if not in_intervals(regions.control, pts, slack=tol).all():
            ok, worst_loc = False, a
    if max(len(regions.waiting), len(regions.control), len(regions.stop_wait),
           len(regions.stop_control), len(regions.kinks)) > 100:
        ok = False
    covered = in_intervals(clip(_merge_intervals(
        list(regions.waiting) + list(regions.control)
        + list(regions.stop_wait) + list(regions.stop_control))), xs, slack=tol)
    uncovered = float(np.mean(~covered))
    if uncovered > 0.0:
        ok = False
        worst_loc = float(xs[~covered][0])
    checks.append(ConditionCheck("region_structure", "B in S_C in C; cover",
                                 uncovered, worst_loc, ok))

    # regions must match u: strict u < g only inside the claimed S_C
    below = (g - u) > tol * scale
    outside_sc = ~in_intervals(regions.stop_control, xs, slack=margin)
    bad = below & outside_sc
    wr, wl = _worst(bad, xs, (g - u))
    checks.append(ConditionCheck("region_definitions", "{u<g} in S_C", wr, wl,
                                 not bad.any()))

    # informative: four-regime sign table from the heuristic derivation
    strict = 1e-6  # strict inequalities reported with a soft margin
    table = [
        ("table_WW", m_wait,
         np.maximum.reduce([np.abs(lu_h), np.abs(du) - 1.0 + strict, g - u + strict])),
        ("table_CW", m_cfree,
         np.maximum.reduce([-lu_h, np.abs(np.abs(du) - 1.0), g - u + strict])),
        ("table_WS", m_sw,
         np.maximum.reduce([lu_h, np.abs(du) - 1.0 + strict, np.abs(u - g)])),
        ("table_CS", m_sc,
         np.maximum.reduce([np.abs(np.abs(du) - 1.0), u - g])),
    ]
    for cid, mask, resid in table:
        wr, wl = _worst(mask, xs, np.maximum(resid, 0.0))
        checks.append(ConditionCheck(cid, "heuristic table", wr, wl,
                                     wr <= max(tol, strict), gating=False))

    verdict = all(c.passed for c in checks if c.gating)
    return VerificationReport(tuple(checks), grid_step, extent, tol, verdict)
