"""Piecewise representation of candidate value functions (generators).

A generator u is even, so only the x >= 0 half is stored as an ordered list of
closed-form pieces; evaluation mirrors through |x| and flips the derivative
sign on the negative axis.  Five closed forms cover every case produced by the
solvers: quadratic, cosh-plus-quadratic, affine-in-|x| with unit slope,
decaying exponential, and constant.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .errors import AmbiguousRegion, AtBreakpoint, CrossingNotBracketed
from .model import GameModel, G_QUADRATIC

# Clamp for exponential arguments; cosh overflows just above 710.
EXP_CLAMP = 700.0

REFLECTING = "reflecting"
REPELLING = "repelling"


def _clamped(arg):
    return np.clip(arg, -EXP_CLAMP, EXP_CLAMP)


# ---------------------------------------------------------------------------
# piece forms (defined for the stored half-line y >= 0)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Quadratic:
    """a*y^2 + c"""
    a: float
    c: float

    def val(self, y):
        return self.a * y * y + self.c

    def d1(self, y):
        return 2.0 * self.a * y

    def d2(self, y):
        return 2.0 * self.a * np.ones_like(np.asarray(y, dtype=float))


@dataclass(frozen=True)
class CoshQuadratic:
    """A*cosh(sqrt(2 delta) y) + (kappa/delta) y^2 + (kappa + delta*mu)/delta^2"""
    big_a: float
    delta: float
    kappa: float
    mu: float

    @property
    def rate(self):
        return math.sqrt(2.0 * self.delta)

    @property
    def const(self):
        return (self.kappa + self.delta * self.mu) / (self.delta * self.delta)

    def val(self, y):
        r = self.rate
        return (self.big_a * np.cosh(_clamped(r * y))
                + (self.kappa / self.delta) * y * y + self.const)

    def d1(self, y):
        r = self.rate
        return self.big_a * r * np.sinh(_clamped(r * y)) + 2.0 * (self.kappa / self.delta) * y

    def d2(self, y):
        r = self.rate
        return (self.big_a * r * r * np.cosh(_clamped(r * y))
                + 2.0 * self.kappa / self.delta) * np.ones_like(np.asarray(y, dtype=float))


@dataclass(frozen=True)
class AffineAbs:
    """slope*|x| + c with slope = +1 or -1 (stored half: slope*y + c)"""
    slope: float
    c: float

    def val(self, y):
        return self.slope * np.asarray(y, dtype=float) + self.c

    def d1(self, y):
        return self.slope * np.ones_like(np.asarray(y, dtype=float))

    def d2(self, y):
        return np.zeros_like(np.asarray(y, dtype=float))


@dataclass(frozen=True)
class Exponential:
    """A*exp(-sqrt(2 delta) y)"""
    big_a: float
    delta: float

    @property
    def rate(self):
        return math.sqrt(2.0 * self.delta)

    def val(self, y):
        return self.big_a * np.exp(_clamped(-self.rate * y))

    def d1(self, y):
        return -self.rate * self.big_a * np.exp(_clamped(-self.rate * y))

    def d2(self, y):
        return 2.0 * self.delta * self.big_a * np.exp(_clamped(-self.rate * y))


@dataclass(frozen=True)
class Constant:
    c: float

    def val(self, y):
        return self.c * np.ones_like(np.asarray(y, dtype=float))

    def d1(self, y):
        return np.zeros_like(np.asarray(y, dtype=float))

    def d2(self, y):
        return np.zeros_like(np.asarray(y, dtype=float))


FORM_NAMES = {
    Quadratic: "quadratic",
    CoshQuadratic: "cosh_quadratic",
    AffineAbs: "affine_abs",
    Exponential: "exponential",
    Constant: "constant",
}
FORM_BY_NAME = {name: cls for cls, name in FORM_NAMES.items()}


@dataclass(frozen=True)
class Piece:
    lo: float
    hi: float
    form: object

    def __post_init__(self):
        if not (self.hi > self.lo):
            raise ValueError("piece interval is empty")


# ---------------------------------------------------------------------------
# regions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RegionSet:
    """Full-line decomposition: waiting W, control C, stopping S_W (u=g) and
    S_C (closure of {u<g}), kink set B, and reflecting/repelling tags for the
    finite boundary points of C (kinks included, always repelling)."""
    waiting: tuple
    control: tuple
    stop_wait: tuple
    stop_control: tuple
    kinks: tuple
    boundary_tags: dict = field(default_factory=dict)

    @property
    def stop(self):
        return _merge_intervals(list(self.stop_wait) + list(self.stop_control))


def _merge_intervals(ivs, gap_tol=1e-12):
    if not ivs:
        return ()
    ivs = sorted((float(a), float(b)) for a, b in ivs)
    out = [list(ivs[0])]
    for a, b in ivs[1:]:
        if a <= out[-1][1] + gap_tol:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return tuple((a, b) for a, b in out)


def _mirror_intervals(half_ivs, join_tol=1e-12):
    """Reflect half-line intervals to the full line, merging across 0."""
    full = []
    for a, b in half_ivs:
        full.append((a, b))
        full.append((-b, -a))
    return _merge_intervals(full, gap_tol=join_tol)


def in_intervals(ivs, x, slack=0.0):
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape, dtype=bool)
    for a, b in ivs:
        out |= (x >= a - slack) & (x <= b + slack)
    return out


def in_interior(ivs, x, margin=0.0):
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape, dtype=bool)
    for a, b in ivs:
        out |= (x > a + margin) & (x < b - margin)
    return out


# ---------------------------------------------------------------------------
# generator
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Generator:
    pieces: tuple          # Piece list covering [0, inf), abutting
    breakpoints: dict = field(default_factory=dict)
    regions: Optional[RegionSet] = None
    regime: Optional[str] = None

    def __post_init__(self):
        ps = tuple(self.pieces)
        if not ps:
            raise ValueError("generator needs at least one piece")
        if abs(ps[0].lo) > 1e-14:
            raise ValueError("pieces must start at 0")
        for left, right in zip(ps, ps[1:]):
            if abs(left.hi - right.lo) > 1e-12 * (1.0 + abs(left.hi)):
                raise ValueError("pieces must abut without gaps")
        if not math.isinf(ps[-1].hi):
            raise ValueError("last piece must extend to +inf")
        object.__setattr__(self, "pieces", ps)
        object.__setattr__(self, "_los", [p.lo for p in ps])

    # piece lookup on the stored half-line
    def _piece_at(self, y, side="right"):
        los = self._los
        k = bisect_right(los, y) - 1
        if side == "left" and k > 0 and y <= los[k] + 0.0:
            if y == los[k]:
                k -= 1
        return self.pieces[max(k, 0)]

    def junctions(self):
        """Internal junction points of the stored half (excluding 0 and inf)."""
        return [p.lo for p in self.pieces[1:]]

    def continuity_defect(self):
        worst = 0.0
        for left, right in zip(self.pieces, self.pieces[1:]):
            p = right.lo
            d = abs(float(left.form.val(p)) - float(right.form.val(p)))
            worst = max(worst, d / (1.0 + abs(float(right.form.val(p)))))
        return worst


def eval_u(gen: Generator, x: float) -> float:
    y = abs(float(x))
    return float(gen._piece_at(y).form.val(y))


def eval_du(gen: Generator, x: float, side: str = "right") -> float:
    """One-sided derivative; side is 'left' or 'right' (of x, on the full line)."""
    x = float(x)
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    if x > 0.0 or (x == 0.0 and side == "right"):
        return float(gen._piece_at(x, side=side).form.d1(x))
    # u(x) = f(-x) for x < 0, so u'(x, left) = -f'(-x, right) and vice versa
    y = -x
    flip = {"left": "right", "right": "left"}[side]
    return -float(gen._piece_at(y, side=flip).form.d1(y))


def second_derivative(gen: Generator, x: float) -> float:
    """Analytic u'' away from breakpoints (used for the operator residuals)."""
    y = abs(float(x))
    bps = gen.junctions()
    if any(abs(y - p) < 1e-12 * (1.0 + abs(p)) for p in bps):
        raise AtBreakpoint("second derivative requested at a breakpoint: %r" % (x,))
    if y < 1e-12 and abs(float(gen.pieces[0].form.d1(0.0))) > 1e-12:
        raise AtBreakpoint("second derivative requested at the kink 0")
    return float(gen._piece_at(y).form.d2(y))


# vectorized evaluation -----------------------------------------------------

def _piece_index_array(gen: Generator, y):
    los = np.asarray(gen._los)
    idx = np.searchsorted(los, y, side="right") - 1
    return np.clip(idx, 0, len(gen.pieces) - 1)


def eval_u_array(gen: Generator, xs):
    xs = np.asarray(xs, dtype=float)
    y = np.abs(xs)
    idx = _piece_index_array(gen, y)
    out = np.empty_like(y)
    for k, piece in enumerate(gen.pieces):
        m = idx == k
        if m.any():
            out[m] = piece.form.val(y[m])
    return out


def eval_du_array(gen: Generator, xs):
    """Derivative on the full line; at junction points the right-side piece of
    |x| is used (callers avoid breakpoints for strict checks)."""
    xs = np.asarray(xs, dtype=float)
    y = np.abs(xs)
    idx = _piece_index_array(gen, y)
    out = np.empty_like(y)
    for k, piece in enumerate(gen.pieces):
        m = idx == k
        if m.any():
            out[m] = piece.form.d1(y[m])
    return np.where(xs < 0.0, -out, out)


def eval_d2u_array(gen: Generator, xs):
    xs = np.asarray(xs, dtype=float)
    y = np.abs(xs)
    idx = _piece_index_array(gen, y)
    out = np.empty_like(y)
    for k, piece in enumerate(gen.pieces):
        m = idx == k
        if m.any():
            out[m] = piece.form.d2(y[m])
    return out


# ---------------------------------------------------------------------------
# v = max(u, g)
# ---------------------------------------------------------------------------

def _g_half_pieces(model: GameModel):
    if model.g_kind == G_QUADRATIC:
        return [Piece(0.0, math.inf, Quadratic(model.lam, 0.0))]
    return [Piece(0.0, 1.0, Quadratic(-model.lam, model.lam)),
            Piece(1.0, math.inf, Constant(0.0))]


def _tail_probe(lo):
    return max(3.0, 2.0 * abs(lo)) + abs(lo)


def _find_crossings(f, lo, hi, n=65):
    """Roots of f on (lo, hi) located from a sign scan; f has finitely many
    simple crossings on each elementary interval for the forms in play."""
    if math.isinf(hi):
        hi = _tail_probe(lo)
        # expand until the far sign settles (handles far-out crossings)
        for _ in range(60):
            if f(lo + 1e-9 * (1 + abs(lo))) * f(hi) < 0 or hi > 1e12:
                break
            grid = np.linspace(lo, hi, n)
            vals = np.array([f(t) for t in grid])
            if np.any(np.diff(np.sign(vals)) != 0):
                break
            hi *= 2.0
    grid = np.linspace(lo, hi, n)
    vals = np.array([f(t) for t in grid])
    roots = []
    sgn = np.sign(vals)
    for i in range(len(grid) - 1):
        if sgn[i] == 0.0:
            roots.append(grid[i])
        elif sgn[i] * sgn[i + 1] < 0:
            roots.append(brentq(f, grid[i], grid[i + 1], xtol=1e-14, rtol=8.9e-16))
    if sgn[-1] == 0.0:
        roots.append(grid[-1])
    # dedupe
    out = []
    for r in roots:
        if not out or abs(r - out[-1]) > 1e-12 * (1 + abs(r)):
            out.append(r)
    return out


def build_v(gen: Generator, model: GameModel) -> Generator:
    """Pointwise max of u and g as a new piecewise function (Generator shape)."""
    gps = _g_half_pieces(model)
    cuts = sorted({0.0} | set(gen.junctions()) | {p.lo for p in gps if p.lo > 0.0})
    cuts.append(math.inf)

    def upiece(y):
        return gen._piece_at(min(y, 1e300))

    def gpiece(y):
        for p in gps:
            if y < p.hi or math.isinf(p.hi):
                if y >= p.lo:
                    return p
        return gps[-1]

    out = []
    for lo, hi in zip(cuts, cuts[1:]):
        uf = upiece(lo + 1e-12 * (1 + abs(lo))).form
        gf = gpiece(lo + 1e-12 * (1 + abs(lo))).form

        def diff(t, uf=uf, gf=gf):
            return float(uf.val(t) - gf.val(t))

        try:
            crossings = _find_crossings(diff, lo, hi)
        except ValueError as exc:
            raise CrossingNotBracketed(str(exc)) from exc
        pts = [lo] + [c for c in crossings if lo < c < hi] + [hi]
        for a, b in zip(pts, pts[1:]):
            mid = a + 0.5 * (min(b, _tail_probe(a)) - a)
            form = uf if diff(mid) >= 0.0 else gf
            if out and out[-1].form == form and abs(out[-1].hi - a) < 1e-12 * (1 + abs(a)):
                out[-1] = Piece(out[-1].lo, b, form)
            else:
                out.append(Piece(a, b, form))
    return Generator(tuple(out), breakpoints=dict(gen.breakpoints), regime=gen.regime)


# ---------------------------------------------------------------------------
# region extraction (Definition-style decomposition from u itself)
# ---------------------------------------------------------------------------

def _piece_is_unit_slope(piece, tol):
    lo = piece.lo
    hi = piece.hi if not math.isinf(piece.hi) else _tail_probe(piece.lo)
    ts = np.linspace(lo, hi, 5)
    d1 = np.asarray(piece.form.d1(ts))
    d2 = np.asarray(piece.form.d2(ts))
    return bool(np.all(np.abs(np.abs(d1) - 1.0) <= tol) and np.all(np.abs(d2) <= tol))


def extract_regions(gen: Generator, model: GameModel, tol: float = 1e-9) -> RegionSet:
    """Recompute (W, C, S_W, S_C, B) from the |u'|=1 set and the sign of u-g.

    Interval-valued regions only: isolated touch points of {u=g} adjacent to
    {u<g} belong to the closure of S_C, not to S_W.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")

    # control: closures of pieces with |u'| identically 1
    c_half = _merge_intervals(
        [(p.lo, p.hi) for p in gen.pieces if _piece_is_unit_slope(p, tol)])

    # classify u-g per piece
    sw_half = []
    sc_half = []
    for p in gen.pieces:
        lo = p.lo
        hi = p.hi if not math.isinf(p.hi) else _tail_probe(p.lo)
        ts = np.linspace(lo, hi, 65)
        d = eval_u_array(gen, ts) - model.g(ts)
        scale = 1.0 + np.max(np.abs(eval_u_array(gen, ts)))
        if np.all(np.abs(d) <= tol * scale):
            sw_half.append((p.lo, p.hi))
            continue

        def diff(t):
            return float(p.form.val(t) - model.g(t))

        roots = _find_crossings(diff, p.lo, p.hi)
        pts = [p.lo] + [r for r in roots if p.lo < r < p.hi] + [p.hi]
        for a, b in zip(pts, pts[1:]):
            mid = a + 0.5 * (min(b, _tail_probe(a)) - a)
            if diff(mid) < -tol * scale:
                sc_half.append((a, b))
            elif abs(diff(mid)) <= tol * scale:
                raise AmbiguousRegion(
                    "u-g neither signed nor identically zero near %g" % (mid,))
    sc_half = _merge_intervals(sc_half, gap_tol=tol)
    sw_half = _merge_intervals(sw_half, gap_tol=tol)

    control = _mirror_intervals(c_half)
    stop_wait = _mirror_intervals(sw_half)
    stop_control = _mirror_intervals(sc_half)

    # kinks: junctions (and 0) with a one-sided slope mismatch
    kinks = []
    for p in gen.junctions():
        if abs(eval_du(gen, p, "left") - eval_du(gen, p, "right")) > 1e-8:
            kinks.extend([p, -p] if p > 0 else [0.0])
    if abs(eval_du(gen, 0.0, "left") - eval_du(gen, 0.0, "right")) > 1e-8:
        kinks.append(0.0)
    kinks = tuple(sorted(set(kinks)))

    # waiting region: complement of C union S
    covered = _merge_intervals(list(control) + list(stop_wait) + list(stop_control),
                               gap_tol=tol)
    waiting = []
    prev = -math.inf
    for a, b in covered:
        if a > prev:
            waiting.append((prev, a))
        prev = max(prev, b)
    if prev < math.inf:
        waiting.append((prev, math.inf))
    waiting = tuple(waiting)

    # boundary tags (Definition 3.2): a finite C-boundary is reflecting when
    # the inside slope points away from the waiting side, else repelling
    tags = {}
    for a, b in control:
        if math.isfinite(a):
            inside = eval_du(gen, a, "right")
            tags[a] = REFLECTING if abs(inside - 1.0) <= tol else REPELLING
        if math.isfinite(b):
            inside = eval_du(gen, b, "left")
            tags[b] = REFLECTING if abs(inside + 1.0) <= tol else REPELLING
    for c in kinks:
        tags[c] = REPELLING

    return RegionSet(waiting=waiting, control=control, stop_wait=stop_wait,
                     stop_control=stop_control, kinks=kinks, boundary_tags=tags)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def form_to_dict(form):
    name = FORM_NAMES[type(form)]
    coeffs = {k: getattr(form, k) for k in form.__dataclass_fields__}
    return {"form": name, "coefficients": coeffs}


def form_from_dict(d):
    cls = FORM_BY_NAME[d["form"]]
    return cls(**d["coefficients"])


def regions_to_dict(rs: RegionSet):
    return {
        "waiting": [list(iv) for iv in rs.waiting],
        "control": [list(iv) for iv in rs.control],
        "stop_wait": [list(iv) for iv in rs.stop_wait],
        "stop_control": [list(iv) for iv in rs.stop_control],
        "kinks": list(rs.kinks),
        "boundary_tags": {repr(k): v for k, v in rs.boundary_tags.items()},
    }


def regions_from_dict(d):
    return RegionSet(
        waiting=tuple(tuple(iv) for iv in d["waiting"]),
        control=tuple(tuple(iv) for iv in d["control"]),
        stop_wait=tuple(tuple(iv) for iv in d["stop_wait"]),
        stop_control=tuple(tuple(iv) for iv in d["stop_control"]),
        kinks=tuple(d["kinks"]),
        boundary_tags={float(k): v for k, v in d["boundary_tags"].items()},
    )


def generator_to_dict(gen: Generator):
    return {
        "pieces": [dict(interval=[p.lo, p.hi], **form_to_dict(p.form))
                   for p in gen.pieces],
        "breakpoints": dict(gen.breakpoints),
        "regions": regions_to_dict(gen.regions) if gen.regions else None,
        "regime": gen.regime,
    }


def generator_from_dict(d):
    pieces = tuple(Piece(p["interval"][0], p["interval"][1], form_from_dict(p))
                   for p in d["pieces"])
    regions = regions_from_dict(d["regions"]) if d.get("regions") else None
    return Generator(pieces, breakpoints=dict(d.get("breakpoints", {})),
                     regions=regions, regime=d.get("regime"))
