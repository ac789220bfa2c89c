"""Closed-form solution of the quadratic-payoff case (b=0, sigma=1,
h = kappa*x^2 + mu, g = lam*x^2).

Four mutually exclusive regimes, each determined by a free boundary:

  case 1: reflect at beta < alpha, stop beyond alpha (control-dominant);
  case 2: stop on [alpha, 1/(2 lam)], control beyond 1/(2 lam) (stop-dominant);
  case 3: a single boundary alpha = beta bridges the two;
  case 4: knife-edge parameters where everything is explicit.

Free boundaries solve transcendental equations; roots are located inside
analytically guaranteed brackets and refined to residuals below 1e-12.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from scipy.optimize import brentq

from .errors import BracketFailure, ComplexRoot, InvalidModel, RegimeGap, RegimeOverlap
from .generator import (
    AffineAbs,
    CoshQuadratic,
    Generator,
    Piece,
    Quadratic,
    RegionSet,
    REFLECTING,
)
from .model import GameModel, quadratic_model

INF = math.inf

CASE1 = "Case1_ControlDominant"
CASE2 = "Case2_StopDominant"
CASE3 = "Case3_Bridged"
CASE4 = "Case4_Degenerate"

KNIFE_EDGE_RTOL = 1e-9


@dataclass(frozen=True)
class QuadParams:
    delta: float
    kappa: float
    lam: float
    mu: float = 0.0

    def __post_init__(self):
        if not (self.delta > 0 and self.kappa > 0 and self.lam > 0 and self.mu >= 0):
            raise InvalidModel("need delta, kappa, lam > 0 and mu >= 0")

    @property
    def rate(self):
        return math.sqrt(2.0 * self.delta)

    @property
    def dl(self):
        """delta*lam - kappa, the sign that separates the regimes."""
        return self.delta * self.lam - self.kappa

    @property
    def s_star(self):
        """sqrt((kappa + delta*mu)/(delta*(delta*lam - kappa))); needs dl > 0."""
        return math.sqrt((self.kappa + self.delta * self.mu) / (self.delta * self.dl))

    def model(self) -> GameModel:
        return quadratic_model(self.delta, self.kappa, self.lam, self.mu)


@dataclass(frozen=True)
class RegimeI:
    tag: str
    alpha: float        # stopping boundary (S starts at |x| = alpha)
    beta: float         # control boundary (C starts at |x| = beta)
    coeff_A: float
    residuals: dict = field(default_factory=dict)
    generator: Optional[Generator] = None


def _root(f, lo, hi, what):
    """Bracketed root with a residual polish; raises BracketFailure."""
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0.0:
        raise BracketFailure("no sign change for %s on [%g, %g]" % (what, lo, hi))
    return brentq(f, lo, hi, xtol=1e-15, rtol=8.9e-16, maxiter=200)


def _knife_edge(p: QuadParams) -> bool:
    if p.dl <= 0:
        return False
    t = p.delta / (2.0 * p.kappa)
    return abs(p.s_star - t) <= KNIFE_EDGE_RTOL * max(p.s_star, t)


def cond1(p: QuadParams) -> bool:
    """Applicability of case 1 (equivalently alpha > beta exists)."""
    if p.dl < 0.0:
        return True
    if p.dl == 0.0:
        return p.mu > 0.0
    r = math.sqrt(2.0 * p.delta * p.mu / p.dl)
    return math.tanh(r) < r - p.delta * p.delta / (p.kappa * p.rate)


def case1_residual(p: QuadParams, beta: float) -> float:
    return math.tanh(p.rate * beta) - p.delta * (2.0 * p.kappa * beta - p.delta) / (p.kappa * p.rate)


def solve_case1(p: QuadParams) -> Optional[RegimeI]:
    if not cond1(p):
        return None
    t = p.delta / (2.0 * p.kappa)
    beta = _root(lambda b: case1_residual(p, b), t, t + 10.0 / p.rate, "beta (case 1)")
    coeff_a = -p.kappa / (p.delta * p.delta * math.cosh(min(p.rate * beta, 700.0)))
    cosh_piece = CoshQuadratic(coeff_a, p.delta, p.kappa, p.mu)
    u_beta = float(cosh_piece.val(beta))
    # alpha solves lam*a^2 - a + (beta - u(beta)) = 0 on the unit-slope tail
    disc = 1.0 - 4.0 * p.lam * (beta - u_beta)
    if disc < 0.0:
        raise ComplexRoot("case-1 stopping boundary has no real root")
    alpha = (1.0 + math.sqrt(disc)) / (2.0 * p.lam)
    tail = AffineAbs(1.0, u_beta - beta)
    regions = RegionSet(
        waiting=((-beta, beta),),
        control=((-INF, -beta), (beta, INF)),
        stop_wait=(),
        stop_control=((-INF, -alpha), (alpha, INF)),
        kinks=(),
        boundary_tags={beta: REFLECTING, -beta: REFLECTING},
    )
    gen = Generator(
        (Piece(0.0, beta, cosh_piece), Piece(beta, INF, tail)),
        breakpoints={"alpha": alpha, "beta": beta},
        regions=regions,
        regime=CASE1,
    )
    res = {"alpha1": abs(case1_residual(p, beta)),
           "alpha_defn1": abs(p.lam * alpha * alpha - (alpha + tail.c))}
    return RegimeI(CASE1, alpha, beta, coeff_a, res, gen)


def case2_residual(p: QuadParams, alpha: float) -> float:
    den = p.delta * p.dl * alpha * alpha - (p.kappa + p.delta * p.mu)
    return math.tanh(p.rate * alpha) - p.rate * p.dl * alpha / den


def solve_case2(p: QuadParams) -> Optional[RegimeI]:
    if p.dl <= 0.0:
        return None
    s = p.s_star
    lo = s + max(1e-13, 1e-10 * s)
    while case2_residual(p, lo) >= 0.0 and lo - s > 1e-16 * max(s, 1.0):
        lo = s + (lo - s) / 10.0
    hi = s + 10.0 / p.rate
    for _ in range(60):
        if case2_residual(p, hi) > 0.0:
            break
        hi *= 2.0
    alpha = _root(lambda a: case2_residual(p, a), lo, hi, "alpha (case 2)")
    half = 1.0 / (2.0 * p.lam)
    if alpha > half * (1.0 + 1e-12):
        return None  # cond2 fails; case 3 takes over
    coeff_a = ((p.delta * p.dl * alpha * alpha - (p.kappa + p.delta * p.mu))
               / (p.delta * p.delta * math.cosh(min(p.rate * alpha, 700.0))))
    cosh_piece = CoshQuadratic(coeff_a, p.delta, p.kappa, p.mu)
    pieces = [Piece(0.0, alpha, cosh_piece)]
    if half - alpha > 1e-15 * half:
        pieces.append(Piece(alpha, half, Quadratic(p.lam, 0.0)))
        stop_wait = ((-half, -alpha), (alpha, half))
    else:
        stop_wait = ()
    # beyond 1/(2 lam) the controller pins the state there: unit-slope tail
    pieces.append(Piece(half, INF, AffineAbs(1.0, p.lam * half * half - half)))
    regions = RegionSet(
        waiting=((-alpha, alpha),),
        control=((-INF, -half), (half, INF)),
        stop_wait=stop_wait,
        stop_control=((-INF, -half), (half, INF)),
        kinks=(),
        boundary_tags={half: REFLECTING, -half: REFLECTING},
    )
    gen = Generator(tuple(pieces), breakpoints={"alpha": alpha, "beta": half},
                    regions=regions, regime=CASE2)
    res = {"alpha2": abs(case2_residual(p, alpha))}
    return RegimeI(CASE2, alpha, half, coeff_a, res, gen)


def case3_residual(p: QuadParams, alpha: float) -> float:
    den = p.delta * p.dl * alpha * alpha - (p.kappa + p.delta * p.mu)
    return math.tanh(p.rate * alpha) - p.delta * (p.delta - 2.0 * p.kappa * alpha) / (p.rate * den)


def cond31(p: QuadParams) -> bool:
    r = math.sqrt(2.0 * p.delta * p.mu / p.dl)
    return math.tanh(r) >= r - p.delta * p.delta / (p.kappa * p.rate)


def solve_case3(p: QuadParams) -> Optional[RegimeI]:
    if p.dl < 0.0 or _knife_edge(p):
        return None
    t = p.delta / (2.0 * p.kappa)
    if p.dl == 0.0:
        # boundary of the regime map: for mu > 0 the control-dominant case
        # owns these parameters; for mu = 0 the residual below degenerates to
        # the reflection-boundary equation and u touches the obstacle exactly
        # at the single boundary alpha = beta
        if p.mu > 0.0:
            return None
        alpha = _root(lambda x: case3_residual(p, x), t, t + 10.0 / p.rate,
                      "alpha (case 3, dl = 0)")
        return _case3_build(p, alpha)
    s = p.s_star
    if t < s:
        # range 1: alpha in (t, s), requires cond31 (complement of cond1's
        # third branch), and then 1/(2 lam) < t < alpha < s
        if not cond31(p):
            return None
        a, b = t, s
    else:
        a, b = s, t
    # endpoints are singular/degenerate; walk in until the signs split
    lo = a + 1e-9 * (b - a)
    hi = b - 1e-9 * (b - a)
    sign_lo = 1.0 if t < s else -1.0  # expected sign of the residual at the 'a' end
    for _ in range(50):
        if case3_residual(p, lo) * sign_lo > 0.0:
            break
        lo = a + (lo - a) / 10.0
    for _ in range(50):
        if case3_residual(p, hi) * sign_lo < 0.0:
            break
        hi = b - (b - hi) / 10.0
    alpha = _root(lambda x: case3_residual(p, x), lo, hi, "alpha (case 3)")
    half = 1.0 / (2.0 * p.lam)
    if t >= s and alpha <= half * (1.0 + 1e-12):
        return None  # cond32 fails; case 2 owns these parameters
    return _case3_build(p, alpha)


def _case3_build(p: QuadParams, alpha: float) -> RegimeI:
    coeff_a = ((p.delta * p.dl * alpha * alpha - (p.kappa + p.delta * p.mu))
               / (p.delta * p.delta * math.cosh(min(p.rate * alpha, 700.0))))
    cosh_piece = CoshQuadratic(coeff_a, p.delta, p.kappa, p.mu)
    tail = AffineAbs(1.0, p.lam * alpha * alpha - alpha)
    regions = RegionSet(
        waiting=((-alpha, alpha),),
        control=((-INF, -alpha), (alpha, INF)),
        stop_wait=(),
        stop_control=((-INF, -alpha), (alpha, INF)),
        kinks=(),
        boundary_tags={alpha: REFLECTING, -alpha: REFLECTING},
    )
    gen = Generator((Piece(0.0, alpha, cosh_piece), Piece(alpha, INF, tail)),
                    breakpoints={"alpha": alpha, "beta": alpha},
                    regions=regions, regime=CASE3)
    res = {"alpha3": abs(case3_residual(p, alpha)),
           "smooth_fit": abs(float(cosh_piece.val(alpha)) - p.lam * alpha * alpha)}
    return RegimeI(CASE3, alpha, alpha, coeff_a, res, gen)


def solve_case4(p: QuadParams) -> Optional[RegimeI]:
    if p.dl <= 0.0 or not _knife_edge(p):
        return None
    t = p.delta / (2.0 * p.kappa)
    inner = Quadratic(p.kappa / p.delta,
                      (p.kappa + p.delta * p.mu) / (p.delta * p.delta))
    u_t = float(inner.val(t))
    tail = AffineAbs(1.0, u_t - t)
    regions = RegionSet(
        waiting=((-t, t),),
        control=((-INF, -t), (t, INF)),
        stop_wait=(),
        stop_control=((-INF, -t), (t, INF)),
        kinks=(),
        boundary_tags={t: REFLECTING, -t: REFLECTING},
    )
    gen = Generator((Piece(0.0, t, inner), Piece(t, INF, tail)),
                    breakpoints={"alpha": t, "beta": t},
                    regions=regions, regime=CASE4)
    res = {"knife_edge": abs(p.s_star - t)}
    return RegimeI(CASE4, t, t, 0.0, res, gen)


def classify_regime_I(p: QuadParams) -> RegimeI:
    """Dispatch across cases 1-4; exactly one must apply."""
    if _knife_edge(p):
        return solve_case4(p)
    hits = [r for s in (solve_case1, solve_case2, solve_case3) if (r := s(p))]
    if not hits:
        raise RegimeGap("no case applies to %r" % (p,))
    if len(hits) > 1:
        raise RegimeOverlap("cases %s all claim %r"
                            % ([r.tag for r in hits], p))
    return hits[0]
