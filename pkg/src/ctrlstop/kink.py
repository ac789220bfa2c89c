"""Closed-form solution of the kinked-obstacle case (h = 0,
g = max(-lam*x^2 + lam, 0)).

Three regimes tiled by lam at the thresholds lam1(delta) < lam2(delta):

  case A (lam <= lam1): the controller never acts; pure stopping on [-a, a];
  case B (lam1 < lam <= lam2): stop on [-b, b], jump from the kink at b to the
      reflecting boundary a;
  case C (lam > lam2): never stop; jump from the kink at 0 to +-a and reflect.

Everything is explicit, no root-finding needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .errors import ComplexRoot, InvalidModel, OutOfSupportedRange, RegimeGap
from .generator import (
    AffineAbs,
    Exponential,
    Generator,
    Piece,
    Quadratic,
    RegionSet,
    REFLECTING,
    REPELLING,
)
from .model import GameModel, kink_model

INF = math.inf

CASEA = "CaseA_NeverControl"
CASEB = "CaseB_JumpFromBeta"
CASEC = "CaseC_JumpFromZero"


@dataclass(frozen=True)
class KinkParams:
    delta: float
    lam: float

    def __post_init__(self):
        if not (self.delta > 0 and self.lam > 0):
            raise InvalidModel("need delta, lam > 0")
        rate = math.sqrt(2.0 * self.delta)
        if not (1e-6 <= rate <= 1e6):
            raise OutOfSupportedRange("sqrt(2*delta) = %g outside [1e-6, 1e6]" % rate)

    @property
    def rate(self):
        return math.sqrt(2.0 * self.delta)

    def model(self) -> GameModel:
        return kink_model(self.delta, self.lam)


@dataclass(frozen=True)
class RegimeII:
    tag: str
    alpha: float
    beta: Optional[float]
    coeff_A: float
    residuals: dict = field(default_factory=dict)
    generator: Optional[Generator] = None


def thresholds(delta: float):
    """(lam1, lam2): regime boundaries; case A below lam1, case C above lam2.

    lam1 is where the pure-stopping boundary hits 1/(2*lam); lam2 is where
    the case-B kink beta = 1/lam - alpha reaches 0, i.e. lam*alpha(lam) = 1
    (positive root of lam^2 - lam/sqrt(2*delta) - 1 = 0).
    """
    rate = math.sqrt(2.0 * delta)
    lam1 = 0.5 / (-1.0 / rate + math.sqrt(1.0 / (2.0 * delta) + 1.0))
    lam2 = 1.0 / (-0.5 / rate + math.sqrt(1.0 / (8.0 * delta) + 1.0))
    return lam1, lam2


def _smooth_fit_residuals(p: KinkParams, alpha, left_val, left_slope, coeff_a):
    tail = Exponential(coeff_a, p.delta)
    return {
        "fit_value": abs(left_val - float(tail.val(alpha))),
        "fit_slope": abs(left_slope - float(tail.d1(alpha))),
    }


def solve_caseA(p: KinkParams) -> Optional[RegimeII]:
    lam1, _ = thresholds(p.delta)
    if p.lam > lam1:
        return None
    alpha = -1.0 / p.rate + math.sqrt(1.0 / (2.0 * p.delta) + 1.0)
    coeff_a = p.lam * (1.0 - alpha * alpha) * math.exp(min(p.rate * alpha, 700.0))
    parab = Quadratic(-p.lam, p.lam)
    regions = RegionSet(
        waiting=((-INF, -alpha), (alpha, INF)),
        control=(),
        stop_wait=((-alpha, alpha),),
        stop_control=(),
        kinks=(),
        boundary_tags={},
    )
    gen = Generator((Piece(0.0, alpha, parab), Piece(alpha, INF, Exponential(coeff_a, p.delta))),
                    breakpoints={"alpha": alpha}, regions=regions, regime=CASEA)
    res = _smooth_fit_residuals(p, alpha, float(parab.val(alpha)),
                                float(parab.d1(alpha)), coeff_a)
    return RegimeII(CASEA, alpha, None, coeff_a, res, gen)


def _alpha_A_caseBC(p: KinkParams):
    inner = 1.0 - 1.0 / (p.lam * p.rate)
    if inner <= 0.0:
        raise ComplexRoot("alpha^2 = 1 - 1/(lam*sqrt(2 delta)) <= 0")
    alpha = math.sqrt(inner)
    coeff_a = p.lam * (1.0 - alpha * alpha) * math.exp(min(p.rate * alpha, 700.0))
    return alpha, coeff_a


def solve_caseB(p: KinkParams) -> Optional[RegimeII]:
    lam1, lam2 = thresholds(p.delta)
    if not (lam1 < p.lam <= lam2):
        return None
    alpha, coeff_a = _alpha_A_caseBC(p)
    # beta: smaller root of lam*t^2 - t = lam*alpha^2 - alpha (the larger root
    # is alpha itself, the chord tangency); discriminant is (1 - 2*lam*alpha)^2
    disc = 1.0 - 4.0 * p.lam * (alpha - p.lam * alpha * alpha)
    if disc < 0.0:
        raise ComplexRoot("case-B kink equation has no real root")
    beta = (1.0 - math.sqrt(disc)) / (2.0 * p.lam)
    chord = AffineAbs(-1.0, alpha + p.lam - p.lam * alpha * alpha)
    parab = Quadratic(-p.lam, p.lam)
    regions = RegionSet(
        waiting=((-INF, -alpha), (alpha, INF)),
        control=((-alpha, -beta), (beta, alpha)),
        stop_wait=((-beta, beta),),
        stop_control=((-alpha, -beta), (beta, alpha)),
        kinks=(-beta, beta),
        boundary_tags={beta: REPELLING, -beta: REPELLING,
                       alpha: REFLECTING, -alpha: REFLECTING},
    )
    gen = Generator((Piece(0.0, beta, parab), Piece(beta, alpha, chord),
                     Piece(alpha, INF, Exponential(coeff_a, p.delta))),
                    breakpoints={"alpha": alpha, "beta": beta},
                    regions=regions, regime=CASEB)
    res = _smooth_fit_residuals(p, alpha, float(chord.val(alpha)),
                                float(chord.d1(alpha)), coeff_a)
    res["beta22"] = abs((p.lam * beta * beta - beta) - (p.lam * alpha * alpha - alpha))
    return RegimeII(CASEB, alpha, beta, coeff_a, res, gen)


def solve_caseC(p: KinkParams) -> Optional[RegimeII]:
    _, lam2 = thresholds(p.delta)
    if p.lam <= lam2:
        return None
    alpha, coeff_a = _alpha_A_caseBC(p)
    chord = AffineAbs(-1.0, alpha + p.lam - p.lam * alpha * alpha)
    regions = RegionSet(
        waiting=((-INF, -alpha), (alpha, INF)),
        control=((-alpha, alpha),),
        stop_wait=(),
        stop_control=((-alpha, alpha),),
        kinks=(0.0,),
        boundary_tags={0.0: REPELLING, alpha: REFLECTING, -alpha: REFLECTING},
    )
    gen = Generator((Piece(0.0, alpha, chord), Piece(alpha, INF, Exponential(coeff_a, p.delta))),
                    breakpoints={"alpha": alpha}, regions=regions, regime=CASEC)
    res = _smooth_fit_residuals(p, alpha, float(chord.val(alpha)),
                                float(chord.d1(alpha)), coeff_a)
    return RegimeII(CASEC, alpha, None, coeff_a, res, gen)


def classify_regime_II(p: KinkParams) -> RegimeII:
    for solver in (solve_caseA, solve_caseB, solve_caseC):
        result = solver(p)
        if result is not None:
            return result
    raise RegimeGap("no kink-case regime applies to %r" % (p,))
