"""Game coefficients: drift b, volatility sigma, discount rate, payoffs h and g.

The state follows dX = b(X) dt + d(xi) + sigma(X) dW.  The controller pays the
total variation of xi, the stopper collects g at the stopping time, and both
discount at rate delta_bar.  Only the coefficient families needed by the two
closed-form special cases (plus affine drift for the grid solver) are modeled.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidModel

# running payoff kinds
H_QUADRATIC = "quadratic"  # kappa*x^2 + mu
H_ZERO = "zero"

# terminal payoff kinds
G_QUADRATIC = "quadratic"  # lam*x^2
G_BUMP = "bump"            # max(-lam*x^2 + lam, 0)


@dataclass(frozen=True)
class GameModel:
    drift_const: float = 0.0
    drift_slope: float = 0.0
    sigma: float = 1.0
    discount: float = 1.0
    h_kind: str = H_ZERO
    g_kind: str = G_QUADRATIC
    kappa: float = 0.0
    mu: float = 0.0
    lam: float = 1.0

    def __post_init__(self):
        if not (self.sigma * self.sigma > 0.0):
            raise InvalidModel("volatility must be bounded away from zero")
        if not (self.discount > 0.0):
            raise InvalidModel("discount rate must be positive")
        if self.h_kind not in (H_QUADRATIC, H_ZERO):
            raise InvalidModel("unknown running payoff kind %r" % (self.h_kind,))
        if self.g_kind not in (G_QUADRATIC, G_BUMP):
            raise InvalidModel("unknown terminal payoff kind %r" % (self.g_kind,))
        if self.h_kind == H_QUADRATIC and (self.kappa < 0.0 or self.mu < 0.0):
            raise InvalidModel("running payoff requires kappa >= 0, mu >= 0")
        if self.lam < 0.0:
            raise InvalidModel("terminal payoff requires lam >= 0")

    # -- coefficients ------------------------------------------------------

    def b(self, x):
        return self.drift_const + self.drift_slope * np.asarray(x, dtype=float)

    def delta_bar(self, x):
        return self.discount * np.ones_like(np.asarray(x, dtype=float))

    # -- payoffs -----------------------------------------------------------

    def h(self, x):
        x = np.asarray(x, dtype=float)
        if self.h_kind == H_QUADRATIC:
            return self.kappa * x * x + self.mu
        return np.zeros_like(x)

    def g(self, x):
        x = np.asarray(x, dtype=float)
        if self.g_kind == G_QUADRATIC:
            return self.lam * x * x
        return np.maximum(-self.lam * x * x + self.lam, 0.0)

    def dg(self, x):
        x = np.asarray(x, dtype=float)
        if self.g_kind == G_QUADRATIC:
            return 2.0 * self.lam * x
        return np.where(np.abs(x) < 1.0, -2.0 * self.lam * x, 0.0)

    def d2g(self, x):
        x = np.asarray(x, dtype=float)
        if self.g_kind == G_QUADRATIC:
            return 2.0 * self.lam * np.ones_like(x)
        return np.where(np.abs(x) < 1.0, -2.0 * self.lam, 0.0) * np.ones_like(x)

    # -- generator of the diffusion ----------------------------------------

    def apply_L(self, x, u, du, d2u):
        """0.5*sigma^2*u'' + b*u' - delta_bar*u evaluated pointwise."""
        return 0.5 * self.sigma * self.sigma * d2u + self.b(x) * du - self.discount * u


def quadratic_model(delta: float, kappa: float, lam: float, mu: float = 0.0) -> GameModel:
    """b=0, sigma=1, h = kappa*x^2 + mu, g = lam*x^2."""
    if delta <= 0 or kappa <= 0 or lam <= 0 or mu < 0:
        raise InvalidModel("need delta, kappa, lam > 0 and mu >= 0")
    return GameModel(discount=delta, h_kind=H_QUADRATIC, g_kind=G_QUADRATIC,
                     kappa=kappa, mu=mu, lam=lam)


def kink_model(delta: float, lam: float) -> GameModel:
    """b=0, sigma=1, h = 0, g = truncated parabola max(-lam*x^2 + lam, 0)."""
    if delta <= 0 or lam <= 0:
        raise InvalidModel("need delta, lam > 0")
    return GameModel(discount=delta, h_kind=H_ZERO, g_kind=G_BUMP, lam=lam)
