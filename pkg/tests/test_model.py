import numpy as np
import pytest

from ctrlstop.errors import InvalidModel
from ctrlstop.model import (
    GameModel,
    G_BUMP,
    H_ZERO,
    kink_model,
    quadratic_model,
)


def test_quadratic_payoffs():
    m = quadratic_model(1.0, 2.0, 0.5, mu=0.3)
    x = np.array([-1.5, 0.0, 2.0])
    assert np.allclose(m.h(x), 2.0 * x * x + 0.3)
    assert np.allclose(m.g(x), 0.5 * x * x)
    assert np.allclose(m.dg(x), x)
    assert np.allclose(m.d2g(x), 1.0)


def test_bump_payoffs():
    m = kink_model(0.5, 1.5)
    x = np.array([-2.0, -0.5, 0.0, 0.5, 0.999, 1.0, 3.0])
    assert np.allclose(m.g(x), np.maximum(-1.5 * x * x + 1.5, 0.0))
    assert m.h(x).max() == 0.0
    # gradient vanishes on the flat part
    assert m.dg(np.array([2.0]))[0] == 0.0
    assert m.dg(np.array([0.5]))[0] == -1.5


def test_apply_L_on_exponential():
    # u = e^(-sqrt(2 delta) x) solves 0.5 u'' - delta u = 0 when b = 0
    m = kink_model(0.7, 1.0)
    r = np.sqrt(2.0 * 0.7)
    x = np.linspace(-2, 2, 41)
    u = np.exp(-r * x)
    du = -r * u
    d2u = r * r * u
    assert np.max(np.abs(m.apply_L(x, u, du, d2u))) < 1e-12


def test_drift_coefficients():
    m = GameModel(drift_const=0.3, drift_slope=-0.1, discount=1.0)
    assert np.allclose(m.b(np.array([0.0, 2.0])), [0.3, 0.1])
    assert np.allclose(m.delta_bar(np.array([5.0])), [1.0])


@pytest.mark.parametrize("kwargs", [
    dict(sigma=0.0),
    dict(discount=0.0),
    dict(discount=-1.0),
    dict(h_kind="cubic"),
    dict(g_kind="step"),
    dict(h_kind="quadratic", kappa=-1.0),
    dict(lam=-0.5),
])
def test_invalid_model_rejected(kwargs):
    with pytest.raises(InvalidModel):
        GameModel(**kwargs)


def test_factories_validate():
    with pytest.raises(InvalidModel):
        quadratic_model(1.0, 0.0, 1.0)
    with pytest.raises(InvalidModel):
        kink_model(-1.0, 1.0)
    m = kink_model(0.5, 2.0)
    assert m.h_kind == H_ZERO and m.g_kind == G_BUMP
