"""
Tests for the fixed-step RK4 integrator
"""

import numpy as np
import pytest
from scipy import linalg

from app.core.integrators import rk4_step, rk4_transition
from app.core.simkit import ControlLaw, assemble, integrate
from app.core.synthesis import synthesize


def _riccati_error(h: float) -> float:
    """ẋ = -x² from x(0) = 1 to t = 1, exact 1 / (1 + t)"""
    x = np.array([1.0])
    n = int(round(1.0 / h))
    for k in range(n):
        x = rk4_step(lambda t, s: -s ** 2, k * h, x, h)
    return abs(x[0] - 0.5)


class TestRk4:

    def test_step_matches_transition(self):
        rng = np.random.default_rng(3)
        M = rng.standard_normal((4, 4))
        x = rng.standard_normal(4)
        np.testing.assert_allclose(rk4_step(lambda t, s: M @ s, 0.0, x, 0.05), rk4_transition(M, 0.05) @ x, atol=1e-14)

    @pytest.mark.parametrize("h", [0.1, 0.05, 0.025])
    def test_fourth_order_on_nonlinear_field(self, h):
        ratio = _riccati_error(h) / _riccati_error(h / 2)
        assert 12.0 < ratio < 20.0

    def test_fourth_order_on_closed_loop(self, load):
        sc = load("harmonic_chain")
        loop = assemble(sc, ControlLaw.from_gains(synthesize(sc)))
        M = loop.matrices[0]
        h = 0.1 / max(abs(np.linalg.eigvals(M)))
        horizon = 40 * h
        exact = linalg.expm(M * horizon) @ loop.s0
        errors = [
            np.linalg.norm(integrate(loop, horizon=horizon, step=step).states[-1] - exact)
            for step in (h, h / 2)
        ]
        assert 12.0 < errors[0] / errors[1] < 20.0
