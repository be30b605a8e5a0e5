"""
Fixed-step classical Runge-Kutta integration
"""

from typing import Callable

import numpy as np


def rk4_step(f: Callable[[float, np.ndarray], np.ndarray], t: float, x: np.ndarray, h: float) -> np.ndarray:
    """
    One classical RK4 step of ẋ = f(t, x).

    Args:
        f: Vector field
        t: Current time
        x: Current state
        h: Step size
    """
    k1 = f(t, x)
    k2 = f(t + 0.5 * h, x + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, x + 0.5 * h * k2)
    k4 = f(t + h, x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_transition(M: np.ndarray, h: float) -> np.ndarray:
    """
    RK4 step matrix of the linear field ẋ = Mx, so that rk4_step(x) = Φ x.

    Φ = I + hM + (hM)²/2 + (hM)³/6 + (hM)⁴/24
    """
    n = M.shape[0]
    hM = h * M
    Phi = np.eye(n)
    term = np.eye(n)
    for k in range(1, 5):
        term = term @ hM / k
        Phi = Phi + term
    return Phi
