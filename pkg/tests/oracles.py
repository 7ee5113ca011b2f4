"""
Closed-form reference values used across the tests.
"""

import math

import numpy as np

LN2_HALF = math.log(2.0) / 2.0
TWO_STATE_RATES = [[-1.0, 1.0], [1.0, -1.0]]


def two_state_exact(t):
    """``e^{tQ}`` of the symmetric 2-state chain: ``(1 ± e^{−2t})/2``."""
    a = (1.0 + math.exp(-2.0 * t)) / 2.0
    return np.array([[a, 1.0 - a], [1.0 - a, a]])


def pdmp_distance(n, lam, t):
    """``‖T_t − P‖ = 2(1 − 1/n)e^{−λt}`` for jumps to the uniform density."""
    return 2.0 * (1.0 - 1.0 / n) * math.exp(-lam * t)
