"""Compiled inner loop of the closed-loop tracker."""

import math

import numpy as np
from numba import njit

FULL_SINE = 0
SECOND_ORDER = 1
EFFECTIVE_WHITE = 2


@njit(cache=True, nogil=True)
def closed_loop(phi, noise_x, noise_p, model, amp, input_gain, lam, dt, r_minus, r_plus, r_bar, phi_f0):
    """Run the feedback loop over a pre-drawn signal and noise record.

    The estimate used at step k is the one formed from currents up to k-1.
    For SECOND_ORDER and EFFECTIVE_WHITE ``noise_x`` carries a unit-rate
    increment and ``noise_p`` is ignored.
    """
    n = phi.shape[0]
    phi_f = np.empty(n)
    current = np.empty(n)
    est = phi_f0
    sqrt_r_bar = math.sqrt(r_bar)
    for k in range(n):
        phi_f[k] = est
        d = phi[k] - est
        if model == FULL_SINE:
            s = math.sin(d)
            inc = 2.0 * amp * s * dt + s * noise_p[k] + math.cos(d) * noise_x[k]
        elif model == SECOND_ORDER:
            d2 = d * d
            inc = 2.0 * amp * d * dt + math.sqrt(d2 * r_plus + (1.0 - d2) * r_minus) * noise_x[k]
        else:
            inc = 2.0 * amp * d * dt + sqrt_r_bar * noise_x[k]
        current[k] = inc
        est = est - lam * est * dt + input_gain * inc
    return phi_f, current
