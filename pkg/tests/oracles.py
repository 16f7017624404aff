"""Independent reference computations for the test suite.

Nothing here calls into the package under test: closed forms are checked
against quadrature over the linearized loop spectra, fixed-point iteration
and brute-force grids.
"""

import math

import numpy as np
from scipy import integrate


def r_bar(sigma_f_sq, r_m, r_p):
    return sigma_f_sq * math.exp(2 * r_p) + (1 - sigma_f_sq) * math.exp(-2 * r_m)


def kalman_gain(A, kappa, lam, rb):
    # Riccati: 2 lam P + 4 A P^2 / rb = kappa, gain = 4 A P / rb
    P = (-2 * lam + math.sqrt(4 * lam**2 + 16 * A * kappa / rb)) / (8 * A / rb)
    return 4 * A * P / rb, P


def fixed_point(A, kappa, lam, r_m, r_p, tol=2e-15, max_iter=100000):
    """Self-consistent (gain, sigma_f^2) by plain iteration from the coherent solution."""
    s = kalman_gain(A, kappa, lam, 1.0)[1]
    for _ in range(max_iter):
        g, s_new = kalman_gain(A, kappa, lam, r_bar(s, r_m, r_p))
        if abs(s_new - s) <= tol * s_new:
            return g, s_new
        s = s_new
    raise RuntimeError("fixed point did not converge")


def lorentz_psd(omega, level, pole):
    if math.isinf(pole):
        return np.full_like(np.asarray(omega, dtype=float), level)
    return 1 + (level - 1) * pole**2 / (omega**2 + pole**2)


def _quad_all(f, scale):
    # even integrand over the real line; w = scale * tan(theta) maps it onto [0, pi/2)
    def g(theta):
        c = math.cos(theta)
        return f(scale * math.tan(theta)) * scale / (c * c)

    edges = np.linspace(0.0, math.pi / 2, 9)
    total = sum(
        integrate.quad(g, lo, hi, epsabs=0, epsrel=1e-13, limit=400)[0] for lo, hi in zip(edges[:-1], edges[1:])
    )
    return 2 * total / (2 * math.pi)


def filter_mse_spectral(gamma, A, kappa, lam, noise_psd):
    """Filtered MSE of the linear loop by quadrature; ``noise_psd`` is the measurement noise spectrum."""
    a = lam + gamma

    def f(w):
        # Delta_f = [(i w + lam) phi - (gamma / 2 alpha) n] / (i w + a)
        sig = kappa / (w * w + lam * lam) * (w * w + lam * lam) / (w * w + a * a)
        noi = gamma**2 / (4 * A) * noise_psd(w) / (w * w + a * a)
        return sig + noi

    return _quad_all(f, a)


def smoother_mse_spectral(gamma, A, kappa, lam, noise_psd):
    """Smoothed MSE of ``phi_s = (2 lam + gamma) int_t^inf exp(-a (s - t)) phi_f(s) ds`` by quadrature."""
    a = lam + gamma

    def f(w):
        S = (2 * lam + gamma) / (a - 1j * w)
        Hf = gamma / (1j * w + a)
        e_sig = 1 - S * Hf
        e_noi = S * Hf / (2 * math.sqrt(A))
        return abs(e_sig) ** 2 * kappa / (w * w + lam * lam) + abs(e_noi) ** 2 * noise_psd(w)

    return _quad_all(f, a)


def self_consistent_spectral(gamma, A, kappa, lam, r_minus, r_plus, p_minus, p_plus, which="filter"):
    """Finite-bandwidth MSE with the tracking-error weighting solved by fixed-point iteration."""
    s = kappa / (2 * lam)
    for _ in range(200):
        psd = lambda w, s=s: s * lorentz_psd(w, r_plus, p_plus) + (1 - s) * lorentz_psd(w, r_minus, p_minus)
        s_new = filter_mse_spectral(gamma, A, kappa, lam, psd)
        if abs(s_new - s) < 1e-14 * s_new:
            break
        s = s_new
    if which == "filter":
        return s_new
    psd = lambda w: s_new * lorentz_psd(w, r_plus, p_plus) + (1 - s_new) * lorentz_psd(w, r_minus, p_minus)
    return smoother_mse_spectral(gamma, A, kappa, lam, psd)


def smooth_by_quadrature(phi_f, lam, gamma, dt):
    """Anticausal exponential smoother by direct integration of the linear interpolant, last value held."""
    a = lam + gamma
    n = len(phi_f)
    t = np.arange(n) * dt
    out = np.empty(n)
    for k in range(n):
        seg = 0.0
        for j in range(k, n - 1):
            f0, f1 = phi_f[j], phi_f[j + 1]
            g = lambda s, j=j, f0=f0, f1=f1: (f0 + (f1 - f0) * (s - t[j]) / dt) * math.exp(-a * (s - t[k]))
            seg += integrate.quad(g, t[j], t[j + 1], epsabs=0, epsrel=1e-11)[0]
        seg += phi_f[-1] * math.exp(-a * (t[-1] - t[k])) / a
        out[k] = (2 * lam + gamma) * seg
    return out
