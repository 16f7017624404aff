"""Kalman filtering, smoothing and closed-form MSE predictions.

All closed forms take the *detected* coherent flux ``alpha_sq`` (photons/s
reaching the detector) together with kappa (rad^2/s) and lambda (rad/s).
Broadband squeezing enters through either an effective factor ``r_bar`` or
the squeezing parameters (r_m, r_p); finite-bandwidth squeezing through the
centre levels (R_minus, R_plus) and a :class:`~phasetrack.optics.BandwidthModel`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np
from scipy.signal import lfilter

from .optics import BandwidthModel, DomainError, effective_R, lossy_levels, LN10_OVER_20


class ConvergenceError(ArithmeticError):
    """A numerical search ended on its bracket or failed to converge."""


@dataclass(frozen=True)
class FilterConfig:
    """Feedback filter ``phi_f = gamma int exp(-lam (t-s)) I(s) / (2 alpha) ds``."""

    gamma: float
    lam: float
    alpha: float

    def __post_init__(self):
        if self.gamma < 0.0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma!r}")
        if self.lam <= 0.0:
            raise ValueError(f"lambda must be > 0, got {self.lam!r}")
        if self.alpha < 0.0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha!r}")

    @property
    def input_gain(self) -> float:
        """Weight of one current increment, gamma / (2 alpha); zero without light."""
        return 0.0 if self.alpha == 0.0 else self.gamma / (2.0 * self.alpha)

    def impulse_response(self, t):
        return self.input_gain * np.exp(-self.lam * np.asarray(t))


@dataclass(frozen=True)
class FilterState:
    phi_f: float = 0.0
    t: float = 0.0


@dataclass(frozen=True)
class MsePrediction:
    """Stationary filtered/smoothed MSEs (rad^2) at gain ``gamma``."""

    sigma_f_sq: float
    sigma_s_sq: float
    gamma: float
    r_bar: float
    epsilon: float


# -- broadband closed forms -------------------------------------------------


def gain_whitened(alpha_sq: float, kappa: float, lam: float, r_bar: float) -> float:
    """Kalman gain for white measurement noise of strength r_bar."""
    if r_bar <= 0.0:
        raise ValueError(f"r_bar must be > 0, got {r_bar!r}")
    return -lam + math.sqrt(lam * lam + 4.0 * kappa * alpha_sq / r_bar)


def sigma_f_whitened(alpha_sq: float, kappa: float, lam: float, r_bar: float) -> float:
    """Filtered MSE for white measurement noise of strength r_bar."""
    if r_bar <= 0.0:
        raise ValueError(f"r_bar must be > 0, got {r_bar!r}")
    if alpha_sq == 0.0:
        return kappa / (2.0 * lam)
    # gamma * r_bar / (4 alpha_sq) is the same quantity without the cancelling sqrt(1 + z) - 1.
    return gain_whitened(alpha_sq, kappa, lam, r_bar) * r_bar / (4.0 * alpha_sq)


def gain_explicit(alpha_sq: float, kappa: float, lam: float, r_m: float, r_p: float) -> float:
    """Kalman gain with the tracking-error/squeezing self-consistency solved exactly."""
    rm = math.exp(-2.0 * r_m)
    k_d = kappa * (math.exp(2.0 * r_p) - rm) / rm
    return -lam - 0.5 * k_d + 0.5 * math.sqrt((k_d + 2.0 * lam) ** 2 + 16.0 * alpha_sq * kappa / rm)


def sigma_f_explicit(alpha_sq: float, kappa: float, lam: float, r_m: float, r_p: float) -> float:
    """Self-consistent filtered MSE for squeezing (r_m, r_p).

    Raises
    ------
    DomainError
        If the result exceeds 1 rad^2, where the expansion behind the
        effective squeezing factor no longer holds.
    """
    rm = math.exp(-2.0 * r_m)
    d = math.exp(2.0 * r_p) - rm
    denom = 8.0 * alpha_sq + 4.0 * lam * d
    if denom == 0.0:
        value = kappa / (2.0 * lam)  # no light and no excess noise: the filter learns nothing
    else:
        b = 2.0 * lam * rm + kappa * d
        value = (-2.0 * lam * rm + kappa * d + math.sqrt(b * b + 16.0 * alpha_sq * kappa * rm)) / denom
    if value > 1.0:
        raise DomainError(f"sigma_f^2 = {value:.3g} > 1: tracking error too large for the expansion")
    return value


def sigma_s(alpha_sq: float, kappa: float, lam: float, r_bar: float) -> float:
    """Smoothed MSE."""
    if r_bar <= 0.0:
        raise ValueError(f"r_bar must be > 0, got {r_bar!r}")
    return kappa / (2.0 * math.sqrt(4.0 * kappa * alpha_sq / r_bar + lam * lam))


def epsilon(alpha_sq: float, kappa: float, lam: float, r_bar: float) -> float:
    """Small parameter of the high-gain regime (gamma ~ lam / epsilon)."""
    if kappa == 0.0 or alpha_sq == 0.0:
        return math.inf
    return math.sqrt(lam * lam * r_bar / (4.0 * alpha_sq * kappa))


def error_variance(gamma: float, alpha_sq: float, kappa: float, lam: float, r_bar: float) -> float:
    """Stationary variance of the tracking error for an arbitrary gain.

    From ``d Delta = -(lam + gamma) Delta dt + sqrt(kappa) dV - gamma sqrt(r_bar)/(2 alpha) dW``.
    """
    noise = 0.0 if alpha_sq == 0.0 else gamma * gamma * r_bar / (4.0 * alpha_sq)
    return (kappa + noise) / (2.0 * (lam + gamma))


def predict_broadband(alpha_sq: float, kappa: float, lam: float, r_m: float, r_p: float) -> MsePrediction:
    s_f = sigma_f_explicit(alpha_sq, kappa, lam, r_m, r_p)
    r_bar = effective_R(s_f, r_m, r_p)
    return MsePrediction(
        sigma_f_sq=s_f,
        sigma_s_sq=sigma_s(alpha_sq, kappa, lam, r_bar),
        gamma=gain_explicit(alpha_sq, kappa, lam, r_m, r_p),
        r_bar=r_bar,
        epsilon=epsilon(alpha_sq, kappa, lam, r_bar),
    )


# -- filtering and smoothing ------------------------------------------------


def filter_step(state: FilterState, current_increment: float, cfg: FilterConfig, dt: float) -> FilterState:
    """Euler step of ``d phi_f = -lam phi_f dt + gamma/(2 alpha) I dt``."""
    if dt <= 0.0:
        raise ValueError(f"dt must be > 0, got {dt!r}")
    phi_f = state.phi_f - cfg.lam * state.phi_f * dt + cfg.input_gain * current_increment
    return FilterState(phi_f, state.t + dt)


def smooth(phi_f, lam: float, gamma: float, dt: float) -> np.ndarray:
    """Anticausal smoother ``phi_s(t) = (2 lam + gamma) int_t^inf exp(-(lam+gamma)(s-t)) phi_f(s) ds``.

    One backward recursion, exact for a piecewise-linear ``phi_f``. The
    integral is truncated at the end of the record by holding the last
    sample, so the final ~5/(lam + gamma) seconds are biased. Works along the
    last axis of a 2-D array.
    """
    phi_f = np.asarray(phi_f, dtype=float)
    if phi_f.size == 0 or phi_f.shape[-1] == 0:
        raise ValueError("cannot smooth an empty series")
    if dt <= 0.0:
        raise ValueError(f"dt must be > 0, got {dt!r}")
    a = lam + gamma
    x = a * dt
    c = math.exp(-x)
    i0 = -math.expm1(-x) / a
    w1 = (-math.expm1(-x) - x * c) / (a * a * dt)
    w0 = i0 - w1
    rev = phi_f[..., ::-1]
    zi = (rev[..., 0] * (1.0 / a - w0))[..., None]
    acc, _ = lfilter([w0, w1], [1.0, -c], rev, axis=-1, zi=zi)
    return (2.0 * lam + gamma) * acc[..., ::-1]


# -- finite-bandwidth squeezing ---------------------------------------------


def _band_ratio(bw: BandwidthModel, pole: float, a: float, kind: str) -> float:
    if math.isinf(bw.delta_omega0):
        return 1.0
    h = pole / a
    if kind == "filter":
        return h / (h + 1.0)
    return h * (h + 2.0) / (h + 1.0) ** 2


def sigma_f_finite_bw(
    gamma_t: float,
    alpha_sq: float,
    kappa: float,
    lam: float,
    r_minus: float,
    r_plus: float,
    bw: BandwidthModel,
) -> float:
    """Filtered MSE at gain ``gamma_t`` when the squeezing has a Lorentzian band.

    The defining relation is linear in the MSE, so it is solved directly.
    """
    if gamma_t < 0.0:
        raise ValueError(f"gamma_t must be >= 0, got {gamma_t!r}")
    if gamma_t > 0.0 and not alpha_sq > 0.0:
        raise ValueError("a nonzero gain needs alpha_sq > 0")
    a = lam + gamma_t
    g_plus = _band_ratio(bw, bw.antisqueezed_pole, a, "filter")
    g_minus = _band_ratio(bw, bw.squeezed_pole, a, "filter")
    noise = 0.0 if gamma_t == 0.0 else gamma_t * gamma_t / (8.0 * alpha_sq * a)
    ex_plus = (r_plus - 1.0) * g_plus
    ex_minus = (r_minus - 1.0) * g_minus
    denom = 1.0 - noise * (ex_plus - ex_minus)
    if denom <= 0.0:
        raise DomainError(
            f"no stationary solution at gamma_t={gamma_t:.4g}: anti-squeezing noise feeds back unboundedly"
        )
    return (kappa / (2.0 * a) + noise * (1.0 + ex_minus)) / denom


def sigma_s_finite_bw(
    gamma_t: float,
    alpha_sq: float,
    kappa: float,
    lam: float,
    r_minus: float,
    r_plus: float,
    bw: BandwidthModel,
) -> float:
    """Smoothed MSE at gain ``gamma_t`` for band-limited squeezing."""
    s_f = sigma_f_finite_bw(gamma_t, alpha_sq, kappa, lam, r_minus, r_plus, bw)
    a = lam + gamma_t
    g_plus = _band_ratio(bw, bw.antisqueezed_pole, a, "smoother")
    g_minus = _band_ratio(bw, bw.squeezed_pole, a, "smoother")
    signal = kappa * (2.0 * lam * lam + gamma_t * gamma_t + 2.0 * lam * gamma_t) / (4.0 * a**3)
    if gamma_t == 0.0:
        return signal
    noise = gamma_t**2 * (2.0 * lam + gamma_t) ** 2 / (16.0 * alpha_sq * a**3)
    return signal + noise * (1.0 + s_f * (r_plus - 1.0) * g_plus + (1.0 - s_f) * (r_minus - 1.0) * g_minus)


# -- one-dimensional searches -----------------------------------------------

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    rtol: float = 1e-8,
    atol: float = 0.0,
    max_iter: int = 500,
) -> tuple[float, float]:
    """Minimize a unimodal ``f`` on ``[lo, hi]``; returns ``(x, f(x))``.

    Stops once the bracket is narrower than ``rtol * |x| + atol``. Equal
    function values keep the left half, so ties resolve toward ``lo``.
    """
    if not hi > lo:
        raise ValueError(f"empty bracket [{lo!r}, {hi!r}]")
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
        mid = 0.5 * (a + b)
        if b - a <= rtol * abs(mid) + atol:
            break
    else:
        raise ConvergenceError(f"golden-section search did not converge in {max_iter} iterations")
    x, fx = (c, fc) if fc <= fd else (d, fd)
    return x, fx


def optimize_gain(
    alpha_sq: float,
    kappa: float,
    lam: float,
    r_minus: float,
    r_plus: float,
    bw: BandwidthModel,
    objective: Literal["filter", "smoother"] = "filter",
    rtol: float = 1e-8,
) -> float:
    """Feedback gain minimizing the finite-bandwidth filtered (default) or smoothed MSE.

    The search bracket is ``(0, 20 * gamma_coherent]``. Gains with no
    stationary solution count as +inf.
    """
    if objective not in ("filter", "smoother"):
        raise ValueError(f"objective must be 'filter' or 'smoother', got {objective!r}")
    if kappa == 0.0 or alpha_sq == 0.0:
        return 0.0
    mse = sigma_f_finite_bw if objective == "filter" else sigma_s_finite_bw

    def f(g):
        try:
            return mse(g, alpha_sq, kappa, lam, r_minus, r_plus, bw)
        except DomainError:
            return math.inf

    hi = 20.0 * gain_whitened(alpha_sq, kappa, lam, 1.0)
    g, fg = golden_section(f, 0.0, hi, rtol=rtol)
    if not math.isfinite(fg) or g >= hi * (1.0 - 1e-6):
        raise ConvergenceError(f"gain search ran into the bracket end (gamma={g:.4g}, bound={hi:.4g})")
    return g


def predict_finite_bw(
    alpha_sq: float,
    kappa: float,
    lam: float,
    r_minus: float,
    r_plus: float,
    bw: BandwidthModel,
    objective: Literal["filter", "smoother"] = "filter",
) -> MsePrediction:
    g = optimize_gain(alpha_sq, kappa, lam, r_minus, r_plus, bw, objective)
    s_f = sigma_f_finite_bw(g, alpha_sq, kappa, lam, r_minus, r_plus, bw)
    r_bar = s_f * r_plus + (1.0 - s_f) * r_minus
    return MsePrediction(
        sigma_f_sq=s_f,
        sigma_s_sq=sigma_s_finite_bw(g, alpha_sq, kappa, lam, r_minus, r_plus, bw),
        gamma=g,
        r_bar=r_bar,
        epsilon=epsilon(alpha_sq, kappa, lam, r_bar),
    )


@dataclass(frozen=True)
class OptimalSqueezing:
    r: float  # pure (pre-loss) squeezing parameter
    squeezing_db: float  # pure squeezing level, positive dB
    sigma_s_sq: float
    r_minus: float  # measured levels after loss
    r_plus: float


def smoothed_mse_for_pure_r(r: float, alpha_sq: float, kappa: float, lam: float, l_sq: float) -> float:
    """Smoothed MSE when a pure squeezer with parameter r is degraded by loss l_sq."""
    r_minus, r_plus = lossy_levels(r, l_sq)
    r_m, r_p = -0.5 * math.log(r_minus), 0.5 * math.log(r_plus)
    s_f = sigma_f_explicit(alpha_sq, kappa, lam, r_m, r_p)
    return sigma_s(alpha_sq, kappa, lam, effective_R(s_f, r_m, r_p))


def optimal_squeezing(
    alpha_sq: float, kappa: float, lam: float, l_sq: float = 0.0, max_db: float = 20.0
) -> OptimalSqueezing:
    """Squeezing level that minimizes the smoothed MSE for a given loss.

    Searches 0..``max_db`` dB of pure squeezing to 1e-6 in r. A result no
    better than no squeezing (to 1e-12 relative) is reported as r = 0.
    """
    if not 0.0 <= l_sq < 1.0:
        raise ValueError(f"l_sq must lie in [0, 1), got {l_sq!r}")

    def f(db):
        return smoothed_mse_for_pure_r(db * LN10_OVER_20, alpha_sq, kappa, lam, l_sq)

    db, fx = golden_section(f, 0.0, max_db, rtol=0.0, atol=1e-6 / LN10_OVER_20)
    f0 = f(0.0)
    if fx >= f0 * (1.0 - 1e-12):
        db, fx = 0.0, f0
    r = db * LN10_OVER_20
    r_minus, r_plus = lossy_levels(r, l_sq)
    return OptimalSqueezing(r=r, squeezing_db=db, sigma_s_sq=fx, r_minus=r_minus, r_plus=r_plus)
