"""Seedable noise sources for the tracking simulations.

Three processes drive everything downstream:

* Wiener increments (variance ``dt``) for the quantum noise of the current,
* the Ornstein-Uhlenbeck phase signal, advanced with its exact transition
  kernel so the signal statistics do not depend on the step size,
* Lorentzian-shaped increments for finite-bandwidth squeezing, produced by a
  one-pole filter ``H(s) = (s + b*sqrt(R)) / (s + b)`` whose power spectrum is
  ``1 + (R - 1) b^2 / (Omega^2 + b^2)``.

Every random draw goes through :func:`trial_rng`, so a simulation is a pure
function of ``(master_seed, trial_index)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.signal import lfilter

# Stream ids used to split one trial's randomness into independent channels.
STREAM_SIGNAL = 0
STREAM_QUAD_X = 1
STREAM_QUAD_P = 2


def trial_rng(master_seed: int, trial_index: int = 0, stream: int = 0) -> np.random.Generator:
    """Independent PCG64 generator for one (trial, stream) pair.

    Normal variates are drawn with numpy's ziggurat ``standard_normal``.
    """
    if master_seed < 0 or trial_index < 0 or stream < 0:
        raise ValueError("seed, trial index and stream must be non-negative integers")
    seq = np.random.SeedSequence(int(master_seed), spawn_key=(int(trial_index), int(stream)))
    return np.random.Generator(np.random.PCG64(seq))


@dataclass(frozen=True)
class OUParams:
    """Phase signal ``phi(t) = sqrt(kappa) int exp(-lambda (t-s)) dV(s)``.

    kappa is in rad^2/s and lambda (``lam``) in rad/s.
    """

    kappa: float
    lam: float

    def __post_init__(self):
        if not (self.kappa >= 0.0 and math.isfinite(self.kappa)):
            raise ValueError(f"kappa must be finite and >= 0, got {self.kappa!r}")
        if not (self.lam > 0.0 and math.isfinite(self.lam)):
            raise ValueError(f"lambda must be finite and > 0, got {self.lam!r}")

    @property
    def stationary_variance(self) -> float:
        return self.kappa / (2.0 * self.lam)

    def autocovariance(self, tau):
        return self.stationary_variance * np.exp(-self.lam * np.abs(tau))


@dataclass(frozen=True)
class NoiseDraw:
    """A standard normal sample tied to the step it will scale."""

    value: float
    dt: float

    @property
    def increment(self) -> float:
        return self.value * math.sqrt(self.dt)


@dataclass(frozen=True)
class ShapingFilterState:
    """Memory of the one-pole shaping filter.

    ``pole_rate`` is ``b`` in rad/s, ``level`` the plateau ``R`` of the
    spectrum at zero frequency and ``memory`` the low-passed input.
    """

    pole_rate: float
    level: float
    memory: float = 0.0

    def __post_init__(self):
        if not self.pole_rate > 0.0:
            raise ValueError(f"pole_rate must be > 0, got {self.pole_rate!r}")
        if not self.level > 0.0:
            raise ValueError(f"level must be > 0, got {self.level!r}")

    def target_psd(self, omega):
        """Two-sided spectrum the output approaches, normalized to white = 1."""
        b = self.pole_rate
        return 1.0 + (self.level - 1.0) * b * b / (np.asarray(omega) ** 2 + b * b)

    def target_autocovariance(self, tau):
        """Smooth (non-delta) part of the output autocorrelation function."""
        b = self.pole_rate
        return (self.level - 1.0) * 0.5 * b * np.exp(-b * np.abs(tau))


def _check_dt(dt: float) -> None:
    if not (dt > 0.0 and math.isfinite(dt)):
        raise ValueError(f"dt must be finite and > 0, got {dt!r}")


def wiener_increments(seed: int, n: int, dt: float) -> np.ndarray:
    """``n`` i.i.d. N(0, dt) increments; identical seeds give identical arrays."""
    _check_dt(dt)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n!r}")
    return math.sqrt(dt) * trial_rng(seed).standard_normal(n)


def ou_step(prev: float, params: OUParams, dt: float, g: float) -> float:
    """Exact one-step OU transition driven by the standard normal ``g``."""
    _check_dt(dt)
    decay = math.exp(-params.lam * dt)
    spread = math.sqrt(params.kappa * -math.expm1(-2.0 * params.lam * dt) / (2.0 * params.lam))
    return decay * prev + spread * g


def ou_path(params: OUParams, dt: float, normals: np.ndarray, x0: float = 0.0) -> np.ndarray:
    """Vectorized :func:`ou_step`: returns ``len(normals) + 1`` samples starting at ``x0``.

    ``normals`` may be 2-D (trials x steps); the recursion runs along the last axis.
    """
    _check_dt(dt)
    normals = np.asarray(normals, dtype=float)
    decay = math.exp(-params.lam * dt)
    spread = math.sqrt(params.kappa * -math.expm1(-2.0 * params.lam * dt) / (2.0 * params.lam))
    x0 = np.broadcast_to(np.asarray(x0, dtype=float), normals.shape[:-1])
    zi = (decay * x0)[..., None]
    tail, _ = lfilter([spread], [1.0, -decay], normals, axis=-1, zi=zi)
    return np.concatenate([x0[..., None], tail], axis=-1)


def stationary_ou_path(params: OUParams, dt: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` samples of a stationary OU path (initial value drawn from the stationary law)."""
    x0 = math.sqrt(params.stationary_variance) * rng.standard_normal()
    return ou_path(params, dt, rng.standard_normal(n - 1), x0)


def shaped_noise_step(state: ShapingFilterState, white_in: NoiseDraw) -> tuple[ShapingFilterState, float]:
    """Push one white increment through the shaping filter.

    The filter is the matched-pole discretization of ``H(s)``; its gain at
    zero frequency is exactly ``sqrt(level)``. With ``level == 1`` the output
    is the input, bit for bit.
    """
    dw = white_in.increment
    if state.level == 1.0:
        return state, dw
    c = math.exp(-state.pole_rate * white_in.dt)
    memory = c * state.memory + (1.0 - c) * dw
    out = dw + (math.sqrt(state.level) - 1.0) * memory
    return replace(state, memory=memory), out


def shaped_increments(
    state: ShapingFilterState, dw: np.ndarray, dt: float
) -> tuple[ShapingFilterState, np.ndarray]:
    """Block version of :func:`shaped_noise_step` for a 1-D array of increments."""
    _check_dt(dt)
    dw = np.asarray(dw, dtype=float)
    if state.level == 1.0:
        return state, dw.copy()
    c = math.exp(-state.pole_rate * dt)
    memory, _ = lfilter([1.0 - c], [1.0, -c], dw, zi=[c * state.memory])
    out = dw + (math.sqrt(state.level) - 1.0) * memory
    return replace(state, memory=float(memory[-1]) if memory.size else state.memory), out
