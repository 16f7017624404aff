"""Squeezed-beam measurement model.

Homodyne current increments at three levels of fidelity, loss and
detection-efficiency bookkeeping, Lorentzian squeezing spectra and the photon
flux carried by the squeezed vacuum.

Conventions: ``R_minus = exp(-2 r_m)`` and ``R_plus = exp(2 r_p)`` are the
squeezed and anti-squeezed quadrature variances relative to shot noise, and a
level in dB is ``10 log10(R)`` (negative for squeezing).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class DomainError(ValueError):
    """Inputs outside the region where a formula has a physical meaning."""


LN10_OVER_20 = math.log(10.0) / 20.0


def db_to_level(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def level_to_db(level):
    return 10.0 * np.log10(level)


def squeezing_r_from_db(db: float) -> float:
    """r_m from a squeezing level in dB (``-3.1`` -> 0.357)."""
    return 0.0 - db * LN10_OVER_20


def antisqueezing_r_from_db(db: float) -> float:
    """r_p from an anti-squeezing level in dB (``5.1`` -> 0.587)."""
    return db * LN10_OVER_20


@dataclass(frozen=True)
class SqueezedBeam:
    """Phase-squeezed input beam.

    alpha_sq is the coherent photon flux |alpha|^2 in 1/s; r_m and r_p are the
    measured (post-loss) squeezing and anti-squeezing parameters; eta is the
    homodyne detection efficiency. The squeezing parameters already include
    the detection loss, so eta only rescales the coherent flux that reaches
    the detector (see :attr:`detected_alpha_sq`).
    """

    alpha_sq: float
    r_m: float = 0.0
    r_p: float = 0.0
    eta: float = 1.0

    def __post_init__(self):
        if not (self.alpha_sq >= 0.0 and math.isfinite(self.alpha_sq)):
            raise ValueError(f"alpha_sq must be finite and >= 0, got {self.alpha_sq!r}")
        if self.r_m < 0.0:
            raise ValueError(f"r_m must be >= 0, got {self.r_m!r}")
        if self.r_p < self.r_m:
            raise ValueError(
                f"r_p ({self.r_p!r}) must be >= r_m ({self.r_m!r}): "
                "R_minus * R_plus < 1 violates the uncertainty principle"
            )
        if not 0.0 < self.eta <= 1.0:
            raise ValueError(f"eta must lie in (0, 1], got {self.eta!r}")

    @classmethod
    def from_db(cls, alpha_sq: float, squeezing_db: float, antisqueezing_db: float, eta: float = 1.0):
        return cls(alpha_sq, squeezing_r_from_db(squeezing_db), antisqueezing_r_from_db(antisqueezing_db), eta)

    @classmethod
    def coherent(cls, alpha_sq: float, eta: float = 1.0):
        return cls(alpha_sq, 0.0, 0.0, eta)

    @property
    def r_minus(self) -> float:
        return math.exp(-2.0 * self.r_m)

    @property
    def r_plus(self) -> float:
        return math.exp(2.0 * self.r_p)

    @property
    def squeezing_db(self) -> float:
        return 0.0 - 20.0 * self.r_m / math.log(10.0)

    @property
    def antisqueezing_db(self) -> float:
        return 20.0 * self.r_p / math.log(10.0)

    @property
    def detected_alpha_sq(self) -> float:
        return self.eta * self.alpha_sq

    @property
    def is_pure(self) -> bool:
        return self.r_m == self.r_p


@dataclass(frozen=True)
class LossModel:
    """Optical loss ``l_sq`` and, optionally, the detector figures behind eta."""

    l_sq: float
    xi: float | None = None
    rho: float | None = None
    zeta: float | None = None
    shot_to_circuit: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.l_sq < 1.0:
            raise ValueError(f"l_sq must lie in [0, 1), got {self.l_sq!r}")

    @property
    def eta(self) -> float:
        parts = (self.xi, self.rho, self.zeta, self.shot_to_circuit)
        if any(p is None for p in parts):
            raise ValueError("xi, rho, zeta and shot_to_circuit are all needed for eta")
        return efficiency(*parts)


@dataclass(frozen=True)
class BandwidthModel:
    """Lorentzian squeezing spectrum: half cavity decay rate and pump parameter x.

    ``delta_omega0`` may be ``math.inf`` for broadband (white) squeezing.
    """

    delta_omega0: float
    x: float

    def __post_init__(self):
        if not self.delta_omega0 > 0.0:
            raise ValueError(f"delta_omega0 must be > 0, got {self.delta_omega0!r}")
        if not 0.0 <= self.x < 1.0:
            raise ValueError(f"x must lie in [0, 1), got {self.x!r}")

    @property
    def squeezed_pole(self) -> float:
        return (1.0 + self.x) * self.delta_omega0

    @property
    def antisqueezed_pole(self) -> float:
        return (1.0 - self.x) * self.delta_omega0

    @classmethod
    def for_levels(cls, delta_omega0: float, r_minus: float, r_plus: float):
        return cls(delta_omega0, pump_x(r_minus, r_plus))


# -- homodyne current -------------------------------------------------------


def homodyne_increment_full(delta, beam: SqueezedBeam, dt, noise_x, noise_p):
    """Current increment ``I dt`` for a tracking error ``delta`` (rad).

    ``noise_x`` and ``noise_p`` are the squeezed and anti-squeezed quadrature
    increments (variances ``R_minus dt`` and ``R_plus dt`` when white). The
    coherent amplitude is the detected one, ``sqrt(eta) |alpha|``.
    """
    amp = math.sqrt(beam.detected_alpha_sq)
    s = np.sin(delta)
    return 2.0 * amp * s * dt + s * noise_p + np.cos(delta) * noise_x


def homodyne_increment_second_order(delta, beam: SqueezedBeam, dt, noise):
    """Second-order expansion in ``delta``; ``noise`` is a unit-rate increment (variance dt)."""
    amp = math.sqrt(beam.detected_alpha_sq)
    d2 = np.square(delta)
    rate = d2 * beam.r_plus + (1.0 - d2) * beam.r_minus
    return 2.0 * amp * delta * dt + np.sqrt(rate) * noise


def homodyne_variance_rate(delta, beam: SqueezedBeam):
    """Conditional variance per unit time of the full-model current."""
    return np.sin(delta) ** 2 * beam.r_plus + np.cos(delta) ** 2 * beam.r_minus


def effective_R(sigma_f_sq: float, r_m: float, r_p: float) -> float:
    """Time-averaged squeezing factor seen by a filter with tracking MSE sigma_f_sq."""
    if not 0.0 <= sigma_f_sq <= 1.0:
        raise DomainError(
            f"sigma_f_sq={sigma_f_sq!r} outside [0, 1]: the small-error expansion does not apply"
        )
    return sigma_f_sq * math.exp(2.0 * r_p) + (1.0 - sigma_f_sq) * math.exp(-2.0 * r_m)


# -- loss and efficiency ----------------------------------------------------


def lossy_levels(r: float, l_sq: float) -> tuple[float, float]:
    """(R_minus, R_plus) after a pure squeezer with parameter r suffers loss l_sq."""
    if r < 0.0:
        raise ValueError(f"r must be >= 0, got {r!r}")
    if not 0.0 <= l_sq <= 1.0:
        raise ValueError(f"l_sq must lie in [0, 1], got {l_sq!r}")
    keep = 1.0 - l_sq
    return keep * math.exp(-2.0 * r) + l_sq, keep * math.exp(2.0 * r) + l_sq


def antisq_from_sq(r_minus: float, l_sq: float) -> float:
    """Anti-squeezing level implied by a measured squeezing level and loss l_sq."""
    if not 0.0 <= l_sq < 1.0:
        raise ValueError(f"l_sq must lie in [0, 1), got {l_sq!r}")
    if r_minus <= l_sq or r_minus > 1.0:
        raise DomainError(f"R_minus={r_minus!r} must lie in (l_sq={l_sq!r}, 1]")
    keep = 1.0 - l_sq
    return keep * keep / (r_minus - l_sq) + l_sq


def pure_r_from_sq(r_minus: float, l_sq: float) -> float:
    """Invert :func:`lossy_levels` for the pure squeezing parameter."""
    if r_minus <= l_sq or r_minus > 1.0:
        raise DomainError(f"R_minus={r_minus!r} must lie in (l_sq={l_sq!r}, 1]")
    return -0.5 * math.log((r_minus - l_sq) / (1.0 - l_sq))


def efficiency(xi: float, rho: float, zeta: float, shot_to_circuit: float) -> float:
    """Homodyne efficiency from visibility, transmission, diode QE and shot/circuit ratio S."""
    if shot_to_circuit <= 1.0:
        raise DomainError(
            f"S={shot_to_circuit!r} must exceed 1 (circuit noise at or above shot noise)"
        )
    for name, v in (("xi", xi), ("rho", rho), ("zeta", zeta)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1], got {v!r}")
    return xi * xi * rho * zeta * (shot_to_circuit - 1.0) / shot_to_circuit


# -- spectra and photon flux ------------------------------------------------


def spectrum(omega, level: float, bw: BandwidthModel, sign: int):
    """Quadrature noise spectrum; ``sign=-1`` squeezed, ``sign=+1`` anti-squeezed."""
    if sign not in (-1, 1):
        raise ValueError("sign must be -1 (squeezed) or +1 (anti-squeezed)")
    pole = bw.antisqueezed_pole if sign > 0 else bw.squeezed_pole
    omega = np.asarray(omega, dtype=float)
    if math.isinf(pole):
        return np.full_like(omega, level) if omega.ndim else float(level)
    p2 = pole * pole
    return 1.0 + (level - 1.0) * p2 / (omega * omega + p2)


def pump_x(r_minus: float, r_plus: float) -> float:
    """Normalized pump amplitude x consistent with the centre levels R_minus < 1 < R_plus."""
    if not (r_minus < 1.0 < r_plus):
        raise DomainError(f"need R_minus < 1 < R_plus, got ({r_minus!r}, {r_plus!r})")
    if r_minus <= 0.0:
        raise DomainError(f"R_minus must be positive, got {r_minus!r}")
    num = r_plus - r_minus - 2.0 * math.sqrt((1.0 - r_minus) * (r_plus - 1.0))
    return num / (r_plus + r_minus - 2.0)


def photon_number_density(omega, r_minus: float, r_plus: float, bw: BandwidthModel):
    """Squeezing photons per frequency mode, ``n(Omega)``."""
    total = spectrum(omega, r_plus, bw, +1) + spectrum(omega, r_minus, bw, -1)
    return 0.25 * total - 0.5


def photon_flux_sq(r_minus: float, r_plus: float, x: float, delta_omega: float) -> float:
    """Photon flux (1/s) of squeezed vacuum whose spectrum has half-rate ``delta_omega``."""
    if not delta_omega > 0.0:
        raise ValueError(f"delta_omega must be > 0, got {delta_omega!r}")
    return 0.25 * ((r_plus - 1.0) * (1.0 - x) + (r_minus - 1.0) * (1.0 + x)) * delta_omega / 2.0


def effective_bandwidth(lam: float, gamma: float) -> float:
    """Narrowest squeezing band that leaves the tracking MSE essentially unchanged."""
    if lam < 0.0 or gamma < 0.0:
        raise ValueError("lambda and gamma must be non-negative")
    return 2.0 * (lam + gamma)
