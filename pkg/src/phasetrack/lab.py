"""Closed-loop Monte Carlo experiments and the sweeps built on them.

A :class:`Scenario` fixes the signal, the beam, the noise model and the
sampling. :func:`run_closed_loop` produces one :class:`Trajectory`;
:func:`monte_carlo` aggregates independent trials into an :class:`MseReport`
next to the closed-form predictions. Sweep functions return :class:`Table`
records for the command-line front end.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from functools import cached_property

import numpy as np
from scipy.signal import correlate

from . import estimator as est
from . import optics, presets
from ._loop import EFFECTIVE_WHITE, FULL_SINE, SECOND_ORDER, closed_loop
from .optics import BandwidthModel, SqueezedBeam
from .sde import (
    STREAM_QUAD_P,
    STREAM_QUAD_X,
    STREAM_SIGNAL,
    OUParams,
    ShapingFilterState,
    shaped_increments,
    stationary_ou_path,
    trial_rng,
)

NOISE_MODELS = {"full-sine": FULL_SINE, "second-order": SECOND_ORDER, "effective-white": EFFECTIVE_WHITE}

MAX_LOOP_DT = 0.05  # dt * (lambda + gamma) must not exceed this
WARMUP_TIMES = 5.0  # warmup in units of 1/lambda
TAIL_TIMES = 5.0  # smoother truncation in units of 1/(lambda + gamma)


@dataclass(frozen=True)
class Scenario:
    """Everything needed to reproduce one closed-loop experiment.

    ``bw=None`` means broadband (white) squeezing. ``warmup=None`` selects
    5/lambda. Times are in seconds.
    """

    ou: OUParams = field(default_factory=lambda: OUParams(presets.KAPPA, presets.LAMBDA))
    beam: SqueezedBeam = field(default_factory=lambda: SqueezedBeam(presets.ALPHA_SQ))
    bw: BandwidthModel | None = None
    noise_model: str = "full-sine"
    dt: float = presets.DT
    duration: float = presets.DURATION
    warmup: float | None = None
    trials: int = presets.TRIALS
    master_seed: int = 0
    gain_objective: str = "filter"

    def __post_init__(self):
        if self.noise_model not in NOISE_MODELS:
            raise ValueError(f"noise_model must be one of {sorted(NOISE_MODELS)}, got {self.noise_model!r}")
        if self.bw is not None and self.noise_model != "full-sine":
            raise ValueError("finite-bandwidth squeezing needs the full-sine noise model")
        if self.gain_objective not in ("filter", "smoother"):
            raise ValueError(f"gain_objective must be 'filter' or 'smoother', got {self.gain_objective!r}")
        if not (self.dt > 0.0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be > 0, got {self.dt!r}")
        if not self.duration > 0.0:
            raise ValueError(f"duration must be > 0, got {self.duration!r}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials!r}")
        if self.master_seed < 0:
            raise ValueError(f"master_seed must be >= 0, got {self.master_seed!r}")
        min_warmup = WARMUP_TIMES / self.ou.lam
        if self.warmup is None:
            object.__setattr__(self, "warmup", min_warmup)
        elif self.warmup < min_warmup * (1.0 - 1e-12):
            raise ValueError(f"warmup must be >= 5/lambda = {min_warmup:.4g} s, got {self.warmup!r}")
        rate = self.loop_rate
        if self.dt * rate > MAX_LOOP_DT * (1.0 + 1e-12):
            raise ValueError(
                f"dt={self.dt:.3g} s does not resolve the loop: need dt <= {MAX_LOOP_DT}/(lambda+gamma) "
                f"= {MAX_LOOP_DT / rate:.3g} s"
            )

    @cached_property
    def prediction(self) -> est.MsePrediction:
        """Closed-form MSEs for this scenario (detected flux, measured squeezing)."""
        a_det = self.beam.detected_alpha_sq
        k, lam = self.ou.kappa, self.ou.lam
        if self.bw is None:
            return est.predict_broadband(a_det, k, lam, self.beam.r_m, self.beam.r_p)
        return est.predict_finite_bw(
            a_det, k, lam, self.beam.r_minus, self.beam.r_plus, self.bw, self.gain_objective
        )

    @property
    def gamma(self) -> float:
        return self.prediction.gamma

    @property
    def loop_rate(self) -> float:
        return self.ou.lam + self.gamma

    @property
    def csl_sigma_s_sq(self) -> float:
        """Smoothed MSE of a lossless coherent beam with the same flux."""
        return est.sigma_s(self.beam.alpha_sq, self.ou.kappa, self.ou.lam, 1.0)

    @property
    def steps(self) -> tuple[int, int, int]:
        """(warmup, statistics window, smoother tail) in samples."""
        n_warm = math.ceil(self.warmup / self.dt - 1e-9)
        n_stat = max(1, round(self.duration / self.dt))
        n_tail = math.ceil(TAIL_TIMES / self.loop_rate / self.dt - 1e-9)
        return n_warm, n_stat, n_tail

    def with_beam(self, **changes) -> Scenario:
        return replace(self, beam=replace(self.beam, **changes))

    def to_dict(self) -> dict:
        return {
            "alpha_sq": self.beam.alpha_sq,
            "r_m": self.beam.r_m,
            "r_p": self.beam.r_p,
            "eta": self.beam.eta,
            "kappa": self.ou.kappa,
            "lambda": self.ou.lam,
            "delta_omega0": None if self.bw is None else self.bw.delta_omega0,
            "pump_x": None if self.bw is None else self.bw.x,
            "noise_model": self.noise_model,
            "dt": self.dt,
            "duration": self.duration,
            "warmup": self.warmup,
            "trials": self.trials,
            "master_seed": self.master_seed,
            "gain_objective": self.gain_objective,
        }


@dataclass(frozen=True)
class NoisePaths:
    phi: np.ndarray
    noise_x: np.ndarray
    noise_p: np.ndarray
    dt: float

    def coarsen(self, factor: int) -> NoisePaths:
        """Same Brownian paths on a grid ``factor`` times coarser."""
        if factor == 1:
            return self
        n = self.phi.shape[0] // factor
        fold = lambda a: a[: n * factor].reshape(n, factor).sum(axis=1)  # noqa: E731
        return NoisePaths(self.phi[: n * factor : factor], fold(self.noise_x), fold(self.noise_p), self.dt * factor)


def draw_noise(sc: Scenario, trial_index: int, n: int, dt: float) -> NoisePaths:
    """Signal and quadrature noise for one trial on a grid of ``n`` steps of ``dt``.

    Signal, squeezed and anti-squeezed channels come from separate streams,
    so switching noise model leaves the signal path unchanged.

    With a finite squeezing band the anti-squeezed noise is correlated over
    ~1/pole, and the loop reacts to it within that time; the product
    ``sin(Delta) dP`` then has a nonzero mean. The linear band-limited
    prediction neglects this, so band-limited runs sit a few percent above it
    (about 2% near the effective bandwidth, more for much wider bands).
    """
    phi = stationary_ou_path(sc.ou, dt, n, trial_rng(sc.master_seed, trial_index, STREAM_SIGNAL))
    root_dt = math.sqrt(dt)
    wx = root_dt * trial_rng(sc.master_seed, trial_index, STREAM_QUAD_X).standard_normal(n)
    if sc.noise_model != "full-sine":
        return NoisePaths(phi, wx, np.zeros(0), dt)
    wp = root_dt * trial_rng(sc.master_seed, trial_index, STREAM_QUAD_P).standard_normal(n)
    r_minus, r_plus = sc.beam.r_minus, sc.beam.r_plus
    if sc.bw is None:
        return NoisePaths(phi, math.sqrt(r_minus) * wx, math.sqrt(r_plus) * wp, dt)
    _, nx = shaped_increments(ShapingFilterState(sc.bw.squeezed_pole, r_minus), wx, dt)
    _, npp = shaped_increments(ShapingFilterState(sc.bw.antisqueezed_pole, r_plus), wp, dt)
    return NoisePaths(phi, nx, npp, dt)


@dataclass
class Trajectory:
    """Sampled record of one closed-loop run; every series shares the grid ``t``."""

    t: np.ndarray
    phi: np.ndarray
    current: np.ndarray  # increments I dt
    phi_f: np.ndarray
    phi_s: np.ndarray
    window: slice  # samples used for statistics
    gamma: float
    lam: float

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    @property
    def delta_f(self) -> np.ndarray:
        return self.phi - self.phi_f

    @property
    def delta_s(self) -> np.ndarray:
        return self.phi - self.phi_s

    @property
    def mse_f(self) -> float:
        return float(np.mean(self.delta_f[self.window] ** 2))

    @property
    def mse_s(self) -> float:
        return float(np.mean(self.delta_s[self.window] ** 2))


def run_closed_loop(sc: Scenario, trial_index: int = 0, refine: int = 1) -> Trajectory:
    """One closed-loop run, deterministic in ``(sc.master_seed, trial_index)``.

    With ``refine > 1`` the noise is drawn on a grid ``refine`` times finer
    and summed back onto ``sc.dt``; a run of the refined scenario then sees
    the same Brownian paths, which is what a step-size convergence check needs.
    """
    if refine < 1:
        raise ValueError(f"refine must be >= 1, got {refine!r}")
    n_warm, n_stat, n_tail = sc.steps
    n = n_warm + n_stat + n_tail
    paths = draw_noise(sc, trial_index, n * refine, sc.dt / refine).coarsen(refine)

    pred = sc.prediction
    amp = math.sqrt(sc.beam.detected_alpha_sq)
    cfg = est.FilterConfig(pred.gamma, sc.ou.lam, amp)
    noise_p = paths.noise_p if paths.noise_p.size else paths.noise_x
    phi_f, current = closed_loop(
        paths.phi,
        paths.noise_x,
        noise_p,
        NOISE_MODELS[sc.noise_model],
        amp,
        cfg.input_gain,
        sc.ou.lam,
        sc.dt,
        sc.beam.r_minus,
        sc.beam.r_plus,
        pred.r_bar,
        0.0,
    )
    phi_s = est.smooth(phi_f, sc.ou.lam, pred.gamma, sc.dt)
    return Trajectory(
        t=np.arange(n) * sc.dt,
        phi=paths.phi,
        current=current,
        phi_f=phi_f,
        phi_s=phi_s,
        window=slice(n_warm, n_warm + n_stat),
        gamma=pred.gamma,
        lam=sc.ou.lam,
    )


@dataclass(frozen=True)
class MseReport:
    sigma_f_sq_mean: float
    sigma_f_sq_stderr: float
    sigma_s_sq_mean: float
    sigma_s_sq_stderr: float
    trials: int
    predicted: est.MsePrediction
    csl_sigma_s_sq: float
    improvement_vs_csl: float  # 1 - sigma_s^2 / CSL
    per_trial_f: tuple[float, ...]
    per_trial_s: tuple[float, ...]
    independent_samples: float  # ~ duration * lambda per trial

    def to_row(self) -> dict:
        p = self.predicted
        return {
            "mse_f_mc_mean": self.sigma_f_sq_mean,
            "mse_f_mc_stderr": self.sigma_f_sq_stderr,
            "mse_s_mc_mean": self.sigma_s_sq_mean,
            "mse_s_mc_stderr": self.sigma_s_sq_stderr,
            "mse_f_pred": p.sigma_f_sq,
            "mse_s_pred": p.sigma_s_sq,
            "mse_csl": self.csl_sigma_s_sq,
            "improvement_vs_csl": self.improvement_vs_csl,
            "gamma": p.gamma,
            "r_bar": p.r_bar,
            "epsilon": p.epsilon,
            "trials": self.trials,
        }


def _mean_stderr(values: np.ndarray) -> tuple[float, float]:
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(values.size))


def monte_carlo(sc: Scenario, jobs: int = 1) -> MseReport:
    """Independent closed-loop trials aggregated into mean and standard error.

    Trials may run on ``jobs`` threads (the loop kernel releases the GIL);
    results are joined in trial order, so the report does not depend on
    ``jobs``.
    """
    if sc.trials < 2:
        raise ValueError(f"monte_carlo needs at least 2 trials, got {sc.trials}")

    def one(i):
        tr = run_closed_loop(sc, i)
        return tr.mse_f, tr.mse_s

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, range(sc.trials)))
    else:
        results = [one(i) for i in range(sc.trials)]
    mse_f = np.array([r[0] for r in results])
    mse_s = np.array([r[1] for r in results])
    f_mean, f_err = _mean_stderr(mse_f)
    s_mean, s_err = _mean_stderr(mse_s)
    csl = sc.csl_sigma_s_sq
    return MseReport(
        sigma_f_sq_mean=f_mean,
        sigma_f_sq_stderr=f_err,
        sigma_s_sq_mean=s_mean,
        sigma_s_sq_stderr=s_err,
        trials=sc.trials,
        predicted=sc.prediction,
        csl_sigma_s_sq=csl,
        improvement_vs_csl=1.0 - s_mean / csl if csl > 0 else 0.0,
        per_trial_f=tuple(mse_f.tolist()),
        per_trial_s=tuple(mse_s.tolist()),
        independent_samples=sc.duration * sc.ou.lam,
    )


# -- tables ------------------------------------------------------------------


@dataclass
class Table:
    """Column-ordered records; ``columns`` pairs each name with its unit."""

    columns: tuple[tuple[str, str], ...]
    rows: list[dict] = field(default_factory=list)

    @property
    def names(self) -> list[str]:
        return [c[0] for c in self.columns]

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows], dtype=float)

    def append(self, **values):
        missing = set(self.names) - set(values)
        if missing:
            raise KeyError(f"row is missing columns {sorted(missing)}")
        self.rows.append({k: values[k] for k in self.names})


def _first_order_sigma_s(alpha_sq, kappa, lam, r_m):
    return est.sigma_s(alpha_sq, kappa, lam, math.exp(-2.0 * r_m))


def _pure_sigma_s(alpha_sq, kappa, lam, r):
    return est.smoothed_mse_for_pure_r(r, alpha_sq, kappa, lam, 0.0)


def sweep_squeezing(base: Scenario, levels, simulate: bool = True, jobs: int = 1) -> Table:
    """Smoothed MSE against squeezing level.

    Traces: ``mse_csl`` lossless coherent limit; ``mse_pred`` the
    self-consistent theory with the measured levels and detection efficiency;
    ``mse_first_order`` the theory with the squeezed variance alone;
    ``mse_pure`` a lossless pure state with the same squeezing.
    """
    levels = list(levels)
    if not levels:
        raise ValueError("sweep_squeezing needs at least one (r_m, r_p) level")
    table = Table(
        (
            ("squeezing_db", "dB"),
            ("antisqueezing_db", "dB"),
            ("mse_mc_mean", "rad^2"),
            ("mse_mc_stderr", "rad^2"),
            ("mse_pred", "rad^2"),
            ("mse_csl", "rad^2"),
            ("mse_first_order", "rad^2"),
            ("mse_pure", "rad^2"),
        )
    )
    k, lam = base.ou.kappa, base.ou.lam
    for r_m, r_p in levels:
        sc = base.with_beam(r_m=r_m, r_p=r_p)
        a_det = sc.beam.detected_alpha_sq
        if simulate:
            rep = monte_carlo(sc, jobs)
            mc_mean, mc_err = rep.sigma_s_sq_mean, rep.sigma_s_sq_stderr
        else:
            mc_mean = mc_err = math.nan
        table.append(
            squeezing_db=sc.beam.squeezing_db,
            antisqueezing_db=sc.beam.antisqueezing_db,
            mse_mc_mean=mc_mean,
            mse_mc_stderr=mc_err,
            mse_pred=est.predict_broadband(a_det, k, lam, r_m, r_p).sigma_s_sq,
            mse_csl=sc.csl_sigma_s_sq,
            mse_first_order=_first_order_sigma_s(a_det, k, lam, r_m),
            mse_pure=_pure_sigma_s(sc.beam.alpha_sq, k, lam, r_m),
        )
    return table


def squeezing_flux(beam: SqueezedBeam, delta_omega: float) -> float:
    """Photon flux of the beam's squeezed vacuum within a band of half-rate ``delta_omega``."""
    r_minus, r_plus = beam.r_minus, beam.r_plus
    if not r_minus < 1.0 < r_plus:
        return 0.0
    return optics.photon_flux_sq(r_minus, r_plus, optics.pump_x(r_minus, r_plus), delta_omega)


def sweep_alpha(
    base: Scenario, alpha_sq_list, l_sq: float = presets.L_SQ, simulate: bool = True, jobs: int = 1
) -> Table:
    """Smoothed MSE against coherent flux for squeezed and coherent beams.

    Traces: ``mse_csl`` lossless coherent limit; ``mse_coh_pred`` coherent
    beam with the detection efficiency; ``mse_sq_pred`` the fixed squeezed
    beam with efficiency; ``mse_pure_opt`` a lossless pure state with the
    squeezing optimized per flux. ``fixed_vs_optimal`` compares the fixed
    squeezing with the best level reachable along the loss curve ``l_sq``.
    ``n_eff`` adds the squeezed-vacuum flux within 2(lambda + gamma).
    """
    table = Table(
        (
            ("alpha_sq", "1/s"),
            ("mse_sq_mc_mean", "rad^2"),
            ("mse_sq_mc_stderr", "rad^2"),
            ("mse_coh_mc_mean", "rad^2"),
            ("mse_coh_mc_stderr", "rad^2"),
            ("mse_csl", "rad^2"),
            ("mse_coh_pred", "rad^2"),
            ("mse_sq_pred", "rad^2"),
            ("mse_pure_opt", "rad^2"),
            ("optimal_squeezing_db", "dB"),
            ("fixed_vs_optimal", "1"),
            ("squeezing_flux", "1/s"),
            ("n_eff", "1/s"),
        )
    )
    k, lam = base.ou.kappa, base.ou.lam
    for alpha_sq in alpha_sq_list:
        sq = base.with_beam(alpha_sq=alpha_sq)
        coh = base.with_beam(alpha_sq=alpha_sq, r_m=0.0, r_p=0.0)
        a_det = sq.beam.detected_alpha_sq
        if simulate:
            rs, rc = monte_carlo(sq, jobs), monte_carlo(coh, jobs)
            mc = (rs.sigma_s_sq_mean, rs.sigma_s_sq_stderr, rc.sigma_s_sq_mean, rc.sigma_s_sq_stderr)
        else:
            mc = (math.nan,) * 4
        fixed = est.predict_broadband(a_det, k, lam, sq.beam.r_m, sq.beam.r_p)
        best_lossy = est.optimal_squeezing(a_det, k, lam, l_sq)
        pure = est.optimal_squeezing(alpha_sq, k, lam, 0.0)
        flux = squeezing_flux(sq.beam, optics.effective_bandwidth(lam, fixed.gamma))
        table.append(
            alpha_sq=alpha_sq,
            mse_sq_mc_mean=mc[0],
            mse_sq_mc_stderr=mc[1],
            mse_coh_mc_mean=mc[2],
            mse_coh_mc_stderr=mc[3],
            mse_csl=sq.csl_sigma_s_sq,
            mse_coh_pred=est.sigma_s(a_det, k, lam, 1.0),
            mse_sq_pred=fixed.sigma_s_sq,
            mse_pure_opt=pure.sigma_s_sq,
            optimal_squeezing_db=pure.squeezing_db,
            fixed_vs_optimal=fixed.sigma_s_sq / best_lossy.sigma_s_sq - 1.0,
            squeezing_flux=flux,
            n_eff=alpha_sq + flux,
        )
    return table


@dataclass
class HeatmapResult:
    squeezing_db: np.ndarray  # (n_sq,), <= 0
    antisqueezing_db: np.ndarray  # (n_asq,), >= 0
    mse: np.ndarray  # (n_sq, n_asq), NaN where forbidden
    forbidden: np.ndarray  # bool, R_minus * R_plus < 1
    loss_curve_antisqueezing_db: np.ndarray  # (n_sq,), NaN where unreachable
    loss_curve_mse: np.ndarray  # (n_sq,)
    l_sq: float

    def to_table(self) -> Table:
        table = Table(
            (
                ("squeezing_db", "dB"),
                ("antisqueezing_db", "dB"),
                ("mse_pred", "rad^2"),
                ("forbidden", "bool"),
                ("loss_curve_antisqueezing_db", "dB"),
                ("mse_loss_curve", "rad^2"),
            )
        )
        for i, s_db in enumerate(self.squeezing_db):
            for j, a_db in enumerate(self.antisqueezing_db):
                table.append(
                    squeezing_db=float(s_db),
                    antisqueezing_db=float(a_db),
                    mse_pred=float(self.mse[i, j]),
                    forbidden=int(self.forbidden[i, j]),
                    loss_curve_antisqueezing_db=float(self.loss_curve_antisqueezing_db[i]),
                    mse_loss_curve=float(self.loss_curve_mse[i]),
                )
        return table


def heatmap_squeezing(base: Scenario, squeezing_db, antisqueezing_db, l_sq: float = presets.L_SQ) -> HeatmapResult:
    """Closed-form smoothed MSE over a grid of measured squeezing / anti-squeezing levels.

    Uses the scenario's detected flux. The loss curve gives, for each
    squeezing level, the anti-squeezing a pure squeezer followed by loss
    ``l_sq`` would show.
    """
    sq_db = np.asarray(squeezing_db, dtype=float)
    asq_db = np.asarray(antisqueezing_db, dtype=float)
    if np.any(sq_db > 0) or np.any(asq_db < 0):
        raise ValueError("squeezing levels must be <= 0 dB and anti-squeezing levels >= 0 dB")
    k, lam = base.ou.kappa, base.ou.lam
    a_det = base.beam.detected_alpha_sq

    def mse_at(r_m, r_p):
        return est.predict_broadband(a_det, k, lam, r_m, r_p).sigma_s_sq

    r_m = np.array([optics.squeezing_r_from_db(d) for d in sq_db])
    r_p = np.array([optics.antisqueezing_r_from_db(d) for d in asq_db])
    forbidden = (sq_db[:, None] + asq_db[None, :]) < 0.0
    mse = np.full(forbidden.shape, np.nan)
    for i in range(sq_db.size):
        for j in range(asq_db.size):
            if not forbidden[i, j]:
                mse[i, j] = mse_at(r_m[i], r_p[j])
    curve_db = np.full(sq_db.size, np.nan)
    curve_mse = np.full(sq_db.size, np.nan)
    for i, d in enumerate(sq_db):
        r_minus = float(optics.db_to_level(d))
        if r_minus > l_sq:
            r_plus = optics.antisq_from_sq(r_minus, l_sq)
            curve_db[i] = float(optics.level_to_db(r_plus))
            curve_mse[i] = mse_at(-0.5 * math.log(r_minus), 0.5 * math.log(r_plus))
    return HeatmapResult(sq_db, asq_db, mse, forbidden, curve_db, curve_mse, l_sq)


# -- correlation analysis ------------------------------------------------------


def autocorrelation(x: np.ndarray, max_lag: int) -> np.ndarray:
    """Normalized autocorrelation of ``x`` (mean removed) for lags 0..max_lag."""
    x = np.asarray(x, dtype=float) - np.mean(x)
    n = x.size
    if max_lag >= n:
        raise ValueError("max_lag must be shorter than the series")
    full = correlate(x, x, mode="full", method="fft")[n - 1 : n + max_lag]
    full = full / (n - np.arange(max_lag + 1))
    return full / full[0]


def fit_correlation_time(acf: np.ndarray, dt: float, floor: float = math.exp(-2.0)) -> float:
    """Exponential decay time of an autocorrelation, fitted in log space above ``floor``."""
    below = np.nonzero(acf < floor)[0]
    stop = below[0] if below.size else acf.size
    if stop < 3:
        raise ValueError("autocorrelation decays within two lags; sample more finely")
    lags = np.arange(stop) * dt
    slope, _ = np.polyfit(lags, np.log(acf[:stop]), 1)
    return -1.0 / slope


@dataclass(frozen=True)
class AutocorrReport:
    lags: np.ndarray
    acf_delta: np.ndarray
    acf_delta_sq: np.ndarray
    tau_delta: float
    tau_delta_sq: float
    tau_delta_theory: float  # 1 / (lambda + gamma)
    tau_delta_sq_theory: float  # half of the above


def autocorr_report(tr: Trajectory, span: float = 5.0) -> AutocorrReport:
    """Correlation times of the tracking error and its square.

    ``span`` sets the longest lag in units of 1/(lambda + gamma).
    """
    rate = tr.lam + tr.gamma
    x = tr.delta_f[tr.window]
    if x.size * tr.dt < 100.0 / rate:
        raise ValueError("statistics window shorter than 100/(lambda+gamma); run longer")
    max_lag = max(4, int(round(span / rate / tr.dt)))
    acf_d = autocorrelation(x, max_lag)
    acf_d2 = autocorrelation(x * x, max_lag)
    return AutocorrReport(
        lags=np.arange(max_lag + 1) * tr.dt,
        acf_delta=acf_d,
        acf_delta_sq=acf_d2,
        tau_delta=fit_correlation_time(acf_d, tr.dt),
        tau_delta_sq=fit_correlation_time(acf_d2, tr.dt),
        tau_delta_theory=1.0 / rate,
        tau_delta_sq_theory=0.5 / rate,
    )


def cross_correlation_peak(x: np.ndarray, y: np.ndarray, dt: float, max_lag: int) -> float:
    """Lag (s) maximizing ``<x(t) y(t + tau)>``, refined by a parabola through the top three points."""
    x = np.asarray(x, dtype=float) - np.mean(x)
    y = np.asarray(y, dtype=float) - np.mean(y)
    n = x.size
    full = correlate(y, x, mode="full", method="fft")
    lags = np.arange(-n + 1, n)
    keep = np.abs(lags) <= max_lag
    c, lags = full[keep], lags[keep]
    i = int(np.argmax(c))
    shift = 0.0
    if 0 < i < c.size - 1:
        den = c[i - 1] - 2.0 * c[i] + c[i + 1]
        if den != 0.0:
            shift = 0.5 * (c[i - 1] - c[i + 1]) / den
    return (lags[i] + shift) * dt


# -- bandwidth accounting ------------------------------------------------------


def bandwidth_comparison(
    base: Scenario, alpha_sq_list, delta_omega: float | None = None, objective: str = "filter"
) -> Table:
    """Broadband versus band-limited smoothed MSE, plus the effective photon flux.

    The band-limited spectrum uses the beam's centre levels with the
    half-rate set to ``delta_omega`` (default: 2(lambda + gamma) per flux).
    """
    r_minus, r_plus = base.beam.r_minus, base.beam.r_plus
    if not r_minus < 1.0 < r_plus:
        raise ValueError("bandwidth comparison needs a squeezed beam (R_minus < 1 < R_plus)")
    x = optics.pump_x(r_minus, r_plus)
    k, lam = base.ou.kappa, base.ou.lam
    table = Table(
        (
            ("alpha_sq", "1/s"),
            ("gamma", "rad/s"),
            ("delta_omega_eff", "rad/s"),
            ("mse_broadband", "rad^2"),
            ("mse_finite_bw", "rad^2"),
            ("gap", "1"),
            ("gamma_finite_bw", "rad/s"),
            ("squeezing_flux", "1/s"),
            ("n_eff", "1/s"),
            ("flux_share", "1"),
        )
    )
    for alpha_sq in alpha_sq_list:
        a_det = base.beam.eta * alpha_sq
        broad = est.predict_broadband(a_det, k, lam, base.beam.r_m, base.beam.r_p)
        d_eff = optics.effective_bandwidth(lam, broad.gamma) if delta_omega is None else delta_omega
        finite = est.predict_finite_bw(a_det, k, lam, r_minus, r_plus, BandwidthModel(d_eff, x), objective)
        flux = 0.0 if math.isinf(d_eff) else optics.photon_flux_sq(r_minus, r_plus, x, d_eff)
        table.append(
            alpha_sq=alpha_sq,
            gamma=broad.gamma,
            delta_omega_eff=d_eff,
            mse_broadband=broad.sigma_s_sq,
            mse_finite_bw=finite.sigma_s_sq,
            gap=finite.sigma_s_sq / broad.sigma_s_sq - 1.0,
            gamma_finite_bw=finite.gamma,
            squeezing_flux=flux,
            n_eff=alpha_sq + flux,
            flux_share=flux / (alpha_sq + flux),
        )
    return table


def prediction_row(sc: Scenario) -> dict:
    p = sc.prediction
    row = asdict(p)
    row.update(
        alpha_sq=sc.beam.alpha_sq,
        csl_sigma_s_sq=sc.csl_sigma_s_sq,
        coherent_sigma_s_sq=est.sigma_s(sc.beam.detected_alpha_sq, sc.ou.kappa, sc.ou.lam, 1.0),
        improvement_vs_csl=1.0 - p.sigma_s_sq / sc.csl_sigma_s_sq if sc.csl_sigma_s_sq > 0 else 0.0,
    )
    return row
