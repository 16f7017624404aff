"""Operating points of the reference experiment."""

KAPPA = 1.9e4  # rad^2/s
LAMBDA = 5.9e4  # rad/s
ALPHA_SQ = 1.0e6  # photons/s
ETA = 0.85

# squeezing of the single-trajectory operating point
R_M_TRACE = 0.36
R_P_TRACE = 0.59
# measured levels used across the amplitude sweep (dB)
SQUEEZING_DB_SWEEP = -3.2
ANTISQUEEZING_DB_SWEEP = 4.9
# centre levels used for the bandwidth / photon-flux accounting
R_MINUS_BW = 0.479
R_PLUS_BW = 3.09

L_SQ = 0.33  # fitted overall loss

DT = 1e-8  # 100 MHz sampling
DURATION = 2e-3
TRIALS = 15
ALPHA_SQ_SWEEP = (1.0e6, 2.5e6, 5.0e6, 1.0e7)
