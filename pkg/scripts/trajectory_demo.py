"""One closed-loop trajectory: signal, filtered and smoothed estimates, error statistics.

    python scripts/trajectory_demo.py --out-dir results
"""

import numpy as np
from _common import parser, write

from phasetrack import lab, presets
from phasetrack.optics import SqueezedBeam


def main():
    p = parser(__doc__.splitlines()[0])
    p.add_argument("--stride", type=int, default=50, help="keep every n-th sample")
    args = p.parse_args()
    beam = SqueezedBeam(presets.ALPHA_SQ, presets.R_M_TRACE, presets.R_P_TRACE, presets.ETA)
    sc = lab.Scenario(beam=beam, duration=args.duration_ms * 1e-3, trials=1, master_seed=args.seed)
    tr = lab.run_closed_loop(sc, 0)

    trace = lab.Table((("t", "s"), ("phi", "rad"), ("phi_f", "rad"), ("phi_s", "rad")))
    for i in range(tr.window.start, tr.window.stop, args.stride):
        trace.append(t=tr.t[i], phi=tr.phi[i], phi_f=tr.phi_f[i], phi_s=tr.phi_s[i])
    write(trace, args.out_dir, "trajectory", sc)

    acf = lab.autocorr_report(tr)
    corr = lab.Table((("lag", "s"), ("acf_delta", "1"), ("acf_delta_sq", "1")))
    for lag, a, b in zip(acf.lags, acf.acf_delta, acf.acf_delta_sq):
        corr.append(lag=lag, acf_delta=a, acf_delta_sq=b)
    write(corr, args.out_dir, "trajectory_autocorrelation", sc)

    p = sc.prediction
    print(f"MSE filtered {tr.mse_f:.4f} (theory {p.sigma_f_sq:.4f}), smoothed {tr.mse_s:.4f} (theory {p.sigma_s_sq:.4f})")
    print(f"1/Gamma = {1e6 / p.gamma:.2f} us; tau(Delta_f) = {acf.tau_delta * 1e6:.2f} us "
          f"(theory {acf.tau_delta_theory * 1e6:.2f}); tau(Delta_f^2) = {acf.tau_delta_sq * 1e6:.2f} us "
          f"(theory {acf.tau_delta_sq_theory * 1e6:.2f})")
    print(f"smoothed / filtered MSE: {tr.mse_s / tr.mse_f:.3f}; rms phase {np.std(tr.phi):.3f} rad")


if __name__ == "__main__":
    main()
