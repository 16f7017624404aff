"""Smoothed MSE against squeezing level along the measured loss curve, with Monte Carlo.

    python scripts/squeezing_sweep.py --jobs 4
"""

import math

from _common import parser, write

from phasetrack import lab, optics, presets
from phasetrack.optics import SqueezedBeam


def main():
    p = parser(__doc__.splitlines()[0])
    p.add_argument("--max-db", type=float, default=4.0, help="deepest measured squeezing, dB")
    p.add_argument("--points", type=int, default=9)
    args = p.parse_args()
    base = lab.Scenario(
        beam=SqueezedBeam.coherent(presets.ALPHA_SQ, presets.ETA),
        duration=args.duration_ms * 1e-3,
        trials=args.trials,
        master_seed=args.seed,
    )
    levels = []
    for i in range(args.points):
        db = -args.max_db * i / (args.points - 1)
        r_minus = float(optics.db_to_level(db))
        r_plus = optics.antisq_from_sq(r_minus, presets.L_SQ) if i else 1.0
        levels.append((-0.5 * math.log(r_minus), 0.5 * math.log(r_plus)))
    table = lab.sweep_squeezing(base, levels, jobs=args.jobs)
    write(table, args.out_dir, "squeezing_sweep", base)
    for row in table.rows:
        print(
            f"{row['squeezing_db']:6.2f} dB / {row['antisqueezing_db']:5.2f} dB: MC {row['mse_mc_mean']:.4f} "
            f"+- {row['mse_mc_stderr']:.4f}, theory {row['mse_pred']:.4f}, CSL {row['mse_csl']:.4f}"
        )


if __name__ == "__main__":
    main()
