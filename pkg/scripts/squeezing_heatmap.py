"""Closed-form smoothed MSE over a squeezing / anti-squeezing grid, with the loss curve.

    python scripts/squeezing_heatmap.py
"""

import numpy as np
from _common import parser, write

from phasetrack import lab, presets
from phasetrack.optics import SqueezedBeam


def main():
    p = parser(__doc__.splitlines()[0])
    p.add_argument("--step-db", type=float, default=0.25)
    args = p.parse_args()
    base = lab.Scenario(beam=SqueezedBeam.coherent(presets.ALPHA_SQ), master_seed=args.seed)
    grid = np.arange(0.0, 12.0 + args.step_db / 2, args.step_db)
    heat = lab.heatmap_squeezing(base, -grid, grid, presets.L_SQ)
    write(heat.to_table(), args.out_dir, "squeezing_heatmap", base)
    diag = np.diag(heat.mse)
    print(f"best pure squeezing on the grid: {grid[np.nanargmin(diag)]:.2f} dB, MSE {np.nanmin(diag):.4f}")
    i = np.nanargmin(heat.loss_curve_mse)
    print(f"best point on the {presets.L_SQ:.0%} loss curve: {-heat.squeezing_db[i]:.2f} dB squeezing, "
          f"{heat.loss_curve_antisqueezing_db[i]:.2f} dB anti-squeezing, MSE {heat.loss_curve_mse[i]:.4f}")


if __name__ == "__main__":
    main()
