"""Broadband versus band-limited squeezing, and the photon flux the squeezing adds.

    python scripts/bandwidth_budget.py
"""

import math

import numpy as np
from _common import parser, write

from phasetrack import lab, presets
from phasetrack.optics import SqueezedBeam


def main():
    p = parser(__doc__.splitlines()[0])
    p.add_argument("--objective", choices=("filter", "smoother"), default="filter")
    args = p.parse_args()
    r_m = -0.5 * math.log(presets.R_MINUS_BW)
    r_p = 0.5 * math.log(presets.R_PLUS_BW)
    base = lab.Scenario(beam=SqueezedBeam(presets.ALPHA_SQ, r_m, r_p, presets.ETA), master_seed=args.seed)
    table = lab.bandwidth_comparison(base, np.geomspace(1e6, 1e7, 10), objective=args.objective)
    write(table, args.out_dir, f"bandwidth_budget_{args.objective}", base)
    for row in table.rows:
        print(
            f"|alpha|^2 = {row['alpha_sq']:.3g}: band {row['delta_omega_eff']:.3g} rad/s, "
            f"gap {row['gap']:.2%}, squeezing flux share {row['flux_share']:.2%}"
        )


if __name__ == "__main__":
    main()
