#!/usr/bin/env python3
"""Run the fig4 scenario for several alpha values, one CSV per run.

Usage: python scripts/sweep_alpha.py [outdir]

Each output file fig4_alpha<value>.csv carries the per-slot predictions in
the predicted_energy_j column; plot them against time_s with any CSV tool.
"""

import dataclasses
import sys
from pathlib import Path

from harvestsim import bundled_scenario_path, emit_csv, load_config, run_scenario

ALPHAS = (0.0, 0.25, 0.5, 0.75, 1.0)


def main() -> None:
    outdir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("fig4_sweep")
    outdir.mkdir(parents=True, exist_ok=True)
    scenario = load_config(bundled_scenario_path("fig4"))
    for alpha in ALPHAS:
        swept = dataclasses.replace(
            scenario,
            predictor=dataclasses.replace(scenario.predictor, alpha=alpha))
        result = run_scenario(swept)
        out = outdir / f"fig4_alpha{alpha:g}.csv"
        emit_csv(result.rows, out)
        print(f"wrote {out} ({len(result.rows)} rows)")


if __name__ == "__main__":
    main()
