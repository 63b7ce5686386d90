#!/usr/bin/env python3
"""Regenerate the bundled synthetic solar trace (data/solar_7day.csv).

Seven days of 15-minute samples with a diurnal sine-lobe profile (daylight
06:00-18:00), per-day peaks around 220 W, and a deterministic cloud wiggle.
The output is committed; rerun only when changing the profile.
"""

import math
from pathlib import Path

SAMPLE_S = 900
DAYS = 7
DAY_S = 86400
# Per-day clear-sky peaks in watts; day 2 is the best day of the week.
PEAKS = [205.0, 212.0, 220.0, 168.0, 191.0, 215.0, 178.0]
SUNRISE_H = 6.0
SUNSET_H = 18.0


def power_at(t_s: float) -> float:
    day = int(t_s // DAY_S)
    hour = (t_s % DAY_S) / 3600.0
    if not SUNRISE_H <= hour <= SUNSET_H:
        return 0.0
    x = (hour - SUNRISE_H) / (SUNSET_H - SUNRISE_H)  # 0..1 across daylight
    envelope = math.sin(math.pi * x) ** 1.5
    # Deterministic short-term attenuation standing in for passing clouds.
    cloud = 0.05 * (0.5 + 0.5 * math.sin(2.0 * math.pi * (7.3 * x + 0.41 * day))) \
        + 0.04 * (0.5 + 0.5 * math.sin(2.0 * math.pi * (17.9 * x + 0.13 * day)))
    return max(0.0, PEAKS[day] * envelope * (1.0 - cloud))


def main() -> None:
    out = Path(__file__).resolve().parent.parent / "src" / "harvestsim" / "data" / "solar_7day.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    lines = [
        "# Synthetic 7-day solar panel output, 15-minute samples.",
        "# Diurnal sine-lobe profile with per-day peaks up to 220 W.",
        f"# duration_s={DAYS * DAY_S}",
        "time_s,power_w",
    ]
    for k in range(DAYS * DAY_S // SAMPLE_S):
        t = k * SAMPLE_S
        lines.append(f"{t},{round(power_at(t), 3)}")
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {out} ({len(lines) - 4} samples)")


if __name__ == "__main__":
    main()
