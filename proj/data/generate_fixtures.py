"""Regenerates the station fixtures in this directory.

The files follow the station CSV schema (coordinate block, blank line, wide
value matrix) with synthetic hourly temperatures: a latitude gradient, a
diurnal cycle with station-specific amplitude and phase, slow regional
weather systems and AR(1) local anomalies.

    python data/generate_fixtures.py
"""

from pathlib import Path

import numpy as np


def synthesize(rng, lat, lon, hours, amp_range, front_scale, local_sd):
    n = lat.size
    t = np.arange(hours)[:, None]
    base = 12.0 - 0.6 * (lat - lat.mean())
    amp = rng.uniform(*amp_range, size=n)
    phase = rng.normal(0.0, 0.4, size=n)
    diurnal = amp * np.sin(2 * np.pi * (t - 9) / 24 + phase)

    # Regional systems: a few smooth spatial bumps with slowly varying strength.
    fronts = np.zeros((hours, n))
    for _ in range(4):
        c_lat = rng.uniform(lat.min(), lat.max())
        c_lon = rng.uniform(lon.min(), lon.max())
        d2 = (lat - c_lat) ** 2 + (lon - c_lon) ** 2
        shape = np.exp(-d2 / (2 * front_scale**2))
        strength = np.cumsum(rng.normal(0.0, 0.25, size=hours))
        strength -= np.linspace(0, strength[-1], hours)
        fronts += strength[:, None] * shape[None, :]

    local = np.zeros((hours, n))
    for h in range(1, hours):
        local[h] = 0.95 * local[h - 1] + rng.normal(0.0, local_sd, size=n)
    return base + diurnal + fronts + local


def write(path, ids, lat, lon, values):
    with open(path, "w") as f:
        f.write("station_id,lat,lon\n")
        for s, a, b in zip(ids, lat, lon):
            f.write(f"{s},{a:.4f},{b:.4f}\n")
        f.write("\n")
        f.write("timestamp," + ",".join(ids) + "\n")
        for h, row in enumerate(values):
            day, hour = divmod(h, 24)
            f.write(f"{day + 1:02d}T{hour:02d}," + ",".join(f"{v:.2f}" for v in row) + "\n")


def main():
    here = Path(__file__).resolve().parent

    rng = np.random.default_rng(2014)
    n = 32
    lat = rng.uniform(47.9, 48.8, size=n)
    lon = rng.uniform(-5.1, -3.6, size=n)
    ids = [f"M{i:02d}" for i in range(n)]
    values = synthesize(rng, lat, lon, 744, (1.0, 3.0), 0.3, 0.15)
    write(here / "molene_like.csv", ids, lat, lon, values)

    rng = np.random.default_rng(2010)
    n = 109
    lat = rng.uniform(26.0, 48.5, size=n)
    lon = rng.uniform(-123.0, -69.0, size=n)
    ids = [f"N{i:03d}" for i in range(n)]
    values = synthesize(rng, lat, lon, 720, (2.0, 8.0), 6.0, 0.6)
    write(here / "noaa_like.csv", ids, lat, lon, values)


if __name__ == "__main__":
    main()
