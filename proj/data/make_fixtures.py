"""Regenerates the bundled example tables.

cohort_fits.csv   TLS parameters for 7 membrane and 7 substrate resonators,
                  chosen so that the per-resonator Qi at n = 1, 100 mK and at
                  high power take the listed values.
stability_r2_r6.csv  90 minutes of 1 s frequency readings for R2-R6 whose
                  population standard deviations are 21, 24, 10, 17, 15 kHz.
"""

import math
from pathlib import Path

import numpy as np

H = 6.62607015e-34
KB = 1.380649e-23
HERE = Path(__file__).resolve().parent

N_C = 10.0
BETA = 0.5
T_K = 0.1

COHORTS = {
    "membrane": ([0.5, 0.6, 0.7, 0.8, 1.0, 1.1, 1.3], [2.5, 3.0, 3.5, 3.8, 4.2, 5.0, 6.0]),
    "substrate": ([0.9, 1.0, 1.1, 1.2, 1.4, 1.6, 1.9], [1.8, 2.0, 2.2, 2.3, 2.6, 3.0, 3.4]),
}

STABILITY_KHZ = {"R2": 21.0, "R3": 24.0, "R4": 10.0, "R5": 17.0, "R6": 15.0}


def cohort_rows():
    rows = []
    for cohort, (low, high) in COHORTS.items():
        prefix = cohort[0].upper()
        for i, (lo, hi) in enumerate(zip(low, high)):
            f = 5.0e9 + 0.25e9 * i
            d_other = 1.0 / (hi * 1e5)
            sat = math.tanh(H * f / (2 * KB * T_K)) / math.sqrt(1 + (1 / N_C) ** BETA)
            d0 = (1.0 / (lo * 1e5) - d_other) / sat
            rows.append((f"{prefix}{i + 1}", cohort, d0, N_C, BETA, d_other, f, T_K))
    return rows


def stability_rows(seed=20240601, samples=5400):
    rng = np.random.default_rng(seed)
    rows = []
    for k, (rid, sigma_khz) in enumerate(STABILITY_KHZ.items()):
        x = rng.standard_normal(samples)
        x -= x.mean()
        x *= sigma_khz * 1e3 / x.std()
        f0 = 5.2e9 + 0.3e9 * k
        for i, dx in enumerate(x):
            rows.append((rid, i, float(i), float(f0 + dx)))
    return rows


def main():
    with open(HERE / "cohort_fits.csv", "w") as fh:
        fh.write("resonator_id,cohort,delta_tls0,n_c,beta,delta_other,frequency_hz,temperature_k\n")
        for r in cohort_rows():
            fh.write(",".join([r[0], r[1]] + [repr(float(v)) for v in r[2:]]) + "\n")
    with open(HERE / "stability_r2_r6.csv", "w") as fh:
        fh.write("resonator_id,index,time_s,frequency_hz\n")
        for rid, i, t, f in stability_rows():
            fh.write(f"{rid},{i},{t!r},{f!r}\n")


if __name__ == "__main__":
    main()
