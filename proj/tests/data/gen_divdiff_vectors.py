"""Regenerates divdiff_vectors.json (run from the repo root) with 100-digit mpmath arithmetic."""
import json
import random

import mpmath as mp

mp.mp.dps = 100


def divdiff_exp(xs, tau):
    total = mp.mpc(0)
    for i, xi in enumerate(xs):
        den = mp.mpf(1)
        for j, xj in enumerate(xs):
            if j != i:
                den *= xi - xj
        total += mp.exp(tau * xi) / den
    return total


def main():
    rng = random.Random(20240611)
    cases = []
    taus = [(-1.0, 0.0), (-0.3, 0.0), (-2.5, 0.0), (0.0, -1.0), (0.0, -0.7), (0.0, -3.0), (-0.5, -1.5), (1.0, 0.0)]
    for n in [2, 3, 4, 6, 9, 13, 20, 30]:
        for tr, ti in taus:
            xs = [round(rng.uniform(-4.0, 4.0), 6) for _ in range(n)]
            tau = mp.mpc(tr, ti)
            v = divdiff_exp([mp.mpf(x) for x in xs], tau)
            cases.append({
                "energies": xs,
                "tau": [tr, ti],
                "expected": [float(v.real), float(v.imag)],
                "tolerance": 1e-12,
            })
    with open("tests/data/divdiff_vectors.json", "w", newline="\n") as f:
        json.dump(cases, f, indent=1)
        f.write("\n")


if __name__ == "__main__":
    main()
