"""Regenerate the frozen fixtures in tests/_frozen.py (prints to stdout)."""

import json
import math

import numpy as np

import gwising as g


def ratio_corpus(seed: int, reps: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(201,)))
    ratios = []
    for pmf in (g.OffspringPmf.dirac(2), g.OffspringPmf.from_dict({1: 0.5, 2: 0.5})):
        for beta in (0.8, 1.2):
            res = g.ResistanceProfile.geometric(math.tanh(beta))
            for depth in (3, 4, 5, 6):
                for _ in range(reps):
                    tree = g.sample_gw(pmf, depth, rng)
                    root_ratio = float(g.lyons_plus(tree, beta)[0])
                    capa = g.capacity_recursion(tree, res, 1.5).capacity
                    ratios.append(root_ratio / capa)
    return np.array(ratios)


if __name__ == "__main__":
    for name, pmf in (("dirac2", g.OffspringPmf.dirac(2)),
                      ("half13", g.OffspringPmf.from_dict({1: 0.5, 3: 0.5}))):
        print(name, json.dumps(g.calibrate_constants(pmf, 2.0), indent=2))
    cal = ratio_corpus(12345, 200)
    print("RATIO_INTERVAL =", (float(cal.min()), float(cal.max())))
