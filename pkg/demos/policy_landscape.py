#!/usr/bin/env python3
"""The policy plane is neither convex nor concave.

Prices a coarse (omega, theta) grid for one user with the same evaluator
the optimizer uses, prints the rate surface as a character map with the
interior maximum marked, and shows how an interference cap carves away
the aggressive corner of the plane.
"""
import numpy as np

from ehcr.model import NetworkModel, SuProfile, SystemConfig
from ehcr.optimizer import objective_surface

SHADES = " .:-=+*%@"
CAP = 0.6  # average interference budget [W]


def shade(values):
    """Map an array onto the shade ramp, one character per value."""
    lo, hi = values.min(), values.max()
    idx = np.zeros_like(values, dtype=int)
    if hi > lo:
        idx = np.minimum((len(SHADES) - 1)
                         * ((values - lo) / (hi - lo)), len(SHADES) - 1)
        idx = idx.astype(int)
    return idx


def main():
    model = NetworkModel(config=SystemConfig(), profiles=(SuProfile(),))
    omegas = np.linspace(0.05, 1.0, 24)
    thetas = np.geomspace(1e-3, 5.0, 32)
    rates, loads = objective_surface(model, omegas, thetas)

    bi, bj = np.unravel_index(int(np.argmax(rates)), rates.shape)
    chars = shade(rates)
    print("rate lower bound over the policy plane "
          "(rows: omega, cols: log-spaced theta, X: maximum)")
    for a in range(len(omegas)):
        row = "".join(SHADES[chars[a, b]] for b in range(len(thetas)))
        if a == bi:
            row = row[:bj] + "X" + row[bj + 1:]
        print("  omega=%.2f  |%s|" % (omegas[a], row))
    print("maximum %0.0f bit/s at omega=%.2f theta=%.3f"
          % (rates[bi, bj], omegas[bi], thetas[bj]))

    feasible = loads <= CAP
    best = np.where(feasible, rates, -np.inf)
    ci, cj = np.unravel_index(int(np.argmax(best)), best.shape)
    print()
    print("with a %.1f W interference budget, %d of %d grid points stay "
          "feasible" % (CAP, int(feasible.sum()), feasible.size))
    print("best feasible point %0.0f bit/s at omega=%.2f theta=%.3f "
          "(load %.3f W)" % (rates[ci, cj], omegas[ci], thetas[cj],
                             loads[ci, cj]))


if __name__ == "__main__":
    main()
