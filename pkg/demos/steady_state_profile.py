#!/usr/bin/env python3
"""Where does the battery spend its time?

Builds the analytic battery chain for one user at the default setup and
prints the stationary occupancy as a bar profile, then shows how the
profile and its summary numbers move when the harvest rate changes.
"""
import numpy as np

from ehcr.analysis import analyze_su
from ehcr.model import NetworkModel, PolicyParams, SuProfile, SystemConfig

POLICY = PolicyParams(omega=0.35, theta=0.2)
BAR_CELLS = 4          # battery levels aggregated per printed row
BAR_WIDTH = 50         # characters at the most likely row


def profile_lines(zeta):
    """Render a stationary vector as an ASCII bar profile."""
    edges = range(0, len(zeta), BAR_CELLS)
    groups = [(lo, float(zeta[lo:lo + BAR_CELLS].sum())) for lo in edges]
    peak = max(mass for _, mass in groups)
    lines = []
    for lo, mass in groups:
        bar = "#" * int(round(BAR_WIDTH * mass / peak))
        lines.append("  %3d-%3d  %-*s %.4f"
                     % (lo, min(lo + BAR_CELLS - 1, len(zeta) - 1),
                        BAR_WIDTH, bar, mass))
    return lines


def main():
    config = SystemConfig()
    model = NetworkModel(config=config, profiles=(SuProfile(),))
    su = analyze_su(model, 0, POLICY)

    print("single user, %d cells, policy omega=%.2f theta=%.2f"
          % (config.battery_cells, POLICY.omega, POLICY.theta))
    print("stationary battery occupancy (levels grouped by %d):" % BAR_CELLS)
    for line in profile_lines(su.chain.steady_state):
        print(line)
    print("mean level        %7.2f cells" % su.chain.avg_energy)
    print("battery outage    %7.4f" % su.chain.outage)
    print("rate lower bound  %7.0f bit/s" % su.rate.total)

    print()
    print("harvest rate vs the same summaries:")
    print("  rho [cells/slot]   mean level   outage     rate [bit/s]")
    for rho in (2.0, 5.0, 10.0, 15.0, 25.0):
        m = NetworkModel(config=config, profiles=(SuProfile(harvest_rate=rho),))
        su = analyze_su(m, 0, POLICY)
        print("  %16.1f   %10.2f   %8.6f   %10.0f"
              % (rho, su.chain.avg_energy, su.chain.outage, su.rate.total))


if __name__ == "__main__":
    main()
