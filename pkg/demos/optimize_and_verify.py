#!/usr/bin/env python3
"""Optimize a two-user network, then make the simulator vouch for it.

Solves the constrained policy search under an average-interference
budget, prints the chosen operating points, then replays the network in
the slot-level simulator and grades every analytic prediction against
the empirical run.
"""
import argparse

from ehcr.analysis import analyze
from ehcr.model import NetworkModel, SuProfile, SystemConfig
from ehcr.optimizer import solve_p1
from ehcr.sim import compare, simulate


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--slots", type=int, default=500_000,
                        help="simulated frames (default %(default)s)")
    parser.add_argument("--seed", type=int, default=3,
                        help="simulation seed (default %(default)s)")
    parser.add_argument("--cap", type=float, default=1.0,
                        help="interference budget in watts "
                             "(default %(default)s)")
    args = parser.parse_args()

    config = SystemConfig(interference_cap=args.cap)
    profiles = (SuProfile(),
                SuProfile(harvest_rate=10.0, su_pu_var=0.5))
    model = NetworkModel(config=config, profiles=profiles)

    print("searching the policy plane of %d users under a %.2f W budget..."
          % (len(profiles), args.cap))
    result = solve_p1(model)
    for i, params in enumerate(result.params):
        print("  su%d: omega=%.4f theta=%.4f" % (i + 1, params.omega,
                                                 params.theta))
    print("  sum rate %.0f bit/s, interference %.4f W, feasible=%s "
          "(%d points priced)" % (result.sum_rate, result.aic_lhs,
                                  result.feasible, result.evaluations))

    print()
    print("replaying %d slots (seed %d) and grading the analytic chain:"
          % (args.slots, args.seed))
    reference = analyze(model, result.params)
    trace = simulate(model, list(result.params), args.slots, seed=args.seed)
    report = compare(trace, reference)
    for line in report.lines():
        print("  " + line)
    print("verdict: %s" % ("all checks passed" if report.passed
                           else "mismatch, see lines above"))


if __name__ == "__main__":
    main()
