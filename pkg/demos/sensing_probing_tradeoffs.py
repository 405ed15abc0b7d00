#!/usr/bin/env python3
"""Two airtime-for-accuracy trades, both with interior optima.

Longer sensing sharpens the detector but eats the data phase; a larger
probe reserve buys pilot energy (better channel estimates) but withholds
cells from transmission.  Both sweeps print the rate bound peaking
strictly inside the sweep range.
"""
import numpy as np

from ehcr.analysis import analyze_su
from ehcr.model import NetworkModel, PolicyParams, SuProfile, SystemConfig

POLICY = PolicyParams(omega=0.35, theta=0.2)


def mark(values, k):
    return ["<- best" if i == k else "" for i in range(len(values))]


def main():
    print("sensing duration sweep (sampling 10 kHz, harvest 15 cells/slot)")
    print("  tau_s [ms]   detector false alarm   rate [bit/s]")
    taus = np.linspace(0.2e-3, 5e-3, 13)
    rates, fas = [], []
    for tau in taus:
        cfg = SystemConfig(sensing_duration=tau, sampling_frequency=1e4)
        model = NetworkModel(config=cfg, profiles=(SuProfile(),))
        su = analyze_su(model, 0, POLICY)
        rates.append(su.rate.total)
        fas.append(su.sensing.p_fa)
    k = int(np.argmax(rates))
    for tau, fa, r, m in zip(taus, fas, rates, mark(rates, k)):
        print("  %9.2f   %20.4f   %11.0f  %s" % (tau * 1e3, fa, r, m))

    print()
    print("probe reserve sweep (sampling 3 kHz, noisy receivers)")
    print("  alpha_t [cells]   estimation error var   rate [bit/s]")
    reserves = range(1, 9)
    rates, errs = [], []
    for reserve in reserves:
        cfg = SystemConfig(sampling_frequency=3e3, probe_cells=reserve)
        prof = SuProfile(sensing_noise=5.0, ap_noise=5.0, harvest_rate=18.0)
        model = NetworkModel(config=cfg, profiles=(prof,))
        su = analyze_su(model, 0, POLICY)
        rates.append(su.rate.total)
        errs.append(su.estimation.var_err_h0)
    k = int(np.argmax(rates))
    for reserve, err, r, m in zip(reserves, errs, rates, mark(rates, k)):
        print("  %15d   %20.4f   %11.0f  %s" % (reserve, err, r, m))


if __name__ == "__main__":
    main()
