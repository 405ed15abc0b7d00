"""End-to-end analytic evaluation: model + policies -> rates and loads.

Chains sensing, probing, policy, battery and rate for each user and
assembles the network totals.  This is the single evaluation path shared
by the CLI, the optimizer and the Monte Carlo comparisons.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

from .battery import BatteryChain
from .model import NetworkModel, PolicyParams, harvest_pmf
from .policy import PolicyPmf, transmit_pmf
from .probing import EstimationStats, GainDistribution, estimator_variances
from .rate import (PerSuRate, RateBreakdown, aic_contribution,
                   rate_lower_bound, transmission_outage)
from .sensing import SensingStats, sensing_stats


@dataclass(frozen=True)
class SuAnalysis:
    """Everything the analytic chain says about one user at one policy."""

    index: int
    params: PolicyParams
    sensing: SensingStats
    estimation: EstimationStats
    gain: GainDistribution
    pmf: PolicyPmf
    chain: BatteryChain
    rate: PerSuRate
    interference: float          # average load on the primary [W]
    transmission_outage: float   # Pr{silent | sensed idle}


@dataclass(frozen=True)
class NetworkAnalysis:
    """Per-user analyses plus the network rate/interference breakdown."""

    sus: Tuple[SuAnalysis, ...]
    breakdown: RateBreakdown


def analyze_su(model: NetworkModel, index: int, params: PolicyParams,
               ideal_sensing: bool = False) -> SuAnalysis:
    """Run the full analytic chain for one user."""
    config = model.config
    profile = model.profiles[index]
    sensing = sensing_stats(config, profile, ideal=ideal_sensing)
    est = estimator_variances(config, profile, sensing)
    dist = GainDistribution.from_stats(est, sensing)
    pmf = transmit_pmf(params, config.probe_cells, config.battery_cells, dist)
    harvest = harvest_pmf(profile.harvest_rate, config.battery_cells)
    chain = BatteryChain.build(pmf, sensing, harvest)
    rate = rate_lower_bound(config, profile, sensing, est, pmf,
                            chain.steady_state)
    interference = aic_contribution(config, profile, sensing, pmf,
                                    chain.steady_state)
    outage = transmission_outage(chain.steady_state, pmf, sensing,
                                 config.probe_cells)
    return SuAnalysis(index=index, params=params, sensing=sensing,
                      estimation=est, gain=dist, pmf=pmf, chain=chain,
                      rate=rate, interference=interference,
                      transmission_outage=outage)


def analyze(model: NetworkModel, params_list: Sequence[PolicyParams],
            ideal_sensing: bool = False) -> NetworkAnalysis:
    """Evaluate every user and assemble network totals."""
    if len(params_list) != model.n_users:
        raise ValueError("one PolicyParams per user profile is required")
    sus = tuple(analyze_su(model, i, p, ideal_sensing)
                for i, p in enumerate(params_list))
    per_su = tuple(su.rate for su in sus)
    loads = tuple(su.interference for su in sus)
    total_load = math.fsum(loads)
    breakdown = RateBreakdown(
        per_su=per_su,
        sum_rate=math.fsum(r.total for r in per_su),
        per_su_interference=loads,
        aic_lhs=total_load,
        aic_satisfied=total_load <= model.config.interference_cap,
    )
    return NetworkAnalysis(sus=sus, breakdown=breakdown)
