"""System description and validation for the slotted energy-harvesting uplink.

A secondary network of battery-powered users shares a licensed band with a
primary user.  Every frame is split into a spectrum-sensing phase, a channel
probing phase and a data phase; the battery holds an integer number of energy
cells that are earned by harvesting and spent on probing and transmission.
This module owns the configuration records, the derived per-frame constants
and the harvested-cell distribution.  Everything downstream (sensing,
probing, policy, battery chain, rate) consumes the validated model built
here.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple

import numpy as np
from scipy.special import gammaln


class ValidationError(ValueError):
    """Raised by :func:`validate`; carries every violated constraint."""

    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class SystemConfig:
    """Network-wide constants shared by all secondary users."""

    slot_duration: float = 10e-3       # frame length Tf [s]
    sensing_duration: float = 1e-3     # sensing phase tau_s [s]
    probing_duration: float = 0.1e-3   # probing phase tau_t [s]
    sampling_frequency: float = 100e3  # detector/probe sample rate fs [Hz]
    bandwidth: float = 10e3            # data bandwidth W [Hz]
    energy_unit: float = 0.01          # size of one battery cell e_u [J]
    battery_cells: int = 80            # battery capacity K [cells]
    probe_cells: int = 1               # cells burned per probe alpha_t
    prior_idle: float = 0.7            # Pr{band idle}
    target_detection: float = 0.85     # detector operating point Pr{detect | busy}
    pu_power: float = 1.0              # primary transmit power [W]
    pu_ap_channel_var: float = 1.0     # variance of the primary->AP channel
    interference_cap: float = math.inf # average interference budget at the primary [W]

    # ---- derived per-frame constants -------------------------------------
    @property
    def data_duration(self) -> float:
        """Data phase length tau_d = Tf - tau_s - tau_t [s]."""
        return self.slot_duration - self.sensing_duration - self.probing_duration

    @property
    def sensing_samples(self) -> int:
        """Detector sample count over the sensing phase."""
        return int(round(self.sensing_duration * self.sampling_frequency))

    @property
    def probing_symbols(self) -> int:
        """Pilot symbol count over the probing phase."""
        return int(round(self.probing_duration * self.sampling_frequency))

    @property
    def data_symbols(self) -> int:
        """Symbol count over the data phase."""
        return int(round(self.data_duration * self.sampling_frequency))

    @property
    def unit_power(self) -> float:
        """Power of one cell spread over the data phase, e_u / tau_d [W]."""
        return self.energy_unit / self.data_duration

    @property
    def probe_power(self) -> float:
        """Pilot power, alpha_t cells spread over the probing phase [W]."""
        return self.probe_cells * self.energy_unit / self.probing_duration

    @property
    def data_fraction(self) -> float:
        """Share of the frame spent on data, tau_d / Tf."""
        return self.data_duration / self.slot_duration

    @property
    def probe_fraction(self) -> float:
        """Share of the frame spent on probing, tau_t / Tf."""
        return self.probing_duration / self.slot_duration

    @property
    def probe_energy_gain(self) -> float:
        """Pilot energy-bandwidth product alpha_t * e_u * fs [J*Hz]."""
        return self.probe_cells * self.energy_unit * self.sampling_frequency


@dataclass(frozen=True)
class SuProfile:
    """Per-user channel statistics and harvesting intensity."""

    su_ap_var: float = 2.0       # mean power gain of the SU -> AP channel
    pu_su_var: float = 1.0       # mean power gain of the primary -> SU channel
    su_pu_var: float = 1.0       # mean power gain of the SU -> primary channel
    sensing_noise: float = 1.0   # detector noise power [W]
    ap_noise: float = 1.0        # AP receive noise power [W]
    harvest_rate: float = 15.0   # mean harvested cells per frame


@dataclass(frozen=True)
class PolicyParams:
    """Knobs of the threshold transmission policy."""

    omega: float = 0.35  # aggressiveness, fraction of the battery in play
    theta: float = 0.2   # channel-quality cutoff below which the user stays quiet


@dataclass(frozen=True)
class NetworkModel:
    """A validated configuration bundle: system constants plus one profile per user."""

    config: SystemConfig
    profiles: Tuple[SuProfile, ...]

    @property
    def n_users(self) -> int:
        return len(self.profiles)


def _check_config(cfg: SystemConfig, errors: List[str]) -> None:
    if cfg.slot_duration <= 0:
        errors.append("slot_duration must be > 0")
    if cfg.sensing_duration <= 0:
        errors.append("sensing_duration must be > 0")
    if cfg.probing_duration <= 0:
        errors.append("probing_duration must be > 0")
    if cfg.data_duration <= 0:
        errors.append("tau_d <= 0: slot_duration must exceed "
                      "sensing_duration + probing_duration")
    if cfg.sampling_frequency <= 0:
        errors.append("sampling_frequency must be > 0")
    if cfg.bandwidth <= 0:
        errors.append("bandwidth must be > 0")
    if cfg.energy_unit <= 0:
        errors.append("energy_unit must be > 0")
    if not isinstance(cfg.battery_cells, int) or cfg.battery_cells < 1:
        errors.append("battery_cells must be an integer >= 1")
    if not isinstance(cfg.probe_cells, int) or not 0 <= cfg.probe_cells < max(cfg.battery_cells, 1):
        errors.append("probe_cells must be an integer in [0, battery_cells)")
    if not 0.0 < cfg.prior_idle < 1.0:
        errors.append("prior_idle must lie in (0, 1)")
    if not 0.0 < cfg.target_detection < 1.0:
        errors.append("target_detection must lie in (0, 1)")
    if cfg.pu_power < 0:
        errors.append("pu_power must be >= 0")
    if cfg.pu_ap_channel_var < 0:
        errors.append("pu_ap_channel_var must be >= 0")
    if not cfg.interference_cap > 0:
        errors.append("interference_cap must be > 0 (math.inf disables it)")


_PROFILE_FIELDS = ("su_ap_var", "pu_su_var", "su_pu_var",
                   "sensing_noise", "ap_noise", "harvest_rate")


def _check_profile(profile: SuProfile, tag: str, errors: List[str]) -> None:
    for name in _PROFILE_FIELDS:
        if not getattr(profile, name) > 0:
            errors.append(f"{tag}: {name} must be > 0")


def validate(config: SystemConfig, profiles: Iterable[SuProfile]) -> NetworkModel:
    """Check every invariant and return the model; raise with the full list otherwise.

    All violations are collected before raising so a bad config is reported
    in one shot.  Non-fatal oddities (sampling grid misalignment) come out
    as warnings.
    """
    profiles = tuple(profiles)
    errors: List[str] = []
    _check_config(config, errors)
    if not profiles:
        errors.append("at least one user profile is required")
    for i, profile in enumerate(profiles, start=1):
        _check_profile(profile, f"profile {i}", errors)
    if errors:
        raise ValidationError(errors)

    for label, tau in (("sensing", config.sensing_duration),
                       ("probing", config.probing_duration),
                       ("data", config.data_duration)):
        n_exact = tau * config.sampling_frequency
        if n_exact < 1.0:
            warnings.warn(f"{label} phase spans less than one sample "
                          f"({n_exact:.3g}) at this sampling_frequency", stacklevel=2)
        elif abs(n_exact - round(n_exact)) > 0.01:
            warnings.warn(f"{label} phase spans {n_exact:.3f} samples; "
                          "count rounded to nearest integer", stacklevel=2)
    return NetworkModel(config=config, profiles=profiles)


def harvest_pmf(rate: float, cells: int) -> np.ndarray:
    """Distribution of cells gained per frame on a battery with `cells` capacity.

    Arrivals are Poisson with the given mean; the top entry absorbs the
    whole upper tail because any excess beyond capacity is lost.  Computed
    in log space so large rates stay accurate.
    """
    if rate <= 0:
        raise ValueError("harvest rate must be > 0")
    if cells < 1:
        raise ValueError("cells must be >= 1")
    r = np.arange(cells)
    body = np.exp(-rate + r * math.log(rate) - gammaln(r + 1.0))
    tail = max(1.0 - float(body.sum()), 0.0)
    return np.append(body, tail)
