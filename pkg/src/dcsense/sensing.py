"""Energy detection: raw channel samples to the N_SU x N_B sensing matrix."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from dcsense.config import ScenarioConfig, dbm_to_watts
from dcsense import simcore
from dcsense.simcore import PuState, ShadowField, Topology

MODE_SD = "SD"
MODE_HD = "HD"


@dataclass
class SensingMatrix:
    mode: str  # MODE_SD or MODE_HD
    values: np.ndarray  # (n_su, n_bands); linear watts for SD, {0.0, 1.0} for HD


def accumulate_energy(samples: np.ndarray) -> float:
    """Average received signal strength (1/N) * sum |y(m)|^2."""
    samples = np.asarray(samples)
    if samples.size == 0:
        raise ValueError("accumulate_energy requires at least one sample")
    return float(np.mean(np.abs(samples) ** 2))


def sense_snapshot(
    topo: Topology,
    pu_state: PuState,
    shadow: ShadowField,
    cfg: ScenarioConfig,
    rng: np.random.Generator,
) -> SensingMatrix:
    """Soft-decision sensing of every (SU, band) pair in one quiet period.

    Vectorized over the full (n_su, n_bands, n_ed) sample tensor; the PU
    symbol stream is shared by all receivers, multipath and noise are
    i.i.d. per SU, band, and sample.
    """
    n_su, n_b, n_ed = cfg.n_su, cfg.n_bands, cfg.n_ed
    scales = simcore.band_scales(pu_state, cfg)
    noise = simcore.complex_normal(rng, (n_su, n_b, n_ed), cfg.noise_power_w)
    if np.any(scales > 0.0):
        kappa = simcore.signal_amplitudes(topo, shadow, cfg)
        amp = kappa[:, None, None] * scales[None, :, None]
        g = simcore.complex_normal(rng, (n_su, n_b, n_ed), 1.0)
        symbols = np.exp(2j * np.pi * rng.random(n_ed))
        y = amp * g * symbols[None, None, :] + noise
    else:
        y = noise
    energy = np.mean(np.abs(y) ** 2, axis=2)
    return SensingMatrix(mode=MODE_SD, values=energy)


def hard_decision(sd: SensingMatrix, gamma_dbm: float) -> SensingMatrix:
    """1-bit reports: 1 iff the measured energy reaches the threshold."""
    if sd.mode != MODE_SD:
        raise ValueError("hard_decision expects a soft-decision matrix")
    threshold_w = dbm_to_watts(gamma_dbm)
    bits = (sd.values >= threshold_w).astype(float)
    return SensingMatrix(mode=MODE_HD, values=bits)
