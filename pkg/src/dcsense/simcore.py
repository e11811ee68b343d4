"""Network geometry, mobility, band occupancy, and the physical channel.

The channel between the primary user and each secondary user combines a
simplified power-law path loss, spatially correlated log-normal shadowing
(exponential correlation in distance), i.i.d. complex-Gaussian multipath,
and additive white Gaussian noise. Adjacent-band power leakage is modeled
with a fixed linear leakage ratio.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from dcsense.config import ScenarioConfig

HEADING_JITTER_RAD = np.deg2rad(15.0)
MIN_DISTANCE_M = 1.0  # clamp below this to avoid the d=0 singularity
_CHOLESKY_JITTERS = (0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6)


@dataclass
class Topology:
    su_positions: np.ndarray  # (n_su, 2) meters
    pu_position: np.ndarray  # (2,) meters
    su_headings: np.ndarray  # (n_su,) radians
    pu_heading: float


@dataclass
class PuState:
    active: bool
    occupied_bands: tuple  # consecutive run of band indices (B_P)
    adjacent_bands: frozenset  # leakage neighbors of the run (B_A)
    vacant_bands: frozenset  # everything else (B_V)


@dataclass
class ShadowField:
    values_db: np.ndarray  # (n_su,) shadow attenuation per SU-PU link, dB


def init_topology(cfg: ScenarioConfig, rng: np.random.Generator) -> Topology:
    """Uniform random deployment of all SUs and the PU over the square area."""
    su_pos = rng.uniform(0.0, cfg.area_side_m, size=(cfg.n_su, 2))
    pu_pos = rng.uniform(0.0, cfg.area_side_m, size=2)
    su_head = rng.uniform(0.0, 2.0 * np.pi, size=cfg.n_su)
    pu_head = rng.uniform(0.0, 2.0 * np.pi)
    return Topology(su_pos, pu_pos, su_head, float(pu_head))


def _reflect_axis(coord: np.ndarray, side: float):
    """Fold coordinates into [0, side]; report whether the direction flipped."""
    m = np.mod(coord, 2.0 * side)
    over = m > side
    folded = np.where(over, 2.0 * side - m, m)
    flipped = (np.floor_divide(coord, side).astype(np.int64) % 2) != 0
    return folded, flipped


def _advance(pos: np.ndarray, heading: np.ndarray, dist: float, side: float):
    x = pos[..., 0] + dist * np.cos(heading)
    y = pos[..., 1] + dist * np.sin(heading)
    x, fx = _reflect_axis(x, side)
    y, fy = _reflect_axis(y, side)
    heading = np.where(fx, np.pi - heading, heading)
    heading = np.where(fy, -heading, heading)
    return np.stack([x, y], axis=-1), np.mod(heading, 2.0 * np.pi)


def step_mobility(topo: Topology, cfg: ScenarioConfig, rng: np.random.Generator) -> Topology:
    """Advance every node by v*dt along its heading, reflecting at walls.

    After the move the heading picks up a uniform jitter in +/-15 degrees so
    trajectories decorrelate over time while nodes stay uniformly spread.
    """
    dist = cfg.step_distance_m
    su_pos, su_head = _advance(topo.su_positions, topo.su_headings, dist, cfg.area_side_m)
    pu_pos, pu_head = _advance(
        topo.pu_position[None, :], np.asarray([topo.pu_heading]), dist, cfg.area_side_m
    )
    jitter = rng.uniform(-HEADING_JITTER_RAD, HEADING_JITTER_RAD, size=cfg.n_su + 1)
    su_head = np.mod(su_head + jitter[: cfg.n_su], 2.0 * np.pi)
    pu_heading = float(np.mod(pu_head[0] + jitter[-1], 2.0 * np.pi))
    return Topology(su_pos, pu_pos[0], su_head, pu_heading)


def path_gain(d_m, cfg: ScenarioConfig):
    """Linear amplitude-squared gain 1 / (beta * d^alpha); d clamped to 1 m."""
    d = np.asarray(d_m, dtype=float)
    if np.any(d <= 0.0):
        raise ValueError("path_gain requires strictly positive distance")
    d = np.maximum(d, MIN_DISTANCE_M)
    return 1.0 / (cfg.path_loss_constant * d**cfg.path_loss_exponent)


def correlation_matrix(positions: np.ndarray, d_ref_m: float) -> np.ndarray:
    """Shadow-fading correlation exp(-dist/d_ref) between every pair of SUs."""
    if d_ref_m <= 0:
        raise ValueError("d_ref_m must be positive")
    pos = np.asarray(positions, dtype=float)
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.linalg.norm(diff, axis=-1)
    return np.exp(-dist / d_ref_m)


def _cholesky_with_jitter(k: np.ndarray) -> np.ndarray:
    for jitter in _CHOLESKY_JITTERS:
        try:
            return np.linalg.cholesky(k + jitter * np.eye(k.shape[0]))
        except np.linalg.LinAlgError:
            continue
    raise np.linalg.LinAlgError(
        "shadow correlation matrix is not positive definite even after jitter repair"
    )


def sample_shadow_field(
    positions: np.ndarray, cfg: ScenarioConfig, rng: np.random.Generator
) -> ShadowField:
    """Draw correlated shadow fading h = sigma * k with k ~ N(0, K)."""
    k = correlation_matrix(positions, cfg.d_ref_m)
    chol = _cholesky_with_jitter(k)
    z = rng.standard_normal(k.shape[0])
    return ShadowField(values_db=cfg.shadow_sigma_db * (chol @ z))


def sample_pu_state(cfg: ScenarioConfig, rng: np.random.Generator) -> PuState:
    """Draw PU activity and, when active, a consecutive run of occupied bands."""
    all_bands = frozenset(range(cfg.n_bands))
    active = bool(rng.random() < cfg.pu_active_prob)
    if not active:
        return PuState(False, (), frozenset(), all_bands)
    n_bp = int(rng.integers(cfg.n_bp_min, cfg.n_bp_max + 1))
    start = int(rng.integers(0, cfg.n_bands - n_bp + 1))
    occupied = tuple(range(start, start + n_bp))
    adjacent = frozenset(
        b for b in (start - 1, start + n_bp) if 0 <= b < cfg.n_bands
    )
    vacant = all_bands - set(occupied) - adjacent
    return PuState(True, occupied, adjacent, vacant)


def su_pu_distances(topo: Topology) -> np.ndarray:
    return np.linalg.norm(topo.su_positions - topo.pu_position[None, :], axis=1)


def signal_amplitudes(
    topo: Topology, shadow: ShadowField, cfg: ScenarioConfig
) -> np.ndarray:
    """Per-SU received amplitude kappa = sqrt(P * gain * 10^(-h/10))."""
    gain = path_gain(su_pu_distances(topo), cfg)
    shadow_lin = 10.0 ** (-shadow.values_db / 10.0)
    return np.sqrt(cfg.pu_power_w * gain * shadow_lin)


def band_scales(pu_state: PuState, cfg: ScenarioConfig) -> np.ndarray:
    """Amplitude scale per band: 1 on B_P, sqrt(eta) on B_A, 0 on B_V."""
    scales = np.zeros(cfg.n_bands)
    if pu_state.active:
        scales[list(pu_state.occupied_bands)] = 1.0
        scales[list(pu_state.adjacent_bands)] = np.sqrt(cfg.leakage_linear)
    return scales


def complex_normal(rng: np.random.Generator, size, variance: float) -> np.ndarray:
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def received_samples(
    topo: Topology,
    pu_state: PuState,
    shadow: ShadowField,
    su: int,
    band: int,
    cfg: ScenarioConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """N_ED complex baseband samples seen by one SU on one band."""
    if not (0 <= su < cfg.n_su and 0 <= band < cfg.n_bands):
        raise IndexError(f"su/band index out of range: ({su}, {band})")
    scale = band_scales(pu_state, cfg)[band]
    noise = complex_normal(rng, cfg.n_ed, cfg.noise_power_w)
    if scale == 0.0:
        return noise
    kappa = signal_amplitudes(topo, shadow, cfg)[su]
    g = complex_normal(rng, cfg.n_ed, 1.0)
    symbols = np.exp(2j * np.pi * rng.random(cfg.n_ed))
    return kappa * scale * g * symbols + noise
