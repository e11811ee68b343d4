import numpy as np
import pytest

from dcsense import sensing, simcore
from dcsense.config import dbm_to_watts
from dcsense.sensing import MODE_HD, MODE_SD, SensingMatrix
from dcsense.streams import substream
from conftest import make_cfg


def test_accumulate_energy_matches_loop():
    rng = substream(8, "acc")
    y = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    total = 0.0
    for v in y:
        total += abs(v) ** 2
    assert sensing.accumulate_energy(y) == pytest.approx(total / 64)


def test_accumulate_energy_rejects_empty():
    with pytest.raises(ValueError):
        sensing.accumulate_energy(np.array([]))


def _noise_only_snapshot(cfg, seed):
    topo = simcore.init_topology(cfg, substream(seed, "topo"))
    shadow = simcore.ShadowField(np.zeros(cfg.n_su))
    state = simcore.PuState(False, (), frozenset(), frozenset(range(cfg.n_bands)))
    return sensing.sense_snapshot(topo, state, shadow, cfg, substream(seed, "sense"))


def test_sense_snapshot_shape_and_mode(small_cfg):
    m = _noise_only_snapshot(small_cfg, 1)
    assert m.mode == MODE_SD
    assert m.values.shape == (8, 8)
    assert np.all(m.values > 0.0)


def test_sense_snapshot_noise_energy_level():
    cfg = make_cfg(n_su=16, n_ed=64)
    energies = np.concatenate([_noise_only_snapshot(cfg, s).values.ravel() for s in range(20)])
    mean_dbm = 10 * np.log10(np.mean(energies) * 1e3)
    assert mean_dbm == pytest.approx(-104.0, abs=0.1)


def test_sense_snapshot_occupied_band_is_hotter():
    cfg = make_cfg(shadow_sigma_db=0.0)
    topo = simcore.init_topology(cfg, substream(2, "topo"))
    shadow = simcore.ShadowField(np.zeros(cfg.n_su))
    state = simcore.PuState(True, (5,), frozenset({4, 6}), frozenset(set(range(16)) - {4, 5, 6}))
    occ, adj, vac = [], [], []
    for s in range(40):
        m = sensing.sense_snapshot(topo, state, shadow, cfg, substream(s, "sense"))
        occ.append(m.values[:, 5].mean())
        adj.append(m.values[:, [4, 6]].mean())
        vac.append(m.values[:, 0].mean())
    assert np.mean(occ) > np.mean(adj) > np.mean(vac)
    # -20 dB leakage: adjacent excess energy is 1% of the in-band excess
    noise_w = cfg.noise_power_w
    ratio = (np.mean(adj) - noise_w) / (np.mean(occ) - noise_w)
    assert ratio == pytest.approx(0.01, rel=0.25)


def test_sense_snapshot_deterministic(small_cfg):
    a = _noise_only_snapshot(small_cfg, 7)
    b = _noise_only_snapshot(small_cfg, 7)
    assert np.array_equal(a.values, b.values)


def test_hard_decision_thresholding():
    t = dbm_to_watts(-107.0)
    sd = SensingMatrix(MODE_SD, np.array([[t * 0.5, t, t * 2.0]]))
    hd = sensing.hard_decision(sd, -107.0)
    assert hd.mode == MODE_HD
    assert hd.values.tolist() == [[0.0, 1.0, 1.0]]


def test_hard_decision_rejects_hd_input():
    hd = SensingMatrix(MODE_HD, np.zeros((2, 2)))
    with pytest.raises(ValueError):
        sensing.hard_decision(hd, -107.0)
