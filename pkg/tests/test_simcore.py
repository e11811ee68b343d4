import numpy as np
import pytest

from dcsense import simcore
from dcsense.config import ScenarioConfig
from dcsense.streams import substream
from conftest import make_cfg


def test_init_topology_within_area(default_cfg):
    topo = simcore.init_topology(default_cfg, substream(1, "topo"))
    assert topo.su_positions.shape == (32, 2)
    assert np.all(topo.su_positions >= 0.0) and np.all(topo.su_positions <= 200.0)
    assert np.all(topo.pu_position >= 0.0) and np.all(topo.pu_position <= 200.0)


def test_init_topology_deterministic(default_cfg):
    a = simcore.init_topology(default_cfg, substream(42, "topo"))
    b = simcore.init_topology(default_cfg, substream(42, "topo"))
    assert np.array_equal(a.su_positions, b.su_positions)
    assert np.array_equal(a.su_headings, b.su_headings)
    assert np.array_equal(a.pu_position, b.pu_position)


def test_step_displacement_is_v_dt(default_cfg):
    # 3 km/h for 2 s = 1.6667 m per step; positions far from walls so the
    # move distance equals the step distance exactly.
    assert default_cfg.step_distance_m == pytest.approx(3000.0 / 3600.0 * 2.0)
    topo = simcore.Topology(
        su_positions=np.full((32, 2), 100.0),
        pu_position=np.array([100.0, 100.0]),
        su_headings=np.linspace(0, 2 * np.pi, 32, endpoint=False),
        pu_heading=0.3,
    )
    moved = simcore.step_mobility(topo, default_cfg, substream(0, "mob"))
    dist = np.linalg.norm(moved.su_positions - topo.su_positions, axis=1)
    assert np.allclose(dist, 5.0 / 3.0)


def test_zero_velocity_keeps_positions(default_cfg):
    cfg = make_cfg(velocity_mps=0.0)
    topo = simcore.init_topology(cfg, substream(5, "topo"))
    moved = simcore.step_mobility(topo, cfg, substream(5, "mob"))
    assert np.allclose(moved.su_positions, topo.su_positions)
    assert np.allclose(moved.pu_position, topo.pu_position)


def test_boundary_reflection():
    cfg = make_cfg(velocity_mps=3000.0 / 3600.0, sensing_period_s=2.0, n_su=1)
    topo = simcore.Topology(
        su_positions=np.array([[0.5, 100.0]]),
        pu_position=np.array([100.0, 100.0]),
        su_headings=np.array([np.pi]),
        pu_heading=0.0,
    )
    moved = simcore.step_mobility(topo, cfg, substream(9, "mob"))
    assert moved.su_positions[0, 0] == pytest.approx(5.0 / 3.0 - 0.5)
    assert moved.su_positions[0, 1] == pytest.approx(100.0)
    # mirrored heading is 0 up to the per-step jitter of +/-15 degrees
    h = moved.su_headings[0]
    h = h - 2 * np.pi if h > np.pi else h
    assert abs(h) <= np.deg2rad(15.0) + 1e-12


def test_positions_stay_inside_after_many_steps():
    cfg = make_cfg(n_su=16, area_side_m=50.0, velocity_mps=10.0, sensing_period_s=2.0)
    topo = simcore.init_topology(cfg, substream(3, "topo"))
    rng = substream(3, "mob")
    for _ in range(500):
        topo = simcore.step_mobility(topo, cfg, rng)
        assert np.all(topo.su_positions >= 0.0) and np.all(topo.su_positions <= 50.0)
        assert np.all(topo.pu_position >= 0.0) and np.all(topo.pu_position <= 50.0)


def test_path_gain_reference_values(default_cfg):
    # 34.53 + 38*log10(100) = 110.53 dB loss
    gain = simcore.path_gain(100.0, default_cfg)
    assert 10 * np.log10(gain) == pytest.approx(-110.53, abs=1e-6)
    gain1 = simcore.path_gain(1.0, default_cfg)
    assert 10 * np.log10(gain1) == pytest.approx(-34.53, abs=1e-6)


def test_path_gain_identity_case():
    cfg = make_cfg(path_loss_exponent=0.0, path_loss_constant=1.0)
    for d in (1.0, 10.0, 500.0):
        assert simcore.path_gain(d, cfg) == pytest.approx(1.0)


def test_path_gain_rejects_zero_distance(default_cfg):
    with pytest.raises(ValueError):
        simcore.path_gain(0.0, default_cfg)


def test_path_gain_clamps_below_one_meter(default_cfg):
    assert simcore.path_gain(0.01, default_cfg) == simcore.path_gain(1.0, default_cfg)


def test_correlation_matrix_values():
    pos = np.array([[0.0, 0.0], [0.0, 0.0], [50.0, 0.0], [5000.0, 0.0]])
    k = simcore.correlation_matrix(pos, 50.0)
    assert np.allclose(np.diag(k), 1.0)
    assert k[0, 1] == pytest.approx(1.0)
    assert k[0, 2] == pytest.approx(np.exp(-1.0))
    assert k[0, 3] == pytest.approx(0.0, abs=1e-40)
    assert np.allclose(k, k.T)


def test_correlation_matrix_psd_after_jitter():
    rng = substream(17, "pos")
    pos = rng.uniform(0, 200, size=(10, 2))
    k = simcore.correlation_matrix(pos, 50.0)
    chol = simcore._cholesky_with_jitter(k)
    assert np.allclose(chol @ chol.T, k, atol=1e-5)


def test_shadow_identical_positions_fully_correlated(default_cfg):
    pos = np.array([[10.0, 10.0], [10.0, 10.0]])
    field = simcore.sample_shadow_field(pos, default_cfg, substream(2, "sh"))
    assert field.values_db[0] == pytest.approx(field.values_db[1], abs=1e-3)


def test_shadow_scalar_case_std():
    cfg = make_cfg(n_su=1, shadow_sigma_db=7.9)
    rng = substream(4, "sh")
    draws = np.array(
        [simcore.sample_shadow_field(np.array([[5.0, 5.0]]), cfg, rng).values_db[0] for _ in range(4000)]
    )
    assert abs(draws.mean()) < 0.5
    assert draws.std() == pytest.approx(7.9, rel=0.05)


def test_shadow_pairwise_correlation(default_cfg):
    # quick version of the statistical acceptance check
    pos = np.array([[0.0, 0.0], [50.0, 0.0]])
    k = simcore.correlation_matrix(pos, default_cfg.d_ref_m)
    chol = simcore._cholesky_with_jitter(k)
    rng = substream(6, "sh")
    z = rng.standard_normal((2, 20000))
    kk = chol @ z
    corr = np.corrcoef(kk)[0, 1]
    assert corr == pytest.approx(np.exp(-1.0), abs=0.02)


def test_pu_state_inactive_when_prob_zero():
    cfg = make_cfg(pu_active_prob=0.0)
    for s in range(20):
        st = simcore.sample_pu_state(cfg, substream(s, "pu"))
        assert not st.active
        assert st.occupied_bands == ()
        assert st.adjacent_bands == frozenset()
        assert st.vacant_bands == frozenset(range(16))


def test_pu_state_band_algebra(default_cfg):
    all_bands = frozenset(range(default_cfg.n_bands))
    for s in range(200):
        st = simcore.sample_pu_state(default_cfg, substream(s, "pu"))
        occ = set(st.occupied_bands)
        assert occ | st.adjacent_bands | st.vacant_bands == all_bands
        assert not occ & st.adjacent_bands
        assert not occ & st.vacant_bands
        assert not st.adjacent_bands & st.vacant_bands
        if st.active:
            assert default_cfg.n_bp_min <= len(occ) <= default_cfg.n_bp_max
            assert st.occupied_bands == tuple(range(min(occ), max(occ) + 1))


def test_pu_state_edge_run_has_one_neighbor():
    cfg = make_cfg(n_bp_min=3, n_bp_max=3, pu_active_prob=1.0)
    for s in range(200):
        st = simcore.sample_pu_state(cfg, substream(s, "pu"))
        if st.occupied_bands[0] == 0:
            assert st.adjacent_bands == frozenset({3})
            return
    pytest.fail("no draw produced a run starting at band 0")


def test_received_samples_noise_only_level(default_cfg):
    topo = simcore.init_topology(default_cfg, substream(1, "topo"))
    shadow = simcore.ShadowField(np.zeros(32))
    state = simcore.PuState(False, (), frozenset(), frozenset(range(16)))
    rng = substream(1, "rx")
    energies = []
    for _ in range(300):
        y = simcore.received_samples(topo, state, shadow, 0, 0, default_cfg, rng)
        assert y.shape == (64,)
        energies.append(np.mean(np.abs(y) ** 2))
    # E|y|^2 = N0*W = -104 dBm
    mean_dbm = 10 * np.log10(np.mean(energies) * 1e3)
    assert mean_dbm == pytest.approx(-104.0, abs=0.15)


def test_received_samples_zero_leakage_matches_vacant():
    cfg = make_cfg(leakage_db=float("-inf"))
    topo = simcore.init_topology(cfg, substream(1, "topo"))
    shadow = simcore.ShadowField(np.zeros(cfg.n_su))
    state = simcore.PuState(True, (4, 5), frozenset({3, 6}), frozenset({0, 1, 2, 7, 8, 9, 10, 11, 12, 13, 14, 15}))
    ya = simcore.received_samples(topo, state, shadow, 0, 3, cfg, substream(7, "rx"))
    yv = simcore.received_samples(topo, state, shadow, 0, 0, cfg, substream(7, "rx"))
    assert np.array_equal(ya, yv)


def test_received_samples_signal_level_without_noise():
    cfg = make_cfg(noise_psd_dbm_hz=float("-inf"), shadow_sigma_db=0.0, n_su=1)
    topo = simcore.Topology(
        su_positions=np.array([[0.0, 0.0]]),
        pu_position=np.array([100.0, 0.0]),
        su_headings=np.zeros(1),
        pu_heading=0.0,
    )
    shadow = simcore.ShadowField(np.zeros(1))
    state = simcore.PuState(True, (0,), frozenset({1}), frozenset(range(2, 16)))
    rng = substream(3, "rx")
    energies = [
        np.mean(np.abs(simcore.received_samples(topo, state, shadow, 0, 0, cfg, rng)) ** 2)
        for _ in range(2000)
    ]
    # E|y|^2 = P - PL = 23 - 110.53 = -87.53 dBm
    mean_dbm = 10 * np.log10(np.mean(energies) * 1e3)
    assert mean_dbm == pytest.approx(-87.53, abs=0.2)


def test_received_samples_index_range(default_cfg):
    topo = simcore.init_topology(default_cfg, substream(1, "topo"))
    shadow = simcore.ShadowField(np.zeros(32))
    state = simcore.PuState(False, (), frozenset(), frozenset(range(16)))
    with pytest.raises(IndexError):
        simcore.received_samples(topo, state, shadow, 32, 0, default_cfg, substream(0, "x"))
    with pytest.raises(IndexError):
        simcore.received_samples(topo, state, shadow, 0, 16, default_cfg, substream(0, "x"))
