import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mtc_uplink.scenario import (
    ConfigError,
    DeviceParams,
    SystemConfig,
    dbm_to_watts,
    frame_rng,
    pathloss_alpha,
    sample_active_set,
    synthesize_population,
)
from mtc_uplink.specialfn import DomainError


class TestPathloss:
    def test_reference_distances(self):
        assert pathloss_alpha(10.0) == pytest.approx(10 ** -7.29, rel=1e-12)
        assert pathloss_alpha(100.0) == pytest.approx(10 ** -11.05, rel=1e-12)

    def test_shadowing_in_db(self):
        assert pathloss_alpha(150.0, 10.0) == pytest.approx(0.1 * pathloss_alpha(150.0), rel=1e-12)

    @pytest.mark.parametrize("d", [0.0, -5.0, math.nan])
    def test_domain(self, d):
        with pytest.raises(DomainError):
            pathloss_alpha(d)

    @given(st.floats(1.0, 1e4))
    def test_round_trip(self, d):
        assert -10 * math.log10(pathloss_alpha(d)) == pytest.approx(35.3 + 37.6 * math.log10(d), abs=1e-9)

    @given(st.floats(1.0, 1e4), st.floats(1e-3, 100.0), st.floats(-20, 20))
    def test_decreasing_in_distance(self, d, dd, s):
        assert pathloss_alpha(d, s) > pathloss_alpha(d + dd, s)


class TestDbm:
    def test_values(self):
        assert dbm_to_watts(30.0) == 1.0
        assert dbm_to_watts(0.0) == pytest.approx(1e-3, rel=1e-15)
        assert dbm_to_watts(23.0) == pytest.approx(0.19953, abs=5e-6)


class TestSystemConfig:
    def test_defaults(self):
        cfg = SystemConfig()
        assert cfg.m_devices == 1000 and cfg.cell_range == (50.0, 250.0)
        assert cfg.eps_ul == pytest.approx(5e-8)
        assert cfg.activity_p == pytest.approx(0.01)
        assert cfg.n0_w_hz == pytest.approx(10 ** -20.4)
        assert cfg.n_max == 10 and cfg.w_c == 5e5 and cfg.shadowing_sigma_db == 8.0

    @pytest.mark.parametrize("field, value", [
        ("m_devices", -1), ("m_devices", 2.5), ("n_t", 0), ("n_max", 0), ("rng_seed", -3),
        ("cell_range", (250.0, 50.0)), ("cell_range", (0.0, 10.0)), ("t_f", 0.0), ("u_bits", math.inf),
        ("w_c", -1.0), ("eps_max", 1.0), ("eps_ul_fraction", 0.0), ("packet_rate", 2e4),
        ("shadowing_sigma_db", -1.0), ("p_max_dbm", math.nan),
    ])
    def test_rejects_with_field_name(self, field, value):
        with pytest.raises(ConfigError, match=field):
            SystemConfig(**{field: value})

    def test_qos_and_budget(self):
        cfg = SystemConfig()
        qos = cfg.qos(16)
        assert (qos.n_t, qos.n_max, qos.w_c, qos.eps_ul) == (16, 10, 5e5, cfg.eps_ul)
        assert cfg.qos().n_t == cfg.n_t
        lb = cfg.link_budget(1e-11)
        assert lb.p_max == cfg.p_max_w and lb.u_bits == 160.0


class TestPopulation:
    def test_size_and_fields(self):
        cfg = SystemConfig(m_devices=200)
        pop = synthesize_population(cfg)
        assert [p.device_id for p in pop] == list(range(200))
        for p in pop:
            assert 50.0 <= p.distance_m <= 250.0
            assert p.alpha == pathloss_alpha(p.distance_m, p.shadow_db)
            assert p.activity_p == cfg.activity_p

    def test_no_shadowing(self):
        pop = synthesize_population(SystemConfig(m_devices=100, shadowing_sigma_db=0.0))
        assert all(p.shadow_db == 0.0 for p in pop)

    def test_deterministic(self):
        cfg = SystemConfig(m_devices=300, rng_seed=42)
        assert synthesize_population(cfg) == synthesize_population(cfg)
        assert synthesize_population(cfg) != synthesize_population(cfg.replace(rng_seed=43))
        assert synthesize_population(cfg, draw=1) != synthesize_population(cfg)

    def test_distances_do_not_depend_on_shadowing(self):
        a = synthesize_population(SystemConfig(m_devices=50, shadowing_sigma_db=0.0))
        b = synthesize_population(SystemConfig(m_devices=50))
        assert [p.distance_m for p in a] == [p.distance_m for p in b]

    def test_empty(self):
        assert synthesize_population(SystemConfig(m_devices=0)) == []

    def test_moments(self):
        pop = synthesize_population(SystemConfig(m_devices=100_000, rng_seed=9))
        d = np.array([p.distance_m for p in pop])
        s = np.array([p.shadow_db for p in pop])
        se = (200.0 / math.sqrt(12)) / math.sqrt(len(d))
        assert abs(d.mean() - 150.0) < 3 * se
        assert abs(s.std() - 8.0) < 0.1
        assert abs(np.corrcoef(d, s)[0, 1]) < 0.02


class TestTraffic:
    def test_degenerate_probabilities(self):
        pop = synthesize_population(SystemConfig(m_devices=20))
        never = [DeviceParams(p.device_id, p.distance_m, 0.0, p.alpha, 0.0) for p in pop]
        always = [DeviceParams(p.device_id, p.distance_m, 0.0, p.alpha, 1.0) for p in pop]
        for k in range(50):
            assert sample_active_set(never, frame_rng(0, k)) == []
            assert sample_active_set(always, frame_rng(0, k)) == list(range(20))
        assert sample_active_set([], frame_rng(0, 0)) == []

    def test_frame_streams_are_reproducible_and_distinct(self):
        a = frame_rng(5, 17).random(8)
        assert np.array_equal(a, frame_rng(5, 17).random(8))
        assert not np.array_equal(a, frame_rng(5, 18).random(8))
        assert not np.array_equal(a, frame_rng(6, 17).random(8))
        assert not np.array_equal(a, frame_rng(5, 17, draw=1).random(8))

    def test_mean_active_count(self):
        cfg = SystemConfig()
        p = np.full(cfg.m_devices, cfg.activity_p)
        counts = np.array([np.count_nonzero(frame_rng(cfg.rng_seed, k).random(cfg.m_devices) < p)
                           for k in range(100_000)])
        assert abs(counts.mean() - 10.0) <= 0.3
        assert counts.var() == pytest.approx(1000 * 0.01 * 0.99, rel=0.05)

    def test_active_set_matches_vector_draw(self):
        pop = synthesize_population(SystemConfig(m_devices=1000))
        ids = sample_active_set(pop, frame_rng(0, 3))
        ref = np.flatnonzero(frame_rng(0, 3).random(1000) < 0.01).tolist()
        assert ids == ref
