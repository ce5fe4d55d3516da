"""Smoke tests for the Python surface of the toolkit."""

import cmath
import math

import pytest

import satrach


def test_zc_sequence_is_unit_modulus():
    z = satrach.zc_root(1, 839)
    assert len(z) == 839
    assert z[0] == pytest.approx(1.0 + 0.0j)
    assert all(abs(abs(v) - 1.0) < 1e-12 for v in z)
    assert z[1] == pytest.approx(cmath.exp(-2j * cmath.pi / 839), abs=1e-12)


def test_autocorrelation_is_a_delta():
    z = satrach.zc_root(2, 139)
    c = satrach.cyclic_xcorr(z, z, "sqrt_n")
    assert c[0] == pytest.approx(math.sqrt(139), abs=1e-9)
    assert max(c[1:]) < 1e-9 * math.sqrt(139)


def test_cross_root_correlation_is_flat():
    a = satrach.zc_root(1, 139)
    b = satrach.zc_root(3, 139)
    c = satrach.cyclic_xcorr(a, b, "sqrt_n")
    assert all(abs(v - 1.0) < 1e-9 for v in c)


def test_default_config_counts_104_preambles():
    cfg = satrach.PrachConfig()
    cfg.validate()
    assert cfg.n_preambles() == 104


def test_shifted_preamble_peaks_at_its_lag():
    cfg = satrach.PrachConfig()
    s = satrach.shifted_preamble(1, 5, cfg)
    root = satrach.zc_root(1, cfg.n_zc)
    c = satrach.cyclic_xcorr(s, root, "n")
    assert c.index(max(c)) == 5 * cfg.n_cs


def test_optimal_access_prob_point_masses():
    assert satrach.optimal_access_prob([0, 1, 0, 0, 0, 0, 0]) == 1.0
    assert satrach.optimal_access_prob([0, 0, 1, 0, 0, 0, 0]) == pytest.approx(0.5, abs=1e-6)
    for k in range(1, 7):
        mass = [0.0] * 7
        mass[k] = 1.0
        assert satrach.optimal_access_prob(mass) == pytest.approx(1.0 / k, abs=0.02)


def test_bayes_pipeline():
    prior = satrach.binomial_prior(104, 104, 6)
    assert prior[0] == pytest.approx((103 / 104) ** 104, abs=1e-12)
    assert sum(prior) == pytest.approx(1.0, abs=1e-12)

    identity = [[1.0 if p == t else 0.0 for t in range(7)] for p in range(7)]
    post = satrach.posterior(identity, prior, 2)
    assert post[2] == pytest.approx(1.0)
    assert satrach.success_probability(0.5, [0, 0, 1, 0, 0, 0, 0]) == pytest.approx(0.5)
    assert satrach.estimate_active_users([1, 2, 0, 3]) == 6


def test_parameter_counts():
    assert satrach.cnn_param_count(8, 8, 7) == 3767
    assert satrach.cnn_param_count(8, 8, 8) - satrach.cnn_param_count(8, 8, 7) == 257
    assert satrach.mlp_param_count(8, 7) == 9863


def test_single_user_scenario_timeline():
    cfg = satrach.SimConfig()
    cfg.n_users = 1
    cfg.seed = 3
    cfg.owd_range_ms = (3.0, 3.0)
    m = satrach.run_scenario(cfg)
    assert m.n_success == 1
    assert m.avg_delay_ms == 23.0
    assert m.pusch_utilization == 1.0


def test_scenario_conservation_and_determinism():
    cfg = satrach.SimConfig()
    cfg.n_users = 40
    cfg.seed = 9
    cfg.scheme = "proposed"
    m1 = satrach.run_scenario(cfg)
    m2 = satrach.run_scenario(cfg)
    assert m1.n_success + m1.n_failed + m1.n_in_flight == 40
    assert (m1.n_success, m1.avg_delay_ms, m1.pusch_utilization) == (
        m2.n_success,
        m2.avg_delay_ms,
        m2.pusch_utilization,
    )


def test_dataset_and_training_round_trip(tmp_path):
    cfg = satrach.PrachConfig()
    cfg.n_ant = 2
    dataset = str(tmp_path / "toy.bin")
    n = satrach.gen_dataset(cfg, "los", 2, [-8.0], 40, 7, dataset)
    assert n == 3 * 40

    weights = str(tmp_path / "w.bin")
    confusion = str(tmp_path / "q.csv")
    accuracy, misdetection, false_alarm = satrach.train_classifier(
        dataset, weights, confusion, epochs=3, seed=11
    )
    assert 0.0 <= accuracy <= 1.0
    assert 0.0 <= misdetection <= 1.0
    assert 0.0 <= false_alarm <= 1.0

    sim = satrach.SimConfig()
    sim.n_users = 5
    sim.n_slots = 50
    sim.seed = 13
    sim.k_max = 2
    sim.prach = cfg
    sim.snr_db = -8.0
    sim.detector = "trained_classifier"
    m = satrach.run_scenario(sim, weights=weights, confusion=confusion)
    assert m.n_success + m.n_failed + m.n_in_flight == 5
