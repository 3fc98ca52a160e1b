import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from freqneuro.arm import (
    ArmConfig,
    HELD_OUT_ANGLES,
    TRAINING_ANGLES,
    TrialSpec,
    action_size,
    compartment_areas,
    evaluate,
    init_arm,
    kinetic_energy,
    meta_to_raw,
    observation_size,
    potential_energy,
    run_trial,
    step_physics,
    trial_score,
    training_trials,
    write_trajectory,
)
from freqneuro.encoding import NetworkWeights, architecture

CFG = ArmConfig()


def arm_length(state):
    mid = state.pos.mean(axis=1)
    return float(np.linalg.norm(np.diff(mid, axis=0), axis=1).sum())


def random_net(arch_name, p, seed, scale=0.3):
    arch = architecture(arch_name, p)
    rng = np.random.default_rng(seed)
    return NetworkWeights.from_flat(rng.normal(0, scale, arch.weight_count), arch), arch.action_mode


# geometry -------------------------------------------------------------------------


def test_straight_layout_at_zero_angle():
    s = init_arm(10, 0.0)
    np.testing.assert_allclose(s.tip(), [10.0, 0.0], atol=1e-12)
    assert np.all(s.vel == 0) and s.base_velocity == 0


def test_hanging_layout():
    s = init_arm(10, -math.pi / 2)
    np.testing.assert_allclose(s.tip(), [0.0, -10.0], atol=1e-12)


def test_rejects_zero_compartments():
    with pytest.raises(ValueError):
        init_arm(0)


@pytest.mark.parametrize("p", range(3, 21))
def test_interface_sizes(p):
    assert observation_size(p) == 8 * p + 2 == init_arm(p).observation().size
    assert action_size(p) == 3 * p + 2
    assert architecture("theta1", p).i == 8 * p + 2


def test_initial_areas():
    np.testing.assert_allclose(compartment_areas(init_arm(6, 0.3)), 1.0, atol=1e-12)


# dynamics -------------------------------------------------------------------------


def test_arm_sags_under_gravity():
    s = init_arm(10, 0.0)
    y0 = s.tip()[1]
    for _ in range(10):
        s = step_physics(s, np.zeros(action_size(10)))
    assert s.tip()[1] < y0 - 0.1


def test_transverse_contraction_fixture():
    # the area penalty turns a narrower arm into a longer one
    p = 10
    s = init_arm(p, 0.0)
    act = np.zeros(action_size(p))
    act[1 : 3 * p : 3] = 1.0
    for _ in range(20):
        s = step_physics(s, act)
    assert arm_length(s) == pytest.approx(12.804956468744964, rel=1e-6)
    width = np.linalg.norm(s.pos[1:, 0] - s.pos[1:, 1], axis=1)
    assert width.max() < 0.9


def test_dorsal_contraction_curls_arm():
    p = 10
    s = init_arm(p, 0.0)
    act = np.zeros(action_size(p))
    act[0 : 3 * p : 3] = 1.0
    for _ in range(10):
        s = step_physics(s, act)
    assert arm_length(s) < 10.0
    assert s.tip()[1] > 1.0  # bends toward the dorsal side


@pytest.mark.parametrize("p", [5, 10, 20])
def test_areas_stay_near_rest_under_random_actions(p):
    rng = np.random.default_rng(p)
    s = init_arm(p, 0.0)
    for _ in range(100):
        s = step_physics(s, rng.uniform(0, 1, action_size(p)))
    areas = compartment_areas(s)
    assert np.all(np.abs(areas - 1.0) < 0.1)


def test_base_rotation():
    p = 5
    act = np.zeros(action_size(p))
    act[-2] = 1.0
    s = init_arm(p, 0.0)
    for _ in range(5):
        s = step_physics(s, act)
    assert s.base_angle > 0
    act[-1] = 1.0  # opposing action cancels
    t = init_arm(p, 0.0)
    t = step_physics(t, act)
    assert t.base_angle == 0.0 and t.base_velocity == 0.0


def test_step_rejects_bad_action_length():
    with pytest.raises(ValueError):
        step_physics(init_arm(3), np.zeros(5))


def test_step_rejects_non_finite_state():
    s = init_arm(3)
    s.pos[2, 0, 0] = math.nan
    with pytest.raises(FloatingPointError, match="simulation diverged"):
        step_physics(s, np.zeros(action_size(3)))


def test_mechanical_energy_decays_without_gravity():
    cfg = ArmConfig(gravity=0.0)
    p = 6
    s = init_arm(p, 0.4, cfg)
    rng = np.random.default_rng(0)
    s.vel[1:] = rng.normal(0, 0.5, s.vel[1:].shape)
    zero = np.zeros(action_size(p))
    energy = [kinetic_energy(s, cfg) + potential_energy(s, zero, cfg)]
    for _ in range(30):
        s = step_physics(s, zero, cfg)
        energy.append(kinetic_energy(s, cfg) + potential_energy(s, zero, cfg))
    assert np.all(np.diff(energy) <= 1e-9 * energy[0])
    assert energy[-1] < 0.01 * energy[0]


# meta-actions -------------------------------------------------------------------


def test_meta_all_zero():
    assert meta_to_raw(np.zeros(8), 10).tolist() == [0.0] * 32


def test_meta_first_dorsal():
    raw = meta_to_raw([1, 0, 0, 0, 0, 0, 0, 0], 10)
    expected = np.zeros(32)
    expected[0:15:3] = 1.0
    assert raw.tolist() == expected.tolist()


def test_meta_odd_split():
    raw = meta_to_raw([0, 1, 0, 0, 0, 0, 0, 0], 3)
    assert raw.tolist() == [0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0]


def test_meta_second_half_and_rotation():
    raw = meta_to_raw([0, 0, 0, 0, 0, 0.5, 0.2, 0.9], 4)
    assert raw.tolist() == [0, 0, 0, 0, 0, 0, 0, 0, 0.5, 0, 0, 0.5, 0.2, 0.9]


def test_meta_clamps():
    raw = meta_to_raw([2.0, -1.0, 0, 0, 0, 0, 0, 0], 2)
    assert raw.min() >= 0 and raw.max() <= 1


# fitness ----------------------------------------------------------------------


def test_score_cases():
    assert trial_score(250, 250, 7.0, 7.0) == 0.0
    assert trial_score(1, 250, 0.0, 7.0) == 1.0
    assert trial_score(125, 250, 3.5, 7.0) == pytest.approx(0.75, abs=1e-12)
    assert trial_score(250, 250, 20.0, 7.0) == 0.0


@settings(max_examples=200)
@given(st.integers(1, 500), st.floats(0, 50), st.floats(0.01, 50))
def test_score_bounds(T, d, D):
    for t in (0, T // 2, T):
        assert 0.0 <= trial_score(t, T, d, D) <= 1.0


@settings(max_examples=100)
@given(st.integers(2, 500), st.floats(0.01, 10), st.floats(0.1, 10))
def test_score_rises_as_time_falls(T, d, D):
    d = min(d, D)
    scores = [trial_score(t, T, d, D) for t in range(T, 0, -max(1, T // 7))]
    assert all(b > a for a, b in zip(scores, scores[1:]))


def test_touch_scores_one():
    cfg = ArmConfig(touch_radius=100.0)
    w, mode = random_net("theta1", 4, 0)
    res = run_trial(w, mode, 4, training_trials(4, cfg)[0], cfg)
    assert res.touched and res.t == 1 and res.d == 0.0 and res.score == 1.0


def test_untouched_trial_uses_final_distance():
    w, mode = random_net("theta2", 4, 1)
    trial = training_trials(4, CFG)[1]
    res = run_trial(w, mode, 4, trial, CFG)
    if not res.touched:
        assert res.t == trial.T
        assert res.score == pytest.approx(max(0.0, 1 - res.d / res.D), abs=1e-12)
        np.testing.assert_allclose(np.linalg.norm(res.tip[-1] - trial.goal), res.d, rtol=1e-12)


def test_closest_mode_zero_when_never_closer():
    # all muscles relaxed and no gravity: the arm stays exactly at rest
    arch = architecture("theta2", 3)
    w = NetworkWeights.zeros(arch)
    w.bias[:] = -50.0
    cfg = ArmConfig(gravity=0.0)
    res = run_trial(w, "raw", 3, TrialSpec(0.0, 20, (1.0, 5.0)), cfg, closest=True)
    assert res.d == pytest.approx(res.D, abs=1e-12)
    assert res.score == 0.0


def test_closest_mode_uses_best_approach():
    w, mode = random_net("theta1", 4, 5)
    trial = training_trials(4, CFG)[1]
    res = run_trial(w, mode, 4, trial, CFG, closest=True)
    dists = np.linalg.norm(res.tip - np.array(trial.goal), axis=1)
    if not res.touched and res.d < res.D:
        assert res.d == pytest.approx(np.nanmin(dists), abs=1e-12)
        assert res.score == pytest.approx(1 - (res.t / trial.T) * (res.d / res.D), abs=1e-12)


@pytest.mark.parametrize("arch_name", ["theta1", "theta2"])
def test_evaluate_deterministic_and_bounded(arch_name):
    w, mode = random_net(arch_name, 5, 3)
    trials = training_trials(5, CFG)
    a = evaluate(w, mode, 5, trials, CFG)
    b = evaluate(w, mode, 5, trials, CFG)
    assert a == b and 0.0 <= a <= 1.0


def test_trial_tracks_identical():
    w, mode = random_net("theta1", 5, 8)
    trial = training_trials(5, CFG, HELD_OUT_ANGLES)[0]
    a = run_trial(w, mode, 5, trial, CFG)
    b = run_trial(w, mode, 5, trial, CFG)
    assert np.array_equal(a.tip, b.tip, equal_nan=True)


def test_network_size_mismatch():
    w, mode = random_net("theta1", 5, 0)
    with pytest.raises(ValueError):
        run_trial(w, mode, 6, training_trials(6, CFG)[0], CFG)
    w2, _ = random_net("theta2", 5, 0)
    with pytest.raises(ValueError):
        run_trial(w2, "meta", 5, training_trials(5, CFG)[0], CFG)


def test_training_trials():
    trials = training_trials(10, CFG)
    assert [t.initial_angle for t in trials] == list(TRAINING_ANGLES)
    assert all(t.T == 250 for t in trials)
    np.testing.assert_allclose(trials[0].goal, [5.5, 4.5])


def test_trajectory_dump(tmp_path):
    w, mode = random_net("theta1", 3, 2)
    res = run_trial(w, mode, 3, training_trials(3, CFG)[2], CFG)
    path = tmp_path / "traj.tsv"
    write_trajectory(path, res)
    lines = path.read_text().splitlines()
    assert lines[0].split("\t") == ["step", "tip_x", "tip_y", "t", "d"]
    steps = res.t if res.touched else res.tip.shape[0]
    assert len(lines) == 1 + steps
    first = lines[1].split("\t")
    assert first[0] == "1" and float(first[1]) == res.tip[0, 0]


def test_config_dict_round_trip():
    cfg = ArmConfig(drag=2.0, goal=(0.1, 0.2))
    assert ArmConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ValueError):
        ArmConfig.from_dict({"viscosity": 1.0})
