import numpy as np
import pytest

from framedyn.dataset import DatasetFormatError, TransitionDataset, read_jsonl, write_jsonl
from framedyn.rng import Rng
from framedyn.sim import (
    car_step,
    generate_dataset,
    get_env,
    parking_step,
    reacher_step,
    _reacher_fingertip,
)
from framedyn.verify import check_sim_invariance


class TestCarStep:
    def test_straight_line_advances_position(self):
        x = np.array([0.0, 0.0, 1.0, 0.0, 1.0, 0.0])  # unit speed along +y
        nxt = car_step(x, np.array([0.0, 0.0]), dt=0.1)
        assert abs(nxt[0] - 0.1) < 1e-15
        assert abs(nxt[1]) < 1e-15
        assert np.allclose(nxt[2:], [1.0, 0.0, 1.0, 0.0], atol=1e-15)

    def test_rest_with_zero_control_is_fixed_point(self):
        x = np.array([2.0, -1.0, 0.0, 0.0, 0.6, 0.8])
        assert np.allclose(car_step(x, np.zeros(2)), x, atol=1e-15)

    def test_controls_are_clamped(self):
        x = np.array([0.0, 0.0, 1.0, 0.0, 1.0, 0.0])
        a = car_step(x, np.array([5.0, 0.0]))
        b = car_step(x, np.array([1.0, 0.0]))
        assert np.array_equal(a, b)

    def test_heading_stays_unit_norm(self):
        rng = Rng(1)
        x = np.array([0.0, 0.0, 0.5, 0.0, 1.0, 0.0])
        for _ in range(500):
            u = np.array([rng.uniform(-1, 1), rng.uniform(-0.8, 0.8)])
            x = car_step(x, u)
            assert abs(np.hypot(x[4], x[5]) - 1.0) < 1e-9


class TestReacherStep:
    def test_zero_torque_at_rest_keeps_angles(self):
        env = get_env("reacher")
        x = env.initial_state(Rng(3))
        x[6] = x[7] = 0.0
        x = reacher_step(x, np.zeros(2) + 0.0)  # damping acts on zero velocity
        nxt = reacher_step(x, np.zeros(2))
        assert np.max(np.abs(nxt[:4] - x[:4])) < 1e-15

    def test_unit_torque_from_rest_gives_expected_velocity(self):
        env = get_env("reacher")
        x = env.initial_state(Rng(4))
        x[6] = x[7] = 0.0
        nxt = reacher_step(x, np.array([1.0, 0.0]))
        assert abs(nxt[6] - 0.05) < 1e-15
        assert nxt[7] == 0.0

    def test_observation_unit_circle_invariants(self):
        ds = generate_dataset("reacher", episodes=5, horizon=30, seed=2)
        for obs in (ds.x, ds.x_next):
            assert np.max(np.abs(np.hypot(obs[:, 0], obs[:, 2]) - 1.0)) < 1e-12
            assert np.max(np.abs(np.hypot(obs[:, 1], obs[:, 3]) - 1.0)) < 1e-12
            assert np.all(obs[:, 10] == 0.0)

    def test_offset_consistent_with_forward_kinematics(self):
        ds = generate_dataset("reacher", episodes=5, horizon=20, seed=6)
        for obs in (ds.x, ds.x_next):
            th1 = np.arctan2(obs[:, 2], obs[:, 0])
            th2 = np.arctan2(obs[:, 3], obs[:, 1])
            fy, fz = _reacher_fingertip(th1, th2)
            assert np.max(np.abs(fy - obs[:, 4] - obs[:, 8])) < 1e-12
            assert np.max(np.abs(fz - obs[:, 5] - obs[:, 9])) < 1e-12


@pytest.mark.parametrize("env_id", ["parking2", "reacher"])
def test_simulator_commutes_with_group_action(env_id):
    result = check_sim_invariance(env_id, seed=0, samples=1000)
    assert result.passed, f"max error {result.max_error}"


def test_goal_blocks_constant_within_episode():
    ds = generate_dataset("parking2", episodes=10, horizon=20, seed=9)
    assert np.array_equal(ds.x[:, 12:24], ds.x_next[:, 12:24])
    # and constant across each episode's transitions
    goals = ds.x[:, 12:24].reshape(10, 20, 12)
    assert np.all(goals == goals[:, :1, :])


class TestGenerateDataset:
    def test_counts(self):
        ds = generate_dataset("parking2", episodes=10, horizon=50, seed=1)
        assert len(ds) == 500
        assert ds.x.shape == (500, 24) and ds.u.shape == (500, 4)

    def test_deterministic_given_seed(self, tmp_path):
        a = generate_dataset("reacher", episodes=4, horizon=10, seed=3)
        b = generate_dataset("reacher", episodes=4, horizon=10, seed=3)
        assert np.array_equal(a.x, b.x) and np.array_equal(a.u, b.u)
        write_jsonl(tmp_path / "a.jsonl", a)
        write_jsonl(tmp_path / "b.jsonl", b)
        assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()

    @pytest.mark.parametrize("env_id", ["parking2", "reacher"])
    @pytest.mark.parametrize("policy", ["uniform-random", "scripted-goal-seek"])
    def test_replay_reproduces_stored_next_states(self, env_id, policy):
        ds = generate_dataset(env_id, episodes=5, horizon=20, policy=policy, seed=4)
        step = parking_step if env_id == "parking2" else reacher_step
        assert np.array_equal(step(ds.x, ds.u), ds.x_next)

    def test_goal_seek_reduces_distance(self):
        uniform = generate_dataset("parking2", episodes=10, horizon=50, seed=7)
        seek = generate_dataset("parking2", episodes=10, horizon=50,
                                policy="scripted-goal-seek", seed=7)

        def final_distance(ds):
            last = ds.x_next.reshape(10, 50, 24)[:, -1, :]
            return np.mean(np.hypot(last[:, 0] - last[:, 12], last[:, 1] - last[:, 13]))

        assert final_distance(seek) < final_distance(uniform)

    def test_bad_arguments(self):
        with pytest.raises(ValueError, match="unknown environment"):
            generate_dataset("lander", 1, 1)
        with pytest.raises(ValueError, match="positive"):
            generate_dataset("reacher", 0, 10)
        with pytest.raises(ValueError, match="unknown policy"):
            generate_dataset("reacher", 1, 1, policy="ppo")


class TestJsonl:
    def test_empty_dataset_is_header_only(self, tmp_path):
        ds = TransitionDataset(env_id="reacher", n=11, n_u=2, seed=0)
        path = tmp_path / "empty.jsonl"
        write_jsonl(path, ds)
        assert len(path.read_text().strip().splitlines()) == 1
        back = read_jsonl(path)
        assert len(back) == 0 and back.n == 11

    def test_roundtrip_is_exact(self, tmp_path):
        ds = generate_dataset("parking2", episodes=5, horizon=20, seed=8)
        path = tmp_path / "d.jsonl"
        write_jsonl(path, ds)
        back = read_jsonl(path)
        assert back.env_id == ds.env_id and back.seed == ds.seed
        assert np.array_equal(back.x, ds.x)
        assert np.array_equal(back.u, ds.u)
        assert np.array_equal(back.x_next, ds.x_next)
        # re-serializing produces identical bytes
        path2 = tmp_path / "d2.jsonl"
        write_jsonl(path2, back)
        assert path.read_bytes() == path2.read_bytes()

    def test_header_fields(self, tmp_path):
        ds = generate_dataset("reacher", episodes=2, horizon=5, seed=12)
        path = tmp_path / "r.jsonl"
        write_jsonl(path, ds)
        import json

        header = json.loads(path.read_text().splitlines()[0])
        assert header == {"count": 10, "env_id": "reacher", "n": 11, "n_u": 2, "seed": 12}

    def test_count_mismatch_rejected(self, tmp_path):
        ds = generate_dataset("reacher", episodes=1, horizon=5, seed=1)
        path = tmp_path / "bad.jsonl"
        write_jsonl(path, ds)
        lines = path.read_text().splitlines()
        path.write_text("\n".join(lines[:-1]) + "\n")  # drop one record
        with pytest.raises(DatasetFormatError, match="count"):
            read_jsonl(path)

    def test_malformed_line_reports_line_number(self, tmp_path):
        ds = generate_dataset("reacher", episodes=1, horizon=3, seed=1)
        path = tmp_path / "bad.jsonl"
        write_jsonl(path, ds)
        lines = path.read_text().splitlines()
        lines[2] = "{not json"
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(DatasetFormatError, match="line 3"):
            read_jsonl(path)

    def test_dimension_mismatch_rejected(self, tmp_path):
        ds = generate_dataset("reacher", episodes=1, horizon=2, seed=1)
        path = tmp_path / "bad.jsonl"
        write_jsonl(path, ds)
        lines = path.read_text().splitlines()
        lines[1] = '{"x": [1.0], "u": [0.0, 0.0], "xn": [1.0]}'
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(DatasetFormatError, match="dimensions"):
            read_jsonl(path)

    def test_content_hash_sensitive_to_data(self):
        a = generate_dataset("reacher", episodes=2, horizon=5, seed=1)
        b = generate_dataset("reacher", episodes=2, horizon=5, seed=2)
        assert a.content_hash() == generate_dataset("reacher", 2, 5, seed=1).content_hash()
        assert a.content_hash() != b.content_hash()
