"""Desk-scale environment simulators and dataset generation.

Two environments:

* ``parking2``: two kinematic cars plus two constant goal blocks
  (state length 24, controls 4).  Each car is a kinematic bicycle stepped
  with explicit Euler; the update uses only body-frame quantities, so the
  dynamics commute with planar translations and rotations exactly.
* ``reacher``: a two-link planar arm with damped decoupled joints and a
  fixed target, observed through the 11-dimensional layout described in
  :class:`framedyn.builtin.ReacherGroup`.

Step functions are pure and accept leading batch axes.  Dataset generation
is deterministic given the seed: episode ``k`` draws from an independent
generator seeded with ``derive_seed(seed, "episode", k)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dataset import TransitionDataset
from .rng import Rng, derive_seed

CAR_DT = 0.1
CAR_WHEELBASE = 1.0
CAR_MAX_ACCEL = 1.0
CAR_MAX_STEER = np.pi / 4

REACHER_DT = 0.05
REACHER_INERTIA = 1.0
REACHER_DAMPING = 0.1
REACHER_LINK = 0.1  # both links
REACHER_MAX_TORQUE = 1.0

POLICIES = ("uniform-random", "scripted-goal-seek")


def car_step(x, u, dt: float = CAR_DT) -> np.ndarray:
    """Kinematic bicycle step for one car state (y, z, v_y, v_z, h_y, h_z).

    Controls are (acceleration, steering angle), clamped to +-1 and +-pi/4.
    Signed speed is the velocity component along the heading; the yaw rate is
    ``speed * tan(steer) / wheelbase``.  Position advances along the current
    heading, then the heading rotates and the velocity is rebuilt as
    ``new_speed * new_heading``, so the state stays on the no-slip manifold
    and the update commutes with planar rigid-body motions.
    """
    xv = np.asarray(x, dtype=np.float64)
    uv = np.asarray(u, dtype=np.float64)
    accel = np.clip(uv[..., 0], -CAR_MAX_ACCEL, CAR_MAX_ACCEL)
    steer = np.clip(uv[..., 1], -CAR_MAX_STEER, CAR_MAX_STEER)
    hy, hz = xv[..., 4], xv[..., 5]
    speed = xv[..., 2] * hy + xv[..., 3] * hz
    new_speed = speed + accel * dt
    yaw = speed * np.tan(steer) / CAR_WHEELBASE * dt
    cos_y, sin_y = np.cos(yaw), np.sin(yaw)
    new_hy = cos_y * hy - sin_y * hz
    new_hz = sin_y * hy + cos_y * hz
    norm = np.hypot(new_hy, new_hz)
    new_hy, new_hz = new_hy / norm, new_hz / norm
    shape = np.broadcast_shapes(xv.shape[:-1], uv.shape[:-1])
    out = np.empty(shape + (6,))
    out[..., 0] = xv[..., 0] + speed * hy * dt
    out[..., 1] = xv[..., 1] + speed * hz * dt
    out[..., 2] = new_speed * new_hy
    out[..., 3] = new_speed * new_hz
    out[..., 4] = new_hy
    out[..., 5] = new_hz
    return out


def parking_step(x, u, dt: float = CAR_DT) -> np.ndarray:
    """Joint step for two cars (slices 0:6 and 6:12, controls 0:2 and 2:4);
    the goal blocks 12:24 are constant."""
    xv = np.asarray(x, dtype=np.float64)
    uv = np.asarray(u, dtype=np.float64)
    shape = np.broadcast_shapes(xv.shape[:-1], uv.shape[:-1])
    out = np.empty(shape + (24,))
    out[..., 0:6] = car_step(xv[..., 0:6], uv[..., 0:2], dt)
    out[..., 6:12] = car_step(xv[..., 6:12], uv[..., 2:4], dt)
    out[..., 12:24] = xv[..., 12:24]
    return out


def _reacher_fingertip(th1, th2):
    th12 = th1 + th2
    fy = REACHER_LINK * np.cos(th1) + REACHER_LINK * np.cos(th12)
    fz = REACHER_LINK * np.sin(th1) + REACHER_LINK * np.sin(th12)
    return fy, fz


def reacher_step(x, u, dt: float = REACHER_DT) -> np.ndarray:
    """Two-link reacher step on the 11-dimensional observation.

    Joints are decoupled and damped: angular acceleration is
    ``(torque - damping * velocity) / inertia`` with torques clamped to +-1,
    integrated with explicit Euler (angles advance with the old velocities).
    The observation is rebuilt from the integrated joint state; the target,
    read from the observation itself, is constant, and the fingertip height
    passes through unchanged.
    """
    xv = np.asarray(x, dtype=np.float64)
    uv = np.asarray(u, dtype=np.float64)
    tau = np.clip(uv, -REACHER_MAX_TORQUE, REACHER_MAX_TORQUE)
    th1 = np.arctan2(xv[..., 2], xv[..., 0])
    th2 = np.arctan2(xv[..., 3], xv[..., 1])
    w1, w2 = xv[..., 6], xv[..., 7]
    new_th1 = th1 + w1 * dt
    new_th2 = th2 + w2 * dt
    new_w1 = w1 + (tau[..., 0] - REACHER_DAMPING * w1) / REACHER_INERTIA * dt
    new_w2 = w2 + (tau[..., 1] - REACHER_DAMPING * w2) / REACHER_INERTIA * dt
    fy, fz = _reacher_fingertip(new_th1, new_th2)
    shape = np.broadcast_shapes(xv.shape[:-1], uv.shape[:-1])
    out = np.empty(shape + (11,))
    out[..., 0] = np.cos(new_th1)
    out[..., 1] = np.cos(new_th2)
    out[..., 2] = np.sin(new_th1)
    out[..., 3] = np.sin(new_th2)
    out[..., 4] = xv[..., 4]
    out[..., 5] = xv[..., 5]
    out[..., 6] = new_w1
    out[..., 7] = new_w2
    out[..., 8] = fy - xv[..., 4]
    out[..., 9] = fz - xv[..., 5]
    out[..., 10] = xv[..., 10]
    return out


# -- initial states ----------------------------------------------------------


def _random_car_block(rng: Rng) -> np.ndarray:
    y = rng.uniform(-5.0, 5.0)
    z = rng.uniform(-5.0, 5.0)
    ang = rng.angles()
    speed = rng.uniform(-1.0, 1.0)
    hy, hz = np.cos(ang), np.sin(ang)
    return np.array([y, z, speed * hy, speed * hz, hy, hz])


def _random_goal_block(rng: Rng) -> np.ndarray:
    y = rng.uniform(-5.0, 5.0)
    z = rng.uniform(-5.0, 5.0)
    ang = rng.angles()
    return np.array([y, z, 0.0, 0.0, np.cos(ang), np.sin(ang)])


def parking_initial_state(rng: Rng) -> np.ndarray:
    return np.concatenate(
        [_random_car_block(rng), _random_car_block(rng),
         _random_goal_block(rng), _random_goal_block(rng)]
    )


def reacher_initial_state(rng: Rng) -> np.ndarray:
    th1 = rng.angles()
    th2 = rng.angles()
    w1 = rng.uniform(-1.0, 1.0)
    w2 = rng.uniform(-1.0, 1.0)
    # Target uniform over the reachable disk of radius 2 * link length.
    radius = 2.0 * REACHER_LINK * np.sqrt(rng.uniform())
    t_ang = rng.angles()
    ty, tz = radius * np.cos(t_ang), radius * np.sin(t_ang)
    fy, fz = _reacher_fingertip(th1, th2)
    return np.array(
        [np.cos(th1), np.cos(th2), np.sin(th1), np.sin(th2),
         ty, tz, w1, w2, fy - ty, fz - tz, 0.0]
    )


# -- control policies --------------------------------------------------------


def _parking_uniform(rng: Rng, x) -> np.ndarray:
    return np.array(
        [rng.uniform(-1.0, 1.0), rng.uniform(-CAR_MAX_STEER, CAR_MAX_STEER),
         rng.uniform(-1.0, 1.0), rng.uniform(-CAR_MAX_STEER, CAR_MAX_STEER)]
    )


def _car_goal_seek(car, goal) -> np.ndarray:
    dy, dz = goal[0] - car[0], goal[1] - car[1]
    hy, hz = car[4], car[5]
    body_y = hy * dy + hz * dz
    body_z = -hz * dy + hy * dz
    bearing = np.arctan2(body_z, body_y)
    steer = np.clip(1.5 * bearing, -CAR_MAX_STEER, CAR_MAX_STEER)
    speed = car[2] * hy + car[3] * hz
    desired = min(0.7 * float(np.hypot(dy, dz)), 1.5)
    accel = np.clip(desired - speed, -1.0, 1.0)
    return np.array([accel, steer])


def _parking_goal_seek(rng: Rng, x) -> np.ndarray:
    return np.concatenate(
        [_car_goal_seek(x[0:6], x[12:18]), _car_goal_seek(x[6:12], x[18:24])]
    )


def _reacher_uniform(rng: Rng, x) -> np.ndarray:
    return np.array([rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)])


def _reacher_goal_seek(rng: Rng, x) -> np.ndarray:
    th1 = np.arctan2(x[2], x[0])
    th2 = np.arctan2(x[3], x[1])
    th12 = th1 + th2
    offset = x[8:10]
    # Jacobian columns of the fingertip position w.r.t. the joint angles.
    j1 = np.array(
        [-REACHER_LINK * np.sin(th1) - REACHER_LINK * np.sin(th12),
         REACHER_LINK * np.cos(th1) + REACHER_LINK * np.cos(th12)]
    )
    j2 = np.array([-REACHER_LINK * np.sin(th12), REACHER_LINK * np.cos(th12)])
    tau = -4.0 * np.array([j1 @ offset, j2 @ offset]) - 0.6 * x[6:8]
    return np.clip(tau, -REACHER_MAX_TORQUE, REACHER_MAX_TORQUE)


@dataclass(frozen=True)
class EnvSpec:
    """Static description of one environment."""

    env_id: str
    n: int
    n_u: int
    dt: float
    group_id: str
    step: Callable
    initial_state: Callable
    policies: dict
    default_episodes: int
    default_horizon: int
    default_updates: int
    default_hidden: int


ENVS = {
    "parking2": EnvSpec(
        env_id="parking2", n=24, n_u=4, dt=CAR_DT, group_id="parking2",
        step=parking_step, initial_state=parking_initial_state,
        policies={"uniform-random": _parking_uniform,
                  "scripted-goal-seek": _parking_goal_seek},
        default_episodes=400, default_horizon=50,
        default_updates=20000, default_hidden=128,
    ),
    "reacher": EnvSpec(
        env_id="reacher", n=11, n_u=2, dt=REACHER_DT, group_id="reacher",
        step=reacher_step, initial_state=reacher_initial_state,
        policies={"uniform-random": _reacher_uniform,
                  "scripted-goal-seek": _reacher_goal_seek},
        default_episodes=200, default_horizon=50,
        default_updates=10000, default_hidden=64,
    ),
}


def get_env(env_id: str) -> EnvSpec:
    try:
        return ENVS[env_id]
    except KeyError:
        raise ValueError(
            f"unknown environment '{env_id}' (expected one of {sorted(ENVS)})"
        ) from None


def generate_dataset(
    env_id: str,
    episodes: int,
    horizon: int,
    policy: str = "uniform-random",
    seed: int = 0,
) -> TransitionDataset:
    """Roll out ``episodes`` trajectories of length ``horizon`` and collect
    every transition.  Deterministic given ``seed``.
    """
    env = get_env(env_id)
    if episodes <= 0 or horizon <= 0:
        raise ValueError("episodes and horizon must be positive")
    if policy not in env.policies:
        raise ValueError(f"unknown policy '{policy}' (expected one of {POLICIES})")
    policy_fn = env.policies[policy]
    count = episodes * horizon
    xs = np.empty((count, env.n))
    us = np.empty((count, env.n_u))
    xns = np.empty((count, env.n))
    row = 0
    for ep in range(episodes):
        ep_rng = Rng(derive_seed(seed, "episode", ep))
        x = env.initial_state(ep_rng)
        for _ in range(horizon):
            u = policy_fn(ep_rng, x)
            x_next = env.step(x, u)
            xs[row], us[row], xns[row] = x, u, x_next
            x = x_next
            row += 1
    return TransitionDataset(env_id=env_id, n=env.n, n_u=env.n_u, seed=seed,
                             x=xs, u=us, x_next=xns)
