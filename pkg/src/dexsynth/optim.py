"""Grasp initialization and the iterative pose optimization loop.

Plain gradient descent over (T, R-tangent, theta) with per-block step sizes,
exponential step decay, stochastic contact re-sampling, and an optional
Metropolis acceptance rule (off by default). Every grasp runs on its own
seeded generator; batches are deterministic regardless of worker count.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import ndtri

from .energy import Weights, total_energy
from .errors import ConfigError
from .hand import GraspPose
from .rotations import apply_tangent, orthonormal_tangents, quat_from_axis_angle, quat_multiply, rotation_between


@dataclass
class OptimConfig:
    iterations: int = 6000
    step_t: float = 0.005          # meters per unit clipped gradient
    step_r: float = 0.005          # radians
    step_theta: float = 0.01       # radians
    decay: float = 0.5
    decay_every: int = 2000
    grad_clip: float = 1.0         # per-block gradient norm cap
    resample_prob: float = 0.1     # chance per step of swapping one contact
    metropolis: bool = False
    temperature: float = 1.0
    n_contacts: int = 4
    hull_offset: float = 0.2       # inflated-hull push distance, meters
    cone_half_angle: float = math.radians(30.0)
    push_min: float = 0.0          # back-off range along the approach axis
    push_max: float = 0.1
    theta_jitter: float = 0.1      # sigma as a fraction of each joint range
    penetration_samples: int = 2048

    def validate(self):
        if self.iterations < 0:
            raise ConfigError("iterations must be >= 0")
        if not 0.0 <= self.resample_prob <= 1.0:
            raise ConfigError("resample_prob must be in [0, 1]")
        if min(self.step_t, self.step_r, self.step_theta) <= 0.0:
            raise ConfigError("step sizes must be > 0")
        if self.n_contacts < 1:
            raise ConfigError("n_contacts must be >= 1")
        if self.push_min > self.push_max:
            raise ConfigError("push_min must be <= push_max")

    def to_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class GraspState:
    pose: GraspPose
    contact_indices: np.ndarray
    energy: object = None      # EnergyBreakdown cache
    step: int = 0
    rng: np.random.Generator = None
    failed: bool = False


def truncated_normal(rng, mean, sigma, lo, hi):
    """Normal(mean, sigma) conditioned on [lo, hi].

    Rejection sampling with an inverse-CDF fallback after 100 rejections;
    sigma -> 0 degenerates to the clamped mean.
    """
    if not lo < hi:
        raise ValueError("need lo < hi")
    if sigma <= 0.0:
        return min(max(mean, lo), hi)
    for _ in range(100):
        x = mean + sigma * rng.standard_normal()
        if lo <= x <= hi:
            return x
    # inverse-CDF on the truncated band
    a = 0.5 * (1.0 + math.erf((lo - mean) / (sigma * math.sqrt(2.0))))
    b = 0.5 * (1.0 + math.erf((hi - mean) / (sigma * math.sqrt(2.0))))
    u = a + (b - a) * rng.random()
    u = min(max(u, 1e-15), 1.0 - 1e-15)
    return min(max(mean + sigma * float(ndtri(u)), lo), hi)


def _jitter_direction(rng, direction, half_angle):
    """Uniform draw from the spherical cap of ``half_angle`` around ``direction``."""
    if half_angle <= 0.0:
        return direction
    cos_t = 1.0 - rng.random() * (1.0 - math.cos(half_angle))
    phi = rng.random() * 2.0 * math.pi
    sin_t = math.sqrt(max(0.0, 1.0 - cos_t * cos_t))
    e1, e2 = orthonormal_tangents(direction)
    return (cos_t * direction
            + sin_t * (math.cos(phi) * e1 + math.sin(phi) * e2))


def init_grasp(hand, obj, rng, config):
    """Palm-facing initialization outside the object.

    Joint angles jitter around the canonical pose within limits; the hand is
    placed on an area-weighted sample of the inflated convex hull, aimed at
    the nearest object point (jittered within a cone), backed off a random
    distance, and rolled randomly about the approach axis.
    """
    d = hand.dof
    theta = np.empty(d)
    for i in range(d):
        sigma = config.theta_jitter * (hand.upper[i] - hand.lower[i])
        theta[i] = truncated_normal(rng, hand.theta_ref[i], sigma,
                                    hand.lower[i], hand.upper[i])

    p = obj.inflated.sample_surface(1, rng).points[0]
    _, nearest, _ = obj.mesh.closest_points(p[None])
    direction = nearest[0] - p
    direction = direction / np.linalg.norm(direction)
    aim = _jitter_direction(rng, direction, config.cone_half_angle)

    q_align = rotation_between(hand.palm_axis, aim)
    roll = rng.random() * 2.0 * math.pi
    rotation = quat_multiply(quat_from_axis_angle(aim, roll), q_align)

    back = config.push_min + rng.random() * (config.push_max - config.push_min)
    translation = p - back * aim

    contacts = rng.choice(hand.num_candidates, size=config.n_contacts, replace=False)
    pose = GraspPose(translation, rotation, theta)
    return GraspState(pose=pose, contact_indices=np.sort(contacts), rng=rng)


def _clipped(g, cap):
    n = np.linalg.norm(g)
    if n > cap:
        return g * (cap / n)
    return g


def step(state, hand, obj, weights, config):
    """One optimization step; returns the updated state.

    A non-finite gradient marks the state failed and freezes it. With the
    Metropolis rule enabled, a worse update survives with probability
    exp(-(E' - E)/temperature); the rejected proposal still consumes the
    step counter so the decay schedule is unaffected.
    """
    if state.failed:
        return state
    if state.energy is None:
        state.energy = total_energy(state.pose, state.contact_indices, hand,
                                    obj.mesh, obj.samples, weights)
    grad = state.energy.grad
    if not np.all(np.isfinite(grad)):
        return replace(state, failed=True)

    scale = config.decay ** (state.step // config.decay_every)
    pose = state.pose
    new_pose = GraspPose(
        pose.translation - config.step_t * scale * _clipped(grad[0:3], config.grad_clip),
        apply_tangent(pose.rotation,
                      -config.step_r * scale * _clipped(grad[3:6], config.grad_clip)),
        pose.theta - config.step_theta * scale * _clipped(grad[6:], config.grad_clip),
    )

    contacts = state.contact_indices
    if state.rng.random() < config.resample_prob:
        slot = int(state.rng.integers(len(contacts)))
        pool = np.setdiff1d(np.arange(hand.num_candidates), contacts)
        contacts = contacts.copy()
        contacts[slot] = pool[int(state.rng.integers(len(pool)))]

    new_energy = total_energy(new_pose, contacts, hand, obj.mesh, obj.samples, weights)
    if config.metropolis:
        delta = new_energy.total - state.energy.total
        if delta > 0.0:
            accept = math.exp(-delta / max(config.temperature, 1e-12))
            if state.rng.random() >= accept:
                return replace(state, step=state.step + 1)
    return GraspState(pose=new_pose, contact_indices=contacts, energy=new_energy,
                      step=state.step + 1, rng=state.rng, failed=False)


def optimize_one(hand, obj, weights, config, seed):
    """Initialize and run one grasp to completion; returns the final state."""
    rng = np.random.default_rng([seed & 0xFFFFFFFFFFFF,
                                 *_object_key(obj)])
    state = init_grasp(hand, obj, rng, config)
    state.energy = total_energy(state.pose, state.contact_indices, hand,
                                obj.mesh, obj.samples, weights)
    for _ in range(config.iterations):
        state = step(state, hand, obj, weights, config)
        if state.failed:
            break
    return state


def _object_key(obj):
    from .objects import stable_object_key
    return stable_object_key(obj.object_id, obj.scale)


# -- batch driver -------------------------------------------------------------

_POOL_CTX = {}


def _pool_init(hand, obj, weights, config, q1_config, master_seed):
    _POOL_CTX["args"] = (hand, obj, weights, config, q1_config, master_seed)


def _pool_task(index):
    hand, obj, weights, config, q1_config, master_seed = _POOL_CTX["args"]
    from .evaluate import evaluate_grasp
    seed = master_seed ^ index
    state = optimize_one(hand, obj, weights, config, seed)
    return index, evaluate_grasp(hand, obj, state, weights, config, q1_config,
                                 master_seed, seed)


def run_batch(hand, obj, batch_size, config, master_seed, weights=None,
              q1_config=None, workers=1):
    """Run ``batch_size`` independent grasp optimizations and evaluate them.

    Per-grasp seed is master_seed XOR index. Results are identical for any
    worker count; the returned list is ordered by index.
    """
    from .evaluate import evaluate_grasp
    from .quality import Q1Config

    if batch_size < 1:
        raise ConfigError("batch size must be >= 1")
    config.validate()
    weights = weights if weights is not None else Weights()
    q1_config = q1_config if q1_config is not None else Q1Config()

    if workers <= 1:
        records = []
        for i in range(batch_size):
            seed = master_seed ^ i
            state = optimize_one(hand, obj, weights, config, seed)
            records.append(evaluate_grasp(hand, obj, state, weights, config,
                                          q1_config, master_seed, seed))
        return records

    results = [None] * batch_size
    with ProcessPoolExecutor(
            max_workers=workers, initializer=_pool_init,
            initargs=(hand, obj, weights, config, q1_config, master_seed)) as pool:
        for index, record in pool.map(_pool_task, range(batch_size)):
            results[index] = record
    return results
