"""Simplified 2-D muscled arm in a viscous medium.

The arm is a chain of ``p`` quadrilateral compartments. Boundary ``j``
(``j = 0..p``) holds a dorsal and a ventral corner point; boundary 0 is
rigidly attached to a base that rotates about the origin. Each compartment
has three muscles, modelled as springs whose stiffness rises and rest
length falls linearly with activation: dorsal (dorsal edge), transverse
(across the distal boundary) and ventral (ventral edge). Two passive
diagonal springs resist shear and a quadratic penalty keeps every
compartment's area near its rest value. Points feel gravity (net of
buoyancy) and linear drag. Each control step integrates one second with
semi-implicit Euler sub-steps.

This is a stand-in with the same state/action interface as the
hydrodynamic octopus-arm benchmark, not a reproduction of it.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np
from numba import njit

from .encoding import MUSCLES, N_META, NetworkWeights
from .rnn import step_kernel

TRAINING_ANGLES = (-math.pi / 2, 0.0, math.pi / 2)
HELD_OUT_ANGLES = (-math.pi / 4, math.pi / 4)


@dataclass(frozen=True)
class ArmConfig:
    """Physics constants; lengths in compartment units, time in seconds."""

    segment_length: float = 1.0
    width: float = 1.0
    mass: float = 1.0
    passive_stiffness: float = 30.0
    active_stiffness: float = 100.0
    contraction: float = 0.5  # rest-length reduction at full activation
    diagonal_stiffness: float = 30.0
    area_stiffness: float = 1000.0
    drag: float = 5.0
    gravity: float = 0.3
    base_acceleration: float = 0.05
    base_damping: float = 1.0
    substeps: int = 100
    control_dt: float = 1.0
    touch_radius: float = 0.25
    # goal as a fraction of the straight arm length p * segment_length
    goal: tuple[float, float] = (0.55, 0.45)
    steps_per_compartment: int = 25

    @classmethod
    def from_dict(cls, data: dict) -> "ArmConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown physics constants: {sorted(unknown)}")
        data = dict(data)
        if "goal" in data:
            data["goal"] = tuple(data["goal"])
        return cls(**data)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["goal"] = list(self.goal)
        return d

    def horizon(self, p: int) -> int:
        return self.steps_per_compartment * p

    def goal_position(self, p: int) -> np.ndarray:
        return np.array(self.goal) * p * self.segment_length

    def packed(self) -> np.ndarray:
        return np.array([
            self.segment_length, self.width, self.mass, self.passive_stiffness,
            self.active_stiffness, self.contraction, self.diagonal_stiffness,
            self.area_stiffness, self.drag, self.gravity, self.base_acceleration,
            self.base_damping, float(self.substeps), self.control_dt,
        ])


@dataclass
class ArmState:
    pos: np.ndarray  # (p + 1, 2, 2): boundary, dorsal/ventral, xy
    vel: np.ndarray
    base_angle: float = 0.0
    base_velocity: float = 0.0

    @property
    def p(self) -> int:
        return self.pos.shape[0] - 1

    def observation(self) -> np.ndarray:
        return observe(self.pos, self.vel, self.base_angle, self.base_velocity)

    def tip(self) -> np.ndarray:
        return self.pos[-1].mean(axis=0)

    def copy(self) -> "ArmState":
        return ArmState(self.pos.copy(), self.vel.copy(), self.base_angle, self.base_velocity)


@dataclass(frozen=True)
class TrialSpec:
    initial_angle: float
    T: int
    goal: tuple[float, float]


def training_trials(p: int, config: ArmConfig, angles=TRAINING_ANGLES) -> list[TrialSpec]:
    goal = tuple(config.goal_position(p))
    return [TrialSpec(a, config.horizon(p), goal) for a in angles]


# kernels ------------------------------------------------------------------


@njit(cache=True)
def _base_points(theta, half_w, out):
    s, c = math.sin(theta), math.cos(theta)
    out[0, 0] = -s * half_w
    out[0, 1] = c * half_w
    out[1, 0] = s * half_w
    out[1, 1] = -c * half_w


@njit(cache=True)
def _spring(pos, acc, j0, s0, j1, s1, k, rest, inv_m):
    dx = pos[j1, s1, 0] - pos[j0, s0, 0]
    dy = pos[j1, s1, 1] - pos[j0, s0, 1]
    length = math.sqrt(dx * dx + dy * dy)
    if length < 1e-12:
        return
    f = k * (length - rest) / length
    acc[j0, s0, 0] += f * dx * inv_m
    acc[j0, s0, 1] += f * dy * inv_m
    acc[j1, s1, 0] -= f * dx * inv_m
    acc[j1, s1, 1] -= f * dy * inv_m


@njit(cache=True)
def _accelerations(pos, vel, act, prm, acc):
    seg, width, mass = prm[0], prm[1], prm[2]
    k_pass, k_act, contr = prm[3], prm[4], prm[5]
    k_diag, k_area, drag, grav = prm[6], prm[7], prm[8], prm[9]
    inv_m = 1.0 / mass
    p = pos.shape[0] - 1
    diag_rest = math.sqrt(seg * seg + width * width)
    area0 = seg * width
    acc[:, :, :] = 0.0
    for c in range(p):
        a_d = act[3 * c]
        a_t = act[3 * c + 1]
        a_v = act[3 * c + 2]
        _spring(pos, acc, c, 0, c + 1, 0, k_pass + a_d * k_act, seg * (1.0 - a_d * contr), inv_m)
        _spring(pos, acc, c + 1, 0, c + 1, 1, k_pass + a_t * k_act, width * (1.0 - a_t * contr), inv_m)
        _spring(pos, acc, c, 1, c + 1, 1, k_pass + a_v * k_act, seg * (1.0 - a_v * contr), inv_m)
        _spring(pos, acc, c, 0, c + 1, 1, k_diag, diag_rest, inv_m)
        _spring(pos, acc, c, 1, c + 1, 0, k_diag, diag_rest, inv_m)
        # quad (c,d) -> (c,v) -> (c+1,v) -> (c+1,d) is counter-clockwise at rest
        xs = (pos[c, 0, 0], pos[c, 1, 0], pos[c + 1, 1, 0], pos[c + 1, 0, 0])
        ys = (pos[c, 0, 1], pos[c, 1, 1], pos[c + 1, 1, 1], pos[c + 1, 0, 1])
        area = 0.0
        for q in range(4):
            area += xs[q] * ys[(q + 1) % 4] - xs[(q + 1) % 4] * ys[q]
        area *= 0.5
        g = -k_area * (area - area0) * inv_m
        idx_j = (c, c, c + 1, c + 1)
        idx_s = (0, 1, 1, 0)
        for q in range(4):
            nxt, prv = (q + 1) % 4, (q + 3) % 4
            acc[idx_j[q], idx_s[q], 0] += g * 0.5 * (ys[nxt] - ys[prv])
            acc[idx_j[q], idx_s[q], 1] += g * 0.5 * (xs[prv] - xs[nxt])
    for j in range(p + 1):
        for s in range(2):
            acc[j, s, 0] -= drag * vel[j, s, 0]
            acc[j, s, 1] -= drag * vel[j, s, 1] + grav


@njit(cache=True)
def _advance(pos, vel, base, act, prm, acc):
    """One control step in place; ``base`` is [angle, angular velocity]."""
    half_w = 0.5 * prm[1]
    k = int(prm[12])
    dt = prm[13] / k
    rot = act[act.shape[0] - 2] - act[act.shape[0] - 1]
    bp = np.empty((2, 2))
    for _ in range(k):
        base[1] += dt * (prm[10] * rot - prm[11] * base[1])
        base[0] += dt * base[1]
        _accelerations(pos, vel, act, prm, acc)
        for j in range(1, pos.shape[0]):
            for s in range(2):
                for d in range(2):
                    vel[j, s, d] += dt * acc[j, s, d]
                    pos[j, s, d] += dt * vel[j, s, d]
        _base_points(base[0], half_w, bp)
        w = base[1]
        for s in range(2):
            pos[0, s, 0] = bp[s, 0]
            pos[0, s, 1] = bp[s, 1]
            vel[0, s, 0] = -w * bp[s, 1]
            vel[0, s, 1] = w * bp[s, 0]


@njit(cache=True)
def observe(pos, vel, theta, omega):
    p = pos.shape[0] - 1
    obs = np.empty(8 * p + 2)
    for c in range(p):
        for s in range(2):
            o = 8 * c + 4 * s
            obs[o] = pos[c + 1, s, 0]
            obs[o + 1] = pos[c + 1, s, 1]
            obs[o + 2] = vel[c + 1, s, 0]
            obs[o + 3] = vel[c + 1, s, 1]
    obs[8 * p] = theta
    obs[8 * p + 1] = omega
    return obs


@njit(cache=True)
def _meta_to_raw(meta, p, raw):
    half = p // 2
    for c in range(p):
        off = 0 if c < half else 3
        for m in range(3):
            raw[3 * c + m] = min(1.0, max(0.0, meta[off + m]))
    raw[3 * p] = min(1.0, max(0.0, meta[6]))
    raw[3 * p + 1] = min(1.0, max(0.0, meta[7]))


@njit(cache=True)
def _init_pos(p, angle, seg, width):
    pos = np.zeros((p + 1, 2, 2))
    ux, uy = math.cos(angle), math.sin(angle)
    nx, ny = -uy, ux
    for j in range(p + 1):
        for s in range(2):
            side = 0.5 * width if s == 0 else -0.5 * width
            pos[j, s, 0] = j * seg * ux + side * nx
            pos[j, s, 1] = j * seg * uy + side * ny
    return pos


@njit(cache=True)
def _rollout(w_in, w_rec, bias, meta, p, angle, horizon, gx, gy, touch, prm, track):
    """Run one trial. Returns (touch_step, final_d, best_step, best_d, D).

    ``touch_step`` is -1 when the goal is never touched. ``track`` is filled
    with the tip position after each step (rows past the end stay NaN).
    """
    pos = _init_pos(p, angle, prm[0], prm[1])
    vel = np.zeros_like(pos)
    acc = np.zeros_like(pos)
    base = np.array([angle, 0.0])
    n = bias.shape[0]
    state = np.zeros(n)
    new_state = np.empty(n)
    out = np.empty(n)
    raw = np.empty(3 * p + 2)
    tx = 0.5 * (pos[p, 0, 0] + pos[p, 1, 0])
    ty = 0.5 * (pos[p, 0, 1] + pos[p, 1, 1])
    d0 = math.sqrt((tx - gx) ** 2 + (ty - gy) ** 2)
    best_d, best_t, d = d0, 0, d0
    for t in range(1, horizon + 1):
        obs = observe(pos, vel, base[0], base[1])
        step_kernel(w_in, w_rec, bias, state, obs, new_state, out)
        state[:] = new_state
        if meta:
            _meta_to_raw(out, p, raw)
        else:
            raw[:] = out
        _advance(pos, vel, base, raw, prm, acc)
        for j in range(p + 1):
            for s in range(2):
                for q in range(2):
                    if not math.isfinite(pos[j, s, q]) or not math.isfinite(vel[j, s, q]):
                        return -2, d, best_t, best_d, d0
        tx = 0.5 * (pos[p, 0, 0] + pos[p, 1, 0])
        ty = 0.5 * (pos[p, 0, 1] + pos[p, 1, 1])
        track[t - 1, 0] = tx
        track[t - 1, 1] = ty
        d = math.sqrt((tx - gx) ** 2 + (ty - gy) ** 2)
        if d < best_d:
            best_d, best_t = d, t
        if d <= touch:
            return t, 0.0, t, 0.0, d0
    return -1, d, best_t, best_d, d0


# public API ---------------------------------------------------------------


def observation_size(p: int) -> int:
    return 8 * p + 2


def action_size(p: int) -> int:
    return MUSCLES * p + 2


def init_arm(p: int, initial_angle: float = 0.0, config: ArmConfig = ArmConfig()) -> ArmState:
    """Straight arm at rest, pointing along ``initial_angle`` from the base."""
    if p < 1:
        raise ValueError(f"need at least one compartment, got p={p}")
    pos = _init_pos(int(p), float(initial_angle), config.segment_length, config.width)
    return ArmState(pos, np.zeros_like(pos), float(initial_angle), 0.0)


def step_physics(state: ArmState, raw_action, config: ArmConfig = ArmConfig()) -> ArmState:
    act = np.clip(np.asarray(raw_action, dtype=float), 0.0, 1.0)
    if act.shape != (action_size(state.p),):
        raise ValueError(f"expected {action_size(state.p)} raw activations, got shape {act.shape}")
    if not (np.all(np.isfinite(state.pos)) and np.all(np.isfinite(state.vel))):
        raise FloatingPointError("simulation diverged")
    new = state.copy()
    base = np.array([new.base_angle, new.base_velocity])
    _advance(new.pos, new.vel, base, act, config.packed(), np.zeros_like(new.pos))
    new.base_angle, new.base_velocity = float(base[0]), float(base[1])
    if not (np.all(np.isfinite(new.pos)) and np.all(np.isfinite(new.vel))):
        raise FloatingPointError("simulation diverged")
    return new


def meta_to_raw(meta, p: int) -> np.ndarray:
    """Broadcast the 8 meta-actions onto the 3p + 2 raw controls.

    Meta 1-3 drive dorsal/transverse/ventral muscles of compartments
    ``1..p//2``, meta 4-6 those of the remaining compartments, meta 7-8 the
    two base rotations.
    """
    m = np.asarray(meta, dtype=float)
    if m.shape != (N_META,):
        raise ValueError(f"expected {N_META} meta-actions, got shape {m.shape}")
    raw = np.empty(action_size(p))
    _meta_to_raw(m, int(p), raw)
    return raw


def compartment_areas(state: ArmState) -> np.ndarray:
    pos = state.pos
    quads = np.stack([pos[:-1, 0], pos[:-1, 1], pos[1:, 1], pos[1:, 0]], axis=1)
    x, y = quads[..., 0], quads[..., 1]
    return 0.5 * np.sum(x * np.roll(y, -1, axis=1) - np.roll(x, -1, axis=1) * y, axis=1)


def kinetic_energy(state: ArmState, config: ArmConfig = ArmConfig()) -> float:
    return 0.5 * config.mass * float(np.sum(state.vel[1:] ** 2))


def potential_energy(state: ArmState, raw_action, config: ArmConfig = ArmConfig()) -> float:
    """Spring, area-penalty and gravity energy for the given activations."""
    act = np.clip(np.asarray(raw_action, dtype=float), 0.0, 1.0)
    pos, seg, width = state.pos, config.segment_length, config.width

    def spring(a, b, k, rest):
        return 0.5 * k * (np.linalg.norm(b - a) - rest) ** 2

    energy = 0.0
    diag = math.hypot(seg, width)
    for c in range(state.p):
        a_d, a_t, a_v = act[3 * c: 3 * c + 3]
        energy += spring(pos[c, 0], pos[c + 1, 0], config.passive_stiffness + a_d * config.active_stiffness,
                         seg * (1 - a_d * config.contraction))
        energy += spring(pos[c + 1, 0], pos[c + 1, 1], config.passive_stiffness + a_t * config.active_stiffness,
                         width * (1 - a_t * config.contraction))
        energy += spring(pos[c, 1], pos[c + 1, 1], config.passive_stiffness + a_v * config.active_stiffness,
                         seg * (1 - a_v * config.contraction))
        energy += spring(pos[c, 0], pos[c + 1, 1], config.diagonal_stiffness, diag)
        energy += spring(pos[c, 1], pos[c + 1, 0], config.diagonal_stiffness, diag)
    energy += 0.5 * config.area_stiffness * float(np.sum((compartment_areas(state) - seg * width) ** 2))
    energy += config.mass * config.gravity * float(np.sum(pos[1:, :, 1]))
    return energy


def trial_score(t: float, T: float, d: float, D: float) -> float:
    """``max(1 - (t/T)(d/D), 0)``."""
    return max(1.0 - (t / T) * (d / D), 0.0)


@dataclass
class TrialResult:
    score: float
    touched: bool
    t: int  # steps used by the score
    d: float
    D: float
    tip: np.ndarray = field(repr=False)


def run_trial(weights: NetworkWeights, mode: str, p: int, trial: TrialSpec,
              config: ArmConfig = ArmConfig(), closest: bool = False) -> TrialResult:
    """Simulate one trial.

    Default scoring uses the final tip distance (``t = T`` unless the goal
    is touched). With ``closest`` the closest approach and its time step
    are used, and an arm that never gets closer than it started scores 0.
    """
    if weights.i != observation_size(p):
        raise ValueError(f"network takes {weights.i} inputs, a {p}-compartment arm gives {observation_size(p)}")
    meta = mode == "meta"
    expected_out = N_META if meta else action_size(p)
    if weights.n != expected_out:
        raise ValueError(f"{mode} control needs {expected_out} neurons, network has {weights.n}")
    track = np.full((trial.T, 2), np.nan)
    touch_t, d, best_t, best_d, d0 = _rollout(
        np.ascontiguousarray(weights.input_matrix, dtype=float),
        np.ascontiguousarray(weights.recurrent_matrix, dtype=float),
        np.ascontiguousarray(weights.bias, dtype=float),
        meta, int(p), float(trial.initial_angle), int(trial.T),
        float(trial.goal[0]), float(trial.goal[1]), config.touch_radius, config.packed(), track,
    )
    if touch_t == -2:
        raise FloatingPointError("simulation diverged")
    touched = touch_t > 0
    if touched:
        t, dist = touch_t, 0.0
    elif closest:
        t, dist = best_t, best_d
    else:
        t, dist = trial.T, d
    if closest and not touched and best_d >= d0:
        score = 0.0
    else:
        score = trial_score(t, trial.T, dist, d0)
    return TrialResult(score, touched, t, dist, d0, track)


def evaluate(weights: NetworkWeights, mode: str, p: int, trials,
             config: ArmConfig = ArmConfig(), closest: bool = False) -> float:
    """Mean trial score in [0, 1]."""
    return float(np.mean([run_trial(weights, mode, p, tr, config, closest).score for tr in trials]))


def write_trajectory(path, result: TrialResult) -> None:
    """One line per control step: step, tip x, tip y, t, d."""
    with open(path, "w") as fh:
        fh.write("step\ttip_x\ttip_y\tt\td\n")
        for k, (x, y) in enumerate(result.tip):
            if np.isnan(x):
                break
            fh.write(f"{k + 1}\t{float(x)!r}\t{float(y)!r}\t{result.t}\t{float(result.d)!r}\n")
