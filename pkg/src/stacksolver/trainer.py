"""Double deep-Q learning with experience replay, masked epsilon-greedy
exploration, target-network blending, schedules, and greedy evaluation.

The training loop is generic over a small task protocol (reset/step over
observation vectors and validity masks) so the same learner drives both the
symbolic stack-calculator environment and plain test MDPs.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import environment as env_mod
from .encoder import EncoderConfig, encode_state
from .environment import EnvConfig, EnvState, Trace, action_table
from .neural import NetworkParams, backward_and_step, blend, forward, init_network


class TrainingDiverged(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Schedules
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EpsSchedule:
    kind: str  # "exp" | "adaptive"
    eps_i: float
    eps_f: float
    t_eps: float = 0.0  # decay time, exp only
    alpha: float = 1.0  # exponent, adaptive only


@dataclass(frozen=True)
class LrSchedule:
    kind: str  # "fixed" | "adaptive"
    eta: float = 0.0  # fixed only
    eta_i: float = 0.0
    eta_f: float = 0.0
    alpha: float = 1.0


def epsilon_schedule(spec: EpsSchedule, tau: int = 0, s: float = 0.0) -> float:
    """Greediness: exponential decay in training time tau, or adaptive in the
    success estimate s."""
    if spec.kind == "exp":
        return (spec.eps_i - spec.eps_f) * np.exp(-tau / spec.t_eps) + spec.eps_f
    if spec.kind == "adaptive":
        return (spec.eps_i - spec.eps_f) * (1.0 - s) ** spec.alpha + spec.eps_f
    raise ValueError(f"unknown epsilon schedule {spec.kind!r}")


def lr_schedule(spec: LrSchedule, s: float = 0.0) -> float:
    if spec.kind == "fixed":
        return spec.eta
    if spec.kind == "adaptive":
        return (spec.eta_i - spec.eta_f) * (1.0 - s) ** spec.alpha + spec.eta_f
    raise ValueError(f"unknown learning-rate schedule {spec.kind!r}")


# ---------------------------------------------------------------------------
# Replay memory and action selection
# ---------------------------------------------------------------------------

@dataclass
class Transition:
    obs: np.ndarray  # flattened state tensor
    action: int
    reward: float
    obs_next: np.ndarray | None  # None marks a terminal transition
    mask_next: np.ndarray | None


class ReplayMemory:
    """Bounded ring buffer with uniform sampling; oldest entries overwritten
    first."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self.buffer: list = []
        self.insert_at = 0

    def __len__(self):
        return len(self.buffer)

    def push(self, t: Transition):
        if len(self.buffer) < self.capacity:
            self.buffer.append(t)
        else:
            self.buffer[self.insert_at] = t
            self.insert_at = (self.insert_at + 1) % self.capacity

    def sample(self, batch_size: int, rng) -> list:
        idx = rng.integers(0, len(self.buffer), size=batch_size)
        return [self.buffer[i] for i in idx]


def select_action(q: np.ndarray, mask: np.ndarray, eps: float, rng=None) -> int:
    """Masked epsilon-greedy: argmax over valid entries (ties to the lowest
    index) with probability 1 - eps, else uniform over valid entries."""
    valid = np.flatnonzero(mask)
    if valid.size == 0:
        raise ValueError("no valid actions")
    if eps > 0.0 and rng.random() < eps:
        return int(valid[rng.integers(0, valid.size)])
    return int(valid[np.argmax(q[valid])])


def bellman_target(t: Transition, online: NetworkParams, target: NetworkParams,
                   gamma: float) -> float:
    """Double-DQN target: r for terminals, else r + gamma * Q_target(s', a')
    with a' the masked online argmax."""
    if t.obs_next is None:
        return t.reward
    q_online = forward(online, t.obs_next)
    valid = np.flatnonzero(t.mask_next)
    a_next = int(valid[np.argmax(q_online[valid])])
    q_target = forward(target, t.obs_next)
    return t.reward + gamma * float(q_target[a_next])


def _batch_targets(batch, online, target, gamma):
    targets = np.empty(len(batch))
    live = [i for i, t in enumerate(batch) if t.obs_next is not None]
    for i, t in enumerate(batch):
        targets[i] = t.reward
    if live:
        nxt = np.stack([batch[i].obs_next for i in live])
        q_online = forward(online, nxt)
        q_target = forward(target, nxt)
        for row, i in enumerate(live):
            valid = np.flatnonzero(batch[i].mask_next)
            a_next = int(valid[np.argmax(q_online[row][valid])])
            targets[i] += gamma * float(q_target[row, a_next])
    return targets


# ---------------------------------------------------------------------------
# Config and learner
# ---------------------------------------------------------------------------

@dataclass
class TrainConfig:
    hidden: tuple  # hidden-layer widths
    gamma: float = 0.9
    replay_capacity: int = 500_000  # M
    batch_size: int = 128  # B
    explore_steps: int = 4  # p, per parameter update
    target_period: int = 100  # tau_hat
    target_blend: float = 1.0  # eps_hat
    momentum: float = 0.0  # mu
    eps: EpsSchedule = field(default_factory=lambda: EpsSchedule("exp", 1.0, 0.1, 2.5e6))
    lr: LrSchedule = field(default_factory=lambda: LrSchedule("fixed", 0.05))
    window: int = 100  # success-window length for adaptive schedules
    epochs: int = 10_000  # parameter-update budget
    eval_every: int = 1_000
    checkpoint_every: int = 10_000
    seed: int = 0


class DqnLearner:
    """Owns online/target parameters, replay, counters and schedule state."""

    def __init__(self, input_dim: int, output_dim: int, cfg: TrainConfig, rng):
        sizes = [input_dim, *cfg.hidden, output_dim]
        self.cfg = cfg
        self.online = init_network(sizes, rng)
        self.target = self.online.copy()
        self.replay = ReplayMemory(cfg.replay_capacity)
        self.tau = 0  # parameter updates so far
        self.episodes = 0
        self.window = deque(maxlen=cfg.window)
        self.last_loss = float("nan")

    @property
    def success_estimate(self) -> float:
        # stays 0 until a full window of episodes has completed
        if len(self.window) < self.cfg.window:
            return 0.0
        return sum(self.window) / len(self.window)

    def current_eps(self) -> float:
        return epsilon_schedule(self.cfg.eps, tau=self.tau, s=self.success_estimate)

    def current_eta(self) -> float:
        return lr_schedule(self.cfg.lr, s=self.success_estimate)

    def act(self, obs, mask, rng, eps=None) -> int:
        eps = self.current_eps() if eps is None else eps
        if eps > 0.0 and rng.random() < eps:
            valid = np.flatnonzero(mask)
            return int(valid[rng.integers(0, valid.size)])
        return select_action(forward(self.online, obs), mask, 0.0)

    def finish_episode(self, success: bool):
        self.episodes += 1
        self.window.append(1.0 if success else 0.0)

    def update(self, rng) -> float | None:
        """One epoch: sample a batch and take a gradient step (no-op until the
        replay holds a full batch)."""
        if len(self.replay) < self.cfg.batch_size:
            return None
        batch = self.replay.sample(self.cfg.batch_size, rng)
        targets = _batch_targets(batch, self.online, self.target, self.cfg.gamma)
        inputs = np.stack([t.obs for t in batch])
        actions = np.array([t.action for t in batch], dtype=np.intp)
        try:
            loss = backward_and_step(self.online, inputs, actions, targets,
                                     self.current_eta(), self.cfg.momentum)
        except FloatingPointError as exc:
            raise TrainingDiverged(
                f"divergence at epoch {self.tau}: {exc}") from exc
        self.tau += 1
        self.last_loss = loss
        if self.tau % self.cfg.target_period == 0:
            blend(self.target, self.online, self.cfg.target_blend)
        return loss


# ---------------------------------------------------------------------------
# Task protocol and the solver-environment adapter
# ---------------------------------------------------------------------------

@dataclass
class StepResult:
    obs: np.ndarray | None
    mask: np.ndarray | None
    reward: float
    done: bool
    success: bool


class SolverTask:
    """Adapts the symbolic environment to the trainer's observation protocol.

    ``task_source(rng) -> Equation`` supplies fresh problems.  Episodes that
    terminate at reset are reported through ``reset`` outcomes so the trainer
    can count them.
    """

    def __init__(self, env_cfg: EnvConfig, task_source):
        self.env_cfg = env_cfg
        self.enc = env_cfg.encoder
        self.task_source = task_source
        self.state: EnvState | None = None

    @property
    def n_actions(self):
        return self.env_cfg.n_actions

    @property
    def obs_dim(self):
        return self.enc.input_dim

    def _observe(self):
        tensor = encode_state(self.state, self.enc)
        assert tensor is not None, "live states are representable by construction"
        return tensor.reshape(-1), env_mod.valid_actions(self.state, self.env_cfg)

    def reset(self, rng):
        """Returns (obs, mask, None) for a live state or (None, None, outcome)
        when the episode ended at reset."""
        eq = self.task_source(rng)
        self.state = env_mod.reset(eq, self.env_cfg, rng)
        if self.state.terminal is not None:
            return None, None, self.state.terminal
        obs, mask = self._observe()
        return obs, mask, None

    def step(self, action: int, rng) -> StepResult:
        self.state, outcome = env_mod.step(self.state, action, self.env_cfg, rng)
        if outcome.terminal is not None:
            success = outcome.terminal in env_mod.SUCCESS_TERMINALS
            return StepResult(None, None, outcome.reward, True, success)
        obs, mask = self._observe()
        return StepResult(obs, mask, outcome.reward, False, False)


# ---------------------------------------------------------------------------
# Training loop
# ---------------------------------------------------------------------------

def _fresh_episode(task, learner, rng):
    while True:
        obs, mask, outcome = task.reset(rng)
        if outcome is None:
            return obs, mask
        learner.finish_episode(outcome in env_mod.SUCCESS_TERMINALS)


def train(task, cfg: TrainConfig, *, evaluator=None, metrics_path=None,
          checkpoint_fn=None, stop_fn=None, pad_actions: int = 0):
    """Run the explore/update loop until the epoch budget is exhausted.

    evaluator(learner) -> dict of extra metric columns, called every
    ``eval_every`` epochs; checkpoint_fn(learner) persists parameters;
    stop_fn(learner, metrics_row) -> bool allows early termination.
    Returns the learner.
    """
    rng = np.random.default_rng(cfg.seed)
    learner = DqnLearner(task.obs_dim, task.n_actions + pad_actions, cfg, rng)
    metrics = _MetricsLog(metrics_path)
    obs, mask = _fresh_episode(task, learner, rng)
    mask = _pad_mask(mask, pad_actions)

    while learner.tau < cfg.epochs:
        for _ in range(cfg.explore_steps):
            a = learner.act(obs, mask, rng)
            res = task.step(a, rng)
            nxt_mask = _pad_mask(res.mask, pad_actions)
            learner.replay.push(Transition(obs, a, res.reward, res.obs, nxt_mask))
            if res.done:
                learner.finish_episode(res.success)
                obs, mask = _fresh_episode(task, learner, rng)
                mask = _pad_mask(mask, pad_actions)
            else:
                obs, mask = res.obs, nxt_mask
        if learner.update(rng) is None:
            continue
        if checkpoint_fn and learner.tau % cfg.checkpoint_every == 0:
            checkpoint_fn(learner)
        if learner.tau % cfg.eval_every == 0 or learner.tau >= cfg.epochs:
            row = _metrics_row(learner)
            if evaluator:
                row.update(evaluator(learner))
            metrics.write(row)
            if stop_fn and stop_fn(learner, row):
                break
    if checkpoint_fn:
        checkpoint_fn(learner)
    metrics.close()
    return learner


def _pad_mask(mask, pad_actions):
    """Presets can list more network outputs than real actions (the padded
    entries are never valid)."""
    if mask is None or pad_actions == 0:
        return mask
    return np.concatenate([mask, np.zeros(pad_actions, dtype=bool)])


def _metrics_row(learner):
    return {
        "epoch": learner.tau,
        "episodes": learner.episodes,
        "loss": learner.last_loss,
        "eps": learner.current_eps(),
        "eta": learner.current_eta(),
        "window_success": learner.success_estimate,
    }


class _MetricsLog:
    """Append-only space-separated metrics records with a header line."""

    def __init__(self, path):
        self.path = path
        self.fh = None
        self.columns = None

    def write(self, row: dict):
        if self.path is None:
            return
        if self.fh is None:
            self.columns = list(row)
            self.fh = open(self.path, "w", encoding="utf-8")
            self.fh.write("# " + " ".join(self.columns) + "\n")
        self.fh.write(" ".join(_fmt(row.get(c)) for c in self.columns) + "\n")
        self.fh.flush()

    def close(self):
        if self.fh:
            self.fh.close()


def _fmt(v):
    if v is None:
        return "nan"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


# ---------------------------------------------------------------------------
# Greedy evaluation
# ---------------------------------------------------------------------------

@dataclass
class EpisodeResult:
    outcome: str
    steps: int
    total_reward: float
    trace: Trace | None = None
    solution: str | None = None


def run_episode(eq, env_cfg: EnvConfig, policy, rng, max_steps=None,
                record_trace=False, pad_actions: int = 0) -> EpisodeResult:
    """Drive one episode with ``policy(obs, mask, state) -> action index``."""
    enc = env_cfg.encoder
    max_steps = env_cfg.t_max if max_steps is None else max_steps
    state = env_mod.reset(eq, env_cfg, rng)
    trace = Trace() if record_trace else None
    if record_trace:
        trace.append_state(0, "reset", state, 0.0)
    total = 0.0
    steps = 0
    acts = action_table(env_cfg)
    while state.terminal is None and steps < max_steps:
        tensor = encode_state(state, enc)
        obs = tensor.reshape(-1)
        mask = _pad_mask(env_mod.valid_actions(state, env_cfg), pad_actions)
        a = policy(obs, mask, state)
        state, out = env_mod.step(state, a, env_cfg, rng)
        total += out.reward
        steps += 1
        if record_trace:
            trace.append_state(steps, acts[a].name(), state, out.reward)
    outcome = state.terminal or "unsolved"
    solution = None
    if state.terminal == env_mod.SOLVED:
        from .units import render_infix

        solution = render_infix(state.solution)
    return EpisodeResult(outcome, steps, total, trace, solution)


def greedy_policy(params: NetworkParams):
    def policy(obs, mask, _state):
        return select_action(forward(params, obs), mask, 0.0)

    return policy


@dataclass
class EvalResult:
    success_rate: float
    avg_steps: float | None  # None unless success rate >= 2%
    outcomes: list = field(default_factory=list)  # (index, outcome, steps)


def _eval_chunk(params, equations, env_cfg, base_seed, pad_actions, indices):
    policy = greedy_policy(params)
    out = []
    for i in indices:
        rng = np.random.default_rng(np.random.SeedSequence((base_seed, i)))
        res = run_episode(equations[i], env_cfg, policy, rng, pad_actions=pad_actions)
        out.append((i, res.outcome, res.steps))
    return out


def evaluate(params: NetworkParams, equations, env_cfg: EnvConfig, *,
             base_seed: int = 0, pad_actions: int = 0, workers: int = 1) -> EvalResult:
    """Greedy masked policy over a fixed dataset.  Per-equation rng streams
    make the result independent of evaluation order, so parallel workers on a
    read-only parameter snapshot merge deterministically by dataset index."""
    indices = list(range(len(equations)))
    if workers <= 1 or len(equations) < 2:
        outcomes = _eval_chunk(params, equations, env_cfg, base_seed, pad_actions, indices)
    else:
        from concurrent.futures import ProcessPoolExecutor

        chunks = [indices[k::workers] for k in range(workers)]
        outcomes = []
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futs = [pool.submit(_eval_chunk, params, equations, env_cfg,
                                base_seed, pad_actions, chunk)
                    for chunk in chunks if chunk]
            for f in futs:
                outcomes.extend(f.result())
        outcomes.sort(key=lambda t: t[0])
    return summarize_eval(outcomes)


def summarize_eval(outcomes) -> EvalResult:
    succ = [(i, o, s) for i, o, s in outcomes if o in env_mod.SUCCESS_TERMINALS]
    rate = len(succ) / len(outcomes) if outcomes else 0.0
    avg = None
    if rate >= 0.02 and succ:
        avg = sum(s for _, _, s in succ) / len(succ)
    return EvalResult(rate, avg, outcomes)
