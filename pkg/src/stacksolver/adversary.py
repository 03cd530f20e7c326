"""Adversarial task generation: the generator agent's environment and the
solver-generator co-training loop.

The generator starts from a known solution (``x = a`` or
``x = (a1 + b1*c)/(a2 + b2*c)``), transforms it with the ordinary calculator
actions (each costing a small step penalty) and submits the equation to the
solver.  It earns the fooling reward, minus the usual stack and assumption
penalties, when the solver's greedy policy fails to recover a solution.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from . import environment as env_mod
from .encoder import encode_state
from .environment import SUBMITTED, EnvConfig, EnvState, StepOutcome
from .expr import Add, C, Equation, Mul, Num, Number, Pow, X
from .neural import save_checkpoint
from .taskgen import SamplerConfig, sample_coeff
from .trainer import (
    DqnLearner,
    TrainConfig,
    Transition,
    _MetricsLog,
    _metrics_row,
    _pad_mask,
    greedy_policy,
    run_episode,
)
from .units import render_infix

FAMILIES = ("AR", "AS1")


@dataclass(frozen=True)
class GeneratorConfig:
    family: str = "AR"
    r_fool: float = 3.0
    p_step: float = 0.01  # per-step penalty before submission
    p0: float = 0.5  # AS1: probability of vanishing symbolic parts

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}")


_Q_SAMPLER = SamplerConfig(field="Q", kind="numeric")


def seed_solution(gen_cfg: GeneratorConfig, rng) -> Equation:
    """A solved-form equation for the generator to disguise."""
    if gen_cfg.family == "AR":
        return Equation(X, Num(sample_coeff(_Q_SAMPLER, rng)))
    # AS1: x = (a1 + b1*c) / (a2 + b2*c), denominator resampled while zero
    def affine():
        a = sample_coeff(_Q_SAMPLER, rng)
        b = Number(0) if rng.random() < gen_cfg.p0 else sample_coeff(_Q_SAMPLER, rng)
        return a, b
    a1, b1 = affine()
    while True:
        a2, b2 = affine()
        if not (a2.is_zero() and b2.is_zero()):
            break
    num = Add(Num(a1), Mul(Num(b1), C))
    den = Add(Num(a2), Mul(Num(b2), C))
    return Equation(X, Mul(num, Pow(den, Num(-1))))


def generator_reset(gen_cfg: GeneratorConfig, env_cfg: EnvConfig, rng) -> EnvState:
    state = env_mod.reset(seed_solution(gen_cfg, rng), env_cfg, rng)
    # a freshly seeded solution is solved by construction; the generator
    # episode starts live regardless
    if state.terminal in env_mod.SUCCESS_TERMINALS:
        from dataclasses import replace

        state = replace(state, terminal=None, solution=None)
    return state


def generator_step(state: EnvState, action_index: int, gen_cfg: GeneratorConfig,
                   env_cfg: EnvConfig, rng, solve_fn) -> tuple[EnvState, StepOutcome]:
    """Generator transition.  ``solve_fn(equation) -> bool`` reports whether
    the solver recovered a solution; called only on submit."""
    if action_index == env_cfg.n_actions:  # submit
        solved = solve_fn(state.equation)
        reward = (0.0 if solved else gen_cfg.r_fool) \
            - (state.n_st / env_cfg.stack_size) * env_cfg.p_st \
            - state.n_as * env_cfg.p_as
        from dataclasses import replace

        new = replace(state, steps_taken=state.steps_taken + 1, terminal=SUBMITTED)
        return new, StepOutcome(reward, SUBMITTED, SUBMITTED)
    new, out = env_mod.step(state, action_index, env_cfg, rng, goal_terminals=False)
    return new, StepOutcome(-gen_cfg.p_step, out.terminal, out.event)


def generator_mask(state: EnvState, env_cfg: EnvConfig) -> np.ndarray:
    return env_mod.valid_actions(state, env_cfg, with_submit=True)


class GeneratorLearner(DqnLearner):
    """Adaptive-schedule estimate: the minimum of the valid-equation rate and
    the solver failure rate over the trailing episode window."""

    def __init__(self, input_dim, output_dim, cfg, rng):
        super().__init__(input_dim, output_dim, cfg, rng)
        self.valid_window = deque(maxlen=cfg.window)
        self.fool_window = deque(maxlen=cfg.window)

    @property
    def success_estimate(self) -> float:
        if len(self.valid_window) < self.cfg.window:
            return 0.0
        valid = sum(self.valid_window) / len(self.valid_window)
        fooled = sum(self.fool_window) / len(self.fool_window)
        return min(valid, fooled)

    def finish_generator_episode(self, submitted: bool, fooled: bool):
        self.episodes += 1
        self.valid_window.append(1.0 if submitted else 0.0)
        self.fool_window.append(1.0 if fooled else 0.0)


@dataclass
class CoTrainSetup:
    env_cfg: EnvConfig
    train_cfg: TrainConfig
    pad_actions: int = 0  # extra network outputs beyond the action table


@dataclass
class EpisodeRecord:
    episode: int
    status: str  # submitted | bad | timeout | step_limit
    seed: str
    equation: str
    gen_steps: int
    solver_outcome: str  # solved | failed | -
    assumptions: list


def co_train(solver: CoTrainSetup, generator: CoTrainSetup,
             gen_cfg: GeneratorConfig, episodes: int, seed: int, *,
             evaluator=None, metrics_path=None, metrics_every: int = 500,
             out_dir=None, checkpoint_every: int = 10_000,
             task_log_path=None) -> tuple[DqnLearner, GeneratorLearner, list]:
    """Train solver and generator simultaneously for a number of generator
    episodes.  Returns both learners plus the per-episode task records."""
    rng = np.random.default_rng(seed)
    s_enc, g_enc = solver.env_cfg.encoder, generator.env_cfg.encoder
    s_learner = DqnLearner(
        s_enc.input_dim, solver.env_cfg.n_actions + solver.pad_actions,
        solver.train_cfg, rng)
    g_learner = GeneratorLearner(
        g_enc.input_dim, generator.env_cfg.n_actions + 1 + generator.pad_actions,
        generator.train_cfg, rng)
    metrics = _MetricsLog(metrics_path)
    records: list[EpisodeRecord] = []
    log_fh = open(task_log_path, "w", encoding="utf-8") if task_log_path else None
    if log_fh:
        log_fh.write("# episode\tstatus\tseed\tequation\tgen_steps\tsolver\tassumptions\n")

    s_steps = g_steps = 0
    last_solve = {"solved": False}

    def solve_greedily(eq: Equation) -> bool:
        eval_rng = np.random.default_rng(np.random.SeedSequence((seed, rng.integers(2**62))))
        res = run_episode(eq, solver.env_cfg, greedy_policy(s_learner.online),
                          eval_rng, pad_actions=solver.pad_actions)
        last_solve["solved"] = res.outcome == env_mod.SOLVED
        return last_solve["solved"]

    for episode in range(episodes):
        # -- generator episode -------------------------------------------
        state = generator_reset(gen_cfg, generator.env_cfg, rng)
        seed_str = str(state.equation)
        submitted_eq = None
        solver_solved = False
        record_status = state.terminal
        if state.terminal is None:
            obs = encode_state(state, g_enc).reshape(-1)
            mask = _pad_mask(generator_mask(state, generator.env_cfg),
                             generator.pad_actions)
        while state.terminal is None:
            a = g_learner.act(obs, mask, rng)
            if a == generator.env_cfg.n_actions:
                submitted_eq = state.equation
            state, out = generator_step(state, a, gen_cfg, generator.env_cfg,
                                        rng, solve_greedily)
            if out.terminal == SUBMITTED:
                solver_solved = last_solve["solved"]
            if out.terminal is not None:
                nxt_obs, nxt_mask = None, None
                record_status = out.terminal
            else:
                nxt_obs = encode_state(state, g_enc).reshape(-1)
                nxt_mask = _pad_mask(generator_mask(state, generator.env_cfg),
                                     generator.pad_actions)
            g_learner.replay.push(Transition(obs, a, out.reward, nxt_obs, nxt_mask))
            g_steps += 1
            if g_steps % generator.train_cfg.explore_steps == 0:
                g_learner.update(rng)
            obs, mask = nxt_obs, nxt_mask

        submitted = submitted_eq is not None
        fooled = submitted and not solver_solved
        g_learner.finish_generator_episode(submitted, fooled)

        # -- solver training episode on the submitted task ----------------
        if submitted:
            s_steps = _solver_training_episode(
                s_learner, solver, submitted_eq, rng, s_steps)
        rec = EpisodeRecord(
            episode=episode,
            status=record_status or SUBMITTED,
            seed=seed_str,
            equation=str(submitted_eq) if submitted else "-",
            gen_steps=state.steps_taken,
            solver_outcome=("solved" if solver_solved else "failed") if submitted else "-",
            assumptions=[f"{render_infix(a)} != 0" for a in state.assumptions],
        )
        records.append(rec)
        if log_fh:
            log_fh.write("\t".join([
                str(rec.episode), rec.status, rec.seed, rec.equation,
                str(rec.gen_steps), rec.solver_outcome, " ; ".join(rec.assumptions),
            ]) + "\n")

        if metrics_path and (episode + 1) % metrics_every == 0:
            row = {"episode": episode + 1}
            for name, learner in (("solver", s_learner), ("generator", g_learner)):
                base = _metrics_row(learner)
                row.update({f"{name}_{k}": v for k, v in base.items()})
            if evaluator:
                row.update(evaluator(s_learner, g_learner))
            metrics.write(row)
        if out_dir and (episode + 1) % checkpoint_every == 0:
            _save_pair(out_dir, s_learner, g_learner, seed)

    if out_dir:
        _save_pair(out_dir, s_learner, g_learner, seed)
    metrics.close()
    if log_fh:
        log_fh.close()
    return s_learner, g_learner, records


def _solver_training_episode(learner, setup: CoTrainSetup, eq: Equation, rng,
                             step_counter: int) -> int:
    """Epsilon-greedy solver episode feeding its replay; updates keep the
    one-update-per-p-steps cadence across episodes."""
    state = env_mod.reset(eq, setup.env_cfg, rng)
    if state.terminal is not None:
        learner.finish_episode(state.terminal in env_mod.SUCCESS_TERMINALS)
        return step_counter
    enc = setup.env_cfg.encoder
    tensor = encode_state(state, enc)
    obs = tensor.reshape(-1)
    mask = _pad_mask(env_mod.valid_actions(state, setup.env_cfg), setup.pad_actions)
    while True:
        a = learner.act(obs, mask, rng)
        state, out = env_mod.step(state, a, setup.env_cfg, rng)
        done = out.terminal is not None
        if done:
            nxt_obs, nxt_mask = None, None
        else:
            nxt_obs = encode_state(state, enc).reshape(-1)
            nxt_mask = _pad_mask(env_mod.valid_actions(state, setup.env_cfg),
                                 setup.pad_actions)
        learner.replay.push(Transition(obs, a, out.reward, nxt_obs, nxt_mask))
        step_counter += 1
        if step_counter % learner.cfg.explore_steps == 0:
            learner.update(rng)
        if done:
            learner.finish_episode(out.terminal in env_mod.SUCCESS_TERMINALS)
            return step_counter
        obs, mask = nxt_obs, nxt_mask


def _save_pair(out_dir, s_learner, g_learner, seed):
    import os

    save_checkpoint(os.path.join(out_dir, "solver.ckpt"), s_learner.online,
                    seed, s_learner.tau)
    save_checkpoint(os.path.join(out_dir, "generator.ckpt"), g_learner.online,
                    seed, g_learner.tau)
