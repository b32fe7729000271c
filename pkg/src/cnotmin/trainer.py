"""Self-play training: episodes come from tree search against the
current network, land in a replay buffer as (state, visit distribution,
return target) triples, and gradient steps consume uniform samples.

Under a mixed schedule the run starts with the informed (Hamming) reward
and switches to the sparse one at a fixed fraction of the step budget;
buffer entries from before the switch are purged by default because
their value targets live on a different scale (a config flag relabels
them under the sparse reward instead).  Value targets are
clipped to [0, 1] when the value head is sigmoidal (informed-phase
returns can exceed 1 by the terminal bonus; the clip only saturates
states that are nearly solved anyway).
"""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass, field, replace

import numpy as np

from . import nnet
from .core import ParityMatrix, packed_to_bits
from .env import (
    INFORMED,
    MIXED,
    SPARSE,
    EpisodeConfig,
    RewardMode,
    reset,
    returns_to_go,
)
from .mcts import SearchConfig, Trajectory, play_episode

HOLDOUT_SEED_OFFSET = 900_000_000  # keeps eval instances off the training stream


@dataclass(frozen=True)
class TrainConfig:
    total_env_steps: int = 500_000
    reward_mode: RewardMode = RewardMode.mixed(0.5)
    buffer_capacity: int = 50_000
    batch_size: int = 256
    train_steps_per_env_step: float = 0.25
    eval_fraction: float = 0.02
    eval_instances: int = 100
    checkpoint_fraction: float = 0.10
    purge_buffer_at_switch: bool = True
    lr: float = 1e-3
    l2: float = 1e-4
    seed: int = 0

    def __post_init__(self) -> None:
        if self.buffer_capacity < self.batch_size:
            raise ValueError("buffer capacity must be >= batch size")
        if self.total_env_steps < 1:
            raise ValueError("total_env_steps must be >= 1")

    @property
    def switch_step(self) -> int | None:
        if self.reward_mode.kind != MIXED:
            return None
        return int(self.reward_mode.switch_fraction * self.total_env_steps)

    @staticmethod
    def paper_scale(n: int, constrained: bool) -> "TrainConfig":
        """The published budgets: 500k steps with a 50% switch for the
        unconstrained task, 750k*n with an 80% switch under a topology."""
        if constrained:
            return TrainConfig(
                total_env_steps=750_000 * n, reward_mode=RewardMode.mixed(0.8)
            )
        return TrainConfig(total_env_steps=500_000, reward_mode=RewardMode.mixed(0.5))


class ReplayBuffer:
    """Ring buffer of (state bits, visit distribution, return target).

    Each entry also remembers whether its episode solved and how many
    steps remained, so targets can be relabeled under the sparse reward
    when a mixed run keeps pre-switch data.
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._states: list[np.ndarray] = []
        self._policies: list[np.ndarray] = []
        self._returns: list[float] = []
        self._solved: list[bool] = []
        self._steps_to_end: list[int] = []
        self._cursor = 0

    def __len__(self) -> int:
        return len(self._states)

    def push(
        self,
        state_bits: np.ndarray,
        policy: np.ndarray,
        ret: float,
        solved: bool = False,
        steps_to_end: int = 0,
    ) -> None:
        if len(self._states) < self.capacity:
            self._states.append(state_bits)
            self._policies.append(policy)
            self._returns.append(ret)
            self._solved.append(solved)
            self._steps_to_end.append(steps_to_end)
        else:
            i = self._cursor
            self._states[i] = state_bits
            self._policies[i] = policy
            self._returns[i] = ret
            self._solved[i] = solved
            self._steps_to_end[i] = steps_to_end
            self._cursor = (i + 1) % self.capacity

    def sample(self, batch_size: int, rng: np.random.Generator) -> nnet.TrainBatch:
        idx = rng.integers(len(self._states), size=batch_size)
        return nnet.TrainBatch(
            states=np.stack([self._states[i] for i in idx]),
            target_policies=np.stack([self._policies[i] for i in idx]),
            target_values=np.array([self._returns[i] for i in idx]),
        )

    def relabel_sparse(self, discount: float) -> None:
        """Rewrite every return target as its sparse-reward equivalent."""
        for i in range(len(self._returns)):
            if self._solved[i]:
                self._returns[i] = discount ** self._steps_to_end[i]
            else:
                self._returns[i] = 0.0

    def clear(self) -> None:
        self._states.clear()
        self._policies.clear()
        self._returns.clear()
        self._solved.clear()
        self._steps_to_end.clear()
        self._cursor = 0


@dataclass
class MetricsRow:
    env_step: int
    episode_reward: float
    success_rate: float
    mean_length: float
    phase: str


@dataclass
class TrainMetrics:
    rows: list[MetricsRow] = field(default_factory=list)
    switch_step: int | None = None

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["env_step", "episode_reward", "success_rate", "mean_length", "phase"])
        for r in self.rows:
            writer.writerow(
                [r.env_step, f"{r.episode_reward:.6f}", f"{r.success_rate:.4f}",
                 f"{r.mean_length:.4f}", r.phase]
            )
        return buf.getvalue()


@dataclass
class EvalRecord:
    best_lengths: list[int | None]
    success_rate: float
    mean_length: float
    shots: int


def holdout_instances(env_cfg: EpisodeConfig, count: int, seed: int) -> list[ParityMatrix]:
    return [reset(env_cfg, HOLDOUT_SEED_OFFSET + seed * 1_000_003 + i) for i in range(count)]


def evaluate(
    params,
    net_cfg: nnet.NetConfig,
    env_cfg: EpisodeConfig,
    search_cfg: SearchConfig,
    instances: list[ParityMatrix],
    shots: int = 1,
) -> EvalRecord:
    """Best-of-``shots`` greedy evaluation per instance.

    Shot 0 plays the most-visited action deterministically; further
    shots sample from the visit distribution with per-shot seeds
    (instance_id * 10000 + shot), so the best-of-N result can only
    improve on the 1-shot one.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    cfg = env_cfg.resolved(SPARSE) if env_cfg.reward_mode.kind == MIXED else env_cfg
    net = (params, net_cfg) if params is not None else None
    best: list[int | None] = []
    for idx, m in enumerate(instances):
        if m.is_identity():
            best.append(0)
            continue
        found: int | None = None
        for shot in range(shots):
            mode = "greedy" if shot == 0 else "sample"
            traj = play_episode(
                m, net, cfg, search_cfg, mode=mode, seed=idx * 10_000 + shot
            )
            if traj.solved and (found is None or len(traj) < found):
                found = len(traj)
        best.append(found)
    solved = [l for l in best if l is not None]
    return EvalRecord(
        best_lengths=best,
        success_rate=len(solved) / len(best) if best else 0.0,
        mean_length=float(np.mean(solved)) if solved else float("nan"),
        shots=shots,
    )


def _push_trajectory(
    buffer: ReplayBuffer,
    traj: Trajectory,
    n: int,
    discount: float,
    clip_values: bool,
) -> None:
    targets = returns_to_go(traj.rewards, discount)
    total = len(traj)
    for t, (state, dist, ret) in enumerate(zip(traj.states, traj.visit_dists, targets)):
        if clip_values:
            ret = min(max(ret, 0.0), 1.0)
        buffer.push(packed_to_bits(state, n), dist, ret, traj.solved, total - 1 - t)


def run_training(
    train_cfg: TrainConfig,
    env_cfg: EpisodeConfig,
    net_cfg: nnet.NetConfig | None = None,
    search_cfg: SearchConfig | None = None,
    out_dir: str | None = None,
    progress=None,
    initial_params=None,
):
    """Full self-play training loop; returns (params, net_cfg, metrics).

    Writes metrics.csv, checkpoints, and a manifest under ``out_dir``
    when given.  Checkpoints land every 10% of the budget and at the
    reward switch.  ``initial_params`` warm-starts from an existing
    parameter set instead of a fresh init.
    """
    search_cfg = search_cfg or SearchConfig()
    mode_kind = train_cfg.reward_mode.kind
    if net_cfg is None:
        value_act = "linear" if mode_kind == INFORMED else "sigmoid"
        net_cfg = nnet.NetConfig(
            input_dim=env_cfg.n * env_cfg.n,
            action_dim=len(env_cfg.action_gates()),
            value_activation=value_act,
        )
    clip_values = net_cfg.value_activation == "sigmoid"
    params = initial_params if initial_params is not None else nnet.init_params(
        net_cfg, seed=train_cfg.seed
    )
    opt_state = nnet.AdamState()
    buffer = ReplayBuffer(train_cfg.buffer_capacity)
    rng = np.random.default_rng(train_cfg.seed + 1)

    env_cfg = replace(env_cfg, reward_mode=train_cfg.reward_mode)
    holdout = holdout_instances(env_cfg, train_cfg.eval_instances, train_cfg.seed)
    metrics = TrainMetrics(switch_step=train_cfg.switch_step)
    switch_step = train_cfg.switch_step

    eval_every = max(1, int(train_cfg.eval_fraction * train_cfg.total_env_steps))
    ckpt_every = max(1, int(train_cfg.checkpoint_fraction * train_cfg.total_env_steps))
    env_step = 0
    episode_idx = 0
    pending_train = 0.0
    switched = False
    recent_rewards: list[float] = []
    next_eval = eval_every
    next_ckpt = ckpt_every

    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        manifest = {
            "train": {
                "total_env_steps": train_cfg.total_env_steps,
                "reward_mode": train_cfg.reward_mode.kind,
                "switch_fraction": train_cfg.reward_mode.switch_fraction,
                "buffer_capacity": train_cfg.buffer_capacity,
                "batch_size": train_cfg.batch_size,
                "train_steps_per_env_step": train_cfg.train_steps_per_env_step,
                "eval_fraction": train_cfg.eval_fraction,
                "eval_instances": train_cfg.eval_instances,
                "checkpoint_fraction": train_cfg.checkpoint_fraction,
                "purge_buffer_at_switch": train_cfg.purge_buffer_at_switch,
                "lr": train_cfg.lr,
                "l2": train_cfg.l2,
                "seed": train_cfg.seed,
            },
            "env": {
                "n": env_cfg.n,
                "topology": env_cfg.topology.name if env_cfg.topology else None,
                "max_steps": env_cfg.step_cap,
                "discount": env_cfg.discount,
                "instance_moves": env_cfg.instance_moves,
            },
            "net": net_cfg.to_dict(),
            "search": {
                "num_simulations": search_cfg.num_simulations,
                "exploration_c": search_cfg.exploration_c,
                "root_noise_fraction": search_cfg.root_noise_fraction,
                "root_noise_alpha": search_cfg.root_noise_alpha,
            },
            "version": 1,
        }
        with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)

    def current_phase() -> str:
        if mode_kind == MIXED:
            return INFORMED if env_step < switch_step else SPARSE
        return mode_kind

    def run_eval() -> None:
        phase = current_phase()
        record = evaluate(params, net_cfg, env_cfg, search_cfg, holdout, shots=1)
        reward = float(np.mean(recent_rewards)) if recent_rewards else 0.0
        metrics.rows.append(
            MetricsRow(env_step, reward, record.success_rate, record.mean_length, phase)
        )
        recent_rewards.clear()
        if progress:
            progress(
                f"step {env_step}/{train_cfg.total_env_steps} [{phase}] "
                f"success={record.success_rate:.2f} mean_len={record.mean_length:.2f}"
            )

    def save_ckpt(tag: str) -> None:
        if out_dir:
            nnet.save_checkpoint(os.path.join(out_dir, f"checkpoint_{tag}.ckpt"), params, net_cfg)

    while env_step < train_cfg.total_env_steps:
        phase = current_phase()
        if mode_kind == MIXED and not switched and env_step >= switch_step:
            switched = True
            if train_cfg.purge_buffer_at_switch:
                buffer.clear()
            else:
                buffer.relabel_sparse(env_cfg.discount)
            save_ckpt("switch")
        episode_cfg = env_cfg.resolved(phase) if mode_kind == MIXED else env_cfg
        start = reset(episode_cfg, train_cfg.seed * 1_000_003 + episode_idx)
        traj = play_episode(
            start,
            (params, net_cfg),
            episode_cfg,
            search_cfg,
            mode="train",
            seed=train_cfg.seed * 2_000_003 + episode_idx,
        )
        episode_idx += 1
        env_step += len(traj)
        recent_rewards.append(sum(traj.rewards))
        _push_trajectory(buffer, traj, env_cfg.n, env_cfg.discount, clip_values)

        pending_train += len(traj) * train_cfg.train_steps_per_env_step
        while pending_train >= 1.0 and len(buffer) >= train_cfg.batch_size:
            batch = buffer.sample(train_cfg.batch_size, rng)
            params, opt_state, loss_value = nnet.train_step(
                params, net_cfg, batch, opt_state, lr=train_cfg.lr, l2=train_cfg.l2
            )
            pending_train -= 1.0

        if env_step >= next_eval:
            run_eval()
            next_eval += eval_every
        if env_step >= next_ckpt:
            save_ckpt(f"{env_step}")
            next_ckpt += ckpt_every

    if not metrics.rows or metrics.rows[-1].env_step < env_step:
        run_eval()
    save_ckpt("final")
    if out_dir:
        with open(os.path.join(out_dir, "metrics.csv"), "w") as fh:
            fh.write(metrics.to_csv())
    return params, net_cfg, metrics


@dataclass
class SwitchReport:
    pre_switch_mean: float
    final_mean: float
    reduction_pct: float
    plateau_window: int
    flagged: bool


def reward_switch_report(metrics: TrainMetrics, window: int = 5) -> SwitchReport:
    """Percent drop in mean synthesis length across the reward switch."""
    if metrics.switch_step is None:
        pre = [r.mean_length for r in metrics.rows if np.isfinite(r.mean_length)]
        mean = float(np.mean(pre[-window:])) if pre else float("nan")
        return SwitchReport(mean, mean, 0.0, window, flagged=not pre)
    pre = [
        r.mean_length
        for r in metrics.rows
        if r.env_step <= metrics.switch_step and np.isfinite(r.mean_length)
    ]
    post = [
        r.mean_length
        for r in metrics.rows
        if r.env_step > metrics.switch_step and np.isfinite(r.mean_length)
    ]
    flagged = len(pre) < window or not post
    pre_mean = float(np.mean(pre[-window:])) if pre else float("nan")
    final_mean = float(np.mean(post[-window:])) if post else float("nan")
    if np.isfinite(pre_mean) and np.isfinite(final_mean) and pre_mean > 0:
        reduction = 100.0 * (pre_mean - final_mean) / pre_mean
    else:
        reduction = float("nan")
    return SwitchReport(pre_mean, final_mean, reduction, window, flagged)
