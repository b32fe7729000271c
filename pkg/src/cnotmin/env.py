"""The synthesis environment: states are parity matrices, actions are
legal CNOTs, and an episode ends on reaching the identity or a step cap.

Two reward shapes are provided.  The sparse reward pays 1 exactly on
reaching the identity; with a discount below 1 its return strictly
prefers shorter solutions.  The informed reward pays the per-step drop
in Hamming distance to the identity, normalized by n^2, plus a terminal
bonus of 1; over a solved episode the per-step terms telescope to
hamming(M0)/n^2.  "Mixed" is a schedule, not a third formula: the
trainer runs an informed phase and then a sparse phase.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .core import (
    CnotGate,
    ParityMatrix,
    pack_rows,
    packed_apply,
    packed_hamming,
    packed_identity,
    random_instance,
    unpack_rows,
)
from .topology import Topology, actions, all_to_all

SPARSE = "sparse"
INFORMED = "informed"
MIXED = "mixed"


@dataclass(frozen=True)
class RewardMode:
    kind: str
    switch_fraction: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in (SPARSE, INFORMED, MIXED):
            raise ValueError(f"unknown reward mode {self.kind!r}")
        if self.kind == MIXED:
            if self.switch_fraction is None or not 0.0 < self.switch_fraction < 1.0:
                raise ValueError("mixed reward needs switch_fraction in (0, 1)")
        elif self.switch_fraction is not None:
            raise ValueError(f"{self.kind} reward takes no switch_fraction")

    @staticmethod
    def sparse() -> "RewardMode":
        return RewardMode(SPARSE)

    @staticmethod
    def informed() -> "RewardMode":
        return RewardMode(INFORMED)

    @staticmethod
    def mixed(switch_fraction: float = 0.5) -> "RewardMode":
        return RewardMode(MIXED, switch_fraction)


@dataclass(frozen=True)
class EpisodeConfig:
    n: int
    topology: Topology | None = None
    reward_mode: RewardMode = RewardMode.sparse()
    max_steps: int | None = None
    discount: float = 0.99
    # The published per-topology averages are quoted for instances
    # scrambled with unrestricted moves, so that is the default even
    # when play is topology-constrained.
    instance_moves: str = "all_to_all"

    def __post_init__(self) -> None:
        if self.max_steps is not None and self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if not 0.0 < self.discount <= 1.0:
            raise ValueError("discount must be in (0, 1]")
        if self.instance_moves not in ("all_to_all", "topology"):
            raise ValueError(f"unknown instance_moves {self.instance_moves!r}")
        if self.topology is not None and self.topology.n != self.n:
            raise ValueError("topology size disagrees with n")

    @property
    def step_cap(self) -> int:
        return self.max_steps if self.max_steps is not None else 4 * self.n * self.n

    def action_gates(self) -> tuple[CnotGate, ...]:
        t = self.topology if self.topology is not None else all_to_all(self.n)
        return actions(t)

    def resolved(self, phase: str) -> "EpisodeConfig":
        """Pin a mixed schedule to one phase for episode generation."""
        if phase not in (SPARSE, INFORMED):
            raise ValueError(f"phase must be sparse or informed, got {phase!r}")
        return replace(self, reward_mode=RewardMode(phase))


@dataclass(frozen=True)
class StepOutcome:
    next_state: ParityMatrix
    reward: float
    done: bool
    done_reason: str | None = None  # "solved" | "truncated" | None


def reset(cfg: EpisodeConfig, seed: int) -> ParityMatrix:
    """Fresh scrambled instance; resamples the (measure-zero) identity."""
    gen_topology = cfg.topology if cfg.instance_moves == "topology" else None
    s = seed
    while True:
        m = random_instance(cfg.n, gen_topology, s)
        if not m.is_identity():
            return m
        s = (s * 6364136223846793005 + 1442695040888963407) % (1 << 63)


def step(
    state: ParityMatrix, action_id: int, step_index: int, cfg: EpisodeConfig
) -> StepOutcome:
    """Apply one action and report the reward under the resolved mode."""
    mode = cfg.reward_mode.kind
    if mode == MIXED:
        raise ValueError("resolve a mixed schedule to a phase before stepping")
    gates = cfg.action_gates()
    if not 0 <= action_id < len(gates):
        raise ValueError(f"action id {action_id} out of range [0, {len(gates)})")
    if state.is_identity():
        raise ValueError("episode already finished (state is the identity)")
    g = gates[action_id]
    packed = pack_rows(state)
    nxt, reward, solved = step_packed(packed, cfg.n, g.control, g.target, mode)
    done = solved or (step_index + 1 >= cfg.step_cap)
    reason = "solved" if solved else ("truncated" if done else None)
    return StepOutcome(unpack_rows(nxt, cfg.n), reward, done, reason)


def step_packed(packed: int, n: int, control: int, target: int, mode: str):
    """Fast path shared with the tree search; returns
    (next_packed, reward, solved)."""
    nxt = packed_apply(packed, n, control, target)
    solved = nxt == packed_identity(n)
    if mode == SPARSE:
        reward = 1.0 if solved else 0.0
    else:
        drop = packed_hamming(packed, n) - packed_hamming(nxt, n)
        reward = drop / float(n * n)
        if solved:
            reward += 1.0
    return nxt, reward, solved


def episode_return(rewards, discount: float) -> float:
    """Discounted return sum_t discount^t * r_t."""
    total = 0.0
    factor = 1.0
    for r in rewards:
        total += factor * float(r)
        factor *= discount
    return total


def returns_to_go(rewards, discount: float) -> list[float]:
    """Per-step discounted suffix returns (the value targets)."""
    out = [0.0] * len(rewards)
    acc = 0.0
    for t in range(len(rewards) - 1, -1, -1):
        acc = float(rewards[t]) + discount * acc
        out[t] = acc
    return out
