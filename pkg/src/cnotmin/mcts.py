"""Monte-Carlo tree search over parity-matrix states.

Each decision runs a fixed number of simulations.  A simulation walks
down the tree by the prior-weighted upper-confidence rule
``Q + c * P * sqrt(sum_b N) / (1 + N)``, creates the child it falls off
at, evaluates it with the network (terminal states short-circuit: their
continuation value is zero, the solve bonus lives on the incoming
edge), and backs the discounted return up the walked path.  Visit
counts at the root then give the improved action distribution.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Circuit, CnotGate, ParityMatrix, pack_rows, packed_identity
from .env import MIXED, EpisodeConfig, step_packed
from . import nnet


@dataclass(frozen=True)
class SearchConfig:
    num_simulations: int = 128
    exploration_c: float = 1.25
    root_noise_fraction: float = 0.25
    root_noise_alpha: float = 0.3
    temperature_moves: int | None = None  # default: first n moves sample at T=1
    rollout_depth: int = 0  # > 0 replaces the network value with a bounded rollout

    def __post_init__(self) -> None:
        if self.num_simulations < 1:
            raise ValueError("num_simulations must be >= 1")
        if self.exploration_c <= 0:
            raise ValueError("exploration constant must be > 0")


class _Node:
    __slots__ = (
        "packed",
        "terminal",
        "expanded",
        "priors",
        "visit_counts",
        "value_sums",
        "edge_rewards",
        "child_packed",
        "child_terminal",
        "children",
    )

    def __init__(self, packed: int, terminal: bool):
        self.packed = packed
        self.terminal = terminal
        self.expanded = False
        self.priors = None
        self.visit_counts = None
        self.value_sums = None
        self.edge_rewards = None
        self.child_packed = None
        self.child_terminal = None
        self.children = None


def _evaluate(node: _Node, net, n: int, num_actions: int):
    """Network (or uniform) priors over legal actions plus a value."""
    if net is None:
        return np.full(num_actions, 1.0 / num_actions), 0.0
    params, config = net
    policy, value = nnet.forward(params, config, _bits(node.packed, n))
    priors = np.asarray(policy[:num_actions], dtype=np.float64)
    total = priors.sum()
    priors = priors / total if total > 0 else np.full(num_actions, 1.0 / num_actions)
    return priors, float(value)


def _bits(packed: int, n: int) -> np.ndarray:
    return np.array([(packed >> k) & 1 for k in range(n * n)], dtype=np.float64)


def _expand(node: _Node, net, gates, cfg: EpisodeConfig, mode: str):
    n = cfg.n
    num = len(gates)
    priors, value = _evaluate(node, net, n, num)
    node.priors = priors
    node.visit_counts = np.zeros(num, dtype=np.int64)
    node.value_sums = np.zeros(num, dtype=np.float64)
    rewards = np.empty(num, dtype=np.float64)
    child_packed = []
    child_terminal = np.zeros(num, dtype=bool)
    for a, g in enumerate(gates):
        nxt, reward, solved = step_packed(node.packed, n, g.control, g.target, mode)
        child_packed.append(nxt)
        rewards[a] = reward
        child_terminal[a] = solved
    node.edge_rewards = rewards
    node.child_packed = child_packed
    node.child_terminal = child_terminal
    node.children = [None] * num
    node.expanded = True
    return value


def _rollout(packed: int, n: int, gates, mode: str, depth: int, discount: float, rng):
    total = 0.0
    factor = 1.0
    ident = packed_identity(n)
    s = packed
    for _ in range(depth):
        g = gates[int(rng.integers(len(gates)))]
        s, reward, solved = step_packed(s, n, g.control, g.target, mode)
        total += factor * reward
        factor *= discount
        if solved or s == ident:
            break
    return total


def _select_action(node: _Node, c: float) -> int:
    n_total = node.visit_counts.sum()
    q = np.where(node.visit_counts > 0, node.value_sums / np.maximum(node.visit_counts, 1), 0.0)
    u = c * node.priors * np.sqrt(n_total) / (1.0 + node.visit_counts)
    return int(np.argmax(q + u))


def _apply_root_noise(node: _Node, cfg: SearchConfig, rng) -> None:
    if cfg.root_noise_fraction <= 0:
        return
    noise = rng.dirichlet(np.full(len(node.priors), cfg.root_noise_alpha))
    node.priors = (1 - cfg.root_noise_fraction) * node.priors + cfg.root_noise_fraction * noise


def _resolved_mode(cfg: EpisodeConfig) -> str:
    if cfg.reward_mode.kind == MIXED:
        raise ValueError("resolve a mixed schedule to a phase before searching")
    return cfg.reward_mode.kind


def _run_simulations(root: _Node, net, gates, env_cfg, search_cfg, rng, train_mode):
    mode = _resolved_mode(env_cfg)
    gamma = env_cfg.discount
    if not root.expanded:
        _expand(root, net, gates, env_cfg, mode)
        if train_mode:
            _apply_root_noise(root, search_cfg, rng)
    for _ in range(search_cfg.num_simulations):
        node = root
        path: list[tuple[_Node, int]] = []
        while True:
            action = _select_action(node, search_cfg.exploration_c)
            path.append((node, action))
            child = node.children[action]
            if child is None:
                child = _Node(node.child_packed[action], bool(node.child_terminal[action]))
                node.children[action] = child
                node = child
                break
            node = child
            if node.terminal:
                break
            if not node.expanded:
                break
        if node.terminal:
            value = 0.0  # solve bonus is on the incoming edge
        elif search_cfg.rollout_depth > 0:
            value = _rollout(
                node.packed, env_cfg.n, gates, mode, search_cfg.rollout_depth, gamma, rng
            )
            if not node.expanded:
                _expand(node, net, gates, env_cfg, mode)
        else:
            value = _expand(node, net, gates, env_cfg, mode)
        g = value
        for parent, action in reversed(path):
            g = parent.edge_rewards[action] + gamma * g
            parent.visit_counts[action] += 1
            parent.value_sums[action] += g


def search(
    root_state: ParityMatrix,
    net,
    env_cfg: EpisodeConfig,
    search_cfg: SearchConfig | None = None,
    rng: np.random.Generator | None = None,
    train_mode: bool = False,
):
    """Run simulations from ``root_state``; returns (visit distribution
    over actions, averaged root value)."""
    if root_state.is_identity():
        raise ValueError("root is already the identity")
    search_cfg = search_cfg or SearchConfig()
    rng = rng if rng is not None else np.random.default_rng(0)
    gates = env_cfg.action_gates()
    root = _Node(pack_rows(root_state), False)
    _run_simulations(root, net, gates, env_cfg, search_cfg, rng, train_mode)
    visits = root.visit_counts.astype(np.float64)
    dist = visits / visits.sum()
    root_value = float(root.value_sums.sum() / max(visits.sum(), 1.0))
    return dist, root_value


@dataclass
class Trajectory:
    n: int
    start: ParityMatrix
    states: list[int] = field(default_factory=list)  # packed, per decision point
    actions: list[int] = field(default_factory=list)
    visit_dists: list[np.ndarray] = field(default_factory=list)
    rewards: list[float] = field(default_factory=list)
    solved: bool = False

    def __len__(self) -> int:
        return len(self.actions)

    def circuit(self, gates) -> Circuit:
        """Decomposition read off the reversed action trace (solved only)."""
        if not self.solved:
            raise ValueError("trajectory did not reach the identity")
        gs = tuple(
            CnotGate(gates[a].control, gates[a].target) for a in reversed(self.actions)
        )
        return Circuit(self.n, gs)


def play_episode(
    start: ParityMatrix,
    net,
    env_cfg: EpisodeConfig,
    search_cfg: SearchConfig | None = None,
    mode: str = "greedy",
    seed: int = 0,
) -> Trajectory:
    """Search-act loop from ``start`` until solved or the step cap.

    Modes: "train" samples by visit temperature with root noise,
    "sample" draws from visit counts without noise (used for repeated
    stochastic shots), "greedy" plays the most-visited action.
    """
    if mode not in ("train", "sample", "greedy"):
        raise ValueError(f"unknown play mode {mode!r}")
    search_cfg = search_cfg or SearchConfig()
    _resolved_mode(env_cfg)
    rng = np.random.default_rng(seed)
    gates = env_cfg.action_gates()
    temp_moves = (
        search_cfg.temperature_moves if search_cfg.temperature_moves is not None else env_cfg.n
    )
    traj = Trajectory(env_cfg.n, start)
    packed = pack_rows(start)
    ident = packed_identity(env_cfg.n)
    for step_index in range(env_cfg.step_cap):
        root = _Node(packed, False)
        _run_simulations(
            root, net, gates, env_cfg, search_cfg, rng, train_mode=(mode == "train")
        )
        visits = root.visit_counts.astype(np.float64)
        dist = visits / visits.sum()
        if mode == "train" and step_index < temp_moves:
            action = int(rng.choice(len(dist), p=dist))
        elif mode == "sample":
            action = int(rng.choice(len(dist), p=dist))
        else:
            action = int(np.argmax(visits))
        traj.states.append(packed)
        traj.visit_dists.append(dist)
        traj.actions.append(action)
        traj.rewards.append(float(root.edge_rewards[action]))
        packed = root.child_packed[action]
        if packed == ident:
            traj.solved = True
            break
    return traj


def greedy_circuit(traj: Trajectory, env_cfg: EpisodeConfig) -> Circuit:
    return traj.circuit(env_cfg.action_gates())
