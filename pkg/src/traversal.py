"""
Traversal - Playthrough sampling, terminal-history enumeration and reach/value tables
"""
import logging
from bisect import bisect_right
from dataclasses import dataclass
from itertools import accumulate
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from src.game_tree import CHANCE, GameTree, PlayerRef
from src.policies import Distribution, PolicyProfile, node_distributions

logger = logging.getLogger(__name__)

Trace = Tuple[Tuple[str, str], ...]


@dataclass(frozen=True)
class Playthrough:
    """One root-to-leaf walk"""

    steps: Tuple[Tuple[str, str], ...]
    terminal_id: str
    rewards: Tuple[float, ...]
    traces: Dict[PlayerRef, Trace]

    def trace(self, player: PlayerRef) -> Trace:
        return self.traces.get(player, ())


@dataclass(frozen=True)
class TerminalHistory:
    playthrough: Playthrough
    eta: float
    eta_player: float
    eta_others: float


@dataclass(frozen=True)
class InfoStateValues:
    """Reach probabilities and target-outcome values at one info state"""

    info_state: str
    eta: float
    eta_player: float
    eta_others: Optional[float]
    value: Optional[float]
    q: Dict[str, Optional[float]]

    @property
    def reachable(self) -> bool:
        return self.eta > 0.0


class PlaythroughSampler:
    """
    Walks the tree with pre-drawn uniforms

    Cumulative distributions are cached per node so repeated sampling only
    costs one bisection per step. Zero-probability actions are never chosen.
    """

    def __init__(self, tree: GameTree, profile: PolicyProfile):
        self.tree = tree
        self.logger = logging.getLogger(__name__)
        self._cumulative: Dict[str, List[float]] = {}
        self._last_positive: Dict[str, int] = {}
        for node_id, probs in node_distributions(tree, profile).items():
            self._cumulative[node_id] = list(accumulate(probs))
            self._last_positive[node_id] = max(i for i, p in enumerate(probs) if p > 0.0)

    def _choose(self, node_id: str, uniform: float) -> int:
        index = bisect_right(self._cumulative[node_id], uniform)
        return min(index, self._last_positive[node_id])

    def walk(self, uniforms: Sequence[float]) -> Playthrough:
        """Playthrough consuming one uniform per step"""
        tree = self.tree
        node = tree.nodes[tree.root_id]
        steps: List[Tuple[str, str]] = []
        traces: Dict[PlayerRef, List[Tuple[str, str]]] = {}
        depth = 0
        while not node.is_terminal:
            index = self._choose(node.node_id, uniforms[depth])
            action = node.actions[index]
            owner = CHANCE if node.is_chance else node.player
            steps.append((node.node_id, action))
            traces.setdefault(owner, []).append((tree.info_state_id(node), action))
            node = tree.nodes[node.children[index]]
            depth += 1
        return Playthrough(tuple(steps), node.node_id, node.rewards,
                           {p: tuple(t) for p, t in traces.items()})

    def walk_trace(self, uniforms: Sequence[float], player: PlayerRef, target: int) -> Tuple[Trace, float]:
        """Fast path: only the `player` trace and the `target` reward"""
        tree = self.tree
        node = tree.nodes[tree.root_id]
        trace: List[Tuple[str, str]] = []
        depth = 0
        while not node.is_terminal:
            index = self._choose(node.node_id, uniforms[depth])
            owner = CHANCE if node.is_chance else node.player
            if owner == player:
                trace.append((tree.info_state_id(node), node.actions[index]))
            node = tree.nodes[node.children[index]]
            depth += 1
        return tuple(trace), node.rewards[target]

    def sample(self, rng: np.random.Generator) -> Playthrough:
        return self.walk(rng.random(self.tree.height))


def sample_playthrough(tree: GameTree, profile: PolicyProfile, rng: np.random.Generator) -> Playthrough:
    """Sample one playthrough; deterministic given the generator state"""
    return PlaythroughSampler(tree, profile).sample(rng)


def enumerate_terminal_histories(tree: GameTree, profile: PolicyProfile,
                                 player: PlayerRef) -> List[TerminalHistory]:
    """
    Every root-to-leaf path with its realization probabilities

    Args:
        tree: Valid game
        profile: Policies of the non-chance players
        player: Player whose own probabilities are split out as eta_player

    Returns:
        TerminalHistory list in left-to-right leaf order
    """
    dists = node_distributions(tree, profile)
    # node id -> (eta, eta_player, eta_others); preorder visits parents first
    reach: Dict[str, Tuple[float, float, float]] = {tree.root_id: (1.0, 1.0, 1.0)}
    histories: List[TerminalHistory] = []
    for node_id in tree.preorder:
        node = tree.nodes[node_id]
        eta, eta_player, eta_others = reach[node_id]
        if node.is_terminal:
            steps = tree.root_path(node_id)
            traces: Dict[PlayerRef, List[Tuple[str, str]]] = {}
            for parent_id, action in steps:
                parent = tree.nodes[parent_id]
                owner = CHANCE if parent.is_chance else parent.player
                traces.setdefault(owner, []).append((tree.info_state_id(parent), action))
            playthrough = Playthrough(tuple(steps), node_id, node.rewards,
                                      {p: tuple(t) for p, t in traces.items()})
            histories.append(TerminalHistory(playthrough, eta, eta_player, eta_others))
            continue
        owner = CHANCE if node.is_chance else node.player
        for child, prob in zip(node.children, dists[node_id]):
            if owner == player:
                reach[child] = (eta * prob, eta_player * prob, eta_others)
            else:
                reach[child] = (eta * prob, eta_player, eta_others * prob)
    return histories


def subtree_values(tree: GameTree, dists: Mapping[str, Tuple[float, ...]], target: int) -> Dict[str, float]:
    """Expected target reward below every node"""
    values: Dict[str, float] = {}
    for node_id in reversed(tree.preorder):
        node = tree.nodes[node_id]
        if node.is_terminal:
            values[node_id] = node.rewards[target]
        else:
            values[node_id] = sum(p * values[c] for p, c in zip(dists[node_id], node.children))
    return values


def evaluate_moments(tree: GameTree, profile: PolicyProfile, target: int,
                     overrides: Optional[Mapping[str, Distribution]] = None) -> Tuple[float, float]:
    """(E[Y], E[Y^2]) of the target reward with selected info states pinned"""
    tree.check_player(target, allow_chance=False)
    dists = node_distributions(tree, profile, overrides)
    first: Dict[str, float] = {}
    second: Dict[str, float] = {}
    for node_id in reversed(tree.preorder):
        node = tree.nodes[node_id]
        if node.is_terminal:
            reward = node.rewards[target]
            first[node_id] = reward
            second[node_id] = reward * reward
        else:
            probs = dists[node_id]
            first[node_id] = sum(p * first[c] for p, c in zip(probs, node.children))
            second[node_id] = sum(p * second[c] for p, c in zip(probs, node.children))
    return first[tree.root_id], second[tree.root_id]


def reach_and_values(tree: GameTree, profile: PolicyProfile, player: PlayerRef,
                     target: int) -> Dict[str, InfoStateValues]:
    """
    Reach probabilities and q/v tables over the info states owned by `player`

    Args:
        tree: Valid game
        profile: Policies of the non-chance players
        player: Owner of the info states (CHANCE allowed)
        target: Player whose reward defines q and v

    Returns:
        Dict info state id -> InfoStateValues, in canonical order. Unreachable
        states have eta 0 and value/q set to None.
    """
    tree.check_player(player)
    tree.check_player(target, allow_chance=False)
    dists = node_distributions(tree, profile)
    values = subtree_values(tree, dists, target)

    reach = {tree.root_id: 1.0}
    own_reach = {tree.root_id: 1.0}
    for node_id in tree.preorder:
        node = tree.nodes[node_id]
        if node.is_terminal:
            continue
        owner = CHANCE if node.is_chance else node.player
        for child, prob in zip(node.children, dists[node_id]):
            reach[child] = reach[node_id] * prob
            own_reach[child] = own_reach[node_id] * prob if owner == player else own_reach[node_id]

    table: Dict[str, InfoStateValues] = {}
    for u in tree.player_info_states(player):
        eta = sum(reach[m] for m in u.members)
        # perfect recall makes the own-history product identical for every member
        eta_player = own_reach[u.members[0]]
        eta_others = eta / eta_player if eta_player > 0.0 else None
        if eta > 0.0:
            q: Dict[str, Optional[float]] = {}
            for index, action in enumerate(u.actions):
                total = 0.0
                for member in u.members:
                    node = tree.nodes[member]
                    total += reach[member] * values[node.child(action)]
                q[action] = total / eta
            probs = dists[u.members[0]]
            aligned = dict(zip(tree.nodes[u.members[0]].actions, probs))
            value = sum(q[a] * aligned[a] for a in u.actions)
        else:
            q = {a: None for a in u.actions}
            value = None
        table[u.info_state_id] = InfoStateValues(u.info_state_id, eta, eta_player, eta_others, value, q)
    logger.debug(f"Computed reach/value tables for {len(table)} info states of player {player}")
    return table
